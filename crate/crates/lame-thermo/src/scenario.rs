//! Scenario-driven experiment orchestration: TOML configuration with full
//! cross-field validation, deterministic execution, and artifact emission
//! (CSV at 17 significant digits, JSON reports, LTHS snapshots).
//!
//! Every run writes `resolved-config.toml` (the scenario with defaults
//! filled in), `summary.json` (headline metrics; bit-reproducible for a
//! fixed seed and thread count) and `MANIFEST.json`. Wall-clock goes to
//! `timing.json`, which is the only artifact excluded from the determinism
//! contract.

use crate::attractor::{
    absorbing_check, attractor_approximate, contraction_test, direction_state, geometric_sequence,
    EnsembleSpec, InitialCondition,
};
use crate::diagnostics::{
    analyze_trajectory, build_q, compute_constants, compute_constants_with_refit, ConstantLedger,
    DiagnosticRow, LedgerConfig,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec, ScalarField, State, VectorField};
use crate::integrator::{run, SchemeConfig};
use crate::model::{
    hull_net, lb2_norm_estimate, validate_assumptions, ForcingKind, ForcingSymbol, ModelSpec,
    Nonlinearity, TimeCoefficient,
};
use crate::operators::{
    estimate_operator_constants, OperatorConstants, PoissonSolverSpec, PowerIterationSpec,
    SolveMethod,
};
use crate::snapshot::write_state_to_path;
use crate::studies;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridBlock {
    pub lengths: Vec<f64>,
    pub interior_counts: Vec<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileKind {
    /// Normalized first eigenfunction of the box.
    #[default]
    Eigenmode,
    /// Gaussian bump centered in the box; `width` is relative to the
    /// shortest side.
    Gaussian { width: f64 },
    Uniform,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForcingBlock {
    /// Waveform; its parameters live at this level (`kind = "time-periodic"`,
    /// `period = 0.25`, ...).
    #[serde(flatten)]
    pub kind: ForcingKind,
    #[serde(default)]
    pub profile: ProfileKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_shifts")]
    pub shifts: Vec<f64>,
}

fn default_shifts() -> Vec<f64> {
    vec![0.0]
}

impl Default for ForcingBlock {
    fn default() -> Self {
        ForcingBlock {
            kind: ForcingKind::Static,
            profile: ProfileKind::default(),
            amplitude: 0.0,
            shifts: default_shifts(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBlock {
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_unit_coefficient")]
    pub alpha: TimeCoefficient,
    #[serde(default = "default_unit_coefficient")]
    pub kappa: TimeCoefficient,
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: Nonlinearity,
    #[serde(default)]
    pub forcing: ForcingBlock,
}

fn default_unit_coefficient() -> TimeCoefficient {
    TimeCoefficient::constant(1.0)
}

fn default_nonlinearity() -> Nonlinearity {
    Nonlinearity::Zero { eta: 1.0 }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeBlock {
    pub dt: f64,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_theta_tolerance")]
    pub theta_tolerance: f64,
    #[serde(default = "default_theta_method")]
    pub theta_method: SolveMethod,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
}

fn default_cfl_safety() -> f64 {
    0.5
}

fn default_theta_tolerance() -> f64 {
    1e-10
}

fn default_theta_method() -> SolveMethod {
    SolveMethod::DirectSine
}

fn default_record_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Run,
    Constants,
    Assumptions,
    Absorbing,
    Attractor,
    Contraction,
    Convergence,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialKind {
    #[default]
    Zero,
    /// First eigenmode in every field at the given amplitude.
    Eigenmode { amplitude: f64 },
    /// Smooth random fields scaled to the given phase-space norm.
    Random { hc_norm: f64, seed: u64 },
}


/// Flat experiment parameter bag; which fields matter depends on the kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentBlock {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub initial: InitialKind,
    #[serde(default = "default_fit_radius")]
    pub fit_radius: f64,
    #[serde(default = "default_true")]
    pub refit: bool,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default = "default_n_initial")]
    pub n_initial: usize,
    #[serde(default = "default_norm_factor")]
    pub norm_factor: f64,
    #[serde(default = "default_n_snapshots")]
    pub n_snapshots: usize,
    #[serde(default = "default_sequence_count")]
    pub sequence_count: usize,
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
}

fn default_t_end() -> f64 {
    1.0
}
fn default_fit_radius() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_sample_count() -> usize {
    2000
}
fn default_n_initial() -> usize {
    5
}
fn default_norm_factor() -> f64 {
    10.0
}
fn default_n_snapshots() -> usize {
    8
}
fn default_sequence_count() -> usize {
    5
}
fn default_perturbation() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputBlock {
    #[serde(default = "default_output_dir")]
    pub directory: PathBuf,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: default_output_dir(),
            snapshot_times: Vec::new(),
        }
    }
}

/// Raw scenario file, deserialized 1:1 from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridBlock,
    pub model: ModelBlock,
    pub scheme: SchemeBlock,
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub grid: Grid,
    pub model: ModelSpec,
    /// Base symbol with the profile amplitude applied, shift zero.
    pub forcing: ForcingSymbol,
    pub shifts: Vec<f64>,
    pub scheme: SchemeConfig,
    pub experiment: ExperimentBlock,
    pub output_dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    /// Resolved file for the config echo.
    pub file: ScenarioFile,
}

fn build_profile(kind: &ProfileKind, amplitude: f64, grid: &Grid) -> ScalarField {
    let base = match kind {
        ProfileKind::Eigenmode => GridSpec::first_eigenfunction(grid),
        ProfileKind::Uniform => ScalarField::from_fn(grid, |_| 1.0),
        ProfileKind::Gaussian { width } => {
            let min_len = grid
                .lengths()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let w = width * min_len;
            let center: Vec<f64> = grid.lengths().iter().map(|l| 0.5 * l).collect();
            ScalarField::from_fn(grid, |x| {
                let r2: f64 = x
                    .iter()
                    .zip(&center)
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum();
                (-0.5 * r2 / (w * w)).exp()
            })
        }
    };
    base.scaled(amplitude)
}

fn is_multiple_of(x: f64, dt: f64) -> bool {
    let k = (x / dt).round();
    (k * dt - x).abs() <= 1e-9 * x.abs().max(1.0)
}

/// Validate a raw scenario file into an executable scenario; all semantic
/// violations are gathered and reported together with their field paths.
pub fn validate_scenario(file: ScenarioFile) -> Result<Scenario> {
    let mut errors: Vec<String> = Vec::new();

    let grid = match GridSpec::new(&file.grid.lengths, &file.grid.interior_counts) {
        Ok(g) => Some(g),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    };

    let solver = PoissonSolverSpec {
        method: file.scheme.theta_method,
        tolerance: file.scheme.theta_tolerance,
        max_iterations: 10_000_000,
    };
    let scheme = SchemeConfig {
        dt: file.scheme.dt,
        cfl_safety: file.scheme.cfl_safety,
        theta_solver: solver,
        record_stride: file.scheme.record_stride,
    };

    let model = ModelSpec {
        mu: file.model.mu,
        lambda: file.model.lambda,
        alpha: file.model.alpha.clone(),
        kappa: file.model.kappa.clone(),
        nonlinearity: file.model.nonlinearity.clone(),
    };

    if let Some(grid) = &grid {
        if let Err(e) = model.validate(grid) {
            errors.push(e.to_string());
        }
        if let Err(e) = scheme.validate(grid, &model) {
            errors.push(e.to_string());
        }
        if let Err(e) = scheme.theta_solver.validate(grid) {
            errors.push(e.to_string());
        }
    }

    for (k, &s) in file.model.forcing.shifts.iter().enumerate() {
        if s < 0.0 {
            errors.push(format!("invalid model.forcing.shifts[{k}]: must be nonnegative"));
        } else if !is_multiple_of(s, file.scheme.dt) {
            errors.push(format!(
                "invalid model.forcing.shifts[{k}]: {s} is not a multiple of scheme.dt"
            ));
        }
    }

    let ex = &file.experiment;
    if ex.t_end < ex.tau {
        errors.push("invalid experiment.t_end: must be >= experiment.tau".into());
    } else if !is_multiple_of(ex.t_end - ex.tau, file.scheme.dt) {
        errors.push("invalid experiment.t_end: span must be a multiple of scheme.dt".into());
    }
    for (k, &t) in file.output.snapshot_times.iter().enumerate() {
        if t < ex.tau || t > ex.t_end {
            errors.push(format!(
                "invalid output.snapshot_times[{k}]: {t} outside [tau, t_end]"
            ));
        } else if !is_multiple_of(t - ex.tau, file.scheme.dt) {
            errors.push(format!(
                "invalid output.snapshot_times[{k}]: {t} is not dt-aligned"
            ));
        }
    }
    if matches!(ex.kind, ExperimentKind::Attractor | ExperimentKind::Absorbing) {
        // dyadic snapshot times must stay on the dt grid
        let span = ex.t_end - ex.tau;
        for j in 0..ex.n_snapshots {
            let t = span / 2f64.powi(j as i32);
            if !is_multiple_of(t, file.scheme.dt) {
                errors.push(format!(
                    "invalid experiment.n_snapshots: dyadic time {t} is not dt-aligned (level {j})"
                ));
                break;
            }
        }
    }
    if ex.kind == ExperimentKind::Assumptions && ex.sample_count < 1000 {
        errors.push("invalid experiment.sample_count: need at least 1000".into());
    }
    if ex.kind == ExperimentKind::Contraction && ex.sequence_count < 2 {
        errors.push("invalid experiment.sequence_count: need at least 2".into());
    }

    let Some(grid) = grid else {
        return Err(Error::ScenarioRejected(errors));
    };
    if !errors.is_empty() {
        return Err(Error::ScenarioRejected(errors));
    }

    let profile = build_profile(&file.model.forcing.profile, file.model.forcing.amplitude, &grid);
    let forcing = ForcingSymbol::new(file.model.forcing.kind.clone(), profile);

    Ok(Scenario {
        seed: file.seed,
        grid,
        model,
        forcing,
        shifts: file.model.forcing.shifts.clone(),
        scheme,
        experiment: file.experiment.clone(),
        output_dir: file.output.directory.clone(),
        snapshot_times: file.output.snapshot_times.clone(),
        file,
    })
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    validate_scenario(file)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario_str(&text)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExecutionSummary {
    pub experiment: String,
    pub seed: u64,
    pub versions: Versions,
    pub metrics: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub crate_version: String,
    pub snapshot_format: u32,
}

#[derive(Debug, Serialize)]
struct Manifest {
    complete: bool,
    artifacts: Vec<String>,
    error: Option<String>,
}

struct ArtifactSink {
    dir: PathBuf,
    written: Vec<String>,
}

impl ArtifactSink {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactSink {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::ConfigParse(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

fn trajectory_csv(rows: &[DiagnosticRow]) -> String {
    let mut out = String::from(
        "time,E,E_c,F1,F2,F3,L,grad_theta_sq,g_norm_sq,hc_norm_sq,margin_3_1,margin_3_3,margin_3_8,margin_3_18,margin_3_28,envelope_rhs\n",
    );
    for r in rows {
        let cols = [
            r.t,
            r.e,
            r.e_c,
            r.f1,
            r.f2,
            r.f3,
            r.lyapunov,
            r.grad_theta_sq,
            r.g_norm_sq,
            r.hc_norm_sq,
            r.margin_3_1,
            r.margin_3_3,
            r.margin_3_8,
            r.margin_3_18,
            r.margin_3_28,
            r.envelope_rhs,
        ];
        let line: Vec<String> = cols.iter().map(|&c| fmt_full(c)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn margins_csv(rows: &[DiagnosticRow]) -> String {
    let mut out = String::from("time,inequality,lhs,rhs,margin\n");
    for r in rows {
        let mut push = |id: &str, lhs: f64, margin: f64| {
            if margin.is_nan() {
                return;
            }
            let rhs = lhs + margin;
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_full(r.t),
                id,
                fmt_full(lhs),
                fmt_full(rhs),
                fmt_full(margin)
            ));
        };
        push("3.1", r.de_dt, r.margin_3_1);
        push("3.3", r.df1_dt, r.margin_3_3);
        push("3.8", r.df2_dt, r.margin_3_8);
        push("3.18", r.df3_dt, r.margin_3_18);
        push("3.28", r.dl_dt, r.margin_3_28);
        push("3.37", r.e, r.envelope_rhs - r.e);
        push("2.15", r.e - r.lower_bound_margin, r.lower_bound_margin);
    }
    out
}

/// Ledger artifacts: the structured constants plus the flat entry list.
#[derive(Serialize)]
struct LedgerDocument<'a> {
    ledger: &'a ConstantLedger,
    entries: Vec<crate::diagnostics::LedgerEntry>,
    identity_residuals: [f64; 3],
    weight_system_margins: [f64; 4],
    operator_constants: &'a OperatorConstants,
}

fn build_ledger(scenario: &Scenario) -> Result<(ConstantLedger, OperatorConstants)> {
    let power = PowerIterationSpec::default();
    let opc = estimate_operator_constants(&scenario.grid, &power)?;
    let q = build_q(&scenario.grid);
    let lb2 = if scenario.forcing.is_zero() {
        0.0
    } else {
        lb2_norm_estimate(&scenario.forcing, 4.0, 5e-3, &scenario.grid)?
    };
    let cfg = LedgerConfig {
        fit_radius: scenario.experiment.fit_radius,
        lb2_g0: lb2,
        lambda1_override: None,
        fit_samples: 48,
    };
    let ledger = if scenario.experiment.refit {
        compute_constants_with_refit(&scenario.model, &opc, &q, &scenario.grid, &cfg)?
    } else {
        compute_constants(&scenario.model, &opc, &q, &scenario.grid, &cfg)?
    };
    Ok((ledger, opc))
}

fn build_initial(scenario: &Scenario) -> Result<State> {
    let grid = &scenario.grid;
    match &scenario.experiment.initial {
        InitialKind::Zero => Ok(State::zeros(grid, scenario.experiment.tau)),
        InitialKind::Eigenmode { amplitude } => {
            let e1 = GridSpec::first_eigenfunction(grid);
            let mut s = State::zeros(grid, scenario.experiment.tau);
            s.u = VectorField::from_components(
                (0..grid.dim()).map(|_| e1.scaled(*amplitude)).collect(),
            )?;
            s.theta = e1.scaled(*amplitude);
            Ok(s)
        }
        InitialKind::Random { hc_norm, seed } => {
            let ens = EnsembleSpec {
                initials: vec![InitialCondition { seed: *seed, hc_norm: *hc_norm }],
                symbols: vec![scenario.forcing.clone()],
                snapshot_times: vec![],
                seed: scenario.seed,
            };
            let mut s = ens.build_state(grid, &scenario.model, 0)?;
            s.t = scenario.experiment.tau;
            Ok(s)
        }
    }
}

fn dyadic_times(tau: f64, t_end: f64, levels: usize) -> Vec<f64> {
    let span = t_end - tau;
    let mut times: Vec<f64> = (0..levels).map(|j| tau + span / 2f64.powi(j as i32)).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    times.dedup();
    times
}

fn experiment_name(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Run => "run",
        ExperimentKind::Constants => "constants",
        ExperimentKind::Assumptions => "assumptions",
        ExperimentKind::Absorbing => "absorbing",
        ExperimentKind::Attractor => "attractor",
        ExperimentKind::Contraction => "contraction",
        ExperimentKind::Convergence => "convergence",
    }
}

fn execute_inner(scenario: &Scenario, sink: &mut ArtifactSink) -> Result<serde_json::Value> {
    match scenario.experiment.kind {
        ExperimentKind::Run => {
            let (ledger, opc) = build_ledger(scenario)?;
            let q = build_q(&scenario.grid);
            let initial = build_initial(scenario)?;
            let record = run(
                &initial,
                scenario.experiment.tau,
                scenario.experiment.t_end,
                &scenario.forcing,
                &scenario.model,
                &scenario.scheme,
                &scenario.snapshot_times,
            )?;
            let report = analyze_trajectory(
                &record,
                &ledger,
                &scenario.model,
                &scenario.forcing,
                &q,
                &scenario.scheme.theta_solver,
            )?;
            sink.write_text("trajectory.csv", &trajectory_csv(&report.rows))?;
            sink.write_text("margins.csv", &margins_csv(&report.rows))?;
            sink.write_json(
                "ledger.json",
                &LedgerDocument {
                    ledger: &ledger,
                    entries: ledger.entries(),
                    identity_residuals: ledger.identity_residuals(),
                    weight_system_margins: ledger.weight_system_margins(),
                    operator_constants: &opc,
                },
            )?;
            if !record.snapshots.is_empty() {
                std::fs::create_dir_all(sink.dir.join("snapshots"))?;
                for (i, s) in record.snapshots.iter().enumerate() {
                    let name = format!("snapshots/snap_{i:04}.lths");
                    let path = sink.path(&name);
                    write_state_to_path(&path, s)?;
                }
            }
            let last = report.rows.last().expect("at least one row");
            Ok(serde_json::json!({
                "rows": report.rows.len(),
                "final_time": last.t,
                "final_energy": last.e,
                "final_hc_norm_sq": last.hc_norm_sq,
                "inequalities": report.inequalities,
            }))
        }
        ExperimentKind::Constants => {
            let (ledger, opc) = build_ledger(scenario)?;
            sink.write_json(
                "ledger.json",
                &LedgerDocument {
                    ledger: &ledger,
                    entries: ledger.entries(),
                    identity_residuals: ledger.identity_residuals(),
                    weight_system_margins: ledger.weight_system_margins(),
                    operator_constants: &opc,
                },
            )?;
            Ok(serde_json::json!({
                "P": ledger.p,
                "delta": ledger.delta,
                "xi": ledger.xi,
                "xi1": ledger.xi1,
                "rho0": ledger.rho0,
                "beta0": ledger.beta0,
                "N0": ledger.n0,
            }))
        }
        ExperimentKind::Assumptions => {
            let report = validate_assumptions(
                &scenario.model,
                &scenario.grid,
                scenario.experiment.sample_count,
            )?;
            sink.write_json("assumptions.json", &report)?;
            Ok(serde_json::json!({
                "pass": report.pass,
                "fitted_growth_constant": report.fitted_growth_constant,
                "checks": report.checks.len(),
            }))
        }
        ExperimentKind::Absorbing => {
            let (ledger, _) = build_ledger(scenario)?;
            let symbols = hull_net(&scenario.forcing, &scenario.shifts)?;
            let initials: Vec<InitialCondition> = (0..scenario.experiment.n_initial)
                .map(|i| InitialCondition {
                    seed: i as u64,
                    hc_norm: scenario.experiment.norm_factor * ledger.rho0,
                })
                .collect();
            let ensemble = EnsembleSpec {
                initials,
                symbols,
                snapshot_times: vec![],
                seed: scenario.seed,
            };
            let report = absorbing_check(
                &ensemble,
                &ledger,
                &scenario.model,
                &scenario.scheme,
                &scenario.grid,
                scenario.experiment.t_end,
            )?;
            sink.write_json("absorbing.json", &report)?;
            Ok(serde_json::json!({
                "rho0": report.rho0,
                "all_absorbed": report.all_absorbed,
                "no_exits": report.no_exits,
                "members": report.members.len(),
            }))
        }
        ExperimentKind::Attractor => {
            let symbols = hull_net(&scenario.forcing, &scenario.shifts)?;
            let base_norm = match &scenario.experiment.initial {
                InitialKind::Random { hc_norm, .. } => *hc_norm,
                _ => 1.0,
            };
            let initials: Vec<InitialCondition> = (0..scenario.experiment.n_initial)
                .map(|i| InitialCondition {
                    seed: i as u64,
                    hc_norm: base_norm * (1.0 + i as f64),
                })
                .collect();
            let ensemble = EnsembleSpec {
                initials,
                symbols,
                snapshot_times: dyadic_times(
                    scenario.experiment.tau,
                    scenario.experiment.t_end,
                    scenario.experiment.n_snapshots,
                ),
                seed: scenario.seed,
            };
            let approx = attractor_approximate(
                &ensemble,
                scenario.experiment.t_end,
                &scenario.model,
                &scenario.scheme,
                &scenario.grid,
            )?;
            let mut csv = String::from("time,decay\n");
            for (t, d) in &approx.decay_series {
                csv.push_str(&format!("{},{}\n", fmt_full(*t), fmt_full(*d)));
            }
            sink.write_text("decay.csv", &csv)?;
            std::fs::create_dir_all(sink.dir.join("cloud"))?;
            let mut index = Vec::new();
            for (i, s) in approx.a_approx.states.iter().enumerate() {
                let name = format!("cloud/point_{i:04}.lths");
                let path = sink.path(&name);
                write_state_to_path(&path, s)?;
                let (ic, sy) = ensemble.member_indices(i);
                index.push(serde_json::json!({
                    "file": name,
                    "initial_index": ic,
                    "symbol_index": sy,
                }));
            }
            sink.write_json(
                "cloud/index.json",
                &serde_json::json!({
                    "time": approx.a_approx.time,
                    "points": index,
                    "failures": approx.failures,
                }),
            )?;
            let nonincreasing = approx
                .decay_series
                .windows(2)
                .all(|w| w[1].1 <= w[0].1 * 1.05 + 1e-15);
            Ok(serde_json::json!({
                "members": ensemble.member_count(),
                "decay_series": approx.decay_series,
                "nonincreasing_with_jitter": nonincreasing,
                "final_decay": approx.decay_series.last().map(|p| p.1),
            }))
        }
        ExperimentKind::Contraction => {
            let base = build_initial(scenario)?;
            let direction = direction_state(&scenario.grid, scenario.seed.wrapping_add(17));
            let mut direction = direction;
            direction.scale(scenario.experiment.perturbation);
            let sequence = geometric_sequence(&base, &direction, scenario.experiment.sequence_count);
            let symbols = vec![scenario.forcing.clone(); sequence.len()];
            let report = contraction_test(
                &sequence,
                &symbols,
                scenario.experiment.t_end,
                &scenario.model,
                &scenario.scheme,
            )?;
            let mut csv = String::from("i,j,e_z_final,phi_t,c_m,inequality_margin\n");
            for p in &report.pairs {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    p.i,
                    p.j,
                    fmt_full(p.e_z_final),
                    fmt_full(p.phi_t),
                    fmt_full(p.c_m),
                    fmt_full(p.inequality_margin)
                ));
            }
            sink.write_text("contraction.csv", &csv)?;
            sink.write_json("contraction.json", &report)?;
            // successive ratios along the geometric ladder
            let mut ratios = Vec::new();
            for n in 0..sequence.len().saturating_sub(2) {
                let a = report.pair(n, n + 1).map(|p| p.phi_t).unwrap_or(f64::NAN);
                let b = report.pair(n + 1, n + 2).map(|p| p.phi_t).unwrap_or(f64::NAN);
                ratios.push(a / b);
            }
            Ok(serde_json::json!({
                "pairs": report.pairs.len(),
                "phi_ratios": ratios,
                "min_inequality_margin": report
                    .pairs
                    .iter()
                    .map(|p| p.inequality_margin)
                    .fold(f64::INFINITY, f64::min),
            }))
        }
        ExperimentKind::Convergence => {
            let solver = PoissonSolverSpec::default();
            let ns = [31usize, 63, 127];
            let poisson = studies::poisson_mms_orders(&ns, &solver)?;
            let divgrad = studies::divgrad_defect_orders(&ns)?;
            let helm = studies::helmholtz_orders(&ns, &solver)?;
            let integ = studies::integrator_orders(31, &[1e-2, 5e-3, 2.5e-3])?;
            let energy = studies::energy_identity_orders(&[
                (63, 1.0 / 512.0),
                (127, 1.0 / 1024.0),
                (255, 1.0 / 2048.0),
            ])?;
            let doc = serde_json::json!({
                "poisson_mms": poisson,
                "divgrad_defect": divgrad,
                "helmholtz_div_residual": helm.div_residual,
                "helmholtz_recovery": helm.recovery,
                "helmholtz_orthogonality": helm.cross,
                "helmholtz_max_curl": helm.max_curl,
                "integrator_wave": integ.wave,
                "integrator_heat": integ.heat,
                "integrator_forced_heat": integ.forced_heat,
                "energy_identity": energy,
            });
            sink.write_json("orders.json", &doc)?;
            Ok(serde_json::json!({
                "poisson_min_order": poisson.min_order(),
                "divgrad_min_order": divgrad.min_order(),
                "helmholtz_div_min_order": helm.div_residual.min_order(),
                "wave_min_order": integ.wave.min_order(),
                "heat_min_order": integ.heat.min_order(),
                "forced_heat_min_order": integ.forced_heat.min_order(),
                "energy_identity_min_order": energy.min_order(),
                "max_curl": helm.max_curl,
            }))
        }
    }
}

/// Execute a validated scenario. `out_override` replaces the configured
/// output directory; `threads` sizes a local worker pool (0 = library
/// default).
pub fn execute(
    scenario: &Scenario,
    out_override: Option<&Path>,
    threads: usize,
) -> Result<ExecutionSummary> {
    let out_dir = out_override.unwrap_or(&scenario.output_dir).to_path_buf();
    let mut sink = ArtifactSink::new(&out_dir)?;

    // config echo before any computation
    let resolved = toml::to_string_pretty(&scenario.file).map_err(|e| Error::ConfigParse(e.to_string()))?;
    sink.write_text("resolved-config.toml", &resolved)?;

    let started = std::time::Instant::now();
    let outcome = if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::validation("threads", e.to_string()))?;
        pool.install(|| execute_inner(scenario, &mut sink))
    } else {
        execute_inner(scenario, &mut sink)
    };
    let elapsed = started.elapsed().as_secs_f64();

    match outcome {
        Ok(metrics) => {
            let summary = ExecutionSummary {
                experiment: experiment_name(scenario.experiment.kind).to_string(),
                seed: scenario.seed,
                versions: Versions {
                    crate_version: env!("CARGO_PKG_VERSION").to_string(),
                    snapshot_format: crate::snapshot::VERSION,
                },
                metrics,
            };
            sink.write_json("summary.json", &summary)?;
            // wall clock lives outside the determinism contract
            let timing = serde_json::json!({ "wall_clock_seconds": elapsed });
            let timing_text =
                serde_json::to_string_pretty(&timing).map_err(|e| Error::ConfigParse(e.to_string()))?;
            std::fs::write(out_dir.join("timing.json"), timing_text + "\n")?;
            let manifest = Manifest {
                complete: true,
                artifacts: sink.written.clone(),
                error: None,
            };
            let t = serde_json::to_string_pretty(&manifest).map_err(|e| Error::ConfigParse(e.to_string()))?;
            std::fs::write(out_dir.join("MANIFEST.json"), t + "\n")?;
            Ok(summary)
        }
        Err(e) => {
            let manifest = Manifest {
                complete: false,
                artifacts: sink.written.clone(),
                error: Some(e.to_string()),
            };
            if let Ok(t) = serde_json::to_string_pretty(&manifest) {
                let _ = std::fs::write(out_dir.join("MANIFEST.json"), t + "\n");
            }
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [grid]
        lengths = [1.0]
        interior_counts = [31]

        [model]
        mu = 1.0

        [scheme]
        dt = 0.00390625

        [experiment]
        kind = "run"
        t_end = 0.125
    "#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let sc = parse_scenario_str(MINIMAL).unwrap();
        assert_eq!(sc.scheme.record_stride, 1);
        assert!((sc.file.scheme.cfl_safety - 0.5).abs() < 1e-15);
        assert!(matches!(sc.experiment.initial, InitialKind::Zero));
        assert_eq!(sc.shifts, vec![0.0]);
        assert!(sc.forcing.is_zero());
    }

    #[test]
    fn cfl_violation_names_the_field() {
        let text = MINIMAL.replace("dt = 0.00390625", "dt = 0.5");
        let err = parse_scenario_str(&text).unwrap_err();
        assert!(err.to_string().contains("scheme.dt"), "{err}");
    }

    #[test]
    fn misaligned_shift_names_the_field() {
        let text = format!(
            "{MINIMAL}\n[model.forcing]\nkind = \"static\"\namplitude = 0.1\nshifts = [0.001]\n"
        );
        // shifts entry is not a dt multiple
        let err = parse_scenario_str(&text).unwrap_err();
        assert!(err.to_string().contains("model.forcing.shifts[0]"), "{err}");
    }

    #[test]
    fn resolved_config_round_trips() {
        let sc = parse_scenario_str(MINIMAL).unwrap();
        let echoed = toml::to_string_pretty(&sc.file).unwrap();
        let back = parse_scenario_str(&echoed).unwrap();
        assert_eq!(back.scheme.dt, sc.scheme.dt);
        assert_eq!(back.experiment.kind, sc.experiment.kind);
        assert_eq!(back.seed, sc.seed);
        assert_eq!(back.grid.interior_counts(), sc.grid.interior_counts());
    }
}
