//! Ensemble experiments: uniform absorbing-set verification, snapshot clouds
//! with the Hausdorff semidistance, attractor approximation by final-time
//! unions, and the contraction-functional test.
//!
//! Ensemble members run fully in parallel (no shared mutable state); results
//! are collected in member order before any reduction, so outputs are
//! independent of the worker count.

use crate::diagnostics::{energy, ConstantLedger};
use crate::error::{Error, Result};
use crate::grid::{random, Grid, State, VectorField};
use crate::integrator::{difference_run, run, DifferenceRecord, SchemeConfig};
use crate::model::{ForcingSymbol, ModelSpec};
use crate::operators::hc_norm_sq;
use rayon::prelude::*;
use serde::Serialize;

/// Generator of one random initial state with a prescribed phase-space norm.
#[derive(Debug, Clone, Serialize)]
pub struct InitialCondition {
    pub seed: u64,
    pub hc_norm: f64,
}

/// Ensemble layout: initial-condition generators crossed with a symbol net.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub initials: Vec<InitialCondition>,
    pub symbols: Vec<ForcingSymbol>,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
}

impl EnsembleSpec {
    /// Materialize one initial state: smooth random fields scaled to the
    /// prescribed Hc norm, with the velocity populated as well.
    pub fn build_state(&self, grid: &Grid, model: &ModelSpec, index: usize) -> Result<State> {
        let ic = &self.initials[index];
        let base = self.seed.wrapping_mul(0x9E37_79B9).wrapping_add(ic.seed);
        let mut s = State::zeros(grid, 0.0);
        s.u = random::smooth_vector(grid, base, 0.4);
        s.v = random::smooth_vector(grid, base.wrapping_add(1), 0.4);
        s.theta = random::smooth_scalar(grid, base.wrapping_add(2), 0.4);
        let norm = hc_norm_sq(&s, model.mu, model.lambda)?.sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateConstant {
                name: format!("initial state {index}"),
                value: 0.0,
                constraint: "random draw produced the zero state".into(),
            });
        }
        s.scale(ic.hc_norm / norm);
        Ok(s)
    }

    pub fn member_count(&self) -> usize {
        self.initials.len() * self.symbols.len()
    }

    /// (initial index, symbol index) of a flat member index; symbols vary
    /// fastest.
    pub fn member_indices(&self, member: usize) -> (usize, usize) {
        (member / self.symbols.len(), member % self.symbols.len())
    }
}

/// A set of states frozen at one time instant.
#[derive(Debug, Clone)]
pub struct SnapshotCloud {
    pub time: f64,
    pub states: Vec<State>,
}

/// Hausdorff semidistance `sup_{a in A} min_{b in B} ||a - b||_Hc`.
pub fn hausdorff_semidist(a: &SnapshotCloud, b: &SnapshotCloud, mu: f64, lambda: f64) -> Result<f64> {
    if a.states.is_empty() || b.states.is_empty() {
        return Err(Error::validation("cloud", "clouds must be nonempty"));
    }
    let mut sup = 0.0f64;
    for p in &a.states {
        let mut best = f64::INFINITY;
        for r in &b.states {
            let d = hc_norm_sq(&p.sub(r)?, mu, lambda)?;
            if d < best {
                best = d;
            }
        }
        sup = sup.max(best);
    }
    Ok(sup.sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorbingMember {
    pub initial_index: usize,
    pub symbol_index: usize,
    pub initial_hc_norm: f64,
    pub initial_energy: f64,
    /// First record time with `||U||^2 <= rho0^2`.
    pub entry_time: Option<f64>,
    pub predicted_entry: f64,
    pub within_twice_prediction: bool,
    /// Record times after entry with `||U|| > rho0 (1 + 1e-2)`.
    pub exit_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorbingReport {
    pub rho0: f64,
    pub members: Vec<AbsorbingMember>,
    pub all_absorbed: bool,
    pub no_exits: bool,
}

/// Gronwall-envelope prediction of the entry time into the absorbing ball.
fn predicted_entry(ledger: &ConstantLedger, e_tau: f64, tau: f64) -> f64 {
    let gap = ledger.c2 / ledger.c1;
    let absorb_level = (2.0 * gap - 1.0) * ledger.e_infinity;
    if absorb_level <= 0.0 {
        return f64::INFINITY;
    }
    let ratio = gap * e_tau / absorb_level;
    if ratio <= 1.0 {
        tau
    } else {
        tau + ratio.ln() / ledger.xi1
    }
}

/// Run every (initial, symbol) pair until `t_max` and verify entry into and
/// containment in the absorbing ball `||U||^2 <= rho0^2`.
pub fn absorbing_check(
    ensemble: &EnsembleSpec,
    ledger: &ConstantLedger,
    model: &ModelSpec,
    scheme: &SchemeConfig,
    grid: &Grid,
    t_max: f64,
) -> Result<AbsorbingReport> {
    if ledger.rho0.is_nan() || ledger.rho0 <= 0.0 {
        return Err(Error::DegenerateConstant {
            name: "rho0".into(),
            value: ledger.rho0,
            constraint: "absorbing radius must be positive (forced system)".into(),
        });
    }
    let rho0_sq = ledger.rho0 * ledger.rho0;
    let exit_sq = rho0_sq * (1.0 + 1e-2) * (1.0 + 1e-2);

    let members: Vec<Result<AbsorbingMember>> = (0..ensemble.member_count())
        .into_par_iter()
        .map(|m| {
            let (ic, sy) = ensemble.member_indices(m);
            let state = ensemble.build_state(grid, model, ic)?;
            let symbol = &ensemble.symbols[sy];
            let initial_hc = hc_norm_sq(&state, model.mu, model.lambda)?.sqrt();
            let e_tau = energy(&state, model)?.total;
            let rec = run(&state, 0.0, t_max, symbol, model, scheme, &[])?;
            let mut entry_time = None;
            let mut exits = 0usize;
            for s in &rec.states {
                let hc = hc_norm_sq(s, model.mu, model.lambda)?;
                match entry_time {
                    None => {
                        if hc <= rho0_sq {
                            entry_time = Some(s.t);
                        }
                    }
                    Some(_) => {
                        if hc > exit_sq {
                            exits += 1;
                        }
                    }
                }
            }
            let pred = predicted_entry(ledger, e_tau, 0.0);
            Ok(AbsorbingMember {
                initial_index: ic,
                symbol_index: sy,
                initial_hc_norm: initial_hc,
                initial_energy: e_tau,
                within_twice_prediction: match entry_time {
                    Some(t) => t <= 2.0 * pred.max(scheme.dt),
                    None => false,
                },
                entry_time,
                predicted_entry: pred,
                exit_violations: exits,
            })
        })
        .collect();

    let members = members.into_iter().collect::<Result<Vec<_>>>()?;
    let all_absorbed = members.iter().all(|m| m.entry_time.is_some());
    let no_exits = members.iter().all(|m| m.exit_violations == 0);
    Ok(AbsorbingReport {
        rho0: ledger.rho0,
        members,
        all_absorbed,
        no_exits,
    })
}

#[derive(Debug, Clone)]
pub struct AttractorApproximation {
    /// Union of final-time snapshots over every (initial, symbol) member.
    pub a_approx: SnapshotCloud,
    /// `(time, sup over symbols of dist(cloud_sigma(time), a_approx))`.
    pub decay_series: Vec<(f64, f64)>,
    /// Flat member errors, if any (those members are excluded).
    pub failures: Vec<(usize, String)>,
}

/// Evolve the ensemble to `t_max`, collect snapshot clouds at the requested
/// times, and measure the decay of the per-symbol clouds toward the
/// final-time union.
pub fn attractor_approximate(
    ensemble: &EnsembleSpec,
    t_max: f64,
    model: &ModelSpec,
    scheme: &SchemeConfig,
    grid: &Grid,
) -> Result<AttractorApproximation> {
    let mut snapshot_times = ensemble.snapshot_times.clone();
    snapshot_times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    if snapshot_times.last().map(|&t| (t - t_max).abs() > 1e-12) != Some(false) {
        snapshot_times.push(t_max);
    }

    let results: Vec<(usize, std::result::Result<Vec<State>, String>)> = (0..ensemble
        .member_count())
        .into_par_iter()
        .map(|m| {
            let (ic, sy) = ensemble.member_indices(m);
            let outcome = (|| -> Result<Vec<State>> {
                let state = ensemble.build_state(grid, model, ic)?;
                let rec = run(
                    &state,
                    0.0,
                    t_max,
                    &ensemble.symbols[sy],
                    model,
                    scheme,
                    &snapshot_times,
                )?;
                Ok(rec.snapshots)
            })();
            (m, outcome.map_err(|e| e.to_string()))
        })
        .collect();

    let mut failures = Vec::new();
    let mut member_snaps: Vec<Option<Vec<State>>> = vec![None; ensemble.member_count()];
    for (m, res) in results {
        match res {
            Ok(snaps) => member_snaps[m] = Some(snaps),
            Err(e) => failures.push((m, e)),
        }
    }
    if member_snaps.iter().all(|s| s.is_none()) {
        return Err(Error::validation("ensemble", "every member failed"));
    }

    let final_states: Vec<State> = member_snaps
        .iter()
        .flatten()
        .map(|snaps| snaps.last().expect("snapshots include t_max").clone())
        .collect();
    let a_approx = SnapshotCloud {
        time: t_max,
        states: final_states,
    };

    let mut decay_series = Vec::with_capacity(snapshot_times.len());
    for (ti, &t) in snapshot_times.iter().enumerate() {
        let mut sup = 0.0f64;
        for sy in 0..ensemble.symbols.len() {
            let states: Vec<State> = (0..ensemble.initials.len())
                .filter_map(|ic| {
                    member_snaps[ic * ensemble.symbols.len() + sy]
                        .as_ref()
                        .map(|snaps| snaps[ti].clone())
                })
                .collect();
            if states.is_empty() {
                continue;
            }
            let cloud = SnapshotCloud { time: t, states };
            sup = sup.max(hausdorff_semidist(&cloud, &a_approx, model.mu, model.lambda)?);
        }
        decay_series.push((t, sup));
    }

    Ok(AttractorApproximation {
        a_approx,
        decay_series,
        failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionPair {
    pub i: usize,
    pub j: usize,
    pub e_z_final: f64,
    pub phi_t: f64,
    pub c_m: f64,
    /// `(C_M + phi_T)/(T - tau) - E_Z(T)`; nonnegative up to time
    /// discretization.
    pub inequality_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub pairs: Vec<ContractionPair>,
    pub horizon: f64,
}

impl ContractionReport {
    pub fn pair(&self, i: usize, j: usize) -> Option<&ContractionPair> {
        self.pairs.iter().find(|p| (p.i, p.j) == (i, j) || (p.i, p.j) == (j, i))
    }
}

/// Pairwise difference runs over a designed sequence of initial states and
/// symbols; reports the contraction functional and the averaged-energy
/// inequality for every pair.
pub fn contraction_test(
    sequence: &[State],
    g_sequence: &[ForcingSymbol],
    t_horizon: f64,
    model: &ModelSpec,
    scheme: &SchemeConfig,
) -> Result<ContractionReport> {
    if sequence.len() != g_sequence.len() {
        return Err(Error::validation(
            "contraction.sequence",
            "states and symbols must pair up",
        ));
    }
    if sequence.len() < 2 {
        return Err(Error::validation("contraction.sequence", "need at least two members"));
    }
    let mut index_pairs = Vec::new();
    for i in 0..sequence.len() {
        for j in (i + 1)..sequence.len() {
            index_pairs.push((i, j));
        }
    }
    let pairs: Vec<Result<ContractionPair>> = index_pairs
        .par_iter()
        .map(|&(i, j)| {
            let rec: DifferenceRecord = difference_run(
                &sequence[i],
                &sequence[j],
                0.0,
                t_horizon,
                &g_sequence[i],
                &g_sequence[j],
                model,
                scheme,
            )?;
            let span = rec.t_end - rec.tau;
            Ok(ContractionPair {
                i,
                j,
                e_z_final: rec.e_z_final,
                phi_t: rec.phi_t,
                c_m: rec.c_m,
                inequality_margin: (rec.c_m + rec.phi_t) / span - rec.e_z_final,
            })
        })
        .collect();
    Ok(ContractionReport {
        pairs: pairs.into_iter().collect::<Result<Vec<_>>>()?,
        horizon: t_horizon,
    })
}

/// Geometric perturbation family `U_n = U + 2^-n W` used by the contraction
/// acceptance test.
pub fn geometric_sequence(base: &State, direction: &State, count: usize) -> Vec<State> {
    (0..count)
        .map(|n| {
            let mut s = base.clone();
            s.axpy(2f64.powi(-(n as i32)), direction);
            s
        })
        .collect()
}

/// Convenience: a state used as a perturbation direction.
pub fn direction_state(grid: &Grid, seed: u64) -> State {
    let mut s = State::zeros(grid, 0.0);
    s.u = random::smooth_vector(grid, seed, 0.4);
    s.v = VectorField::zeros(grid);
    s.theta = random::smooth_scalar(grid, seed.wrapping_add(9), 0.4);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, ScalarField};
    use crate::model::{ForcingKind, Nonlinearity, TimeCoefficient};

    fn model_1d(f: Nonlinearity) -> ModelSpec {
        ModelSpec {
            mu: 1.0,
            lambda: 0.0,
            alpha: TimeCoefficient::constant(1.0),
            kappa: TimeCoefficient::constant(1.0),
            nonlinearity: f,
        }
    }

    #[test]
    fn hausdorff_axioms() {
        let g = GridSpec::unit_box(1, 15).unwrap();
        let e1 = GridSpec::first_eigenfunction(&g);
        let mut s = State::zeros(&g, 0.0);
        s.theta = e1.clone();

        let a = SnapshotCloud { time: 0.0, states: vec![s.clone()] };
        assert_eq!(hausdorff_semidist(&a, &a, 1.0, 0.0).unwrap(), 0.0);

        // two-point distance |delta| ||e1||
        let delta = 0.37;
        let mut s2 = s.clone();
        s2.theta.axpy(delta, &e1);
        let b = SnapshotCloud { time: 0.0, states: vec![s2.clone()] };
        let d = hausdorff_semidist(&a, &b, 1.0, 0.0).unwrap();
        let expect = delta * e1.l2_norm_sq().sqrt();
        assert!((d - expect).abs() < 1e-12 * expect.max(1.0), "{d} vs {expect}");

        // asymmetry witness: A subset of B
        let big = SnapshotCloud { time: 0.0, states: vec![s.clone(), s2.clone()] };
        assert_eq!(hausdorff_semidist(&a, &big, 1.0, 0.0).unwrap(), 0.0);
        assert!(hausdorff_semidist(&big, &a, 1.0, 0.0).unwrap() > 0.0);

        // triangle-type bound on random clouds
        let mk = |seed: u64| {
            let states = (0..3)
                .map(|i| {
                    let mut s = State::zeros(&g, 0.0);
                    s.theta = crate::grid::random::smooth_scalar(&g, seed + i, 0.5);
                    s.u = crate::grid::random::smooth_vector(&g, seed + 10 + i, 0.5);
                    s
                })
                .collect();
            SnapshotCloud { time: 0.0, states }
        };
        for seed in 0..30 {
            let (x, y, z) = (mk(seed * 100), mk(seed * 100 + 40), mk(seed * 100 + 80));
            let xy = hausdorff_semidist(&x, &y, 1.0, 0.0).unwrap();
            let yz = hausdorff_semidist(&y, &z, 1.0, 0.0).unwrap();
            let xz = hausdorff_semidist(&x, &z, 1.0, 0.0).unwrap();
            assert!(xz <= xy + yz + 1e-12, "seed {seed}: {xz} > {xy} + {yz}");
        }

        let empty = SnapshotCloud { time: 0.0, states: vec![] };
        assert!(hausdorff_semidist(&a, &empty, 1.0, 0.0).is_err());
    }

    #[test]
    fn contraction_identical_pair_is_zero() {
        let g = GridSpec::unit_box(1, 15).unwrap();
        let model = model_1d(Nonlinearity::Power { c: 0.5, rho: 2.0, eta: 1.0 });
        let e1 = GridSpec::first_eigenfunction(&g);
        let sym = ForcingSymbol::new(ForcingKind::TimePeriodic { period: 0.25 }, e1.clone());
        let mut s = State::zeros(&g, 0.0);
        s.theta = e1.clone();
        let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 4, ..SchemeConfig::default() };
        let rep = contraction_test(
            &[s.clone(), s.clone()],
            &[sym.clone(), sym.clone()],
            0.5,
            &model,
            &scheme,
        )
        .unwrap();
        let p = rep.pair(0, 1).unwrap();
        assert_eq!(p.e_z_final, 0.0);
        assert_eq!(p.phi_t, 0.0);
        assert!(p.inequality_margin >= 0.0);
    }

    #[test]
    fn phi_t_is_symmetric() {
        let g = GridSpec::unit_box(1, 15).unwrap();
        let model = model_1d(Nonlinearity::Power { c: 0.5, rho: 2.0, eta: 1.0 });
        let e1 = GridSpec::first_eigenfunction(&g);
        let s1 = {
            let mut s = State::zeros(&g, 0.0);
            s.theta = e1.clone();
            s
        };
        let s2 = {
            let mut s = s1.clone();
            s.theta.axpy(0.3, &e1);
            s.u = crate::grid::random::smooth_vector(&g, 4, 0.4).scaled(0.2);
            s
        };
        let ga = ForcingSymbol::new(ForcingKind::TimePeriodic { period: 0.25 }, e1.scaled(0.1));
        let gb = ForcingSymbol::new(ForcingKind::Static, e1.scaled(0.2));
        let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 2, ..SchemeConfig::default() };
        let ab = difference_run(&s1, &s2, 0.0, 0.5, &ga, &gb, &model, &scheme).unwrap();
        let ba = difference_run(&s2, &s1, 0.0, 0.5, &gb, &ga, &model, &scheme).unwrap();
        let scale = ab.phi_t.abs().max(1e-30);
        assert!((ab.phi_t - ba.phi_t).abs() <= 1e-12 * scale, "{} vs {}", ab.phi_t, ba.phi_t);
    }

    #[test]
    fn decay_series_ends_at_zero() {
        let g = GridSpec::unit_box(1, 15).unwrap();
        let model = model_1d(Nonlinearity::Zero { eta: 1.0 });
        let e1 = GridSpec::first_eigenfunction(&g);
        let sym = ForcingSymbol::new(ForcingKind::Static, e1.scaled(0.05));
        let ens = EnsembleSpec {
            initials: vec![
                InitialCondition { seed: 1, hc_norm: 1.0 },
                InitialCondition { seed: 2, hc_norm: 2.0 },
            ],
            symbols: vec![sym],
            snapshot_times: vec![0.25, 0.5, 1.0],
            seed: 7,
        };
        let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 64, ..SchemeConfig::default() };
        let approx = attractor_approximate(&ens, 1.0, &model, &scheme, &g).unwrap();
        assert!(approx.failures.is_empty());
        let last = approx.decay_series.last().unwrap();
        assert_eq!(last.1, 0.0);
        assert_eq!(approx.a_approx.states.len(), 2);
    }

    #[test]
    fn single_member_decay_is_distance_to_endpoint() {
        let g = GridSpec::unit_box(1, 15).unwrap();
        let model = model_1d(Nonlinearity::Zero { eta: 1.0 });
        let ens = EnsembleSpec {
            initials: vec![InitialCondition { seed: 3, hc_norm: 1.0 }],
            symbols: vec![ForcingSymbol::zero(&g)],
            snapshot_times: vec![0.5, 1.0],
            seed: 11,
        };
        let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 64, ..SchemeConfig::default() };
        let approx = attractor_approximate(&ens, 1.0, &model, &scheme, &g).unwrap();
        assert_eq!(approx.decay_series.last().unwrap().1, 0.0);
        assert!(approx.decay_series[0].1 > 0.0);
    }

    #[test]
    fn static_symbols_give_identical_clouds() {
        // for a static base every shift is the same symbol
        let g = GridSpec::unit_box(1, 15).unwrap();
        let model = model_1d(Nonlinearity::Zero { eta: 1.0 });
        let e1 = GridSpec::first_eigenfunction(&g);
        let base = ForcingSymbol::new(ForcingKind::Static, e1.scaled(0.1));
        let shifts = crate::model::hull_net(&base, &[0.0, 0.5, 1.25]).unwrap();
        let ens = EnsembleSpec {
            initials: vec![InitialCondition { seed: 5, hc_norm: 1.5 }],
            symbols: shifts,
            snapshot_times: vec![0.5, 1.0],
            seed: 3,
        };
        let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 64, ..SchemeConfig::default() };
        let approx = attractor_approximate(&ens, 1.0, &model, &scheme, &g).unwrap();
        // all symbols identical: the final cloud has three copies of one point
        let c = &approx.a_approx;
        let d01 = hc_norm_sq(&c.states[0].sub(&c.states[1]).unwrap(), 1.0, 0.0).unwrap().sqrt();
        let d02 = hc_norm_sq(&c.states[0].sub(&c.states[2]).unwrap(), 1.0, 0.0).unwrap().sqrt();
        assert!(d01 <= 1e-12 && d02 <= 1e-12, "{d01}, {d02}");
    }

    fn forced_ledger(
        g: &Grid,
        model: &ModelSpec,
        forcing: &ForcingSymbol,
    ) -> crate::diagnostics::ConstantLedger {
        use crate::diagnostics::{build_q, compute_constants_with_refit, LedgerConfig};
        use crate::operators::{estimate_operator_constants, PowerIterationSpec};
        let opc = estimate_operator_constants(g, &PowerIterationSpec::default()).unwrap();
        let q = build_q(g);
        let lb2 = crate::model::lb2_norm_estimate(forcing, 4.0, 5e-3, g).unwrap();
        compute_constants_with_refit(
            model,
            &opc,
            &q,
            g,
            &LedgerConfig { lb2_g0: lb2, ..LedgerConfig::default() },
        )
        .unwrap()
    }

    #[test]
    fn initial_state_inside_ball_absorbs_immediately() {
        let g = GridSpec::unit_box(1, 31).unwrap();
        let model = model_1d(Nonlinearity::Power { c: 1.0, rho: 2.0, eta: 1.0 });
        let e1 = GridSpec::first_eigenfunction(&g);
        let forcing = ForcingSymbol::new(ForcingKind::TimePeriodic { period: 0.25 }, e1.scaled(0.05));
        let ledger = forced_ledger(&g, &model, &forcing);
        let ensemble = EnsembleSpec {
            initials: vec![InitialCondition { seed: 0, hc_norm: 0.5 * ledger.rho0 }],
            symbols: vec![forcing],
            snapshot_times: vec![],
            seed: 1,
        };
        let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 16, ..SchemeConfig::default() };
        let rep = absorbing_check(&ensemble, &ledger, &model, &scheme, &g, 2.0).unwrap();
        let m = &rep.members[0];
        assert_eq!(m.entry_time, Some(0.0), "already inside: entry at tau");
        assert_eq!(m.exit_violations, 0);
    }

    #[test]
    fn entry_time_monotone_in_initial_norm() {
        // doubling the initial norm never decreases the measured entry time
        let g = GridSpec::unit_box(1, 31).unwrap();
        let model = model_1d(Nonlinearity::Power { c: 1.0, rho: 2.0, eta: 1.0 });
        let e1 = GridSpec::first_eigenfunction(&g);
        let forcing = ForcingSymbol::new(ForcingKind::TimePeriodic { period: 0.25 }, e1.scaled(0.05));
        let ledger = forced_ledger(&g, &model, &forcing);
        let scales = [1.0, 2.0, 4.0, 8.0, 16.0];
        let ensemble = EnsembleSpec {
            initials: scales
                .iter()
                .map(|&c| InitialCondition { seed: 9, hc_norm: c * 1.5 * ledger.rho0 })
                .collect(),
            symbols: vec![forcing],
            snapshot_times: vec![],
            seed: 3,
        };
        let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 8, ..SchemeConfig::default() };
        let rep = absorbing_check(&ensemble, &ledger, &model, &scheme, &g, 80.0).unwrap();
        assert!(rep.all_absorbed);
        let entries: Vec<f64> = rep.members.iter().map(|m| m.entry_time.unwrap()).collect();
        for w in entries.windows(2) {
            assert!(w[1] >= w[0], "entry times not monotone: {entries:?}");
        }
    }

    #[test]
    fn phi_t_matches_direct_quadrature_for_linear_pairs() {
        // f = 0, same symbol: the contraction functional is C_B^2/2 times the
        // nested double integral of ||u1 - u2||^2 in L^2; recompute that
        // integral from independently recorded trajectories
        use crate::integrator::run;
        let g = GridSpec::unit_box(1, 15).unwrap();
        let model = model_1d(Nonlinearity::Zero { eta: 1.0 });
        let e1 = GridSpec::first_eigenfunction(&g);
        let forcing = ForcingSymbol::new(ForcingKind::TimePeriodic { period: 0.25 }, e1.scaled(0.1));
        let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 1, ..SchemeConfig::default() };
        let mut s1 = State::zeros(&g, 0.0);
        s1.u = crate::grid::random::smooth_vector(&g, 31, 0.5);
        s1.theta = e1.clone();
        let mut s2 = s1.clone();
        s2.u.axpy(0.3, &crate::grid::random::smooth_vector(&g, 32, 0.5));

        let t_end = 1.0;
        let rec = difference_run(&s1, &s2, 0.0, t_end, &forcing, &forcing, &model, &scheme).unwrap();

        let r1 = run(&s1, 0.0, t_end, &forcing, &model, &scheme, &[]).unwrap();
        let r2 = run(&s2, 0.0, t_end, &forcing, &model, &scheme, &[]).unwrap();
        let mut direct = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (a, b) in r1.states.iter().zip(&r2.states) {
            let z = a.u.sub(&b.u).unwrap();
            let val = z.l2_norm_sq(); // rho -> 1 limit: plain L^2
            if let Some((tp, vp)) = prev {
                let h = a.t - tp;
                direct += 0.5 * h * (tp * vp + a.t * val);
            }
            prev = Some((a.t, val));
        }
        let scale = direct.abs().max(1e-30);
        assert!(
            (rec.displacement_double_integral - direct).abs() / scale < 1e-10,
            "{} vs {direct}",
            rec.displacement_double_integral
        );
        // and phi_t assembles from it with the forcing part vanishing
        let expect_phi = 0.5 * rec.c_b * rec.c_b * rec.displacement_double_integral;
        assert!((rec.phi_t - expect_phi).abs() <= 1e-12 * expect_phi.max(1e-30));
        assert_eq!(rec.forcing_double_integral, 0.0);
    }

    #[test]
    fn ensemble_states_hit_prescribed_norm() {
        let g = GridSpec::unit_box(1, 15).unwrap();
        let model = model_1d(Nonlinearity::Zero { eta: 1.0 });
        let ens = EnsembleSpec {
            initials: vec![InitialCondition { seed: 4, hc_norm: 3.5 }],
            symbols: vec![ForcingSymbol::zero(&g)],
            snapshot_times: vec![],
            seed: 1,
        };
        let s = ens.build_state(&g, &model, 0).unwrap();
        let n = hc_norm_sq(&s, 1.0, 0.0).unwrap().sqrt();
        assert!((n - 3.5).abs() < 1e-10);
        let _ = ScalarField::zeros(&g);
    }
}
