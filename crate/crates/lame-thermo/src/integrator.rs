//! IMEX time stepping for the coupled wave/heat system and the two-parameter
//! process it generates.
//!
//! One step from `t_n` (kick - drift - Crank-Nicolson heat solve - kick):
//!
//! ```text
//! v+   = v  + dt/2 [ Lame(u) - alpha(t_n) grad(theta_n) - f(u) ]
//! u'   = u  + dt v+
//! (I - dt/2 kappa_mid Lap) theta' = (I + dt/2 kappa_mid Lap) theta_n
//!                                   - dt alpha_mid div(v+) + dt g(t_mid)
//! v'   = v+ + dt/2 [ Lame(u') - alpha(t_next) grad((theta_n + theta')/2) - f(u') ]
//! ```
//!
//! The explicit elastic update is subject to the CFL restriction
//! `dt <= cfl_safety * h_min / sqrt(2 mu + lambda)`; the implicit heat solve
//! imposes none. All step times are formed as `tau + k * dt`, never by
//! accumulation, so runs over shifted windows perform bitwise-identical
//! arithmetic when `tau = 0`; that turns the translation identity into an
//! exact floating-point property.

use crate::error::{Error, Result};
use crate::grid::{Grid, State, VectorField};
use crate::model::{f_apply, ForcingSymbol, ModelSpec, Nonlinearity};
use crate::operators::{
    divergence, gradient, h1_vec_seminorm_sq, hc_norm_sq, lame_apply, laplacian, shifted_solve,
    PoissonSolverSpec,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub dt: f64,
    /// Fraction of the wave CFL limit actually used.
    pub cfl_safety: f64,
    /// Solver for the implicit half of the heat update.
    pub theta_solver: PoissonSolverSpec,
    /// Record every this many steps.
    pub record_stride: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            dt: 1e-3,
            cfl_safety: 0.5,
            theta_solver: PoissonSolverSpec::default(),
            record_stride: 1,
        }
    }
}

impl SchemeConfig {
    pub fn cfl_limit(grid: &Grid, mu: f64, lambda: f64) -> f64 {
        grid.min_spacing() / (2.0 * mu + lambda).sqrt()
    }

    pub fn validate(&self, grid: &Grid, model: &ModelSpec) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation("scheme.dt", "must be positive"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::validation("scheme.cfl_safety", "must lie in (0, 1]"));
        }
        if self.record_stride == 0 {
            return Err(Error::validation("scheme.record_stride", "must be >= 1"));
        }
        let limit = self.cfl_safety * Self::cfl_limit(grid, model.mu, model.lambda);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::validation(
                "scheme.dt",
                format!("violates the wave CFL bound: dt = {} > {limit:.6e}", self.dt),
            ));
        }
        Ok(())
    }
}

fn acceleration(
    u: &VectorField,
    theta_grad: &VectorField,
    alpha: f64,
    model: &ModelSpec,
) -> Result<VectorField> {
    let mut acc = lame_apply(u, model.mu, model.lambda);
    acc.axpy(-alpha, theta_grad);
    if !model.nonlinearity.is_zero() {
        let fu = f_apply(&model.nonlinearity, u)?;
        acc.axpy(-1.0, &fu);
    }
    Ok(acc)
}

fn step_with_times(
    s: &State,
    model: &ModelSpec,
    g: &ForcingSymbol,
    scheme: &SchemeConfig,
    t_n: f64,
    t_mid: f64,
    t_next: f64,
) -> Result<State> {
    let dt = scheme.dt;
    let half = 0.5 * dt;

    // half kick
    let acc_n = acceleration(&s.u, &gradient(&s.theta), model.alpha.eval(t_n), model)?;
    let mut v_half = s.v.clone();
    v_half.axpy(half, &acc_n);

    // drift
    let mut u_next = s.u.clone();
    u_next.axpy(dt, &v_half);

    // Crank-Nicolson heat solve at the midpoint coefficient
    let kappa_mid = model.kappa.eval(t_mid);
    let alpha_mid = model.alpha.eval(t_mid);
    let mut rhs = s.theta.clone();
    rhs.axpy(half * kappa_mid, &laplacian(&s.theta));
    rhs.axpy(-dt * alpha_mid, &divergence(&v_half));
    if !g.is_zero() {
        rhs.axpy(dt, &g.eval(t_mid));
    }
    let theta_next = shifted_solve(1.0, half * kappa_mid, &rhs, &scheme.theta_solver)?;

    // final half kick against the midpoint temperature gradient
    let mut theta_avg = s.theta.clone();
    theta_avg.axpy(1.0, &theta_next);
    theta_avg.scale(0.5);
    let acc_next = acceleration(&u_next, &gradient(&theta_avg), model.alpha.eval(t_next), model)?;
    let mut v_next = v_half;
    v_next.axpy(half, &acc_next);

    let out = State {
        t: t_next,
        u: u_next,
        v: v_next,
        theta: theta_next,
    };
    if !out.is_finite() {
        return Err(Error::Blowup {
            t: t_next,
            last_good_t: t_n,
        });
    }
    Ok(out)
}

/// Advance one step from the state's own time stamp.
pub fn step(s: &State, model: &ModelSpec, g: &ForcingSymbol, scheme: &SchemeConfig) -> Result<State> {
    let t = s.t;
    step_with_times(s, model, g, scheme, t, t + 0.5 * scheme.dt, t + scheme.dt)
}

/// Time series produced by a process evaluation: states at the record times
/// plus optional snapshots at requested instants.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub tau: f64,
    pub dt: f64,
    pub record_stride: usize,
    /// States at the recorded steps (first entry is the initial state, last
    /// the final one).
    pub states: Vec<State>,
    /// Global step index of each recorded state.
    pub record_steps: Vec<usize>,
    /// Snapshots at explicitly requested times.
    pub snapshots: Vec<State>,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("record always holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn quantize_steps(span: f64, dt: f64, what: &str) -> Result<usize> {
    if span < 0.0 {
        return Err(Error::validation(what, "time span must be nonnegative"));
    }
    let steps = (span / dt).round();
    if (steps * dt - span).abs() > 1e-9 * span.abs().max(1.0) {
        return Err(Error::validation(
            what,
            format!("span {span} is not an integer multiple of dt = {dt}"),
        ));
    }
    Ok(steps as usize)
}

/// Evaluate the process `U_g(t, tau)` on the initial state, recording every
/// `record_stride` steps. `snapshot_times` must be dt-multiples inside
/// `[tau, t_end]`. Deterministic: fixed evaluation order, no threading.
pub fn run(
    initial: &State,
    tau: f64,
    t_end: f64,
    g: &ForcingSymbol,
    model: &ModelSpec,
    scheme: &SchemeConfig,
    snapshot_times: &[f64],
) -> Result<TrajectoryRecord> {
    scheme.validate(initial.grid(), model)?;
    let steps = quantize_steps(t_end - tau, scheme.dt, "run.t_end")?;
    let mut snapshot_steps = Vec::with_capacity(snapshot_times.len());
    for &ts in snapshot_times {
        let k = quantize_steps(ts - tau, scheme.dt, "run.snapshot_times")?;
        if k > steps {
            return Err(Error::validation(
                "run.snapshot_times",
                format!("snapshot time {ts} beyond the final time"),
            ));
        }
        snapshot_steps.push(k);
    }

    let mut state = initial.clone();
    state.t = tau;
    let mut record = TrajectoryRecord {
        tau,
        dt: scheme.dt,
        record_stride: scheme.record_stride,
        states: Vec::with_capacity(steps / scheme.record_stride + 2),
        record_steps: Vec::new(),
        snapshots: Vec::new(),
    };
    record.states.push(state.clone());
    record.record_steps.push(0);
    if snapshot_steps.contains(&0) {
        record.snapshots.push(state.clone());
    }

    for k in 0..steps {
        let t_n = tau + k as f64 * scheme.dt;
        let t_mid = tau + (k as f64 + 0.5) * scheme.dt;
        let t_next = tau + (k + 1) as f64 * scheme.dt;
        state = step_with_times(&state, model, g, scheme, t_n, t_mid, t_next)?;
        let k1 = k + 1;
        if (k1 % scheme.record_stride == 0 || k1 == steps)
            && record.record_steps.last() != Some(&k1) {
                record.states.push(state.clone());
                record.record_steps.push(k1);
            }
        if snapshot_steps.contains(&k1) {
            record.snapshots.push(state.clone());
        }
    }
    Ok(record)
}

/// Discrepancy of the translation identity,
/// `|| U_g(t+s, tau+s) U_tau - U_(T(s)g)(t, tau) U_tau ||_Hc`.
/// `s` must be a nonnegative dt-multiple so both runs share the time grid.
pub fn check_translation_identity(
    initial: &State,
    tau: f64,
    t: f64,
    s: f64,
    g0: &ForcingSymbol,
    model: &ModelSpec,
    scheme: &SchemeConfig,
) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::validation("translation.s", "must be nonnegative"));
    }
    quantize_steps(s, scheme.dt, "translation.s")?;
    let shifted_window = run(initial, tau + s, t + s, g0, model, scheme, &[])?;
    let shifted_symbol = run(initial, tau, t, &g0.translated(s)?, model, scheme, &[])?;
    let diff = shifted_window.final_state().sub(shifted_symbol.final_state())?;
    Ok(hc_norm_sq(&diff, model.mu, model.lambda)?.sqrt())
}

/// Quadrature `L^{2 rho}` norm squared, `( int |z|^{2 rho} dx )^{1/rho}`.
pub fn l2rho_norm_sq(z: &VectorField, rho: f64) -> f64 {
    let grid = z.grid().clone();
    let d = grid.dim();
    let mut acc = 0.0;
    for node in 0..grid.node_count() {
        let mut nsq = 0.0;
        for a in 0..d {
            let v = z.component(a).values()[node];
            nsq += v * v;
        }
        acc += nsq.powf(rho);
    }
    (acc * grid.cell_volume()).powf(1.0 / rho)
}

/// Energy of a trajectory difference,
/// `E_Z = 1/2 ( ||z_t||^2 + (2 mu + lambda) ||grad z||^2 + ||theta_1 - theta_2||^2 )`.
pub fn difference_energy(z: &State, model: &ModelSpec) -> f64 {
    0.5 * (z.v.l2_norm_sq()
        + (2.0 * model.mu + model.lambda) * h1_vec_seminorm_sq(&z.u)
        + z.theta.l2_norm_sq())
}

/// Diagnostics of a paired run: the difference energy series and the
/// accumulators feeding the contraction functional.
#[derive(Debug, Clone)]
pub struct DifferenceRecord {
    pub tau: f64,
    pub t_end: f64,
    pub times: Vec<f64>,
    pub e_z: Vec<f64>,
    /// `int int ||u1 - u2||^2_{2 rho} ds dsigma` over the nested triangle.
    pub displacement_double_integral: f64,
    /// `int int ||g1 - g2||^2 ds dsigma` over the nested triangle.
    pub forcing_double_integral: f64,
    /// `int E_Z dsigma + int int E_Z ds dsigma`, the measured constant of the
    /// averaged energy bound.
    pub c_m: f64,
    /// Lipschitz-chain constant entering the contraction functional.
    pub c_b: f64,
    /// The contraction functional value.
    pub phi_t: f64,
    pub e_z_final: f64,
}

fn lipschitz_weight_norm(u1: &VectorField, u2: &VectorField, rho: f64) -> f64 {
    // || 1 + sum_i |u1_i|^(rho-1) + sum_i |u2_i|^(rho-1) ||_{L^q}, q = 2 rho/(rho-1)
    let grid = u1.grid().clone();
    let d = grid.dim();
    let q = 2.0 * rho / (rho - 1.0);
    let mut acc = 0.0;
    for node in 0..grid.node_count() {
        let mut w = 1.0;
        for a in 0..d {
            w += u1.component(a).values()[node].abs().powf(rho - 1.0);
            w += u2.component(a).values()[node].abs().powf(rho - 1.0);
        }
        acc += w.powf(q);
    }
    (acc * grid.cell_volume()).powf(1.0 / q)
}

/// Co-evolve two initial states under two symbols and assemble the
/// difference diagnostics. The nested double integrals
/// `int_tau^T int_sigma^T a(s) ds dsigma` are accumulated as
/// `int_tau^T (s - tau) a(s) ds` with per-record trapezoids.
#[allow(clippy::too_many_arguments)]
pub fn difference_run(
    initial_1: &State,
    initial_2: &State,
    tau: f64,
    t_end: f64,
    g1: &ForcingSymbol,
    g2: &ForcingSymbol,
    model: &ModelSpec,
    scheme: &SchemeConfig,
) -> Result<DifferenceRecord> {
    scheme.validate(initial_1.grid(), model)?;
    if !std::sync::Arc::ptr_eq(initial_1.grid(), initial_2.grid()) && initial_1.grid() != initial_2.grid() {
        return Err(Error::GridMismatch("difference_run initial states".into()));
    }
    let steps = quantize_steps(t_end - tau, scheme.dt, "difference_run.t_end")?;
    let rho = match model.nonlinearity {
        Nonlinearity::Power { rho, .. } => rho,
        Nonlinearity::Zero { .. } => 1.0,
    };

    let mut s1 = initial_1.clone();
    s1.t = tau;
    let mut s2 = initial_2.clone();
    s2.t = tau;

    let mut times = Vec::new();
    let mut e_z = Vec::new();
    let mut disp_dbl = 0.0;
    let mut forc_dbl = 0.0;
    let mut ez_single = 0.0;
    let mut ez_dbl = 0.0;
    let mut c_b_sup: f64 = 0.0;

    let sample = |s1: &State, s2: &State, t: f64| -> Result<(f64, f64, f64, f64)> {
        let z = s1.sub(s2)?;
        let ez = difference_energy(&z, model);
        let disp = l2rho_norm_sq(&z.u, rho);
        let gd = g1.eval(t).sub(&g2.eval(t))?.l2_norm_sq();
        let weight = if model.nonlinearity.is_zero() {
            1.0
        } else {
            model.nonlinearity.amplitude()
                * 2f64.powf(rho - 1.0)
                * s1.grid().dim() as f64
                * lipschitz_weight_norm(&s1.u, &s2.u, rho)
        };
        Ok((ez, disp, gd, weight))
    };

    let (mut prev_ez, mut prev_disp, mut prev_gd, w0) = sample(&s1, &s2, tau)?;
    let mut prev_t = tau;
    c_b_sup = c_b_sup.max(w0);
    times.push(tau);
    e_z.push(prev_ez);

    for k in 0..steps {
        let t_n = tau + k as f64 * scheme.dt;
        let t_mid = tau + (k as f64 + 0.5) * scheme.dt;
        let t_next = tau + (k + 1) as f64 * scheme.dt;
        s1 = step_with_times(&s1, model, g1, scheme, t_n, t_mid, t_next)?;
        s2 = step_with_times(&s2, model, g2, scheme, t_n, t_mid, t_next)?;
        let k1 = k + 1;
        if k1 % scheme.record_stride == 0 || k1 == steps {
            let t = t_next;
            let (ez, disp, gd, w) = sample(&s1, &s2, t)?;
            c_b_sup = c_b_sup.max(w);
            let h = t - prev_t;
            // trapezoids, with the (s - tau) weight for the nested integrals
            disp_dbl += 0.5 * h * ((prev_t - tau) * prev_disp + (t - tau) * disp);
            forc_dbl += 0.5 * h * ((prev_t - tau) * prev_gd + (t - tau) * gd);
            ez_single += 0.5 * h * (prev_ez + ez);
            ez_dbl += 0.5 * h * ((prev_t - tau) * prev_ez + (t - tau) * ez);
            times.push(t);
            e_z.push(ez);
            prev_t = t;
            prev_ez = ez;
            prev_disp = disp;
            prev_gd = gd;
        }
    }

    let phi_t = 0.5 * c_b_sup * c_b_sup * disp_dbl + 0.5 * forc_dbl;
    Ok(DifferenceRecord {
        tau,
        t_end,
        times,
        e_z_final: *e_z.last().expect("at least the initial sample"),
        e_z,
        displacement_double_integral: disp_dbl,
        forcing_double_integral: forc_dbl,
        c_m: ez_single + ez_dbl,
        c_b: c_b_sup,
        phi_t,
    })
}
