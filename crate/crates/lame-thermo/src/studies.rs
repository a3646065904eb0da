//! Refinement studies shared by the `convergence` experiment, the examples
//! and the acceptance suite: manufactured-solution orders for the Poisson
//! solver, the div(grad) defect, the Helmholtz residuals, the integrator's
//! decoupled-regime orders, and the energy-identity residual decay.

use crate::error::Result;
use crate::grid::{GridSpec, ScalarField, State, VectorField};
use crate::integrator::{run, SchemeConfig};
use crate::model::{ForcingKind, ForcingSymbol, ModelSpec, Nonlinearity, TimeCoefficient};
use crate::operators::{
    divergence_skewed, gradient, helmholtz_decompose, laplacian, poisson_solve, PoissonSolverSpec,
};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize)]
pub struct RefinementSeries {
    pub name: String,
    pub parameter: Vec<f64>,
    pub errors: Vec<f64>,
    /// log2 ratios of successive errors.
    pub orders: Vec<f64>,
}

impl RefinementSeries {
    pub fn new(name: &str, parameter: Vec<f64>, errors: Vec<f64>) -> Self {
        let orders = errors
            .windows(2)
            .map(|w| if w[1] > 0.0 { (w[0] / w[1]).log2() } else { f64::INFINITY })
            .collect();
        RefinementSeries {
            name: name.into(),
            parameter,
            errors,
            orders,
        }
    }

    pub fn min_order(&self) -> f64 {
        self.orders.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Continuum manufactured solution for the Poisson solver in 2-D:
/// `phi* = sin(pi x) sin(2 pi y)` with the continuum right-hand side.
pub fn poisson_mms_orders(ns: &[usize], spec: &PoissonSolverSpec) -> Result<RefinementSeries> {
    let mut errors = Vec::new();
    for &n in ns {
        let g = GridSpec::unit_box(2, n)?;
        let exact = ScalarField::from_fn(&g, |x| (PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        let rhs = ScalarField::from_fn(&g, |x| {
            5.0 * PI * PI * (PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
        });
        let phi = poisson_solve(&rhs, spec)?;
        errors.push(phi.sub(&exact)?.l2_norm_sq().sqrt());
    }
    Ok(RefinementSeries::new(
        "poisson-mms",
        ns.iter().map(|&n| n as f64).collect(),
        errors,
    ))
}

/// `||div(grad s) - laplacian(s)||` on a smooth 2-D field.
pub fn divgrad_defect_orders(ns: &[usize]) -> Result<RefinementSeries> {
    let mut errors = Vec::new();
    for &n in ns {
        let g = GridSpec::unit_box(2, n)?;
        let s = ScalarField::from_fn(&g, |x| {
            (PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
                + 0.3 * (2.0 * PI * x[0]).sin() * (PI * x[1]).sin()
        });
        let wide = divergence_skewed(&gradient(&s));
        errors.push(wide.sub(&laplacian(&s))?.l2_norm_sq().sqrt());
    }
    Ok(RefinementSeries::new(
        "divgrad-defect",
        ns.iter().map(|&n| n as f64).collect(),
        errors,
    ))
}

pub struct HelmholtzStudy {
    pub div_residual: RefinementSeries,
    pub recovery: RefinementSeries,
    pub cross: RefinementSeries,
    pub max_curl: f64,
}

/// Decompose the gradient of a smooth Dirichlet potential: recovery error,
/// divergence residual and cross term must all shrink at second order while
/// the curl of the gradient part stays at roundoff.
pub fn helmholtz_orders(ns: &[usize], spec: &PoissonSolverSpec) -> Result<HelmholtzStudy> {
    let mut recovery = Vec::new();
    let mut div_res = Vec::new();
    let mut cross = Vec::new();
    let mut max_curl = 0.0f64;
    for &n in ns {
        let g = GridSpec::unit_box(2, n)?;
        let potential = ScalarField::from_fn(&g, |x| {
            (PI * x[0]).sin() * (PI * x[1]).sin()
                + 0.4 * (2.0 * PI * x[0]).sin() * (3.0 * PI * x[1]).sin()
        });
        let u = gradient(&potential);
        let parts = helmholtz_decompose(&u, spec)?;
        recovery.push(parts.u_c.sub(&u)?.l2_norm_sq().sqrt());
        div_res.push(parts.div_residual);
        cross.push(parts.l2_cross.abs() / u.l2_norm_sq());
        max_curl = max_curl.max(parts.curl_residual / (1.0 + u.max_abs()));
    }
    let par: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    Ok(HelmholtzStudy {
        div_residual: RefinementSeries::new("helmholtz-div-residual", par.clone(), div_res),
        recovery: RefinementSeries::new("helmholtz-recovery", par.clone(), recovery),
        cross: RefinementSeries::new("helmholtz-orthogonality", par, cross),
        max_curl,
    })
}

fn decoupled_model(kappa: f64) -> ModelSpec {
    ModelSpec {
        mu: 1.0,
        lambda: 0.0,
        alpha: TimeCoefficient::constant(0.0),
        kappa: TimeCoefficient::constant(kappa),
        nonlinearity: Nonlinearity::Zero { eta: 1.0 },
    }
}

pub struct IntegratorStudy {
    pub wave: RefinementSeries,
    pub heat: RefinementSeries,
    pub forced_heat: RefinementSeries,
}

/// Global-error orders of the three decoupled verification regimes under dt
/// halving, each against its exact single-mode solution.
pub fn integrator_orders(n: usize, dts: &[f64]) -> Result<IntegratorStudy> {
    let g = GridSpec::unit_box(1, n)?;
    let e1 = GridSpec::first_eigenfunction(&g);
    let lam1 = g.first_eigenvalue();
    let zero_g = ForcingSymbol::zero(&g);
    let t_end = 1.0;

    let mut wave_errs = Vec::new();
    let omega = (2.0 * lam1).sqrt();
    for &dt in dts {
        let model = decoupled_model(1.0);
        let scheme = SchemeConfig { dt, record_stride: usize::MAX, ..SchemeConfig::default() };
        let mut init = State::zeros(&g, 0.0);
        init.u = VectorField::from_components(vec![e1.clone()])?;
        let rec = run(&init, 0.0, t_end, &zero_g, &model, &scheme, &[])?;
        let expect = e1.scaled((omega * t_end).cos());
        wave_errs.push(rec.final_state().u.component(0).sub(&expect)?.max_abs());
    }

    let mut heat_errs = Vec::new();
    let kappa = 0.8;
    for &dt in dts {
        let model = decoupled_model(kappa);
        let scheme = SchemeConfig { dt, record_stride: usize::MAX, ..SchemeConfig::default() };
        let mut init = State::zeros(&g, 0.0);
        init.theta = e1.clone();
        let rec = run(&init, 0.0, t_end, &zero_g, &model, &scheme, &[])?;
        let expect = e1.scaled((-kappa * lam1 * t_end).exp());
        heat_errs.push(rec.final_state().theta.sub(&expect)?.max_abs());
    }

    let mut forced_errs = Vec::new();
    let forcing = ForcingSymbol::new(ForcingKind::TimePeriodic { period: 1.0 }, e1.clone());
    let w = 2.0 * PI;
    let exact = |t: f64| {
        (lam1 * (w * t).sin() - w * (w * t).cos() + w * (-lam1 * t).exp()) / (lam1 * lam1 + w * w)
    };
    for &dt in dts {
        let model = decoupled_model(1.0);
        let scheme = SchemeConfig { dt, record_stride: usize::MAX, ..SchemeConfig::default() };
        let init = State::zeros(&g, 0.0);
        let rec = run(&init, 0.0, t_end, &forcing, &model, &scheme, &[])?;
        let expect = e1.scaled(exact(t_end));
        forced_errs.push(rec.final_state().theta.sub(&expect)?.max_abs());
    }

    Ok(IntegratorStudy {
        wave: RefinementSeries::new("wave-mode", dts.to_vec(), wave_errs),
        heat: RefinementSeries::new("heat-decay", dts.to_vec(), heat_errs),
        forced_heat: RefinementSeries::new("forced-heat", dts.to_vec(), forced_errs),
    })
}

/// Max midpoint residual of the energy identity on the 1-D nonlinear
/// benchmark under simultaneous (dt, h) halving.
pub fn energy_identity_orders(levels: &[(usize, f64)]) -> Result<RefinementSeries> {
    let mut residuals = Vec::new();
    for &(n, dt) in levels {
        let g = GridSpec::unit_box(1, n)?;
        let e1 = GridSpec::first_eigenfunction(&g);
        let model = ModelSpec {
            mu: 1.0,
            lambda: 0.0,
            alpha: TimeCoefficient::constant(1.0),
            kappa: TimeCoefficient::constant(1.0),
            nonlinearity: Nonlinearity::Power { c: 1.0, rho: 2.0, eta: 1.0 },
        };
        let forcing = ForcingSymbol::new(ForcingKind::TimePeriodic { period: 1.0 }, e1.scaled(0.5));
        let scheme = SchemeConfig { dt, record_stride: 1, ..SchemeConfig::default() };
        let mut init = State::zeros(&g, 0.0);
        init.u = VectorField::from_components(vec![e1.scaled(0.5)])?;
        init.theta = e1.clone();
        let rec = run(&init, 0.0, 2.0, &forcing, &model, &scheme, &[])?;
        let res = crate::diagnostics::energy_identity_residuals(&rec, &model, &forcing)?;
        residuals.push(res.iter().fold(0.0f64, |m, r| m.max(r.abs())));
    }
    Ok(RefinementSeries::new(
        "energy-identity-residual",
        levels.iter().map(|&(n, _)| n as f64).collect(),
        residuals,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_series_orders() {
        let s = RefinementSeries::new("t", vec![1.0, 2.0, 3.0], vec![1.0, 0.25, 0.0625]);
        assert!((s.orders[0] - 2.0).abs() < 1e-12);
        assert!((s.min_order() - 2.0).abs() < 1e-12);
    }
}
