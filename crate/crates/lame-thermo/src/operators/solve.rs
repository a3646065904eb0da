//! Dirichlet solvers for `(a*I - b*Lap) x = rhs`: a direct sine-transform
//! path (exact up to roundoff on the tensor-product box) and a conjugate
//! gradient fallback, cross-checked against each other in the tests.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec, ScalarField};
use crate::operators::laplacian;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    DirectSine,
    ConjugateGradient,
}

/// Configuration for the Poisson / shifted-Laplacian solves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonSolverSpec {
    pub method: SolveMethod,
    /// Relative residual target for the CG path.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PoissonSolverSpec {
    fn default() -> Self {
        PoissonSolverSpec {
            method: SolveMethod::DirectSine,
            tolerance: 1e-10,
            max_iterations: 1_000_000,
        }
    }
}

impl PoissonSolverSpec {
    pub fn cg(tolerance: f64) -> Self {
        PoissonSolverSpec {
            method: SolveMethod::ConjugateGradient,
            tolerance,
            max_iterations: 1_000_000,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(Error::validation(
                "solver.tolerance",
                format!("must lie in (0, 1e-6], got {}", self.tolerance),
            ));
        }
        if self.method == SolveMethod::ConjugateGradient && self.max_iterations < grid.node_count()
        {
            return Err(Error::validation(
                "solver.max_iterations",
                format!(
                    "CG needs at least the node count {} iterations available, got {}",
                    grid.node_count(),
                    self.max_iterations
                ),
            ));
        }
        Ok(())
    }
}

/// Per-grid sine-transform data: dense DST-I matrices per axis plus the
/// Laplacian eigenvalues. The forward transform of the mode basis is exact
/// orthogonal diagonalization of the compact Dirichlet Laplacian.
pub struct SineSolver {
    grid: Grid,
    /// per axis: row-major `n x n` matrix `S[m][i] = sin((m+1)(i+1) pi / (n+1))`
    sines: Vec<Vec<f64>>,
    /// per axis: eigenvalues `4/h^2 sin^2((m+1) pi / (2(n+1)))` of `-Lap`
    eigen: Vec<Vec<f64>>,
}

impl SineSolver {
    pub fn new(grid: &Grid) -> Self {
        let mut sines = Vec::new();
        let mut eigen = Vec::new();
        for a in 0..grid.dim() {
            let n = grid.interior_counts()[a];
            let h = grid.spacing(a);
            let mut s = vec![0.0; n * n];
            let mut lam = vec![0.0; n];
            for m in 0..n {
                let freq = (m + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
                lam[m] = 4.0 / (h * h) * (freq / 2.0).sin().powi(2);
                for i in 0..n {
                    s[m * n + i] = (freq * (i + 1) as f64).sin();
                }
            }
            sines.push(s);
            eigen.push(lam);
        }
        SineSolver {
            grid: grid.clone(),
            sines,
            eigen,
        }
    }

    /// Cached per-grid instance.
    pub fn for_grid(grid: &Grid) -> Arc<SineSolver> {
        type CacheKey = (Vec<u64>, Vec<usize>);
        static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<SineSolver>>>> = OnceLock::new();
        let key = (
            grid.lengths().iter().map(|l| l.to_bits()).collect::<Vec<_>>(),
            grid.interior_counts().to_vec(),
        );
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("sine solver cache poisoned");
        map.entry(key).or_insert_with(|| Arc::new(SineSolver::new(grid))).clone()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Apply the sine matrix along one axis (its own inverse up to the
    /// factor `2/(n+1)`).
    fn transform_axis(&self, values: &mut [f64], axis: usize) {
        let g = &self.grid;
        let n = g.interior_counts()[axis];
        let stride = g.stride(axis);
        let s = &self.sines[axis];
        let mut line = vec![0.0; n];
        let bases: Vec<usize> = (0..g.node_count())
            .filter(|f| (f / stride).is_multiple_of(n))
            .collect();
        for base in bases {
            for (i, l) in line.iter_mut().enumerate() {
                *l = values[base + i * stride];
            }
            for m in 0..n {
                let row = &s[m * n..(m + 1) * n];
                let mut acc = 0.0;
                for i in 0..n {
                    acc += row[i] * line[i];
                }
                values[base + m * stride] = acc;
            }
        }
    }

    /// Forward transform to mode coefficients.
    pub fn forward(&self, field: &ScalarField) -> Vec<f64> {
        let mut vals = field.values().to_vec();
        let mut scale = 1.0;
        for a in 0..self.grid.dim() {
            self.transform_axis(&mut vals, a);
            scale *= 2.0 / (self.grid.interior_counts()[a] + 1) as f64;
        }
        for v in &mut vals {
            *v *= scale;
        }
        vals
    }

    /// Inverse of `forward`.
    pub fn backward(&self, mut coeffs: Vec<f64>) -> ScalarField {
        for a in 0..self.grid.dim() {
            self.transform_axis(&mut coeffs, a);
        }
        ScalarField::from_values(&self.grid, coeffs).expect("transform preserves finiteness")
    }

    /// Eigenvalue of `-Lap` for the mode at flat index `flat`.
    pub fn eigenvalue(&self, flat: usize) -> f64 {
        let mut acc = 0.0;
        for (axis, lam) in self.eigen.iter().enumerate() {
            let stride = self.grid.stride(axis);
            let n = self.grid.interior_counts()[axis];
            acc += lam[(flat / stride) % n];
        }
        acc
    }

    /// Direct solve of `(a*I - b*Lap) x = rhs`.
    pub fn solve_shifted(&self, a: f64, b: f64, rhs: &ScalarField) -> ScalarField {
        let mut coeffs = self.forward(rhs);
        for (flat, c) in coeffs.iter_mut().enumerate() {
            *c /= a + b * self.eigenvalue(flat);
        }
        self.backward(coeffs)
    }
}

fn conjugate_gradient(
    apply: impl Fn(&ScalarField) -> ScalarField,
    rhs: &ScalarField,
    tol: f64,
    max_iterations: usize,
) -> Result<ScalarField> {
    let grid = rhs.grid().clone();
    let rhs_norm = rhs.l2_norm_sq().sqrt();
    if rhs_norm == 0.0 {
        return Ok(ScalarField::zeros(&grid));
    }
    let mut x = ScalarField::zeros(&grid);
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.l2_norm_sq();
    for _ in 0..max_iterations {
        if rr.sqrt() <= tol * rhs_norm {
            return Ok(x);
        }
        let ap = apply(&p);
        let pap = p.l2_inner(&ap)?;
        if pap <= 0.0 {
            return Err(Error::SolverDiverged {
                iterations: 0,
                residual: rr.sqrt() / rhs_norm,
            });
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rr_new = r.l2_norm_sq();
        let beta = rr_new / rr;
        rr = rr_new;
        let mut p_new = r.clone();
        p_new.axpy(beta, &p);
        p = p_new;
    }
    if rr.sqrt() <= tol * rhs_norm {
        Ok(x)
    } else {
        Err(Error::SolverDiverged {
            iterations: max_iterations,
            residual: rr.sqrt() / rhs_norm,
        })
    }
}

/// Solve `(a*I - b*Lap) x = rhs` with zero Dirichlet boundary, `a >= 0`,
/// `b > 0`.
pub fn shifted_solve(a: f64, b: f64, rhs: &ScalarField, spec: &PoissonSolverSpec) -> Result<ScalarField> {
    spec.validate(rhs.grid())?;
    match spec.method {
        SolveMethod::DirectSine => {
            let solver = SineSolver::for_grid(rhs.grid());
            Ok(solver.solve_shifted(a, b, rhs))
        }
        SolveMethod::ConjugateGradient => conjugate_gradient(
            |x| {
                let mut out = laplacian(x);
                out.scale(-b);
                out.axpy(a, x);
                out
            },
            rhs,
            spec.tolerance,
            spec.max_iterations,
        ),
    }
}

/// Solve the multiplier problem `-Lap(phi) = rhs` with zero Dirichlet data.
pub fn poisson_solve(rhs: &ScalarField, spec: &PoissonSolverSpec) -> Result<ScalarField> {
    shifted_solve(0.0, 1.0, rhs, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random, GridSpec};
    use crate::operators::laplacian;
    use std::f64::consts::PI;

    #[test]
    fn zero_rhs_gives_zero() {
        let g = GridSpec::unit_box(1, 9).unwrap();
        let z = ScalarField::zeros(&g);
        let phi = poisson_solve(&z, &PoissonSolverSpec::default()).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
    }

    #[test]
    fn eigenfunction_inversion() {
        let g = GridSpec::unit_box(1, 23).unwrap();
        let e1 = GridSpec::first_eigenfunction(&g);
        let rhs = e1.scaled(g.first_eigenvalue());
        let phi = poisson_solve(&rhs, &PoissonSolverSpec::default()).unwrap();
        let err = phi.sub(&e1).unwrap().max_abs();
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn discrete_manufactured_solution_2d() {
        // phi* = sin(pi x) sin(2 pi y) samples; rhs = -Lap_h(phi*): recovery to 1e-12
        let g = GridSpec::unit_box(2, 21).unwrap();
        let phi_star = ScalarField::from_fn(&g, |x| (PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        let rhs = laplacian(&phi_star).scaled(-1.0);
        let phi = poisson_solve(&rhs, &PoissonSolverSpec::default()).unwrap();
        let err = phi.sub(&phi_star).unwrap().max_abs();
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn cg_matches_sine_transform() {
        let g = GridSpec::unit_box(2, 15).unwrap();
        let rhs = random::smooth_scalar(&g, 42, 0.7);
        let direct = poisson_solve(&rhs, &PoissonSolverSpec::default()).unwrap();
        let via_cg = poisson_solve(&rhs, &PoissonSolverSpec::cg(1e-12)).unwrap();
        let err = direct.sub(&via_cg).unwrap().max_abs();
        assert!(err < 1e-9 * (1.0 + direct.max_abs()), "err {err}");
    }

    #[test]
    fn cg_iteration_budget_is_enforced() {
        let g = GridSpec::unit_box(1, 9).unwrap();
        let rhs = random::smooth_scalar(&g, 1, 0.5);
        let spec = PoissonSolverSpec {
            method: SolveMethod::ConjugateGradient,
            tolerance: 1e-10,
            max_iterations: 3,
        };
        assert!(poisson_solve(&rhs, &spec).is_err());
    }

    #[test]
    fn direct_solve_residual_is_tiny() {
        let g = GridSpec::unit_box(2, 17).unwrap();
        let rhs = random::smooth_scalar(&g, 9, 0.8);
        let phi = poisson_solve(&rhs, &PoissonSolverSpec::default()).unwrap();
        let resid = laplacian(&phi).scaled(-1.0).sub(&rhs).unwrap().l2_norm_sq().sqrt();
        let scale = rhs.l2_norm_sq().sqrt();
        assert!(resid <= 1e-12 * scale, "residual {resid} vs scale {scale}");
    }

    #[test]
    fn shifted_solve_crank_nicolson_operator() {
        let g = GridSpec::unit_box(1, 31).unwrap();
        let rhs = random::smooth_scalar(&g, 5, 0.6);
        let x = shifted_solve(1.0, 0.01, &rhs, &PoissonSolverSpec::default()).unwrap();
        let mut back = laplacian(&x);
        back.scale(-0.01);
        back.axpy(1.0, &x);
        let err = back.sub(&rhs).unwrap().max_abs();
        assert!(err < 1e-12 * (1.0 + rhs.max_abs()), "err {err}");
    }
}
