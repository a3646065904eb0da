//! Discrete differential operators, the Lamé operator, energy bilinear forms,
//! Dirichlet Poisson solves and the Helmholtz-Hodge decomposition.
//!
//! Two stencil families coexist on purpose. Field-building operators
//! (`gradient`, `divergence`, `curl`) are second-order central differences
//! with zero ghost values; they pair exactly under summation by parts,
//! `(gradient(s), u) = -(s, divergence(u))`, and `curl(gradient(s))` vanishes
//! identically. Energy quadratic forms (`h1_inner`, `div_form_inner`,
//! `h01_inner`) are built on the compact Laplacian pairing
//! `(a, -laplacian(b))`, for which the discrete Poincaré inequality
//! `lambda_1^h ||u||^2 <= ||grad u||^2` is exact with equality at the first
//! eigenfunction. Mixing the two where it matters is always stated.

mod constants;
mod solve;

pub use constants::{estimate_operator_constants, OperatorConstants, PowerIterationSpec};
pub use solve::{poisson_solve, shifted_solve, PoissonSolverSpec, SineSolver, SolveMethod};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, State, VectorField};

fn line_bases(grid: &GridSpec, axis: usize) -> Vec<usize> {
    let stride = grid.stride(axis);
    let n = grid.interior_counts()[axis];
    (0..grid.node_count())
        .filter(|f| (f / stride).is_multiple_of(n))
        .collect()
}

/// Central difference along one axis, zero ghost values outside the interior.
pub fn diff_central(s: &ScalarField, axis: usize) -> ScalarField {
    let g = s.grid().clone();
    let n = g.interior_counts()[axis];
    let stride = g.stride(axis);
    let inv2h = 1.0 / (2.0 * g.spacing(axis));
    let src = s.values();
    let mut out = ScalarField::zeros(&g);
    {
        let o = out.values_mut();
        for base in line_bases(&g, axis) {
            for i in 0..n {
                let idx = base + i * stride;
                let prev = if i > 0 { src[idx - stride] } else { 0.0 };
                let next = if i + 1 < n { src[idx + stride] } else { 0.0 };
                o[idx] = (next - prev) * inv2h;
            }
        }
    }
    out
}

/// Compact second difference along one axis, zero Dirichlet ghosts.
pub fn diff2_compact(s: &ScalarField, axis: usize) -> ScalarField {
    let g = s.grid().clone();
    let n = g.interior_counts()[axis];
    let stride = g.stride(axis);
    let invh2 = 1.0 / (g.spacing(axis) * g.spacing(axis));
    let src = s.values();
    let mut out = ScalarField::zeros(&g);
    {
        let o = out.values_mut();
        for base in line_bases(&g, axis) {
            for i in 0..n {
                let idx = base + i * stride;
                let prev = if i > 0 { src[idx - stride] } else { 0.0 };
                let next = if i + 1 < n { src[idx + stride] } else { 0.0 };
                o[idx] = (prev - 2.0 * src[idx] + next) * invh2;
            }
        }
    }
    out
}

pub fn gradient(s: &ScalarField) -> VectorField {
    let comps = (0..s.grid().dim()).map(|a| diff_central(s, a)).collect();
    VectorField::from_components(comps).expect("components share the grid")
}

pub fn divergence(u: &VectorField) -> ScalarField {
    let mut out = diff_central(u.component(0), 0);
    for a in 1..u.dim() {
        out.axpy(1.0, &diff_central(u.component(a), a));
    }
    out
}

/// Central difference with second-order skewed stencils at the two nodes
/// adjacent to the boundary, using no ghost values at all. Consistent for
/// smooth fields whose boundary trace is unknown (unlike `diff_central`,
/// which presumes a vanishing trace).
pub fn diff_skewed(s: &ScalarField, axis: usize) -> ScalarField {
    let g = s.grid().clone();
    let n = g.interior_counts()[axis];
    let stride = g.stride(axis);
    let inv2h = 1.0 / (2.0 * g.spacing(axis));
    let src = s.values();
    let mut out = ScalarField::zeros(&g);
    {
        let o = out.values_mut();
        for base in line_bases(&g, axis) {
            for i in 0..n {
                let idx = base + i * stride;
                o[idx] = if i == 0 {
                    (-3.0 * src[idx] + 4.0 * src[idx + stride] - src[idx + 2 * stride]) * inv2h
                } else if i + 1 == n {
                    (3.0 * src[idx] - 4.0 * src[idx - stride] + src[idx - 2 * stride]) * inv2h
                } else {
                    (src[idx + stride] - src[idx - stride]) * inv2h
                };
            }
        }
    }
    out
}

/// Divergence with skewed one-sided stencils near the boundary; used by the
/// Helmholtz decomposition where the input's boundary trace is not known to
/// vanish.
pub fn divergence_skewed(u: &VectorField) -> ScalarField {
    let mut out = diff_skewed(u.component(0), 0);
    for a in 1..u.dim() {
        out.axpy(1.0, &diff_skewed(u.component(a), a));
    }
    out
}

/// Curl of a vector field: the zero scalar in 1-D, the scalar
/// `dx u_y - dy u_x` in 2-D, the full 3-vector in 3-D.
pub enum Curl {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Curl {
    pub fn max_abs(&self) -> f64 {
        match self {
            Curl::Scalar(s) => s.max_abs(),
            Curl::Vector(v) => v.max_abs(),
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            Curl::Scalar(s) => s.l2_norm_sq(),
            Curl::Vector(v) => v.l2_norm_sq(),
        }
    }
}

pub fn curl(u: &VectorField) -> Curl {
    match u.dim() {
        1 => Curl::Scalar(ScalarField::zeros(u.grid())),
        2 => {
            let mut c = diff_central(u.component(1), 0);
            c.axpy(-1.0, &diff_central(u.component(0), 1));
            Curl::Scalar(c)
        }
        3 => {
            let comp = |j: usize, k: usize| {
                let mut c = diff_central(u.component(k), j);
                c.axpy(-1.0, &diff_central(u.component(j), k));
                c
            };
            Curl::Vector(
                VectorField::from_components(vec![comp(1, 2), comp(2, 0), comp(0, 1)])
                    .expect("components share the grid"),
            )
        }
        d => unreachable!("grid dimension {d} out of range"),
    }
}

/// Compact (2d+1)-point Laplacian with zero Dirichlet ghosts. The discrete
/// first eigenfunction is an exact eigenvector with eigenvalue
/// `-lambda_1^h`.
pub fn laplacian(s: &ScalarField) -> ScalarField {
    let mut out = diff2_compact(s, 0);
    for a in 1..s.grid().dim() {
        out.axpy(1.0, &diff2_compact(s, a));
    }
    out
}

pub fn vector_laplacian(u: &VectorField) -> VectorField {
    let comps = u.components().iter().map(laplacian).collect();
    VectorField::from_components(comps).expect("components share the grid")
}

/// `grad(div u)` with compact second differences on the diagonal and central
/// cross-derivatives, so that the operator is symmetric negative semidefinite
/// and collapses to the compact second difference in 1-D.
pub fn grad_div(u: &VectorField) -> VectorField {
    let d = u.dim();
    let mut comps = Vec::with_capacity(d);
    for i in 0..d {
        let mut c = diff2_compact(u.component(i), i);
        for j in 0..d {
            if j != i {
                c.axpy(1.0, &diff_central(&diff_central(u.component(j), j), i));
            }
        }
        comps.push(c);
    }
    VectorField::from_components(comps).expect("components share the grid")
}

/// The Lamé operator `mu*Lap(u) + (lambda+mu)*grad(div u)`.
/// In 1-D this is `(2*mu+lambda)` times the compact second difference.
pub fn lame_apply(u: &VectorField, mu: f64, lambda: f64) -> VectorField {
    let mut out = vector_laplacian(u);
    out.scale(mu);
    let mut gd = grad_div(u);
    gd.scale(lambda + mu);
    out.axpy(1.0, &gd);
    out
}

/// H01 seminorm pairing `(a, -laplacian(b))`; equals the quadrature sum of
/// forward-difference products over all grid faces, hence nonnegative and
/// Poincaré-sharp.
pub fn h1_inner(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    Ok(-a.l2_inner(&laplacian(b))?)
}

pub fn h1_seminorm_sq(s: &ScalarField) -> f64 {
    h1_inner(s, s).expect("same grid")
}

pub fn h1_vec_inner(u: &VectorField, w: &VectorField) -> Result<f64> {
    let mut acc = 0.0;
    for (a, b) in u.components().iter().zip(w.components()) {
        acc += h1_inner(a, b)?;
    }
    Ok(acc)
}

pub fn h1_vec_seminorm_sq(u: &VectorField) -> f64 {
    h1_vec_inner(u, u).expect("same grid")
}

/// Divergence quadratic form `(u, -grad_div(w))`: symmetric, positive
/// semidefinite, and identical to the H01 seminorm in 1-D.
pub fn div_form_inner(u: &VectorField, w: &VectorField) -> Result<f64> {
    Ok(-u.l2_inner(&grad_div(w))?)
}

pub fn div_form_sq(u: &VectorField) -> f64 {
    div_form_inner(u, u).expect("same grid")
}

/// Inner product of the displacement space:
/// `mu * int grad(u1):grad(u2) + (lambda+mu) * int div(u1) div(u2)`,
/// realized as `-(u1, lame_apply(u2))`. Satisfies
/// `mu ||grad u||^2 <= ||u||^2 <= (mu + N(lambda+mu)) ||grad u||^2`
/// for `lambda + mu >= 0`.
pub fn h01_inner(u1: &VectorField, u2: &VectorField, mu: f64, lambda: f64) -> Result<f64> {
    if mu <= 0.0 {
        return Err(Error::validation("mu", "must be positive"));
    }
    Ok(-u1.l2_inner(&lame_apply(u2, mu, lambda))?)
}

pub fn h01_norm_sq(u: &VectorField, mu: f64, lambda: f64) -> Result<f64> {
    h01_inner(u, u, mu, lambda)
}

/// Squared phase-space norm `||u||^2_{H01} + ||u_t||^2 + ||theta||^2`.
pub fn hc_norm_sq(s: &State, mu: f64, lambda: f64) -> Result<f64> {
    Ok(h01_norm_sq(&s.u, mu, lambda)? + s.v.l2_norm_sq() + s.theta.l2_norm_sq())
}

/// Hc inner product of two states (bilinear form matching `hc_norm_sq`).
pub fn hc_inner(a: &State, b: &State, mu: f64, lambda: f64) -> Result<f64> {
    Ok(h01_inner(&a.u, &b.u, mu, lambda)?
        + a.v.l2_inner(&b.v)?
        + a.theta.l2_inner(&b.theta)?)
}

/// Boundary quadrature of `|div u|^2` over the box faces for a field
/// vanishing on the boundary: tangential contributions are zero, the normal
/// derivative is taken one-sided at second order. Exact boundary coverage in
/// 1-D (the two endpoints); in higher dimensions the face quadrature carries
/// weight `prod_{i != axis} h_i`.
pub fn boundary_div_sq(u: &VectorField) -> f64 {
    let g = u.grid().clone();
    let mut acc = 0.0;
    for a in 0..g.dim() {
        let n = g.interior_counts()[a];
        let stride = g.stride(a);
        let inv2h = 1.0 / (2.0 * g.spacing(a));
        let weight: f64 = (0..g.dim()).filter(|&i| i != a).map(|i| g.spacing(i)).product();
        let vals = u.component(a).values();
        for base in line_bases(&g, a) {
            let low = (4.0 * vals[base] - vals[base + stride]) * inv2h;
            let hi_idx = base + (n - 1) * stride;
            let high = (-4.0 * vals[hi_idx] + vals[hi_idx - stride]) * inv2h;
            acc += (low * low + high * high) * weight;
        }
    }
    acc
}

/// Boundary quadrature of `|dw/dnu|^2` for a Dirichlet scalar.
pub fn boundary_normal_derivative_sq(w: &ScalarField) -> f64 {
    let g = w.grid().clone();
    let mut acc = 0.0;
    for a in 0..g.dim() {
        let n = g.interior_counts()[a];
        let stride = g.stride(a);
        let inv2h = 1.0 / (2.0 * g.spacing(a));
        let weight: f64 = (0..g.dim()).filter(|&i| i != a).map(|i| g.spacing(i)).product();
        let vals = w.values();
        for base in line_bases(&g, a) {
            let low = (4.0 * vals[base] - vals[base + stride]) * inv2h;
            let hi_idx = base + (n - 1) * stride;
            let high = (-4.0 * vals[hi_idx] + vals[hi_idx - stride]) * inv2h;
            acc += (low * low + high * high) * weight;
        }
    }
    acc
}

/// Result of the Helmholtz-Hodge splitting `u = u_c + u_d`.
pub struct HelmholtzParts {
    /// Curl-free part, the gradient of the Dirichlet potential.
    pub u_c: VectorField,
    /// Divergence-free remainder `u - u_c`.
    pub u_d: VectorField,
    /// The potential with `-Lap(psi) = -div(u)`.
    pub psi: ScalarField,
    /// `||div u_d||` measured with the boundary-aware composition.
    pub div_residual: f64,
    /// `max |curl u_c|`; zero to roundoff by construction.
    pub curl_residual: f64,
    /// `(u_c, u_d)` quadrature cross term.
    pub l2_cross: f64,
}

/// Split `u` into a curl-free gradient part and a divergence-free remainder:
/// solve `-Lap(psi) = -div(u)` with zero Dirichlet `psi`, set
/// `u_c = gradient(psi)`, `u_d = u - u_c`.
///
/// In 1-D every field is curl-free and the splitting is the identity.
/// The input divergence uses the skewed near-boundary stencils so that
/// fields with a nonvanishing normal trace (gradients of Dirichlet scalars)
/// are decomposed consistently.
pub fn helmholtz_decompose(u: &VectorField, spec: &PoissonSolverSpec) -> Result<HelmholtzParts> {
    let grid = u.grid().clone();
    if grid.dim() == 1 {
        let psi = poisson_solve(&divergence(u).scaled(-1.0), spec)?;
        let u_c = u.clone();
        let u_d = VectorField::zeros(&grid);
        return Ok(HelmholtzParts {
            l2_cross: u_c.l2_inner(&u_d)?,
            curl_residual: 0.0,
            div_residual: 0.0,
            psi,
            u_c,
            u_d,
        });
    }
    let rhs = divergence_skewed(u).scaled(-1.0);
    let psi = poisson_solve(&rhs, spec)?;
    let u_c = gradient(&psi);
    let u_d = u.sub(&u_c)?;
    // div(u_d) with the same boundary-aware divergence applied to u_c
    let mut div_ud = divergence_skewed(u);
    div_ud.axpy(-1.0, &divergence_skewed(&u_c));
    let curl_residual = curl(&u_c).max_abs();
    Ok(HelmholtzParts {
        div_residual: div_ud.l2_norm_sq().sqrt(),
        curl_residual,
        l2_cross: u_c.l2_inner(&u_d)?,
        psi,
        u_c,
        u_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random, Grid, GridSpec};
    use std::f64::consts::PI;

    fn grid_1d(n: usize) -> Grid {
        GridSpec::unit_box(1, n).unwrap()
    }

    #[test]
    fn gradient_of_zero() {
        let g = grid_1d(7);
        let z = ScalarField::zeros(&g);
        assert_eq!(gradient(&z).max_abs(), 0.0);
    }

    #[test]
    fn laplacian_eigenfunction_identity() {
        let g = grid_1d(17);
        let e1 = GridSpec::first_eigenfunction(&g);
        let lam = g.first_eigenvalue();
        let mut r = laplacian(&e1);
        r.axpy(lam, &e1);
        assert!(r.max_abs() < 1e-12 * lam, "residual {}", r.max_abs());
    }

    #[test]
    fn curl_of_gradient_vanishes_2d() {
        let g = GridSpec::unit_box(2, 13).unwrap();
        for seed in 0..20 {
            let s = random::smooth_scalar(&g, seed, 0.6);
            let c = curl(&gradient(&s));
            assert!(c.max_abs() < 1e-12 * (1.0 + s.max_abs()), "seed {seed}");
        }
    }

    #[test]
    fn lame_collapses_in_1d() {
        let g = grid_1d(31);
        let e1 = GridSpec::first_eigenfunction(&g);
        let u = VectorField::from_components(vec![e1.clone()]).unwrap();
        let lam1 = g.first_eigenvalue();
        let out = lame_apply(&u, 1.0, 0.5);
        // (2*mu+lambda) * Dxx = -2.5 * lambda_1^h on the eigenfunction
        let mut r = out.component(0).clone();
        r.axpy(2.5 * lam1, &e1);
        assert!(r.max_abs() < 1e-11 * lam1, "residual {}", r.max_abs());
    }

    #[test]
    fn lame_symmetry_random_pairs() {
        let g = GridSpec::unit_box(2, 11).unwrap();
        for seed in 0..10 {
            let u = random::smooth_vector(&g, 100 + seed, 0.5);
            let w = random::smooth_vector(&g, 200 + seed, 0.5);
            let a = lame_apply(&u, 1.3, 0.4);
            let b = lame_apply(&w, 1.3, 0.4);
            let lhs = a.l2_inner(&w).unwrap();
            let rhs = u.l2_inner(&b).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1e-30);
            assert!((lhs - rhs).abs() / scale < 1e-11, "seed {seed}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn summation_by_parts_exact() {
        let g = GridSpec::unit_box(2, 9).unwrap();
        for seed in 0..10 {
            let s = random::smooth_scalar(&g, 300 + seed, 0.7);
            let u = random::smooth_vector(&g, 400 + seed, 0.7);
            let lhs = gradient(&s).l2_inner(&u).unwrap();
            let rhs = -s.l2_inner(&divergence(&u)).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1e-30);
            assert!((lhs - rhs).abs() / scale < 1e-11, "seed {seed}");
        }
    }

    #[test]
    fn poincare_sharp_with_compact_pairing() {
        let g = grid_1d(21);
        let lam1 = g.first_eigenvalue();
        for seed in 0..100 {
            let s = random::smooth_scalar(&g, 500 + seed, 0.9);
            let lhs = lam1 * s.l2_norm_sq();
            let rhs = h1_seminorm_sq(&s);
            assert!(lhs <= rhs * (1.0 + 1e-12), "seed {seed}: {lhs} > {rhs}");
        }
        let e1 = GridSpec::first_eigenfunction(&g);
        let gap = (h1_seminorm_sq(&e1) - lam1 * e1.l2_norm_sq()).abs();
        assert!(gap < 1e-10 * lam1, "equality gap {gap}");
    }

    #[test]
    fn h01_collapse_and_equivalence() {
        // 1-D, mu=1, lambda=0: both terms are the same quadratic form.
        let g = grid_1d(15);
        let u = random::smooth_vector(&g, 7, 0.8);
        let h01 = h01_norm_sq(&u, 1.0, 0.0).unwrap();
        let both = 2.0 * h1_vec_seminorm_sq(&u);
        assert!((h01 - both).abs() / both < 1e-12);

        // zero input
        let z = VectorField::zeros(&g);
        assert_eq!(h01_norm_sq(&z, 1.0, 0.0).unwrap(), 0.0);

        // 2-D norm equivalence with the stated constants, 100 draws
        let g2 = GridSpec::unit_box(2, 9).unwrap();
        let (mu, lambda) = (1.0, 0.5);
        let upper = mu + 2.0 * (lambda + mu);
        for seed in 0..100 {
            let u = random::smooth_vector(&g2, 900 + seed, 0.9);
            let gr = h1_vec_seminorm_sq(&u);
            let h = h01_norm_sq(&u, mu, lambda).unwrap();
            assert!(mu * gr <= h * (1.0 + 1e-12), "seed {seed}");
            assert!(h <= upper * gr * (1.0 + 1e-12), "seed {seed}");
        }
    }

    #[test]
    fn hc_norm_examples() {
        let g = grid_1d(3);
        let zero = State::zeros(&g, 0.0);
        assert_eq!(hc_norm_sq(&zero, 1.0, 0.0).unwrap(), 0.0);

        let mut s = State::zeros(&g, 0.0);
        s.theta = ScalarField::from_fn(&g, |_| 1.0);
        let v = hc_norm_sq(&s, 1.0, 0.0).unwrap();
        assert!((v - 0.75).abs() < 1e-15);

        let mut r = State::zeros(&g, 0.0);
        r.u = random::smooth_vector(&g, 3, 0.9);
        r.v = random::smooth_vector(&g, 4, 0.9);
        r.theta = random::smooth_scalar(&g, 5, 0.9);
        let base = hc_norm_sq(&r, 1.0, 0.0).unwrap();
        let mut r2 = r.clone();
        r2.scale(2.0);
        let scaled = hc_norm_sq(&r2, 1.0, 0.0).unwrap();
        assert!((scaled - 4.0 * base).abs() / base < 1e-12);
    }

    #[test]
    fn div_grad_defect_is_second_order() {
        // ||div(grad s) - laplacian(s)|| = O(h^2) with the skewed composition
        let mut errors = Vec::new();
        for &n in &[15usize, 31, 63] {
            let g = GridSpec::unit_box(2, n).unwrap();
            let s = ScalarField::from_fn(&g, |x| {
                (PI * x[0]).sin() * (2.0 * PI * x[1]).sin() + 0.3 * (2.0 * PI * x[0]).sin() * (PI * x[1]).sin()
            });
            let wide = divergence_skewed(&gradient(&s));
            let compact = laplacian(&s);
            errors.push(wide.sub(&compact).unwrap().l2_norm_sq().sqrt());
        }
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "order {order}, errors {errors:?}");
        }
    }

    #[test]
    fn boundary_div_1d_endpoints() {
        // u(x) = x(1-x): du/dx = 1-2x -> 1 at x=0, -1 at x=1, squared sum 2
        let g = grid_1d(255);
        let u = VectorField::from_fn(&g, |x, _| x[0] * (1.0 - x[0]));
        let b = boundary_div_sq(&u);
        assert!((b - 2.0).abs() < 1e-3, "got {b}");
    }

    #[test]
    fn helmholtz_trivial_in_1d() {
        let g = grid_1d(31);
        let s = random::smooth_scalar(&g, 11, 0.5);
        let u = gradient(&s);
        let parts = helmholtz_decompose(&u, &PoissonSolverSpec::default()).unwrap();
        assert!(parts.u_d.l2_norm_sq().sqrt() <= 1e-10);
        assert_eq!(parts.curl_residual, 0.0);
    }

    #[test]
    fn helmholtz_recovers_gradients_at_second_order() {
        let spec = PoissonSolverSpec::default();
        let mut errors = Vec::new();
        let mut div_res = Vec::new();
        let mut cross = Vec::new();
        for &n in &[31usize, 63, 127] {
            let g = GridSpec::unit_box(2, n).unwrap();
            let s = ScalarField::from_fn(&g, |x| {
                (PI * x[0]).sin() * (PI * x[1]).sin()
                    + 0.4 * (2.0 * PI * x[0]).sin() * (3.0 * PI * x[1]).sin()
            });
            let u = gradient(&s);
            let parts = helmholtz_decompose(&u, &spec).unwrap();
            assert!(parts.curl_residual < 1e-12 * (1.0 + u.max_abs()));
            errors.push(parts.u_c.sub(&u).unwrap().l2_norm_sq().sqrt());
            div_res.push(parts.div_residual);
            let norm_sq = u.l2_norm_sq();
            cross.push(parts.l2_cross.abs() / norm_sq);
        }
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "recovery order {order}, errors {errors:?}");
        }
        for w in div_res.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "div residual order {order}, values {div_res:?}");
        }
        for w in cross.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "orthogonality order {order}, values {cross:?}");
        }
    }

    #[test]
    fn helmholtz_idempotent_on_curl_free_part() {
        let g = GridSpec::unit_box(2, 21).unwrap();
        let spec = PoissonSolverSpec::default();
        let u = random::smooth_vector(&g, 77, 0.5);
        let first = helmholtz_decompose(&u, &spec).unwrap();
        let second = helmholtz_decompose(&first.u_c, &spec).unwrap();
        let first_ud = first.u_d.l2_norm_sq().sqrt();
        let second_ud = second.u_d.l2_norm_sq().sqrt();
        assert!(
            second_ud <= first_ud + 1e-12,
            "second pass u_d {second_ud} vs first {first_ud}"
        );
        assert!(first.u_c.add(&first.u_d).unwrap().sub(&u).unwrap().max_abs() < 1e-13);
    }
}
