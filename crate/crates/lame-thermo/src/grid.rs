//! Discrete box domain and field types.
//!
//! Fields store interior node values only, row-major (last axis fastest);
//! the zero Dirichlet boundary is implicit and never stored. All quadrature
//! is the `h^d`-weighted interior sum, which makes the discrete
//! summation-by-parts identities of the operator module exact.

use crate::error::{Error, Result};
use std::sync::Arc;

/// Uniform tensor-product grid on a box `[0, L_1] x ... x [0, L_d]` with
/// `n_i` interior nodes per axis and spacing `h_i = L_i / (n_i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lengths: Vec<f64>,
    interior_counts: Vec<usize>,
    strides: Vec<usize>,
}

/// Shared handle to a grid; fields hold one of these so that grid equality
/// checks are a pointer comparison in the common case.
pub type Grid = Arc<GridSpec>;

impl GridSpec {
    pub fn new(lengths: &[f64], interior_counts: &[usize]) -> Result<Grid> {
        let dim = lengths.len();
        if dim == 0 || dim > 3 {
            return Err(Error::validation(
                "grid.lengths",
                format!("dimension must be 1, 2 or 3, got {dim}"),
            ));
        }
        if interior_counts.len() != dim {
            return Err(Error::validation(
                "grid.interior_counts",
                "must match the number of side lengths",
            ));
        }
        for (axis, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::validation(
                    format!("grid.lengths[{axis}]"),
                    format!("side length must be positive and finite, got {l}"),
                ));
            }
        }
        for (axis, &n) in interior_counts.iter().enumerate() {
            if n < 3 {
                return Err(Error::validation(
                    format!("grid.interior_counts[{axis}]"),
                    format!("need at least 3 interior nodes per axis, got {n}"),
                ));
            }
        }
        let mut strides = vec![1usize; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * interior_counts[axis + 1];
        }
        Ok(Arc::new(GridSpec {
            lengths: lengths.to_vec(),
            interior_counts: interior_counts.to_vec(),
            strides,
        }))
    }

    /// Unit box helper used throughout tests and benchmarks.
    pub fn unit_box(dim: usize, n: usize) -> Result<Grid> {
        GridSpec::new(&vec![1.0; dim], &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn interior_counts(&self) -> &[usize] {
        &self.interior_counts
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.interior_counts[axis] + 1) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.spacing(a)).collect()
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn node_count(&self) -> usize {
        self.interior_counts.iter().product()
    }

    /// Quadrature weight of one interior node, `h_1 * ... * h_d`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Volume of the box.
    pub fn domain_volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Flat index of an interior multi-index (0-based per axis).
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Multi-index of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dim()];
        for (axis, &s) in self.strides.iter().enumerate() {
            idx[axis] = flat / s;
            flat %= s;
        }
        idx
    }

    /// Physical coordinates of an interior node (multi-index 0-based).
    pub fn coords(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(axis, &i)| (i + 1) as f64 * self.spacing(axis))
            .collect()
    }

    /// First eigenvalue of the negative discrete Laplacian with zero
    /// Dirichlet boundary: `sum_i (4 / h_i^2) sin^2(pi h_i / (2 L_i))`.
    pub fn first_eigenvalue(&self) -> f64 {
        (0..self.dim())
            .map(|a| {
                let h = self.spacing(a);
                let s = (std::f64::consts::PI * h / (2.0 * self.lengths[a])).sin();
                4.0 / (h * h) * s * s
            })
            .sum()
    }

    /// Samples of the first eigenfunction `prod_i sin(pi x_i / L_i)`,
    /// normalized to unit quadrature L2 norm.
    pub fn first_eigenfunction(grid: &Grid) -> ScalarField {
        let mut f = ScalarField::from_fn(grid, |x| {
            x.iter()
                .zip(grid.lengths())
                .map(|(&xi, &li)| (std::f64::consts::PI * xi / li).sin())
                .product()
        });
        let norm = f.l2_norm();
        f.scale(1.0 / norm);
        f
    }
}

fn same_grid(a: &Grid, b: &Grid) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn check_same_grid(a: &Grid, b: &Grid, what: &str) -> Result<()> {
    if same_grid(a, b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{what}: {:?}/{:?} vs {:?}/{:?}",
            a.lengths(),
            a.interior_counts(),
            b.lengths(),
            b.interior_counts()
        )))
    }
}

/// Scalar field over the interior nodes of a grid. Boundary values are
/// implicitly zero.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::validation(
                "field.values",
                format!("expected {} values, got {}", grid.node_count(), values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("field value at flat node {i}"),
            });
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    /// Sample a function of the physical coordinates at the interior nodes.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        let mut idx = vec![0usize; grid.dim()];
        for flat in 0..grid.node_count() {
            let mut rem = flat;
            for (axis, &s) in grid.strides.iter().enumerate() {
                idx[axis] = rem / s;
                rem %= s;
            }
            values.push(f(&grid.coords(&idx)));
        }
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Quadrature inner product `h^d * sum_i a_i b_i`. The summation order is
    /// fixed, so results are bitwise reproducible.
    pub fn l2_inner(&self, other: &ScalarField) -> Result<f64> {
        check_same_grid(&self.grid, &other.grid, "l2_inner")?;
        let mut acc = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a * b;
        }
        Ok(acc * self.grid.cell_volume())
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for a in &self.values {
            acc += a * a;
        }
        acc * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &ScalarField) {
        debug_assert!(same_grid(&self.grid, &other.grid));
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += c * o;
        }
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid, "add")?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(ScalarField {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid, "sub")?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(ScalarField {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Vector field: one scalar component per axis, all on the same grid.
#[derive(Debug, Clone)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_components(components: Vec<ScalarField>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::validation("vector.components", "no components"));
        }
        let grid = components[0].grid().clone();
        if components.len() != grid.dim() {
            return Err(Error::validation(
                "vector.components",
                format!("expected {} components, got {}", grid.dim(), components.len()),
            ));
        }
        for c in &components[1..] {
            check_same_grid(&grid, c.grid(), "vector components")?;
        }
        Ok(VectorField { components })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let components = (0..grid.dim())
            .map(|axis| ScalarField::from_fn(grid, |x| f(x, axis)))
            .collect();
        VectorField { components }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.components[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut ScalarField {
        &mut self.components[axis]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn l2_inner(&self, other: &VectorField) -> Result<f64> {
        check_same_grid(self.grid(), other.grid(), "vector l2_inner")?;
        let mut acc = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            acc += a.l2_inner(b)?;
        }
        Ok(acc)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.components.iter().map(|c| c.l2_norm_sq()).sum()
    }

    pub fn scale(&mut self, c: f64) {
        for comp in &mut self.components {
            comp.scale(c);
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    pub fn axpy(&mut self, c: f64, other: &VectorField) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.axpy(c, b);
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField { components })
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField { components })
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0f64, |m, c| m.max(c.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }
}

/// The state triple `(u, u_t, theta)` at one time instant.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub u: VectorField,
    pub v: VectorField,
    pub theta: ScalarField,
}

impl State {
    pub fn zeros(grid: &Grid, t: f64) -> Self {
        State {
            t,
            u: VectorField::zeros(grid),
            v: VectorField::zeros(grid),
            theta: ScalarField::zeros(grid),
        }
    }

    pub fn new(t: f64, u: VectorField, v: VectorField, theta: ScalarField) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::NonFinite {
                context: "state time".into(),
            });
        }
        check_same_grid(u.grid(), v.grid(), "state u/v")?;
        check_same_grid(u.grid(), theta.grid(), "state u/theta")?;
        Ok(State { t, u, v, theta })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.u.is_finite() && self.v.is_finite() && self.theta.is_finite()
    }

    /// Componentwise difference `self - other`, keeping `self`'s time stamp.
    pub fn sub(&self, other: &State) -> Result<State> {
        Ok(State {
            t: self.t,
            u: self.u.sub(&other.u)?,
            v: self.v.sub(&other.v)?,
            theta: self.theta.sub(&other.theta)?,
        })
    }

    pub fn scale(&mut self, c: f64) {
        self.u.scale(c);
        self.v.scale(c);
        self.theta.scale(c);
    }

    pub fn axpy(&mut self, c: f64, other: &State) {
        self.u.axpy(c, &other.u);
        self.v.axpy(c, &other.v);
        self.theta.axpy(c, &other.theta);
    }
}

/// Deterministic smooth random fields built from low sine modes; used for
/// ensemble initial data and property tests. Modes above `band_fraction`
/// of the per-axis spectrum are left empty.
pub mod random {
    use super::{Grid, ScalarField, VectorField};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn smooth_scalar(grid: &Grid, seed: u64, band_fraction: f64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        smooth_scalar_with(grid, &mut rng, band_fraction)
    }

    pub fn smooth_scalar_with(grid: &Grid, rng: &mut ChaCha8Rng, band_fraction: f64) -> ScalarField {
        let dim = grid.dim();
        let band: Vec<usize> = (0..dim)
            .map(|a| {
                let n = grid.interior_counts()[a];
                // cap the mode count so a draw stays cheap on fine grids
                ((n as f64 * band_fraction).floor() as usize).clamp(1, n.min(8))
            })
            .collect();
        let total: usize = band.iter().product();
        let mut amps = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut mode = vec![0usize; dim];
            for axis in (0..dim).rev() {
                mode[axis] = rem % band[axis];
                rem /= band[axis];
            }
            amps.push((mode, rng.gen_range(-1.0..1.0)));
        }
        synth(grid, &amps)
    }

    fn synth(grid: &Grid, amps: &[(Vec<usize>, f64)]) -> ScalarField {
        ScalarField::from_fn(grid, |x| {
            let mut v = 0.0;
            for (mode, a) in amps {
                let mut prod = *a;
                for (axis, &m) in mode.iter().enumerate() {
                    let k = (m + 1) as f64 * std::f64::consts::PI / grid.lengths()[axis];
                    prod *= (k * x[axis]).sin();
                }
                // mild spectral decay keeps the fields smooth
                let w: f64 = mode.iter().map(|&m| (m + 1) as f64).product();
                v += prod / w;
            }
            v
        })
    }

    pub fn smooth_vector(grid: &Grid, seed: u64, band_fraction: f64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = (0..grid.dim())
            .map(|_| smooth_scalar_with(grid, &mut rng, band_fraction))
            .collect();
        VectorField::from_components(comps).expect("components share the grid")
    }
}
