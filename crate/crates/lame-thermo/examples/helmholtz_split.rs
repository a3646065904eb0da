//! Split a 2-D vector field into curl-free and divergence-free parts and
//! report the defect measures.
//!
//! ```text
//! cargo run --release --example helmholtz_split
//! ```

use lame_thermo::grid::{random, GridSpec, VectorField};
use lame_thermo::operators::{curl, divergence, gradient, helmholtz_decompose, PoissonSolverSpec};
use std::f64::consts::PI;

fn main() -> lame_thermo::Result<()> {
    let grid = GridSpec::unit_box(2, 63)?;
    let spec = PoissonSolverSpec::default();

    // a swirl plus a gradient component
    let swirl = VectorField::from_fn(&grid, |x, axis| {
        let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
        let (cx, cy) = ((PI * x[0]).cos(), (PI * x[1]).cos());
        match axis {
            0 => -sx * sx * sy * cy,
            _ => sy * sy * sx * cx,
        }
    });
    let potential = random::smooth_scalar(&grid, 7, 0.3);
    let mut field = swirl.clone();
    field.axpy(1.0, &gradient(&potential));

    let parts = helmholtz_decompose(&field, &spec)?;
    println!("input:      |div u|  = {:12.4e}", divergence(&field).l2_norm_sq().sqrt());
    println!("            |curl u| = {:12.4e}", curl(&field).l2_norm_sq().sqrt());
    println!("curl-free:  |u_c|    = {:12.4e}", parts.u_c.l2_norm_sq().sqrt());
    println!("            |curl u_c| (max) = {:.2e}", parts.curl_residual);
    println!("div-free:   |u_d|    = {:12.4e}", parts.u_d.l2_norm_sq().sqrt());
    println!("            |div u_d| = {:.4e}", parts.div_residual);
    println!("cross term (u_c, u_d) = {:.4e}", parts.l2_cross);

    // the swirl is divergence-free in the continuum, so u_c lands close to
    // the gradient part (and converges to it under refinement)
    let recovered = parts.u_c.sub(&gradient(&potential))?.l2_norm_sq().sqrt();
    let scale = gradient(&potential).l2_norm_sq().sqrt();
    println!("\n|u_c - grad(potential)| / |grad(potential)| = {:.4e}", recovered / scale);
    Ok(())
}
