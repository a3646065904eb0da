//! Measured refinement orders for the spatial operators and the integrator.
//!
//! ```text
//! cargo run --release --example convergence_orders
//! ```

use lame_thermo::operators::PoissonSolverSpec;
use lame_thermo::studies;

fn print_series(s: &lame_thermo::studies::RefinementSeries) {
    println!("{}:", s.name);
    for (i, e) in s.errors.iter().enumerate() {
        let order = if i > 0 { format!("{:6.3}", s.orders[i - 1]) } else { "     -".into() };
        println!("  level {:>6}  error {:12.4e}  order {order}", s.parameter[i], e);
    }
}

fn main() -> lame_thermo::Result<()> {
    let solver = PoissonSolverSpec::default();
    let ns = [31usize, 63, 127];

    print_series(&studies::poisson_mms_orders(&ns, &solver)?);
    print_series(&studies::divgrad_defect_orders(&ns)?);

    let helm = studies::helmholtz_orders(&ns, &solver)?;
    print_series(&helm.div_residual);
    print_series(&helm.recovery);
    println!("  max curl of the gradient part: {:.2e}\n", helm.max_curl);

    let integ = studies::integrator_orders(31, &[1e-2, 5e-3, 2.5e-3])?;
    print_series(&integ.wave);
    print_series(&integ.heat);
    print_series(&integ.forced_heat);

    let energy = studies::energy_identity_orders(&[
        (63, 1.0 / 512.0),
        (127, 1.0 / 1024.0),
        (255, 1.0 / 2048.0),
    ])?;
    print_series(&energy);
    Ok(())
}
