//! Sample-based validation of the structural assumptions on the coefficients
//! and the nonlinearity, including a deliberately supercritical exponent.
//!
//! ```text
//! cargo run --release --example assumption_report
//! ```

use lame_thermo::grid::GridSpec;
use lame_thermo::model::{validate_assumptions, ModelSpec, Nonlinearity, TimeCoefficient};

fn show(label: &str, report: &lame_thermo::model::AssumptionReport) {
    println!("{label}: {}", if report.pass { "PASS" } else { "FAIL" });
    for c in &report.checks {
        println!(
            "  {:<18} {}  max violation {:10.3e}  ({})",
            c.name,
            if c.pass { "ok  " } else { "FAIL" },
            c.max_violation,
            c.detail
        );
    }
    println!();
}

fn main() -> lame_thermo::Result<()> {
    let grid_1d = GridSpec::unit_box(1, 31)?;
    let model = ModelSpec {
        mu: 1.0,
        lambda: 0.0,
        alpha: TimeCoefficient::Sinusoidal { mean: 1.0, amplitude: 0.3, period: 2.0, phase: 0.0 },
        kappa: TimeCoefficient::constant(1.0),
        nonlinearity: Nonlinearity::Power { c: 1.0, rho: 2.0, eta: 1.0 },
    };
    show("1-D, power rho = 2", &validate_assumptions(&model, &grid_1d, 2000)?);

    // the growth exponent window closes in three dimensions
    let grid_3d = GridSpec::unit_box(3, 5)?;
    let bad = ModelSpec {
        nonlinearity: Nonlinearity::Power { c: 1.0, rho: 4.0, eta: 1.0 },
        ..model.clone()
    };
    show("3-D, power rho = 4 (supercritical)", &validate_assumptions(&bad, &grid_3d, 1000)?);
    Ok(())
}
