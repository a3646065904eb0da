//! Integrate the coupled system from a displaced state with no forcing and
//! watch the energy drain through the thermal channel.
//!
//! ```text
//! cargo run --release --example energy_decay
//! ```

use lame_thermo::diagnostics::energy;
use lame_thermo::grid::{GridSpec, State, VectorField};
use lame_thermo::integrator::{run, SchemeConfig};
use lame_thermo::model::{ForcingSymbol, ModelSpec, Nonlinearity, TimeCoefficient};

fn main() -> lame_thermo::Result<()> {
    let grid = GridSpec::unit_box(1, 63)?;
    let model = ModelSpec {
        mu: 1.0,
        lambda: 0.0,
        alpha: TimeCoefficient::constant(1.0),
        kappa: TimeCoefficient::constant(1.0),
        nonlinearity: Nonlinearity::Power { c: 1.0, rho: 2.0, eta: 1.0 },
    };

    let e1 = GridSpec::first_eigenfunction(&grid);
    let mut initial = State::zeros(&grid, 0.0);
    initial.u = VectorField::from_components(vec![e1.scaled(0.5)])?;
    initial.theta = e1.clone();

    let scheme = SchemeConfig {
        dt: 1.0 / 256.0,
        record_stride: 512,
        ..SchemeConfig::default()
    };
    let record = run(&initial, 0.0, 20.0, &ForcingSymbol::zero(&grid), &model, &scheme, &[])?;

    println!("{:>8} {:>14} {:>14}", "t", "E(t)", "E_c(t)");
    for s in &record.states {
        let pair = energy(s, &model)?;
        println!("{:8.3} {:14.6e} {:14.6e}", s.t, pair.total, pair.curl_free);
    }

    let e0 = energy(&record.states[0], &model)?.total;
    let ef = energy(record.final_state(), &model)?.total;
    println!("\nenergy dropped by a factor of {:.1}", e0 / ef);
    Ok(())
}
