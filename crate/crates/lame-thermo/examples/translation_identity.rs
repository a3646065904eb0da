//! Process laws in action: two-parameter composition holds bitwise on the
//! shared time grid, and shifting the time window is indistinguishable from
//! shifting the forcing symbol.
//!
//! ```text
//! cargo run --release --example translation_identity
//! ```

use lame_thermo::grid::{GridSpec, State, VectorField};
use lame_thermo::integrator::{check_translation_identity, run, SchemeConfig};
use lame_thermo::model::{ForcingKind, ForcingSymbol, ModelSpec, Nonlinearity, TimeCoefficient};
use lame_thermo::operators::hc_norm_sq;

fn main() -> lame_thermo::Result<()> {
    let grid = GridSpec::unit_box(1, 31)?;
    let model = ModelSpec {
        mu: 1.0,
        lambda: 0.0,
        alpha: TimeCoefficient::constant(1.0),
        kappa: TimeCoefficient::constant(1.0),
        nonlinearity: Nonlinearity::Power { c: 0.5, rho: 2.0, eta: 1.0 },
    };
    let e1 = GridSpec::first_eigenfunction(&grid);
    let forcing = ForcingSymbol::new(ForcingKind::TimePeriodic { period: 0.25 }, e1.scaled(0.1));
    let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 64, ..SchemeConfig::default() };

    let mut initial = State::zeros(&grid, 0.0);
    initial.u = VectorField::from_components(vec![e1.scaled(0.3)])?;
    initial.theta = e1.clone();

    // composition: evolving through t = 0.25 equals stopping and restarting
    let through = run(&initial, 0.0, 0.5, &forcing, &model, &scheme, &[])?;
    let first = run(&initial, 0.0, 0.25, &forcing, &model, &scheme, &[])?;
    let second = run(first.final_state(), 0.25, 0.5, &forcing, &model, &scheme, &[])?;
    let comp_gap = hc_norm_sq(
        &through.final_state().sub(second.final_state())?,
        model.mu,
        model.lambda,
    )?
    .sqrt();
    println!("composition law gap:      {comp_gap:.3e} (bitwise zero)");

    // translation identity for several dt-aligned shifts
    for s in [0.0, scheme.dt, 100.0 * scheme.dt, 0.25] {
        let d = check_translation_identity(&initial, 0.0, 0.5, s, &forcing, &model, &scheme)?;
        println!("translation identity, s = {s:10.6}: discrepancy {d:.3e}");
    }
    Ok(())
}
