//! Contraction functional on a geometric ladder of initial states: in the
//! linear regime the pairwise functional scales exactly quadratically in the
//! perturbation amplitude (ratio 4 per rung).
//!
//! ```text
//! cargo run --release --example contraction_pairs
//! ```

use lame_thermo::attractor::{contraction_test, direction_state, geometric_sequence};
use lame_thermo::grid::{GridSpec, State, VectorField};
use lame_thermo::integrator::SchemeConfig;
use lame_thermo::model::{ForcingKind, ForcingSymbol, ModelSpec, Nonlinearity, TimeCoefficient};

fn main() -> lame_thermo::Result<()> {
    let grid = GridSpec::unit_box(1, 31)?;
    let e1 = GridSpec::first_eigenfunction(&grid);
    let forcing = ForcingSymbol::new(ForcingKind::TimePeriodic { period: 0.25 }, e1.scaled(0.05));
    let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 4, ..SchemeConfig::default() };

    let mut base = State::zeros(&grid, 0.0);
    base.u = VectorField::from_components(vec![e1.scaled(0.4)])?;
    base.theta = e1.clone();
    let mut direction = direction_state(&grid, 99);
    direction.scale(0.5);

    for (name, nonlinearity) in [
        ("linear (f = 0)", Nonlinearity::Zero { eta: 1.0 }),
        ("power nonlinearity", Nonlinearity::Power { c: 1.0, rho: 2.0, eta: 1.0 }),
    ] {
        let model = ModelSpec {
            mu: 1.0,
            lambda: 0.0,
            alpha: TimeCoefficient::constant(1.0),
            kappa: TimeCoefficient::constant(1.0),
            nonlinearity,
        };
        let sequence = geometric_sequence(&base, &direction, 6);
        let symbols = vec![forcing.clone(); sequence.len()];
        let report = contraction_test(&sequence, &symbols, 4.0, &model, &scheme)?;

        println!("{name}:");
        println!("{:>6} {:>14} {:>14} {:>12}", "pair", "phi_T", "E_Z(T)", "margin");
        for n in 0..sequence.len() - 1 {
            let p = report.pair(n, n + 1).unwrap();
            println!(
                "({},{}) {:>14.6e} {:>14.6e} {:>12.4e}",
                p.i, p.j, p.phi_t, p.e_z_final, p.inequality_margin
            );
        }
        println!();
    }
    Ok(())
}
