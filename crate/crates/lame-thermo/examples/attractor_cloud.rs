//! Evolve an ensemble over the initial-condition x symbol grid and measure
//! how the snapshot clouds contract onto the final-time union.
//!
//! ```text
//! cargo run --release --example attractor_cloud
//! ```

use lame_thermo::attractor::{attractor_approximate, EnsembleSpec, InitialCondition};
use lame_thermo::grid::GridSpec;
use lame_thermo::integrator::SchemeConfig;
use lame_thermo::model::{
    hull_net, ForcingKind, ForcingSymbol, ModelSpec, Nonlinearity, TimeCoefficient,
};

fn main() -> lame_thermo::Result<()> {
    let grid = GridSpec::unit_box(1, 63)?;
    let model = ModelSpec {
        mu: 1.0,
        lambda: 0.0,
        alpha: TimeCoefficient::constant(1.0),
        kappa: TimeCoefficient::constant(1.0),
        nonlinearity: Nonlinearity::Power { c: 1.0, rho: 2.0, eta: 1.0 },
    };
    let forcing = ForcingSymbol::new(
        ForcingKind::TimePeriodic { period: 0.25 },
        GridSpec::first_eigenfunction(&grid).scaled(0.05),
    );

    let t_max = 100.0;
    let ensemble = EnsembleSpec {
        initials: (0..8)
            .map(|i| InitialCondition { seed: i, hc_norm: 1.0 + i as f64 })
            .collect(),
        symbols: hull_net(&forcing, &[0.0, 0.25, 0.5])?,
        snapshot_times: (0..8).map(|j| t_max / 2f64.powi(j)).collect(),
        seed: 42,
    };
    let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 256, ..SchemeConfig::default() };

    let approx = attractor_approximate(&ensemble, t_max, &model, &scheme, &grid)?;
    println!("{} members, final cloud of {} points\n", ensemble.member_count(), approx.a_approx.states.len());
    println!("{:>10} {:>14}", "t", "sup-distance");
    for (t, d) in &approx.decay_series {
        println!("{t:>10.4} {d:>14.6e}");
    }
    Ok(())
}
