//! Launch an ensemble far outside the absorbing ball and watch every member
//! fall in and stay.
//!
//! ```text
//! cargo run --release --example absorbing_set
//! ```

use lame_thermo::attractor::{absorbing_check, EnsembleSpec, InitialCondition};
use lame_thermo::diagnostics::{build_q, compute_constants_with_refit, LedgerConfig};
use lame_thermo::grid::GridSpec;
use lame_thermo::integrator::SchemeConfig;
use lame_thermo::model::{
    hull_net, lb2_norm_estimate, ForcingKind, ForcingSymbol, ModelSpec, Nonlinearity,
    TimeCoefficient,
};
use lame_thermo::operators::{estimate_operator_constants, PowerIterationSpec};

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

    let opc = estimate_operator_constants(&grid, &PowerIterationSpec::default())?;
    let q = build_q(&grid);
    let lb2 = lb2_norm_estimate(&forcing, 4.0, 5e-3, &grid)?;
    let ledger = compute_constants_with_refit(
        &model,
        &opc,
        &q,
        &grid,
        &LedgerConfig { lb2_g0: lb2, ..LedgerConfig::default() },
    )?;
    println!("absorbing radius rho0 = {:.4}\n", ledger.rho0);

    let ensemble = EnsembleSpec {
        initials: (0..5)
            .map(|i| InitialCondition { seed: i, hc_norm: 10.0 * ledger.rho0 })
            .collect(),
        symbols: hull_net(&forcing, &[0.0, 0.25, 0.5])?,
        snapshot_times: vec![],
        seed: 42,
    };
    let scheme = SchemeConfig { dt: 1.0 / 256.0, record_stride: 16, ..SchemeConfig::default() };
    let report = absorbing_check(&ensemble, &ledger, &model, &scheme, &grid, 60.0)?;

    println!("{:>4} {:>4} {:>10} {:>10} {:>8}", "ic", "sym", "|U(0)|", "entry t", "exits");
    for m in &report.members {
        println!(
            "{:>4} {:>4} {:>10.3} {:>10.3} {:>8}",
            m.initial_index,
            m.symbol_index,
            m.initial_hc_norm,
            m.entry_time.unwrap_or(f64::NAN),
            m.exit_violations
        );
    }
    println!(
        "\nall absorbed: {}, no exits from the inflated ball: {}",
        report.all_absorbed, report.no_exits
    );
    Ok(())
}
