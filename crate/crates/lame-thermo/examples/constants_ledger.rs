//! Build the full constant ledger for the 1-D benchmark and print every
//! derived quantity with its provenance formula.
//!
//! ```text
//! cargo run --release --example constants_ledger
//! ```

use lame_thermo::diagnostics::{build_q, compute_constants_with_refit, LedgerConfig};
use lame_thermo::grid::GridSpec;
use lame_thermo::model::{
    lb2_norm_estimate, ForcingKind, ForcingSymbol, ModelSpec, Nonlinearity, TimeCoefficient,
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
    println!(
        "operator constants: k = {:.6}, k_c = {:.6}, c_tr = {:.6} (band {:?})\n",
        opc.k, opc.k_c, opc.c_tr, opc.band
    );

    let q = build_q(&grid);
    let lb2 = lb2_norm_estimate(&forcing, 4.0, 5e-3, &grid)?;
    let cfg = LedgerConfig { lb2_g0: lb2, ..LedgerConfig::default() };
    let ledger = compute_constants_with_refit(&model, &opc, &q, &grid, &cfg)?;

    for entry in ledger.entries() {
        println!("{:>16} = {:14.6e}   [{}]", entry.name, entry.value, entry.formula);
    }
    println!("\nweight identities (must vanish): {:?}", ledger.identity_residuals());
    println!("weight system margins:           {:?}", ledger.weight_system_margins());
    for note in &ledger.notes {
        println!("note: {note}");
    }
    Ok(())
}
