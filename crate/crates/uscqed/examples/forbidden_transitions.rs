//! Selection rules of the ultrastrongly coupled CPB-resonator mediator.
//!
//! Diagonalizing the two-CPB-plus-resonator block and projecting the
//! resonator quadrature X into the dressed basis reveals transitions the
//! drive cannot touch: |X_jk| collapses by three or more orders of
//! magnitude on parity grounds. Those dark gaps are exactly the channels
//! a detuned transmon pair can use for interference-free virtual
//! exchange.
//!
//! Run with `cargo run --example forbidden_transitions`.

use uscqed::constants::{ghz_to_rad_per_s, rad_per_s_to_ghz};
use uscqed::models::{recommended_n_fock, MediatorParams};
use uscqed::spectrum::{
    forbidden_transitions, mediator_dressed, DEFAULT_FORBIDDEN_TOL, FORBIDDEN_SCAN_LEVELS,
};

fn main() -> uscqed::Result<()> {
    let omega_r = ghz_to_rad_per_s(8.13);

    for g_ratio in [0.3, 0.5] {
        let params = MediatorParams::symmetric(omega_r, g_ratio * omega_r, 0.0);
        let n_fock = recommended_n_fock(g_ratio);
        let ds = mediator_dressed(&params, n_fock, FORBIDDEN_SCAN_LEVELS)?;

        println!("g_tilde = {g_ratio} omega_r  (n_fock = {n_fock})");
        println!("  dressed levels (omega_r units, ground-referenced):");
        let levels = ds.ground_referenced();
        for (j, e) in levels.iter().enumerate() {
            println!("    {j}: {:.6}", e / omega_r);
        }

        let x = ds.op("X")?;
        let scale = x.max_abs();
        let dark = forbidden_transitions(&ds, "X", 1, DEFAULT_FORBIDDEN_TOL)?;
        println!("  dark transitions out of level 1 (|X| < {DEFAULT_FORBIDDEN_TOL} max):");
        for t in &dark {
            println!(
                "    1 -> {}: gap {:.4} GHz ({:.4} omega_r), |X|/max = {:.2e}",
                t.to,
                rad_per_s_to_ghz(t.delta),
                t.delta / omega_r,
                t.element / scale
            );
        }

        // The same operator connects neighbors with order-one strength, so
        // the suppression is a selection rule, not overall weakness.
        let bright = x.entries()[(1, 2)].norm() / scale;
        println!("  for contrast, |X_12|/max = {bright:.3}\n");
    }
    Ok(())
}
