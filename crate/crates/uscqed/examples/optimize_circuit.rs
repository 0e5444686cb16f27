//! Search the element box for circuits deep in the ultrastrong regime.
//!
//! The single-CPB objective rewards a large coupling-times-matrix-element
//! figure while punishing detuning:
//!
//!     F1 = 1 - (g m / D+) (1 - 2|D-| / D+),   D+- = omega_q +- omega_r
//!
//! and the two-CPB variant multiplies one such factor per box together
//! with a penalty on the direct qubit-qubit coupling. Both are minimized
//! by restarted Nelder-Mead over log-scaled elements inside a fabricable
//! box. Identical seeds give identical results.
//!
//! Run with `cargo run --release --example optimize_circuit`.

use uscqed::circuit::CircuitSpec;
use uscqed::constants::{ghz_to_joule, FEMTOFARAD, NANOHENRY};
use uscqed::optimize::{minimize, Objective, SearchSpace};

fn main() -> uscqed::Result<()> {
    let space = SearchSpace::reference_one_cpb();
    let result = minimize(Objective::F1, &space, 0, 32, 1200)?;

    println!("objective F1 = {:.6} after {} iterations over {} restarts",
        result.objective_value, result.iterations, result.restarts);
    println!("R    = {:.4}", result.ratios[0]);
    println!("beta = {:.4}", result.betas[0]);

    let CircuitSpec::OneCpb(best) = result.best else {
        unreachable!()
    };
    println!("best circuit:");
    println!("  c_g = {:.3} fF", best.c_g / FEMTOFARAD);
    println!("  c_j = {:.3} fF", best.c_j / FEMTOFARAD);
    println!("  c_c = {:.3} fF", best.c_c / FEMTOFARAD);
    println!("  c_r = {:.3} fF", best.c_r / FEMTOFARAD);
    println!("  c_p = {:.3} fF", best.c_p / FEMTOFARAD);
    println!("  l_r = {:.1} nH", best.l_r / NANOHENRY);
    println!("  e_j = {:.3} GHz", best.e_j / ghz_to_joule(1.0));

    // How reproducible is the landscape? The restart spread tells you
    // whether one basin dominates.
    let best_val = result
        .restart_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let within = result
        .restart_values
        .iter()
        .filter(|v| **v < best_val + 0.05)
        .count();
    println!(
        "{within}/{} restarts landed within 0.05 of the best value",
        result.restart_values.len()
    );

    // The two-CPB search takes the same shape, with one ratio per box.
    let space2 = SearchSpace::reference_two_cpb();
    let result2 = minimize(Objective::F2, &space2, 0, 16, 2000)?;
    println!(
        "\nobjective F2 = {:.6}: R1 = {:.4}, R2 = {:.4}, beta_1 = {:.4}, beta_2 = {:.4}",
        result2.objective_value,
        result2.ratios[0],
        result2.ratios[1],
        result2.betas[0],
        result2.betas[1]
    );
    Ok(())
}
