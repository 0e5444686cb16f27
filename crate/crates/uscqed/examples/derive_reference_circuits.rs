//! Derive the effective Hamiltonian parameters of the two reference
//! circuits: a single Cooper-pair box sharing a feed line with a lumped
//! LC resonator, and a pair of asymmetric boxes attached to the two end
//! nodes of one resonator.
//!
//! Run with `cargo run --example derive_reference_circuits`.

use uscqed::circuit::{
    derive_effective_params, CircuitSpec, DerivedParams, OneCpbSpec, TwoCpbSpec,
};
use uscqed::constants::{ghz_to_joule, rad_per_s_to_ghz, FEMTOFARAD, NANOHENRY};
use uscqed::models::DEFAULT_N_MAX;
use uscqed::optimize::{coupling_ratio, coupling_ratios_two_cpb};

fn row(label: &str, value: f64, unit: &str) {
    println!("  {label:<22} {value:>12.6} {unit}");
}

fn main() -> uscqed::Result<()> {
    // Single CPB: the gate capacitance dwarfs the junction capacitance, so
    // the island charge couples strongly to the shared feed node.
    let single = CircuitSpec::OneCpb(OneCpbSpec {
        c_g: 9.67 * FEMTOFARAD,
        c_j: 3.96 * FEMTOFARAD,
        c_c: 0.14 * FEMTOFARAD,
        c_r: 1.07 * FEMTOFARAD,
        c_p: 79.53 * FEMTOFARAD,
        l_r: 160.0 * NANOHENRY,
        e_j: ghz_to_joule(6.39),
        n_g: 0.5,
    });

    println!("single CPB + resonator");
    let DerivedParams::OneCpb(p) = derive_effective_params(&single)? else {
        unreachable!()
    };
    row("effC_J", p.eff_c_j / FEMTOFARAD, "fF");
    row("effC_r", p.eff_c_r / FEMTOFARAD, "fF");
    row("C_Jr", p.c_jr / FEMTOFARAD, "fF");
    row("E_C / h", p.e_c / ghz_to_joule(1.0), "GHz");
    row("E_J / E_C", p.e_j / p.e_c, "");
    row("omega_r / 2pi", rad_per_s_to_ghz(p.omega_r), "GHz");
    row("Z_r", p.z_r / 1e3, "kOhm");
    row("gamma", p.gamma_ratio, "");
    row("g / 2pi", rad_per_s_to_ghz(p.g), "GHz");
    row("g_tilde / 2pi", rad_per_s_to_ghz(p.g_tilde()), "GHz");

    // The qubit frequency comes from the full CPB charge Hamiltonian, not
    // from a transmon expansion: E_J/E_C is order one here.
    let q = p.qubit_transition(DEFAULT_N_MAX)?;
    row("omega_q / 2pi", rad_per_s_to_ghz(q.omega_q), "GHz");
    row("|<0|n|1>|", q.n_matrix_element, "");

    let derived = derive_effective_params(&single)?;
    let ratio = coupling_ratio(&derived, q.omega_q)?;
    row("R = 2g~/sqrt(wq wr)", ratio, "");
    row("beta = wq/wr", q.omega_q / p.omega_r, "");
    println!();

    // Two CPBs on one resonator: the end-node grounding capacitance is
    // shared, which is what keeps the two couplings nearly symmetric.
    let pair = CircuitSpec::TwoCpb(TwoCpbSpec {
        c_g1: 7.15 * FEMTOFARAD,
        c_j1: 0.48 * FEMTOFARAD,
        c_g2: 7.47 * FEMTOFARAD,
        c_j2: 0.23 * FEMTOFARAD,
        c_c: 3.20 * FEMTOFARAD,
        c_r: 0.22 * FEMTOFARAD,
        l_r: 170.0 * NANOHENRY,
        e_j1: ghz_to_joule(8.78),
        e_j2: ghz_to_joule(8.78),
        n_g1: 0.5,
        n_g2: 0.5,
    });

    println!("two CPBs + resonator");
    let DerivedParams::TwoCpb(p2) = derive_effective_params(&pair)? else {
        unreachable!()
    };
    row("E_C1 / h", p2.e_c1 / ghz_to_joule(1.0), "GHz");
    row("E_C2 / h", p2.e_c2 / ghz_to_joule(1.0), "GHz");
    row("omega_r / 2pi", rad_per_s_to_ghz(p2.omega_r), "GHz");
    row("g1 / 2pi", rad_per_s_to_ghz(p2.g1), "GHz");
    row("g2 / 2pi", rad_per_s_to_ghz(p2.g2), "GHz");
    row("g12 / 2pi", rad_per_s_to_ghz(p2.g12), "GHz");
    row("g_tilde_12 / 2pi", rad_per_s_to_ghz(p2.g_tilde_12()), "GHz");

    let q1 = p2.qubit_transition_1(DEFAULT_N_MAX)?;
    let q2 = p2.qubit_transition_2(DEFAULT_N_MAX)?;
    let (r1, r2) = coupling_ratios_two_cpb(&p2, q1.omega_q, q2.omega_q)?;
    row("omega_q1 / 2pi", rad_per_s_to_ghz(q1.omega_q), "GHz");
    row("omega_q2 / 2pi", rad_per_s_to_ghz(q2.omega_q), "GHz");
    row("R1", r1, "");
    row("R2", r2, "");

    // Both circuits sit past R = 1 with the qubits close to resonance,
    // which is the regime no pair of linear oscillators can reach.
    assert!(ratio > 1.0 && r1 > 1.0 && r2 > 1.0);
    Ok(())
}
