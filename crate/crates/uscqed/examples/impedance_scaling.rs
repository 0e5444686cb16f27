//! How the coupling ratio moves when the circuit is redesigned.
//!
//! Two knobs matter for a single CPB on a resonator: the Josephson energy
//! (which drags the qubit frequency and the charge matrix element) and the
//! resonator impedance (capacitances down, inductance up at fixed
//! omega_r, so g grows as sqrt(Z_r)). Sweeping both shows R crossing 1
//! well inside fabricable element values.
//!
//! Run with `cargo run --example impedance_scaling`.

use uscqed::circuit::{derive_effective_params, scale_impedance, CircuitSpec, OneCpbSpec};
use uscqed::constants::{ghz_to_joule, rad_per_s_to_ghz, FEMTOFARAD, NANOHENRY};
use uscqed::spectrum::{ratio_sweep, RatioGrid};

fn base() -> CircuitSpec {
    CircuitSpec::OneCpb(OneCpbSpec {
        c_g: 9.67 * FEMTOFARAD,
        c_j: 3.96 * FEMTOFARAD,
        c_c: 0.14 * FEMTOFARAD,
        c_r: 1.07 * FEMTOFARAD,
        c_p: 79.53 * FEMTOFARAD,
        l_r: 160.0 * NANOHENRY,
        e_j: ghz_to_joule(6.39),
        n_g: 0.5,
    })
}

fn main() -> uscqed::Result<()> {
    let spec = base();

    // Josephson axis, logarithmic from 1 to 100 GHz.
    let ejs: Vec<f64> = (0..=60)
        .map(|i| ghz_to_joule(10f64.powf(i as f64 / 30.0)))
        .collect();
    let points = ratio_sweep(&spec, &RatioGrid::JosephsonEnergy(ejs))?;
    let crossing = points
        .windows(2)
        .find(|w| (w[0].coupling_ratio - 1.0) * (w[1].coupling_ratio - 1.0) <= 0.0);
    println!("E_J axis:");
    println!("  E_J/h (GHz)   E_J/E_C    R        beta");
    for p in points.iter().step_by(10) {
        println!(
            "  {:>10.3}   {:>7.3}   {:.4}   {:.4}",
            p.x / ghz_to_joule(1.0),
            p.ej_over_ec,
            p.coupling_ratio,
            p.beta
        );
    }
    if let Some(w) = crossing {
        println!(
            "  R crosses 1 between E_J/h = {:.3} and {:.3} GHz",
            w[0].x / ghz_to_joule(1.0),
            w[1].x / ghz_to_joule(1.0)
        );
    }

    // Impedance axis: mu = Z / Z_base from a quarter to four times.
    let mus: Vec<f64> = (0..=48).map(|i| 0.25 * 4f64.powf(i as f64 / 24.0)).collect();
    let points = ratio_sweep(&spec, &RatioGrid::ImpedanceScale(mus))?;
    println!("\nimpedance axis (omega_r fixed):");
    println!("  Z/Z_base   R        beta");
    for p in points.iter().step_by(8) {
        println!("  {:>8.3}   {:.4}   {:.4}", p.x, p.coupling_ratio, p.beta);
    }

    // The rescaling itself: frequencies pinned, coupling up by sqrt(mu).
    let derived = derive_effective_params(&spec)?;
    let doubled = scale_impedance(&derived, 2.0)?;
    println!(
        "\nmu = 2: omega_r/2pi {:.4} -> {:.4} GHz, Z_r {:.3} -> {:.3} kOhm",
        rad_per_s_to_ghz(derived.omega_r()),
        rad_per_s_to_ghz(doubled.omega_r()),
        derived.z_r() / 1e3,
        doubled.z_r() / 1e3
    );
    Ok(())
}
