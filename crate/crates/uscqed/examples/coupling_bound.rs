//! The light-matter coupling bound for linear circuits, and how a charge
//! qubit breaks it.
//!
//! Replace the Josephson junction with a linear inductor and the network
//! becomes two coupled LC oscillators. Positive definiteness of the
//! capacitance matrix then forces
//!
//!     R = 2 g / sqrt(omega_q omega_r) < 1
//!
//! no matter how the elements are chosen. The Cooper-pair box escapes the
//! bound because its charge matrix element is not tied to its transition
//! frequency the way an oscillator's is.
//!
//! Run with `cargo run --example coupling_bound`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uscqed::circuit::{oscillator_bound, CircuitSpec, OneCpbSpec, TwoOscillatorSpec};
use uscqed::constants::{ghz_to_joule, FEMTOFARAD, NANOHENRY};
use uscqed::models::DEFAULT_N_MAX;
use uscqed::optimize::resonant_ratio;

fn main() -> uscqed::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;

    // Capacitances over three and a half decades, inductances over the
    // range a lumped resonator can plausibly cover.
    let cap = |rng: &mut ChaCha8Rng| FEMTOFARAD * 10f64.powf(rng.gen_range(-1.0..2.5));
    for _ in 0..2000 {
        let spec = CircuitSpec::TwoOscillator(TwoOscillatorSpec {
            c_g: cap(&mut rng),
            c_j: cap(&mut rng),
            c_c: cap(&mut rng),
            c_r: cap(&mut rng),
            c_p: cap(&mut rng),
            l_r: NANOHENRY * 10f64.powf(rng.gen_range(1.0..3.0)),
            l_j: NANOHENRY * 10f64.powf(rng.gen_range(1.0..3.0)),
        });
        let b = oscillator_bound(&spec)?;
        assert!(b.ratio < 1.0, "linear network exceeded the bound: {}", b.ratio);
        worst = worst.max(b.ratio);
    }
    println!("2000 random linear networks: max R = {worst:.6} (always < 1)");

    // The same network with the junction restored. At the charge sweet spot
    // the two-level reduction gives R through the full CPB spectrum.
    let cpb = CircuitSpec::OneCpb(OneCpbSpec {
        c_g: 9.67 * FEMTOFARAD,
        c_j: 3.96 * FEMTOFARAD,
        c_c: 0.14 * FEMTOFARAD,
        c_r: 1.07 * FEMTOFARAD,
        c_p: 79.53 * FEMTOFARAD,
        l_r: 160.0 * NANOHENRY,
        e_j: ghz_to_joule(6.39),
        n_g: 0.5,
    });
    let res = resonant_ratio(&cpb)?;
    println!(
        "CPB at resonance:            R = {:.6} = gamma ({:.4}) * x ({:.4})",
        res.r_res, res.gamma, res.x
    );

    // Off exact resonance the honest figure uses the computed transition.
    let uscqed::circuit::DerivedParams::OneCpb(p) =
        uscqed::circuit::derive_effective_params(&cpb)?
    else {
        unreachable!()
    };
    let q = p.qubit_transition(DEFAULT_N_MAX)?;
    let r = 2.0 * p.g_tilde() / (p.omega_r * q.omega_q).sqrt();
    println!("CPB at its own transition:   R = {r:.6}");
    assert!(r > 1.0);
    Ok(())
}
