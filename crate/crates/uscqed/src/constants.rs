//! Physical constants (CODATA 2018 exact values) and the unit conversions
//! used at the I/O boundary.
//!
//! Everything internal is SI: farads, henries, joules, kelvin, seconds, and
//! angular frequency in rad/s. Config files and CLI flags speak fF, nH, GHz
//! (ordinary frequency), MHz, mK, and ns; the helpers here are the single
//! place where the 2*pi and metric prefixes live.

use std::f64::consts::PI;

/// Elementary charge in coulombs.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant in joule seconds.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant in joule seconds.
pub const H_PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant in joules per kelvin.
pub const K_B: f64 = 1.380_649e-23;

/// Charge of a Cooper pair, 2e, in coulombs.
pub const COOPER_PAIR_CHARGE: f64 = 2.0 * E_CHARGE;
/// Reduced magnetic flux quantum hbar/(2e) in webers.
pub const REDUCED_FLUX_QUANTUM: f64 = HBAR / COOPER_PAIR_CHARGE;
/// Reduced quantum resistance hbar/(2e)^2 in ohms, approximately 1.027 kOhm.
pub const R_Q: f64 = HBAR / (COOPER_PAIR_CHARGE * COOPER_PAIR_CHARGE);

/// One femtofarad in farads.
pub const FEMTOFARAD: f64 = 1e-15;
/// One nanohenry in henries.
pub const NANOHENRY: f64 = 1e-9;
/// One nanosecond in seconds.
pub const NANOSECOND: f64 = 1e-9;

/// Ordinary frequency in GHz to angular frequency in rad/s.
pub fn ghz_to_rad_per_s(f_ghz: f64) -> f64 {
    2.0 * PI * 1e9 * f_ghz
}

/// Angular frequency in rad/s to ordinary frequency in GHz.
pub fn rad_per_s_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e9)
}

/// Ordinary rate in MHz to angular rate in rad/s.
pub fn mhz_to_rad_per_s(f_mhz: f64) -> f64 {
    2.0 * PI * 1e6 * f_mhz
}

/// GHz ordinary frequency to an energy in joules (E = h f).
pub fn ghz_to_joule(f_ghz: f64) -> f64 {
    H_PLANCK * 1e9 * f_ghz
}

/// Millikelvin to kelvin.
pub fn mk_to_kelvin(t_mk: f64) -> f64 {
    t_mk * 1e-3
}
