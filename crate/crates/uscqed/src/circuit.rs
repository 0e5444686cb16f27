//! Capacitance-network reduction: raw circuit elements to effective
//! Hamiltonian parameters for the three supported topologies.
//!
//! The reduction is the same everywhere: assemble the capacitance matrix of
//! the active nodes (passive internal nodes already eliminated in the closed
//! forms below), invert it, and read effective capacitances off the inverse.
//! Everything here is plain SI (farads, henries, joules, rad/s); unit
//! conversion for human-facing I/O happens in the `cli` module and nowhere
//! else.

use ndarray::{Array1, Array2};

use crate::constants::{E_CHARGE, R_Q};
use crate::error::{Error, Result};
use crate::hilbert;
use crate::models;

/// Relative determinant floor below which a capacitance matrix is treated as
/// numerically singular (|det| compared against the product of diagonals).
const SINGULARITY_REL_TOL: f64 = 1e-12;

/// Inverse-matrix off-diagonal magnitude (1/F) below which the qubit and
/// resonator are reported as decoupled: C_Jr = +inf, g = 0. Physical mutual
/// inverses are of order 1e14 1/F, so this only catches exact decoupling.
const DECOUPLED_INV_TOL: f64 = 1e-30;

/// Raw electrical elements for one of the three supported circuit topologies.
///
/// All values are SI: farads, henries, joules. Gate-charge numbers are
/// dimensionless.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub enum CircuitSpec {
    OneCpb(OneCpbSpec),
    TwoOscillator(TwoOscillatorSpec),
    TwoCpb(TwoCpbSpec),
}

/// A Cooper-pair box capacitively coupled to a lumped LC resonator.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct OneCpbSpec {
    /// Gate capacitance feeding the CPB island.
    pub c_g: f64,
    /// Josephson junction self-capacitance.
    pub c_j: f64,
    /// Coupling capacitance on the resonator side.
    pub c_c: f64,
    /// Resonator capacitance.
    pub c_r: f64,
    /// Parasitic capacitance of the shared feed node.
    pub c_p: f64,
    /// Resonator inductance.
    pub l_r: f64,
    /// Josephson energy.
    pub e_j: f64,
    /// Gate-charge number (sweet spot at 0.5).
    pub n_g: f64,
}

/// Same network as [`OneCpbSpec`] with the junction replaced by a linear
/// inductor; used to probe the coupling bound of two coupled oscillators.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TwoOscillatorSpec {
    pub c_g: f64,
    pub c_j: f64,
    pub c_c: f64,
    pub c_r: f64,
    pub c_p: f64,
    pub l_r: f64,
    /// Linear inductance standing in for the junction.
    pub l_j: f64,
}

/// Two asymmetric Cooper-pair boxes attached to the two end nodes of one
/// resonator. Both end nodes are grounded through the same capacitance; the
/// single `c_c` field makes that equal-grounding constraint structural.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TwoCpbSpec {
    pub c_g1: f64,
    pub c_j1: f64,
    pub c_g2: f64,
    pub c_j2: f64,
    /// Grounding capacitance shared by both resonator end nodes.
    pub c_c: f64,
    pub c_r: f64,
    pub l_r: f64,
    pub e_j1: f64,
    pub e_j2: f64,
    pub n_g1: f64,
    pub n_g2: f64,
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::Validation(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

fn check_gate_cap(name: &str, value: f64) -> Result<()> {
    // zero gate capacitance is the documented decoupled limit
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::Validation(format!(
            "{name} must be non-negative and finite, got {value}"
        )));
    }
    Ok(())
}

fn check_finite(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::Validation(format!(
            "{name} must be finite, got {value}"
        )));
    }
    Ok(())
}

impl OneCpbSpec {
    pub fn validate(&self) -> Result<()> {
        check_gate_cap("C_g", self.c_g)?;
        check_positive("C_J", self.c_j)?;
        check_positive("C_c", self.c_c)?;
        check_positive("C_r", self.c_r)?;
        check_positive("C_p", self.c_p)?;
        check_positive("L_r", self.l_r)?;
        check_positive("E_J", self.e_j)?;
        check_finite("n_g", self.n_g)
    }
}

impl TwoOscillatorSpec {
    pub fn validate(&self) -> Result<()> {
        check_gate_cap("C_g", self.c_g)?;
        check_positive("C_J", self.c_j)?;
        check_positive("C_c", self.c_c)?;
        check_positive("C_r", self.c_r)?;
        check_positive("C_p", self.c_p)?;
        check_positive("L_r", self.l_r)?;
        check_positive("L_J", self.l_j)
    }
}

impl TwoCpbSpec {
    pub fn validate(&self) -> Result<()> {
        check_gate_cap("C_g1", self.c_g1)?;
        check_gate_cap("C_g2", self.c_g2)?;
        check_positive("C_J1", self.c_j1)?;
        check_positive("C_J2", self.c_j2)?;
        check_positive("C_c", self.c_c)?;
        check_positive("C_r", self.c_r)?;
        check_positive("L_r", self.l_r)?;
        check_positive("E_J1", self.e_j1)?;
        check_positive("E_J2", self.e_j2)?;
        check_finite("n_g1", self.n_g1)?;
        check_finite("n_g2", self.n_g2)
    }
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CircuitSpec::OneCpb(s) => s.validate(),
            CircuitSpec::TwoOscillator(s) => s.validate(),
            CircuitSpec::TwoCpb(s) => s.validate(),
        }
    }
}

/// Effective parameters of the reduced single-CPB circuit. All SI.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct OneCpbDerived {
    /// Effective Josephson-island capacitance 1/[C^-1]_JJ.
    pub eff_c_j: f64,
    /// Effective resonator capacitance 1/[C^-1]_rr.
    pub eff_c_r: f64,
    /// Effective mutual capacitance 1/|[C^-1]_Jr| (+inf when decoupled).
    pub c_jr: f64,
    /// Charging energy e^2 / (2 effC_J), joules.
    pub e_c: f64,
    /// Resonator frequency 1/sqrt(effC_r L_r), rad/s.
    pub omega_r: f64,
    /// Resonator impedance sqrt(L_r / effC_r), ohms.
    pub z_r: f64,
    /// Capacitance ratio effC_r / C_Jr.
    pub gamma_ratio: f64,
    /// Charge coupling omega_r * gamma_ratio * sqrt(Z_r / 2 R_Q), rad/s.
    pub g: f64,
    /// Resonator inductance carried through for rescaling, henries.
    pub l_r: f64,
    /// Josephson energy carried through from the circuit spec, joules.
    pub e_j: f64,
    /// Effective gate-charge number (a direct input, not recomputed).
    pub n_g: f64,
}

impl OneCpbDerived {
    /// The sigma_x coefficient after two-level reduction of the island
    /// charge at the sweet spot: half the charge coupling.
    pub fn g_tilde(&self) -> f64 {
        self.g / 2.0
    }

    /// Lowest CPB transition for these charging parameters.
    pub fn qubit_transition(&self, n_max: usize) -> Result<CpbTransition> {
        cpb_transition_frequency(self.e_c, self.e_j, self.n_g, n_max)
    }
}

/// Effective parameters when the junction is a linear inductor.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TwoOscillatorDerived {
    pub eff_c_j: f64,
    pub eff_c_r: f64,
    pub c_jr: f64,
    /// Charging energy of the junction-side node, joules.
    pub e_c: f64,
    /// Junction-side mode frequency 1/sqrt(effC_J L_J), rad/s.
    pub omega_q: f64,
    pub omega_r: f64,
    pub z_r: f64,
    /// sqrt(effC_J effC_r) / C_Jr; the coupling-to-frequency bound.
    pub bound_ratio: f64,
    /// Oscillator-oscillator coupling (bound_ratio/2) sqrt(omega_q omega_r).
    pub g_o: f64,
    pub l_r: f64,
    pub l_j: f64,
}

/// Effective parameters of the reduced two-CPB circuit. All SI.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TwoCpbDerived {
    pub eff_c_j1: f64,
    pub eff_c_j2: f64,
    pub eff_c_r: f64,
    /// Mutual capacitance of CPB 1 to the resonator (+inf when decoupled).
    pub c_1r: f64,
    pub c_2r: f64,
    /// Mutual capacitance between the two islands (+inf when decoupled).
    pub c_12: f64,
    pub e_c1: f64,
    pub e_c2: f64,
    pub omega_r: f64,
    pub z_r: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub g1: f64,
    pub g2: f64,
    /// Direct charge-charge coupling [C^-1]_12 / R_Q, rad/s. Negative for
    /// all-positive capacitance matrices of this topology.
    pub g12: f64,
    pub l_r: f64,
    pub e_j1: f64,
    pub e_j2: f64,
    pub n_g1: f64,
    pub n_g2: f64,
}

impl TwoCpbDerived {
    /// The sigma_x sigma_x coefficient after two-level reduction of the
    /// island charge product: |g12| / 4.
    pub fn g_tilde_12(&self) -> f64 {
        self.g12.abs() / 4.0
    }

    pub fn qubit_transition_1(&self, n_max: usize) -> Result<CpbTransition> {
        cpb_transition_frequency(self.e_c1, self.e_j1, self.n_g1, n_max)
    }

    pub fn qubit_transition_2(&self, n_max: usize) -> Result<CpbTransition> {
        cpb_transition_frequency(self.e_c2, self.e_j2, self.n_g2, n_max)
    }
}

/// Reduced circuit parameters for any of the three topologies.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub enum DerivedParams {
    OneCpb(OneCpbDerived),
    TwoOscillator(TwoOscillatorDerived),
    TwoCpb(TwoCpbDerived),
}

impl DerivedParams {
    pub fn omega_r(&self) -> f64 {
        match self {
            DerivedParams::OneCpb(p) => p.omega_r,
            DerivedParams::TwoOscillator(p) => p.omega_r,
            DerivedParams::TwoCpb(p) => p.omega_r,
        }
    }

    pub fn z_r(&self) -> f64 {
        match self {
            DerivedParams::OneCpb(p) => p.z_r,
            DerivedParams::TwoOscillator(p) => p.z_r,
            DerivedParams::TwoCpb(p) => p.z_r,
        }
    }
}

/// Capacitance matrix of the active nodes plus one gate capacitance vector
/// per voltage source.
///
/// Node order is (Josephson, resonator) for the single-junction topologies
/// and (J1, J2, resonator) for the two-CPB circuit. Internal passive nodes
/// are already eliminated; the entries are closed forms in the raw elements.
pub fn build_capacitance_matrix(spec: &CircuitSpec) -> Result<(Array2<f64>, Vec<Array1<f64>>)> {
    spec.validate()?;
    match spec {
        CircuitSpec::OneCpb(OneCpbSpec {
            c_g,
            c_j,
            c_c,
            c_r,
            c_p,
            ..
        })
        | CircuitSpec::TwoOscillator(TwoOscillatorSpec {
            c_g,
            c_j,
            c_c,
            c_r,
            c_p,
            ..
        }) => {
            let ct = c_c + c_g + c_p;
            let m = ndarray::arr2(&[
                [(ct * c_j + c_g * (c_c + c_p)) / ct, c_g * c_p / ct],
                [c_g * c_p / ct, (ct * c_r + c_p * (c_c + c_g)) / ct],
            ]);
            let gate = ndarray::arr1(&[c_g * (c_c + c_p) / ct, c_g * c_p / ct]);
            Ok((m, vec![gate]))
        }
        CircuitSpec::TwoCpb(TwoCpbSpec {
            c_g1,
            c_j1,
            c_g2,
            c_j2,
            c_c,
            c_r,
            ..
        }) => {
            let ct = 2.0 * c_c + c_g1 + c_g2;
            let m = ndarray::arr2(&[
                [
                    (ct * c_j1 + c_g1 * (2.0 * c_c + c_g2)) / ct,
                    c_g1 * c_g2 / ct,
                    c_g1 * (c_g2 + c_c) / ct,
                ],
                [
                    c_g1 * c_g2 / ct,
                    (ct * c_j2 + c_g2 * (2.0 * c_c + c_g1)) / ct,
                    c_g2 * (c_c + c_g1) / ct,
                ],
                [
                    c_g1 * (c_g2 + c_c) / ct,
                    c_g2 * (c_c + c_g1) / ct,
                    (ct * c_r + (c_c + c_g1) * (c_c + c_g2)) / ct,
                ],
            ]);
            // the second source couples with the opposite orientation
            let v1 = ndarray::arr1(&[
                c_g1 * (2.0 * c_c + c_g2) / ct,
                c_g1 * c_g2 / ct,
                c_g1 * (c_g2 + c_c) / ct,
            ]);
            let v2 = ndarray::arr1(&[
                -c_g1 * c_g2 / ct,
                -c_g2 * (2.0 * c_c + c_g1) / ct,
                -c_g2 * (c_c + c_g1) / ct,
            ]);
            Ok((m, vec![v1, v2]))
        }
    }
}

/// Closed-form inverse for the 2x2 / 3x3 capacitance matrices, with a
/// determinant-conditioning guard.
pub(crate) fn invert_small(m: &Array2<f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    let diag_prod: f64 = (0..n).map(|i| m[(i, i)]).product();
    match n {
        2 => {
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            if det.abs() <= SINGULARITY_REL_TOL * diag_prod.abs() {
                return Err(Error::Numeric(
                    "capacitance matrix is numerically singular".into(),
                ));
            }
            Ok(ndarray::arr2(&[
                [m[(1, 1)] / det, -m[(0, 1)] / det],
                [-m[(1, 0)] / det, m[(0, 0)] / det],
            ]))
        }
        3 => {
            let c = |i: usize, j: usize| m[(i, j)];
            let cof = |a: f64, b: f64, cc: f64, d: f64| a * d - b * cc;
            let det = c(0, 0) * cof(c(1, 1), c(1, 2), c(2, 1), c(2, 2))
                - c(0, 1) * cof(c(1, 0), c(1, 2), c(2, 0), c(2, 2))
                + c(0, 2) * cof(c(1, 0), c(1, 1), c(2, 0), c(2, 1));
            if det.abs() <= SINGULARITY_REL_TOL * diag_prod.abs() {
                return Err(Error::Numeric(
                    "capacitance matrix is numerically singular".into(),
                ));
            }
            let mut inv = Array2::<f64>::zeros((3, 3));
            for i in 0..3 {
                for j in 0..3 {
                    // adjugate: the (j, i) minor lands at (i, j)
                    let rows: Vec<usize> = (0..3).filter(|&k| k != j).collect();
                    let cols: Vec<usize> = (0..3).filter(|&k| k != i).collect();
                    let minor = cof(
                        c(rows[0], cols[0]),
                        c(rows[0], cols[1]),
                        c(rows[1], cols[0]),
                        c(rows[1], cols[1]),
                    );
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    inv[(i, j)] = sign * minor / det;
                }
            }
            Ok(inv)
        }
        _ => Err(Error::Internal(format!(
            "no closed-form inverse for {n}x{n} capacitance matrices"
        ))),
    }
}

fn mutual_capacitance(inv_entry: f64) -> f64 {
    if inv_entry.abs() < DECOUPLED_INV_TOL {
        f64::INFINITY
    } else {
        1.0 / inv_entry.abs()
    }
}

/// Invert the capacitance network and compute all effective parameters.
///
/// The gate-charge numbers are taken directly from the circuit spec: voltage biases
/// only shift them, so they are inputs rather than derived quantities.
pub fn derive_effective_params(spec: &CircuitSpec) -> Result<DerivedParams> {
    let (matrix, _) = build_capacitance_matrix(spec)?;
    let inv = invert_small(&matrix)?;
    match spec {
        CircuitSpec::OneCpb(s) => {
            let eff_c_j = 1.0 / inv[(0, 0)];
            let eff_c_r = 1.0 / inv[(1, 1)];
            let c_jr = mutual_capacitance(inv[(0, 1)]);
            let e_c = E_CHARGE * E_CHARGE / (2.0 * eff_c_j);
            let omega_r = 1.0 / (eff_c_r * s.l_r).sqrt();
            let z_r = (s.l_r / eff_c_r).sqrt();
            let gamma_ratio = if c_jr.is_finite() { eff_c_r / c_jr } else { 0.0 };
            let g = omega_r * gamma_ratio * (z_r / (2.0 * R_Q)).sqrt();
            Ok(DerivedParams::OneCpb(OneCpbDerived {
                eff_c_j,
                eff_c_r,
                c_jr,
                e_c,
                omega_r,
                z_r,
                gamma_ratio,
                g,
                l_r: s.l_r,
                e_j: s.e_j,
                n_g: s.n_g,
            }))
        }
        CircuitSpec::TwoOscillator(s) => {
            let eff_c_j = 1.0 / inv[(0, 0)];
            let eff_c_r = 1.0 / inv[(1, 1)];
            let c_jr = mutual_capacitance(inv[(0, 1)]);
            let e_c = E_CHARGE * E_CHARGE / (2.0 * eff_c_j);
            let omega_q = 1.0 / (eff_c_j * s.l_j).sqrt();
            let omega_r = 1.0 / (eff_c_r * s.l_r).sqrt();
            let z_r = (s.l_r / eff_c_r).sqrt();
            let bound_ratio = if c_jr.is_finite() {
                (eff_c_j * eff_c_r).sqrt() / c_jr
            } else {
                0.0
            };
            let g_o = bound_ratio / 2.0 * (omega_q * omega_r).sqrt();
            Ok(DerivedParams::TwoOscillator(TwoOscillatorDerived {
                eff_c_j,
                eff_c_r,
                c_jr,
                e_c,
                omega_q,
                omega_r,
                z_r,
                bound_ratio,
                g_o,
                l_r: s.l_r,
                l_j: s.l_j,
            }))
        }
        CircuitSpec::TwoCpb(s) => {
            let eff_c_j1 = 1.0 / inv[(0, 0)];
            let eff_c_j2 = 1.0 / inv[(1, 1)];
            let eff_c_r = 1.0 / inv[(2, 2)];
            let c_1r = mutual_capacitance(inv[(0, 2)]);
            let c_2r = mutual_capacitance(inv[(1, 2)]);
            let c_12 = mutual_capacitance(inv[(0, 1)]);
            let e_c1 = E_CHARGE * E_CHARGE / (2.0 * eff_c_j1);
            let e_c2 = E_CHARGE * E_CHARGE / (2.0 * eff_c_j2);
            let omega_r = 1.0 / (eff_c_r * s.l_r).sqrt();
            let z_r = (s.l_r / eff_c_r).sqrt();
            let gamma_1 = if c_1r.is_finite() { eff_c_r / c_1r } else { 0.0 };
            let gamma_2 = if c_2r.is_finite() { eff_c_r / c_2r } else { 0.0 };
            let x = (z_r / (2.0 * R_Q)).sqrt();
            // signed: the inverse off-diagonal is negative on this topology
            let g12 = if c_12.is_finite() { inv[(0, 1)] / R_Q } else { 0.0 };
            Ok(DerivedParams::TwoCpb(TwoCpbDerived {
                eff_c_j1,
                eff_c_j2,
                eff_c_r,
                c_1r,
                c_2r,
                c_12,
                e_c1,
                e_c2,
                omega_r,
                z_r,
                gamma_1,
                gamma_2,
                g1: omega_r * gamma_1 * x,
                g2: omega_r * gamma_2 * x,
                g12,
                l_r: s.l_r,
                e_j1: s.e_j1,
                e_j2: s.e_j2,
                n_g1: s.n_g1,
                n_g2: s.n_g2,
            }))
        }
    }
}

/// Coupling bound for the two-oscillator circuit.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct OscillatorBound {
    /// Oscillator-oscillator coupling, rad/s.
    pub g_o: f64,
    /// Junction-side mode frequency, rad/s.
    pub omega_q: f64,
    /// Resonator frequency, rad/s.
    pub omega_r: f64,
    /// 2 g_o / sqrt(omega_q omega_r); never exceeds 1 for a physical network.
    pub ratio: f64,
}

/// Coupling-to-frequency ratio of two capacitively coupled LC oscillators.
///
/// Positive definiteness of the capacitance matrix pins the ratio below 1,
/// which is the fundamental limit the Cooper-pair box evades through its
/// charge matrix elements.
pub fn oscillator_bound(spec: &CircuitSpec) -> Result<OscillatorBound> {
    let CircuitSpec::TwoOscillator(_) = spec else {
        return Err(Error::Validation(
            "oscillator_bound requires the two-oscillator topology".into(),
        ));
    };
    let DerivedParams::TwoOscillator(d) = derive_effective_params(spec)? else {
        unreachable!("two-oscillator spec must derive two-oscillator params");
    };
    Ok(OscillatorBound {
        g_o: d.g_o,
        omega_q: d.omega_q,
        omega_r: d.omega_r,
        ratio: d.bound_ratio,
    })
}

/// Rescale the resonator branch to impedance mu * Z_r at fixed frequency.
///
/// Every capacitance attached to the resonator node shrinks by mu while the
/// inductance grows by mu, so omega_r stays put, the mutual capacitances to
/// the resonator scale down with it (gamma preserved), and the couplings g
/// grow as sqrt(mu). The charging sector (effC_J, E_C, the CPB transition)
/// is untouched, as is the direct island-island coupling g12.
pub fn scale_impedance(params: &DerivedParams, mu: f64) -> Result<DerivedParams> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Validation(format!(
            "impedance scale factor must be positive and finite, got {mu}"
        )));
    }
    match params {
        DerivedParams::OneCpb(p) => {
            let mut s = *p;
            s.eff_c_r /= mu;
            s.c_jr /= mu;
            s.l_r *= mu;
            s.omega_r = 1.0 / (s.eff_c_r * s.l_r).sqrt();
            s.z_r = (s.l_r / s.eff_c_r).sqrt();
            s.gamma_ratio = if s.c_jr.is_finite() { s.eff_c_r / s.c_jr } else { 0.0 };
            s.g = s.omega_r * s.gamma_ratio * (s.z_r / (2.0 * R_Q)).sqrt();
            Ok(DerivedParams::OneCpb(s))
        }
        DerivedParams::TwoOscillator(p) => {
            let mut s = *p;
            s.eff_c_r /= mu;
            s.c_jr /= mu;
            s.l_r *= mu;
            s.omega_r = 1.0 / (s.eff_c_r * s.l_r).sqrt();
            s.z_r = (s.l_r / s.eff_c_r).sqrt();
            s.bound_ratio = if s.c_jr.is_finite() {
                (s.eff_c_j * s.eff_c_r).sqrt() / s.c_jr
            } else {
                0.0
            };
            s.g_o = s.bound_ratio / 2.0 * (s.omega_q * s.omega_r).sqrt();
            Ok(DerivedParams::TwoOscillator(s))
        }
        DerivedParams::TwoCpb(p) => {
            let mut s = *p;
            s.eff_c_r /= mu;
            s.c_1r /= mu;
            s.c_2r /= mu;
            s.l_r *= mu;
            s.omega_r = 1.0 / (s.eff_c_r * s.l_r).sqrt();
            s.z_r = (s.l_r / s.eff_c_r).sqrt();
            s.gamma_1 = if s.c_1r.is_finite() { s.eff_c_r / s.c_1r } else { 0.0 };
            s.gamma_2 = if s.c_2r.is_finite() { s.eff_c_r / s.c_2r } else { 0.0 };
            let x = (s.z_r / (2.0 * R_Q)).sqrt();
            s.g1 = s.omega_r * s.gamma_1 * x;
            s.g2 = s.omega_r * s.gamma_2 * x;
            Ok(DerivedParams::TwoCpb(s))
        }
    }
}

/// Lowest CPB transition and its charge matrix element.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CpbTransition {
    /// eps_1 - eps_0 of the charge-basis CPB Hamiltonian, rad/s.
    pub omega_q: f64,
    /// |<e| n_J |g>|, dimensionless (1/2 deep in the charge regime).
    pub n_matrix_element: f64,
}

/// Diagonalize the CPB on charge states -n_max..n_max and return the lowest
/// transition frequency plus the ground-to-excited charge matrix element.
pub fn cpb_transition_frequency(
    e_c: f64,
    e_j: f64,
    n_g: f64,
    n_max: usize,
) -> Result<CpbTransition> {
    if n_max < 5 {
        return Err(Error::Validation(format!(
            "charge truncation must keep at least n_max = 5, got {n_max}"
        )));
    }
    let h = models::cpb_hamiltonian(e_c, e_j, n_g, n_max)?;
    let es = hilbert::eigensystem(&h, Some(2))?;
    let dim = 2 * n_max + 1;
    let mut me = num_complex::Complex64::new(0.0, 0.0);
    for i in 0..dim {
        let n = i as f64 - n_max as f64;
        me += es.eigenvectors[(i, 1)].conj() * n * es.eigenvectors[(i, 0)];
    }
    Ok(CpbTransition {
        omega_q: es.eigenvalues[1] - es.eigenvalues[0],
        n_matrix_element: me.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{FEMTOFARAD, H_PLANCK, HBAR, NANOHENRY};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand::SeedableRng as _;
    use rand_chacha::ChaCha8Rng;

    const TWO_PI: f64 = std::f64::consts::TAU;

    fn table_one() -> OneCpbSpec {
        OneCpbSpec {
            c_g: 9.67 * FEMTOFARAD,
            c_j: 3.96 * FEMTOFARAD,
            c_c: 0.14 * FEMTOFARAD,
            c_r: 1.07 * FEMTOFARAD,
            c_p: 79.53 * FEMTOFARAD,
            l_r: 160.0 * NANOHENRY,
            e_j: H_PLANCK * 6.39e9,
            n_g: 0.5,
        }
    }

    fn table_two() -> TwoCpbSpec {
        TwoCpbSpec {
            c_g1: 7.15 * FEMTOFARAD,
            c_j1: 0.48 * FEMTOFARAD,
            c_g2: 7.47 * FEMTOFARAD,
            c_j2: 0.23 * FEMTOFARAD,
            c_c: 3.20 * FEMTOFARAD,
            c_r: 0.22 * FEMTOFARAD,
            l_r: 170.0 * NANOHENRY,
            e_j1: H_PLANCK * 8.78e9,
            e_j2: H_PLANCK * 8.78e9,
            n_g1: 0.5,
            n_g2: 0.5,
        }
    }

    fn one_cpb(spec: &CircuitSpec) -> OneCpbDerived {
        match derive_effective_params(spec).unwrap() {
            DerivedParams::OneCpb(p) => p,
            other => panic!("expected single-CPB params, got {other:?}"),
        }
    }

    fn two_cpb(spec: &CircuitSpec) -> TwoCpbDerived {
        match derive_effective_params(spec).unwrap() {
            DerivedParams::TwoCpb(p) => p,
            other => panic!("expected two-CPB params, got {other:?}"),
        }
    }

    #[test]
    fn reference_single_cpb_matrix() {
        let spec = CircuitSpec::OneCpb(table_one());
        let (m, gates) = build_capacitance_matrix(&spec).unwrap();
        let want = [
            [12.583336691292, 8.608183344527],
            [8.608183344527, 9.802810611148],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(m[(i, j)] / FEMTOFARAD, want[i][j], max_relative = 1e-10);
            }
        }
        // one voltage source; its vector obeys v0 = M00 - CJ, v1 = M01
        assert_eq!(gates.len(), 1);
        let s = table_one();
        assert_relative_eq!(gates[0][0], m[(0, 0)] - s.c_j, max_relative = 1e-12);
        assert_relative_eq!(gates[0][1], m[(0, 1)], max_relative = 1e-12);
        assert_relative_eq!(gates[0][0] / FEMTOFARAD, 8.623336691292, max_relative = 1e-10);
    }

    #[test]
    fn reference_single_cpb_effective_params() {
        let p = one_cpb(&CircuitSpec::OneCpb(table_one()));
        assert_relative_eq!(p.eff_c_j / FEMTOFARAD, 5.024196416898, max_relative = 1e-10);
        assert_relative_eq!(p.eff_c_r / FEMTOFARAD, 3.914005256026, max_relative = 1e-10);
        assert_relative_eq!(p.c_jr / FEMTOFARAD, 5.721444813252, max_relative = 1e-10);
        assert_relative_eq!(p.e_c / H_PLANCK / 1e9, 3.855388547213, max_relative = 1e-10);
        assert_relative_eq!(p.e_j / p.e_c, 1.657420496468, max_relative = 1e-10);
        assert_relative_eq!(p.omega_r / TWO_PI / 1e9, 6.359887566867, max_relative = 1e-10);
        assert_relative_eq!(p.z_r, 6393.656338472, max_relative = 1e-10);
        assert_relative_eq!(p.gamma_ratio, 0.684093858069, max_relative = 1e-10);
        assert_relative_eq!(p.g / TWO_PI / 1e9, 7.675860706379, max_relative = 1e-10);
        assert_relative_eq!(p.g_tilde() / TWO_PI / 1e9, 7.675860706379 / 2.0, max_relative = 1e-10);
        // construction invariants
        assert_relative_eq!(p.omega_r, 1.0 / (p.eff_c_r * p.l_r).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(
            p.g,
            p.omega_r * p.gamma_ratio * (p.z_r / (2.0 * R_Q)).sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn reference_single_cpb_qubit_transition() {
        let p = one_cpb(&CircuitSpec::OneCpb(table_one()));
        let t = p.qubit_transition(10).unwrap();
        assert_relative_eq!(t.omega_q / TWO_PI / 1e9, 6.322341483168, max_relative = 1e-9);
        assert_relative_eq!(t.n_matrix_element, 0.510488468714, max_relative = 1e-9);
        assert_relative_eq!(t.omega_q / p.omega_r, 0.994096423356, max_relative = 1e-9);
        assert_relative_eq!(
            p.g / (p.omega_r * t.omega_q).sqrt(),
            1.210496090980,
            max_relative = 1e-9
        );
    }

    #[test]
    fn reference_two_cpb_matrix_and_gates() {
        let spec = CircuitSpec::TwoCpb(table_two());
        let (m, gates) = build_capacitance_matrix(&spec).unwrap();
        let want = [
            [5.197911512845, 2.540937202664, 3.629424357755],
            [2.540937202664, 5.045342530923, 3.678139866794],
            [3.629424357755, 3.678139866794, 5.473782112274],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m[(i, j)] / FEMTOFARAD, want[i][j], max_relative = 1e-10);
            }
        }
        assert_eq!(gates.len(), 2);
        let v1_want = [4.717911512845, 2.540937202664, 3.629424357755];
        let v2_want = [-2.540937202664, -4.815342530923, -3.678139866794];
        for k in 0..3 {
            assert_relative_eq!(gates[0][k] / FEMTOFARAD, v1_want[k], max_relative = 1e-10);
            assert_relative_eq!(gates[1][k] / FEMTOFARAD, v2_want[k], max_relative = 1e-10);
        }
        // structural identities against the matrix entries
        let s = table_two();
        assert_relative_eq!(gates[0][0], m[(0, 0)] - s.c_j1, max_relative = 1e-12);
        assert_relative_eq!(-gates[1][1], m[(1, 1)] - s.c_j2, max_relative = 1e-12);
        assert_relative_eq!(gates[0][2], m[(0, 2)], max_relative = 1e-12);
        assert_relative_eq!(-gates[1][2], m[(1, 2)], max_relative = 1e-12);
    }

    #[test]
    fn reference_two_cpb_effective_params() {
        let p = two_cpb(&CircuitSpec::TwoCpb(table_two()));
        assert_relative_eq!(p.eff_c_j1 / FEMTOFARAD, 2.787347588202, max_relative = 1e-10);
        assert_relative_eq!(p.eff_c_j2 / FEMTOFARAD, 2.570058708485, max_relative = 1e-10);
        assert_relative_eq!(p.eff_c_r / FEMTOFARAD, 1.986417209674, max_relative = 1e-10);
        assert_relative_eq!(p.c_1r / FEMTOFARAD, 4.379909634923, max_relative = 1e-10);
        assert_relative_eq!(p.c_2r / FEMTOFARAD, 3.967991026925, max_relative = 1e-10);
        assert_relative_eq!(p.c_12 / FEMTOFARAD, 70.248324296125, max_relative = 1e-10);
        assert_relative_eq!(p.e_j1 / p.e_c1, 1.263429121784, max_relative = 1e-10);
        assert_relative_eq!(p.e_j2 / p.e_c2, 1.164937961357, max_relative = 1e-10);
        assert_relative_eq!(p.omega_r / TWO_PI / 1e9, 8.660848392568, max_relative = 1e-10);
        assert_relative_eq!(p.z_r, 9251.011612542, max_relative = 1e-10);
        assert_relative_eq!(p.gamma_1, 0.453529267781, max_relative = 1e-10);
        assert_relative_eq!(p.gamma_2, 0.500610307885, max_relative = 1e-10);
        assert_relative_eq!(p.g1 / TWO_PI / 1e9, 8.335807548896, max_relative = 1e-10);
        assert_relative_eq!(p.g2 / TWO_PI / 1e9, 9.201150796595, max_relative = 1e-10);
        // direct coupling is negative and matches -1/(R_Q C_12)
        assert!(p.g12 < 0.0);
        assert_relative_eq!(p.g12 / TWO_PI / 1e9, -2.205915034201, max_relative = 1e-10);
        assert_relative_eq!(p.g12, -1.0 / (R_Q * p.c_12), max_relative = 1e-12);
        assert_relative_eq!(p.g_tilde_12() / TWO_PI / 1e9, 0.551478758550, max_relative = 1e-10);
    }

    #[test]
    fn reference_two_cpb_qubit_transitions() {
        let p = two_cpb(&CircuitSpec::TwoCpb(table_two()));
        let t1 = p.qubit_transition_1(10).unwrap();
        let t2 = p.qubit_transition_2(10).unwrap();
        assert_relative_eq!(t1.omega_q / TWO_PI / 1e9, 8.725673809176, max_relative = 1e-9);
        assert_relative_eq!(t2.omega_q / TWO_PI / 1e9, 8.733759854061, max_relative = 1e-9);
        assert_relative_eq!(t1.n_matrix_element, 0.506153443474, max_relative = 1e-9);
        assert_relative_eq!(t2.n_matrix_element, 0.505241864867, max_relative = 1e-9);
        // tabulated ratios use 2 g_ell / sqrt(wr wq_ell) for this topology
        assert_relative_eq!(
            2.0 * p.g1 / (p.omega_r * t1.omega_q).sqrt(),
            1.917776400216,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            2.0 * p.g2 / (p.omega_r * t2.omega_q).sqrt(),
            2.115881311622,
            max_relative = 1e-9
        );
    }

    /// Independent check: assemble the one-CPB quadratic form node by node
    /// (Josephson, resonator, feed) and Schur-eliminate the passive feed.
    fn one_cpb_lagrangian(s: &OneCpbSpec) -> Array2<f64> {
        let mut m = Array2::<f64>::zeros((3, 3));
        let mut add = |nodes: &[usize], cap: f64| {
            for &i in nodes {
                for &j in nodes {
                    m[(i, j)] += cap;
                }
            }
        };
        add(&[2], s.c_p);
        add(&[1], s.c_r);
        add(&[1, 2], s.c_c);
        add(&[0], s.c_j);
        add(&[0, 1, 2], s.c_g);
        schur_eliminate_last(&m)
    }

    /// Independent check for the two-CPB network: four nodes (J1 branch, J2
    /// branch, resonator branch, shared end node), term-by-term stencils,
    /// Schur elimination of the shared node. Branch orientations make the J1
    /// row negative; magnitudes are what the closed form publishes.
    fn two_cpb_lagrangian(s: &TwoCpbSpec) -> Array2<f64> {
        let mut m = Array2::<f64>::zeros((4, 4));
        let mut add = |v: [f64; 4], cap: f64| {
            for i in 0..4 {
                for j in 0..4 {
                    m[(i, j)] += cap * v[i] * v[j];
                }
            }
        };
        let p0 = [0.0, 0.0, 0.0, 1.0];
        let pr = [0.0, 0.0, 1.0, 1.0];
        let i1 = [-1.0, 0.0, 0.0, 1.0];
        let i2 = [0.0, 1.0, 1.0, 1.0];
        let sub = |a: [f64; 4], b: [f64; 4]| {
            [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
        };
        add(sub(pr, p0), s.c_r);
        add(p0, s.c_c);
        add(pr, s.c_c);
        add(sub(i1, p0), s.c_j1);
        add(sub(i2, pr), s.c_j2);
        add(i1, s.c_g1);
        add(i2, s.c_g2);
        schur_eliminate_last(&m)
    }

    fn schur_eliminate_last(m: &Array2<f64>) -> Array2<f64> {
        let n = m.nrows();
        let d = m[(n - 1, n - 1)];
        let mut out = Array2::<f64>::zeros((n - 1, n - 1));
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                out[(i, j)] = m[(i, j)] - m[(i, n - 1)] * m[(j, n - 1)] / d;
            }
        }
        out
    }

    #[test]
    fn closed_form_matches_lagrangian_assembly_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        for _ in 0..200 {
            let s = OneCpbSpec {
                c_g: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                c_j: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                c_c: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                c_r: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                c_p: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                l_r: 160.0 * NANOHENRY,
                e_j: H_PLANCK * 6e9,
                n_g: 0.5,
            };
            let (m, _) = build_capacitance_matrix(&CircuitSpec::OneCpb(s)).unwrap();
            let oracle = one_cpb_lagrangian(&s);
            let scale = oracle.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            for i in 0..2 {
                for j in 0..2 {
                    assert!(
                        (m[(i, j)] - oracle[(i, j)]).abs() < 1e-13 * scale,
                        "entry ({i},{j}) disagrees with the assembled form"
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_lagrangian_assembly_two_cpb() {
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        for _ in 0..200 {
            let s = TwoCpbSpec {
                c_g1: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                c_j1: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                c_g2: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                c_j2: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                c_c: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                c_r: rng.gen_range(0.11..550.0) * FEMTOFARAD,
                l_r: 170.0 * NANOHENRY,
                e_j1: H_PLANCK * 8e9,
                e_j2: H_PLANCK * 8e9,
                n_g1: 0.5,
                n_g2: 0.5,
            };
            let (m, _) = build_capacitance_matrix(&CircuitSpec::TwoCpb(s)).unwrap();
            let oracle = two_cpb_lagrangian(&s);
            let scale = oracle.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (m[(i, j)] - oracle[(i, j)].abs()).abs() < 1e-13 * scale,
                        "entry ({i},{j}) magnitude disagrees with the assembled form"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_gate_capacitance_decouples() {
        let mut s = table_one();
        s.c_g = 0.0;
        let spec = CircuitSpec::OneCpb(s);
        let (m, gates) = build_capacitance_matrix(&spec).unwrap();
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(gates[0][0], 0.0);
        let p = one_cpb(&spec);
        assert!(p.c_jr.is_infinite());
        assert_eq!(p.gamma_ratio, 0.0);
        assert_eq!(p.g, 0.0);
    }

    #[test]
    fn singular_matrix_is_a_numeric_error() {
        let m = ndarray::arr2(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(invert_small(&m), Err(Error::Numeric(_))));
        let m3 = ndarray::arr2(&[[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(invert_small(&m3), Err(Error::Numeric(_))));
    }

    #[test]
    fn invert_small_matches_identity() {
        let (m, _) = build_capacitance_matrix(&CircuitSpec::TwoCpb(table_two())).unwrap();
        let inv = invert_small(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += m[(i, k)] * inv[(k, j)];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(s, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn validation_rejects_nonpositive_elements() {
        let mut s = table_one();
        s.c_r = -1.0 * FEMTOFARAD;
        assert!(matches!(
            build_capacitance_matrix(&CircuitSpec::OneCpb(s)),
            Err(Error::Validation(_))
        ));
        let mut s = table_one();
        s.c_j = 0.0;
        assert!(CircuitSpec::OneCpb(s).validate().is_err());
        let mut s = table_one();
        s.l_r = 0.0;
        assert!(CircuitSpec::OneCpb(s).validate().is_err());
        let mut s = table_one();
        s.e_j = -1e-24;
        assert!(CircuitSpec::OneCpb(s).validate().is_err());
        let mut s = table_one();
        s.n_g = f64::NAN;
        assert!(CircuitSpec::OneCpb(s).validate().is_err());
        let mut s = table_two();
        s.c_c = 0.0;
        assert!(CircuitSpec::TwoCpb(s).validate().is_err());
    }

    #[test]
    fn impedance_scaling_reference_point() {
        let base = derive_effective_params(&CircuitSpec::OneCpb(table_one())).unwrap();
        let same = scale_impedance(&base, 1.0).unwrap();
        assert_eq!(base, same);

        let DerivedParams::OneCpb(p0) = base else { unreachable!() };
        let DerivedParams::OneCpb(p4) = scale_impedance(&base, 4.0).unwrap() else {
            unreachable!()
        };
        assert_relative_eq!(p4.omega_r, p0.omega_r, max_relative = 1e-12);
        assert_relative_eq!(p4.z_r, 4.0 * p0.z_r, max_relative = 1e-12);
        assert_relative_eq!(p4.g, 2.0 * p0.g, max_relative = 1e-12);
        assert_relative_eq!(p4.eff_c_r, p0.eff_c_r / 4.0, max_relative = 1e-14);
        assert_relative_eq!(p4.c_jr, p0.c_jr / 4.0, max_relative = 1e-14);
        assert_relative_eq!(p4.gamma_ratio, p0.gamma_ratio, max_relative = 1e-14);
        assert_eq!(p4.eff_c_j, p0.eff_c_j);
        assert_eq!(p4.e_c, p0.e_c);
        assert_eq!(p4.e_j, p0.e_j);

        // the coupling ratio R = g / sqrt(wq wr) doubles: wq is untouched
        let t = p0.qubit_transition(10).unwrap();
        let r0 = p0.g / (p0.omega_r * t.omega_q).sqrt();
        let r4 = p4.g / (p4.omega_r * t.omega_q).sqrt();
        assert_relative_eq!(r4 / r0, 2.0, max_relative = 1e-12);

        assert!(scale_impedance(&base, 0.0).is_err());
        assert!(scale_impedance(&base, -2.0).is_err());
        assert!(scale_impedance(&base, f64::NAN).is_err());
    }

    #[test]
    fn impedance_scaling_two_cpb_leaves_island_coupling() {
        let base = derive_effective_params(&CircuitSpec::TwoCpb(table_two())).unwrap();
        let DerivedParams::TwoCpb(p0) = base else { unreachable!() };
        let DerivedParams::TwoCpb(p4) = scale_impedance(&base, 4.0).unwrap() else {
            unreachable!()
        };
        assert_relative_eq!(p4.omega_r, p0.omega_r, max_relative = 1e-12);
        assert_relative_eq!(p4.g1, 2.0 * p0.g1, max_relative = 1e-12);
        assert_relative_eq!(p4.g2, 2.0 * p0.g2, max_relative = 1e-12);
        assert_relative_eq!(p4.c_1r, p0.c_1r / 4.0, max_relative = 1e-14);
        assert_relative_eq!(p4.c_2r, p0.c_2r / 4.0, max_relative = 1e-14);
        assert_eq!(p4.c_12, p0.c_12);
        assert_eq!(p4.g12, p0.g12);
        assert_eq!(p4.e_c1, p0.e_c1);
    }

    #[test]
    fn oscillator_bound_reference_values() {
        let t1 = table_one();
        let spec = CircuitSpec::TwoOscillator(TwoOscillatorSpec {
            c_g: t1.c_g,
            c_j: t1.c_j,
            c_c: t1.c_c,
            c_r: t1.c_r,
            c_p: t1.c_p,
            l_r: t1.l_r,
            l_j: 300.0 * NANOHENRY,
        });
        let b = oscillator_bound(&spec).unwrap();
        assert_relative_eq!(b.ratio, 0.775065299903, max_relative = 1e-10);
        assert_relative_eq!(b.g_o / TWO_PI / 1e9, 1.978773642434, max_relative = 1e-10);
        assert_relative_eq!(b.omega_q / TWO_PI / 1e9, 4.099455717972, max_relative = 1e-10);
        assert_relative_eq!(
            b.ratio,
            2.0 * b.g_o / (b.omega_q * b.omega_r).sqrt(),
            max_relative = 1e-12
        );
        assert!(oscillator_bound(&CircuitSpec::OneCpb(t1)).is_err());
    }

    #[test]
    fn oscillator_bound_saturates_in_the_large_cap_limit() {
        let c = 0.14 * FEMTOFARAD;
        let spec = CircuitSpec::TwoOscillator(TwoOscillatorSpec {
            c_g: 1e4 * c,
            c_j: c,
            c_c: c,
            c_r: 1.07 * FEMTOFARAD,
            c_p: 1e4 * c,
            l_r: 160.0 * NANOHENRY,
            l_j: 300.0 * NANOHENRY,
        });
        let b = oscillator_bound(&spec).unwrap();
        assert_relative_eq!(b.ratio, 0.999036820129, max_relative = 1e-10);
        assert!(1.0 - b.ratio < 1e-3);
        assert!(b.ratio <= 1.0);
    }

    #[test]
    fn oscillator_bound_vanishes_without_gate_capacitance() {
        let t1 = table_one();
        let spec = CircuitSpec::TwoOscillator(TwoOscillatorSpec {
            c_g: 0.0,
            c_j: t1.c_j,
            c_c: t1.c_c,
            c_r: t1.c_r,
            c_p: t1.c_p,
            l_r: t1.l_r,
            l_j: 300.0 * NANOHENRY,
        });
        let b = oscillator_bound(&spec).unwrap();
        assert_eq!(b.ratio, 0.0);
        assert_eq!(b.g_o, 0.0);
    }

    #[test]
    fn cpb_transition_is_converged_in_charge_truncation() {
        let e_c = H_PLANCK * 3.0e9;
        for ratio in [0.1, 1.657, 10.0, 100.0] {
            let e_j = ratio * e_c;
            let a = cpb_transition_frequency(e_c, e_j, 0.5, 10).unwrap();
            let b = cpb_transition_frequency(e_c, e_j, 0.5, 20).unwrap();
            let rel = (a.omega_q - b.omega_q).abs() / b.omega_q;
            assert!(rel < 1e-9, "EJ/EC={ratio}: truncation drift {rel:.2e}");
        }
    }

    #[test]
    fn cpb_transition_limits() {
        // deep charge regime: the transition collapses onto E_J
        let e_c = H_PLANCK * 5.0e9;
        let e_j = 0.05 * e_c;
        let t = cpb_transition_frequency(e_c, e_j, 0.5, 10).unwrap();
        assert_abs_diff_eq!(HBAR * t.omega_q / e_j, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(t.n_matrix_element, 0.5, epsilon = 1e-3);

        // transmon regime: sqrt(8 EJ EC) - EC within 2%
        let e_c = H_PLANCK * 0.2e9;
        let e_j = 50.0 * e_c;
        let t = cpb_transition_frequency(e_c, e_j, 0.5, 20).unwrap();
        let approx_wq = ((8.0 * e_j * e_c).sqrt() - e_c) / HBAR;
        let rel = (t.omega_q - approx_wq).abs() / t.omega_q;
        assert!(rel < 0.02, "transmon-limit deviation {rel:.3e}");
    }

    #[test]
    fn cpb_transition_requires_enough_charge_states() {
        let e_c = H_PLANCK * 3.0e9;
        assert!(cpb_transition_frequency(e_c, e_c, 0.5, 4).is_err());
        assert!(cpb_transition_frequency(e_c, e_c, 0.5, 5).is_ok());
    }

    fn smallest_eigenvalue(m: &Array2<f64>) -> f64 {
        let n = m.nrows();
        let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| m[(i, j)]);
        dm.symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &x| a.min(x))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn capacitance_matrices_are_positive_definite(
            c_g in 0.11f64..550.0,
            c_j in 0.11f64..550.0,
            c_c in 0.11f64..550.0,
            c_r in 0.11f64..550.0,
            c_p in 0.11f64..550.0,
        ) {
            let s = OneCpbSpec {
                c_g: c_g * FEMTOFARAD,
                c_j: c_j * FEMTOFARAD,
                c_c: c_c * FEMTOFARAD,
                c_r: c_r * FEMTOFARAD,
                c_p: c_p * FEMTOFARAD,
                l_r: 160.0 * NANOHENRY,
                e_j: H_PLANCK * 6e9,
                n_g: 0.5,
            };
            let (m, _) = build_capacitance_matrix(&CircuitSpec::OneCpb(s)).unwrap();
            prop_assert!(smallest_eigenvalue(&m) > 0.0);
        }

        #[test]
        fn two_cpb_matrices_are_positive_definite(
            c_g1 in 0.11f64..550.0,
            c_j1 in 0.11f64..550.0,
            c_g2 in 0.11f64..550.0,
            c_j2 in 0.11f64..550.0,
            c_c in 0.11f64..550.0,
            c_r in 0.11f64..550.0,
        ) {
            let s = TwoCpbSpec {
                c_g1: c_g1 * FEMTOFARAD,
                c_j1: c_j1 * FEMTOFARAD,
                c_g2: c_g2 * FEMTOFARAD,
                c_j2: c_j2 * FEMTOFARAD,
                c_c: c_c * FEMTOFARAD,
                c_r: c_r * FEMTOFARAD,
                l_r: 170.0 * NANOHENRY,
                e_j1: H_PLANCK * 8e9,
                e_j2: H_PLANCK * 8e9,
                n_g1: 0.5,
                n_g2: 0.5,
            };
            let (m, _) = build_capacitance_matrix(&CircuitSpec::TwoCpb(s)).unwrap();
            prop_assert!(smallest_eigenvalue(&m) > 0.0);
        }

        #[test]
        fn oscillator_ratio_never_exceeds_one(
            c_g in 0.11f64..550.0,
            c_j in 0.11f64..550.0,
            c_c in 0.11f64..550.0,
            c_r in 0.11f64..550.0,
            c_p in 0.11f64..550.0,
            l_r in 100.0f64..600.0,
            l_j in 100.0f64..600.0,
        ) {
            let s = TwoOscillatorSpec {
                c_g: c_g * FEMTOFARAD,
                c_j: c_j * FEMTOFARAD,
                c_c: c_c * FEMTOFARAD,
                c_r: c_r * FEMTOFARAD,
                c_p: c_p * FEMTOFARAD,
                l_r: l_r * NANOHENRY,
                l_j: l_j * NANOHENRY,
            };
            let b = oscillator_bound(&CircuitSpec::TwoOscillator(s)).unwrap();
            prop_assert!(b.ratio <= 1.0);
            prop_assert!(b.ratio > 0.0);
        }

        #[test]
        fn derived_params_round_trip_the_inverse(
            c_g in 0.11f64..550.0,
            c_j in 0.11f64..550.0,
            c_c in 0.11f64..550.0,
            c_r in 0.11f64..550.0,
            c_p in 0.11f64..550.0,
        ) {
            let s = OneCpbSpec {
                c_g: c_g * FEMTOFARAD,
                c_j: c_j * FEMTOFARAD,
                c_c: c_c * FEMTOFARAD,
                c_r: c_r * FEMTOFARAD,
                c_p: c_p * FEMTOFARAD,
                l_r: 160.0 * NANOHENRY,
                e_j: H_PLANCK * 6e9,
                n_g: 0.5,
            };
            let spec = CircuitSpec::OneCpb(s);
            let (m, _) = build_capacitance_matrix(&spec).unwrap();
            let inv = invert_small(&m).unwrap();
            let DerivedParams::OneCpb(p) = derive_effective_params(&spec).unwrap() else {
                unreachable!()
            };
            prop_assert!((inv[(0, 0)] - 1.0 / p.eff_c_j).abs() <= 1e-12 * inv[(0, 0)].abs());
            prop_assert!((inv[(1, 1)] - 1.0 / p.eff_c_r).abs() <= 1e-12 * inv[(1, 1)].abs());
            prop_assert!((inv[(0, 1)].abs() - 1.0 / p.c_jr).abs() <= 1e-12 * inv[(0, 1)].abs());
        }
    }
}
