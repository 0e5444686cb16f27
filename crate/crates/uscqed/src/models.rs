//! Hamiltonian builders for every model in the toolkit.
//!
//! Convention used throughout: builders return H divided by hbar, so all
//! matrix entries and all eigenvalues are angular frequencies in rad/s.
//! Charging and Josephson energies enter in joules and are divided out here,
//! at the single boundary between energy-unit and frequency-unit code.
//!
//! Qubit factors use sigma_z = diag(-1, +1) with index 0 the ground state.

use ndarray::Array2;
use num_complex::Complex64;

use crate::circuit::{OneCpbDerived, TwoCpbDerived};
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::hilbert::{
    charge_operators, fock_annihilation, pauli_x, pauli_z, tensor, Operator,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Default charge-basis truncation: charge states -10..10 keep the five
/// lowest CPB levels fully converged at E_J/E_C of order 1.
pub const DEFAULT_N_MAX: usize = 10;

/// Fock truncation sized to the normalized coupling: displaced-state
/// occupation grows as (g/omega_r)^2, so 20 levels cover g/omega_r <= 0.5
/// and 40 cover the deep-strong window up to 1.5.
pub fn recommended_n_fock(g_over_wr: f64) -> usize {
    if g_over_wr.abs() <= 0.5 {
        20
    } else {
        40
    }
}

fn check_frequency(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::Validation(format!(
            "{name} must be a positive finite frequency, got {value}"
        )));
    }
    Ok(())
}

fn check_coupling(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::Validation(format!(
            "{name} must be a non-negative finite coupling, got {value}"
        )));
    }
    Ok(())
}

/// Frequencies of the two-level qubit + oscillator Rabi-type models. rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiParams {
    pub omega_q: f64,
    pub omega_r: f64,
    /// sigma_x-sector coupling; half the charge coupling g of the circuit.
    pub g_tilde: f64,
}

impl RabiParams {
    pub fn validate(&self) -> Result<()> {
        // omega_q = 0 is the deep-strong analysis limit and stays legal
        check_coupling("omega_q", self.omega_q)?;
        check_frequency("omega_r", self.omega_r)?;
        check_coupling("g_tilde", self.g_tilde)
    }
}

/// Two two-level CPBs sharing one oscillator: the state-transfer mediator.
/// All rad/s; `g12` is signed (negative for the physical circuit).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MediatorParams {
    pub omega_q1: f64,
    pub omega_q2: f64,
    pub omega_r: f64,
    pub g_tilde1: f64,
    pub g_tilde2: f64,
    pub g12: f64,
}

impl MediatorParams {
    /// Both qubits on resonance with the oscillator and equally coupled,
    /// the configuration the transfer protocol uses.
    pub fn symmetric(omega_r: f64, g_tilde: f64, g12: f64) -> Self {
        Self {
            omega_q1: omega_r,
            omega_q2: omega_r,
            omega_r,
            g_tilde1: g_tilde,
            g_tilde2: g_tilde,
            g12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_frequency("omega_q1", self.omega_q1)?;
        check_frequency("omega_q2", self.omega_q2)?;
        check_frequency("omega_r", self.omega_r)?;
        check_coupling("g_tilde1", self.g_tilde1)?;
        check_coupling("g_tilde2", self.g_tilde2)?;
        if !self.g12.is_finite() {
            return Err(Error::Validation(format!(
                "g12 must be finite, got {}",
                self.g12
            )));
        }
        Ok(())
    }
}

/// Charge-basis Cooper-pair box: 4 E_C (n - n_g)^2 - E_J cos(phi), over hbar.
///
/// E_J = 0 is allowed here (it is an analysis limit, not a physical circuit).
pub fn cpb_hamiltonian(e_c: f64, e_j: f64, n_g: f64, n_max: usize) -> Result<Operator> {
    if !(e_c > 0.0) || !e_c.is_finite() {
        return Err(Error::Validation(format!(
            "charging energy must be positive and finite, got {e_c}"
        )));
    }
    if !(e_j >= 0.0) || !e_j.is_finite() {
        return Err(Error::Validation(format!(
            "Josephson energy must be non-negative and finite, got {e_j}"
        )));
    }
    if !n_g.is_finite() {
        return Err(Error::Validation(format!("n_g must be finite, got {n_g}")));
    }
    if n_max < 5 {
        return Err(Error::Validation(format!(
            "charge truncation must keep at least n_max = 5, got {n_max}"
        )));
    }
    let dim = 2 * n_max + 1;
    let mut h = Array2::from_elem((dim, dim), ZERO);
    for i in 0..dim {
        let n = i as f64 - n_max as f64;
        h[(i, i)] = re(4.0 * e_c * (n - n_g).powi(2) / HBAR);
        if i + 1 < dim {
            // -E_J cos(phi) = -(E_J/2)(raise + lower)
            h[(i, i + 1)] = re(-e_j / (2.0 * HBAR));
            h[(i + 1, i)] = re(-e_j / (2.0 * HBAR));
        }
    }
    Operator::new(h, vec![dim])
}

/// Full single-CPB circuit Hamiltonian over hbar. Factor order (CPB, osc).
pub fn one_cpb_full(p: &OneCpbDerived, n_max: usize, n_fock: usize) -> Result<Operator> {
    let h_cpb = cpb_hamiltonian(p.e_c, p.e_j, p.n_g, n_max)?;
    let (n_op, _) = charge_operators(n_max)?;
    let a = fock_annihilation(n_fock)?;
    let number = a.dagger().matmul(&a);
    let mut x = a.dagger();
    x.add_scaled(ONE, &a);
    let id_c = Operator::identity(&[2 * n_max + 1]);
    let id_f = Operator::identity(&[n_fock]);

    let mut h = tensor(&[&h_cpb, &id_f]);
    h.add_scaled(re(p.omega_r), &tensor(&[&id_c, &number]));
    h.add_scaled(re(p.g), &tensor(&[&n_op, &x]));
    Ok(h)
}

/// Two-level truncation of the single-CPB circuit at the sweet spot, over
/// hbar: wq/2 sz + wr a^dag a + g_tilde (I + sx)(a + a^dag).
///
/// The (I + sx) factor is the image of the island charge under the two-level
/// reduction; the identity part is what breaks parity relative to the QRM.
pub fn two_level_h1(p: &RabiParams, n_fock: usize) -> Result<Operator> {
    p.validate()?;
    let a = fock_annihilation(n_fock)?;
    let number = a.dagger().matmul(&a);
    let mut x = a.dagger();
    x.add_scaled(ONE, &a);
    let mut one_plus_sx = Operator::identity(&[2]);
    one_plus_sx.add_scaled(ONE, &pauli_x());
    let id_f = Operator::identity(&[n_fock]);

    let mut h = tensor(&[&pauli_z(), &id_f]).scaled(re(p.omega_q / 2.0));
    h.add_scaled(re(p.omega_r), &tensor(&[&Operator::identity(&[2]), &number]));
    h.add_scaled(re(p.g_tilde), &tensor(&[&one_plus_sx, &x]));
    Ok(h)
}

/// Quantum Rabi model over hbar: wq/2 sz + wr a^dag a + g_tilde sx (a+a^dag).
pub fn qrm(p: &RabiParams, n_fock: usize) -> Result<Operator> {
    p.validate()?;
    let a = fock_annihilation(n_fock)?;
    let number = a.dagger().matmul(&a);
    let mut x = a.dagger();
    x.add_scaled(ONE, &a);
    let id_f = Operator::identity(&[n_fock]);

    let mut h = tensor(&[&pauli_z(), &id_f]).scaled(re(p.omega_q / 2.0));
    h.add_scaled(re(p.omega_r), &tensor(&[&Operator::identity(&[2]), &number]));
    h.add_scaled(re(p.g_tilde), &tensor(&[&pauli_x(), &x]));
    Ok(h)
}

/// Parity operator sigma_z (x) (-1)^(a^dag a) of the Rabi-type models.
pub fn rabi_parity(n_fock: usize) -> Result<Operator> {
    if n_fock < 2 {
        return Err(Error::Validation(format!(
            "fock truncation must be >= 2, got {n_fock}"
        )));
    }
    let mut signs = Array2::from_elem((n_fock, n_fock), ZERO);
    for n in 0..n_fock {
        signs[(n, n)] = if n % 2 == 0 { ONE } else { -ONE };
    }
    let signs = Operator::new(signs, vec![n_fock])?;
    Ok(tensor(&[&pauli_z(), &signs]))
}

/// Full two-CPB circuit Hamiltonian over hbar. Factor order (CPB1, CPB2, osc).
pub fn two_cpb_hamiltonian(p: &TwoCpbDerived, n_max: usize, n_fock: usize) -> Result<Operator> {
    let h1 = cpb_hamiltonian(p.e_c1, p.e_j1, p.n_g1, n_max)?;
    let h2 = cpb_hamiltonian(p.e_c2, p.e_j2, p.n_g2, n_max)?;
    let (n_op, _) = charge_operators(n_max)?;
    let a = fock_annihilation(n_fock)?;
    let number = a.dagger().matmul(&a);
    let mut x = a.dagger();
    x.add_scaled(ONE, &a);
    let dim_c = 2 * n_max + 1;
    let id_c = Operator::identity(&[dim_c]);
    let id_f = Operator::identity(&[n_fock]);

    let mut h = tensor(&[&h1, &id_c, &id_f]);
    h.add_scaled(ONE, &tensor(&[&id_c, &h2, &id_f]));
    h.add_scaled(re(p.omega_r), &tensor(&[&id_c, &id_c, &number]));
    h.add_scaled(re(p.g1), &tensor(&[&n_op, &id_c, &x]));
    h.add_scaled(re(p.g2), &tensor(&[&id_c, &n_op, &x]));
    h.add_scaled(re(p.g12), &tensor(&[&n_op, &n_op, &id_f]));
    Ok(h)
}

/// Two-level mediator for the transfer protocol, over hbar. Factor order
/// (qubit1, qubit2, osc).
///
/// The island charges map to (I + sx)/2; the direct charge-charge term
/// becomes g12 (I + sx1)(I + sx2)/4.
pub fn usc_mediator(p: &MediatorParams, n_fock: usize) -> Result<Operator> {
    p.validate()?;
    let a = fock_annihilation(n_fock)?;
    let number = a.dagger().matmul(&a);
    let mut x = a.dagger();
    x.add_scaled(ONE, &a);
    let mut one_plus_sx = Operator::identity(&[2]);
    one_plus_sx.add_scaled(ONE, &pauli_x());
    let id_q = Operator::identity(&[2]);
    let id_f = Operator::identity(&[n_fock]);

    let mut h = tensor(&[&pauli_z(), &id_q, &id_f]).scaled(re(p.omega_q1 / 2.0));
    h.add_scaled(
        re(p.omega_q2 / 2.0),
        &tensor(&[&id_q, &pauli_z(), &id_f]),
    );
    h.add_scaled(re(p.omega_r), &tensor(&[&id_q, &id_q, &number]));
    h.add_scaled(re(p.g_tilde1), &tensor(&[&one_plus_sx, &id_q, &x]));
    h.add_scaled(re(p.g_tilde2), &tensor(&[&id_q, &one_plus_sx, &x]));
    h.add_scaled(
        re(p.g12 / 4.0),
        &tensor(&[&one_plus_sx, &one_plus_sx, &id_f]),
    );
    Ok(h)
}

/// Truncated transmon: level energies (rad/s, ground-referenced) and the
/// charge operator normalized so <0|n|1> = 1.
#[derive(Clone, Debug)]
pub struct TransmonLevels {
    pub energies: Vec<f64>,
    pub charge_op: Operator,
}

/// Two- or three-level transmon with relative anharmonicity alpha_r.
///
/// Three-level energies are (0, w01, (2 + alpha_r) w01). The charge ladder
/// uses harmonic sqrt(k+1) ratios, the leading-order transmon result; the
/// two-level form is plain sigma_x.
pub fn transmon_levels(omega_01: f64, alpha_r: f64, n_levels: usize) -> Result<TransmonLevels> {
    check_frequency("omega_01", omega_01)?;
    if !alpha_r.is_finite() {
        return Err(Error::Validation(format!(
            "alpha_r must be finite, got {alpha_r}"
        )));
    }
    match n_levels {
        2 => Ok(TransmonLevels {
            energies: vec![0.0, omega_01],
            charge_op: pauli_x(),
        }),
        3 => {
            let mut m = Array2::from_elem((3, 3), ZERO);
            m[(0, 1)] = ONE;
            m[(1, 0)] = ONE;
            m[(1, 2)] = re(2f64.sqrt());
            m[(2, 1)] = re(2f64.sqrt());
            Ok(TransmonLevels {
                energies: vec![0.0, omega_01, (2.0 + alpha_r) * omega_01],
                charge_op: Operator::new(m, vec![3])?,
            })
        }
        n => Err(Error::Validation(format!(
            "transmon truncation must be 2 or 3 levels, got {n}"
        ))),
    }
}

/// Transfer-protocol Hamiltonian over hbar: two transmons exchanging an
/// excitation through the dressed mediator. Factor order (transmon1,
/// mediator, transmon2).
///
/// `mediator_energies` are the retained dressed levels (rad/s) and
/// `x_dressed` is a + a^dag projected into that basis; both come from the
/// spectrum module. Mediator energies enter ground-referenced, dropping a
/// multiple of the identity that only shifts the global phase.
pub fn qst_hamiltonian(
    mediator_energies: &[f64],
    x_dressed: &Operator,
    transmon1: &TransmonLevels,
    transmon2: &TransmonLevels,
    lambda_1: f64,
    lambda_2: f64,
) -> Result<Operator> {
    let k = mediator_energies.len();
    if k == 0 {
        return Err(Error::Validation("no mediator levels supplied".into()));
    }
    if x_dressed.dim() != k {
        return Err(Error::Validation(format!(
            "dressed X is {}x{} but {k} mediator energies were supplied",
            x_dressed.dim(),
            x_dressed.dim()
        )));
    }
    check_coupling("lambda_1", lambda_1)?;
    check_coupling("lambda_2", lambda_2)?;
    for (t, name) in [(transmon1, "transmon1"), (transmon2, "transmon2")] {
        if t.charge_op.dim() != t.energies.len() {
            return Err(Error::Validation(format!(
                "{name}: charge operator dimension {} does not match {} energies",
                t.charge_op.dim(),
                t.energies.len()
            )));
        }
    }

    let d1 = transmon1.energies.len();
    let d2 = transmon2.energies.len();
    let diag = |values: &[f64]| -> Operator {
        let n = values.len();
        let mut m = Array2::from_elem((n, n), ZERO);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = re(v);
        }
        Operator::new(m, vec![n]).expect("square diagonal matrix")
    };
    let e0 = mediator_energies[0];
    let med_ref: Vec<f64> = mediator_energies.iter().map(|e| e - e0).collect();

    let et1 = diag(&transmon1.energies);
    let et2 = diag(&transmon2.energies);
    let em = diag(&med_ref);
    let id1 = Operator::identity(&[d1]);
    let id2 = Operator::identity(&[d2]);
    let idm = Operator::identity(&[k]);

    let mut h = tensor(&[&et1, &idm, &id2]);
    h.add_scaled(ONE, &tensor(&[&id1, &em, &id2]));
    h.add_scaled(ONE, &tensor(&[&id1, &idm, &et2]));
    h.add_scaled(
        re(lambda_1),
        &tensor(&[&transmon1.charge_op, x_dressed, &id2]),
    );
    h.add_scaled(
        re(lambda_2),
        &tensor(&[&id1, x_dressed, &transmon2.charge_op]),
    );
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        derive_effective_params, CircuitSpec, DerivedParams, OneCpbSpec, TwoCpbSpec,
    };
    use crate::constants::{FEMTOFARAD, H_PLANCK, NANOHENRY};
    use crate::hilbert::eigensystem;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn table_one_derived() -> OneCpbDerived {
        let spec = CircuitSpec::OneCpb(OneCpbSpec {
            c_g: 9.67 * FEMTOFARAD,
            c_j: 3.96 * FEMTOFARAD,
            c_c: 0.14 * FEMTOFARAD,
            c_r: 1.07 * FEMTOFARAD,
            c_p: 79.53 * FEMTOFARAD,
            l_r: 160.0 * NANOHENRY,
            e_j: H_PLANCK * 6.39e9,
            n_g: 0.5,
        });
        match derive_effective_params(&spec).unwrap() {
            DerivedParams::OneCpb(p) => p,
            _ => unreachable!(),
        }
    }

    fn table_two_derived() -> TwoCpbDerived {
        let spec = CircuitSpec::TwoCpb(TwoCpbSpec {
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
        });
        match derive_effective_params(&spec).unwrap() {
            DerivedParams::TwoCpb(p) => p,
            _ => unreachable!(),
        }
    }

    fn ground_referenced(h: &Operator, k: usize) -> Vec<f64> {
        let es = eigensystem(h, Some(k)).unwrap();
        es.eigenvalues.iter().map(|e| e - es.eigenvalues[0]).collect()
    }

    #[test]
    fn cpb_is_diagonal_without_josephson_energy() {
        let e_c = H_PLANCK * 3e9;
        let h = cpb_hamiltonian(e_c, 0.0, 0.3, 5).unwrap();
        for i in 0..11 {
            for j in 0..11 {
                if i == j {
                    let n = i as f64 - 5.0;
                    assert_relative_eq!(
                        h.entries()[(i, j)].re,
                        4.0 * e_c * (n - 0.3).powi(2) / HBAR,
                        max_relative = 1e-14
                    );
                } else {
                    assert_eq!(h.entries()[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn cpb_sweet_spot_splitting_is_josephson_energy() {
        let e_c = H_PLANCK * 5e9;
        let e_j = 0.05 * e_c;
        let h = cpb_hamiltonian(e_c, e_j, 0.5, 10).unwrap();
        let es = eigensystem(&h, Some(2)).unwrap();
        let split = es.eigenvalues[1] - es.eigenvalues[0];
        assert_relative_eq!(split * HBAR / e_j, 1.0, max_relative = 0.02);
    }

    #[test]
    fn cpb_rejects_bad_arguments() {
        let e = H_PLANCK * 1e9;
        assert!(cpb_hamiltonian(0.0, e, 0.5, 10).is_err());
        assert!(cpb_hamiltonian(e, -e, 0.5, 10).is_err());
        assert!(cpb_hamiltonian(e, e, f64::NAN, 10).is_err());
        assert!(cpb_hamiltonian(e, e, 0.5, 4).is_err());
    }

    #[test]
    fn every_builder_is_hermitian_and_real() {
        let p1 = table_one_derived();
        let p2 = table_two_derived();
        let rabi = RabiParams {
            omega_q: 1.0,
            omega_r: 1.0,
            g_tilde: 0.4,
        };
        let med = MediatorParams::symmetric(1.0, 0.3, -0.05);
        let ops = vec![
            cpb_hamiltonian(p1.e_c, p1.e_j, p1.n_g, 6).unwrap(),
            one_cpb_full(&p1, 5, 6).unwrap(),
            two_level_h1(&rabi, 8).unwrap(),
            qrm(&rabi, 8).unwrap(),
            two_cpb_hamiltonian(&p2, 5, 4).unwrap(),
            usc_mediator(&med, 8).unwrap(),
            rabi_parity(8).unwrap(),
        ];
        for (idx, op) in ops.iter().enumerate() {
            assert!(op.is_hermitian(1e-12), "builder {idx} is not Hermitian");
            let max_im = op
                .entries()
                .iter()
                .map(|z| z.im.abs())
                .fold(0.0, f64::max);
            assert_eq!(max_im, 0.0, "builder {idx} has imaginary entries");
        }
    }

    #[test]
    fn decoupled_rabi_levels_are_the_bare_grid() {
        let p = RabiParams {
            omega_q: 1.0,
            omega_r: 1.0,
            g_tilde: 0.0,
        };
        for h in [two_level_h1(&p, 12).unwrap(), qrm(&p, 12).unwrap()] {
            let lv = ground_referenced(&h, 4);
            let want = [0.0, 1.0, 1.0, 2.0];
            for (got, want) in lv.iter().zip(want.iter()) {
                assert_abs_diff_eq!(got, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn decoupled_full_circuit_spectrum_is_additive() {
        let mut p = table_one_derived();
        p.g = 0.0;
        let h = one_cpb_full(&p, 6, 8).unwrap();
        let full = eigensystem(&h, Some(6)).unwrap();
        let cpb = eigensystem(&cpb_hamiltonian(p.e_c, p.e_j, p.n_g, 6).unwrap(), None).unwrap();
        let mut grid: Vec<f64> = Vec::new();
        for e in &cpb.eigenvalues {
            for m in 0..8 {
                grid.push(e + m as f64 * p.omega_r);
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in full.eigenvalues.iter().zip(grid.iter()) {
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn decoupled_two_cpb_spectrum_is_additive() {
        let mut p = table_two_derived();
        p.g1 = 0.0;
        p.g2 = 0.0;
        p.g12 = 0.0;
        let h = two_cpb_hamiltonian(&p, 5, 4).unwrap();
        let full = eigensystem(&h, Some(8)).unwrap();
        let c1 = eigensystem(&cpb_hamiltonian(p.e_c1, p.e_j1, p.n_g1, 5).unwrap(), None).unwrap();
        let c2 = eigensystem(&cpb_hamiltonian(p.e_c2, p.e_j2, p.n_g2, 5).unwrap(), None).unwrap();
        let mut grid: Vec<f64> = Vec::new();
        for a in &c1.eigenvalues {
            for b in &c2.eigenvalues {
                for m in 0..4 {
                    grid.push(a + b + m as f64 * p.omega_r);
                }
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in full.eigenvalues.iter().zip(grid.iter()) {
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn displaced_frame_maps_extended_model_onto_qrm() {
        // eig(H1) = eig(QRM - (2 gt^2/wr) sx) - gt^2/wr on the converged
        // low end of the spectrum
        for gt in [0.3, 0.5, 1.0] {
            let n_fock = 60;
            let p = RabiParams {
                omega_q: 1.0,
                omega_r: 1.0,
                g_tilde: gt,
            };
            let lhs = eigensystem(&two_level_h1(&p, n_fock).unwrap(), Some(6)).unwrap();
            let mut shifted = qrm(&p, n_fock).unwrap();
            let sx_full = tensor(&[&pauli_x(), &Operator::identity(&[n_fock])]);
            shifted.add_scaled(re(-2.0 * gt * gt), &sx_full);
            let rhs = eigensystem(&shifted, Some(6)).unwrap();
            for k in 0..6 {
                let want = rhs.eigenvalues[k] - gt * gt;
                assert_abs_diff_eq!(lhs.eigenvalues[k], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn qrm_deep_strong_ground_is_displaced_oscillator() {
        // wq = 0 splits the QRM into two displaced oscillators with ground
        // energy -gt^2/wr
        let p = RabiParams {
            omega_q: 0.0,
            omega_r: 1.0,
            g_tilde: 2.0,
        };
        let h = qrm(&p, 60).unwrap();
        let es = eigensystem(&h, Some(1)).unwrap();
        assert_abs_diff_eq!(es.eigenvalues[0], -4.0, epsilon = 1e-6);
    }

    #[test]
    fn parity_is_conserved_by_qrm_and_broken_by_the_circuit_model() {
        let n_fock = 24;
        let parity = rabi_parity(n_fock).unwrap();
        for k in 1..=10 {
            let gt = k as f64 * 0.1;
            let p = RabiParams {
                omega_q: 1.0,
                omega_r: 1.0,
                g_tilde: gt,
            };
            let h_qrm = qrm(&p, n_fock).unwrap();
            let comm = h_qrm.commutator(&parity);
            assert!(
                comm.frobenius_norm() < 1e-10 * h_qrm.frobenius_norm(),
                "QRM parity violated at g_tilde = {gt}"
            );
            let h_ext = two_level_h1(&p, n_fock).unwrap();
            let comm = h_ext.commutator(&parity);
            assert!(
                comm.frobenius_norm() > 1e-2 * h_ext.frobenius_norm(),
                "extended model unexpectedly parity-symmetric at g_tilde = {gt}"
            );
        }
    }

    #[test]
    fn ground_energy_converges_in_fock_truncation() {
        let p = table_one_derived();
        let e20 = eigensystem(&one_cpb_full(&p, 10, 20).unwrap(), Some(1)).unwrap().eigenvalues[0];
        let e40 = eigensystem(&one_cpb_full(&p, 10, 40).unwrap(), Some(1)).unwrap().eigenvalues[0];
        assert_relative_eq!(e20, -4.4656137205e10, max_relative = 1e-9);
        let rel = (e40 - e20).abs() / e40.abs();
        assert!(rel < 1e-6, "ground energy truncation drift {rel:.3e}");
    }

    #[test]
    fn two_level_reduction_tracks_the_full_circuit() {
        // circuits chosen inside the validity window E_J/E_C <= 2,
        // g_tilde/omega_r <= 0.3; lowest three levels agree to well under
        // 5% of omega_r (reference deviations 0.59%, 0.82%, 0.74%)
        let specs = [
            (1.8, 4.5, 0.15, 2.0, 80.0, 260.0, 6.0e9),
            (2.0, 5.0, 0.2, 2.2, 75.0, 240.0, 6.3e9),
            (1.5, 4.8, 0.3, 1.8, 90.0, 280.0, 6.8e9),
        ];
        for (c_g, c_j, c_c, c_r, c_p, l_r, f_j) in specs {
            let spec = CircuitSpec::OneCpb(OneCpbSpec {
                c_g: c_g * FEMTOFARAD,
                c_j: c_j * FEMTOFARAD,
                c_c: c_c * FEMTOFARAD,
                c_r: c_r * FEMTOFARAD,
                c_p: c_p * FEMTOFARAD,
                l_r: l_r * NANOHENRY,
                e_j: H_PLANCK * f_j,
                n_g: 0.5,
            });
            let DerivedParams::OneCpb(p) = derive_effective_params(&spec).unwrap() else {
                unreachable!()
            };
            assert!(p.e_j / p.e_c <= 2.0, "tuple outside the charge window");
            assert!(p.g_tilde() / p.omega_r <= 0.3, "tuple outside the coupling window");
            let t = p.qubit_transition(10).unwrap();
            let full = ground_referenced(&one_cpb_full(&p, 10, 20).unwrap(), 3);
            let reduced = ground_referenced(
                &two_level_h1(
                    &RabiParams {
                        omega_q: t.omega_q,
                        omega_r: p.omega_r,
                        g_tilde: p.g_tilde(),
                    },
                    20,
                )
                .unwrap(),
                3,
            );
            let dev = full
                .iter()
                .zip(reduced.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / p.omega_r;
            assert!(dev < 0.01, "reduction deviation {dev:.4} of omega_r");
        }
    }

    #[test]
    fn mediator_reference_spectrum() {
        let want_03 = [
            0.0,
            0.814173106271,
            1.398585900721,
            1.437334913777,
            1.786700043142,
            2.147552732693,
            2.437334913777,
            2.632790877913,
            2.864155061776,
            3.096565488217,
            3.437334913777,
            3.652370137547,
            3.792860054464,
            4.171675167750,
        ];
        let h = usc_mediator(&MediatorParams::symmetric(1.0, 0.3, 0.0), 20).unwrap();
        let got = ground_referenced(&h, 14);
        for (g, w) in got.iter().zip(want_03.iter()) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-8);
        }

        let want_05 = [
            0.0,
            0.978054085431,
            1.938551344976,
            2.814690581931,
            3.130849532838,
            3.197176307097,
            3.656142582920,
            4.091037846028,
            4.130849532838,
            4.501987545346,
        ];
        let h = usc_mediator(&MediatorParams::symmetric(1.0, 0.5, 0.0), 20).unwrap();
        let got = ground_referenced(&h, 10);
        for (g, w) in got.iter().zip(want_05.iter()) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-8);
        }
    }

    #[test]
    fn mediator_decouples_to_the_bare_grid() {
        let h = usc_mediator(&MediatorParams::symmetric(1.0, 0.0, 0.0), 6).unwrap();
        let lv = ground_referenced(&h, 5);
        let want = [0.0, 1.0, 1.0, 1.0, 2.0];
        for (got, want) in lv.iter().zip(want.iter()) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn transmon_level_structure() {
        let t = transmon_levels(1.0, -0.096, 3).unwrap();
        assert_eq!(t.energies.len(), 3);
        assert_abs_diff_eq!(t.energies[2] - t.energies[1], 0.904, epsilon = 1e-12);
        assert_abs_diff_eq!(t.charge_op.entries()[(0, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            t.charge_op.entries()[(1, 2)].re,
            2f64.sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(t.charge_op.entries()[(0, 2)], ZERO);

        let flat = transmon_levels(1.0, 0.0, 3).unwrap();
        assert_abs_diff_eq!(
            flat.energies[2] - flat.energies[1],
            flat.energies[1] - flat.energies[0],
            epsilon = 1e-15
        );

        let t2 = transmon_levels(1.0, -0.096, 2).unwrap();
        assert_eq!(t2.energies, vec![0.0, 1.0]);
        let mut diff = t2.charge_op.clone();
        diff.add_scaled(-ONE, &pauli_x());
        assert_eq!(diff.max_abs(), 0.0);

        assert!(transmon_levels(1.0, -0.096, 4).is_err());
        assert!(transmon_levels(-1.0, -0.096, 2).is_err());
    }

    #[test]
    fn qst_hamiltonian_structure() {
        let t = transmon_levels(0.8, -0.096, 3).unwrap();
        let med_e = [0.0, 0.81, 1.40, 1.44];
        let x = {
            let mut m = Array2::from_elem((4, 4), ZERO);
            m[(0, 1)] = re(0.98);
            m[(1, 0)] = re(0.98);
            m[(1, 2)] = re(1.05);
            m[(2, 1)] = re(1.05);
            Operator::new(m, vec![4]).unwrap()
        };
        let h = qst_hamiltonian(&med_e, &x, &t, &t, 0.016, 0.016).unwrap();
        assert_eq!(h.dim(), 3 * 4 * 3);
        assert_eq!(h.factor_dims(), &[3, 4, 3]);
        assert!(h.is_hermitian(1e-12));

        // with the couplings off, each transmon's excitation number commutes
        let h0 = qst_hamiltonian(&med_e, &x, &t, &t, 0.0, 0.0).unwrap();
        let n1 = {
            let mut m = Array2::from_elem((3, 3), ZERO);
            m[(1, 1)] = ONE;
            m[(2, 2)] = re(2.0);
            Operator::new(m, vec![3]).unwrap()
        };
        let full_n1 = tensor(&[&n1, &Operator::identity(&[4]), &Operator::identity(&[3])]);
        assert!(h0.commutator(&full_n1).max_abs() < 1e-14);
        assert!(h.commutator(&full_n1).max_abs() > 1e-3);

        // mediator energies are ground-referenced inside
        let shifted: Vec<f64> = med_e.iter().map(|e| e + 5.0).collect();
        let h_shift = qst_hamiltonian(&shifted, &x, &t, &t, 0.016, 0.016).unwrap();
        let mut diff = h_shift.clone();
        diff.add_scaled(-ONE, &h);
        assert!(diff.max_abs() < 1e-12);

        assert!(qst_hamiltonian(&med_e[..3], &x, &t, &t, 0.016, 0.016).is_err());
        assert!(qst_hamiltonian(&[], &x, &t, &t, 0.0, 0.0).is_err());
        assert!(qst_hamiltonian(&med_e, &x, &t, &t, -0.1, 0.0).is_err());
    }

    #[test]
    fn recommended_truncations() {
        assert_eq!(recommended_n_fock(0.3), 20);
        assert_eq!(recommended_n_fock(0.5), 20);
        assert_eq!(recommended_n_fock(0.8), 40);
        assert_eq!(DEFAULT_N_MAX, 10);
    }
}
