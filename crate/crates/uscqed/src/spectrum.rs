//! Dressed-basis spectra: diagonalization with operator projection,
//! coupling sweeps of the Rabi-type models, circuit ratio sweeps, and the
//! forbidden-transition scan of a dressed mediator.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::{
    derive_effective_params, scale_impedance, CircuitSpec, DerivedParams,
};
use crate::error::{Error, Result};
use crate::hilbert::{eigensystem, fock_annihilation, pauli_x, pauli_z, tensor, Operator};
use crate::models::{
    qrm, recommended_n_fock, two_level_h1, usc_mediator, MediatorParams, RabiParams,
    DEFAULT_N_MAX,
};
use crate::optimize::coupling_ratio;

/// Matrix elements this far below the largest one count as forbidden:
/// symmetry-suppressed elements are exact zeros in principle, but finite
/// truncation leaves numerical dust.
pub const DEFAULT_FORBIDDEN_TOL: f64 = 1e-3;

/// Dressed levels retained by the forbidden-transition scan, matching the
/// transfer protocol's truncation. The flagged set depends on this window:
/// both the candidate elements and the max they are measured against grow
/// with it.
pub const FORBIDDEN_SCAN_LEVELS: usize = 10;

/// A Hamiltonian's lowest eigenpairs plus named operators rewritten in that
/// eigenbasis.
#[derive(Clone, Debug)]
pub struct DressedSystem {
    /// Lowest `k` eigenvalues, ascending, in the units of the Hamiltonian.
    pub eigenvalues: Vec<f64>,
    /// Eigenvector columns in the bare basis, dim x k.
    pub basis: Array2<Complex64>,
    /// Each requested operator projected to k x k: entry (j, l) is
    /// <psi_j|O|psi_l>.
    pub projected_ops: BTreeMap<String, Operator>,
    pub k: usize,
}

impl DressedSystem {
    pub fn ground_referenced(&self) -> Vec<f64> {
        let e0 = self.eigenvalues[0];
        self.eigenvalues.iter().map(|e| e - e0).collect()
    }

    /// Transition energy eps_k - eps_j.
    pub fn delta(&self, j: usize, k: usize) -> f64 {
        self.eigenvalues[k] - self.eigenvalues[j]
    }

    pub fn op(&self, name: &str) -> Result<&Operator> {
        self.projected_ops.get(name).ok_or_else(|| {
            Error::Validation(format!(
                "operator {name:?} is not projected in this dressed system (have: {:?})",
                self.projected_ops.keys().collect::<Vec<_>>()
            ))
        })
    }
}

fn project(basis: &Array2<Complex64>, op: &Operator) -> Result<Operator> {
    let k = basis.ncols();
    let t = op.entries().dot(basis);
    let vh = basis.t().mapv(|z| z.conj());
    Operator::new(vh.dot(&t), vec![k])
}

/// Diagonalize `h` and express the named operators in its lowest-`k`
/// eigenbasis.
pub fn dress(h: &Operator, ops: &[(&str, &Operator)], k: usize) -> Result<DressedSystem> {
    if k == 0 || k > h.dim() {
        return Err(Error::Validation(format!(
            "dressed level count must be in 1..={}, got {k}",
            h.dim()
        )));
    }
    let es = eigensystem(h, Some(k))?;
    let mut projected = BTreeMap::new();
    for (name, op) in ops {
        if op.dim() != h.dim() {
            return Err(Error::Validation(format!(
                "operator {name:?} has dimension {}, Hamiltonian has {}",
                op.dim(),
                h.dim()
            )));
        }
        if projected
            .insert(name.to_string(), project(&es.eigenvectors, op)?)
            .is_some()
        {
            return Err(Error::Validation(format!("duplicate operator name {name:?}")));
        }
    }
    Ok(DressedSystem {
        eigenvalues: es.eigenvalues,
        basis: es.eigenvectors,
        projected_ops: projected,
        k,
    })
}

/// Dress the two-CPB mediator and project the full canonical operator set:
/// "X" = a + a^dag, "sx1", "sx2", "sz1", "sz2".
pub fn mediator_dressed(p: &MediatorParams, n_fock: usize, k: usize) -> Result<DressedSystem> {
    let h = usc_mediator(p, n_fock)?;
    let a = fock_annihilation(n_fock)?;
    let mut x = a.dagger();
    x.add_scaled(Complex64::new(1.0, 0.0), &a);
    let id_q = Operator::identity(&[2]);
    let id_f = Operator::identity(&[n_fock]);
    let x_full = tensor(&[&id_q, &id_q, &x]);
    let sx1 = tensor(&[&pauli_x(), &id_q, &id_f]);
    let sx2 = tensor(&[&id_q, &pauli_x(), &id_f]);
    let sz1 = tensor(&[&pauli_z(), &id_q, &id_f]);
    let sz2 = tensor(&[&id_q, &pauli_z(), &id_f]);
    dress(
        &h,
        &[
            ("X", &x_full),
            ("sx1", &sx1),
            ("sx2", &sx2),
            ("sz1", &sz1),
            ("sz2", &sz2),
        ],
        k,
    )
}

/// One coupling-grid point of the model comparison: ground-referenced
/// energies of the circuit-reduced model and of the QRM, in units of
/// omega_r.
#[derive(Clone, Debug)]
pub struct SpectrumPoint {
    pub g_over_wr: f64,
    pub e_h1: Vec<f64>,
    pub e_qrm: Vec<f64>,
}

/// Lowest `n_levels` of both resonant Rabi-type models across a normalized
/// coupling grid. Points evaluate in parallel.
pub fn spectrum_sweep(g_grid: &[f64], n_levels: usize) -> Result<Vec<SpectrumPoint>> {
    if n_levels == 0 {
        return Err(Error::Validation("need at least one level".into()));
    }
    for &g in g_grid {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::Validation(format!(
                "coupling grid values must be finite and >= 0, got {g}"
            )));
        }
    }
    g_grid
        .par_iter()
        .map(|&g| {
            let n_fock = recommended_n_fock(g);
            let p = RabiParams {
                omega_q: 1.0,
                omega_r: 1.0,
                g_tilde: g,
            };
            let levels = |h: &Operator| -> Result<Vec<f64>> {
                let es = eigensystem(h, Some(n_levels))?;
                let e0 = es.eigenvalues[0];
                Ok(es.eigenvalues.iter().map(|e| e - e0).collect())
            };
            Ok(SpectrumPoint {
                g_over_wr: g,
                e_h1: levels(&two_level_h1(&p, n_fock)?)?,
                e_qrm: levels(&qrm(&p, n_fock)?)?,
            })
        })
        .collect()
}

/// Sweep coordinate for the coupling-ratio figure: either a grid of
/// Josephson energies (joules) at fixed geometry, or a grid of impedance
/// scale factors applied to the resonator branch.
#[derive(Clone, Debug)]
pub enum RatioGrid {
    JosephsonEnergy(Vec<f64>),
    ImpedanceScale(Vec<f64>),
}

/// One ratio-sweep point. `x` is the raw grid coordinate (joules or scale
/// factor), `beta` = omega_q / omega_r.
#[derive(Clone, Copy, Debug)]
pub struct RatioPoint {
    pub x: f64,
    pub ej_over_ec: f64,
    pub coupling_ratio: f64,
    pub beta: f64,
}

/// Coupling ratio R and resonance mismatch beta across a parameter grid for
/// a single-CPB circuit.
pub fn ratio_sweep(spec: &CircuitSpec, grid: &RatioGrid) -> Result<Vec<RatioPoint>> {
    let CircuitSpec::OneCpb(base) = spec else {
        return Err(Error::Validation(
            "ratio sweeps are defined for the single-CPB topology".into(),
        ));
    };
    match grid {
        RatioGrid::JosephsonEnergy(ejs) => ejs
            .par_iter()
            .map(|&e_j| {
                if !(e_j > 0.0) || !e_j.is_finite() {
                    return Err(Error::Validation(format!(
                        "Josephson energies must be positive and finite, got {e_j}"
                    )));
                }
                let mut s = *base;
                s.e_j = e_j;
                let derived = derive_effective_params(&CircuitSpec::OneCpb(s))?;
                let DerivedParams::OneCpb(p) = &derived else {
                    unreachable!()
                };
                let t = p.qubit_transition(DEFAULT_N_MAX)?;
                Ok(RatioPoint {
                    x: e_j,
                    ej_over_ec: p.e_j / p.e_c,
                    coupling_ratio: coupling_ratio(&derived, t.omega_q)?,
                    beta: t.omega_q / p.omega_r,
                })
            })
            .collect(),
        RatioGrid::ImpedanceScale(mus) => {
            let derived = derive_effective_params(spec)?;
            mus.par_iter()
                .map(|&mu| {
                    let scaled = scale_impedance(&derived, mu)?;
                    let DerivedParams::OneCpb(p) = &scaled else {
                        unreachable!()
                    };
                    let t = p.qubit_transition(DEFAULT_N_MAX)?;
                    Ok(RatioPoint {
                        x: mu,
                        ej_over_ec: p.e_j / p.e_c,
                        coupling_ratio: coupling_ratio(&scaled, t.omega_q)?,
                        beta: t.omega_q / p.omega_r,
                    })
                })
                .collect()
        }
    }
}

/// A transition whose matrix element is suppressed below `tol` times the
/// largest element of the projected operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForbiddenTransition {
    pub from: usize,
    pub to: usize,
    /// eps_to - eps_from, in the Hamiltonian's units.
    pub delta: f64,
    /// |O_{from,to}|.
    pub element: f64,
}

/// All levels above `from_level` that the named operator cannot reach:
/// |O_{jk}| < tol * max|O|.
pub fn forbidden_transitions(
    ds: &DressedSystem,
    op_name: &str,
    from_level: usize,
    tol: f64,
) -> Result<Vec<ForbiddenTransition>> {
    let op = ds.op(op_name)?;
    if from_level >= ds.k {
        return Err(Error::Validation(format!(
            "from_level {from_level} out of range for {} dressed levels",
            ds.k
        )));
    }
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::Validation(format!(
            "tolerance must be finite and >= 0, got {tol}"
        )));
    }
    let scale = op.max_abs();
    let j = from_level;
    Ok((j + 1..ds.k)
        .filter_map(|k| {
            let element = op.entries()[(j, k)].norm();
            (element < tol * scale).then(|| ForbiddenTransition {
                from: j,
                to: k,
                delta: ds.delta(j, k),
                element,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{FEMTOFARAD, H_PLANCK, NANOHENRY};
    use crate::circuit::OneCpbSpec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng as _;
    use rand::SeedableRng as _;
    use rand_chacha::ChaCha8Rng;

    const ZERO: Complex64 = Complex64::new(0.0, 0.0);

    fn table_one() -> CircuitSpec {
        CircuitSpec::OneCpb(OneCpbSpec {
            c_g: 9.67 * FEMTOFARAD,
            c_j: 3.96 * FEMTOFARAD,
            c_c: 0.14 * FEMTOFARAD,
            c_r: 1.07 * FEMTOFARAD,
            c_p: 79.53 * FEMTOFARAD,
            l_r: 160.0 * NANOHENRY,
            e_j: H_PLANCK * 6.39e9,
            n_g: 0.5,
        })
    }

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> Operator {
        let mut m = Array2::from_elem((dim, dim), ZERO);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..dim {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        Operator::from_matrix(m).unwrap()
    }

    #[test]
    fn dressing_a_diagonal_hamiltonian_changes_nothing() {
        let mut h = Array2::from_elem((4, 4), ZERO);
        for i in 0..4 {
            h[(i, i)] = Complex64::new(i as f64, 0.0);
        }
        let h = Operator::from_matrix(h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let probe = random_hermitian(4, &mut rng);
        let ds = dress(&h, &[("probe", &probe)], 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ds.basis[(i, j)].re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(ds.basis[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
        let p = ds.op("probe").unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((p.entries()[(i, j)] - probe.entries()[(i, j)]).norm() < 1e-12);
            }
        }
        assert!(ds.op("missing").is_err());
        assert!(dress(&h, &[], 0).is_err());
        assert!(dress(&h, &[], 5).is_err());
    }

    #[test]
    fn projected_hamiltonian_is_its_own_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = random_hermitian(8, &mut rng);
        for k in [8usize, 5] {
            let ds = dress(&h, &[("H", &h)], k).unwrap();
            let p = ds.op("H").unwrap();
            let scale = h.max_abs();
            for i in 0..k {
                for j in 0..k {
                    if i == j {
                        assert_abs_diff_eq!(
                            p.entries()[(i, i)].re,
                            ds.eigenvalues[i],
                            epsilon = 1e-9 * scale
                        );
                    } else {
                        assert!(p.entries()[(i, j)].norm() < 1e-9 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn dressed_mediator_matrix_elements() {
        let ds = mediator_dressed(&MediatorParams::symmetric(1.0, 0.3, 0.0), 20, 14).unwrap();
        let x = ds.op("X").unwrap();
        assert!(x.is_hermitian(1e-10));
        assert_abs_diff_eq!(x.entries()[(0, 1)].norm(), 0.978679440, epsilon = 1e-8);
        assert_abs_diff_eq!(x.entries()[(1, 2)].norm(), 1.053797178, epsilon = 1e-8);
        assert!(x.entries()[(2, 3)].norm() < 1e-9);
        assert_abs_diff_eq!(x.max_abs(), 2.086575174, epsilon = 1e-8);

        let sz1 = ds.op("sz1").unwrap();
        assert_abs_diff_eq!(sz1.entries()[(0, 0)].re, -0.650979074, epsilon = 1e-8);
        assert_abs_diff_eq!(sz1.entries()[(1, 1)].re, -0.691888695, epsilon = 1e-8);
        assert_abs_diff_eq!(sz1.entries()[(0, 1)].norm(), 0.266929029, epsilon = 1e-8);

        let sx1 = ds.op("sx1").unwrap();
        assert_abs_diff_eq!(sx1.entries()[(0, 1)].norm(), 0.274945433, epsilon = 1e-8);
        assert_abs_diff_eq!(sx1.entries()[(1, 3)].norm(), 0.469853616, epsilon = 1e-8);

        let ds = mediator_dressed(&MediatorParams::symmetric(1.0, 0.5, 0.0), 20, 14).unwrap();
        let x = ds.op("X").unwrap();
        assert_abs_diff_eq!(x.entries()[(0, 1)].norm(), 1.008948599, epsilon = 1e-8);
    }

    #[test]
    fn forbidden_transition_scan_matches_the_mediator() {
        let ds = mediator_dressed(
            &MediatorParams::symmetric(1.0, 0.3, 0.0),
            20,
            FORBIDDEN_SCAN_LEVELS,
        )
        .unwrap();
        let hits = forbidden_transitions(&ds, "X", 1, DEFAULT_FORBIDDEN_TOL).unwrap();
        let targets: Vec<usize> = hits.iter().map(|t| t.to).collect();
        assert_eq!(targets, vec![3, 6]);
        assert_abs_diff_eq!(hits[0].delta, 0.623161808, epsilon = 1e-8);

        let ds5 = mediator_dressed(
            &MediatorParams::symmetric(1.0, 0.5, 0.0),
            20,
            FORBIDDEN_SCAN_LEVELS,
        )
        .unwrap();
        let hits = forbidden_transitions(&ds5, "X", 1, DEFAULT_FORBIDDEN_TOL).unwrap();
        let targets: Vec<usize> = hits.iter().map(|t| t.to).collect();
        assert_eq!(targets, vec![4, 7, 8]);
        assert_abs_diff_eq!(hits[0].delta, 2.152795447, epsilon = 1e-8);

        assert!(forbidden_transitions(&ds, "X", 1, 0.0).unwrap().is_empty());
        assert!(forbidden_transitions(&ds, "nope", 1, 1e-3).is_err());
        assert!(forbidden_transitions(&ds, "X", 14, 1e-3).is_err());
        assert!(forbidden_transitions(&ds, "X", 1, f64::NAN).is_err());
    }

    #[test]
    fn photon_elements_satisfy_the_sum_rule_in_the_full_basis() {
        let n_fock = 8;
        let dim = 2 * 2 * n_fock;
        let p = MediatorParams::symmetric(1.0, 0.3, 0.0);
        let ds = mediator_dressed(&p, n_fock, dim).unwrap();
        let x = ds.op("X").unwrap();
        let x2 = x.matmul(x);
        for j in 0..dim {
            let total: f64 = (0..dim).map(|k| x.entries()[(j, k)].norm_sqr()).sum();
            assert_relative_eq!(total, x2.entries()[(j, j)].re, max_relative = 1e-8);
        }
    }

    #[test]
    fn tracked_levels_move_continuously_along_the_coupling_grid() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let table = spectrum_sweep(&grid, 4).unwrap();
        let mut max_step: f64 = 0.0;
        for w in table.windows(2) {
            for l in 0..4 {
                max_step = max_step.max((w[1].e_h1[l] - w[0].e_h1[l]).abs());
                max_step = max_step.max((w[1].e_qrm[l] - w[0].e_qrm[l]).abs());
            }
        }
        // 5 * step * omega_r with step 0.01
        assert!(max_step < 0.05, "largest per-step level move {max_step:.4}");
    }

    #[test]
    fn model_agreement_follows_the_coupling_strength() {
        let table = spectrum_sweep(&[0.0, 0.1, 0.8], 4).unwrap();
        let diff = |p: &SpectrumPoint| -> f64 {
            p.e_h1
                .iter()
                .zip(p.e_qrm.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        assert!(diff(&table[0]) < 1e-10);
        assert!(diff(&table[1]) < 0.02);
        assert!(diff(&table[2]) > 0.05);
        assert!(spectrum_sweep(&[-0.1], 4).is_err());
        assert!(spectrum_sweep(&[0.1], 0).is_err());
    }

    #[test]
    fn ratio_sweep_reproduces_the_reference_point() {
        let spec = table_one();
        let pts = ratio_sweep(&spec, &RatioGrid::JosephsonEnergy(vec![H_PLANCK * 6.39e9]))
            .unwrap();
        assert_eq!(pts.len(), 1);
        assert_relative_eq!(pts[0].coupling_ratio, 1.210496090980, max_relative = 1e-9);
        assert_relative_eq!(pts[0].beta, 0.994096423356, max_relative = 1e-9);
        assert_relative_eq!(pts[0].ej_over_ec, 1.657420496468, max_relative = 1e-9);
    }

    #[test]
    fn coupling_ratio_falls_with_josephson_energy() {
        let grid: Vec<f64> = (0..=10)
            .map(|i| H_PLANCK * (6.0e9 + i as f64 * 0.5e9))
            .collect();
        let pts = ratio_sweep(&table_one(), &RatioGrid::JosephsonEnergy(grid)).unwrap();
        for w in pts.windows(2) {
            assert!(
                w[1].coupling_ratio < w[0].coupling_ratio,
                "ratio not decreasing: {} -> {}",
                w[0].coupling_ratio,
                w[1].coupling_ratio
            );
        }
    }

    #[test]
    fn impedance_scaling_doubles_the_ratio_at_mu_four() {
        let pts =
            ratio_sweep(&table_one(), &RatioGrid::ImpedanceScale(vec![1.0, 4.0])).unwrap();
        assert_relative_eq!(
            pts[1].coupling_ratio / pts[0].coupling_ratio,
            2.0,
            max_relative = 1e-9
        );
        assert_relative_eq!(pts[1].beta, pts[0].beta, max_relative = 1e-12);
        assert_relative_eq!(pts[1].ej_over_ec, pts[0].ej_over_ec, max_relative = 1e-12);
    }

    #[test]
    fn ratio_sweep_needs_a_single_cpb_circuit() {
        let spec = CircuitSpec::TwoOscillator(crate::circuit::TwoOscillatorSpec {
            c_g: 9.67 * FEMTOFARAD,
            c_j: 3.96 * FEMTOFARAD,
            c_c: 0.14 * FEMTOFARAD,
            c_r: 1.07 * FEMTOFARAD,
            c_p: 79.53 * FEMTOFARAD,
            l_r: 160.0 * NANOHENRY,
            l_j: 300.0 * NANOHENRY,
        });
        assert!(ratio_sweep(&spec, &RatioGrid::ImpedanceScale(vec![1.0])).is_err());
        assert!(ratio_sweep(
            &table_one(),
            &RatioGrid::JosephsonEnergy(vec![-1.0])
        )
        .is_err());
    }
}
