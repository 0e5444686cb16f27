//! Open-system dynamics in the dressed basis: thermal initialization,
//! dressed Lindblad rates, fixed-step RK4 propagation, and the two-transmon
//! state-transfer protocol with fidelity tracking.
//!
//! The dissipators act on dressed mediator states, not bare operators: in
//! the ultrastrong regime the bare-basis master equation produces unphysical
//! excitation flow, so every mediator channel is a dressed projector
//! |psi_j><psi_k| weighted by the ohmic factor Delta/omega of its transition.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;
use serde::Serialize;

use crate::constants::{ghz_to_rad_per_s, mhz_to_rad_per_s, HBAR, K_B, NANOSECOND};
use crate::error::{Error, Result};
use crate::hilbert::{eigensystem, matmul_into, tensor, Operator};
use crate::models::{qst_hamiltonian, transmon_levels, MediatorParams};
use crate::spectrum::{
    forbidden_transitions, mediator_dressed, DressedSystem, DEFAULT_FORBIDDEN_TOL,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fock truncation used to diagonalize the transfer mediator.
pub const DEFAULT_QST_FOCK: usize = 20;

/// Dressed mediator levels retained in the transfer dynamics.
pub const DEFAULT_DRESSED_LEVELS: usize = 10;

/// Fixed RK4 step, seconds (10^-3 ns): about sixty steps per period of the
/// fastest retained transition.
pub const DEFAULT_TIME_STEP: f64 = 1e-12;

/// Trajectory sampling interval, seconds (0.01 ns).
pub const DEFAULT_SAMPLE_STEP: f64 = 1e-11;

/// Relative anharmonicity of the three-level transmons.
pub const DEFAULT_ANHARMONICITY: f64 = -0.096;

/// Transfer horizon as a multiple of the perturbative half-swap estimate,
/// used when the caller does not fix t_final.
pub const DEFAULT_HORIZON_FACTOR: f64 = 1.35;

/// Trace (or norm) drift beyond this aborts the integration: the fixed step
/// is too large for the generator's fastest frequency.
const DRIFT_LIMIT: f64 = 1e-4;

/// Tolerance for the initial-state sanity checks (Hermiticity, trace,
/// positivity, normalization).
const STATE_TOL: f64 = 1e-8;

fn check_rate(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::Validation(format!(
            "{name} must be finite and >= 0, got {value}"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::Validation(format!(
            "{name} must be finite and > 0, got {value}"
        )));
    }
    Ok(())
}

/// Bare noise rates (rad/s) and the bath temperature (kelvin).
///
/// `kappa` is oscillator leakage, `gamma`/`gamma_phi_cpb` are CPB relaxation
/// and dephasing (shared by both CPBs), and the `_m` pairs are the transmon
/// relaxation and dephasing rates, one entry per transmon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_phi_cpb: f64,
    pub gamma_m: [f64; 2],
    pub gamma_phi_m: [f64; 2],
    pub temperature: f64,
}

impl NoiseSpec {
    /// Experimentally motivated rates: kappa/2pi = 0.10 MHz, gamma/2pi =
    /// 0.0083 MHz, CPB dephasing 2.00 MHz, transmon relaxation 0.48 MHz and
    /// transmon dephasing 0.15 MHz.
    pub fn reference(temperature: f64) -> Self {
        NoiseSpec {
            kappa: mhz_to_rad_per_s(0.10),
            gamma: mhz_to_rad_per_s(0.0083),
            gamma_phi_cpb: mhz_to_rad_per_s(2.00),
            gamma_m: [mhz_to_rad_per_s(0.48); 2],
            gamma_phi_m: [mhz_to_rad_per_s(0.15); 2],
            temperature,
        }
    }

    /// No noise at all: closed-system evolution through the Lindblad path.
    pub fn silent() -> Self {
        NoiseSpec {
            kappa: 0.0,
            gamma: 0.0,
            gamma_phi_cpb: 0.0,
            gamma_m: [0.0; 2],
            gamma_phi_m: [0.0; 2],
            temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_rate("kappa", self.kappa)?;
        check_rate("gamma", self.gamma)?;
        check_rate("gamma_phi_cpb", self.gamma_phi_cpb)?;
        for m in 0..2 {
            check_rate("gamma_m", self.gamma_m[m])?;
            check_rate("gamma_phi_m", self.gamma_phi_m[m])?;
        }
        check_rate("temperature", self.temperature)?;
        Ok(())
    }

    /// Thermal frequency k_B T / hbar, rad/s.
    pub fn omega_t(&self) -> f64 {
        K_B * self.temperature / HBAR
    }
}

/// Bose-Einstein occupation at transition energy hbar*delta.
///
/// Returns 0 at T = 0; `delta` must be positive.
pub fn thermal_occupation(delta: f64, temperature: f64) -> Result<f64> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::Validation(format!(
            "thermal occupation needs a positive transition energy, got delta = {delta}"
        )));
    }
    if !temperature.is_finite() || temperature < 0.0 {
        return Err(Error::Validation(format!(
            "temperature must be finite and >= 0, got {temperature}"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    // exp_m1 keeps precision at small arguments; at large ones the result
    // underflows cleanly to zero.
    Ok(1.0 / (HBAR * delta / (K_B * temperature)).exp_m1())
}

/// Thermal density matrix over the retained dressed levels, diagonal in the
/// dressed basis: exp(-eps_q / k_B T) / Z with ground-referenced energies.
///
/// T = 0 yields the pure dressed ground state.
pub fn thermal_state(ds: &DressedSystem, temperature: f64) -> Result<Array2<Complex64>> {
    if ds.k < 2 {
        return Err(Error::Validation(format!(
            "thermal state needs at least 2 dressed levels, got {}",
            ds.k
        )));
    }
    if !temperature.is_finite() || temperature < 0.0 {
        return Err(Error::Validation(format!(
            "temperature must be finite and >= 0, got {temperature}"
        )));
    }
    let mut rho = Array2::from_elem((ds.k, ds.k), ZERO);
    if temperature == 0.0 {
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        return Ok(rho);
    }
    let beta = 1.0 / (K_B * temperature);
    // Ground-referencing keeps every weight <= 1, so Z never overflows.
    let weights: Vec<f64> = ds
        .ground_referenced()
        .iter()
        .map(|&eps| (-HBAR * eps * beta).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    for (q, w) in weights.iter().enumerate() {
        rho[(q, q)] = Complex64::new(w / z, 0.0);
    }
    Ok(rho)
}

/// Ohmic dressed transition rates: `kappa`, `gamma`, and `phi` hold the
/// off-diagonal rates for each pair j < k (other entries zero); `phi_diag`
/// holds the population-conserving dephasing rate of each level.
#[derive(Clone, Debug)]
pub struct DressedRates {
    pub kappa: Array2<f64>,
    pub gamma: [Array2<f64>; 2],
    pub phi: [Array2<f64>; 2],
    pub phi_diag: [Vec<f64>; 2],
}

impl DressedRates {
    /// Total bare-bath bracket for pair (j, k): the oscillator term plus
    /// both CPB relaxation and dephasing contributions. Multiplying by
    /// (n_bar + 1) or n_bar turns it into the downward or upward rate.
    pub fn bracket(&self, j: usize, k: usize) -> f64 {
        self.kappa[(j, k)]
            + self.gamma[0][(j, k)]
            + self.gamma[1][(j, k)]
            + self.phi[0][(j, k)]
            + self.phi[1][(j, k)]
    }
}

/// Project the bare noise channels onto the dressed mediator levels.
///
/// Off-diagonal rates scale ohmically with the transition energy:
/// kappa * Delta/omega_r * |X_jk|^2 for the oscillator and the analogous
/// sigma_x / sigma_z expressions for each CPB. Diagonal dephasing uses the
/// thermal frequency omega_T in place of the transition energy.
pub fn dressed_rates(
    ds: &DressedSystem,
    noise: &NoiseSpec,
    omega_r: f64,
    omega_q1: f64,
    omega_q2: f64,
) -> Result<DressedRates> {
    noise.validate()?;
    check_positive("omega_r", omega_r)?;
    check_positive("omega_q1", omega_q1)?;
    check_positive("omega_q2", omega_q2)?;
    let x = ds.op("X")?.entries();
    let sx = [ds.op("sx1")?.entries(), ds.op("sx2")?.entries()];
    let sz = [ds.op("sz1")?.entries(), ds.op("sz2")?.entries()];
    let omega_q = [omega_q1, omega_q2];

    let k = ds.k;
    let mut rates = DressedRates {
        kappa: Array2::zeros((k, k)),
        gamma: [Array2::zeros((k, k)), Array2::zeros((k, k))],
        phi: [Array2::zeros((k, k)), Array2::zeros((k, k))],
        phi_diag: [vec![0.0; k], vec![0.0; k]],
    };
    for j in 0..k {
        for l in (j + 1)..k {
            let delta = ds.delta(j, l);
            if delta <= 0.0 {
                return Err(Error::Internal(format!(
                    "dressed levels out of order: delta({j}, {l}) = {delta}"
                )));
            }
            rates.kappa[(j, l)] = noise.kappa * delta / omega_r * x[(j, l)].norm_sqr();
            for m in 0..2 {
                rates.gamma[m][(j, l)] =
                    noise.gamma * delta / omega_q[m] * sx[m][(j, l)].norm_sqr();
                rates.phi[m][(j, l)] =
                    noise.gamma_phi_cpb * delta / omega_q[m] * sz[m][(j, l)].norm_sqr();
            }
        }
    }
    let omega_t = noise.omega_t();
    for j in 0..k {
        for m in 0..2 {
            rates.phi_diag[m][j] =
                noise.gamma_phi_cpb / (2.0 * omega_q[m]) * omega_t * sz[m][(j, j)].norm_sqr();
        }
    }
    Ok(rates)
}

/// One collapse channel of the composite (transmon, mediator, transmon)
/// master equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ChannelKind {
    /// sigma_x on transmon `0` or `1` — kept exactly as the master equation
    /// writes it (a flip, not a lowering operator).
    TransmonFlip(usize),
    /// sigma_z on transmon `0` or `1`.
    TransmonPhase(usize),
    /// Dressed mediator collapse |j><k|, j < k (emission).
    MediatorDown { j: usize, k: usize },
    /// Dressed mediator collapse |k><j|, j < k (thermal absorption).
    MediatorUp { j: usize, k: usize },
    /// Dressed mediator projector |j><j| (pure dephasing).
    MediatorDephase { j: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Channel {
    pub kind: ChannelKind,
    /// rad/s.
    pub rate: f64,
}

/// Right-hand side of the dressed master equation, compiled for repeated
/// evaluation: the non-Hermitian drift A = -iH - (1/2) sum_r r O_r^dag O_r
/// (every O^dag O here is diagonal) plus structured jump terms.
///
/// rhs(rho) = A rho + (A rho)^dag + sum_r r O_r rho O_r^dag, which preserves
/// Hermiticity exactly and trace to rounding (the RHS is traceless).
pub struct LindbladGenerator {
    drift: Array2<Complex64>,
    channels: Vec<Channel>,
    dims: (usize, usize, usize),
    /// Index maps flipping transmon 0 / 1, used by the TransmonFlip gather.
    flip: [Vec<usize>; 2],
    /// sigma_z signs of transmon 0 / 1 per composite index.
    sign: [Vec<f64>; 2],
}

impl LindbladGenerator {
    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    /// (transmon1, mediator, transmon2) factor dimensions.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Flat composite index of |a, q, b>.
    pub fn flat(&self, a: usize, q: usize, b: usize) -> usize {
        let (_, k, d2) = self.dims;
        (a * k + q) * d2 + b
    }

    /// out = rhs(rho); `work` is scratch of the same shape.
    fn rhs_into(
        &self,
        rho: &Array2<Complex64>,
        out: &mut Array2<Complex64>,
        work: &mut Array2<Complex64>,
    ) {
        let n = self.dim();
        matmul_into(
            work,
            &self.drift.view(),
            &rho.view(),
            Complex64::new(1.0, 0.0),
            ZERO,
        );
        let ws = work.as_slice().expect("standard layout");
        let os = out.as_slice_mut().expect("standard layout");
        for i in 0..n {
            for j in 0..n {
                os[i * n + j] = ws[i * n + j] + ws[j * n + i].conj();
            }
        }

        let (d1, k, d2) = self.dims;
        let rs = rho.as_slice().expect("standard layout");
        let flat = |a: usize, q: usize, b: usize| (a * k + q) * d2 + b;
        for ch in &self.channels {
            let r = ch.rate;
            match ch.kind {
                ChannelKind::TransmonFlip(m) => {
                    let map = &self.flip[m];
                    for u in 0..n {
                        let pu = map[u] * n;
                        let row = &mut os[u * n..(u + 1) * n];
                        for (v, o) in row.iter_mut().enumerate() {
                            *o += r * rs[pu + map[v]];
                        }
                    }
                }
                ChannelKind::TransmonPhase(m) => {
                    let sgn = &self.sign[m];
                    for u in 0..n {
                        let su = r * sgn[u];
                        let row = &mut os[u * n..(u + 1) * n];
                        for (v, o) in row.iter_mut().enumerate() {
                            *o += su * sgn[v] * rs[u * n + v];
                        }
                    }
                }
                ChannelKind::MediatorDown { j, k: l } => {
                    for a in 0..d1 {
                        for b in 0..d2 {
                            let u = flat(a, j, b);
                            let fu = flat(a, l, b);
                            for c in 0..d1 {
                                for d in 0..d2 {
                                    os[u * n + flat(c, j, d)] += r * rs[fu * n + flat(c, l, d)];
                                }
                            }
                        }
                    }
                }
                ChannelKind::MediatorUp { j, k: l } => {
                    for a in 0..d1 {
                        for b in 0..d2 {
                            let u = flat(a, l, b);
                            let fu = flat(a, j, b);
                            for c in 0..d1 {
                                for d in 0..d2 {
                                    os[u * n + flat(c, l, d)] += r * rs[fu * n + flat(c, j, d)];
                                }
                            }
                        }
                    }
                }
                ChannelKind::MediatorDephase { j } => {
                    for a in 0..d1 {
                        for b in 0..d2 {
                            let u = flat(a, j, b);
                            for c in 0..d1 {
                                for d in 0..d2 {
                                    os[u * n + flat(c, j, d)] += r * rs[u * n + flat(c, j, d)];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Assemble the dressed master equation for a composite transfer
/// Hamiltonian (factor order transmon, mediator, transmon; two-level
/// transmons).
///
/// Mediator channels: for each dressed pair j < k a downward collapse at
/// bracket*(n_bar+1) and an upward one at bracket*n_bar; per level, pure
/// dephasing summed over both CPBs. Transmon channels: sigma_x at gamma_m
/// and sigma_z at gamma_phi_m. Channels with zero rate are dropped.
pub fn build_lindblad(
    h: &Operator,
    ds: &DressedSystem,
    noise: &NoiseSpec,
    omega_r: f64,
    omega_q1: f64,
    omega_q2: f64,
) -> Result<LindbladGenerator> {
    let dims = h.factor_dims();
    if dims.len() != 3 {
        return Err(Error::Validation(format!(
            "expected a (transmon, mediator, transmon) composite, got {} factors",
            dims.len()
        )));
    }
    let (d1, k, d2) = (dims[0], dims[1], dims[2]);
    if k != ds.k {
        return Err(Error::Validation(format!(
            "Hamiltonian retains {k} mediator levels but the dressed system has {}",
            ds.k
        )));
    }
    if d1 != 2 || d2 != 2 {
        return Err(Error::Validation(format!(
            "the dissipative transfer keeps two-level transmons, got {d1} and {d2} levels"
        )));
    }
    let rates = dressed_rates(ds, noise, omega_r, omega_q1, omega_q2)?;

    let mut channels = Vec::new();
    for m in 0..2 {
        if noise.gamma_m[m] > 0.0 {
            channels.push(Channel {
                kind: ChannelKind::TransmonFlip(m),
                rate: noise.gamma_m[m],
            });
        }
        if noise.gamma_phi_m[m] > 0.0 {
            channels.push(Channel {
                kind: ChannelKind::TransmonPhase(m),
                rate: noise.gamma_phi_m[m],
            });
        }
    }
    for j in 0..k {
        for l in (j + 1)..k {
            let bracket = rates.bracket(j, l);
            if bracket <= 0.0 {
                continue;
            }
            let n_bar = thermal_occupation(ds.delta(j, l), noise.temperature)?;
            channels.push(Channel {
                kind: ChannelKind::MediatorDown { j, k: l },
                rate: bracket * (n_bar + 1.0),
            });
            if n_bar > 0.0 {
                channels.push(Channel {
                    kind: ChannelKind::MediatorUp { j, k: l },
                    rate: bracket * n_bar,
                });
            }
        }
    }
    for j in 0..k {
        let rate = rates.phi_diag[0][j] + rates.phi_diag[1][j];
        if rate > 0.0 {
            channels.push(Channel {
                kind: ChannelKind::MediatorDephase { j },
                rate,
            });
        }
    }

    let n = h.dim();
    let flat = |a: usize, q: usize, b: usize| (a * k + q) * d2 + b;
    let mut drift = h.entries().mapv(|z| Complex64::new(z.im, -z.re));
    // Every O^dag O is diagonal: the identity for the transmon channels, a
    // mediator-level projector for the rest.
    for ch in &channels {
        let half = 0.5 * ch.rate;
        match ch.kind {
            ChannelKind::TransmonFlip(_) | ChannelKind::TransmonPhase(_) => {
                for u in 0..n {
                    drift[(u, u)] -= half;
                }
            }
            ChannelKind::MediatorDown { k: l, .. } | ChannelKind::MediatorDephase { j: l } => {
                for a in 0..d1 {
                    for b in 0..d2 {
                        let u = flat(a, l, b);
                        drift[(u, u)] -= half;
                    }
                }
            }
            ChannelKind::MediatorUp { j, .. } => {
                for a in 0..d1 {
                    for b in 0..d2 {
                        let u = flat(a, j, b);
                        drift[(u, u)] -= half;
                    }
                }
            }
        }
    }

    let mut flip = [vec![0usize; n], vec![0usize; n]];
    let mut sign = [vec![0.0f64; n], vec![0.0f64; n]];
    for a in 0..d1 {
        for q in 0..k {
            for b in 0..d2 {
                let u = flat(a, q, b);
                flip[0][u] = flat(1 - a, q, b);
                flip[1][u] = flat(a, q, 1 - b);
                // sigma_z = diag(-1, +1): ground state carries -1.
                sign[0][u] = if a == 0 { -1.0 } else { 1.0 };
                sign[1][u] = if b == 0 { -1.0 } else { 1.0 };
            }
        }
    }

    Ok(LindbladGenerator {
        drift,
        channels,
        dims: (d1, k, d2),
        flip,
        sign,
    })
}

/// Final state of a trajectory: a ket for unitary runs, a density matrix
/// for dissipative ones.
#[derive(Clone, Debug)]
pub enum FinalState {
    Pure(Array1<Complex64>),
    Mixed(Array2<Complex64>),
}

/// Sampled time series of a transfer run. Populations are single diagonal
/// entries of the composite state: the mediator sits in its reference level
/// psi_0, not a marginal.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Sample times, seconds.
    pub times: Vec<f64>,
    /// P(|1, psi_0, 0>): the left transmon holds the excitation.
    pub pop_left_excited: Vec<f64>,
    /// P(|0, psi_0, 1>): the right transmon holds it.
    pub pop_right_excited: Vec<f64>,
    /// tr(rho rho_target); for unitary runs, the target population.
    pub fidelity: Vec<f64>,
    /// tr rho; for unitary runs, the squared norm.
    pub trace: Vec<f64>,
    pub final_state: FinalState,
}

/// Which composite indices a trajectory records.
#[derive(Clone, Debug)]
pub struct TrajectoryProbes {
    /// Flat composite index of |1, psi_0, 0>.
    pub left_excited: usize,
    /// Flat composite index of |0, psi_0, 1>.
    pub right_excited: usize,
    /// Diagonal weights of the target density matrix: the fidelity samples
    /// sum w_i * rho_ii (every target here is diagonal).
    pub fidelity_weights: Vec<(usize, f64)>,
}

impl TrajectoryProbes {
    fn validate(&self, dim: usize) -> Result<()> {
        let mut idx = vec![self.left_excited, self.right_excited];
        idx.extend(self.fidelity_weights.iter().map(|&(i, _)| i));
        for i in idx {
            if i >= dim {
                return Err(Error::Validation(format!(
                    "probe index {i} out of range for dimension {dim}"
                )));
            }
        }
        Ok(())
    }
}

/// Transfer fidelity tr(rho rho_target).
pub fn qst_fidelity(rho: &Array2<Complex64>, rho_target: &Array2<Complex64>) -> Result<f64> {
    let n = rho.nrows();
    if rho.ncols() != n || rho_target.dim() != (n, n) {
        return Err(Error::Validation(format!(
            "fidelity needs square matrices of equal size, got {:?} and {:?}",
            rho.dim(),
            rho_target.dim()
        )));
    }
    let mut acc = ZERO;
    for u in 0..n {
        for v in 0..n {
            acc += rho[(u, v)] * rho_target[(v, u)];
        }
    }
    Ok(acc.re)
}

/// Peak of the fidelity series: (time, value), earliest index on ties.
pub fn find_transfer_time(traj: &Trajectory) -> Result<(f64, f64)> {
    if traj.fidelity.is_empty() {
        return Err(Error::Validation("empty trajectory".into()));
    }
    let mut best = 0usize;
    for (i, &f) in traj.fidelity.iter().enumerate() {
        if f > traj.fidelity[best] {
            best = i;
        }
    }
    Ok((traj.times[best], traj.fidelity[best]))
}

/// Shared grid logic: number of RK4 steps and the sampling stride.
fn grid(t_final: f64, dt: f64, sample_dt: f64) -> Result<(usize, usize)> {
    check_positive("t_final", t_final)?;
    check_positive("dt", dt)?;
    check_positive("sample_dt", sample_dt)?;
    let n_steps = (t_final / dt).round();
    if n_steps < 1.0 || n_steps > 1e9 {
        return Err(Error::Validation(format!(
            "t_final / dt = {n_steps} steps is out of range"
        )));
    }
    let stride = (sample_dt / dt).round();
    if stride < 1.0 || (stride * dt - sample_dt).abs() > 1e-9 * sample_dt {
        return Err(Error::Validation(format!(
            "sample_dt = {sample_dt} must be a whole multiple of dt = {dt}"
        )));
    }
    Ok((n_steps as usize, stride as usize))
}

fn drift_error(what: &str, value: f64, t: f64, dt: f64) -> Error {
    Error::Numeric(format!(
        "{what} drifted to {value:.6e} at t = {:.4} ns: the fixed step dt = {} ns is too \
         large for this generator; reduce dt",
        t / NANOSECOND,
        dt / NANOSECOND
    ))
}

/// Fixed-step RK4 integration of the dressed master equation.
///
/// `rho0` must be Hermitian, unit-trace, and positive semidefinite to 1e-8.
/// Samples land every `sample_dt` (a whole multiple of `dt`) plus the final
/// time; trace drift beyond 1e-4 aborts with a step-size error.
pub fn evolve(
    gen: &LindbladGenerator,
    rho0: &Array2<Complex64>,
    probes: &TrajectoryProbes,
    t_final: f64,
    dt: f64,
    sample_dt: f64,
) -> Result<Trajectory> {
    let n = gen.dim();
    if rho0.dim() != (n, n) {
        return Err(Error::Validation(format!(
            "initial state is {:?} but the generator acts on {n}x{n}",
            rho0.dim()
        )));
    }
    probes.validate(n)?;
    let (n_steps, stride) = grid(t_final, dt, sample_dt)?;

    let mut herm = 0.0f64;
    let mut tr = ZERO;
    for u in 0..n {
        tr += rho0[(u, u)];
        for v in u..n {
            herm = herm.max((rho0[(u, v)] - rho0[(v, u)].conj()).norm());
        }
    }
    if herm > STATE_TOL {
        return Err(Error::Validation(format!(
            "initial state is not Hermitian: max|rho - rho^dag| = {herm:.3e}"
        )));
    }
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::Validation(format!(
            "initial state must have unit trace, got {tr}"
        )));
    }
    let sym = rho0.t().mapv(|z| z.conj()) + rho0;
    let low = eigensystem(&Operator::from_matrix(sym.mapv(|z| 0.5 * z))?, Some(1))?;
    if low.eigenvalues[0] < -STATE_TOL {
        return Err(Error::Validation(format!(
            "initial state is not positive semidefinite: min eigenvalue {:.3e}",
            low.eigenvalues[0]
        )));
    }

    let mut rho = rho0.to_owned();
    let zeros = Array2::from_elem((n, n), ZERO);
    let (mut k1, mut k2, mut k3, mut k4) = (
        zeros.clone(),
        zeros.clone(),
        zeros.clone(),
        zeros.clone(),
    );
    let mut stage = zeros.clone();
    let mut work = zeros;

    let mut traj = Trajectory {
        times: Vec::new(),
        pop_left_excited: Vec::new(),
        pop_right_excited: Vec::new(),
        fidelity: Vec::new(),
        trace: Vec::new(),
        final_state: FinalState::Mixed(Array2::from_elem((0, 0), ZERO)),
    };
    let record = |rho: &Array2<Complex64>, t: f64, traj: &mut Trajectory| -> Result<()> {
        let trace: f64 = (0..n).map(|u| rho[(u, u)].re).sum();
        if (trace - 1.0).abs() > DRIFT_LIMIT || !trace.is_finite() {
            return Err(drift_error("trace", trace, t, dt));
        }
        traj.times.push(t);
        traj.pop_left_excited
            .push(rho[(probes.left_excited, probes.left_excited)].re);
        traj.pop_right_excited
            .push(rho[(probes.right_excited, probes.right_excited)].re);
        traj.fidelity.push(
            probes
                .fidelity_weights
                .iter()
                .map(|&(i, w)| w * rho[(i, i)].re)
                .sum(),
        );
        traj.trace.push(trace);
        Ok(())
    };

    record(&rho, 0.0, &mut traj)?;
    for step in 0..n_steps {
        gen.rhs_into(&rho, &mut k1, &mut work);
        set_axpy(&mut stage, &rho, 0.5 * dt, &k1);
        gen.rhs_into(&stage, &mut k2, &mut work);
        set_axpy(&mut stage, &rho, 0.5 * dt, &k2);
        gen.rhs_into(&stage, &mut k3, &mut work);
        set_axpy(&mut stage, &rho, dt, &k3);
        gen.rhs_into(&stage, &mut k4, &mut work);
        let w = dt / 6.0;
        Zip::from(&mut rho)
            .and(&k1)
            .and(&k2)
            .and(&k3)
            .and(&k4)
            .for_each(|r, &a, &b, &c, &d| *r += w * (a + 2.0 * (b + c) + d));
        let done = step + 1;
        if done % stride == 0 || done == n_steps {
            record(&rho, done as f64 * dt, &mut traj)?;
        }
    }
    traj.final_state = FinalState::Mixed(rho);
    Ok(traj)
}

fn set_axpy(out: &mut Array2<Complex64>, base: &Array2<Complex64>, s: f64, k: &Array2<Complex64>) {
    Zip::from(out)
        .and(base)
        .and(k)
        .for_each(|o, &b, &kk| *o = b + s * kk);
}

/// Schrodinger evolution of a state vector under a Hermitian `h`, fixed-step
/// RK4. Norm drift beyond 1e-4 aborts with a step-size error.
///
/// RK4 damps each frequency component by O((omega dt)^6) per step, so the
/// norm is preserved to 1e-8 only when dt is sized for the horizon; the
/// drift shrinks as dt^5 at fixed t_final.
pub fn evolve_unitary(
    h: &Operator,
    psi0: &Array1<Complex64>,
    probes: &TrajectoryProbes,
    t_final: f64,
    dt: f64,
    sample_dt: f64,
) -> Result<Trajectory> {
    let n = h.dim();
    if psi0.len() != n {
        return Err(Error::Validation(format!(
            "state has {} amplitudes but the Hamiltonian is {n}x{n}",
            psi0.len()
        )));
    }
    if !h.is_hermitian(1e-9) {
        return Err(Error::Validation(
            "unitary evolution needs a Hermitian Hamiltonian".into(),
        ));
    }
    probes.validate(n)?;
    let (n_steps, stride) = grid(t_final, dt, sample_dt)?;
    let norm2: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > STATE_TOL {
        return Err(Error::Validation(format!(
            "initial state must be normalized, got |psi|^2 = {norm2}"
        )));
    }

    let hs = h.entries();
    let mut psi = psi0.to_vec();
    let zeros = vec![ZERO; n];
    let (mut k1, mut k2, mut k3, mut k4) = (
        zeros.clone(),
        zeros.clone(),
        zeros.clone(),
        zeros.clone(),
    );
    let mut stage = zeros;

    let mut traj = Trajectory {
        times: Vec::new(),
        pop_left_excited: Vec::new(),
        pop_right_excited: Vec::new(),
        fidelity: Vec::new(),
        trace: Vec::new(),
        final_state: FinalState::Pure(Array1::from_elem(0, ZERO)),
    };
    let record = |psi: &[Complex64], t: f64, traj: &mut Trajectory| -> Result<()> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > DRIFT_LIMIT || !norm2.is_finite() {
            return Err(drift_error("norm", norm2, t, dt));
        }
        traj.times.push(t);
        traj.pop_left_excited
            .push(psi[probes.left_excited].norm_sqr());
        traj.pop_right_excited
            .push(psi[probes.right_excited].norm_sqr());
        traj.fidelity.push(
            probes
                .fidelity_weights
                .iter()
                .map(|&(i, w)| w * psi[i].norm_sqr())
                .sum(),
        );
        traj.trace.push(norm2);
        Ok(())
    };

    // out = -i H psi
    let schrodinger = |psi: &[Complex64], out: &mut [Complex64]| {
        let hm = hs.as_slice().expect("standard layout");
        for i in 0..n {
            let row = &hm[i * n..(i + 1) * n];
            let mut acc = ZERO;
            for (j, p) in psi.iter().enumerate() {
                acc += row[j] * p;
            }
            out[i] = Complex64::new(acc.im, -acc.re);
        }
    };
    let vec_axpy = |out: &mut [Complex64], base: &[Complex64], s: f64, k: &[Complex64]| {
        for i in 0..base.len() {
            out[i] = base[i] + s * k[i];
        }
    };

    record(&psi, 0.0, &mut traj)?;
    for step in 0..n_steps {
        schrodinger(&psi, &mut k1);
        vec_axpy(&mut stage, &psi, 0.5 * dt, &k1);
        schrodinger(&stage, &mut k2);
        vec_axpy(&mut stage, &psi, 0.5 * dt, &k2);
        schrodinger(&stage, &mut k3);
        vec_axpy(&mut stage, &psi, dt, &k3);
        schrodinger(&stage, &mut k4);
        let w = dt / 6.0;
        for i in 0..n {
            psi[i] += w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        let done = step + 1;
        if done % stride == 0 || done == n_steps {
            record(&psi, done as f64 * dt, &mut traj)?;
        }
    }
    traj.final_state = FinalState::Pure(Array1::from_vec(psi));
    Ok(traj)
}

/// Operating point of the state-transfer protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QstProtocol {
    /// Mediator coupling g_tilde / omega_r.
    pub g_ratio: f64,
    /// Oscillator frequency, rad/s.
    pub omega_r: f64,
    /// Transmon-mediator coupling lambda / omega_r.
    pub lambda_ratio: f64,
    /// Direct CPB-CPB coupling g12 / omega_r (signed).
    pub g12_ratio: f64,
    /// Fock truncation for the mediator diagonalization.
    pub n_fock: usize,
    /// Dressed mediator levels retained.
    pub dressed_levels: usize,
    /// Relative anharmonicity of the three-level transmons.
    pub anharmonicity: f64,
}

impl QstProtocol {
    /// The published operating point: omega_r/2pi = 8.13 GHz, lambda =
    /// 0.02 omega_r, no direct CPB-CPB coupling.
    pub fn reference(g_ratio: f64) -> Self {
        QstProtocol {
            g_ratio,
            omega_r: ghz_to_rad_per_s(8.13),
            lambda_ratio: 0.02,
            g12_ratio: 0.0,
            n_fock: DEFAULT_QST_FOCK,
            dressed_levels: DEFAULT_DRESSED_LEVELS,
            anharmonicity: DEFAULT_ANHARMONICITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_rate("g_ratio", self.g_ratio)?;
        check_positive("omega_r", self.omega_r)?;
        check_rate("lambda_ratio", self.lambda_ratio)?;
        if !self.g12_ratio.is_finite() {
            return Err(Error::Validation(format!(
                "g12_ratio must be finite, got {}",
                self.g12_ratio
            )));
        }
        if self.dressed_levels < 2 || self.dressed_levels > 4 * self.n_fock {
            return Err(Error::Validation(format!(
                "dressed_levels = {} out of range for n_fock = {}",
                self.dressed_levels, self.n_fock
            )));
        }
        if !self.anharmonicity.is_finite() {
            return Err(Error::Validation(format!(
                "anharmonicity must be finite, got {}",
                self.anharmonicity
            )));
        }
        Ok(())
    }
}

/// Everything the transfer dynamics needs from the mediator: the dressed
/// system, the forbidden gap the transmons are tuned to, and the
/// second-order exchange estimate.
pub struct QstSetup {
    pub dressed: DressedSystem,
    /// Endpoints (from, to) of the forbidden transition used for transport.
    pub gap: (usize, usize),
    /// Transmon splitting, tuned to the forbidden gap, rad/s.
    pub omega_01: f64,
    /// Transmon-mediator coupling, rad/s.
    pub lambda: f64,
    /// Virtual-exchange rate J between the transmons, rad/s.
    pub exchange_rate: f64,
    /// pi / (2|J|): perturbative half-swap time, seconds.
    pub transfer_estimate: f64,
}

/// Diagonalize the mediator, pick the lowest forbidden transition out of
/// level 1, and size the transmon splitting and exchange rate from it.
///
/// The exchange rate is the second-order virtual sum
/// J = lambda^2 sum_k |X_0k|^2 [1/(omega_01 - Delta_k0) - 1/(omega_01 + Delta_k0)].
pub fn prepare_transfer(proto: &QstProtocol) -> Result<QstSetup> {
    proto.validate()?;
    let params = MediatorParams::symmetric(
        proto.omega_r,
        proto.g_ratio * proto.omega_r,
        proto.g12_ratio * proto.omega_r,
    );
    let ds = mediator_dressed(&params, proto.n_fock, proto.dressed_levels)?;
    let forbidden = forbidden_transitions(&ds, "X", 1, DEFAULT_FORBIDDEN_TOL)?;
    let first = forbidden.first().ok_or_else(|| {
        Error::Numeric(format!(
            "no forbidden transition out of level 1 within {} dressed levels; \
             raise dressed_levels or change the coupling",
            ds.k
        ))
    })?;
    let omega_01 = first.delta;
    let gap = (first.from, first.to);
    let lambda = proto.lambda_ratio * proto.omega_r;

    let x = ds.op("X")?.entries();
    let mut virt = 0.0;
    for k in 1..ds.k {
        let dk0 = ds.delta(0, k);
        virt += x[(0, k)].norm_sqr() * (1.0 / (omega_01 - dk0) - 1.0 / (omega_01 + dk0));
    }
    let exchange_rate = lambda * lambda * virt;
    if !exchange_rate.is_finite() || exchange_rate == 0.0 {
        return Err(Error::Numeric(format!(
            "virtual exchange rate degenerate ({exchange_rate}): the transmon splitting \
             sits on a mediator resonance or the coupling vanishes"
        )));
    }
    Ok(QstSetup {
        dressed: ds,
        gap,
        omega_01,
        lambda,
        exchange_rate,
        transfer_estimate: PI / (2.0 * exchange_rate.abs()),
    })
}

/// Scalar record of one transfer run.
#[derive(Clone, Debug, Serialize)]
pub struct QstSummary {
    pub g_ratio: f64,
    /// rad/s.
    pub omega_r: f64,
    pub gap_from: usize,
    pub gap_to: usize,
    /// rad/s.
    pub omega_01: f64,
    /// rad/s.
    pub lambda: f64,
    /// rad/s.
    pub exchange_rate: f64,
    pub transfer_estimate_ns: f64,
    pub t_final_ns: f64,
    pub time_step_ns: f64,
    pub sample_step_ns: f64,
    /// Kelvin; absent for unitary runs.
    pub temperature: Option<f64>,
    pub peak_time_ns: f64,
    pub peak_fidelity: f64,
}

fn summarize(
    proto: &QstProtocol,
    setup: &QstSetup,
    t_final: f64,
    dt: f64,
    sample_dt: f64,
    temperature: Option<f64>,
    traj: &Trajectory,
) -> Result<QstSummary> {
    let (t_peak, peak) = find_transfer_time(traj)?;
    Ok(QstSummary {
        g_ratio: proto.g_ratio,
        omega_r: proto.omega_r,
        gap_from: setup.gap.0,
        gap_to: setup.gap.1,
        omega_01: setup.omega_01,
        lambda: setup.lambda,
        exchange_rate: setup.exchange_rate,
        transfer_estimate_ns: setup.transfer_estimate / NANOSECOND,
        t_final_ns: t_final / NANOSECOND,
        time_step_ns: dt / NANOSECOND,
        sample_step_ns: sample_dt / NANOSECOND,
        temperature,
        peak_time_ns: t_peak / NANOSECOND,
        peak_fidelity: peak,
    })
}

/// Closed-system transfer with three-level transmons: |0, psi_0, 1> evolving
/// toward |1, psi_0, 0| under the composite Hamiltonian.
///
/// `t_final` defaults to 1.35 times the perturbative half-swap estimate.
pub fn run_transfer_unitary(
    proto: &QstProtocol,
    t_final: Option<f64>,
    dt: f64,
    sample_dt: f64,
) -> Result<(QstSummary, Trajectory)> {
    let setup = prepare_transfer(proto)?;
    let t_final = t_final.unwrap_or(DEFAULT_HORIZON_FACTOR * setup.transfer_estimate);
    let levels = transmon_levels(setup.omega_01, proto.anharmonicity, 3)?;
    let h = qst_hamiltonian(
        &setup.dressed.eigenvalues,
        setup.dressed.op("X")?,
        &levels,
        &levels,
        setup.lambda,
        setup.lambda,
    )?;
    let k = setup.dressed.k;
    let flat = |a: usize, q: usize, b: usize| (a * k + q) * 3 + b;
    let mut psi0 = Array1::from_elem(9 * k, ZERO);
    psi0[flat(0, 0, 1)] = Complex64::new(1.0, 0.0);
    let probes = TrajectoryProbes {
        left_excited: flat(1, 0, 0),
        right_excited: flat(0, 0, 1),
        fidelity_weights: vec![(flat(1, 0, 0), 1.0)],
    };
    let traj = evolve_unitary(&h, &psi0, &probes, t_final, dt, sample_dt)?;
    let summary = summarize(proto, &setup, t_final, dt, sample_dt, None, &traj)?;
    Ok((summary, traj))
}

/// Dissipative transfer with two-level transmons: rho_1 = |1><1| (x) rho_Th
/// (x) |0><0| evolving under the dressed master equation, fidelity measured
/// against rho_2 = |0><0| (x) rho_Th (x) |1><1|.
pub fn run_transfer_noisy(
    proto: &QstProtocol,
    noise: &NoiseSpec,
    t_final: Option<f64>,
    dt: f64,
    sample_dt: f64,
) -> Result<(QstSummary, Trajectory)> {
    noise.validate()?;
    let setup = prepare_transfer(proto)?;
    let t_final = t_final.unwrap_or(DEFAULT_HORIZON_FACTOR * setup.transfer_estimate);
    let levels = transmon_levels(setup.omega_01, proto.anharmonicity, 2)?;
    let h = qst_hamiltonian(
        &setup.dressed.eigenvalues,
        setup.dressed.op("X")?,
        &levels,
        &levels,
        setup.lambda,
        setup.lambda,
    )?;
    // The symmetric mediator keeps both CPBs on resonance with the
    // oscillator, so every ohmic denominator is omega_r.
    let gen = build_lindblad(
        &h,
        &setup.dressed,
        noise,
        proto.omega_r,
        proto.omega_r,
        proto.omega_r,
    )?;
    let k = setup.dressed.k;
    let thermal = thermal_state(&setup.dressed, noise.temperature)?;

    let ground = |excited: bool| -> Operator {
        let mut m = Array2::from_elem((2, 2), ZERO);
        let i = usize::from(excited);
        m[(i, i)] = Complex64::new(1.0, 0.0);
        Operator::new(m, vec![2]).expect("2x2 projector")
    };
    let thermal_op = Operator::new(thermal.clone(), vec![k])?;
    let rho0 = tensor(&[&ground(true), &thermal_op, &ground(false)]);

    let flat = |a: usize, q: usize, b: usize| (a * k + q) * 2 + b;
    let probes = TrajectoryProbes {
        left_excited: flat(1, 0, 0),
        right_excited: flat(0, 0, 1),
        fidelity_weights: (0..k).map(|q| (flat(0, q, 1), thermal[(q, q)].re)).collect(),
    };
    let traj = evolve(&gen, rho0.entries(), &probes, t_final, dt, sample_dt)?;
    let summary = summarize(
        proto,
        &setup,
        t_final,
        dt,
        sample_dt,
        Some(noise.temperature),
        &traj,
    )?;
    Ok((summary, traj))
}
