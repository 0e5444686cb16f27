//! Figures of merit for the coupling strength and derivative-free
//! minimization of the circuit objectives over bounded parameter boxes.

use rand::Rng as _;
use rand::SeedableRng as _;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{
    derive_effective_params, CircuitSpec, DerivedParams, OneCpbDerived, OneCpbSpec,
    TwoCpbDerived, TwoCpbSpec,
};
use crate::constants::{ghz_to_joule, FEMTOFARAD, HBAR, NANOHENRY, R_Q};
use crate::error::{Error, Result};
use crate::models::DEFAULT_N_MAX;

/// Nelder-Mead coefficients: reflect, expand, contract, shrink.
const NM_COEFFS: (f64, f64, f64, f64) = (1.0, 2.0, 0.5, 0.5);
/// Converged when the simplex objective spread falls below this.
const NM_SPREAD_TOL: f64 = 1e-10;
/// Initial simplex edge as a fraction of each box width.
const NM_INIT_STEP: f64 = 0.05;

/// Coupling ratio R = g / sqrt(omega_r omega_q) (equivalently 2 g_tilde /
/// sqrt(omega_r omega_q)), the figure of merit that exceeds 1 only for
/// anharmonic circuits.
pub fn coupling_ratio(derived: &DerivedParams, omega_q: f64) -> Result<f64> {
    if !(omega_q > 0.0) || !omega_q.is_finite() {
        return Err(Error::Validation(format!(
            "omega_q must be positive and finite, got {omega_q}"
        )));
    }
    match derived {
        DerivedParams::OneCpb(p) => Ok(p.g / (p.omega_r * omega_q).sqrt()),
        DerivedParams::TwoOscillator(p) => Ok(2.0 * p.g_o / (p.omega_r * omega_q).sqrt()),
        DerivedParams::TwoCpb(_) => Err(Error::Validation(
            "two-CPB circuits have one ratio per CPB; use coupling_ratios_two_cpb".into(),
        )),
    }
}

/// The same ratio written in bare circuit quantities, with hbar omega_q
/// replaced by the Josephson energy. Agrees with [`coupling_ratio`] in that
/// substitution to floating-point accuracy.
pub fn coupling_ratio_circuit_form(p: &OneCpbDerived) -> f64 {
    (1.0 / p.c_jr) * (HBAR * p.eff_c_r / (2.0 * R_Q * p.e_j)).sqrt()
}

/// Per-CPB coupling ratios of the two-CPB circuit: R_l = 2 g_l /
/// sqrt(omega_r omega_ql).
pub fn coupling_ratios_two_cpb(
    p: &TwoCpbDerived,
    omega_q1: f64,
    omega_q2: f64,
) -> Result<(f64, f64)> {
    for (name, w) in [("omega_q1", omega_q1), ("omega_q2", omega_q2)] {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Validation(format!(
                "{name} must be positive and finite, got {w}"
            )));
        }
    }
    Ok((
        2.0 * p.g1 / (p.omega_r * omega_q1).sqrt(),
        2.0 * p.g2 / (p.omega_r * omega_q2).sqrt(),
    ))
}

/// The coupling ratio at exact qubit-resonator resonance, split into its
/// capacitance factor and impedance factor.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResonantRatio {
    /// gamma * x.
    pub r_res: f64,
    /// Capacitance ratio in bare elements: Cg Cp / (Ct CJ + Cg (Cc + Cp)).
    pub gamma: f64,
    /// Impedance factor sqrt(Z_r / 2 R_Q).
    pub x: f64,
}

/// R at resonance from bare circuit elements, cross-checked against the
/// matrix-inversion route.
pub fn resonant_ratio(spec: &CircuitSpec) -> Result<ResonantRatio> {
    let CircuitSpec::OneCpb(s) = spec else {
        return Err(Error::Validation(
            "the resonant ratio is defined for the single-CPB topology".into(),
        ));
    };
    let c_t = s.c_c + s.c_g + s.c_p;
    let gamma = s.c_g * s.c_p / (c_t * s.c_j + s.c_g * (s.c_c + s.c_p));
    let derived = derive_effective_params(spec)?;
    let DerivedParams::OneCpb(p) = &derived else {
        unreachable!()
    };
    // same quantity through the capacitance-matrix inversion
    let gamma_inv = p.gamma_ratio;
    let scale = gamma.abs().max(gamma_inv.abs());
    if scale > 0.0 && (gamma - gamma_inv).abs() > 1e-9 * scale {
        return Err(Error::Internal(format!(
            "capacitance-ratio cross-check failed: closed form {gamma}, inversion {gamma_inv}"
        )));
    }
    let x = (p.z_r / (2.0 * R_Q)).sqrt();
    Ok(ResonantRatio {
        r_res: gamma * x,
        gamma,
        x,
    })
}

/// Single-CPB objective: F1 = 1 - (g m / D+) (1 - 2|D-| / D+), with
/// D+- = omega_q +- omega_r and m the island-charge matrix element between
/// the two lowest CPB states. Smaller is better; off-resonance beyond
/// 2|D-| > D+ is penalized above 1.
pub fn objective_f1(spec: &CircuitSpec) -> Result<f64> {
    let derived = derive_effective_params(spec)?;
    let DerivedParams::OneCpb(p) = &derived else {
        return Err(Error::Validation(
            "objective F1 is defined for the single-CPB topology".into(),
        ));
    };
    let t = p.qubit_transition(DEFAULT_N_MAX)?;
    let d_plus = t.omega_q + p.omega_r;
    let d_minus = t.omega_q - p.omega_r;
    Ok(1.0 - (p.g * t.n_matrix_element / d_plus) * (1.0 - 2.0 * d_minus.abs() / d_plus))
}

/// Two-CPB objective: F2 = 1 - f12 prod_l (g_l m_l / D+l)(1 - 2|D-l| / D+l),
/// where f12 = 1 - |g12| / (omega_q1 + omega_q2) rewards suppression of the
/// direct qubit-qubit coupling (g12 is signed; only its size matters here).
pub fn objective_f2(spec: &CircuitSpec) -> Result<f64> {
    let derived = derive_effective_params(spec)?;
    let DerivedParams::TwoCpb(p) = &derived else {
        return Err(Error::Validation(
            "objective F2 is defined for the two-CPB topology".into(),
        ));
    };
    let t1 = p.qubit_transition_1(DEFAULT_N_MAX)?;
    let t2 = p.qubit_transition_2(DEFAULT_N_MAX)?;
    let f12 = 1.0 - p.g12.abs() / (t1.omega_q + t2.omega_q);
    let term = |g: f64, me: f64, wq: f64| {
        let d_plus = wq + p.omega_r;
        let d_minus = wq - p.omega_r;
        (g * me / d_plus) * (1.0 - 2.0 * d_minus.abs() / d_plus)
    };
    Ok(1.0
        - f12
            * term(p.g1, t1.n_matrix_element, t1.omega_q)
            * term(p.g2, t2.n_matrix_element, t2.omega_q))
}

/// Inclusive interval for one search parameter, SI units. `lo == hi` pins
/// the parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn fixed(value: f64) -> Self {
        Self {
            lo: value,
            hi: value,
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo > 0.0) || !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi
        {
            return Err(Error::Validation(format!(
                "bound for {name} must satisfy 0 < lo <= hi and be finite, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Search box for the single-CPB circuit. Gate charge stays fixed: the
/// sweet spot is part of the design, not a free parameter.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OneCpbSpace {
    pub c_g: Bound,
    pub c_j: Bound,
    pub c_c: Bound,
    pub c_r: Bound,
    pub c_p: Bound,
    pub l_r: Bound,
    pub e_j: Bound,
    pub n_g: f64,
}

/// Search box for the two-CPB circuit. The single `c_c` bound encodes the
/// equal-grounding constraint: both coupling capacitors are one parameter.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoCpbSpace {
    pub c_g1: Bound,
    pub c_j1: Bound,
    pub c_g2: Bound,
    pub c_j2: Bound,
    pub c_c: Bound,
    pub c_r: Bound,
    pub l_r: Bound,
    pub e_j1: Bound,
    pub e_j2: Bound,
    pub n_g1: f64,
    pub n_g2: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub enum SearchSpace {
    OneCpb(OneCpbSpace),
    TwoCpb(TwoCpbSpace),
}

fn reference_cap() -> Bound {
    Bound::new(0.11 * FEMTOFARAD, 550.0 * FEMTOFARAD)
}

fn reference_ind() -> Bound {
    Bound::new(100.0 * NANOHENRY, 600.0 * NANOHENRY)
}

fn reference_ej() -> Bound {
    Bound::new(ghz_to_joule(6.0), ghz_to_joule(11.0))
}

impl SearchSpace {
    /// The published search box: capacitances 0.11-550 fF, inductance
    /// 100-600 nH, Josephson energy 6-11 GHz (times h), sweet spot pinned.
    pub fn reference_one_cpb() -> Self {
        SearchSpace::OneCpb(OneCpbSpace {
            c_g: reference_cap(),
            c_j: reference_cap(),
            c_c: reference_cap(),
            c_r: reference_cap(),
            c_p: reference_cap(),
            l_r: reference_ind(),
            e_j: reference_ej(),
            n_g: 0.5,
        })
    }

    pub fn reference_two_cpb() -> Self {
        SearchSpace::TwoCpb(TwoCpbSpace {
            c_g1: reference_cap(),
            c_j1: reference_cap(),
            c_g2: reference_cap(),
            c_j2: reference_cap(),
            c_c: reference_cap(),
            c_r: reference_cap(),
            l_r: reference_ind(),
            e_j1: reference_ej(),
            e_j2: reference_ej(),
            n_g1: 0.5,
            n_g2: 0.5,
        })
    }

    fn validate(&self) -> Result<()> {
        for (name, b) in self.slots() {
            b.bound.validate(name)?;
        }
        Ok(())
    }

    fn slots(&self) -> Vec<(&'static str, Slot)> {
        let cap = |b: Bound| Slot {
            bound: b,
            scale: Scale::Log,
        };
        let lin = |b: Bound| Slot {
            bound: b,
            scale: Scale::Linear,
        };
        match self {
            SearchSpace::OneCpb(s) => vec![
                ("c_g", cap(s.c_g)),
                ("c_j", cap(s.c_j)),
                ("c_c", cap(s.c_c)),
                ("c_r", cap(s.c_r)),
                ("c_p", cap(s.c_p)),
                ("l_r", cap(s.l_r)),
                ("e_j", lin(s.e_j)),
            ],
            SearchSpace::TwoCpb(s) => vec![
                ("c_g1", cap(s.c_g1)),
                ("c_j1", cap(s.c_j1)),
                ("c_g2", cap(s.c_g2)),
                ("c_j2", cap(s.c_j2)),
                ("c_c", cap(s.c_c)),
                ("c_r", cap(s.c_r)),
                ("l_r", cap(s.l_r)),
                ("e_j1", lin(s.e_j1)),
                ("e_j2", lin(s.e_j2)),
            ],
        }
    }

    fn build_spec(&self, values: &[f64]) -> CircuitSpec {
        match self {
            SearchSpace::OneCpb(s) => CircuitSpec::OneCpb(OneCpbSpec {
                c_g: values[0],
                c_j: values[1],
                c_c: values[2],
                c_r: values[3],
                c_p: values[4],
                l_r: values[5],
                e_j: values[6],
                n_g: s.n_g,
            }),
            SearchSpace::TwoCpb(s) => CircuitSpec::TwoCpb(TwoCpbSpec {
                c_g1: values[0],
                c_j1: values[1],
                c_g2: values[2],
                c_j2: values[3],
                c_c: values[4],
                c_r: values[5],
                l_r: values[6],
                e_j1: values[7],
                e_j2: values[8],
                n_g1: s.n_g1,
                n_g2: s.n_g2,
            }),
        }
    }
}

/// Capacitances and inductances are searched in log-space (the box spans
/// three decades); Josephson energies stay linear.
#[derive(Clone, Copy, Debug)]
enum Scale {
    Log,
    Linear,
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    bound: Bound,
    scale: Scale,
}

impl Slot {
    fn lo_t(&self) -> f64 {
        match self.scale {
            Scale::Log => self.bound.lo.ln(),
            Scale::Linear => self.bound.lo,
        }
    }

    fn hi_t(&self) -> f64 {
        match self.scale {
            Scale::Log => self.bound.hi.ln(),
            Scale::Linear => self.bound.hi,
        }
    }

    fn decode(&self, t: f64) -> f64 {
        match self.scale {
            Scale::Log => t.exp(),
            Scale::Linear => t,
        }
    }
}

/// Which built-in objective to minimize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Objective {
    F1,
    F2,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationResult {
    pub best: CircuitSpec,
    pub objective_value: f64,
    pub derived: DerivedParams,
    /// Coupling ratio(s): [R] for one CPB, [R1, R2] for two.
    pub ratios: Vec<f64>,
    /// omega_q / omega_r per CPB.
    pub betas: Vec<f64>,
    /// Total simplex iterations summed over restarts.
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Best objective found by each restart, in restart order.
    pub restart_values: Vec<f64>,
}

struct RestartOutcome {
    coords: Vec<f64>,
    value: f64,
    iterations: usize,
}

fn clip(coords: &mut [f64], boxes: &[(f64, f64)]) {
    for (c, &(lo, hi)) in coords.iter_mut().zip(boxes) {
        *c = c.clamp(lo, hi);
    }
}

/// Bounded Nelder-Mead on already-transformed coordinates. Every candidate
/// is clipped into the box before evaluation.
fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    boxes: &[(f64, f64)],
    x0: Vec<f64>,
    max_iters: usize,
) -> RestartOutcome {
    let d = boxes.len();
    let (alpha, gamma, rho, sigma) = NM_COEFFS;

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let v0 = f(&x0);
    simplex.push((x0.clone(), v0));
    for i in 0..d {
        let (lo, hi) = boxes[i];
        let step = NM_INIT_STEP * (hi - lo);
        let mut x = x0.clone();
        x[i] = if x[i] + step <= hi { x[i] + step } else { x[i] - step };
        clip(&mut x, boxes);
        let v = f(&x);
        simplex.push((x, v));
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));

    let mut iterations = 0;
    while iterations < max_iters {
        let spread = simplex[d].1 - simplex[0].1;
        if spread < NM_SPREAD_TOL {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let mut reflected: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        clip(&mut reflected, boxes);
        let fr = f(&reflected);

        let replacement = if fr < simplex[0].1 {
            let mut expanded: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            clip(&mut expanded, boxes);
            let fe = f(&expanded);
            if fe < fr {
                Some((expanded, fe))
            } else {
                Some((reflected, fr))
            }
        } else if fr < simplex[d - 1].1 {
            Some((reflected, fr))
        } else {
            let mut contracted: Vec<f64> = if fr < worst.1 {
                centroid
                    .iter()
                    .zip(&reflected)
                    .map(|(c, r)| c + rho * (r - c))
                    .collect()
            } else {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + rho * (w - c))
                    .collect()
            };
            clip(&mut contracted, boxes);
            let fc = f(&contracted);
            if fc < fr.min(worst.1) {
                Some((contracted, fc))
            } else {
                None
            }
        };

        match replacement {
            Some(entry) => simplex[d] = entry,
            None => {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&best) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    clip(x, boxes);
                    *v = f(x);
                }
            }
        }
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    }

    let (coords, value) = simplex.swap_remove(0);
    RestartOutcome {
        coords,
        value,
        iterations,
    }
}

fn summarize(
    space: &SearchSpace,
    spec: CircuitSpec,
    value: f64,
    iterations: usize,
    restarts: usize,
    seed: u64,
    restart_values: Vec<f64>,
) -> Result<OptimizationResult> {
    let derived = derive_effective_params(&spec)?;
    let (ratios, betas) = match &derived {
        DerivedParams::OneCpb(p) => {
            let t = p.qubit_transition(DEFAULT_N_MAX)?;
            (
                vec![coupling_ratio(&derived, t.omega_q)?],
                vec![t.omega_q / p.omega_r],
            )
        }
        DerivedParams::TwoCpb(p) => {
            let t1 = p.qubit_transition_1(DEFAULT_N_MAX)?;
            let t2 = p.qubit_transition_2(DEFAULT_N_MAX)?;
            let (r1, r2) = coupling_ratios_two_cpb(p, t1.omega_q, t2.omega_q)?;
            (
                vec![r1, r2],
                vec![t1.omega_q / p.omega_r, t2.omega_q / p.omega_r],
            )
        }
        DerivedParams::TwoOscillator(_) => {
            return Err(Error::Internal(
                "search spaces never produce the linearized topology".into(),
            ))
        }
    };
    let _ = space;
    Ok(OptimizationResult {
        best: spec,
        objective_value: value,
        derived,
        ratios,
        betas,
        iterations,
        restarts,
        seed,
        restart_values,
    })
}

fn score<F: Fn(&CircuitSpec) -> Result<f64>>(f: &F, spec: &CircuitSpec) -> f64 {
    match f(spec) {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}

fn run_restart<F: Fn(&CircuitSpec) -> Result<f64>>(
    f: &F,
    space: &SearchSpace,
    slots: &[Slot],
    free: &[usize],
    boxes: &[(f64, f64)],
    seed: u64,
    restart: u64,
    max_iters: usize,
    mut trace: Option<&mut Vec<(CircuitSpec, f64)>>,
) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart);
    let x0: Vec<f64> = boxes
        .iter()
        .map(|&(lo, hi)| rng.gen_range(lo..hi))
        .collect();
    let decode = |coords: &[f64]| -> CircuitSpec {
        let mut values: Vec<f64> = slots.iter().map(|s| s.bound.lo).collect();
        for (slot_idx, c) in free.iter().zip(coords) {
            values[*slot_idx] = slots[*slot_idx].decode(*c);
        }
        space.build_spec(&values)
    };
    let mut eval = |coords: &[f64]| -> f64 {
        let spec = decode(coords);
        let v = score(f, &spec);
        if let Some(t) = trace.as_deref_mut() {
            t.push((spec, v));
        }
        v
    };
    nelder_mead(&mut eval, boxes, x0, max_iters)
}

fn finish<F: Fn(&CircuitSpec) -> Result<f64>>(
    f: &F,
    space: &SearchSpace,
    outcomes: Vec<RestartOutcome>,
    seed: u64,
) -> Result<OptimizationResult> {
    let slots: Vec<Slot> = space.slots().into_iter().map(|(_, s)| s).collect();
    let free: Vec<usize> = (0..slots.len())
        .filter(|&i| !slots[i].bound.is_fixed())
        .collect();
    let restart_values: Vec<f64> = outcomes.iter().map(|o| o.value).collect();
    let iterations: usize = outcomes.iter().map(|o| o.iterations).sum();
    let mut best_idx = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value < outcomes[best_idx].value {
            best_idx = i;
        }
    }
    let winner = &outcomes[best_idx];
    let mut values: Vec<f64> = slots.iter().map(|s| s.bound.lo).collect();
    for (slot_idx, c) in free.iter().zip(&winner.coords) {
        values[*slot_idx] = slots[*slot_idx].decode(*c);
    }
    let spec = space.build_spec(&values);
    let value = score(f, &spec);
    summarize(
        space,
        spec,
        value,
        iterations,
        outcomes.len(),
        seed,
        restart_values,
    )
}

/// Minimize an arbitrary circuit objective over the box with restarted
/// Nelder-Mead. Restarts run in parallel, each on its own RNG stream; the
/// merge is deterministic (lowest value, ties to the lowest restart index).
pub fn minimize_custom<F>(
    f: F,
    space: &SearchSpace,
    seed: u64,
    restarts: usize,
    max_iters: usize,
) -> Result<OptimizationResult>
where
    F: Fn(&CircuitSpec) -> Result<f64> + Sync,
{
    if restarts == 0 || max_iters == 0 {
        return Err(Error::Validation(
            "need at least one restart and one iteration".into(),
        ));
    }
    space.validate()?;
    let slots: Vec<Slot> = space.slots().into_iter().map(|(_, s)| s).collect();
    let free: Vec<usize> = (0..slots.len())
        .filter(|&i| !slots[i].bound.is_fixed())
        .collect();
    if free.is_empty() {
        // fully pinned space: the search is a single evaluation
        let values: Vec<f64> = slots.iter().map(|s| s.bound.lo).collect();
        let spec = space.build_spec(&values);
        let value = score(&f, &spec);
        return summarize(space, spec, value, 0, restarts, seed, vec![value]);
    }
    let boxes: Vec<(f64, f64)> = free
        .iter()
        .map(|&i| (slots[i].lo_t(), slots[i].hi_t()))
        .collect();
    let outcomes: Vec<RestartOutcome> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| run_restart(&f, space, &slots, &free, &boxes, seed, r, max_iters, None))
        .collect();
    finish(&f, space, outcomes, seed)
}

/// Sequential variant of [`minimize_custom`] that also returns every
/// evaluated (spec, value) pair, for feasibility auditing.
pub fn minimize_traced<F>(
    f: F,
    space: &SearchSpace,
    seed: u64,
    restarts: usize,
    max_iters: usize,
) -> Result<(OptimizationResult, Vec<(CircuitSpec, f64)>)>
where
    F: Fn(&CircuitSpec) -> Result<f64> + Sync,
{
    if restarts == 0 || max_iters == 0 {
        return Err(Error::Validation(
            "need at least one restart and one iteration".into(),
        ));
    }
    space.validate()?;
    let slots: Vec<Slot> = space.slots().into_iter().map(|(_, s)| s).collect();
    let free: Vec<usize> = (0..slots.len())
        .filter(|&i| !slots[i].bound.is_fixed())
        .collect();
    if free.is_empty() {
        let values: Vec<f64> = slots.iter().map(|s| s.bound.lo).collect();
        let spec = space.build_spec(&values);
        let value = score(&f, &spec);
        let trace = vec![(spec, value)];
        return Ok((
            summarize(space, spec, value, 0, restarts, seed, vec![value])?,
            trace,
        ));
    }
    let boxes: Vec<(f64, f64)> = free
        .iter()
        .map(|&i| (slots[i].lo_t(), slots[i].hi_t()))
        .collect();
    let mut trace = Vec::new();
    let mut outcomes = Vec::with_capacity(restarts);
    for r in 0..restarts as u64 {
        outcomes.push(run_restart(
            &f,
            space,
            &slots,
            &free,
            &boxes,
            seed,
            r,
            max_iters,
            Some(&mut trace),
        ));
    }
    Ok((finish(&f, space, outcomes, seed)?, trace))
}

/// Minimize one of the built-in objectives. The space topology must match.
pub fn minimize(
    objective: Objective,
    space: &SearchSpace,
    seed: u64,
    restarts: usize,
    max_iters: usize,
) -> Result<OptimizationResult> {
    match (objective, space) {
        (Objective::F1, SearchSpace::OneCpb(_)) => {
            minimize_custom(objective_f1, space, seed, restarts, max_iters)
        }
        (Objective::F2, SearchSpace::TwoCpb(_)) => {
            minimize_custom(objective_f2, space, seed, restarts, max_iters)
        }
        _ => Err(Error::Validation(
            "objective and search-space topology do not match".into(),
        )),
    }
}
