//! Factored state-vector evolution of the pair-qubit Grover search.
//!
//! One iteration is "invert the marked amplitude, then apply `D_q`". Gates are
//! applied qubit by qubit, so no `2^q × 2^q` matrix is ever formed here.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{check_register, walsh, TargetIndex, UnitaryMatrix};

/// Norm tolerance for a valid state.
pub const NORM_TOL: f64 = 1e-10;

/// Probability tolerance for co-maximal readout detection.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    q: u32,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(q: u32, amps: Vec<C64>) -> Result<Self> {
        check_register(q, 1)?;
        if amps.len() != 1usize << q {
            return Err(Error::invalid(format!("{} amplitudes given for q={q}, need {}", amps.len(), 1usize << q)));
        }
        let s = StateVector { q, amps };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm² is {norm}, expected 1")));
        }
        Ok(s)
    }

    pub fn basis(q: u32, index: usize) -> Result<Self> {
        check_register(q, 1)?;
        let n = 1usize << q;
        if index >= n {
            return Err(Error::invalid(format!("basis index {index} out of range for q={q}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { q, amps })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiplies every amplitude by a unit-modulus scalar.
    pub fn with_global_phase(mut self, phase: C64) -> Result<Self> {
        if (phase.norm() - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("global phase {phase} is not unit modulus")));
        }
        self.amps.iter_mut().for_each(|a| *a *= phase);
        Ok(self)
    }

    /// `|<self|other>|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        if self.q != other.q {
            return Err(Error::invalid("fidelity between registers of different size"));
        }
        let overlap: C64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(overlap.norm_sqr())
    }

    /// Applies a 2×2 gate to `qubit` (0 = first ion pair, the MSB).
    pub fn apply_single_qubit(&mut self, gate: &UnitaryMatrix, qubit: u32) -> Result<()> {
        let g = gate
            .as_2x2()
            .ok_or_else(|| Error::invalid(format!("single-qubit gate must be 2×2, got {}", gate.dim())))?;
        if qubit >= self.q {
            return Err(Error::invalid(format!("qubit {qubit} out of range for q={}", self.q)));
        }
        self.apply_2x2(&g, qubit);
        Ok(())
    }

    fn apply_2x2(&mut self, g: &[[C64; 2]; 2], qubit: u32) {
        let stride = 1usize << (self.q - 1 - qubit);
        for block in self.amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = g[0][0] * x0 + g[0][1] * x1;
                *a1 = g[1][0] * x0 + g[1][1] * x1;
            }
        }
    }

    /// `W` on every qubit, i.e. `W_q · self`.
    pub fn apply_walsh_all(&mut self) {
        let w = walsh().as_2x2().expect("2x2");
        for k in 0..self.q {
            self.apply_2x2(&w, k);
        }
    }

    /// Negates the amplitude of the marked basis state (`P^{(q)}_i · self`).
    pub fn invert_marked(&mut self, target: TargetIndex) -> Result<()> {
        if target.q() != self.q {
            return Err(Error::invalid(format!("target is for q={}, state has q={}", target.q(), self.q)));
        }
        let a = &mut self.amps[target.basis()];
        *a = -*a;
        Ok(())
    }

    /// `D_q · self` with `D_q = W_q P_1 W_q`.
    pub fn apply_diffusion(&mut self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::invalid("diffusion needs at least two qubits"));
        }
        self.apply_walsh_all();
        let last = self.amps.len() - 1;
        self.amps[last] = -self.amps[last];
        self.apply_walsh_all();
        Ok(())
    }

    /// Distance from the exact pairing `amp(0…0) = <i·1…1|ψ> = −i·amp(1…1)`
    /// seen on odd registers searching `|1…1>`.
    pub fn mirror_defect(&self) -> f64 {
        let last = self.amps.len() - 1;
        (self.amps[0] + C64::i() * self.amps[last]).norm()
    }
}

/// `W_q |1…1>`, the starting state of every search.
pub fn prepare_initial(q: u32) -> Result<StateVector> {
    check_register(q, 2)?;
    prepare_from(q, (1usize << q) - 1)
}

/// `W_q |b>` for an arbitrary starting bitstring (an extension beyond the
/// all-ones preparation).
pub fn prepare_from(q: u32, basis: usize) -> Result<StateVector> {
    let mut s = StateVector::basis(q, basis)?;
    s.apply_walsh_all();
    Ok(s)
}

/// Which search iteration produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// x-rotation gate set, `D_q = W_q P_1 W_q`.
    Paper,
    /// Textbook Grover with real Hadamards.
    Standard,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Paper => "paper",
            Scheme::Standard => "standard",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scheme::Paper),
            "standard" => Ok(Scheme::Standard),
            other => Err(Error::Parse(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub iteration: usize,
    pub probabilities: Vec<f64>,
}

/// Probability distributions after 0, 1, 2, … iterations of one search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub q: u32,
    pub marked: TargetIndex,
    pub scheme: Scheme,
    pub records: Vec<Record>,
}

impl Trajectory {
    /// Builds a trajectory from consecutive states, the first being n = 0.
    pub fn from_states(marked: TargetIndex, scheme: Scheme, states: &[StateVector]) -> Self {
        Trajectory {
            q: marked.q(),
            marked,
            scheme,
            records: states
                .iter()
                .enumerate()
                .map(|(iteration, s)| Record { iteration, probabilities: s.probabilities() })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn marked_probability(&self, iteration: usize) -> f64 {
        self.records[iteration].probabilities[self.marked.basis()]
    }

    pub fn marked_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.probabilities[self.marked.basis()]).collect()
    }
}

/// States after 0..=n_iters iterations starting from `initial`.
pub fn evolve_from(initial: StateVector, marked: TargetIndex, n_iters: usize) -> Result<Vec<StateVector>> {
    if marked.q() != initial.q() {
        return Err(Error::invalid("marked state and initial state differ in size"));
    }
    let mut states = Vec::with_capacity(n_iters + 1);
    let mut s = initial;
    states.push(s.clone());
    for _ in 0..n_iters {
        s.invert_marked(marked)?;
        s.apply_diffusion()?;
        states.push(s.clone());
    }
    Ok(states)
}

pub fn evolve(marked: TargetIndex, n_iters: usize) -> Result<Vec<StateVector>> {
    evolve_from(prepare_initial(marked.q())?, marked, n_iters)
}

/// Runs the search from `W_q |1…1>` and records every distribution.
pub fn run_search(q: u32, marked: TargetIndex, n_iters: usize) -> Result<Trajectory> {
    if marked.q() != q {
        return Err(Error::invalid(format!("marked state {marked} is not a {q}-qubit state")));
    }
    Ok(Trajectory::from_states(marked, Scheme::Paper, &evolve(marked, n_iters)?))
}

fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Smallest `p ≥ 1` for which every recorded distribution matches the one `p`
/// iterations later to `tol` in max-norm. At least one pair must be compared,
/// so `p` ranges over `1..len`.
pub fn recurrence_period(traj: &Trajectory, tol: f64) -> Option<usize> {
    let recs = &traj.records;
    (1..recs.len())
        .find(|&p| recs.iter().zip(&recs[p..]).all(|(a, b)| max_norm(&a.probabilities, &b.probabilities) <= tol))
}

/// Amplitude-level recurrence: smallest `p` with `|<ψ_n|ψ_{n+p}>|² ≥ 1 − tol`
/// for every recorded `n`.
pub fn state_recurrence_period(states: &[StateVector], tol: f64) -> Option<usize> {
    (1..states.len())
        .find(|&p| states.iter().zip(&states[p..]).all(|(a, b)| a.fidelity(b).map(|f| f >= 1.0 - tol).unwrap_or(false)))
}

/// `⌊(π/4)·√(N/M)⌋` iterations for `M` solutions among `N` items.
pub fn optimal_iterations(n_items: u64, n_solutions: u64) -> Result<u64> {
    if n_solutions == 0 || n_solutions > n_items {
        return Err(Error::invalid(format!("need 1 <= solutions <= items, got {n_solutions} of {n_items}")));
    }
    if !n_items.is_power_of_two() {
        return Err(Error::invalid(format!("item count {n_items} is not a power of two")));
    }
    Ok((FRAC_PI_4 * (n_items as f64 / n_solutions as f64).sqrt()).floor() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub peak_iteration: usize,
    pub peak_probability: f64,
    pub recurrence_period: Option<usize>,
    /// Basis states sharing the largest probability at the peak iteration.
    pub co_maximal: Vec<usize>,
}

/// Locates the first iteration `n ≥ 1` where `P(marked)` peaks and lists the
/// basis states tied (within [`TIE_TOL`]) for the top probability there.
/// Trajectories with only the n = 0 record report that record.
pub fn search_report(traj: &Trajectory) -> Result<SearchReport> {
    if traj.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    let start = usize::from(traj.len() > 1);
    let mut peak = start;
    for n in start..traj.len() {
        if traj.marked_probability(n) > traj.marked_probability(peak) {
            peak = n;
        }
    }
    let dist = &traj.records[peak].probabilities;
    let top = dist.iter().copied().fold(0.0, f64::max);
    let co_maximal = dist.iter().enumerate().filter(|(_, &p)| (top - p).abs() <= TIE_TOL).map(|(k, _)| k).collect();
    Ok(SearchReport {
        peak_iteration: traj.records[peak].iteration,
        peak_probability: traj.marked_probability(peak),
        recurrence_period: recurrence_period(traj, TIE_TOL),
        co_maximal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{build_diffusion, build_p, build_w, rotation_x, Angle};
    use ndarray::{linalg::kron, Array1, Array2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_state(q: u32, rng: &mut impl Rng) -> StateVector {
        let mut amps: Vec<C64> =
            (0..1usize << q).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= n);
        StateVector::from_amplitudes(q, amps).unwrap()
    }

    fn dense_apply(m: &Array2<C64>, s: &StateVector) -> Vec<C64> {
        m.dot(&Array1::from(s.amplitudes().to_vec())).to_vec()
    }

    fn max_dev(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn initial_two_qubit_state() {
        let s = prepare_initial(2).unwrap();
        let expect = [c(-0.5, 0.), c(0., 0.5), c(0., 0.5), c(0.5, 0.)];
        assert!(max_dev(s.amplitudes(), &expect) < 1e-12);
        assert!(prepare_initial(1).is_err());
    }

    #[test]
    fn initial_three_qubit_all_ones_weight() {
        let s = prepare_initial(3).unwrap();
        assert!((s.amplitude(7) - c(0.5f64.powf(1.5), 0.)).norm() < 1e-12);
        assert!((s.probabilities()[7] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn initial_matches_dense_w() {
        for q in 2..=6 {
            let dense = build_w(q).unwrap().as_array().column((1 << q) - 1).to_vec();
            assert!(max_dev(prepare_initial(q).unwrap().amplitudes(), &dense) < 1e-12);
        }
    }

    #[test]
    fn single_qubit_w_on_last_pair() {
        let mut s = StateVector::basis(2, 3).unwrap();
        s.apply_single_qubit(&walsh(), 1).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!(max_dev(s.amplitudes(), &[c(0., 0.), c(0., 0.), c(0., h), c(h, 0.)]) < 1e-12);
        assert!(s.apply_single_qubit(&walsh(), 2).is_err());
        let big = build_w(2).unwrap();
        assert!(s.apply_single_qubit(&big, 0).is_err());
    }

    #[test]
    fn walsh_on_each_qubit_is_prepare_initial() {
        for q in 2..=7 {
            let mut s = StateVector::basis(q, (1 << q) - 1).unwrap();
            for k in 0..q {
                s.apply_single_qubit(&walsh(), k).unwrap();
            }
            assert!(max_dev(s.amplitudes(), prepare_initial(q).unwrap().amplitudes()) < 1e-12);
        }
    }

    #[test]
    fn factored_w_matches_dense_on_every_basis_vector() {
        for q in 2..=5 {
            let w = build_w(q).unwrap();
            for b in 0..1usize << q {
                let mut s = StateVector::basis(q, b).unwrap();
                s.apply_walsh_all();
                let col = w.as_array().column(b).to_vec();
                assert!(max_dev(s.amplitudes(), &col) < 1e-12);
            }
        }
    }

    #[test]
    fn random_gate_on_six_qubits_matches_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_state(6, &mut rng);
        let gate = rotation_x(Angle::new(0.731).unwrap())
            .compose(&UnitaryMatrix::new(ndarray::arr2(&[[c(1., 0.), c(0., 0.)], [c(0., 0.), c(0.6, 0.8)]])).unwrap())
            .unwrap();
        let mut dense = Array2::<C64>::eye(1);
        for k in 0..6 {
            let f = if k == 3 { gate.as_array().clone() } else { Array2::eye(2) };
            dense = kron(&dense, &f);
        }
        let mut f = s.clone();
        f.apply_single_qubit(&gate, 3).unwrap();
        assert!(max_dev(f.amplitudes(), &dense_apply(&dense, &s)) < 1e-12);
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invert_marked_cases() {
        let mut s = prepare_initial(2).unwrap();
        s.invert_marked(TargetIndex::all_ones(2).unwrap()).unwrap();
        let expect = [c(-0.5, 0.), c(0., 0.5), c(0., 0.5), c(-0.5, 0.)];
        assert!(max_dev(s.amplitudes(), &expect) < 1e-12);

        let mut z = StateVector::basis(2, 0).unwrap();
        z.invert_marked(TargetIndex::all_ones(2).unwrap()).unwrap();
        assert_eq!(z, StateVector::basis(2, 0).unwrap());

        assert!(s.invert_marked(TargetIndex::all_ones(3).unwrap()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_state(7, &mut rng);
        let t = TargetIndex::from_basis(7, 77).unwrap();
        let mut f = s.clone();
        f.invert_marked(t).unwrap();
        assert!(max_dev(f.amplitudes(), &dense_apply(build_p(t).unwrap().as_array(), &s)) < 1e-12);
    }

    #[test]
    fn diffusion_cases() {
        let mut s = StateVector::from_amplitudes(2, vec![c(-0.5, 0.), c(0., 0.5), c(0., 0.5), c(-0.5, 0.)]).unwrap();
        s.apply_diffusion().unwrap();
        assert!(max_dev(s.amplitudes(), &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]) < 1e-12);

        // first column of D_3 = (1,−i,−i,−1,−i,−1,−1,−3i)/4
        let mut e0 = StateVector::basis(3, 0).unwrap();
        e0.apply_diffusion().unwrap();
        let col: Vec<C64> =
            [c(1., 0.), c(0., -1.), c(0., -1.), c(-1., 0.), c(0., -1.), c(-1., 0.), c(-1., 0.), c(0., -3.)]
                .iter()
                .map(|z| z / 4.0)
                .collect();
        assert!(max_dev(e0.amplitudes(), &col) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(8, &mut rng);
        let mut f = s.clone();
        f.apply_diffusion().unwrap();
        assert!(max_dev(f.amplitudes(), &dense_apply(build_diffusion(8).unwrap().as_array(), &s)) < 1e-10);

        let mut one = StateVector::basis(1, 0).unwrap();
        assert!(one.apply_diffusion().is_err());
    }

    #[test]
    fn two_qubit_search_recurs_with_period_three() {
        let t = TargetIndex::all_ones(2).unwrap();
        let traj = run_search(2, t, 18).unwrap();
        let psi1 = prepare_initial(2).unwrap();
        let states = evolve(t, 18).unwrap();
        for n in 0..=18 {
            let p = traj.marked_probability(n);
            let want = if n % 3 == 1 { 1.0 } else { 0.25 };
            assert!((p - want).abs() < 1e-12, "n={n} p={p}");
            if n % 3 == 0 {
                assert!(max_dev(states[n].amplitudes(), psi1.amplitudes()) < 1e-12);
            }
        }
        assert_eq!(recurrence_period(&traj, 1e-9), Some(3));
        assert_eq!(state_recurrence_period(&states, 1e-9), Some(3));
    }

    #[test]
    fn every_two_qubit_target_found_in_one_step() {
        for b in 0..4 {
            let t = TargetIndex::from_basis(2, b).unwrap();
            let traj = run_search(2, t, 1).unwrap();
            assert!((traj.marked_probability(1) - 1.0).abs() < 1e-12, "target {t}");
        }
    }

    #[test]
    fn three_qubit_mirror_pairing() {
        let t = TargetIndex::all_ones(3).unwrap();
        for s in evolve(t, 18).unwrap() {
            assert!(s.mirror_defect() < 1e-12);
            assert!((s.probabilities()[0] - s.probabilities()[7]).abs() < 1e-12);
        }
    }

    #[test]
    fn three_qubit_search_is_not_periodic() {
        let t = TargetIndex::all_ones(3).unwrap();
        let traj = run_search(3, t, 18).unwrap();
        assert!(recurrence_period(&traj, 1e-9).is_none_or(|p| p > 9));
        assert_eq!(state_recurrence_period(&evolve(t, 18).unwrap(), 1e-9), None);
    }

    #[test]
    fn recurrence_of_constant_trajectory() {
        let t = TargetIndex::all_ones(2).unwrap();
        let mut traj = run_search(2, t, 0).unwrap();
        traj.records.push(Record { iteration: 1, ..traj.records[0].clone() });
        assert_eq!(recurrence_period(&traj, 1e-12), Some(1));
    }

    #[test]
    fn optimal_iteration_counts() {
        assert_eq!(optimal_iterations(4, 1).unwrap(), 1);
        assert_eq!(optimal_iterations(16, 1).unwrap(), 3);
        assert_eq!(optimal_iterations(8, 2).unwrap(), 1);
        assert!(optimal_iterations(8, 0).is_err());
        assert!(optimal_iterations(8, 9).is_err());
        assert!(optimal_iterations(12, 1).is_err());
    }

    #[test]
    fn reports() {
        let r = search_report(&run_search(2, TargetIndex::all_ones(2).unwrap(), 18).unwrap()).unwrap();
        assert_eq!(r.peak_iteration, 1);
        assert!((r.peak_probability - 1.0).abs() < 1e-12);
        assert_eq!(r.co_maximal, vec![3]);
        assert_eq!(r.recurrence_period, Some(3));

        let r = search_report(&run_search(3, TargetIndex::all_ones(3).unwrap(), 18).unwrap()).unwrap();
        assert_eq!(r.co_maximal, vec![0, 7]);

        let traj = run_search(4, TargetIndex::all_ones(4).unwrap(), 18).unwrap();
        assert!((1..=4).any(|n| traj.marked_probability(n) > 0.5));
        let r = search_report(&traj).unwrap();
        assert_eq!(r.co_maximal, vec![15]);
    }

    #[test]
    fn global_phase_leaves_probabilities_unchanged() {
        let t = TargetIndex::all_ones(4).unwrap();
        let base = Trajectory::from_states(t, Scheme::Paper, &evolve(t, 18).unwrap());
        for phase in [c(-1., 0.), c(0., 1.), c(0., -1.)] {
            let s = prepare_initial(4).unwrap().with_global_phase(phase).unwrap();
            let traj = Trajectory::from_states(t, Scheme::Paper, &evolve_from(s, t, 18).unwrap());
            assert_eq!(traj, base);
        }
    }

    proptest! {
        #[test]
        fn global_phase_invariance(phi in 0.0f64..std::f64::consts::TAU, q in 2u32..=6) {
            let t = TargetIndex::all_ones(q).unwrap();
            let base = run_search(q, t, 18).unwrap();
            let s = prepare_initial(q).unwrap().with_global_phase(C64::from_polar(1.0, phi)).unwrap();
            let traj = Trajectory::from_states(t, Scheme::Paper, &evolve_from(s, t, 18).unwrap());
            for (a, b) in base.records.iter().zip(&traj.records) {
                prop_assert!(max_norm(&a.probabilities, &b.probabilities) < 1e-14);
            }
        }

        #[test]
        fn norm_preserved_over_100_iterations(q in 2u32..=8, seed in any::<u64>()) {
            let t = TargetIndex::from_basis(q, (seed % (1 << q)) as usize).unwrap();
            for s in evolve(t, 100).unwrap() {
                prop_assert!((s.norm_sqr() - 1.0).abs() < NORM_TOL);
            }
        }
    }
}
