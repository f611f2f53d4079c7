//! Single ion pair: four internal states, two of which carry the logical qubit.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gates::{rotation_x, Angle};

/// Internal state of a pair; the first letter is the first ion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairLevel {
    GG = 0,
    GE = 1,
    EG = 2,
    EE = 3,
}

impl PairLevel {
    pub const ALL: [PairLevel; 4] = [PairLevel::GG, PairLevel::GE, PairLevel::EG, PairLevel::EE];

    /// Number of ions in `|e>`.
    pub fn excitations(self) -> u32 {
        match self {
            PairLevel::GG => 0,
            PairLevel::GE | PairLevel::EG => 1,
            PairLevel::EE => 2,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Logical `|0>`.
pub const LOGICAL_ZERO: PairLevel = PairLevel::EG;
/// Logical `|1>`.
pub const LOGICAL_ONE: PairLevel = PairLevel::GE;

#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    amps: [C64; 4],
}

impl PairState {
    /// Amplitudes in the order `gg, ge, eg, ee`.
    pub fn new(amps: [C64; 4]) -> Result<Self> {
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("pair state norm² is {n}, expected 1")));
        }
        Ok(PairState { amps })
    }

    /// `α|0> + β|1> = α|eg> + β|ge>`.
    pub fn logical(alpha: C64, beta: C64) -> Result<Self> {
        let mut amps = [C64::new(0.0, 0.0); 4];
        amps[LOGICAL_ZERO.index()] = alpha;
        amps[LOGICAL_ONE.index()] = beta;
        Self::new(amps)
    }

    pub fn level(l: PairLevel) -> Self {
        let mut amps = [C64::new(0.0, 0.0); 4];
        amps[l.index()] = C64::new(1.0, 0.0);
        PairState { amps }
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.amps
    }

    pub fn amplitude(&self, l: PairLevel) -> C64 {
        self.amps[l.index()]
    }

    /// Probability of `|eg>` and `|ge>` together.
    pub fn logical_population(&self) -> f64 {
        self.amplitude(LOGICAL_ZERO).norm_sqr() + self.amplitude(LOGICAL_ONE).norm_sqr()
    }

    /// Probabilities of logical `|0>` and `|1>`.
    pub fn logical_probabilities(&self) -> [f64; 2] {
        [self.amplitude(LOGICAL_ZERO).norm_sqr(), self.amplitude(LOGICAL_ONE).norm_sqr()]
    }

    pub fn apply(&self, m: &Array2<C64>) -> PairState {
        let mut out = [C64::new(0.0, 0.0); 4];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|c| m[[r, c]] * self.amps[c]).sum();
        }
        PairState { amps: out }
    }

    pub fn density_matrix(&self) -> Array2<C64> {
        Array2::from_shape_fn((4, 4), |(r, c)| self.amps[r] * self.amps[c].conj())
    }
}

/// Effective propagator of one bichromatic pulse on a pair: `U(θ)` on both
/// resonant blocks, `{|gg>, |ee>}` and `{|eg>, |ge>}`.
pub fn effective_pair_propagator(theta: Angle) -> Array2<C64> {
    let u = rotation_x(theta);
    let mut m = Array2::zeros((4, 4));
    for (a, b) in [(PairLevel::GG, PairLevel::EE), (PairLevel::EG, PairLevel::GE)] {
        let (a, b) = (a.index(), b.index());
        m[[a, a]] = u.get(0, 0);
        m[[a, b]] = u.get(0, 1);
        m[[b, a]] = u.get(1, 0);
        m[[b, b]] = u.get(1, 1);
    }
    m
}

/// Free evolution for time `t` with single-ion energies `e_excited`,
/// `e_ground`: each level picks up `exp(−i E t)` with `E` the sum of its two
/// ion energies.
pub fn free_evolution(state: &PairState, t: f64, e_excited: f64, e_ground: f64) -> PairState {
    let mut amps = state.amps;
    for l in PairLevel::ALL {
        let k = l.excitations() as f64;
        let energy = k * e_excited + (2.0 - k) * e_ground;
        amps[l.index()] *= C64::from_polar(1.0, -energy * t);
    }
    PairState { amps }
}

/// Collective dephasing: both ions' `|e>` levels pick up the same phase `φ`.
pub fn collective_dephase(state: &PairState, phi: f64) -> PairState {
    let mut amps = state.amps;
    for l in PairLevel::ALL {
        amps[l.index()] *= C64::from_polar(1.0, phi * l.excitations() as f64);
    }
    PairState { amps }
}

/// Global-phase-invariant overlap of the logical projections,
/// `|<a_L|b_L>|² / (‖a_L‖² ‖b_L‖²)`.
pub fn logical_fidelity(a: &PairState, b: &PairState) -> Result<f64> {
    let (na, nb) = (a.logical_population(), b.logical_population());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedFidelity("state has no population in the logical subspace".into()));
    }
    let overlap: C64 = [LOGICAL_ZERO, LOGICAL_ONE].iter().map(|&l| a.amplitude(l).conj() * b.amplitude(l)).sum();
    Ok((overlap.norm_sqr() / (na * nb)).min(1.0))
}

/// Density matrix after collective dephasing with `φ` uniform on `[0, 2π)`,
/// estimated from `draws` seeded samples.
pub fn dephasing_channel_average(state: &PairState, draws: usize, seed: u64) -> Result<Array2<C64>> {
    if draws == 0 {
        return Err(Error::invalid("need at least one draw"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rho = Array2::<C64>::zeros((4, 4));
    for _ in 0..draws {
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        rho += &collective_dephase(state, phi).density_matrix();
    }
    Ok(rho / draws as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_logical() -> PairState {
        PairState::logical(c(0.6, 0.0), c(0.0, 0.8)).unwrap()
    }

    #[test]
    fn pulse_on_ge_at_quarter_turn() {
        let u = effective_pair_propagator(Angle::new(PI / 2.0).unwrap());
        let out = PairState::level(PairLevel::GE).apply(&u);
        assert!((out.amplitude(PairLevel::EG) - c(0.0, -1.0)).norm() < 1e-15);
        assert!(out.amplitude(PairLevel::GE).norm() < 1e-15);
    }

    #[test]
    fn full_turn_is_identity() {
        let u = effective_pair_propagator(Angle::new(2.0 * PI).unwrap());
        assert_eq!(u, Array2::eye(4));
    }

    #[test]
    fn logical_block_is_rotation() {
        let theta = Angle::new(0.77).unwrap();
        let u = effective_pair_propagator(theta);
        let r = rotation_x(theta);
        let idx = [LOGICAL_ZERO.index(), LOGICAL_ONE.index()];
        for (i, &a) in idx.iter().enumerate() {
            for (j, &b) in idx.iter().enumerate() {
                assert_eq!(u[[a, b]], r.get(i, j));
            }
        }
    }

    #[test]
    fn free_evolution_is_global_on_logical_subspace() {
        let s = sample_logical();
        let out = free_evolution(&s, 13.7, 2.3, -0.4);
        assert!((logical_fidelity(&s, &out).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(free_evolution(&s, 0.0, 2.3, -0.4), s);
        let p0 = s.logical_probabilities();
        let p1 = out.logical_probabilities();
        assert!((p0[0] - p1[0]).abs() < 1e-15 && (p0[1] - p1[1]).abs() < 1e-15);
    }

    #[test]
    fn single_ion_encoding_would_dephase() {
        // α|g> + β|e> gets relative phase exp(−i(E_e − E_g)t)
        let (e_e, e_g, t) = (2.3, -0.4, 1.1);
        let (alpha, beta) = (FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let g = C64::from_polar(alpha, -e_g * t);
        let e = C64::from_polar(beta, -e_e * t);
        let overlap = alpha * g + beta * e;
        assert!(overlap.norm_sqr() < 0.99);
    }

    #[test]
    fn collective_dephasing_cases() {
        let s = sample_logical();
        for phi in [0.3, 1.0, PI, 5.0] {
            assert!((logical_fidelity(&s, &collective_dephase(&s, phi)).unwrap() - 1.0).abs() < 1e-15);
        }
        let ee = collective_dephase(&PairState::level(PairLevel::EE), PI / 2.0);
        assert!((ee.amplitude(PairLevel::EE) + c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dephasing_channel_keeps_logical_block() {
        let h = 0.5;
        let s = PairState::new([c(h, 0.), c(0., h), c(h, 0.), c(0., -h)]).unwrap();
        let rho0 = s.density_matrix();
        let rho = dephasing_channel_average(&s, 10_000, 42).unwrap();
        let (z, o) = (LOGICAL_ZERO.index(), LOGICAL_ONE.index());
        for (a, b) in [(z, z), (z, o), (o, z), (o, o)] {
            assert!((rho[[a, b]] - rho0[[a, b]]).norm() < 1e-12);
        }
        let (gg, ee) = (PairLevel::GG.index(), PairLevel::EE.index());
        assert!(rho0[[gg, ee]].norm() > 0.2);
        assert!(rho[[gg, ee]].norm() < 0.03);
        assert!(rho[[gg, z]].norm() < 0.03);
        assert_eq!(rho, dephasing_channel_average(&s, 10_000, 42).unwrap());
    }

    #[test]
    fn fidelity_cases() {
        let s = sample_logical();
        assert!((logical_fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-15);
        let zero = PairState::level(LOGICAL_ZERO);
        let one = PairState::level(LOGICAL_ONE);
        assert_eq!(logical_fidelity(&zero, &one).unwrap(), 0.0);
        let phased = PairState::new(s.amplitudes().map(|a| a * C64::from_polar(1.0, 2.2))).unwrap();
        assert!((logical_fidelity(&s, &phased).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(logical_fidelity(&PairState::level(PairLevel::GG), &s), Err(Error::UndefinedFidelity(_))));
    }
}
