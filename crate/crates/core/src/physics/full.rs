//! Two ions sharing one motional mode, driven by a bichromatic field.
//!
//! State layout: `level * (cutoff + 1) + n` with `level` in `gg, ge, eg, ee`
//! order and `n` the phonon number up to `cutoff` inclusive.
//!
//! The interaction-picture Hamiltonian is
//!
//! ```text
//! H(t) = Σ_j g σ⁺_j exp[iη(a e^{−iνt} + a† e^{iνt})] (e^{−iδt} + e^{iδt}) + h.c.
//! ```
//!
//! with the exponential taken exactly on the truncated Fock space (no
//! Lamb-Dicke expansion). `Ω` is the Rabi frequency of the combined field,
//! split equally over the two tones, so each tone couples with
//! `g = Ω / (2√2)`. With that normalisation the second-order dynamics on
//! `{|eg>, |ge>}` is `U(Ω̃t/2)` with `Ω̃ = −(Ωη)²/(2(ν−δ))`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::ode::{DormandPrince, Rhs};
use super::pair::PairLevel;
use super::{effective_rabi, PulseParams, TRAP_FREQUENCY};
use crate::error::{Error, Result};

/// Default phonon cutoff.
pub const DEFAULT_CUTOFF: usize = 15;

/// Largest population tolerated in the top Fock level.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

/// Default local error tolerance of the integrator.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Samples used by [`extract_effective_rabi`] over one effective period.
pub const FIT_SAMPLES: usize = 200;

/// RMS residual above which a Rabi fit is rejected.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.05;

const ZERO: C64 = C64::new(0.0, 0.0);
const MAX_PERIOD_DENOMINATOR: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct FullSystemState {
    cutoff: usize,
    amps: Vec<C64>,
}

impl FullSystemState {
    pub fn basis(level: PairLevel, n: usize, cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        if n > cutoff {
            return Err(Error::invalid(format!("phonon number {n} above cutoff {cutoff}")));
        }
        let mut amps = vec![ZERO; 4 * (cutoff + 1)];
        amps[level.index() * (cutoff + 1) + n] = C64::new(1.0, 0.0);
        Ok(FullSystemState { cutoff, amps })
    }

    pub fn from_amplitudes(cutoff: usize, amps: Vec<C64>) -> Result<Self> {
        check_cutoff(cutoff)?;
        if amps.len() != 4 * (cutoff + 1) {
            return Err(Error::invalid(format!(
                "{} amplitudes for cutoff {cutoff}, need {}",
                amps.len(),
                4 * (cutoff + 1)
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!("state norm² is {norm}, expected 1")));
        }
        Ok(FullSystemState { cutoff, amps })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, level: PairLevel, n: usize) -> C64 {
        self.amps[level.index() * (self.cutoff + 1) + n]
    }

    pub fn population(&self, level: PairLevel, n: usize) -> f64 {
        self.amplitude(level, n).norm_sqr()
    }

    pub fn level_population(&self, level: PairLevel) -> f64 {
        (0..=self.cutoff).map(|n| self.population(level, n)).sum()
    }

    /// Population in phonon number `n`, summed over internal levels.
    pub fn phonon_population(&self, n: usize) -> f64 {
        PairLevel::ALL.iter().map(|&l| self.population(l, n)).sum()
    }

    /// Population in the top Fock level.
    pub fn leakage(&self) -> f64 {
        self.phonon_population(self.cutoff)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Re-expresses the state on a different cutoff, padding with zeros or
    /// dropping levels above the new cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        let mut amps = vec![ZERO; 4 * (cutoff + 1)];
        for l in PairLevel::ALL {
            for n in 0..=cutoff.min(self.cutoff) {
                amps[l.index() * (cutoff + 1) + n] = self.amplitude(l, n);
            }
        }
        Ok(FullSystemState { cutoff, amps })
    }

    /// Largest amplitude difference over the levels both states share.
    pub fn max_deviation(&self, other: &FullSystemState) -> f64 {
        let top = self.cutoff.max(other.cutoff);
        let get = |s: &FullSystemState, l: PairLevel, n: usize| if n <= s.cutoff { s.amplitude(l, n) } else { ZERO };
        let mut worst = 0.0f64;
        for l in PairLevel::ALL {
            for n in 0..=top {
                worst = worst.max((get(self, l, n) - get(other, l, n)).norm());
            }
        }
        worst
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 2 {
        return Err(Error::invalid(format!("phonon cutoff must be at least 2, got {cutoff}")));
    }
    if cutoff > 512 {
        return Err(Error::ResourceLimit(format!("phonon cutoff {cutoff} exceeds 512")));
    }
    Ok(())
}

/// Precomputed pieces of `H(t)` for one parameter set and cutoff.
#[derive(Debug, Clone)]
pub struct BichromaticDrive {
    params: PulseParams,
    dim: usize,
    coupling: f64,
    // exp(iη(a + a†)) and its adjoint, row-major
    disp: Vec<C64>,
    disp_adj: Vec<C64>,
}

impl BichromaticDrive {
    pub fn new(params: PulseParams, cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        let dim = cutoff + 1;
        let x = DMatrix::<f64>::from_fn(dim, dim, |r, c| {
            if r + 1 == c {
                (c as f64).sqrt()
            } else if c + 1 == r {
                (r as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(x);
        let eta = params.lamb_dicke;
        let mut disp = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                disp[r * dim + c] = (0..dim)
                    .map(|k| {
                        C64::from_polar(1.0, eta * eig.eigenvalues[k])
                            * (eig.eigenvectors[(r, k)] * eig.eigenvectors[(c, k)])
                    })
                    .sum();
            }
        }
        let mut disp_adj = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                disp_adj[r * dim + c] = disp[c * dim + r].conj();
            }
        }
        Ok(BichromaticDrive { params, dim, coupling: 0.5 * params.rabi * FRAC_1_SQRT_2, disp, disp_adj })
    }

    pub fn cutoff(&self) -> usize {
        self.dim - 1
    }

    pub fn params(&self) -> &PulseParams {
        &self.params
    }

    /// Total Hilbert-space dimension, `4 (cutoff + 1)`.
    pub fn state_dim(&self) -> usize {
        4 * self.dim
    }

    /// Common period of every frequency in `H(t)`, when the detuning is a
    /// rational multiple of the trap frequency with small denominator.
    pub fn period(&self) -> Option<f64> {
        let ratio = self.params.detuning / TRAP_FREQUENCY;
        (1..=MAX_PERIOD_DENOMINATOR)
            .find(|&b| {
                let x = ratio * b as f64;
                (x - x.round()).abs() < 1e-9
            })
            .map(|b| TAU * b as f64 / TRAP_FREQUENCY)
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        let step = C64::from_polar(1.0, -TRAP_FREQUENCY * t);
        let mut p = Vec::with_capacity(self.dim);
        let mut acc = C64::new(1.0, 0.0);
        for _ in 0..self.dim {
            p.push(acc);
            acc *= step;
        }
        p
    }

    fn envelope(&self, t: f64) -> f64 {
        2.0 * self.coupling * (self.params.detuning * t).cos()
    }

    /// `out = conj(p) ⊙ M (p ⊙ v)`, i.e. the time-dependent displacement.
    fn displaced(&self, m: &[C64], p: &[C64], v: &[C64], scale: C64, out: &mut [C64], scratch: &mut [C64]) {
        let d = self.dim;
        for k in 0..d {
            scratch[k] = p[k] * v[k];
        }
        for r in 0..d {
            let row = &m[r * d..(r + 1) * d];
            let acc: C64 = row.iter().zip(scratch.iter()).map(|(a, b)| a * b).sum();
            out[r] += scale * p[r].conj() * acc;
        }
    }

    /// `out = H(t) · psi`.
    pub fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let p = self.phases(t);
        let f = C64::new(self.envelope(t), 0.0);
        out.iter_mut().for_each(|z| *z = ZERO);
        let mut scratch = vec![ZERO; d];
        let mut sym = vec![ZERO; d];
        let (gg, ge, eg, ee) = (0, d, 2 * d, 3 * d);
        for k in 0..d {
            sym[k] = psi[ge + k] + psi[eg + k];
        }
        let mut up = vec![ZERO; d];
        self.displaced(&self.disp, &p, &psi[gg..gg + d], f, &mut up, &mut scratch);
        self.displaced(&self.disp_adj, &p, &psi[ee..ee + d], f, &mut up, &mut scratch);
        out[ge..ge + d].copy_from_slice(&up);
        out[eg..eg + d].copy_from_slice(&up);
        self.displaced(&self.disp_adj, &p, &sym, f, &mut out[gg..gg + d], &mut scratch);
        self.displaced(&self.disp, &p, &sym, f, &mut out[ee..ee + d], &mut scratch);
    }

    /// Dense `H(t)`.
    pub fn matrix(&self, t: f64) -> Array2<C64> {
        let n = self.state_dim();
        let mut h = Array2::zeros((n, n));
        let mut e = vec![ZERO; n];
        let mut col = vec![ZERO; n];
        for c in 0..n {
            e.iter_mut().for_each(|z| *z = ZERO);
            e[c] = C64::new(1.0, 0.0);
            self.apply(t, &e, &mut col);
            for r in 0..n {
                h[[r, c]] = col[r];
            }
        }
        h
    }
}

struct Schrodinger<'a>(&'a BichromaticDrive);

impl Rhs for Schrodinger<'_> {
    fn eval(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        self.0.apply(t, y, dy);
        dy.iter_mut().for_each(|z| *z = C64::new(z.im, -z.re));
    }
}

/// Dense interaction-picture Hamiltonian at time `t`.
pub fn bichromatic_hamiltonian(p: &PulseParams, cutoff: usize, t: f64) -> Result<Array2<C64>> {
    Ok(BichromaticDrive::new(*p, cutoff)?.matrix(t))
}

/// Propagates along `H(t)`, integrating directly over short spans and using
/// a one-period propagator when the drive is periodic.
struct Propagator<'a> {
    drive: &'a BichromaticDrive,
    tol: f64,
    floquet: Option<(f64, Vec<C64>)>,
    steps: usize,
    step_hint: f64,
}

impl<'a> Propagator<'a> {
    fn new(drive: &'a BichromaticDrive, tol: f64, horizon: f64) -> Result<Self> {
        let mut prop = Propagator { drive, tol, floquet: None, steps: 0, step_hint: 0.05 };
        if let Some(period) = drive.period() {
            if horizon > 4.0 * period {
                let n = drive.state_dim();
                let mut u = vec![ZERO; n * n];
                for c in 0..n {
                    let mut col = vec![ZERO; n];
                    col[c] = C64::new(1.0, 0.0);
                    prop.integrate(&mut col, 0.0, period)?;
                    for r in 0..n {
                        u[r * n + c] = col[r];
                    }
                }
                prop.floquet = Some((period, u));
            }
        }
        Ok(prop)
    }

    fn integrate(&mut self, y: &mut [C64], t0: f64, t1: f64) -> Result<()> {
        if t1 <= t0 {
            return Ok(());
        }
        let mut dp = DormandPrince::new(y.len(), self.tol, self.step_hint)?;
        dp.integrate(&Schrodinger(self.drive), y, t0, t1)?;
        self.steps += dp.stats.accepted + dp.stats.rejected;
        Ok(())
    }

    /// States at each of the non-decreasing `times`, starting from `psi0` at
    /// t = 0.
    fn sample(&mut self, psi0: &[C64], times: &[f64]) -> Result<Vec<Vec<C64>>> {
        let mut out = Vec::with_capacity(times.len());
        match self.floquet.take() {
            None => {
                let mut psi = psi0.to_vec();
                let mut t = 0.0;
                for &tk in times {
                    self.integrate(&mut psi, t, tk)?;
                    t = tk;
                    out.push(psi.clone());
                }
            }
            Some((period, u)) => {
                let n = psi0.len();
                // state at an integer number of periods
                let mut aligned = psi0.to_vec();
                let mut periods = 0u64;
                let mut tmp = vec![ZERO; n];
                for &tk in times {
                    let mut m = (tk / period).floor();
                    let mut r = tk - m * period;
                    if period - r < 1e-9 * period {
                        m += 1.0;
                        r = 0.0;
                    } else if r < 1e-9 * period {
                        r = 0.0;
                    }
                    let m = m as u64;
                    while periods < m {
                        for (row, t) in tmp.iter_mut().enumerate() {
                            *t = u[row * n..(row + 1) * n].iter().zip(&aligned).map(|(a, b)| a * b).sum();
                        }
                        std::mem::swap(&mut aligned, &mut tmp);
                        periods += 1;
                    }
                    let mut psi = aligned.clone();
                    self.integrate(&mut psi, 0.0, r)?;
                    out.push(psi);
                }
                self.floquet = Some((period, u));
            }
        }
        Ok(out)
    }

    /// Integrator steps spent, counting each one-period column once per
    /// application of the period propagator.
    fn effective_steps(&self, horizon: f64) -> usize {
        match &self.floquet {
            Some((period, _)) => {
                let n = self.drive.state_dim().max(1);
                let per_period = self.steps / n;
                per_period * (horizon / period).ceil() as usize + self.steps
            }
            None => self.steps,
        }
    }
}

fn check_state(drive: &BichromaticDrive, initial: &FullSystemState) -> Result<()> {
    if initial.cutoff != drive.cutoff() {
        return Err(Error::invalid(format!(
            "state cutoff {} does not match drive cutoff {}",
            initial.cutoff,
            drive.cutoff()
        )));
    }
    Ok(())
}

fn finish(cutoff: usize, amps: Vec<C64>) -> Result<FullSystemState> {
    let s = FullSystemState { cutoff, amps };
    let leak = s.leakage();
    if leak > LEAKAGE_LIMIT {
        return Err(Error::CutoffTooSmall { cutoff, leakage: leak });
    }
    Ok(s)
}

/// Integrates `i dψ/dt = H(t)ψ` from t = 0 and returns the state at each of
/// the non-decreasing `times`.
pub fn simulate_sampled(
    p: &PulseParams,
    initial: &FullSystemState,
    times: &[f64],
    tol: f64,
) -> Result<Vec<FullSystemState>> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("sample times must be finite, non-negative and sorted"));
    }
    let drive = BichromaticDrive::new(*p, initial.cutoff)?;
    check_state(&drive, initial)?;
    let horizon = times.last().copied().unwrap_or(0.0);
    let mut prop = Propagator::new(&drive, tol, horizon)?;
    let raw = prop.sample(&initial.amps, times)?;
    let steps = prop.effective_steps(horizon).max(1);
    let n0 = initial.norm_sqr();
    let mut out = Vec::with_capacity(raw.len());
    for amps in raw {
        let s = finish(initial.cutoff, amps)?;
        let drift = (s.norm_sqr() - n0).abs();
        if drift > 10.0 * tol * steps as f64 {
            return Err(Error::Integrator(format!("norm drift {drift:.3e} after {steps} steps")));
        }
        out.push(s);
    }
    Ok(out)
}

/// Final state after evolving `initial` for `duration`.
pub fn simulate_full(p: &PulseParams, initial: &FullSystemState, duration: f64, tol: f64) -> Result<FullSystemState> {
    let mut v = simulate_sampled(p, initial, &[duration], tol)?;
    Ok(v.pop().expect("one sample"))
}

/// Runs [`simulate_full`] at `cutoff`, `2·cutoff`, `4·cutoff`, … until the
/// final amplitudes of successive runs agree to `amp_tol`. Returns the
/// converged state and the cutoff that produced it.
pub fn simulate_converged(
    p: &PulseParams,
    level: PairLevel,
    n: usize,
    duration: f64,
    tol: f64,
    mut cutoff: usize,
    amp_tol: f64,
) -> Result<(FullSystemState, usize)> {
    let run = |cut: usize| -> Result<Option<FullSystemState>> {
        match simulate_full(p, &FullSystemState::basis(level, n, cut)?, duration, tol) {
            Ok(s) => Ok(Some(s)),
            Err(Error::CutoffTooSmall { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut prev = run(cutoff)?;
    loop {
        let next_cut = cutoff * 2;
        check_cutoff(next_cut)?;
        let next = run(next_cut)?;
        if let (Some(a), Some(b)) = (&prev, &next) {
            if a.max_deviation(b) < amp_tol {
                return Ok((b.clone(), next_cut));
            }
        }
        prev = next;
        cutoff = next_cut;
    }
}

/// Result of fitting `P_{|eg,n>}(t) = sin²(Ω̃ t / 2)` to the full dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiFit {
    pub phonon_number: usize,
    /// Fitted coupling, carrying the sign of the formula value.
    pub fitted: f64,
    pub formula: f64,
    pub rms_residual: f64,
}

impl RabiFit {
    pub fn relative_error(&self) -> f64 {
        (self.fitted.abs() - self.formula.abs()).abs() / self.formula.abs()
    }
}

fn fit_residual(times: &[f64], pops: &[f64], w: f64) -> f64 {
    let ss: f64 = times
        .iter()
        .zip(pops)
        .map(|(t, p)| {
            let m = (0.5 * w * t).sin().powi(2);
            (m - p).powi(2)
        })
        .sum();
    (ss / times.len() as f64).sqrt()
}

/// Fits the effective coupling from the full dynamics started in `|ge, n>`,
/// sampled [`FIT_SAMPLES`] times over one effective period.
pub fn extract_effective_rabi(p: &PulseParams, n: usize, cutoff: usize, tol: f64) -> Result<RabiFit> {
    if n + 3 > cutoff {
        return Err(Error::invalid(format!("phonon number {n} needs cutoff at least {}", n + 3)));
    }
    let formula = effective_rabi(p)?.value();
    if formula == 0.0 {
        return Err(Error::invalid("effective Rabi frequency is zero; nothing to fit"));
    }
    let w0 = formula.abs();
    let window = TAU / w0;
    let times: Vec<f64> = (0..FIT_SAMPLES).map(|k| window * k as f64 / FIT_SAMPLES as f64).collect();
    let initial = FullSystemState::basis(PairLevel::GE, n, cutoff)?;
    let states = simulate_sampled(p, &initial, &times, tol)?;
    let pops: Vec<f64> = states.iter().map(|s| s.population(PairLevel::EG, n)).collect();

    // coarse scan, then golden-section refinement around the best point
    let (lo, hi, grid) = (0.5 * w0, 1.5 * w0, 400);
    let dw = (hi - lo) / grid as f64;
    let best = (0..=grid)
        .map(|k| lo + dw * k as f64)
        .min_by(|a, b| fit_residual(&times, &pops, *a).total_cmp(&fit_residual(&times, &pops, *b)))
        .expect("non-empty grid");
    let (mut a, mut b) = (best - dw, best + dw);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (fit_residual(&times, &pops, x1), fit_residual(&times, &pops, x2));
    for _ in 0..100 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = fit_residual(&times, &pops, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = fit_residual(&times, &pops, x2);
        }
    }
    let w = 0.5 * (a + b);
    let fit = RabiFit {
        phonon_number: n,
        fitted: w * formula.signum(),
        formula,
        rms_residual: fit_residual(&times, &pops, w),
    };
    if fit.rms_residual > FIT_RESIDUAL_LIMIT {
        return Err(Error::RegimeViolation(format!(
            "sin² fit residual {:.3} above {FIT_RESIDUAL_LIMIT} (fitted {:.4e}, formula {:.4e})",
            fit.rms_residual, fit.fitted, fit.formula
        )));
    }
    Ok(fit)
}

/// `π/|Ω̃|`: the pulse length that fully swaps `|ge>` and `|eg>`.
pub fn transfer_time(p: &PulseParams) -> Result<f64> {
    let w = effective_rabi(p)?.value().abs();
    if w == 0.0 {
        return Err(Error::invalid("effective Rabi frequency is zero"));
    }
    Ok(PI / w)
}
