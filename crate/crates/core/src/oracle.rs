//! Brute-force reference evolution.
//!
//! Everything here is rebuilt from scratch with explicit loops: its own
//! Kronecker recursion for `W_q`, its own diagonal placement for the
//! inversion, and an explicit iteration matrix `G = D_q · P_marked`. None of
//! it calls into [`crate::gates`] or [`crate::engine`] evolution, so agreement
//! between the two is evidence rather than tautology.

use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::engine::{Record, Scheme, Trajectory};
use crate::error::{Error, Result};
use crate::gates::TargetIndex;

/// Largest register the oracle will materialize.
pub const MAX_ORACLE_QUBITS: u32 = 10;

fn kron_power(factor: &[[C64; 2]; 2], q: u32) -> Array2<C64> {
    let mut acc = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
    for _ in 0..q {
        let n = acc.nrows();
        let mut next = Array2::zeros((2 * n, 2 * n));
        for r in 0..n {
            for c in 0..n {
                let a = acc[[r, c]];
                for (i, row) in factor.iter().enumerate() {
                    for (j, f) in row.iter().enumerate() {
                        next[[2 * r + i, 2 * c + j]] = a * f;
                    }
                }
            }
        }
        acc = next;
    }
    acc
}

fn sign_flip(n: usize, index: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |(r, c)| match (r == c, r == index) {
        (true, true) => C64::new(-1.0, 0.0),
        (true, false) => C64::new(1.0, 0.0),
        _ => C64::new(0.0, 0.0),
    })
}

fn check_oracle(q: u32, marked: TargetIndex) -> Result<()> {
    if q > MAX_ORACLE_QUBITS {
        return Err(Error::ResourceLimit(format!("dense oracle is limited to {MAX_ORACLE_QUBITS} qubits, got {q}")));
    }
    if marked.q() != q {
        return Err(Error::invalid(format!("marked state {marked} is not a {q}-qubit state")));
    }
    Ok(())
}

fn trajectory(marked: TargetIndex, scheme: Scheme, states: &[Array1<C64>]) -> Trajectory {
    Trajectory {
        q: marked.q(),
        marked,
        scheme,
        records: states
            .iter()
            .enumerate()
            .map(|(iteration, s)| Record { iteration, probabilities: s.iter().map(|a| a.norm_sqr()).collect() })
            .collect(),
    }
}

/// Dense matrices of the pair-qubit scheme for one marked state.
#[derive(Debug, Clone)]
pub struct DenseEvolution {
    pub q: u32,
    pub walsh: Array2<C64>,
    pub inversion: Array2<C64>,
    pub diffusion: Array2<C64>,
    /// One full iteration, `D_q · P_marked`.
    pub iteration: Array2<C64>,
}

impl DenseEvolution {
    pub fn new(q: u32, marked: TargetIndex) -> Result<Self> {
        check_oracle(q, marked)?;
        let h = FRAC_1_SQRT_2;
        let w = [[C64::new(h, 0.0), C64::new(0.0, h)], [C64::new(0.0, h), C64::new(h, 0.0)]];
        let n = 1usize << q;
        let walsh = kron_power(&w, q);
        let inversion = sign_flip(n, marked.basis());
        let diffusion = walsh.dot(&sign_flip(n, n - 1)).dot(&walsh);
        let iteration = diffusion.dot(&inversion);
        Ok(DenseEvolution { q, walsh, inversion, diffusion, iteration })
    }

    pub fn initial(&self) -> Array1<C64> {
        self.walsh.column(self.walsh.ncols() - 1).to_owned()
    }

    pub fn states(&self, n_iters: usize) -> Vec<Array1<C64>> {
        let mut out = Vec::with_capacity(n_iters + 1);
        let mut s = self.initial();
        out.push(s.clone());
        for _ in 0..n_iters {
            s = self.iteration.dot(&s);
            out.push(s.clone());
        }
        out
    }
}

/// The pair-qubit search by explicit matrix-vector products.
pub fn dense_run(q: u32, marked: TargetIndex, n_iters: usize) -> Result<Trajectory> {
    let ev = DenseEvolution::new(q, marked)?;
    Ok(trajectory(marked, Scheme::Paper, &ev.states(n_iters)))
}

/// Amplitudes of the dense run, for amplitude-level comparisons.
pub fn dense_states(q: u32, marked: TargetIndex, n_iters: usize) -> Result<Vec<Array1<C64>>> {
    Ok(DenseEvolution::new(q, marked)?.states(n_iters))
}

/// Textbook Grover: real Hadamards, phase oracle and `2|s><s| − I`, starting
/// from `H^{⊗q}|0…0>`.
pub fn standard_grover_run(q: u32, marked: TargetIndex, n_iters: usize) -> Result<Trajectory> {
    check_oracle(q, marked)?;
    let h = FRAC_1_SQRT_2;
    let had = [[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]];
    let n = 1usize << q;
    let hq = kron_power(&had, q);
    let s = hq.column(0).to_owned();
    let reflect = Array2::from_shape_fn((n, n), |(r, c)| {
        let d = if r == c { 1.0 } else { 0.0 };
        2.0 * s[r] * s[c].conj() - d
    });
    let g = reflect.dot(&sign_flip(n, marked.basis()));
    let mut states = vec![s.clone()];
    let mut psi = s;
    for _ in 0..n_iters {
        psi = g.dot(&psi);
        states.push(psi.clone());
    }
    Ok(trajectory(marked, Scheme::Standard, &states))
}

/// `sin²((2n+1)·arcsin(2^{−q/2}))`, the closed-form success probability of
/// textbook Grover with one solution.
pub fn standard_closed_form(q: u32, n: usize) -> f64 {
    let theta = (0.5f64.powf(f64::from(q) / 2.0)).asin();
    ((2 * n + 1) as f64 * theta).sin().powi(2)
}

/// Largest `|P_a − P_b|` over all records and basis states.
pub fn max_deviation(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.q != b.q || a.marked != b.marked || a.records.len() != b.records.len() {
        return Err(Error::invalid(format!(
            "trajectory shapes differ: q {} vs {}, marked {} vs {}, {} vs {} records",
            a.q,
            b.q,
            a.marked,
            b.marked,
            a.records.len(),
            b.records.len()
        )));
    }
    let mut worst = 0.0f64;
    for (ra, rb) in a.records.iter().zip(&b.records) {
        if ra.probabilities.len() != rb.probabilities.len() {
            return Err(Error::invalid("record dimensions differ"));
        }
        for (x, y) in ra.probabilities.iter().zip(&rb.probabilities) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}
