//! Gate algebra of the pair-qubit construction.
//!
//! Basis ordering is most-significant qubit first, with `|0> = (1, 0)ᵀ` and
//! `|1> = (0, 1)ᵀ`, so every matrix here can be compared entry by entry with
//! its printed form.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use ndarray::{linalg::kron, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entrywise tolerance for exact algebraic identities between matrices.
pub const MATRIX_TOL: f64 = 1e-12;

/// Largest qubit count for which dense `2^q × 2^q` matrices are built.
pub const MAX_DENSE_QUBITS: u32 = 10;

/// Largest qubit count accepted anywhere in the crate.
pub const MAX_QUBITS: u32 = 20;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Rotation angle in radians, reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::invalid(format!("angle must be finite, got {radians}")));
        }
        let mut r = radians.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π for tiny negative inputs
        if r >= TAU {
            r = 0.0;
        }
        Ok(Angle(r))
    }

    /// The angle of the pair-qubit Walsh-Hadamard substitute, `7π/4`.
    pub fn walsh() -> Self {
        Angle(7.0 * PI / 4.0)
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

/// Dense complex square matrix that passed a unitarity check on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(Array2<C64>);

impl UnitaryMatrix {
    /// Wraps `m` after checking `m·m† = I` to [`MATRIX_TOL`] and that the
    /// dimension is a power of two.
    pub fn new(m: Array2<C64>) -> Result<Self> {
        let dim = m.nrows();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!("dimension {dim} is not a power of two")));
        }
        if !is_unitary(&m, MATRIX_TOL)? {
            return Err(Error::invalid("matrix is not unitary"));
        }
        Ok(UnitaryMatrix(m))
    }

    fn trusted(m: Array2<C64>) -> Self {
        debug_assert!(m.is_square());
        UnitaryMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<C64> {
        self.0
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix(adjoint(&self.0))
    }

    pub fn compose(&self, rhs: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if self.dim() != rhs.dim() {
            return Err(Error::invalid(format!(
                "cannot compose {}×{} with {}×{}",
                self.dim(),
                self.dim(),
                rhs.dim(),
                rhs.dim()
            )));
        }
        Ok(UnitaryMatrix(self.0.dot(&rhs.0)))
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[[row, col]]
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_deviation(&self, other: &Array2<C64>) -> f64 {
        max_abs_diff(&self.0, other)
    }

    /// The 2×2 entries as a fixed array, for single-qubit application.
    pub(crate) fn as_2x2(&self) -> Option<[[C64; 2]; 2]> {
        (self.dim() == 2).then(|| [[self.0[[0, 0]], self.0[[0, 1]]], [self.0[[1, 0]], self.0[[1, 1]]]])
    }
}

/// Marked basis state of a `q`-qubit register.
///
/// Stored as a 0-based basis index (MSB = first ion pair). The 1-based
/// ordinal `i` used to label the inversion operators counts from the
/// other end: `basis = 2^q − i`, so `i = 1` marks `|1…1>` and `i = 2^q` marks
/// `|0…0>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetIndex {
    q: u32,
    basis: usize,
}

impl TargetIndex {
    pub fn from_basis(q: u32, basis: usize) -> Result<Self> {
        check_register(q, 2)?;
        if basis >= 1usize << q {
            return Err(Error::invalid(format!("basis index {basis} out of range for q={q}")));
        }
        Ok(TargetIndex { q, basis })
    }

    pub fn from_ordinal(q: u32, index: usize) -> Result<Self> {
        check_register(q, 2)?;
        let n = 1usize << q;
        if index == 0 || index > n {
            return Err(Error::invalid(format!("ordinal {index} outside 1..={n} for q={q}")));
        }
        Ok(TargetIndex { q, basis: n - index })
    }

    /// Parses a bitstring of `0`/`1` characters, most significant first.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        bits.parse()
    }

    /// The all-ones target `|1…1>` (ordinal 1).
    pub fn all_ones(q: u32) -> Result<Self> {
        Self::from_ordinal(q, 1)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn basis(&self) -> usize {
        self.basis
    }

    pub fn ordinal(&self) -> usize {
        (1usize << self.q) - self.basis
    }

    pub fn bitstring(&self) -> String {
        bitstring(self.basis, self.q)
    }
}

impl FromStr for TargetIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty bitstring".into()));
        }
        if s.len() > MAX_QUBITS as usize {
            return Err(Error::Parse(format!("bitstring of length {} exceeds {MAX_QUBITS} qubits", s.len())));
        }
        let mut basis = 0usize;
        for c in s.chars() {
            let bit = match c {
                '0' => 0,
                '1' => 1,
                other => return Err(Error::Parse(format!("invalid bit {other:?} in {s:?}"))),
            };
            basis = (basis << 1) | bit;
        }
        TargetIndex::from_basis(s.len() as u32, basis)
    }
}

impl fmt::Display for TargetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}>", self.bitstring())
    }
}

/// Formats `index` as a `q`-character bitstring, most significant bit first.
pub fn bitstring(index: usize, q: u32) -> String {
    (0..q).rev().map(|k| if (index >> k) & 1 == 1 { '1' } else { '0' }).collect()
}

pub(crate) fn check_register(q: u32, min: u32) -> Result<()> {
    if q < min {
        return Err(Error::invalid(format!("qubit count {q} below minimum {min}")));
    }
    if q > MAX_QUBITS {
        return Err(Error::ResourceLimit(format!("qubit count {q} exceeds {MAX_QUBITS}")));
    }
    Ok(())
}

fn check_dense(q: u32, min: u32) -> Result<()> {
    check_register(q, min)?;
    if q > MAX_DENSE_QUBITS {
        return Err(Error::ResourceLimit(format!("dense matrices are limited to {MAX_DENSE_QUBITS} qubits, got {q}")));
    }
    Ok(())
}

/// `U(θ) = [[cos θ, −i sin θ], [−i sin θ, cos θ]]`, the x-rotation produced by
/// one bichromatic pulse on a pair.
pub fn rotation_x(theta: Angle) -> UnitaryMatrix {
    let (s, c) = theta.radians().sin_cos();
    let off = C64::new(0.0, -s);
    UnitaryMatrix::trusted(ndarray::arr2(&[[C64::new(c, 0.0), off], [off, C64::new(c, 0.0)]]))
}

/// Single-pair `W = U(7π/4) = (1/√2)[[1, i], [i, 1]]`.
pub fn walsh() -> UnitaryMatrix {
    rotation_x(Angle::walsh())
}

/// `W_q`: the `q`-fold tensor power of [`walsh`].
pub fn build_w(q: u32) -> Result<UnitaryMatrix> {
    check_dense(q, 1)?;
    let w = walsh().into_array();
    let mut acc = w.clone();
    for _ in 1..q {
        acc = kron(&acc, &w);
    }
    Ok(UnitaryMatrix::trusted(acc))
}

/// `V_q = I^{⊗(q−1)} ⊗ W`: `W` on the last pair only.
pub fn build_v(q: u32) -> Result<UnitaryMatrix> {
    check_dense(q, 2)?;
    let id = Array2::<C64>::eye(1usize << (q - 1));
    Ok(UnitaryMatrix::trusted(kron(&id, walsh().as_array())))
}

/// Controlled operation `M^{(q)}_i`.
///
/// Identity except on the 2×2 block `{2b, 2b+1}` containing the target, which
/// is `[[0, −i], [i, 0]]` for an odd target index and `[[0, i], [−i, 0]]` for
/// an even one. Conjugating by `V_q` turns that block into a sign flip on the
/// target alone.
pub fn build_m(target: TargetIndex) -> Result<UnitaryMatrix> {
    check_dense(target.q, 2)?;
    let n = 1usize << target.q;
    let mut m = Array2::<C64>::eye(n);
    let lo = target.basis & !1;
    let hi = lo + 1;
    let s = if target.basis & 1 == 1 { ONE } else { -ONE };
    m[[lo, lo]] = ZERO;
    m[[hi, hi]] = ZERO;
    m[[lo, hi]] = -I * s;
    m[[hi, lo]] = I * s;
    Ok(UnitaryMatrix::trusted(m))
}

/// Inversion operator `P^{(q)}_i`: the identity with `−1` at the target.
pub fn build_p(target: TargetIndex) -> Result<UnitaryMatrix> {
    check_dense(target.q, 2)?;
    let mut p = Array2::<C64>::eye(1usize << target.q);
    p[[target.basis, target.basis]] = -ONE;
    Ok(UnitaryMatrix::trusted(p))
}

/// `V_q⁻¹ · M^{(q)}_i · V_q`, the physically motivated route to `P^{(q)}_i`.
pub fn build_p_conjugated(target: TargetIndex) -> Result<UnitaryMatrix> {
    let v = build_v(target.q)?;
    let m = build_m(target)?;
    v.adjoint().compose(&m)?.compose(&v)
}

/// Inversion about average `D_q = W_q · P^{(q)}_1 · W_q`.
pub fn build_diffusion(q: u32) -> Result<UnitaryMatrix> {
    check_dense(q, 2)?;
    let w = build_w(q)?;
    let p1 = build_p(TargetIndex::all_ones(q)?)?;
    w.compose(&p1)?.compose(&w)
}

/// True iff every entry of `m·m† − I` has modulus at most `tol`.
pub fn is_unitary(m: &Array2<C64>, tol: f64) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::invalid(format!("matrix is {}×{}, not square", m.nrows(), m.ncols())));
    }
    let prod = m.dot(&adjoint(m));
    let dev =
        prod.indexed_iter().map(|((r, c), z)| if r == c { (z - ONE).norm() } else { z.norm() }).fold(0.0, f64::max);
    Ok(dev <= tol)
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Largest entrywise modulus of `a − b`; infinite on shape mismatch.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    if a.dim() != b.dim() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scaled(s: f64, rows: &[&[C64]]) -> Array2<C64> {
        let n = rows.len();
        Array2::from_shape_fn((n, n), |(r, k)| rows[r][k] * s)
    }

    #[test]
    fn angle_reduces_into_canonical_range() {
        assert_eq!(Angle::new(TAU).unwrap().radians(), 0.0);
        assert!((Angle::new(-PI / 2.0).unwrap().radians() - 1.5 * PI).abs() < 1e-15);
        assert_eq!(Angle::new(-1e-300).unwrap().radians(), 0.0);
        assert!(Angle::new(f64::NAN).is_err());
        assert!(Angle::new(f64::INFINITY).is_err());
    }

    #[test]
    fn rotation_special_angles() {
        let id = rotation_x(Angle::new(0.0).unwrap());
        assert!(id.max_deviation(&Array2::eye(2)) < MATRIX_TOL);

        let h = 1.0 / 2f64.sqrt();
        let w = rotation_x(Angle::new(7.0 * PI / 4.0).unwrap());
        assert!(w.max_deviation(&arr2(&[[c(h, 0.0), c(0.0, h)], [c(0.0, h), c(h, 0.0)]])) < MATRIX_TOL);

        let r = rotation_x(Angle::new(1.5 * PI).unwrap());
        assert!(r.max_deviation(&arr2(&[[c(0., 0.), c(0., 1.)], [c(0., 1.), c(0., 0.)]])) < MATRIX_TOL);
        let r = rotation_x(Angle::new(0.5 * PI).unwrap());
        assert!(r.max_deviation(&arr2(&[[c(0., 0.), c(0., -1.)], [c(0., -1.), c(0., 0.)]])) < MATRIX_TOL);
    }

    #[test]
    fn w2_matches_printed_matrix() {
        let (o, i) = (c(1., 0.), c(0., 1.));
        let expect = scaled(0.5, &[&[o, i, i, -o], &[i, o, -o, i], &[i, -o, o, i], &[-o, i, i, o]]);
        assert!(build_w(2).unwrap().max_deviation(&expect) < MATRIX_TOL);
        assert!(build_w(1).unwrap().max_deviation(walsh().as_array()) < MATRIX_TOL);
        assert!(build_w(0).is_err());
        assert!(matches!(build_w(11), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn printed_two_qubit_m_and_p() {
        let (z, o, i) = (c(0., 0.), c(1., 0.), c(0., 1.));
        let m_expect = [
            arr2(&[[o, z, z, z], [z, o, z, z], [z, z, z, -i], [z, z, i, z]]),
            arr2(&[[o, z, z, z], [z, o, z, z], [z, z, z, i], [z, z, -i, z]]),
            arr2(&[[z, -i, z, z], [i, z, z, z], [z, z, o, z], [z, z, z, o]]),
            arr2(&[[z, i, z, z], [-i, z, z, z], [z, z, o, z], [z, z, z, o]]),
        ];
        let p_diag = [[1., 1., 1., -1.], [1., 1., -1., 1.], [1., -1., 1., 1.], [-1., 1., 1., 1.]];
        for (k, (m, d)) in m_expect.iter().zip(p_diag).enumerate() {
            let t = TargetIndex::from_ordinal(2, k + 1).unwrap();
            assert_eq!(build_m(t).unwrap().as_array(), m, "M_{}", k + 1);
            let p = Array2::from_diag(&ndarray::arr1(&d.map(|x| c(x, 0.))));
            assert_eq!(build_p(t).unwrap().as_array(), &p, "P_{}", k + 1);
            assert!(build_p_conjugated(t).unwrap().max_deviation(&p) < MATRIX_TOL);
        }
    }

    #[test]
    fn three_qubit_m1_is_bottom_right_block() {
        let m = build_m(TargetIndex::all_ones(3).unwrap()).unwrap();
        let mut expect = Array2::<C64>::eye(8);
        expect[[6, 6]] = ZERO;
        expect[[7, 7]] = ZERO;
        expect[[6, 7]] = -I;
        expect[[7, 6]] = I;
        assert_eq!(m.as_array(), &expect);
    }

    #[test]
    fn v2_on_last_pair() {
        let v = build_v(2).unwrap();
        let col = v.as_array().column(3).to_owned();
        let h = 1.0 / 2f64.sqrt();
        let expect = [c(0., 0.), c(0., 0.), c(0., h), c(h, 0.)];
        for (a, b) in col.iter().zip(expect) {
            assert!((a - b).norm() < MATRIX_TOL);
        }
        assert!(build_v(1).is_err());
    }

    #[test]
    fn diffusion_two_qubit_matches_printed() {
        let (o, i) = (c(1., 0.), c(0., 1.));
        let expect = scaled(0.5, &[&[-o, i, i, -o], &[i, o, -o, -i], &[i, -o, o, -i], &[-o, -i, -i, -o]]);
        let d = build_diffusion(2).unwrap();
        assert!(d.max_deviation(&expect) < MATRIX_TOL);
        assert!(is_unitary(d.as_array(), MATRIX_TOL).unwrap());
    }

    // The printed three-qubit matrix carries a 1/8 prefactor; its rows then
    // have norm 1/2, so the unitary W·P·W must equal the printed entry
    // pattern scaled by 1/4.
    #[test]
    fn diffusion_three_qubit_entry_pattern() {
        let (o, i) = (c(1., 0.), c(0., 1.));
        let printed: [[C64; 8]; 8] = [
            [o, -i, -i, -o, -i, -o, -o, -i * 3.],
            [-i, -o, -o, i, -o, i, -i * 3., o],
            [-i, -o, -o, i, -o, -i * 3., i, o],
            [-o, i, i, o, -i * 3., o, o, -i],
            [-i, -o, -o, -i * 3., -o, i, i, o],
            [-o, i, -i * 3., o, i, o, o, -i],
            [-o, -i * 3., i, o, i, o, o, -i],
            [-i * 3., o, o, -i, o, -i, -i, -o],
        ];
        let pattern = Array2::from_shape_fn((8, 8), |(r, k)| printed[r][k]);
        let d = build_diffusion(3).unwrap();
        assert!(d.max_deviation(&pattern.mapv(|z| z / 4.0)) < MATRIX_TOL);
        assert!(!is_unitary(&pattern.mapv(|z| z / 8.0), 1e-3).unwrap());
    }

    #[test]
    fn is_unitary_cases() {
        assert!(is_unitary(rotation_x(Angle::new(1.234).unwrap()).as_array(), MATRIX_TOL).unwrap());
        let mut m = rotation_x(Angle::new(1.234).unwrap()).into_array();
        m[[0, 1]] += C64::new(1e-6, 0.0);
        assert!(!is_unitary(&m, MATRIX_TOL).unwrap());
        assert!(is_unitary(build_diffusion(5).unwrap().as_array(), MATRIX_TOL).unwrap());
        assert!(is_unitary(&Array2::<C64>::zeros((2, 3)), MATRIX_TOL).is_err());
        assert!(UnitaryMatrix::new(m).is_err());
    }

    #[test]
    fn controlled_gate_block_is_a_pair_of_rotations() {
        // lower-right block of M^(2)_1: |0> -> i|1> and |1> -> -i|0>
        let m = build_m(TargetIndex::all_ones(2).unwrap()).unwrap();
        let u32 = rotation_x(Angle::new(1.5 * PI).unwrap());
        let u12 = rotation_x(Angle::new(0.5 * PI).unwrap());
        // column 2 of M is the image of |10>, i.e. target pair in |0>
        assert!((m.get(3, 2) - u32.get(1, 0)).norm() < MATRIX_TOL);
        assert!((m.get(2, 2) - u32.get(0, 0)).norm() < MATRIX_TOL);
        assert!((m.get(2, 3) - u12.get(0, 1)).norm() < MATRIX_TOL);
        assert!((m.get(3, 3) - u12.get(1, 1)).norm() < MATRIX_TOL);
        assert_eq!(m.get(3, 2), I);
        assert_eq!(m.get(2, 3), -I);
    }

    #[test]
    fn target_index_conversions() {
        let t = TargetIndex::from_ordinal(2, 3).unwrap();
        assert_eq!(t.basis(), 1);
        assert_eq!(t.bitstring(), "01");
        assert_eq!("01".parse::<TargetIndex>().unwrap(), t);
        assert_eq!(TargetIndex::from_ordinal(3, 8).unwrap().bitstring(), "000");
        assert!(TargetIndex::from_ordinal(2, 0).is_err());
        assert!(TargetIndex::from_ordinal(2, 5).is_err());
        assert!(TargetIndex::from_basis(2, 4).is_err());
        assert!("1".parse::<TargetIndex>().is_err());
        assert!("1a1".parse::<TargetIndex>().is_err());
        assert!("".parse::<TargetIndex>().is_err());
    }

    #[test]
    fn p_equals_conjugated_m_q4_basis5() {
        let t = TargetIndex::from_basis(4, 5).unwrap();
        let p = build_p(t).unwrap();
        assert!(build_p_conjugated(t).unwrap().max_deviation(p.as_array()) < MATRIX_TOL);
        for k in 0..16 {
            let want = if k == 5 { -1.0 } else { 1.0 };
            assert_eq!(p.get(k, k), c(want, 0.0));
        }
    }

    #[test]
    fn every_two_to_five_qubit_target_conjugates_to_p() {
        for q in 2..=5u32 {
            for b in 0..1usize << q {
                let t = TargetIndex::from_basis(q, b).unwrap();
                let dev = build_p_conjugated(t).unwrap().max_deviation(build_p(t).unwrap().as_array());
                assert!(dev < MATRIX_TOL, "q={q} b={b} dev={dev}");
            }
        }
    }

    proptest! {
        #[test]
        fn rotations_form_a_one_parameter_group(a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let lhs = rotation_x(Angle::new(a).unwrap()).compose(&rotation_x(Angle::new(b).unwrap())).unwrap();
            let rhs = rotation_x(Angle::new(a + b).unwrap());
            prop_assert!(lhs.max_deviation(rhs.as_array()) < MATRIX_TOL);
        }

        #[test]
        fn conjugated_m_is_p(q in 2u32..=8, seed in any::<u64>()) {
            let b = (seed % (1u64 << q)) as usize;
            let t = TargetIndex::from_basis(q, b).unwrap();
            let p = build_p(t).unwrap();
            prop_assert!(build_p_conjugated(t).unwrap().max_deviation(p.as_array()) < MATRIX_TOL);
        }

        #[test]
        fn constructed_matrices_are_unitary(q in 2u32..=8, seed in any::<u64>()) {
            let t = TargetIndex::from_basis(q, (seed % (1u64 << q)) as usize).unwrap();
            for m in [build_w(q), build_m(t), build_v(q), build_p(t), build_diffusion(q)] {
                prop_assert!(is_unitary(m.unwrap().as_array(), MATRIX_TOL).unwrap());
            }
        }

        #[test]
        fn bitstring_roundtrip(q in 2u32..=12, seed in any::<u64>()) {
            let t = TargetIndex::from_basis(q, (seed % (1u64 << q)) as usize).unwrap();
            prop_assert_eq!(t.bitstring().parse::<TargetIndex>().unwrap(), t);
            prop_assert_eq!(TargetIndex::from_ordinal(q, t.ordinal()).unwrap(), t);
        }
    }
}
