//! Lifted `m x k x n` tensors and the two closed-form partial minimizers.
//!
//! A tensor `T(i, l, j)` is read as the joint law of a triple `(Y-, X, Y+)`.
//! The marginal set holds tensors whose `(i, j)` marginal equals a target `P`;
//! the product set holds tensors `Q-(i, l) Q+(l, j)` with `Q+` row-stochastic
//! and `Q-` summing to one. Alternating the two I-projections is the solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::divergence::{idiv_slices, ExtendedReal};
use crate::error::{Error, Result};
use crate::matrix::{NonnegMatrix, ProbMatrix, INGESTED_SUM_TOL};
use crate::pair::FactorPair;

/// Default tolerance for the membership validators.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Dense nonnegative `m x k x n` array, stored with `j` fastest, then `l`, then `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedTensor {
    m: usize,
    k: usize,
    n: usize,
    data: Vec<f64>,
}

impl LiftedTensor {
    pub fn new(m: usize, k: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || k == 0 || n == 0 {
            return Err(Error::EmptyMatrix { rows: m, cols: n });
        }
        if data.len() != m * k * n {
            return Err(Error::LengthMismatch {
                expected: m * k * n,
                found: data.len(),
            });
        }
        for (idx, &value) in data.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidEntry {
                    row: idx / (k * n),
                    col: idx % n,
                    value,
                });
            }
        }
        Ok(Self { m, k, n, data })
    }

    pub(crate) fn from_parts(m: usize, k: usize, n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), m * k * n);
        Self { m, k, n, data }
    }

    /// `(m, k, n)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m, self.k, self.n)
    }

    #[inline]
    pub fn get(&self, i: usize, l: usize, j: usize) -> f64 {
        self.data[self.offset(i, l, j)]
    }

    #[inline]
    fn offset(&self, i: usize, l: usize, j: usize) -> usize {
        (i * self.k + l) * self.n + j
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Sums over `(i, j)` for each `l`.
    pub fn slice_masses(&self) -> Vec<f64> {
        let mut masses = vec![0.0; self.k];
        for i in 0..self.m {
            for (l, mass) in masses.iter_mut().enumerate() {
                let start = self.offset(i, l, 0);
                *mass += self.data[start..start + self.n].iter().sum::<f64>();
            }
        }
        masses
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        libm::fabs(self.sum() - 1.0) <= tol
    }

    pub(crate) fn ensure_probability(&self, tol: f64) -> Result<()> {
        let sum = self.sum();
        if libm::fabs(sum - 1.0) > tol {
            return Err(Error::NotProbability { sum, tol });
        }
        Ok(())
    }

    pub(crate) fn ensure_same_shape(&self, other: &LiftedTensor) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::TensorShapeMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &LiftedTensor) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max))
    }
}

/// `T(i, l, j) = a(i, l) b(l, j)` for arbitrary nonnegative factors.
pub fn product_tensor(a: &NonnegMatrix, b: &NonnegMatrix) -> Result<LiftedTensor> {
    let (m, k) = a.shape();
    if b.rows() != k {
        return Err(Error::ShapeMismatch {
            expected: (k, b.cols()),
            found: b.shape(),
        });
    }
    let n = b.cols();
    let mut data = Vec::with_capacity(m * k * n);
    for i in 0..m {
        for l in 0..k {
            let weight = a.get(i, l);
            data.extend(b.row(l).iter().map(|v| weight * v));
        }
    }
    Ok(LiftedTensor::from_parts(m, k, n, data))
}

/// The product tensor `Q-(i, l) Q+(l, j)` of a factor pair.
pub fn tensor_from_pair(pair: &FactorPair) -> LiftedTensor {
    product_tensor(pair.qminus(), pair.qplus()).expect("pair shapes are consistent")
}

/// Sums out the inner index: `collapse(T)(i, j) = sum_l T(i, l, j)`.
pub fn collapse(t: &LiftedTensor) -> NonnegMatrix {
    let (m, k, n) = t.shape();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for l in 0..k {
            let start = t.offset(i, l, 0);
            for (o, v) in row.iter_mut().zip(&t.data[start..start + n]) {
                *o += v;
            }
        }
    }
    NonnegMatrix::from_parts(m, n, out)
}

fn ensure_outer_shape(p: &ProbMatrix, t: &LiftedTensor) -> Result<()> {
    let (m, _, n) = t.shape();
    if (p.rows(), p.cols()) != (m, n) {
        return Err(Error::ShapeMismatch {
            expected: (m, n),
            found: (p.rows(), p.cols()),
        });
    }
    Ok(())
}

/// I-projection of `q` onto the tensors with `(i, j)` marginal `p`:
/// `P*(i, l, j) = Q(i, l, j) P(i, j) / Q(i, j)`.
///
/// Fibers with `Q(i, j) = 0` are set to zero so that `P* << Q`.
pub fn best_p_tensor(p: &ProbMatrix, q: &LiftedTensor) -> Result<LiftedTensor> {
    ensure_outer_shape(p, q)?;
    let (m, k, n) = q.shape();
    let qc = collapse(q);
    let mut data = vec![0.0; m * k * n];
    for i in 0..m {
        for j in 0..n {
            let denom = qc.get(i, j);
            if denom == 0.0 {
                continue;
            }
            let ratio = p.get(i, j) / denom;
            for l in 0..k {
                let idx = q.offset(i, l, j);
                data[idx] = q.data[idx] * ratio;
            }
        }
    }
    Ok(LiftedTensor::from_parts(m, k, n, data))
}

/// I-projection of a probability tensor onto the product set:
/// `Q-(i, l) = sum_j T(i, l, j)` and `Q+(l, j) = sum_i T(i, l, j) / sum_ij T(i, l, j)`.
///
/// Inner indices carrying no mass get the uniform row `1/n`.
pub fn best_q_pair(t: &LiftedTensor) -> Result<FactorPair> {
    t.ensure_probability(INGESTED_SUM_TOL)?;
    let (m, k, n) = t.shape();
    let mut qminus = vec![0.0; m * k];
    let mut qplus = vec![0.0; k * n];
    for i in 0..m {
        for l in 0..k {
            let start = t.offset(i, l, 0);
            let fiber = &t.data[start..start + n];
            qminus[i * k + l] = fiber.iter().sum();
            for (acc, v) in qplus[l * n..(l + 1) * n].iter_mut().zip(fiber) {
                *acc += v;
            }
        }
    }
    for row in qplus.chunks_exact_mut(n) {
        normalize_row(row);
    }
    Ok(FactorPair::from_parts(
        NonnegMatrix::from_parts(m, k, qminus),
        NonnegMatrix::from_parts(k, n, qplus),
    ))
}

/// Scales a row to sum to one; a zero row becomes uniform.
pub(crate) fn normalize_row(row: &mut [f64]) {
    let mass: f64 = row.iter().sum();
    if mass > 0.0 {
        row.iter_mut().for_each(|v| *v /= mass);
    } else {
        let uniform = 1.0 / row.len() as f64;
        row.iter_mut().for_each(|v| *v = uniform);
    }
}

/// Outcome of a membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub member: bool,
    /// Largest absolute deviation from the defining constraint.
    pub deviation: f64,
}

/// Tests `sum_l T(i, l, j) = P(i, j)` within `tol` in max norm.
pub fn is_member_p(t: &LiftedTensor, p: &ProbMatrix, tol: f64) -> Result<Membership> {
    ensure_outer_shape(p, t)?;
    let deviation = collapse(t).max_abs_diff(p.matrix())?;
    Ok(Membership {
        member: deviation <= tol,
        deviation,
    })
}

/// Tests whether `t` factors as `Q-(i, l) Q+(l, j)` for the pair extracted by
/// [`best_q_pair`], within `tol` entrywise.
pub fn is_member_q(t: &LiftedTensor, tol: f64) -> Result<Membership> {
    let pair = best_q_pair(t)?;
    let deviation = t.max_abs_diff(&tensor_from_pair(&pair))?;
    Ok(Membership {
        member: deviation <= tol,
        deviation,
    })
}

/// Terms of a Pythagorean identity `lhs = first + second`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PythagoreanCheck {
    pub lhs: ExtendedReal,
    pub first: ExtendedReal,
    pub second: ExtendedReal,
    /// `|lhs - first - second|`; `+inf` when exactly one side is infinite.
    pub residual: f64,
}

impl PythagoreanCheck {
    fn from_terms(lhs: f64, first: f64, second: f64) -> Self {
        let rhs = first + second;
        let residual = match (lhs.is_finite(), rhs.is_finite()) {
            (true, true) => libm::fabs(lhs - rhs),
            (false, false) => 0.0,
            _ => f64::INFINITY,
        };
        Self {
            lhs: ExtendedReal::new(lhs).unwrap_or(ExtendedReal::ZERO),
            first: ExtendedReal::new(first).unwrap_or(ExtendedReal::ZERO),
            second: ExtendedReal::new(second).unwrap_or(ExtendedReal::ZERO),
            residual,
        }
    }

    /// True when one side is infinite and the other is not, which signals a
    /// support inconsistency between the arguments.
    pub fn is_violation(&self) -> bool {
        self.residual.is_infinite()
    }

    /// `residual <= rel_tol * max(1, lhs)` for finite terms.
    pub fn holds(&self, rel_tol: f64) -> bool {
        let scale = self.lhs.finite().unwrap_or(1.0).max(1.0);
        self.residual <= rel_tol * scale
    }
}

fn ensure_product(q: &LiftedTensor) -> Result<()> {
    let membership = is_member_q(q, DEFAULT_MEMBERSHIP_TOL)?;
    if !membership.member {
        return Err(Error::NotProductTensor {
            residual: membership.deviation,
        });
    }
    Ok(())
}

/// Evaluates `D(T||Q) = D(T||P*(Q)) + D(P||collapse Q)` for `T` in the
/// marginal set of `p`. The second term uses `D(P*(Q)||Q) = D(P||collapse Q)`.
pub fn check_pythagorean_p(
    p: &ProbMatrix,
    tp: &LiftedTensor,
    q: &LiftedTensor,
) -> Result<PythagoreanCheck> {
    tp.ensure_same_shape(q)?;
    let membership = is_member_p(tp, p, DEFAULT_MEMBERSHIP_TOL)?;
    if !membership.member {
        return Err(Error::NotInMarginalSet {
            deviation: membership.deviation,
        });
    }
    ensure_product(q)?;
    let pstar = best_p_tensor(p, q)?;
    let lhs = idiv_slices(tp.as_slice(), q.as_slice());
    let first = idiv_slices(tp.as_slice(), pstar.as_slice());
    let second = idiv_slices(p.matrix().as_slice(), collapse(q).as_slice());
    Ok(PythagoreanCheck::from_terms(lhs, first, second))
}

/// Evaluates `D(T||Q) = D(T||Q*(T)) + D(Q*(T)||Q)` for a product tensor `q`.
pub fn check_pythagorean_q(tp: &LiftedTensor, q: &LiftedTensor) -> Result<PythagoreanCheck> {
    tp.ensure_same_shape(q)?;
    ensure_product(q)?;
    let qstar = tensor_from_pair(&best_q_pair(tp)?);
    let lhs = idiv_slices(tp.as_slice(), q.as_slice());
    let first = idiv_slices(tp.as_slice(), qstar.as_slice());
    let second = idiv_slices(qstar.as_slice(), q.as_slice());
    Ok(PythagoreanCheck::from_terms(lhs, first, second))
}
