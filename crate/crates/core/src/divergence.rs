//! I-divergence and Hellinger distance.
//!
//! The I-divergence of nonnegative reals is `D(p||q) = p log(p/q) - p + q` with
//! the conventions `0 log 0 = 0`, `0/0 = 0` and `p/0 = +inf` for `p > 0`. For
//! matrices and tensors it is the entrywise sum, accumulated in row-major order
//! so that repeated evaluations are bitwise identical.

use core::fmt;
use core::ops::Add;

use crate::error::{Error, Result};
use crate::lifted::LiftedTensor;
use crate::matrix::NonnegMatrix;

/// A nonnegative real number or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtendedReal(f64);

impl ExtendedReal {
    pub const ZERO: Self = Self(0.0);
    pub const INFINITY: Self = Self(f64::INFINITY);

    /// Returns `None` for negative or NaN input.
    pub fn new(value: f64) -> Option<Self> {
        (value >= 0.0).then_some(Self(value))
    }

    /// The value as an `f64`, `f64::INFINITY` for `+inf`.
    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn finite(self) -> Option<f64> {
        self.0.is_finite().then_some(self.0)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        !self.0.is_finite()
    }
}

impl Add for ExtendedReal {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

/// Scalar I-divergence without input validation.
///
/// Written as `p * (r - 1 - ln r)` with `r = q/p`. Near `r = 1` the bracket
/// goes through `ln_1p`, which keeps it nonnegative under rounding.
#[inline]
pub(crate) fn idiv(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        q
    } else if q == 0.0 {
        f64::INFINITY
    } else if p == q {
        0.0
    } else {
        let r = q / p;
        let gap = if (0.5..=2.0).contains(&r) {
            let x = r - 1.0;
            x - libm::log1p(x)
        } else {
            r - 1.0 - libm::log(r)
        };
        p * gap.max(0.0)
    }
}

/// `p log(p/q)` with the same conventions, the Kullback-Leibler summand.
#[inline]
pub(crate) fn kl_term(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p * libm::log(p / q)
    }
}

fn check_scalar(v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { value: v })
    }
}

/// I-divergence of two nonnegative reals.
pub fn i_div_scalar(p: f64, q: f64) -> Result<ExtendedReal> {
    check_scalar(p)?;
    check_scalar(q)?;
    Ok(ExtendedReal(idiv(p, q)))
}

pub(crate) fn idiv_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut total = 0.0;
    for (&p, &q) in a.iter().zip(b) {
        total += idiv(p, q);
    }
    total
}

/// Entrywise I-divergence `D(m||n)` of two matrices of equal shape.
pub fn i_div_matrix(m: &NonnegMatrix, n: &NonnegMatrix) -> Result<ExtendedReal> {
    m.ensure_same_shape(n)?;
    Ok(ExtendedReal(idiv_slices(m.as_slice(), n.as_slice())))
}

/// Entrywise I-divergence `D(a||b)` of two lifted tensors of equal shape.
pub fn i_div_tensor(a: &LiftedTensor, b: &LiftedTensor) -> Result<ExtendedReal> {
    a.ensure_same_shape(b)?;
    Ok(ExtendedReal(idiv_slices(a.as_slice(), b.as_slice())))
}

/// Squared Hellinger-type distance `sum (sqrt a - sqrt b)^2` of two probability tensors.
///
/// Bounded above by `D(a||b)`.
pub fn hellinger_tensor(a: &LiftedTensor, b: &LiftedTensor) -> Result<f64> {
    a.ensure_same_shape(b)?;
    a.ensure_probability(crate::matrix::INGESTED_SUM_TOL)?;
    b.ensure_probability(crate::matrix::INGESTED_SUM_TOL)?;
    let mut total = 0.0;
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        let d = libm::sqrt(x) - libm::sqrt(y);
        total += d * d;
    }
    Ok(total)
}
