//! The bridge between `D(V||WH)` and the probabilistic problem `D(P||Q- Q+)`.
//!
//! With `P = V / total`, `Q- = W / w` (`w` the sum of `W`) and `Q+ = H`, one has
//! `D(V||WH) = total * D(P||Q- Q+) + D(total||w)`, so the raw problem is solved
//! by solving the normalized one and rescaling `Q-` by `total`.

use crate::error::{Error, Result};
use crate::matrix::{NonnegMatrix, ProbMatrix};
use crate::pair::FactorPair;

/// A data matrix split into its total mass and a probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledProblem {
    p: ProbMatrix,
    total: f64,
}

impl ScaledProblem {
    #[inline]
    pub fn p(&self) -> &ProbMatrix {
        &self.p
    }

    /// Sum of all entries of the original matrix.
    #[inline]
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `total * P`, which reproduces the original matrix up to rounding.
    pub fn reconstruct(&self) -> NonnegMatrix {
        self.p
            .matrix()
            .scaled(self.total)
            .expect("total is finite and positive")
    }
}

/// Splits `v` into `total = sum(v)` and `P = v / total`.
pub fn normalize_problem(v: &NonnegMatrix) -> Result<ScaledProblem> {
    if !v.has_positive_entry() {
        return Err(Error::DegenerateInput);
    }
    let total = v.sum();
    if !total.is_finite() {
        return Err(Error::InvalidTotal(total));
    }
    let data = v.as_slice().iter().map(|x| x / total).collect();
    let p = ProbMatrix::new(NonnegMatrix::from_parts(v.rows(), v.cols(), data))?;
    Ok(ScaledProblem { p, total })
}

/// Maps a normalized pair back to raw factors: `W = total * Q-`, `H = Q+`.
pub fn denormalize_solution(pair: &FactorPair, total: f64) -> Result<(NonnegMatrix, NonnegMatrix)> {
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::InvalidTotal(total));
    }
    let w = pair.qminus().scaled(total)?;
    Ok((w, pair.qplus().clone()))
}

/// Inverse of [`denormalize_solution`] for arbitrary positive-mass `W`.
///
/// Returns the normalized pair and `w = sum(W)`; `H` must be row-stochastic.
pub fn normalize_factors(w: &NonnegMatrix, h: &NonnegMatrix) -> Result<(FactorPair, f64)> {
    let mass = w.sum();
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::InvalidTotal(mass));
    }
    let qminus = w.scaled(1.0 / mass)?;
    let pair = FactorPair::with_tolerance(qminus, h.clone(), crate::matrix::INGESTED_SUM_TOL)?;
    Ok((pair, mass))
}
