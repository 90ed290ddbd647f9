use crate::error::{Error, Result};
use crate::matrix::{NonnegMatrix, CONSTRUCTED_SUM_TOL};

/// Normalized decision variables `(Q-, Q+)`.
///
/// `Q-` is `m x k` with entries summing to one, `Q+` is `k x n` and
/// row-stochastic, and `1 <= k <= min(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    qminus: NonnegMatrix,
    qplus: NonnegMatrix,
}

impl FactorPair {
    /// Validates the pair at [`CONSTRUCTED_SUM_TOL`].
    pub fn new(qminus: NonnegMatrix, qplus: NonnegMatrix) -> Result<Self> {
        Self::with_tolerance(qminus, qplus, CONSTRUCTED_SUM_TOL)
    }

    pub fn with_tolerance(qminus: NonnegMatrix, qplus: NonnegMatrix, tol: f64) -> Result<Self> {
        let (m, k) = qminus.shape();
        let n = qplus.cols();
        if qplus.rows() != k {
            return Err(Error::ShapeMismatch {
                expected: (k, n),
                found: qplus.shape(),
            });
        }
        if k > m.min(n) {
            return Err(Error::InvalidInnerSize { k, rows: m, cols: n });
        }
        let sum = qminus.sum();
        if libm::fabs(sum - 1.0) > tol {
            return Err(Error::NotProbability { sum, tol });
        }
        for (row, sum) in qplus.row_sums().into_iter().enumerate() {
            if libm::fabs(sum - 1.0) > tol {
                return Err(Error::NotRowStochastic { row, sum, tol });
            }
        }
        Ok(Self { qminus, qplus })
    }

    /// For pairs produced by the update formulas, which satisfy the
    /// constraints by construction.
    pub(crate) fn from_parts(qminus: NonnegMatrix, qplus: NonnegMatrix) -> Self {
        debug_assert_eq!(qminus.cols(), qplus.rows());
        debug_assert!(libm::fabs(qminus.sum() - 1.0) < 1e-9);
        Self { qminus, qplus }
    }

    #[inline]
    pub fn qminus(&self) -> &NonnegMatrix {
        &self.qminus
    }

    #[inline]
    pub fn qplus(&self) -> &NonnegMatrix {
        &self.qplus
    }

    pub fn into_parts(self) -> (NonnegMatrix, NonnegMatrix) {
        (self.qminus, self.qplus)
    }

    /// `k`, the shared dimension.
    #[inline]
    pub fn inner_size(&self) -> usize {
        self.qminus.cols()
    }

    /// `(m, n)` of the approximated matrix.
    #[inline]
    pub fn outer_shape(&self) -> (usize, usize) {
        (self.qminus.rows(), self.qplus.cols())
    }

    /// The collapsed model `Q- Q+`.
    pub fn product(&self) -> NonnegMatrix {
        self.qminus
            .matmul(&self.qplus)
            .expect("pair shapes are consistent")
    }

    /// True when every entry of both factors is positive.
    pub fn is_interior(&self) -> bool {
        self.qminus.as_slice().iter().all(|&v| v > 0.0)
            && self.qplus.as_slice().iter().all(|&v| v > 0.0)
    }

    /// Largest entrywise difference over both factors.
    pub fn max_abs_diff(&self, other: &FactorPair) -> Result<f64> {
        Ok(self
            .qminus
            .max_abs_diff(&other.qminus)?
            .max(self.qplus.max_abs_diff(&other.qplus)?))
    }

    /// Column sums of `Q-`, the mass carried by each inner index.
    pub fn column_masses(&self) -> alloc::vec::Vec<f64> {
        self.qminus.col_sums()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_constraints() {
        let qm = NonnegMatrix::from_rows(&[[0.5], [0.5]]).unwrap();
        let qp = NonnegMatrix::from_rows(&[[0.4, 0.6]]).unwrap();
        let pair = FactorPair::new(qm.clone(), qp.clone()).unwrap();
        assert_eq!(pair.inner_size(), 1);
        assert_eq!(pair.outer_shape(), (2, 2));
        assert!(pair.is_interior());

        let bad_qm = NonnegMatrix::from_rows(&[[0.5], [0.6]]).unwrap();
        assert!(matches!(
            FactorPair::new(bad_qm, qp.clone()),
            Err(Error::NotProbability { .. })
        ));
        let bad_qp = NonnegMatrix::from_rows(&[[0.4, 0.5]]).unwrap();
        assert!(matches!(
            FactorPair::new(qm, bad_qp),
            Err(Error::NotRowStochastic { row: 0, .. })
        ));
    }

    #[test]
    fn rejects_inner_size_above_min_dimension() {
        let qm = NonnegMatrix::from_rows(&[[0.25, 0.25], [0.25, 0.25]]).unwrap();
        let qp = NonnegMatrix::from_rows(&[[1.0], [1.0]]).unwrap();
        assert!(matches!(
            FactorPair::new(qm, qp),
            Err(Error::InvalidInnerSize { k: 2, .. })
        ));
    }
}
