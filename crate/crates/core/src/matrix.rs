//! Dense nonnegative matrices and probability matrices.

use alloc::vec::Vec;
use core::ops::Index;

use crate::error::{Error, Result};

/// Sum tolerance for probability objects built by this crate.
pub const CONSTRUCTED_SUM_TOL: f64 = 1e-12;

/// Sum tolerance for probability objects read from user data.
pub const INGESTED_SUM_TOL: f64 = 1e-9;

/// Dense row-major matrix whose entries are finite and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NonnegMatrix {
    /// Builds a matrix from row-major entries, validating every entry.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        for (idx, &value) in data.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidEntry {
                    row: idx / cols,
                    col: idx % cols,
                    value,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::LengthMismatch {
                    expected: ncols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(nrows, ncols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, alloc::vec![0.0; rows * cols])
    }

    /// Callers guarantee the entries are valid.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Row-major entries.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Sum of all entries, accumulated in row-major order.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = alloc::vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    pub fn has_positive_entry(&self) -> bool {
        self.data.iter().any(|&v| v > 0.0)
    }

    /// Multiplies every entry by a finite nonnegative factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::Domain { value: factor });
        }
        Ok(Self::from_parts(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        ))
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &NonnegMatrix) -> Result<NonnegMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                expected: (self.cols, rhs.cols),
                found: rhs.shape(),
            });
        }
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let mut out = alloc::vec![0.0; m * n];
        for i in 0..m {
            let out_row = &mut out[i * n..(i + 1) * n];
            for l in 0..k {
                let a = self.data[i * k + l];
                for (o, b) in out_row.iter_mut().zip(rhs.row(l)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_parts(m, n, out))
    }

    /// Largest absolute entrywise difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &NonnegMatrix) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max))
    }

    pub(crate) fn ensure_same_shape(&self, other: &NonnegMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for NonnegMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (row, col): (usize, usize)) -> &f64 {
        &self.data[row * self.cols + col]
    }
}

/// A nonnegative matrix whose entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    inner: NonnegMatrix,
}

impl ProbMatrix {
    /// Wraps a matrix built by this crate; the sum must be 1 within [`CONSTRUCTED_SUM_TOL`].
    pub fn new(inner: NonnegMatrix) -> Result<Self> {
        Self::with_tolerance(inner, CONSTRUCTED_SUM_TOL)
    }

    /// Wraps a matrix whose sum is 1 within `tol`.
    pub fn with_tolerance(inner: NonnegMatrix, tol: f64) -> Result<Self> {
        let sum = inner.sum();
        if libm::fabs(sum - 1.0) > tol {
            return Err(Error::NotProbability { sum, tol });
        }
        Ok(Self { inner })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::with_tolerance(NonnegMatrix::from_rows(rows)?, INGESTED_SUM_TOL)
    }

    #[inline]
    pub fn matrix(&self) -> &NonnegMatrix {
        &self.inner
    }

    pub fn into_inner(self) -> NonnegMatrix {
        self.inner
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.inner.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.inner.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.inner.get(row, col)
    }
}

impl AsRef<NonnegMatrix> for ProbMatrix {
    fn as_ref(&self) -> &NonnegMatrix {
        &self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nan_entries() {
        assert_eq!(
            NonnegMatrix::from_rows(&[[1.0, -2.0]]),
            Err(Error::InvalidEntry {
                row: 0,
                col: 1,
                value: -2.0
            })
        );
        assert!(matches!(
            NonnegMatrix::from_rows(&[[f64::NAN]]),
            Err(Error::InvalidEntry { row: 0, col: 0, .. })
        ));
        assert!(matches!(
            NonnegMatrix::from_rows(&[[1.0], [f64::INFINITY]]),
            Err(Error::InvalidEntry { row: 1, col: 0, .. })
        ));
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(matches!(
            NonnegMatrix::new(0, 3, alloc::vec![]),
            Err(Error::EmptyMatrix { .. })
        ));
        let ragged: [&[f64]; 2] = [&[1.0, 2.0], &[3.0]];
        assert!(matches!(
            NonnegMatrix::from_rows(&ragged),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn matmul_and_sums() {
        let a = NonnegMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = NonnegMatrix::from_rows(&[[0.5, 0.5, 0.0], [0.0, 1.0, 2.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), (2, 3));
        assert_eq!(c.as_slice(), &[0.5, 2.5, 4.0, 1.5, 5.5, 8.0]);
        assert_eq!(a.row_sums(), alloc::vec![3.0, 7.0]);
        assert_eq!(a.col_sums(), alloc::vec![4.0, 6.0]);
        assert!(b.matmul(&b).is_err());
    }

    #[test]
    fn probability_tolerances() {
        let m = NonnegMatrix::from_rows(&[[0.5, 0.5 + 1e-10]]).unwrap();
        assert!(ProbMatrix::new(m.clone()).is_err());
        assert!(ProbMatrix::with_tolerance(m, INGESTED_SUM_TOL).is_ok());
    }
}
