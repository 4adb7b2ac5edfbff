use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense matrix whose entries are all nonnegative.
///
/// Signed matrices (duals, certificates, heat couplings with `b < 0`) use
/// plain [`DMatrix`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositiveMatrix(DMatrix<f64>);

impl PositiveMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let value = m[(r, c)];
                if !(value >= 0.0) {
                    return Err(Error::NegativeEntry { row: r, col: c, value });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        Self::new(&self.0 * factor)
    }
}

impl std::ops::Index<(usize, usize)> for PositiveMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}
