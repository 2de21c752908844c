//! Robust linear and semidefinite programs with ellipsoidal uncertainty.
//!
//! Each instance implements [`RobustProblem`](crate::problem::RobustProblem),
//! comes with a calculator for its [`Bounds`](crate::problem::Bounds), and
//! with a closed-form worst-case violation checker over the uncertainty ball.

pub mod lp;
pub mod sdp;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Smallest value used for a gradient constant that is zero, so that horizons stay defined.
pub const CONSTANT_FLOOR: f64 = 1e-12;

/// A dense row-major matrix with explicit dimensions, as stored in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_matrix(m: &nalgebra::DMatrix<f64>) -> Self {
        DenseMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }

    pub fn to_matrix(&self) -> Result<nalgebra::DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {}x{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

pub(crate) fn check_finite(name: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        param(format!("{name} contains a non-finite entry"))
    }
}

/// Keeps `G₂ ≤ G∞ ≤ G₁` after flooring zero constants.
pub(crate) fn floored(g2: f64, g_inf: f64, g1: f64) -> (f64, f64, f64) {
    let g2 = g2.max(CONSTANT_FLOOR);
    let g_inf = g_inf.max(g2);
    let g1 = g1.max(g_inf);
    (g2, g_inf, g1)
}
