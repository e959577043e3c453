//! Channel-level quantities: noise whitening, capacity under a fixed transmit
//! covariance, and removal of transmit power the channel cannot see.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matdecomp::{self, DEFAULT_RANK_TOL};
use crate::matrix::ComplexMatrix;

/// Physical channel `H~` (N×M) together with the receiver noise covariance
/// `S_z` (N×N, Hermitian positive definite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoChannel {
    h_raw: ComplexMatrix,
    noise_cov: ComplexMatrix,
}

impl MimoChannel {
    pub fn new(h_raw: ComplexMatrix, noise_cov: ComplexMatrix) -> Result<Self> {
        if !noise_cov.is_square() || noise_cov.rows() != h_raw.rows() {
            return Err(Error::DimensionMismatch {
                op: "channel noise covariance",
                left: h_raw.shape(),
                right: noise_cov.shape(),
            });
        }
        if h_raw.is_zero() {
            return Err(Error::RankZero { what: "channel" });
        }
        // validates Hermitian PD
        matdecomp::inv_sqrt(&noise_cov)?;
        Ok(Self { h_raw, noise_cov })
    }

    /// Channel with spatially white unit-variance noise.
    pub fn white(h_raw: ComplexMatrix) -> Result<Self> {
        let n = h_raw.rows();
        Self::new(h_raw, ComplexMatrix::identity(n))
    }

    pub fn h_raw(&self) -> &ComplexMatrix {
        &self.h_raw
    }

    pub fn noise_cov(&self) -> &ComplexMatrix {
        &self.noise_cov
    }
}

/// Effective channel `H = S_z^{-1/2} H~`, using the Hermitian inverse square
/// root. The implied noise covariance after whitening is the identity.
pub fn whiten(ch: &MimoChannel) -> Result<ComplexMatrix> {
    let w = matdecomp::inv_sqrt(&ch.noise_cov)?;
    Ok(&w * &ch.h_raw)
}

/// Hermitian PSD transmit covariance with its cached square-root factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitCovariance {
    matrix: ComplexMatrix,
    /// M×D factor with `factor * factor^H = matrix`; `None` when D = 0.
    factor: Option<ComplexMatrix>,
    rank: usize,
}

impl TransmitCovariance {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        match matdecomp::psd_sqrt(&matrix) {
            Ok(f) => {
                let rank = f.cols();
                Ok(Self {
                    matrix: matrix.hermitian_part(),
                    factor: Some(f),
                    rank,
                })
            }
            Err(Error::RankZero { .. }) => Ok(Self::zero(matrix.rows())),
            Err(e) => Err(e),
        }
    }

    /// Covariance `V V^H` generated by a precoder.
    pub fn from_precoder(v: &ComplexMatrix) -> Result<Self> {
        Self::new(v.gram_outer())
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim, dim),
            factor: None,
            rank: 0,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn factor(&self) -> Option<&ComplexMatrix> {
        self.factor.as_ref()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Total transmit power.
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

fn check_compatible(h: &ComplexMatrix, s_x: &TransmitCovariance, op: &'static str) -> Result<()> {
    if h.cols() != s_x.dim() {
        return Err(Error::DimensionMismatch {
            op,
            left: h.shape(),
            right: s_x.matrix().shape(),
        });
    }
    Ok(())
}

/// `log2 det(I + H S_x H^H)` in bps/Hz, evaluated as `sum log2(1 + phi_d^2)`
/// over the singular values of `H S_x^{1/2}`.
pub fn capacity(h: &ComplexMatrix, s_x: &TransmitCovariance) -> Result<f64> {
    check_compatible(h, s_x, "capacity")?;
    let Some(f) = s_x.factor() else {
        return Ok(0.0);
    };
    let phi = h * f;
    Ok(matdecomp::singular_values(&phi)
        .into_iter()
        .map(|s| log2_1p(s * s))
        .sum())
}

#[inline]
pub(crate) fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Projects the covariance factor onto the row space of `Phi = H S_x^{1/2}`,
/// giving `S_x^{1/2} V_Phi V_Phi^H (S_x^{1/2})^H`. The result has the same
/// capacity as `S_x` and rank equal to `rank(H S_x^{1/2})`; when nothing needs
/// removing the input is returned unchanged.
pub fn rank_reduce(h: &ComplexMatrix, s_x: &TransmitCovariance) -> Result<TransmitCovariance> {
    check_compatible(h, s_x, "rank_reduce")?;
    let f = s_x.factor().ok_or(Error::RankZero {
        what: "H * S_x^{1/2}",
    })?;
    let phi = h * f;
    let svd = matdecomp::truncated_svd(&phi, DEFAULT_RANK_TOL).map_err(|e| match e {
        Error::RankZero { .. } => Error::RankZero {
            what: "H * S_x^{1/2}",
        },
        other => other,
    })?;
    if svd.rank() == f.cols() {
        return Ok(s_x.clone());
    }
    let g = f * &svd.right;
    TransmitCovariance::new(g.gram_outer())
}
