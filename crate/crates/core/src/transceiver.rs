//! Linear precoder/decoder designs and their evaluation.
//!
//! [`theorem1_design`] is the capacity-achieving diagonalizing design for an
//! arbitrary transmit covariance: with `Phi = H S_x^{1/2} = U_Phi L V_Phi^H`
//! it uses `V = S_x^{1/2} V_Phi` and `U = U_Phi`. The channel-SVD and
//! EVD + zero-forcing designs are kept as baselines, and [`mmse_sic_rate`]
//! gives the rate of the non-linear receiver for any precoder.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{self, log2_1p, TransmitCovariance};
use crate::error::{Error, Result};
use crate::matdecomp::{self, DEFAULT_RANK_TOL};
use crate::matrix::{inner, ComplexMatrix};
use crate::optim::waterfill;

/// Default absolute tolerance for the three design conditions.
pub const DEFAULT_CONDITION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTransceiver {
    /// M×D.
    pub precoder: ComplexMatrix,
    /// N×D, applied as `U^H`.
    pub decoder: ComplexMatrix,
    /// Diagonal of `U^H H V` (moduli) when the design diagonalizes.
    pub stream_gains: Vec<f64>,
}

impl LinearTransceiver {
    pub fn streams(&self) -> usize {
        self.precoder.cols()
    }

    /// `V V^H`.
    pub fn covariance(&self) -> ComplexMatrix {
        self.precoder.gram_outer()
    }

    /// `U^H H V`.
    pub fn effective_channel(&self, h: &ComplexMatrix) -> ComplexMatrix {
        &self.decoder.adjoint() * &(h * &self.precoder)
    }

    fn check(&self, h: &ComplexMatrix) -> Result<()> {
        if h.cols() != self.precoder.rows() {
            return Err(Error::DimensionMismatch {
                op: "precoder",
                left: h.shape(),
                right: self.precoder.shape(),
            });
        }
        if h.rows() != self.decoder.rows() || self.decoder.cols() != self.precoder.cols() {
            return Err(Error::DimensionMismatch {
                op: "decoder",
                left: h.shape(),
                right: self.decoder.shape(),
            });
        }
        Ok(())
    }
}

fn rank_zero_product(e: Error) -> Error {
    match e {
        Error::RankZero { .. } => Error::RankZero {
            what: "H * S_x^{1/2}",
        },
        other => other,
    }
}

/// Capacity-achieving design that diagonalizes `H` for the given covariance.
///
/// If `rank(S_x) > rank(H S_x^{1/2})` the covariance is first passed through
/// [`channel::rank_reduce`]; the returned precoder then reproduces the reduced
/// covariance, which has the same capacity. The stream count `D` of the
/// result is the rank of `H S_x^{1/2}`.
pub fn theorem1_design(h: &ComplexMatrix, s_x: &TransmitCovariance) -> Result<LinearTransceiver> {
    let s_eff = channel::rank_reduce(h, s_x)?;
    let f = s_eff.factor().ok_or(Error::RankZero {
        what: "H * S_x^{1/2}",
    })?;
    let phi = h * f;
    let svd = matdecomp::truncated_svd(&phi, DEFAULT_RANK_TOL).map_err(rank_zero_product)?;
    // rank_reduce guarantees the factor is square-compatible with V_Phi here
    debug_assert_eq!(svd.right.rows(), f.cols());
    Ok(LinearTransceiver {
        precoder: f * &svd.right,
        decoder: svd.left,
        stream_gains: svd.singular_values,
    })
}

/// Channel-SVD design `V = V_H P^{1/2}`, `U = U_H` with one power per
/// non-zero singular value of `H`.
pub fn svd_design(h: &ComplexMatrix, power_alloc: &[f64]) -> Result<LinearTransceiver> {
    let svd = matdecomp::truncated_svd(h, DEFAULT_RANK_TOL)?;
    if power_alloc.len() != svd.rank() {
        return Err(Error::InvalidArgument(format!(
            "power allocation has {} entries but rank(H) = {}",
            power_alloc.len(),
            svd.rank()
        )));
    }
    if power_alloc.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidArgument(
            "power allocation entries must be finite and nonnegative".into(),
        ));
    }
    let roots: Vec<f64> = power_alloc.iter().map(|p| p.sqrt()).collect();
    let stream_gains = svd
        .singular_values
        .iter()
        .zip(&roots)
        .map(|(s, r)| s * r)
        .collect();
    Ok(LinearTransceiver {
        precoder: svd.right.scale_columns(&roots),
        decoder: svd.left,
        stream_gains,
    })
}

/// Channel-SVD design with water-filled powers at the given total power.
pub fn svd_waterfill_design(h: &ComplexMatrix, total_power: f64) -> Result<LinearTransceiver> {
    let gains: Vec<f64> = matdecomp::truncated_svd(h, DEFAULT_RANK_TOL)?
        .singular_values
        .iter()
        .map(|s| s * s)
        .collect();
    let p = waterfill(&gains, total_power)?;
    svd_design(h, &p)
}

/// EVD precoder `V = S_x^{1/2}` with the zero-forcing decoder
/// `U^H = ((HV)^H HV)^{-1} (HV)^H`.
pub fn evd_zf_design(h: &ComplexMatrix, s_x: &TransmitCovariance) -> Result<LinearTransceiver> {
    if h.cols() != s_x.dim() {
        return Err(Error::DimensionMismatch {
            op: "evd_zf_design",
            left: h.shape(),
            right: s_x.matrix().shape(),
        });
    }
    let v = s_x.factor().ok_or(Error::RankZero {
        what: "S_x^{1/2}",
    })?;
    let hv = h * v;
    let singular = Error::Singular {
        what: "zero-forcing pseudo-inverse ((HV)^H HV)^{-1}: HV lacks full column rank",
    };
    if matdecomp::numeric_rank(&hv, DEFAULT_RANK_TOL) < v.cols() {
        return Err(singular);
    }
    let gram = hv.adjoint_mul(&hv).hermitian_part();
    let uh = matdecomp::solve_hpd(&gram, &hv.adjoint()).map_err(|_| singular)?;
    let decoder = uh.adjoint();
    let diag = &uh * &hv;
    let stream_gains = diag.diagonal().iter().map(|z| z.norm()).collect();
    Ok(LinearTransceiver {
        precoder: v.clone(),
        decoder,
        stream_gains,
    })
}

/// Per-stream SNR `|u_d^H H v_d|^2 / ||u_d||^2`.
pub fn stream_snrs(h: &ComplexMatrix, t: &LinearTransceiver) -> Result<Vec<f64>> {
    t.check(h)?;
    let hv = h * &t.precoder;
    (0..t.streams())
        .map(|d| {
            let u = t.decoder.column(d);
            let un = inner(&u, &u).re;
            if un == 0.0 {
                return Err(Error::InvalidArgument(format!("decoder column {d} is zero")));
            }
            Ok(inner(&u, &hv.column(d)).norm_sqr() / un)
        })
        .collect()
}

/// `sum_d log2(1 + gamma_d)` in bps/Hz.
pub fn achievable_rate(h: &ComplexMatrix, t: &LinearTransceiver) -> Result<f64> {
    Ok(stream_snrs(h, t)?.into_iter().map(log2_1p).sum())
}

/// Residuals of the capacity, diagonalization and covariance conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub rate_r: f64,
    pub capacity_c: f64,
    pub cap_gap: f64,
    pub diag_residual: f64,
    pub cov_residual: f64,
    pub per_stream_snr: Vec<f64>,
    pub tolerance: f64,
    pub capacity_ok: bool,
    pub diagonal_ok: bool,
    pub covariance_ok: bool,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.capacity_ok && self.diagonal_ok && self.covariance_ok
    }
}

/// Evaluates a transceiver against the covariance it is meant to realize.
pub fn check_conditions(
    h: &ComplexMatrix,
    s_x: &TransmitCovariance,
    t: &LinearTransceiver,
    tol: f64,
) -> Result<ConditionReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    t.check(h)?;
    let per_stream_snr = stream_snrs(h, t)?;
    let rate_r: f64 = per_stream_snr.iter().copied().map(log2_1p).sum();
    let capacity_c = channel::capacity(h, s_x)?;
    let cap_gap = (rate_r - capacity_c).abs();
    let diag_residual = t.effective_channel(h).max_off_diagonal();
    let cov_residual =
        (&t.covariance() - s_x.matrix()).frobenius_norm() / s_x.matrix().frobenius_norm().max(1.0);
    Ok(ConditionReport {
        rate_r,
        capacity_c,
        cap_gap,
        diag_residual,
        cov_residual,
        per_stream_snr,
        tolerance: tol,
        capacity_ok: cap_gap <= tol,
        diagonal_ok: diag_residual <= tol,
        covariance_ok: cov_residual <= tol,
    })
}

/// MMSE-SIC rate for precoder `V`, decoding streams in natural order.
pub fn mmse_sic_rate(h: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    let order: Vec<usize> = (0..v.cols()).collect();
    mmse_sic_rate_ordered(h, v, &order)
}

/// MMSE-SIC rate decoding streams in `order` (a permutation of `0..D`).
/// Stream `order[i]` sees the not-yet-decoded streams `order[i+1..]` as
/// interference.
pub fn mmse_sic_rate_ordered(h: &ComplexMatrix, v: &ComplexMatrix, order: &[usize]) -> Result<f64> {
    h.check_product(v, "mmse_sic_rate")?;
    let d = v.cols();
    let mut seen = vec![false; d];
    if order.len() != d || order.iter().any(|&i| i >= d || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::InvalidArgument(format!(
            "decoding order must be a permutation of 0..{d}"
        )));
    }
    let g = h * v;
    if g.is_zero() {
        return Err(Error::RankZero { what: "H * V" });
    }
    let n = g.rows();
    let cols: Vec<Vec<Complex64>> = (0..d).map(|j| g.column(j)).collect();
    let mut total = 0.0;
    for (pos, &s) in order.iter().enumerate() {
        let mut k = ComplexMatrix::identity(n);
        for &j in &order[pos + 1..] {
            let c = &cols[j];
            for a in 0..n {
                for b in 0..n {
                    k[(a, b)] += c[a] * c[b].conj();
                }
            }
        }
        let hs = ComplexMatrix::from_columns(n, std::slice::from_ref(&cols[s]));
        let x = matdecomp::solve_hpd(&k, &hs)?;
        let sinr = inner(&cols[s], &x.column(0)).re.max(0.0);
        total += log2_1p(sinr);
    }
    Ok(total)
}
