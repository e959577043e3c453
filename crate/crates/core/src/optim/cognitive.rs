use serde::{Deserialize, Serialize};

use crate::channel::{self, TransmitCovariance};
use crate::error::{Error, Result};
use crate::matdecomp::{self, DEFAULT_RANK_TOL};
use crate::matrix::ComplexMatrix;

/// Default KKT-residual tolerance for [`cr_capacity_opt`].
pub const DEFAULT_CR_TOL: f64 = 1e-7;

/// Secondary link `H` sharing spectrum with a primary receiver reached
/// through `G`, under a transmit power budget and an interference cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrScenario {
    pub h_secondary: ComplexMatrix,
    pub g_cross: ComplexMatrix,
    pub power_budget: f64,
    pub it_limit: f64,
}

impl CrScenario {
    pub fn new(
        h_secondary: ComplexMatrix,
        g_cross: ComplexMatrix,
        power_budget: f64,
        it_limit: f64,
    ) -> Result<Self> {
        if h_secondary.cols() != g_cross.cols() {
            return Err(Error::DimensionMismatch {
                op: "cognitive radio transmitter dimension",
                left: h_secondary.shape(),
                right: g_cross.shape(),
            });
        }
        let sc = Self {
            h_secondary,
            g_cross,
            power_budget,
            it_limit,
        };
        sc.check_limits()?;
        Ok(sc)
    }

    fn check_limits(&self) -> Result<()> {
        if !(self.power_budget > 0.0 && self.it_limit > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "infeasible limits: power budget {} and interference limit {} must both be positive",
                self.power_budget, self.it_limit
            )));
        }
        Ok(())
    }

    /// `tr(G S G^H)`.
    pub fn interference(&self, s: &ComplexMatrix) -> f64 {
        (&(&self.g_cross * s) * &self.g_cross.adjoint()).trace().re
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrSolution {
    pub covariance: TransmitCovariance,
    /// bps/Hz.
    pub capacity: f64,
    /// Multiplier of the power constraint (natural-log objective).
    pub power_multiplier: f64,
    /// Multiplier of the interference constraint (natural-log objective).
    pub it_multiplier: f64,
    pub power_used: f64,
    pub interference: f64,
    pub kkt_residual: f64,
}

/// Maximizer of `ln det(I + H S H^H) - tr(A S)` for `A = lambda I + nu G^H G`
/// (positive definite): water-filling at level one on the channel
/// `H A^{-1/2}`, mapped back through `A^{-1/2}`.
fn lagrangian_maximizer(h: &ComplexMatrix, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let m = a.rows();
    let a_is = matdecomp::inv_sqrt(a)?;
    let hp = h * &a_is;
    let svd = match matdecomp::truncated_svd(&hp, DEFAULT_RANK_TOL) {
        Ok(svd) => svd,
        Err(Error::RankZero { .. }) => return Ok(ComplexMatrix::zeros(m, m)),
        Err(e) => return Err(e),
    };
    let p: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|s| (1.0 - 1.0 / (s * s)).max(0.0).sqrt())
        .collect();
    let f = &a_is * &svd.right.scale_columns(&p);
    Ok(f.gram_outer())
}

struct Dual<'a> {
    sc: &'a CrScenario,
    ggh: ComplexMatrix,
    ggh_min_eig: f64,
}

impl Dual<'_> {
    fn covariance(&self, lambda: f64, nu: f64) -> Result<ComplexMatrix> {
        let m = self.ggh.rows();
        let a = &ComplexMatrix::identity(m).scale(lambda) + &self.ggh.scale(nu);
        lagrangian_maximizer(&self.sc.h_secondary, &a)
    }

    /// Best response to `nu`: the smallest `lambda >= 0` whose maximizer
    /// meets the power budget.
    fn inner(&self, nu: f64) -> Result<(f64, ComplexMatrix)> {
        let budget = self.sc.power_budget;
        if nu > 0.0 && nu * self.ggh_min_eig > 0.0 {
            let s = self.covariance(0.0, nu)?;
            if s.trace().re <= budget {
                return Ok((0.0, s));
            }
        }
        // above ||H||^2 every water-filling gain is below the level
        let h_energy = self.sc.h_secondary.frobenius_norm().powi(2).max(f64::MIN_POSITIVE);
        // A singular G^H G leaves the maximizer undefined at lambda = 0; a
        // multiplier this small only perturbs slackness by ~1e-10 relative.
        let floor = 1e-10 * h_energy.max(nu * self.ggh.frobenius_norm());
        if nu > 0.0 {
            let s = self.covariance(floor, nu)?;
            if s.trace().re <= budget {
                return Ok((floor, s));
            }
        }
        let mut hi = h_energy;
        let mut lo = floor;
        let mut s_hi = self.covariance(hi, nu)?;
        while s_hi.trace().re > budget {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NotConverged {
                    what: "power multiplier search",
                    iterations: 1024,
                });
            }
            s_hi = self.covariance(hi, nu)?;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let s = self.covariance(mid, nu)?;
            if s.trace().re > budget {
                lo = mid;
            } else {
                hi = mid;
                s_hi = s;
            }
        }
        Ok((hi, s_hi))
    }
}

/// Covariance maximizing `log2 det(I + H S H^H)` subject to `S >= 0`,
/// `tr(S) <= power_budget` and `tr(G S G^H) <= it_limit`.
///
/// Solved through the Lagrange dual: an outer bisection on the interference
/// multiplier, an inner bisection on the power multiplier, and a closed-form
/// water-filling maximizer for each multiplier pair. The returned solution
/// is feasible and its KKT residual is at most `tol`.
pub fn cr_capacity_opt(sc: &CrScenario, tol: f64) -> Result<CrSolution> {
    sc.check_limits()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let ggh = sc.g_cross.adjoint_mul(&sc.g_cross).hermitian_part();
    let ggh_values = matdecomp::herm_evd(&ggh)?.values;
    let ggh_max = ggh_values.first().copied().unwrap_or(0.0);
    // treat G^H G as singular unless comfortably positive definite
    let ggh_min_eig = match ggh_values.last() {
        Some(&v) if v > 1e-10 * ggh_max => v,
        _ => 0.0,
    };
    let dual = Dual {
        sc,
        ggh,
        ggh_min_eig,
    };

    let (mut lambda, mut s) = dual.inner(0.0)?;
    let mut nu = 0.0;
    if sc.interference(&s) > sc.it_limit {
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut best = dual.inner(hi)?;
        while sc.interference(&best.1) > sc.it_limit {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NotConverged {
                    what: "interference multiplier search",
                    iterations: 1024,
                });
            }
            best = dual.inner(hi)?;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let r = dual.inner(mid)?;
            if sc.interference(&r.1) > sc.it_limit {
                lo = mid;
            } else {
                hi = mid;
                best = r;
            }
        }
        nu = hi;
        (lambda, s) = best;
    }

    let covariance = TransmitCovariance::new(s)?;
    let kkt_residual = kkt_residual(sc, covariance.matrix(), lambda, nu)?;
    if kkt_residual > tol {
        return Err(Error::NotConverged {
            what: "cognitive-radio covariance optimization",
            iterations: 200,
        });
    }
    Ok(CrSolution {
        capacity: channel::capacity(&sc.h_secondary, &covariance)?,
        power_used: covariance.trace(),
        interference: sc.interference(covariance.matrix()),
        covariance,
        power_multiplier: lambda,
        it_multiplier: nu,
        kkt_residual,
    })
}

/// Largest violation among primal feasibility, dual feasibility,
/// complementary slackness and stationarity of the natural-log problem.
pub(crate) fn kkt_residual(sc: &CrScenario, s: &ComplexMatrix, lambda: f64, nu: f64) -> Result<f64> {
    let h = &sc.h_secondary;
    let m = s.rows();
    let n = h.rows();
    let inner = &(&(h * s) * &h.adjoint()) + &ComplexMatrix::identity(n);
    let grad = h.adjoint_mul(&matdecomp::solve_hpd(&inner.hermitian_part(), h)?);
    let ggh = sc.g_cross.adjoint_mul(&sc.g_cross);
    let z = &(&ComplexMatrix::identity(m).scale(lambda) + &ggh.scale(nu)) - &grad;
    let z = z.hermitian_part();

    let z_min = matdecomp::herm_evd(&z)?.values.last().copied().unwrap_or(0.0);
    let s_min = matdecomp::herm_evd(&s.hermitian_part())?
        .values
        .last()
        .copied()
        .unwrap_or(0.0);
    let power = s.trace().re;
    let it = sc.interference(s);
    let checks = [
        (power - sc.power_budget).max(0.0),
        (it - sc.it_limit).max(0.0),
        (-s_min).max(0.0),
        (-z_min).max(0.0),
        (&z * s).frobenius_norm(),
        lambda * (power - sc.power_budget).abs(),
        nu * (it - sc.it_limit).abs(),
    ];
    Ok(checks.into_iter().fold(0.0, f64::max))
}
