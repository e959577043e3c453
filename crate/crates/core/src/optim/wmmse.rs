use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SolverTrace;
use crate::channel::{self, TransmitCovariance};
use crate::ensemble::random_complex;
use crate::error::{Error, Result};
use crate::matdecomp;
use crate::matrix::ComplexMatrix;

/// Two-user MIMO interference channel. `h[j][k]` is the channel from
/// transmitter `k` to receiver `j`; users are indexed 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcScenario {
    pub h: [[ComplexMatrix; 2]; 2],
    pub power_budget: [f64; 2],
    pub noise_cov: [ComplexMatrix; 2],
}

impl IcScenario {
    /// Validates block dimensions, budgets and noise covariances.
    pub fn new(
        h: [[ComplexMatrix; 2]; 2],
        power_budget: [f64; 2],
        noise_cov: [ComplexMatrix; 2],
    ) -> Result<Self> {
        for j in 0..2 {
            if h[j][0].rows() != h[j][1].rows() {
                return Err(Error::DimensionMismatch {
                    op: "interference channel receiver dimension",
                    left: h[j][0].shape(),
                    right: h[j][1].shape(),
                });
            }
            if h[0][j].cols() != h[1][j].cols() {
                return Err(Error::DimensionMismatch {
                    op: "interference channel transmitter dimension",
                    left: h[0][j].shape(),
                    right: h[1][j].shape(),
                });
            }
            if noise_cov[j].shape() != (h[j][0].rows(), h[j][0].rows()) {
                return Err(Error::DimensionMismatch {
                    op: "interference channel noise covariance",
                    left: h[j][0].shape(),
                    right: noise_cov[j].shape(),
                });
            }
            matdecomp::cholesky(&noise_cov[j])?;
            if !(power_budget[j].is_finite() && power_budget[j] > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "power budget of user {j} must be positive, got {}",
                    power_budget[j]
                )));
            }
        }
        Ok(Self {
            h,
            power_budget,
            noise_cov,
        })
    }

    /// Unit noise at both receivers and a common power budget.
    pub fn with_white_noise(h: [[ComplexMatrix; 2]; 2], power_budget: f64) -> Result<Self> {
        let noise = [
            ComplexMatrix::identity(h[0][0].rows()),
            ComplexMatrix::identity(h[1][1].rows()),
        ];
        Self::new(h, [power_budget; 2], noise)
    }

    pub fn tx_antennas(&self, k: usize) -> usize {
        self.h[k][k].cols()
    }

    pub fn rx_antennas(&self, k: usize) -> usize {
        self.h[k][k].rows()
    }
}

fn check_user(k: usize) -> Result<usize> {
    match k {
        0 => Ok(1),
        1 => Ok(0),
        _ => Err(Error::InvalidArgument(format!("user index must be 0 or 1, got {k}"))),
    }
}

/// Interference-plus-noise covariance `H_{k,j} V_j V_j^H H_{k,j}^H + S_k`.
fn interference_cov(sc: &IcScenario, k: usize, v_other: &ComplexMatrix) -> Result<ComplexMatrix> {
    let j = check_user(k)?;
    let cross = &sc.h[k][j];
    cross.check_product(v_other, "interfering precoder")?;
    let x = cross * v_other;
    Ok(&x.gram_outer() + &sc.noise_cov[k])
}

/// Whitened direct channel `S_{z_k}^{-1/2} H_{k,k}` seen by user `k` when the
/// other user transmits with precoder `v_other`.
pub fn ic_effective_channel(
    sc: &IcScenario,
    k: usize,
    v_other: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let sz = interference_cov(sc, k, v_other)?;
    Ok(&matdecomp::inv_sqrt(&sz)? * &sc.h[k][k])
}

/// Capacity of user `k` with its own precoder `v_own`, treating the other
/// user's signal through `v_other` as Gaussian noise.
pub fn ic_user_capacity(
    sc: &IcScenario,
    k: usize,
    v_own: &ComplexMatrix,
    v_other: &ComplexMatrix,
) -> Result<f64> {
    let h_eff = ic_effective_channel(sc, k, v_other)?;
    h_eff.check_product(v_own, "own precoder")?;
    channel::capacity(&h_eff, &TransmitCovariance::from_precoder(v_own)?)
}

fn sum_rate(sc: &IcScenario, v: &[ComplexMatrix; 2]) -> Result<f64> {
    Ok(ic_user_capacity(sc, 0, &v[0], &v[1])? + ic_user_capacity(sc, 1, &v[1], &v[0])?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WmmseOptions {
    pub max_iters: usize,
    /// Stop once the sum-rate changes by less than this (bps/Hz).
    pub conv_tol: f64,
    /// `None` starts from scaled identities; `Some(seed)` from seeded
    /// Gaussian precoders scaled to the power budget.
    pub seed: Option<u64>,
}

impl Default for WmmseOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            conv_tol: 1e-8,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WmmseOutput {
    pub precoders: [ComplexMatrix; 2],
    pub sum_rate: f64,
    pub trace: SolverTrace,
}

fn initial_precoders(sc: &IcScenario, seed: Option<u64>) -> [ComplexMatrix; 2] {
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    std::array::from_fn(|k| {
        let m = sc.tx_antennas(k);
        let v = match rng.as_mut() {
            Some(rng) => random_complex(rng, m, m),
            None => ComplexMatrix::identity(m),
        };
        v.scale((sc.power_budget[k] / v.frobenius_norm().powi(2)).sqrt())
    })
}

/// Solves `min_V tr(V^H A V) - 2 Re tr(B^H V)` subject to `||V||_F^2 <= P`,
/// i.e. `V = (A + mu I)^{-1} B` with the smallest feasible `mu >= 0`.
fn power_constrained_update(a: &ComplexMatrix, b: &ComplexMatrix, budget: f64) -> Result<ComplexMatrix> {
    let evd = matdecomp::herm_evd(&a.hermitian_part())?;
    let q = &evd.vectors;
    let c = q.adjoint_mul(b);
    let lam_max = evd.values[0].max(0.0);
    let lam: Vec<f64> = evd
        .values
        .iter()
        .map(|&x| if x > 1e-14 * lam_max { x } else { 0.0 })
        .collect();
    let row_energy: Vec<f64> = (0..c.rows())
        .map(|i| c.row(i).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let power = |mu: f64| -> f64 {
        lam.iter()
            .zip(&row_energy)
            .map(|(&l, &e)| if e == 0.0 { 0.0 } else { e / (l + mu).powi(2) })
            .sum()
    };
    let solve = |mu: f64| -> ComplexMatrix {
        let inv: Vec<f64> = lam
            .iter()
            .zip(&row_energy)
            .map(|(&l, &e)| if e == 0.0 { 0.0 } else { 1.0 / (l + mu) })
            .collect();
        let mut scaled = c.clone();
        for i in 0..scaled.rows() {
            for j in 0..scaled.cols() {
                scaled[(i, j)] *= inv[i];
            }
        }
        q * &scaled
    };

    if power(0.0) <= budget {
        return Ok(solve(0.0));
    }
    let total: f64 = row_energy.iter().sum();
    let mut lo = 0.0_f64;
    let mut hi = (total / budget).sqrt().max(f64::MIN_POSITIVE);
    while power(hi) > budget {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NotConverged {
                what: "precoder power multiplier search",
                iterations: 1024,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if power(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(solve(hi))
}

/// WMMSE block coordinate descent for the two-user sum rate with
/// interference treated as noise. Each user sends as many streams as it has
/// transmit antennas and all MSE weights are equal.
///
/// The sum rate is non-decreasing across iterations. If `conv_tol` is not met
/// within `max_iters`, the best iterate is returned with `converged = false`.
pub fn wmmse_ic(sc: &IcScenario, opts: &WmmseOptions) -> Result<WmmseOutput> {
    if opts.max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    if opts.conv_tol.is_nan() || opts.conv_tol <= 0.0 {
        return Err(Error::InvalidArgument("conv_tol must be positive".into()));
    }

    let mut v = initial_precoders(sc, opts.seed);
    let mut rate = sum_rate(sc, &v)?;
    let mut history = vec![rate];
    let mut best = (rate, v.clone());
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;

        // receivers and weights for the current precoders
        let mut u = Vec::with_capacity(2);
        let mut w = Vec::with_capacity(2);
        for k in 0..2 {
            let j = 1 - k;
            let direct = &sc.h[k][k] * &v[k];
            let cross = &sc.h[k][j] * &v[j];
            let cov = &(&direct.gram_outer() + &cross.gram_outer()) + &sc.noise_cov[k];
            let uk = matdecomp::solve_hpd(&cov, &direct)?;
            let e = &ComplexMatrix::identity(v[k].cols()) - &uk.adjoint_mul(&direct);
            let wk = matdecomp::inv_hpd(&e.hermitian_part())?;
            u.push(uk);
            w.push(wk);
        }

        // precoders
        let next: [ComplexMatrix; 2] = {
            let mut out = Vec::with_capacity(2);
            for k in 0..2 {
                let m = sc.tx_antennas(k);
                let mut a = ComplexMatrix::zeros(m, m);
                for j in 0..2 {
                    let t = sc.h[j][k].adjoint_mul(&u[j]);
                    a = &a + &(&(&t * &w[j]) * &t.adjoint());
                }
                let b = &sc.h[k][k].adjoint_mul(&u[k]) * &w[k];
                out.push(power_constrained_update(&a, &b, sc.power_budget[k])?);
            }
            [out.remove(0), out.remove(0)]
        };
        v = next;

        let new_rate = sum_rate(sc, &v)?;
        residual = (new_rate - rate).abs();
        history.push(new_rate);
        rate = new_rate;
        if rate > best.0 {
            best = (rate, v.clone());
        }
        if residual < opts.conv_tol {
            converged = true;
            break;
        }
    }

    Ok(WmmseOutput {
        precoders: best.1,
        sum_rate: best.0,
        trace: SolverTrace {
            iterations,
            objective_history: history,
            converged,
            final_residual: residual,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_respects_budget() {
        let a = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        let b = ComplexMatrix::from_real_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let v = power_constrained_update(&a, &b, 3.0).unwrap();
        assert!(v.frobenius_norm().powi(2) <= 3.0 + 1e-12);
        assert!(v.frobenius_norm().powi(2) >= 3.0 - 1e-9);

        // unconstrained optimum inside the budget
        let a = ComplexMatrix::identity(2).scale(2.0);
        let b = ComplexMatrix::identity(2);
        let v = power_constrained_update(&a, &b, 10.0).unwrap();
        assert!((&v - &ComplexMatrix::identity(2).scale(0.5)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_user_and_options() {
        let i = ComplexMatrix::identity(2);
        let sc = IcScenario::with_white_noise(
            [[i.clone(), i.clone()], [i.clone(), i.clone()]],
            1.0,
        )
        .unwrap();
        assert!(ic_user_capacity(&sc, 2, &i, &i).is_err());
        let opts = WmmseOptions {
            max_iters: 0,
            ..Default::default()
        };
        assert!(wmmse_ic(&sc, &opts).is_err());
        assert!(IcScenario::with_white_noise(
            [[i.clone(), i.clone()], [i.clone(), i.clone()]],
            0.0
        )
        .is_err());
    }
}
