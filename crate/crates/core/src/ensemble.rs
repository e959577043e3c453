//! Seeded random instances for property checks and the `verify` driver.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::matrix::ComplexMatrix;

/// Matrix with i.i.d. circularly-symmetric complex Gaussian entries of unit
/// variance.
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let data = (0..rows * cols)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    ComplexMatrix::new(rows, cols, data).expect("positive dimensions")
}

/// Random `rows x cols` matrix of rank `rank` (generically), built as a
/// product of Gaussian factors.
pub fn random_of_rank<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    rank: usize,
) -> ComplexMatrix {
    let rank = rank.clamp(1, rows.min(cols));
    if rank == rows.min(cols) {
        return random_complex(rng, rows, cols);
    }
    let a = random_complex(rng, rows, rank);
    let b = random_complex(rng, rank, cols);
    &a * &b
}

/// Random PSD matrix `F F^H` with `F` of size `dim x rank`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> ComplexMatrix {
    let f = random_complex(rng, dim, rank.clamp(1, dim));
    f.gram_outer()
}

/// Random unitary matrix from the polar factor of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let a = random_complex(rng, n, n);
    let svd = crate::matdecomp::truncated_svd(&a, 1e-15).expect("Gaussian matrix is nonzero");
    &svd.left * &svd.right.adjoint()
}

/// Description of one generated point-to-point instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    pub h: ComplexMatrix,
    pub s_x: ComplexMatrix,
    pub channel_rank: usize,
    pub covariance_rank: usize,
}

/// Draws `(H, S_x)` with dimensions in `1..=max_dim` and ranks spread over
/// their full ranges, so rank-deficient covariances and channels that force a
/// rank reduction both occur regularly.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_dim: usize) -> Instance {
    let max_dim = max_dim.max(1);
    let n = rng.random_range(1..=max_dim);
    let m = rng.random_range(1..=max_dim);
    let channel_rank = rng.random_range(1..=n.min(m));
    let covariance_rank = rng.random_range(1..=m);
    let h = random_of_rank(rng, n, m, channel_rank);
    let mut s_x = random_psd(rng, m, covariance_rank);
    // spread the power level over two decades
    let power: f64 = 10f64.powf(rng.random_range(-1.0..1.0));
    let tr = s_x.trace().re;
    s_x = s_x.scale(power * m as f64 / tr);
    Instance {
        h,
        s_x,
        channel_rank,
        covariance_rank,
    }
}
