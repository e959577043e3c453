//! Dense decompositions of small complex matrices.
//!
//! Both decompositions are Jacobi methods: cyclic two-sided Jacobi for the
//! Hermitian eigenproblem and one-sided (Hestenes) Jacobi for the SVD. They are
//! slow compared with LAPACK but accurate to working precision in every
//! singular value, including the small ones that decide numeric rank.
//!
//! Output conventions:
//! - eigenvalues and singular values are sorted in descending order;
//! - every vector column is rotated so that its entry of largest modulus is
//!   real and positive (for the SVD the same phase is applied to the matching
//!   left and right columns, so the product is unchanged).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{inner, norm, ComplexMatrix, ONE, ZERO};

/// Relative singular-value threshold used for truncation and numeric rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Tolerance on `||A - A^H||_F / ||A||_F` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Relative eigenvalue slack below zero still accepted as PSD.
pub const PSD_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdResult {
    /// N×D, orthonormal columns.
    pub left: ComplexMatrix,
    /// Strictly positive, non-increasing, length D.
    pub singular_values: Vec<f64>,
    /// M×D, orthonormal columns.
    pub right: ComplexMatrix,
    pub tolerance_used: f64,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `left * diag(s) * right^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        &self.left.scale_columns(&self.singular_values) * &self.right.adjoint()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvdResult {
    /// M×M unitary.
    pub vectors: ComplexMatrix,
    /// Descending.
    pub values: Vec<f64>,
}

impl EvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        &self.vectors.scale_columns(&self.values) * &self.vectors.adjoint()
    }
}

fn require_square(a: &ComplexMatrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    Ok(a.rows())
}

fn require_hermitian(a: &ComplexMatrix) -> Result<()> {
    let residual = a.hermitian_residual();
    if residual > HERMITIAN_TOL {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

#[inline]
fn jacobi_tangent(diff_over_2r: f64) -> (f64, f64) {
    let zeta = diff_over_2r;
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (t, c)
}

/// Rotates columns `p`, `q` as `(c*x_p - s*x_q, s*x_p + c*x_q)` after scaling
/// column `q` by `phase`.
#[inline]
fn rotate_columns(m: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    for k in 0..m.rows() {
        let xp = m[(k, p)];
        let xq = m[(k, q)] * phase;
        m[(k, p)] = xp * c - xq * s;
        m[(k, q)] = xp * s + xq * c;
    }
}

/// Index of the entry of largest modulus. Near-ties (within a relative
/// 1e-10 band) resolve to the lowest index so that rounding noise cannot flip
/// the choice.
fn pivot_index(v: &[Complex64]) -> usize {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let band = max * (1.0 - 1e-10);
    v.iter().position(|z| z.norm() >= band).unwrap_or(0)
}

/// Phase `conj(v_k)/|v_k|` that makes the pivot entry real positive.
fn canonical_phase(v: &[Complex64]) -> Complex64 {
    let k = pivot_index(v);
    let r = v[k].norm();
    if r == 0.0 {
        ONE
    } else {
        v[k].conj() / r
    }
}

fn apply_phase(v: &mut [Complex64], phase: Complex64) {
    let k = pivot_index(v);
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[k].im = 0.0;
}

/// Eigendecomposition of a Hermitian matrix.
pub fn herm_evd(a: &ComplexMatrix) -> Result<EvdResult> {
    let n = require_square(a)?;
    require_hermitian(a)?;
    let mut m = a.hermitian_part();
    let mut vecs = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();

    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += m[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= 1e-3 * f64::EPSILON * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[(p, q)];
                    let r = apq.norm();
                    if r == 0.0 {
                        continue;
                    }
                    // Rotate the q-th basis vector by conj(phase) so that the
                    // (p, q) entry becomes the real number r.
                    let phase = apq.conj() / r;
                    let a_pp = m[(p, p)].re;
                    let a_qq = m[(q, q)].re;
                    let (t, c) = jacobi_tangent((a_qq - a_pp) / (2.0 * r));
                    let s = t * c;

                    rotate_columns(&mut m, p, q, c, s, phase);
                    // rows: conjugate transformation
                    for k in 0..n {
                        let xp = m[(p, k)];
                        let xq = m[(q, k)] * phase.conj();
                        m[(p, k)] = xp * c - xq * s;
                        m[(q, k)] = xp * s + xq * c;
                    }
                    m[(p, p)] = Complex64::new(a_pp - t * r, 0.0);
                    m[(q, q)] = Complex64::new(a_qq + t * r, 0.0);
                    m[(p, q)] = ZERO;
                    m[(q, p)] = ZERO;
                    rotate_columns(&mut vecs, p, q, c, s, phase);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = vecs.select_columns(&order);
    for j in 0..n {
        let mut col = vectors.column(j);
        let phase = canonical_phase(&col);
        apply_phase(&mut col, phase);
        vectors.set_column(j, &col);
    }
    Ok(EvdResult { vectors, values })
}

/// One-sided Jacobi on the columns of `a`. Returns the column-orthogonalized
/// work matrix `A V` and the accumulated unitary `V`.
fn hestenes(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let m = a.cols();
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(m);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..m {
            for j in i + 1..m {
                let ci = w.column(i);
                let cj = w.column(j);
                let alpha = inner(&ci, &ci).re;
                let beta = inner(&cj, &cj).re;
                let gamma = inner(&ci, &cj);
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g;
                let (t, c) = jacobi_tangent((beta - alpha) / (2.0 * g));
                let s = t * c;
                rotate_columns(&mut w, i, j, c, s, phase);
                rotate_columns(&mut v, i, j, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

/// All min(N, M) singular values, descending.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let work = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.adjoint()
    };
    let (w, _) = hestenes(&work);
    let mut s: Vec<f64> = (0..w.cols()).map(|j| norm(&w.column(j))).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// SVD keeping only singular values above `tol * sigma_max`.
pub fn truncated_svd(a: &ComplexMatrix, tol: f64) -> Result<SvdResult> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "truncation tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let wide = a.rows() < a.cols();
    let work = if wide { a.adjoint() } else { a.clone() };
    let (w, v) = hestenes(&work);

    let sigma: Vec<f64> = (0..w.cols()).map(|j| norm(&w.column(j))).collect();
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let sigma_max = order.first().map_or(0.0, |&i| sigma[i]);
    if sigma_max == 0.0 {
        return Err(Error::RankZero { what: "matrix" });
    }
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| sigma[i] > tol * sigma_max)
        .collect();

    let rows = work.rows();
    let mut lefts = Vec::with_capacity(kept.len());
    let mut rights = Vec::with_capacity(kept.len());
    let mut values = Vec::with_capacity(kept.len());
    for &j in &kept {
        let s = sigma[j];
        let u: Vec<Complex64> = w.column(j).into_iter().map(|z| z / s).collect();
        let r = v.column(j);
        // Swap roles for the wide case: A = (A^H)^H = V S U^H.
        let (mut l, mut rr) = if wide { (r, u) } else { (u, r) };
        let phase = canonical_phase(&l);
        apply_phase(&mut l, phase);
        for z in rr.iter_mut() {
            *z *= phase;
        }
        lefts.push(l);
        rights.push(rr);
        values.push(s);
    }
    let (n_left, n_right) = if wide {
        (v.rows(), rows)
    } else {
        (rows, v.rows())
    };
    Ok(SvdResult {
        left: ComplexMatrix::from_columns(n_left, &lefts),
        singular_values: values,
        right: ComplexMatrix::from_columns(n_right, &rights),
        tolerance_used: tol,
    })
}

/// Number of singular values above `tol * sigma_max`; zero for a zero matrix.
pub fn numeric_rank(a: &ComplexMatrix, tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        Some(&max) if max > 0.0 => s.iter().filter(|&&x| x > tol * max).count(),
        _ => 0,
    }
}

/// Factor `F = U_x diag(sqrt(lambda))` over the positive eigenvalues of a PSD
/// matrix, so that `F F^H = S`.
pub fn psd_sqrt(s: &ComplexMatrix) -> Result<ComplexMatrix> {
    psd_sqrt_with_tol(s, DEFAULT_RANK_TOL)
}

pub fn psd_sqrt_with_tol(s: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let evd = herm_evd(s)?;
    let spectral = evd.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let min = evd.values.last().copied().unwrap_or(0.0);
    if min < -PSD_TOL * spectral {
        return Err(Error::Indefinite {
            min_eigenvalue: min,
            threshold: PSD_TOL * spectral,
        });
    }
    let max = evd.values.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return Err(Error::RankZero {
            what: "covariance",
        });
    }
    let d = evd.values.iter().filter(|&&x| x > tol * max).count();
    let roots: Vec<f64> = evd.values[..d].iter().map(|x| x.sqrt()).collect();
    Ok(evd.vectors.first_columns(d).scale_columns(&roots))
}

/// Hermitian inverse square root `S^{-1/2}` of a positive definite matrix.
pub fn inv_sqrt(s: &ComplexMatrix) -> Result<ComplexMatrix> {
    let evd = herm_evd(s)?;
    let max = evd.values.first().copied().unwrap_or(0.0);
    let min = evd.values.last().copied().unwrap_or(0.0);
    if max <= 0.0 || min <= 1e-12 * max {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    let d: Vec<f64> = evd.values.iter().map(|x| 1.0 / x.sqrt()).collect();
    let w = &evd.vectors.scale_columns(&d) * &evd.vectors.adjoint();
    Ok(w.hermitian_part())
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = require_square(a)?;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: d });
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut x = a[(i, j)];
            for k in 0..j {
                x -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = x / d;
        }
    }
    Ok(l)
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn solve_hpd(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.check_product(b, "solve_hpd")?;
    let l = cholesky(a)?;
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        // forward: L y = b
        for i in 0..n {
            let mut acc = x[(i, c)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = acc / l[(i, i)];
        }
        // backward: L^H x = y
        for i in (0..n).rev() {
            let mut acc = x[(i, c)];
            for k in i + 1..n {
                acc -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = acc / l[(i, i)];
        }
    }
    Ok(x)
}

/// Inverse of a Hermitian positive definite matrix.
pub fn inv_hpd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let inv = solve_hpd(a, &ComplexMatrix::identity(a.rows()))?;
    Ok(inv.hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::random_complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real(rows: &[[f64; 2]; 2]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    fn unitary_defect(u: &ComplexMatrix) -> f64 {
        (&u.adjoint_mul(u) - &ComplexMatrix::identity(u.cols())).frobenius_norm()
    }

    #[test]
    fn evd_of_diagonal_sorts_descending() {
        let e = herm_evd(&ComplexMatrix::from_real_diag(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors[(1, 0)], ONE);
        assert_eq!(e.vectors[(0, 1)], ONE);
        assert_eq!(e.vectors[(0, 0)], ZERO);
    }

    #[test]
    fn evd_of_identity() {
        let e = herm_evd(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        assert!(unitary_defect(&e.vectors) < 1e-15);
    }

    #[test]
    fn evd_of_covariance_matches_characteristic_polynomial() {
        let s = real(&[[0.2896, -0.5654], [-0.5654, 1.8275]]);
        let e = herm_evd(&s).unwrap();
        // roots of x^2 - tr x + det
        let tr: f64 = 0.2896 + 1.8275;
        let det: f64 = 0.2896 * 1.8275 - 0.5654 * 0.5654;
        let disc = (tr * tr - 4.0 * det).sqrt();
        let expected = [(tr + disc) / 2.0, (tr - disc) / 2.0];
        assert!((e.values[0] - expected[0]).abs() < 1e-14);
        assert!((e.values[1] - expected[1]).abs() < 1e-14);
        assert!((e.values[0] * e.values[1] - det).abs() < 1e-14);
        assert!((e.values[0] + e.values[1] - 2.1171).abs() < 1e-14);
        assert!((&e.reconstruct() - &s).frobenius_norm() < 1e-14);
    }

    #[test]
    fn evd_rejects_non_square_and_non_hermitian() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(herm_evd(&rect), Err(Error::NotSquare { .. })));
        let skew = real(&[[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(herm_evd(&skew), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn svd_simple_cases() {
        let s = truncated_svd(&ComplexMatrix::identity(2), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0]);
        let s = truncated_svd(&ComplexMatrix::from_real_diag(&[3.0, 0.0]), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.rank(), 1);
        assert_eq!(s.singular_values, vec![3.0]);
        assert!(matches!(
            truncated_svd(&ComplexMatrix::zeros(2, 2), DEFAULT_RANK_TOL),
            Err(Error::RankZero { .. })
        ));
        assert!(truncated_svd(&ComplexMatrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn svd_reconstructs_random_rectangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, m) in [(4, 3), (3, 4), (1, 5), (6, 1)] {
            let a = random_complex(&mut rng, n, m);
            let s = truncated_svd(&a, DEFAULT_RANK_TOL).unwrap();
            let err = (&s.reconstruct() - &a).frobenius_norm() / a.frobenius_norm();
            assert!(err <= 1e-10, "{n}x{m}: {err}");
            assert!(unitary_defect(&s.left) <= 1e-10);
            assert!(unitary_defect(&s.right) <= 1e-10);
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn psd_sqrt_cases() {
        let f = psd_sqrt(&ComplexMatrix::from_real_diag(&[4.0, 9.0])).unwrap();
        assert!((f[(1, 0)].re - 3.0).abs() < 1e-15);
        assert!((f[(0, 1)].re - 2.0).abs() < 1e-15);

        let s = real(&[[0.2896, -0.5654], [-0.5654, 1.8275]]);
        let f = psd_sqrt(&s).unwrap();
        assert!((&f.gram_outer() - &s).frobenius_norm() / s.frobenius_norm() < 1e-9);
        // printed factor, up to per-column sign
        let printed = [[-0.4423, 0.3066], [1.3481, 0.1006]];
        for j in 0..2 {
            let sign = if f[(1, j)].re * printed[1][j] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..2 {
                assert!((sign * f[(i, j)].re - printed[i][j]).abs() < 1e-3);
            }
        }

        assert!(matches!(
            psd_sqrt(&ComplexMatrix::zeros(2, 2)),
            Err(Error::RankZero { .. })
        ));
        assert!(matches!(
            psd_sqrt(&ComplexMatrix::from_real_diag(&[1.0, -0.1])),
            Err(Error::Indefinite { .. })
        ));
    }

    #[test]
    fn inv_sqrt_cases() {
        let w = inv_sqrt(&ComplexMatrix::identity(2)).unwrap();
        assert!((&w - &ComplexMatrix::identity(2)).frobenius_norm() < 1e-15);
        let w = inv_sqrt(&ComplexMatrix::from_real_diag(&[4.0, 1.0])).unwrap();
        assert!((&w - &ComplexMatrix::from_real_diag(&[0.5, 1.0])).frobenius_norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_complex(&mut rng, 3, 3);
        let s = &a.gram_outer() + &ComplexMatrix::identity(3);
        let w = inv_sqrt(&s).unwrap();
        let check = &(&w * &s) * &w.adjoint();
        assert!((&check - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-9);
        assert_eq!(w.hermitian_residual(), 0.0);

        assert!(matches!(
            inv_sqrt(&ComplexMatrix::from_real_diag(&[1.0, 0.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn numeric_rank_cases() {
        assert_eq!(numeric_rank(&ComplexMatrix::from_real_diag(&[1.0, 1e-15]), DEFAULT_RANK_TOL), 1);
        assert_eq!(numeric_rank(&ComplexMatrix::zeros(2, 2), DEFAULT_RANK_TOL), 0);
        let h = real(&[[0.8147, 0.1270], [0.9058, 0.9134]]);
        assert!((0.8147_f64 * 0.9134 - 0.1270 * 0.9058).abs() > 0.5);
        assert_eq!(numeric_rank(&h, DEFAULT_RANK_TOL), 2);
    }

    #[test]
    fn cholesky_solve_matches_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_complex(&mut rng, 4, 4);
        let s = &a.gram_outer() + &ComplexMatrix::identity(4);
        let b = random_complex(&mut rng, 4, 2);
        let x = solve_hpd(&s, &b).unwrap();
        assert!((&(&s * &x) - &b).frobenius_norm() < 1e-12);
        assert!(cholesky(&ComplexMatrix::from_real_diag(&[1.0, -1.0])).is_err());
    }
}
