//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Jacobi is slow for large square matrices but the matrices in this crate are
//! tall and narrow (thousands of rows, a handful of columns), where it is both
//! fast and accurate: the final columns are orthogonal relative to their own
//! norms, so small singular values keep well-conditioned singular vectors.

use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// Singular values at or below this fraction of the largest are treated as zero.
pub const RELATIVE_RANK_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

/// Rank-truncated SVD `u * diag(sigma) * v^T` with strictly positive `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSvd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, s) in self.sigma.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&self.v.transpose())
            .expect("factor shapes are consistent")
    }
}

/// Thin decomposition of a matrix with `rows >= cols`: `u` is rows x cols,
/// `v` is cols x cols and orthogonal, `sigma` sorted descending (may contain zeros).
#[derive(Debug, Clone)]
pub(crate) struct ThinSvd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// Full thin SVD of a tall (or square) matrix.
pub(crate) fn thin_svd_tall(a: &Matrix) -> ThinSvd {
    let (m, n) = a.shape();
    assert!(m >= n, "thin_svd_tall requires rows >= cols");

    // Column-major working copies.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let tol = f64::EPSILON * (m as f64);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (wp, wq) = (&w[p], &w[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for (x, y) in wp.iter().zip(wq) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps index order among equal singular values.
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut u = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        // Largest-magnitude entry of each right singular vector is non-negative.
        let flip = if largest_magnitude_is_negative(&v[src]) { -1.0 } else { 1.0 };
        for i in 0..n {
            vm[(i, dst)] = flip * v[src][i];
        }
        if s > 0.0 {
            for i in 0..m {
                u[(i, dst)] = flip * w[src][i] / s;
            }
        }
    }
    ThinSvd { u, sigma, v: vm }
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

fn largest_magnitude_is_negative(v: &[f64]) -> bool {
    let mut best = 0.0f64;
    let mut sign_negative = false;
    for &x in v {
        if x.abs() > best {
            best = x.abs();
            sign_negative = x < 0.0;
        }
    }
    sign_negative
}

/// Thin SVD of any shape; wide inputs are handled through the transpose.
/// `v` is only guaranteed orthogonal for tall inputs.
fn thin_svd(a: &Matrix) -> ThinSvd {
    if a.rows() >= a.cols() {
        thin_svd_tall(a)
    } else {
        let t = thin_svd_tall(&a.transpose());
        let mut svd = ThinSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
        // Re-apply the sign convention to the new right factor.
        for j in 0..svd.sigma.len() {
            let col = svd.v.column(j);
            if largest_magnitude_is_negative(&col) {
                for i in 0..svd.v.rows() {
                    svd.v[(i, j)] = -svd.v[(i, j)];
                }
                for i in 0..svd.u.rows() {
                    svd.u[(i, j)] = -svd.u[(i, j)];
                }
            }
        }
        svd
    }
}

fn numerical_rank(sigma: &[f64]) -> usize {
    let max = sigma.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    sigma
        .iter()
        .take_while(|&&s| s > RELATIVE_RANK_TOLERANCE * max)
        .count()
}

/// Best rank-`rank` approximation of `data`. Fewer factors are returned when the
/// matrix has fewer numerically positive singular values.
pub fn svd_truncated(data: &Matrix, rank: usize) -> Result<TruncatedSvd> {
    let limit = data.rows().min(data.cols());
    if rank == 0 || rank > limit {
        return Err(Error::Dimension(format!(
            "truncation rank {rank} outside 1..={limit}"
        )));
    }
    let svd = thin_svd(data);
    let keep = rank.min(numerical_rank(&svd.sigma));
    if keep == 0 {
        return Err(Error::InvalidData(
            "matrix has no positive singular values".into(),
        ));
    }
    let cols: Vec<usize> = (0..keep).collect();
    Ok(TruncatedSvd {
        u: svd.u.select_columns(&cols)?,
        sigma: svd.sigma[..keep].to_vec(),
        v: svd.v.select_columns(&cols)?,
    })
}

/// Moore-Penrose inverse; singular values below the relative tolerance are dropped.
pub fn pseudoinverse(data: &Matrix) -> Matrix {
    let svd = thin_svd(data);
    let keep = numerical_rank(&svd.sigma);
    let (m, n) = data.shape();
    let mut out = Matrix::zeros(n, m);
    // A^+ = V diag(1/sigma) U^T over the retained factors.
    for k in 0..keep {
        let inv = 1.0 / svd.sigma[k];
        for i in 0..n {
            let vik = svd.v[(i, k)] * inv;
            if vik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[(i, j)] += vik * svd.u[(j, k)];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_eq(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        a.shape() == b.shape() && a.sub(b).unwrap().max_abs() <= tol
    }

    #[test]
    fn diagonal_matrix_singular_values() {
        let d = Matrix::diagonal(&[3.0, 2.0, 1.0]);
        let svd = svd_truncated(&d, 2).unwrap();
        assert_eq!(svd.sigma.len(), 2);
        assert!((svd.sigma[0] - 3.0).abs() < 1e-15);
        assert!((svd.sigma[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let svd = svd_truncated(&Matrix::identity(3), 3).unwrap();
        assert_eq!(svd.sigma, vec![1.0, 1.0, 1.0]);
        assert!(approx_eq(&svd.reconstruct(), &Matrix::identity(3), 1e-15));
    }

    #[test]
    fn rank_out_of_range_is_rejected() {
        let d = Matrix::identity(3);
        assert!(matches!(svd_truncated(&d, 0), Err(Error::Dimension(_))));
        assert!(matches!(svd_truncated(&d, 4), Err(Error::Dimension(_))));
    }

    #[test]
    fn rank_deficient_input_returns_fewer_factors() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let svd = svd_truncated(&a, 2).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!(approx_eq(&svd.reconstruct(), &a, 1e-12));
    }

    #[test]
    fn wide_matrix_goes_through_transpose() {
        let a = Matrix::from_rows(&[[1.0, 0.0, 2.0, -1.0], [0.5, 3.0, 0.0, 1.0]]).unwrap();
        let svd = svd_truncated(&a, 2).unwrap();
        assert_eq!(svd.u.shape(), (2, 2));
        assert_eq!(svd.v.shape(), (4, 2));
        assert!(approx_eq(&svd.reconstruct(), &a, 1e-12));
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let a = Matrix::from_rows(&[[-4.0, 0.1], [0.2, -1.0], [0.3, 0.5]]).unwrap();
        let svd = svd_truncated(&a, 2).unwrap();
        for j in 0..svd.rank() {
            let col = svd.v.column(j);
            let max = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(max >= 0.0);
        }
    }

    #[test]
    fn pseudoinverse_of_identity_and_singular_diagonal() {
        assert!(approx_eq(&pseudoinverse(&Matrix::identity(3)), &Matrix::identity(3), 1e-15));
        let d = Matrix::diagonal(&[2.0, 0.0]);
        assert!(approx_eq(&pseudoinverse(&d), &Matrix::diagonal(&[0.5, 0.0]), 1e-15));
    }

    #[test]
    fn pseudoinverse_of_zero_matrix_is_zero() {
        let z = Matrix::zeros(2, 3);
        let p = pseudoinverse(&z);
        assert_eq!(p.shape(), (3, 2));
        assert_eq!(p.max_abs(), 0.0);
    }
}
