//! Dense linear algebra for the small matrices used here (parameter
//! covariances, Gaussian covariances). Matrices are row-major `n x n` slices.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn trace(a: &[f64], n: usize) -> f64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

pub fn is_symmetric(a: &[f64], n: usize, tol: f64) -> bool {
    (0..n).all(|i| (0..i).all(|j| libm::fabs(a[i * n + j] - a[j * n + i]) <= tol))
}

/// Lower Cholesky factor `L` with `L L^T = a`.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::NotPsd);
                }
                l[i * n + i] = libm::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Cholesky with diagonal jitter added until the factorization succeeds.
pub fn cholesky_jittered(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if let Ok(l) = cholesky(a, n) {
        return Ok(l);
    }
    let scale = (0..n)
        .map(|i| libm::fabs(a[i * n + i]))
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut jitter = 1e-12 * scale;
    for _ in 0..20 {
        let mut b = a.to_vec();
        for i in 0..n {
            b[i * n + i] += jitter;
        }
        if let Ok(l) = cholesky(&b, n) {
            return Ok(l);
        }
        jitter *= 10.0;
    }
    Err(Error::NotPsd)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the eigenvectors as columns of a row-major matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i * n + i]).collect(), v)
}

/// Principal square root of a symmetric positive semidefinite matrix.
///
/// Eigenvalues slightly below zero (relative to the spectral radius) are
/// clamped; anything more negative is rejected.
pub fn psd_sqrt(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if !is_symmetric(
        a,
        n,
        1e-9 * (1.0 + a.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)))),
    ) {
        return Err(Error::NotPsd);
    }
    let (vals, vecs) = symmetric_eigen(a, n);
    let radius = vals.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)));
    if vals.iter().any(|&l| l < -1e-9 * radius.max(1e-300)) {
        return Err(Error::NotPsd);
    }
    let roots: Vec<f64> = vals.iter().map(|&l| libm::sqrt(l.max(0.0))).collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n)
                .map(|k| vecs[i * n + k] * roots[k] * vecs[j * n + k])
                .sum();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = [4.0, 2.0, 0.4, 2.0, 3.0, 0.1, 0.4, 0.1, 2.0];
        let l = cholesky(&a, 3).unwrap();
        let mut lt = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                lt[i * 3 + j] = l[j * 3 + i];
            }
        }
        let r = matmul(&l, &lt, 3);
        for (x, y) in r.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2), Err(Error::NotPsd));
    }

    #[test]
    fn sqrt_squares_back() {
        let a = [2.0, 0.5, 0.3, 0.5, 1.5, -0.2, 0.3, -0.2, 1.0];
        let s = psd_sqrt(&a, 3).unwrap();
        let r = matmul(&s, &s, 3);
        for (x, y) in r.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(psd_sqrt(&[1.0, 0.0, 0.0, -1.0], 2).is_err());
    }

    #[test]
    fn jittered_handles_singular() {
        let a = [1.0, 1.0, 1.0, 1.0];
        assert!(cholesky(&a, 2).is_err());
        assert!(cholesky_jittered(&a, 2).is_ok());
    }
}
