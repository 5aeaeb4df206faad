use alloc::vec::Vec;

use crate::linalg::{is_symmetric, matmul, psd_sqrt, trace};
use crate::{Error, Result};

/// Closed-form `W_2` between `N(mu1, s1)` and `N(mu2, s2)`; covariances
/// are dense row-major `d × d`.
pub fn gaussian_w2(mu1: &[f64], s1: &[f64], mu2: &[f64], s2: &[f64]) -> Result<f64> {
    let d = mu1.len();
    if mu2.len() != d {
        return Err(Error::DimensionMismatch {
            left: d,
            right: mu2.len(),
        });
    }
    for s in [s1, s2] {
        if s.len() != d * d {
            return Err(Error::DimensionMismatch {
                left: s.len(),
                right: d * d,
            });
        }
        if !is_symmetric(s, d, 1e-10) {
            return Err(Error::NotPsd);
        }
    }
    let r2 = psd_sqrt(s2, d)?;
    psd_sqrt(s1, d)?;
    let mut inner = matmul(&matmul(&r2, s1, d), &r2, d);
    symmetrize(&mut inner, d);
    let cross = psd_sqrt(&inner, d)?;
    let shift: f64 = mu1.iter().zip(mu2).map(|(a, b)| (a - b) * (a - b)).sum();
    let w2 = shift + trace(s1, d) + trace(s2, d) - 2.0 * trace(&cross, d);
    Ok(libm::sqrt(w2.max(0.0)))
}

fn symmetrize(a: &mut [f64], d: usize) {
    for i in 0..d {
        for j in i + 1..d {
            let m = 0.5 * (a[i * d + j] + a[j * d + i]);
            a[i * d + j] = m;
            a[j * d + i] = m;
        }
    }
}

/// Equicorrelated covariance `δ_ij + rho (1 - δ_ij)`.
pub fn equicorrelated(d: usize, rho: f64) -> Vec<f64> {
    (0..d * d)
        .map(|k| if k / d == k % d { 1.0 } else { rho })
        .collect()
}
