//! k-nearest-neighbour divergence estimators.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::cloud::{same_dim, sq_dist, PointCloud};
use crate::{Error, Result};

/// Floor applied to zero neighbour distances (duplicate points).
pub const JITTER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnEstimate {
    pub value: f64,
    /// Number of neighbour distances that were zero and got floored.
    pub jittered: usize,
}

/// Distance from each point of `query` to its k-th nearest point of
/// `reference`, skipping the same index when `exclude_self` is set.
fn kth_distances(
    query: &PointCloud,
    reference: &PointCloud,
    k: usize,
    exclude_self: bool,
) -> Vec<f64> {
    let mut best = vec![f64::INFINITY; k];
    query
        .points()
        .enumerate()
        .map(|(i, q)| {
            best.fill(f64::INFINITY);
            for (j, r) in reference.points().enumerate() {
                if exclude_self && i == j {
                    continue;
                }
                let d = sq_dist(q, r);
                if d < best[k - 1] {
                    let mut pos = k - 1;
                    while pos > 0 && best[pos - 1] > d {
                        best[pos] = best[pos - 1];
                        pos -= 1;
                    }
                    best[pos] = d;
                }
            }
            libm::sqrt(best[k - 1])
        })
        .collect()
}

fn floor_zero(ds: &mut [f64], jittered: &mut usize) {
    for d in ds.iter_mut() {
        if *d <= 0.0 {
            *d = JITTER;
            *jittered += 1;
        }
    }
}

fn check(x: &PointCloud, y: &PointCloud, k: usize) -> Result<()> {
    same_dim(x, y)?;
    if k == 0 {
        return Err(Error::config("k_neighbors must be >= 1"));
    }
    if x.len() <= k {
        return Err(Error::NotEnoughSamples {
            needed: k + 1,
            got: x.len(),
        });
    }
    if y.len() <= k {
        return Err(Error::NotEnoughSamples {
            needed: k + 1,
            got: y.len(),
        });
    }
    Ok(())
}

/// k-NN estimate of `KL(P_x || P_y)`; can be negative on finite samples.
pub fn kl_knn(x: &PointCloud, y: &PointCloud, k: usize) -> Result<KnnEstimate> {
    check(x, y, k)?;
    let (n, m, d) = (x.len() as f64, y.len() as f64, x.dim() as f64);
    let mut jittered = 0;
    let mut rho = kth_distances(x, x, k, true);
    let mut nu = kth_distances(x, y, k, false);
    floor_zero(&mut rho, &mut jittered);
    floor_zero(&mut nu, &mut jittered);
    let s: f64 = rho.iter().zip(&nu).map(|(r, v)| libm::log(v / r)).sum();
    Ok(KnnEstimate {
        value: d / n * s + libm::log(m / (n - 1.0)),
        jittered,
    })
}

/// Log volume of the unit ball in `R^d`.
pub fn log_unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    h * libm::log(core::f64::consts::PI) - libm::lgamma(h + 1.0)
}

fn log_mean_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = xs.iter().map(|x| libm::exp(x - max)).sum();
    max + libm::log(s / xs.len() as f64)
}

/// Plug-in γ-divergence from k-NN density estimates at the sample points.
/// Approaches the KL divergence as `gamma -> 0`.
pub fn gamma_divergence(
    x: &PointCloud,
    y: &PointCloud,
    gamma: f64,
    k: usize,
) -> Result<KnnEstimate> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::config("gamma exponent must be > 0"));
    }
    check(x, y, k)?;
    let (n, m, dim) = (x.len() as f64, y.len() as f64, x.dim());
    let d = dim as f64;
    let mut jittered = 0;
    let mut rho_x = kth_distances(x, x, k, true);
    let mut nu_x = kth_distances(x, y, k, false);
    let mut rho_y = kth_distances(y, y, k, true);
    floor_zero(&mut rho_x, &mut jittered);
    floor_zero(&mut nu_x, &mut jittered);
    floor_zero(&mut rho_y, &mut jittered);

    let log_k = libm::log(k as f64);
    let log_v = log_unit_ball_volume(dim);
    let log_density = |count: f64, r: f64| log_k - libm::log(count) - log_v - d * libm::log(r);
    let scaled = |count: f64, rs: &[f64]| -> Vec<f64> {
        rs.iter().map(|&r| gamma * log_density(count, r)).collect()
    };
    let a = log_mean_exp(&scaled(n - 1.0, &rho_x));
    let b = log_mean_exp(&scaled(m, &nu_x));
    let c = log_mean_exp(&scaled(m - 1.0, &rho_y));
    let value = (a - (gamma + 1.0) * b + gamma * c) / (gamma * (gamma + 1.0));
    Ok(KnnEstimate { value, jittered })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((libm::exp(log_unit_ball_volume(1)) - 2.0).abs() < 1e-12);
        assert!((libm::exp(log_unit_ball_volume(2)) - core::f64::consts::PI).abs() < 1e-12);
        let v3 = 4.0 / 3.0 * core::f64::consts::PI;
        assert!((libm::exp(log_unit_ball_volume(3)) - v3).abs() < 1e-12);
    }

    #[test]
    fn kth_neighbour_by_hand() {
        let x = PointCloud::new(1, alloc::vec![0.0, 1.0, 3.0, 7.0]).unwrap();
        assert_eq!(
            kth_distances(&x, &x, 1, true),
            alloc::vec![1.0, 1.0, 2.0, 4.0]
        );
        assert_eq!(
            kth_distances(&x, &x, 2, true),
            alloc::vec![3.0, 2.0, 3.0, 6.0]
        );
    }

    #[test]
    fn kl_by_hand() {
        // x = {0, 1}, y = {0.5, 3}: rho = (1, 1), nu = (0.5, 0.5)
        let x = PointCloud::new(1, alloc::vec![0.0, 1.0]).unwrap();
        let y = PointCloud::new(1, alloc::vec![0.5, 3.0]).unwrap();
        let e = kl_knn(&x, &y, 1).unwrap();
        let expected = libm::log(0.5) + libm::log(2.0);
        assert!((e.value - expected).abs() < 1e-12);
        assert_eq!(e.jittered, 0);
    }

    #[test]
    fn too_few_samples() {
        let x = PointCloud::new(1, alloc::vec![0.0]).unwrap();
        let y = PointCloud::new(1, alloc::vec![0.5, 3.0]).unwrap();
        assert!(kl_knn(&x, &y, 1).is_err());
        assert!(kl_knn(&y, &y, 2).is_err());
        assert!(gamma_divergence(&y, &y, 0.0, 1).is_err());
    }

    #[test]
    fn duplicates_are_jittered() {
        let x = PointCloud::new(1, alloc::vec![0.0, 0.0, 1.0]).unwrap();
        let y = PointCloud::new(1, alloc::vec![0.5, 3.0]).unwrap();
        let e = kl_knn(&x, &y, 1).unwrap();
        assert_eq!(e.jittered, 2);
        assert!(e.value.is_finite());
    }
}
