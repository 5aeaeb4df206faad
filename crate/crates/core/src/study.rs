//! Empirical Wasserstein error against the Gaussian closed form.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::distances::{gaussian_w2, wasserstein, PointCloud};
use crate::exec::Executor;
use crate::rng::{derive_seed, StreamRng};
use crate::simulator::ToyGaussian;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub dim: usize,
    pub n: usize,
    pub repetition: usize,
    pub empirical: f64,
    pub oracle: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub dim: usize,
    pub n: usize,
    pub median_relative_error: f64,
}

/// For every `(dim, n)` draws `n` points from `N(0, C)` and `n` from
/// `N(1, C)` with the equicorrelated `C`, and compares the exact `W_2`
/// of the samples with the closed form, `repetitions` times.
pub fn wasserstein_study<E: Executor>(
    dims: &[usize],
    sizes: &[usize],
    repetitions: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    for &dim in dims {
        let toy = ToyGaussian::new(dim)?;
        let cov = toy.covariance();
        let zero = alloc::vec![0.0; dim];
        let one = alloc::vec![1.0; dim];
        let oracle = gaussian_w2(&zero, &cov, &one, &cov)?;
        for &n in sizes {
            let batch: Result<Vec<StudyRow>> = exec
                .map(repetitions, |rep| {
                    let mut rng: StreamRng = rand::SeedableRng::seed_from_u64(derive_seed(
                        seed,
                        &[dim as u64, n as u64, rep as u64],
                    ));
                    let x = PointCloud::new(dim, toy.sample(&zero, n, &mut rng))?;
                    let y = PointCloud::new(dim, toy.sample(&one, n, &mut rng))?;
                    let empirical = wasserstein(&x, &y, 2.0)?;
                    Ok(StudyRow {
                        dim,
                        n,
                        repetition: rep,
                        empirical,
                        oracle,
                        relative_error: libm::fabs(empirical - oracle) / oracle,
                    })
                })
                .into_iter()
                .collect();
            rows.extend(batch?);
        }
    }
    Ok(rows)
}

/// Median relative error per `(dim, n)`, in first-appearance order.
pub fn summarize(rows: &[StudyRow]) -> Vec<StudySummary> {
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.dim, r.n)) {
            keys.push((r.dim, r.n));
        }
    }
    keys.into_iter()
        .map(|(dim, n)| {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.dim == dim && r.n == n)
                .map(|r| r.relative_error)
                .collect();
            StudySummary {
                dim,
                n,
                median_relative_error: crate::stats::median(&errs),
            }
        })
        .collect()
}
