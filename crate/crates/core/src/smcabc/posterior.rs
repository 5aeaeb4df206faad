use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::weights::ess;
use super::Particle;
use crate::distances::{column_scales, standardize, PointCloud};
use crate::exec::Executor;
use crate::morphometrics::QoiMatrix;
use crate::rng::{derive_seed, domain, StreamKey};
use crate::simulator::Simulator;
use crate::stats::{mean, std_dev, weighted_std};
use crate::{Error, Result};

const MAX_GRID: usize = 200_000;

/// A density evaluated on an equispaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl Kde {
    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| 0.5 * (g[1] - g[0]) * (d[0] + d[1]))
            .sum()
    }
}

fn scott_bandwidth(xs: &[f64], ws: &[f64]) -> Option<f64> {
    let sd = weighted_std(xs, ws);
    let n_eff = ess(ws).ok()?;
    let h = sd * libm::pow(n_eff, -0.2);
    (h > 0.0 && h.is_finite()).then_some(h)
}

/// Weighted Gaussian density at the grid points.
pub fn density_on_grid(xs: &[f64], ws: &[f64], h: f64, grid: &[f64]) -> Vec<f64> {
    let total: f64 = ws.iter().sum();
    let norm = 1.0 / (total * h * libm::sqrt(2.0 * core::f64::consts::PI));
    grid.iter()
        .map(|&g| {
            xs.iter()
                .zip(ws)
                .filter(|(_, w)| **w > 0.0)
                .map(|(x, w)| {
                    let z = (g - x) / h;
                    w * libm::exp(-0.5 * z * z)
                })
                .sum::<f64>()
                * norm
        })
        .collect()
}

fn grid(lo: f64, hi: f64, h: f64, resolution: usize) -> Vec<f64> {
    let (a, b) = (lo - 5.0 * h, hi + 5.0 * h);
    let needed = libm::ceil((b - a) / (0.25 * h)) as usize + 1;
    let points = resolution.max(needed).clamp(2, MAX_GRID);
    (0..points)
        .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Weighted Gaussian KDE with Scott's bandwidth `σ_w · ESS^(-1/5)` on
/// `[min - 5h, max + 5h]`. `None` when all weighted values coincide.
pub fn kde(xs: &[f64], ws: &[f64], resolution: usize) -> Option<Kde> {
    let h = scott_bandwidth(xs, ws)?;
    let live = || {
        xs.iter()
            .zip(ws)
            .filter(|(_, w)| **w > 0.0)
            .map(|(x, _)| *x)
    };
    let lo = live().fold(f64::INFINITY, f64::min);
    let hi = live().fold(f64::NEG_INFINITY, f64::max);
    let grid = grid(lo, hi, h, resolution);
    let density = density_on_grid(xs, ws, h, &grid);
    Some(Kde {
        bandwidth: h,
        grid,
        density,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub name: String,
    /// Set when every particle has the same value; no KDE then.
    pub degenerate: Option<f64>,
    pub kde: Option<Kde>,
}

pub fn kde_marginals(particles: &[Particle], names: &[String], resolution: usize) -> Vec<Marginal> {
    let ws: Vec<f64> = particles.iter().map(|p| p.weight).collect();
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let xs: Vec<f64> = particles.iter().map(|p| p.theta[j]).collect();
            match kde(&xs, &ws, resolution) {
                Some(k) => Marginal {
                    name: name.clone(),
                    degenerate: None,
                    kde: Some(k),
                },
                None => {
                    let v = xs
                        .iter()
                        .zip(&ws)
                        .find(|(_, w)| **w > 0.0)
                        .map_or(f64::NAN, |(x, _)| *x);
                    Marginal {
                        name: name.clone(),
                        degenerate: Some(v),
                        kde: None,
                    }
                }
            }
        })
        .collect()
}

/// `count` indices drawn with replacement proportionally to `weights`.
pub fn weighted_draws<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut cum = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cum.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::ZeroWeights);
    }
    Ok((0..count)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cum.partition_point(|c| *c <= u).min(weights.len() - 1)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Normalized so the bars integrate to one.
    pub density: Vec<f64>,
}

fn histogram(xs: &[f64], lo: f64, hi: f64) -> Histogram {
    let bins = libm::ceil(libm::sqrt(xs.len() as f64)).clamp(5.0, 50.0) as usize;
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = alloc::vec![0usize; bins];
    for &x in xs {
        let b = libm::floor((x - lo) / width);
        if b >= 0.0 {
            counts[(b as usize).min(bins - 1)] += 1;
        }
    }
    let n = xs.len().max(1) as f64;
    Histogram {
        edges,
        density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
    }
}

/// Data and simulation marginals of one QoI on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoiComparison {
    pub label: String,
    pub data_mean: f64,
    pub data_std: f64,
    pub sim_mean: f64,
    pub sim_std: f64,
    pub histogram: Histogram,
    pub grid: Vec<f64>,
    /// `None` for a constant column.
    pub data_density: Option<Vec<f64>>,
    pub sim_density: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveCheck {
    pub simulated: QoiMatrix,
    pub comparisons: Vec<QoiComparison>,
}

fn compare(label: &str, data: &[f64], sim: &[f64], resolution: usize) -> QoiComparison {
    let ones_d = alloc::vec![1.0; data.len()];
    let ones_s = alloc::vec![1.0; sim.len()];
    let hd = scott_bandwidth(data, &ones_d);
    let hs = scott_bandwidth(sim, &ones_s);
    let all = data.iter().chain(sim).copied();
    let lo = all.clone().fold(f64::INFINITY, f64::min);
    let hi = all.fold(f64::NEG_INFINITY, f64::max);
    let h = match (hd, hs) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => 1.0,
    };
    let grid = grid(lo, hi, h, resolution);
    let dmin = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let dmax = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    QoiComparison {
        label: String::from(label),
        data_mean: mean(data),
        data_std: std_dev(data),
        sim_mean: mean(sim),
        sim_std: std_dev(sim),
        histogram: histogram(data, dmin, dmax),
        data_density: hd.map(|h| density_on_grid(data, &ones_d, h, &grid)),
        sim_density: hs.map(|h| density_on_grid(sim, &ones_s, h, &grid)),
        grid,
    }
}

/// Simulates `sims_per_param` rows at each of `particles.len()` posterior
/// draws and compares every QoI marginal with the observed data.
pub fn predictive_check<S, E>(
    particles: &[Particle],
    simulator: &S,
    observed: &QoiMatrix,
    sims_per_param: usize,
    seed: u64,
    exec: &E,
    resolution: usize,
) -> Result<PredictiveCheck>
where
    S: Simulator + ?Sized,
    E: Executor,
{
    if particles.is_empty() {
        return Err(Error::NotEnoughSamples { needed: 1, got: 0 });
    }
    let labels = simulator.qoi_labels();
    if labels != observed.labels {
        return Err(Error::config(format!(
            "simulator QoIs {:?} differ from data columns {:?}",
            labels, observed.labels
        )));
    }
    let ws: Vec<f64> = particles.iter().map(|p| p.weight).collect();
    let mut rng = StreamKey::new(seed, domain::PREDICTIVE).stream(0, 0);
    let draws = weighted_draws(&ws, particles.len(), &mut rng)?;
    let clouds: Result<Vec<PointCloud>> = exec
        .map(draws.len(), |k| {
            simulator.simulate(
                &particles[draws[k]].theta,
                sims_per_param,
                derive_seed(seed, &[domain::PREDICTIVE, k as u64]),
            )
        })
        .into_iter()
        .collect();
    let mut values = Vec::new();
    for c in clouds? {
        values.extend_from_slice(c.values());
    }
    let simulated = QoiMatrix::new(labels.clone(), PointCloud::new(labels.len(), values)?)?;
    let comparisons = labels
        .iter()
        .enumerate()
        .map(|(j, l)| compare(l, &observed.column(j), &simulated.column(j), resolution))
        .collect();
    Ok(PredictiveCheck {
        simulated,
        comparisons,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub data: usize,
    pub sim: usize,
    pub distance: f64,
}

/// Nearest simulated row for every data row after standardizing both by
/// the data's column std. Ties go to the lowest simulated index.
pub fn pair_neurons(data: &QoiMatrix, sim: &QoiMatrix) -> Result<Vec<Pair>> {
    if data.labels != sim.labels {
        return Err(Error::config(format!(
            "column mismatch: data {:?} vs simulation {:?}",
            data.labels, sim.labels
        )));
    }
    if sim.rows() == 0 {
        return Err(Error::NotEnoughSamples { needed: 1, got: 0 });
    }
    let scales = column_scales(&data.cloud)?;
    let d = standardize(&data.cloud, &scales)?;
    let s = standardize(&sim.cloud, &scales)?;
    Ok(d.points()
        .enumerate()
        .map(|(i, x)| {
            let mut best = (0usize, f64::INFINITY);
            for (j, y) in s.points().enumerate() {
                let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                if dist < best.1 {
                    best = (j, dist);
                }
            }
            Pair {
                data: i,
                sim: best.0,
                distance: libm::sqrt(best.1),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use rand::SeedableRng;

    fn particle(theta: Vec<f64>, weight: f64) -> Particle {
        Particle {
            theta,
            weight,
            distance: 0.0,
            sim: PointCloud::new(1, vec![0.0]).unwrap(),
        }
    }

    #[test]
    fn symmetric_two_point_kde() {
        let k = kde(&[-1.0, 1.0], &[0.5, 0.5], 2001).unwrap();
        let n = k.grid.len();
        for i in 0..n {
            assert!((k.density[i] - k.density[n - 1 - i]).abs() < 1e-12);
        }
        assert!((k.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn small_bandwidth_peaks_at_points() {
        let xs = [-1.0, 1.0];
        let grid: Vec<f64> = (0..=400).map(|i| -2.0 + i as f64 * 0.01).collect();
        let d = density_on_grid(&xs, &[1.0, 1.0], 0.1, &grid);
        let argmax = (0..grid.len())
            .max_by(|&a, &b| d[a].total_cmp(&d[b]))
            .unwrap();
        assert!((grid[argmax].abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_marginal() {
        let ps = vec![particle(vec![0.3, 1.0], 0.5), particle(vec![0.3, 2.0], 0.5)];
        let m = kde_marginals(&ps, &["a".to_string(), "b".to_string()], 256);
        assert_eq!(m[0].degenerate, Some(0.3));
        assert!(m[0].kde.is_none());
        assert!((m[1].kde.as_ref().unwrap().integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn uniform_kde_interior() {
        let mut rng = crate::rng::StreamRng::seed_from_u64(4);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let k = kde(&xs, &vec![1.0; xs.len()], 512).unwrap();
        assert!((k.integral() - 1.0).abs() < 1e-3);
        for (g, d) in k.grid.iter().zip(&k.density) {
            if (0.2..=0.8).contains(g) {
                assert!((d - 1.0).abs() < 0.1, "{g}: {d}");
            }
        }
    }

    #[test]
    fn weighted_draws_follow_weights() {
        let mut rng = crate::rng::StreamRng::seed_from_u64(8);
        let d = weighted_draws(&[0.0, 0.25, 0.75], 20_000, &mut rng).unwrap();
        assert!(!d.contains(&0));
        let ones = d.iter().filter(|&&i| i == 1).count() as f64 / 20_000.0;
        assert!((ones - 0.25).abs() < 0.02);
    }

    fn qoi(rows: &[Vec<f64>]) -> QoiMatrix {
        QoiMatrix::from_rows(vec!["M1".into(), "M4".into()], rows).unwrap()
    }

    #[test]
    fn pairing_with_itself() {
        let d = qoi(&[vec![1.0, 10.0], vec![2.0, 30.0], vec![5.0, 20.0]]);
        let p = pair_neurons(&d, &d).unwrap();
        for (i, pair) in p.iter().enumerate() {
            assert_eq!(pair.sim, i);
            assert_eq!(pair.distance, 0.0);
        }
    }

    #[test]
    fn pairing_single_sim_row() {
        let d = qoi(&[vec![1.0, 10.0], vec![2.0, 30.0], vec![5.0, 20.0]]);
        let s = qoi(&[vec![0.0, 0.0]]);
        assert!(pair_neurons(&d, &s).unwrap().iter().all(|p| p.sim == 0));
    }

    #[test]
    fn pairing_ties_and_mismatch() {
        let d = qoi(&[vec![0.0, 0.0], vec![2.0, 2.0]]);
        let s = qoi(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![-1.0, -1.0]]);
        assert_eq!(pair_neurons(&d, &s).unwrap()[0].sim, 0);
        let other =
            QoiMatrix::from_rows(vec!["M1".into(), "M2".into()], &[vec![0.0, 0.0]]).unwrap();
        assert!(pair_neurons(&d, &other).is_err());
        let flat = qoi(&[vec![0.0, 1.0], vec![2.0, 1.0]]);
        assert_eq!(pair_neurons(&flat, &s), Err(Error::ZeroScale { column: 1 }));
    }
}
