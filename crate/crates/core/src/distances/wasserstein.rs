use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::cloud::{non_empty, same_dim, PointCloud};
use super::ot::{
    assignment, pow_abs, transport_cost, wasserstein_1d_pow, wasserstein_1d_pow_sorted,
};
use crate::{Error, Result};

fn check_order(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::config("wasserstein order must be >= 1"));
    }
    Ok(())
}

fn cost_matrix(x: &PointCloud, y: &PointCloud, p: f64) -> Vec<f64> {
    let mut cost = Vec::with_capacity(x.len() * y.len());
    for a in x.points() {
        for b in y.points() {
            let d2 = super::cloud::sq_dist(a, b);
            cost.push(if p == 2.0 {
                d2
            } else {
                pow_abs(libm::sqrt(d2), p)
            });
        }
    }
    cost
}

/// Exact `W_p` with Euclidean ground cost. One-dimensional clouds use the
/// sorted coupling, equal sizes an optimal assignment, and anything else
/// a min-cost flow.
pub fn wasserstein(x: &PointCloud, y: &PointCloud, p: f64) -> Result<f64> {
    same_dim(x, y)?;
    non_empty(x)?;
    non_empty(y)?;
    check_order(p)?;
    let wp = if x.dim() == 1 {
        wasserstein_1d_pow(x.values(), y.values(), p)
    } else if x.len() == y.len() {
        let n = x.len();
        let cost = cost_matrix(x, y, p);
        let cols = assignment(&cost, n);
        cols.iter()
            .enumerate()
            .map(|(i, &j)| cost[i * n + j])
            .sum::<f64>()
            / n as f64
    } else {
        transport_cost(&cost_matrix(x, y, p), x.len(), y.len())
    };
    Ok(libm::pow(wp.max(0.0), 1.0 / p))
}

/// Draws a uniformly random unit direction in `R^dim`.
pub fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = libm::sqrt(v.iter().map(|a| a * a).sum::<f64>());
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Monte Carlo sliced `W_p` over `n_projections` random directions.
pub fn sliced_wasserstein<R: Rng + ?Sized>(
    x: &PointCloud,
    y: &PointCloud,
    n_projections: usize,
    p: f64,
    rng: &mut R,
) -> Result<f64> {
    same_dim(x, y)?;
    non_empty(x)?;
    non_empty(y)?;
    check_order(p)?;
    if n_projections == 0 {
        return Err(Error::config("n_projections must be >= 1"));
    }
    if x.dim() == 1 {
        // Every direction is +-1 and W_p is invariant under reflection.
        return wasserstein(x, y, p);
    }
    let mut acc = 0.0;
    for _ in 0..n_projections {
        let theta = random_direction(x.dim(), rng);
        let mut a = x.project(&theta);
        let mut b = y.project(&theta);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        acc += wasserstein_1d_pow_sorted(&a, &b, p);
    }
    Ok(libm::pow(acc / n_projections as f64, 1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;

    fn cloud1(v: &[f64]) -> PointCloud {
        PointCloud::new(1, v.to_vec()).unwrap()
    }

    #[test]
    fn single_pair_and_shift() {
        assert_eq!(
            wasserstein(&cloud1(&[0.0]), &cloud1(&[3.0]), 2.0).unwrap(),
            3.0
        );
        let w = wasserstein(&cloud1(&[0.0, 1.0]), &cloud1(&[2.0, 3.0]), 1.0).unwrap();
        assert!((w - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_is_zero() {
        let x = PointCloud::new(2, vec![0.0, 1.0, 2.0, -1.0, 0.5, 0.5]).unwrap();
        assert_eq!(wasserstein(&x, &x, 2.0).unwrap(), 0.0);
        let mut rng = crate::rng::StreamRng::seed_from_u64(1);
        assert_eq!(sliced_wasserstein(&x, &x, 20, 2.0, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let x = PointCloud::new(2, vec![0.0, 1.0]).unwrap();
        let y = cloud1(&[0.0]);
        assert!(matches!(
            wasserstein(&x, &y, 2.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sliced_matches_exact_in_one_dimension() {
        let x = cloud1(&[0.3, -1.2, 2.0, 0.1]);
        let y = cloud1(&[1.0, 0.0, 5.0]);
        let mut rng = crate::rng::StreamRng::seed_from_u64(9);
        assert_eq!(
            sliced_wasserstein(&x, &y, 7, 2.0, &mut rng).unwrap(),
            wasserstein(&x, &y, 2.0).unwrap()
        );
    }

    #[test]
    fn unit_directions() {
        let mut rng = crate::rng::StreamRng::seed_from_u64(3);
        for _ in 0..20 {
            let d = random_direction(3, &mut rng);
            let n: f64 = d.iter().map(|a| a * a).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
