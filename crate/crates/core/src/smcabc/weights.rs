use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Effective sample size `1 / Σ w̃²` of the normalized weights.
pub fn ess(weights: &[f64]) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroWeights);
    }
    let sq: f64 = weights.iter().map(|w| (w / total) * (w / total)).sum();
    Ok(1.0 / sq)
}

pub fn normalize(weights: &mut [f64]) -> Result<()> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroWeights);
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonUpdate {
    pub epsilon: f64,
    /// ESS after reweighting with the new tolerance.
    pub ess: f64,
    /// The target ESS decay could not be met.
    pub stagnated: bool,
}

/// Next tolerance of the adaptive schedule.
///
/// Among the distinct distances `u_1 < … < u_K` of particles alive under
/// `eps_prev`, a tolerance in `(u_k, u_{k+1}]` keeps exactly the particles
/// with `d <= u_k`. The largest such tolerance whose ESS does not exceed
/// `alpha · ESS_current` is returned as `u_{k+1}`. When even keeping only
/// `d <= u_1` leaves the ESS above target, the tolerance drops to just
/// above `u_1` and the update is flagged as stagnated.
pub fn next_epsilon(
    distances: &[f64],
    weights: &[f64],
    eps_prev: f64,
    alpha: f64,
) -> Result<EpsilonUpdate> {
    if distances.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            left: distances.len(),
            right: weights.len(),
        });
    }
    let alive = |d: f64, w: f64| w > 0.0 && d < eps_prev;
    let mut order: Vec<usize> = (0..distances.len())
        .filter(|&i| alive(distances[i], weights[i]))
        .collect();
    if order.is_empty() {
        return Err(Error::NoParticleBelowEpsilon(eps_prev));
    }
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
    let current: Vec<f64> = (0..weights.len())
        .map(|i| {
            if alive(distances[i], weights[i]) {
                weights[i]
            } else {
                0.0
            }
        })
        .collect();
    let target = alpha * ess(&current)?;

    // Cumulative ESS over growing prefixes, evaluated at the end of each
    // block of equal distances.
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut best: Option<(usize, f64)> = None;
    let mut first_block: Option<f64> = None;
    let mut i = 0;
    while i < order.len() {
        let d = distances[order[i]];
        let mut j = i;
        while j < order.len() && distances[order[j]] == d {
            let w = weights[order[j]];
            s1 += w;
            s2 += w * w;
            j += 1;
        }
        let e = s1 * s1 / s2;
        first_block.get_or_insert(e);
        if j < order.len() && e <= target {
            best = Some((j, e));
        }
        i = j;
    }
    match best {
        Some((next, e)) => Ok(EpsilonUpdate {
            epsilon: distances[order[next]],
            ess: e,
            stagnated: false,
        }),
        None => {
            let d0 = distances[order[0]];
            let bumped = d0 + 1e-12 * libm::fabs(d0).max(1e-300);
            Ok(EpsilonUpdate {
                epsilon: bumped.min(eps_prev),
                ess: first_block.unwrap_or(0.0),
                stagnated: true,
            })
        }
    }
}

/// Systematic resampling: offspring indices for a single uniform `u` in
/// `[0, 1)`. Particle `i` gets `floor(N·c_i - u) - floor(N·c_{i-1} - u)`
/// copies, with `c` the cumulative normalized weights.
pub fn systematic_indices(weights: &[f64], u: f64) -> Result<Vec<usize>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroWeights);
    }
    let n = weights.len();
    let mut out = Vec::with_capacity(n);
    let mut cum = 0.0;
    let mut k = 0;
    for (i, w) in weights.iter().enumerate() {
        cum += w / total;
        while k < n && (k as f64 + u) / (n as f64) < cum {
            out.push(i);
            k += 1;
        }
    }
    // Rounding can leave the last pointer unassigned.
    let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(n - 1);
    while out.len() < n {
        out.push(last);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn ess_examples() {
        assert_eq!(ess(&[1.0; 8]).unwrap(), 8.0);
        assert_eq!(ess(&[0.0, 3.0, 0.0]).unwrap(), 1.0);
        assert_eq!(ess(&[0.5, 0.5, 0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(ess(&[0.0, 0.0]), Err(Error::ZeroWeights));
    }

    #[test]
    fn epsilon_hand_enumeration() {
        let u = next_epsilon(&[1.0, 2.0, 3.0, 4.0], &[0.25; 4], f64::INFINITY, 0.5).unwrap();
        assert!(u.epsilon > 2.0 && u.epsilon <= 3.0);
        assert_eq!(u.ess, 2.0);
        assert!(!u.stagnated);
    }

    #[test]
    fn epsilon_all_equal_stagnates() {
        let u = next_epsilon(&[0.7; 5], &[0.2; 5], 1.0, 0.5).unwrap();
        assert!(u.stagnated);
        assert!(u.epsilon > 0.7 && u.epsilon - 0.7 < 1e-9);
        assert!((u.ess - 5.0).abs() < 1e-12);
    }

    #[test]
    fn epsilon_alpha_near_one() {
        let d: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let u = next_epsilon(&d, &[1.0; 100], 100.0, 0.999).unwrap();
        assert_eq!(u.epsilon, 99.0);
    }

    #[test]
    fn epsilon_needs_a_live_particle() {
        assert_eq!(
            next_epsilon(&[2.0, 3.0], &[0.5, 0.5], 1.0, 0.5),
            Err(Error::NoParticleBelowEpsilon(1.0))
        );
    }

    #[test]
    fn epsilon_ignores_dead_particles() {
        let u = next_epsilon(&[1.0, 2.0, 3.0, 0.1], &[0.25, 0.25, 0.5, 0.0], 10.0, 0.5).unwrap();
        // alive ESS is 8/3; keeping d <= 2 gives ESS 2 > 4/3, keeping d <= 1 gives 1
        assert_eq!(u.epsilon, 2.0);
        assert_eq!(u.ess, 1.0);
    }

    #[test]
    fn systematic_examples() {
        assert_eq!(
            systematic_indices(&[0.25; 4], 0.3).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(
            systematic_indices(&[0.0, 1.0, 0.0], 0.9).unwrap(),
            vec![1, 1, 1]
        );
        for u in [0.0, 0.2, 0.5, 0.99] {
            assert_eq!(
                systematic_indices(&[0.75, 0.25, 0.0, 0.0], u).unwrap(),
                vec![0, 0, 0, 1]
            );
        }
    }
}
