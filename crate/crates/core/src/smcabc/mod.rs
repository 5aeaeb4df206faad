//! Adaptive sequential Monte Carlo ABC with an r-hit move kernel.

mod kernel;
mod posterior;
mod sampler;
mod weights;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use kernel::{move_particle, propose, race, MoveContext, MoveOutcome, RaceResult, Side};
pub use posterior::{
    kde, kde_marginals, pair_neurons, predictive_check, weighted_draws, Histogram, Kde, Marginal,
    Pair, PredictiveCheck, QoiComparison,
};
pub use sampler::{
    proposal_cholesky, run_smcabc, IterationRecord, NoObserver, Observer, SmcRun, SmcState,
    StopReason,
};
pub use weights::{ess, next_epsilon, normalize, systematic_indices, EpsilonUpdate};

use crate::distances::{DistanceSpec, PointCloud};
use crate::{Error, Result};

/// Independent uniform priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prior {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Prior {
    pub fn new(names: Vec<String>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let p = Prior {
            names,
            lower,
            upper,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.names.len() != self.lower.len() || self.lower.len() != self.upper.len() {
            return Err(Error::config(
                "prior names and bounds must have equal length",
            ));
        }
        if self.names.is_empty() {
            return Err(Error::config("prior needs at least one parameter"));
        }
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::config(alloc::format!(
                    "prior bounds for {} must satisfy lo < hi",
                    self.names[j]
                )));
            }
        }
        Ok(())
    }

    /// Uniform box for the growth parameters `(p_bra, R, v)`.
    pub fn growth(lower: [f64; 3], upper: [f64; 3]) -> Self {
        Prior {
            names: ["p_bra", "R", "v"].iter().map(|s| s.to_string()).collect(),
            lower: lower.to_vec(),
            upper: upper.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((t, lo), hi)| t >= lo && t <= hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub theta: Vec<f64>,
    pub weight: f64,
    pub distance: f64,
    /// The simulated dataset the distance was computed from.
    pub sim: PointCloud,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcConfig {
    pub n_particles: usize,
    pub alpha: f64,
    /// Rows (neurons) simulated per parameter evaluation.
    pub sims_per_param: usize,
    /// Total simulated rows allowed; the iteration that crosses it completes.
    pub budget: u64,
    pub distance: DistanceSpec,
    pub hits: u32,
    pub ess_resample_fraction: f64,
    pub epsilon_target: Option<f64>,
    /// Stop after this many seconds; enforced by the caller's observer.
    pub wall_clock_cap: Option<f64>,
    /// Datasets allowed per side of one race; defaults to `10 · sims_per_param`.
    pub race_cap: Option<u32>,
}

impl Default for SmcConfig {
    fn default() -> Self {
        SmcConfig {
            n_particles: 128,
            alpha: 0.6,
            sims_per_param: 10,
            budget: 200_000,
            distance: DistanceSpec::default(),
            hits: 2,
            ess_resample_fraction: 0.5,
            epsilon_target: None,
            wall_clock_cap: None,
            race_cap: None,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::config("n_particles must be >= 2"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha must lie in (0, 1)"));
        }
        if self.sims_per_param == 0 {
            return Err(Error::config("sims_per_param must be >= 1"));
        }
        if self.hits < 2 {
            return Err(Error::config(
                "hits must be >= 2 for the (N-1)/(N'-1) acceptance ratio",
            ));
        }
        if !(self.ess_resample_fraction >= 0.0 && self.ess_resample_fraction <= 1.0) {
            return Err(Error::config("ess_resample_fraction must lie in [0, 1]"));
        }
        if self.race_cap == Some(0) {
            return Err(Error::config("race_cap must be >= 1"));
        }
        if let Some(t) = self.wall_clock_cap {
            if !(t > 0.0) {
                return Err(Error::config("wall_clock_cap must be > 0"));
            }
        }
        if self.epsilon_target.is_some_and(|e| e.is_nan()) {
            return Err(Error::config("epsilon_target must be a number"));
        }
        self.distance.validate()
    }

    pub fn race_cap(&self) -> u32 {
        self.race_cap
            .unwrap_or((10 * self.sims_per_param).min(u32::MAX as usize) as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn prior_checks() {
        assert!(Prior::new(vec!["a".into()], vec![1.0], vec![1.0]).is_err());
        let p = Prior::new(
            vec!["a".into(), "b".into()],
            vec![0.0, -1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!(p.contains(&[0.5, 0.0]));
        assert!(!p.contains(&[1.5, 0.0]));
        let mut rng = <crate::rng::StreamRng as rand::SeedableRng>::seed_from_u64(0);
        for _ in 0..100 {
            assert!(p.contains(&p.sample(&mut rng)));
        }
    }

    #[test]
    fn config_checks() {
        assert!(SmcConfig::default().validate().is_ok());
        assert_eq!(SmcConfig::default().race_cap(), 100);
        let bad = SmcConfig {
            alpha: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SmcConfig {
            n_particles: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
