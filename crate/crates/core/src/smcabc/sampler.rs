use alloc::vec::Vec;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::kernel::{move_particle, MoveContext};
use super::weights::{ess, next_epsilon, normalize, systematic_indices};
use super::{Particle, Prior, SmcConfig};
use crate::distances::{Discrepancy, PointCloud};
use crate::exec::Executor;
use crate::linalg::cholesky_jittered;
use crate::rng::{domain, StreamKey};
use crate::simulator::Simulator;
use crate::{Error, Result};

/// One line of the sampler trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    /// `None` stands for the initial infinite tolerance.
    pub epsilon: Option<f64>,
    pub ess: f64,
    pub resampled: bool,
    pub moves: u32,
    pub accepted: u32,
    pub outside_prior: u32,
    pub capped: u32,
    pub acceptance_rate: Option<f64>,
    pub stagnated: bool,
    pub alive: usize,
    /// Cumulative simulated rows.
    pub simulations: u64,
}

/// Complete sampler state after an iteration; enough to resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmcState {
    pub iteration: u32,
    pub epsilon: Option<f64>,
    pub particles: Vec<Particle>,
    pub simulations: u64,
    pub stagnations: u32,
    pub records: Vec<IterationRecord>,
}

impl SmcState {
    pub fn epsilon_value(&self) -> f64 {
        self.epsilon.unwrap_or(f64::INFINITY)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.weight).collect()
    }

    pub fn thetas(&self) -> Vec<Vec<f64>> {
        self.particles.iter().map(|p| p.theta.clone()).collect()
    }

    /// Weighted posterior mean per parameter.
    pub fn posterior_mean(&self) -> Vec<f64> {
        let d = self.particles.first().map_or(0, |p| p.theta.len());
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        (0..d)
            .map(|j| {
                self.particles
                    .iter()
                    .map(|p| p.weight * p.theta[j])
                    .sum::<f64>()
                    / total
            })
            .collect()
    }

    /// Weighted quantile `q` of parameter `j`.
    pub fn posterior_quantile(&self, j: usize, q: f64) -> f64 {
        let xs: Vec<f64> = self.particles.iter().map(|p| p.theta[j]).collect();
        crate::stats::weighted_quantile(&xs, &self.weights(), q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Budget,
    EpsilonTarget,
    Stagnation,
    /// The observer asked to stop (wall clock, signal); the state is resumable.
    Interrupted,
}

/// Called after every completed iteration, including initialization.
/// Returning `false` stops the run.
pub trait Observer {
    fn after_iteration(&mut self, state: &SmcState) -> bool;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoObserver;

impl Observer for NoObserver {
    fn after_iteration(&mut self, _: &SmcState) -> bool {
        true
    }
}

impl<F: FnMut(&SmcState) -> bool> Observer for F {
    fn after_iteration(&mut self, state: &SmcState) -> bool {
        self(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmcRun {
    pub state: SmcState,
    pub stop: StopReason,
}

/// Lower Cholesky factor of `2.38² / d` times the weighted covariance of
/// the particle parameters. A tiny floor relative to the prior width keeps
/// a collapsed population movable.
pub fn proposal_cholesky(particles: &[Particle], prior: &Prior) -> Result<Vec<f64>> {
    let d = prior.dim();
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| particles.iter().map(|p| p.weight * p.theta[j]).sum::<f64>() / total)
        .collect();
    let scale = 2.38 * 2.38 / d as f64;
    let mut cov = alloc::vec![0.0; d * d];
    for p in particles {
        let w = p.weight / total;
        if w == 0.0 {
            continue;
        }
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] += scale * w * (p.theta[a] - mean[a]) * (p.theta[b] - mean[b]);
            }
        }
    }
    for j in 0..d {
        let width = prior.upper[j] - prior.lower[j];
        cov[j * d + j] += 1e-18 * width * width;
    }
    cholesky_jittered(&cov, d)
}

fn check_problem<S: Simulator + ?Sized>(
    prior: &Prior,
    simulator: &S,
    observed: &PointCloud,
    config: &SmcConfig,
) -> Result<()> {
    config.validate()?;
    prior.validate()?;
    if prior.dim() != simulator.dim_theta() {
        return Err(Error::DimensionMismatch {
            left: prior.dim(),
            right: simulator.dim_theta(),
        });
    }
    if observed.dim() != simulator.qoi_labels().len() {
        return Err(Error::DimensionMismatch {
            left: observed.dim(),
            right: simulator.qoi_labels().len(),
        });
    }
    Ok(())
}

/// Draws the initial population from the prior (iteration 0, `ε = ∞`).
pub fn initialize<S, E>(
    prior: &Prior,
    simulator: &S,
    discrepancy: &Discrepancy,
    config: &SmcConfig,
    seed: u64,
    exec: &E,
) -> Result<SmcState>
where
    S: Simulator + ?Sized,
    E: Executor,
{
    let n = config.n_particles;
    let key = StreamKey::new(seed, domain::SMC_INIT);
    let particles: Result<Vec<Particle>> = exec
        .map(n, |i| {
            let mut rng = key.stream(0, i as u32);
            let theta = prior.sample(&mut rng);
            let sim = simulator.simulate(&theta, config.sims_per_param, rng.next_u64())?;
            let distance = discrepancy.distance(&sim, &mut rng)?;
            Ok(Particle {
                theta,
                weight: 1.0 / n as f64,
                distance,
                sim,
            })
        })
        .into_iter()
        .collect();
    let particles = particles?;
    let simulations = (n * config.sims_per_param) as u64;
    let record = IterationRecord {
        iteration: 0,
        epsilon: None,
        ess: n as f64,
        resampled: false,
        moves: 0,
        accepted: 0,
        outside_prior: 0,
        capped: 0,
        acceptance_rate: None,
        stagnated: false,
        alive: n,
        simulations,
    };
    Ok(SmcState {
        iteration: 0,
        epsilon: None,
        particles,
        simulations,
        stagnations: 0,
        records: alloc::vec![record],
    })
}

/// Runs the sampler from the prior, or continues from `resume`.
///
/// Random streams are keyed by `(seed, iteration, particle)`, so a resumed
/// run and a run on any number of threads reproduce the uninterrupted
/// sequential trace.
#[allow(clippy::too_many_arguments)]
pub fn run_smcabc<S, E, O>(
    prior: &Prior,
    simulator: &S,
    observed: &PointCloud,
    config: &SmcConfig,
    seed: u64,
    exec: &E,
    observer: &mut O,
    resume: Option<SmcState>,
) -> Result<SmcRun>
where
    S: Simulator + ?Sized,
    E: Executor,
    O: Observer + ?Sized,
{
    check_problem(prior, simulator, observed, config)?;
    let discrepancy = Discrepancy::new(config.distance.clone(), observed)?;
    let mut state = match resume {
        Some(s) => {
            if s.particles.len() != config.n_particles {
                return Err(Error::config("resume state has a different particle count"));
            }
            s
        }
        None => {
            let s = initialize(prior, simulator, &discrepancy, config, seed, exec)?;
            if !observer.after_iteration(&s) {
                return Ok(SmcRun {
                    state: s,
                    stop: StopReason::Interrupted,
                });
            }
            s
        }
    };
    let n = config.n_particles;
    let move_key = StreamKey::new(seed, domain::SMC_MOVE);
    let resample_key = StreamKey::new(seed, domain::SMC_RESAMPLE);

    loop {
        if state.simulations >= config.budget {
            return Ok(SmcRun {
                state,
                stop: StopReason::Budget,
            });
        }
        if state.stagnations >= 2 {
            return Ok(SmcRun {
                state,
                stop: StopReason::Stagnation,
            });
        }
        let eps_prev = state.epsilon_value();
        if let Some(target) = config.epsilon_target {
            if eps_prev <= target {
                return Ok(SmcRun {
                    state,
                    stop: StopReason::EpsilonTarget,
                });
            }
        }
        let distances: Vec<f64> = state.particles.iter().map(|p| p.distance).collect();
        let mut weights = state.weights();
        let mut update = next_epsilon(&distances, &weights, eps_prev, config.alpha)?;
        if let Some(target) = config.epsilon_target {
            if update.epsilon < target {
                update.epsilon = target;
                update.stagnated = false;
            }
        }
        if update.epsilon >= eps_prev {
            return Ok(SmcRun {
                state,
                stop: StopReason::Stagnation,
            });
        }
        let eps = update.epsilon;
        let iteration = state.iteration + 1;

        for (w, d) in weights.iter_mut().zip(&distances) {
            if *d >= eps {
                *w = 0.0;
            }
        }
        normalize(&mut weights)?;
        for (p, w) in state.particles.iter_mut().zip(&weights) {
            p.weight = *w;
        }
        let mut current_ess = ess(&weights)?;
        let resampled = current_ess < config.ess_resample_fraction * n as f64;
        if resampled {
            let u: f64 = resample_key.stream(iteration, 0).random();
            let idx = systematic_indices(&weights, u)?;
            let mut next: Vec<Particle> = idx.iter().map(|&i| state.particles[i].clone()).collect();
            for p in next.iter_mut() {
                p.weight = 1.0 / n as f64;
            }
            state.particles = next;
            current_ess = n as f64;
        }

        let chol = proposal_cholesky(&state.particles, prior)?;
        let ctx = MoveContext {
            epsilon: eps,
            proposal_chol: &chol,
            prior,
            simulator,
            discrepancy: &discrepancy,
            sims_per_param: config.sims_per_param,
            hits: config.hits,
            race_cap: config.race_cap(),
        };
        let particles = &state.particles;
        let outcomes: Vec<Result<Option<super::MoveOutcome>>> = exec.map(n, |i| {
            let p = &particles[i];
            if p.weight <= 0.0 {
                return Ok(None);
            }
            let mut rng = move_key.stream(iteration, i as u32);
            move_particle(p, &ctx, &mut rng).map(Some)
        });

        let (mut moves, mut accepted, mut outside, mut capped, mut datasets) =
            (0u32, 0u32, 0u32, 0u32, 0u64);
        let mut next = Vec::with_capacity(n);
        for (i, o) in outcomes.into_iter().enumerate() {
            match o? {
                Some(o) => {
                    moves += 1;
                    accepted += u32::from(o.accepted);
                    outside += u32::from(o.outside_prior);
                    capped += u32::from(o.capped);
                    datasets += o.datasets;
                    next.push(o.particle);
                }
                None => next.push(state.particles[i].clone()),
            }
        }
        state.particles = next;
        state.simulations += datasets * config.sims_per_param as u64;
        state.iteration = iteration;
        state.epsilon = Some(eps);
        state.stagnations = if update.stagnated {
            state.stagnations + 1
        } else {
            0
        };
        let alive = state.particles.iter().filter(|p| p.weight > 0.0).count();
        state.records.push(IterationRecord {
            iteration,
            epsilon: Some(eps),
            ess: current_ess,
            resampled,
            moves,
            accepted,
            outside_prior: outside,
            capped,
            acceptance_rate: (moves > 0).then(|| f64::from(accepted) / f64::from(moves)),
            stagnated: update.stagnated,
            alive,
            simulations: state.simulations,
        });
        if !observer.after_iteration(&state) {
            return Ok(SmcRun {
                state,
                stop: StopReason::Interrupted,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::{DistanceKind, DistanceSpec};
    use crate::exec::Sequential;
    use crate::simulator::ToyGaussian;
    use alloc::string::ToString;
    use alloc::vec;

    fn toy_problem() -> (Prior, ToyGaussian, PointCloud) {
        let toy = ToyGaussian::new(2).unwrap();
        let obs = toy.simulate(&[0.5, -0.5], 20, 99).unwrap();
        let prior = Prior::new(
            vec!["a".to_string(), "b".to_string()],
            vec![-3.0, -3.0],
            vec![3.0, 3.0],
        )
        .unwrap();
        (prior, toy, obs)
    }

    fn small_config(budget: u64) -> SmcConfig {
        SmcConfig {
            n_particles: 32,
            sims_per_param: 20,
            budget,
            ..Default::default()
        }
    }

    #[test]
    fn init_only_budget_gives_one_iteration() {
        let (prior, toy, obs) = toy_problem();
        let cfg = small_config(32 * 20);
        let run = run_smcabc(
            &prior,
            &toy,
            &obs,
            &cfg,
            1,
            &Sequential,
            &mut NoObserver,
            None,
        )
        .unwrap();
        assert_eq!(run.state.records.len(), 1);
        assert_eq!(run.stop, StopReason::Budget);
    }

    #[test]
    fn trace_invariants() {
        let (prior, toy, obs) = toy_problem();
        let cfg = small_config(40_000);
        let run = run_smcabc(
            &prior,
            &toy,
            &obs,
            &cfg,
            3,
            &Sequential,
            &mut NoObserver,
            None,
        )
        .unwrap();
        let recs = &run.state.records;
        assert!(recs.len() > 2);
        for w in recs.windows(2) {
            assert!(w[1].epsilon.unwrap() < w[0].epsilon.unwrap_or(f64::INFINITY));
            assert!(w[1].simulations >= w[0].simulations);
        }
        let eps = run.state.epsilon_value();
        for p in &run.state.particles {
            if p.weight > 0.0 {
                assert!(p.distance < eps);
            }
        }
        let total: f64 = run.state.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        // budget accounting: sims = init + moves; every dataset has M' rows
        assert_eq!(run.state.simulations % 20, 0);
        assert!(run.state.simulations >= cfg.budget);
    }

    #[test]
    fn resume_reproduces_trace() {
        let (prior, toy, obs) = toy_problem();
        let cfg = small_config(20_000);
        let full = run_smcabc(
            &prior,
            &toy,
            &obs,
            &cfg,
            5,
            &Sequential,
            &mut NoObserver,
            None,
        )
        .unwrap();
        let mut stop_after = |s: &SmcState| s.iteration < 2;
        let part = run_smcabc(
            &prior,
            &toy,
            &obs,
            &cfg,
            5,
            &Sequential,
            &mut stop_after,
            None,
        )
        .unwrap();
        assert_eq!(part.stop, StopReason::Interrupted);
        let resumed = run_smcabc(
            &prior,
            &toy,
            &obs,
            &cfg,
            5,
            &Sequential,
            &mut NoObserver,
            Some(part.state),
        )
        .unwrap();
        assert_eq!(resumed, full);
    }

    #[test]
    fn distance_kind_does_not_change_schema() {
        let (prior, toy, obs) = toy_problem();
        let mut cfg = small_config(5_000);
        cfg.distance = DistanceSpec::new(DistanceKind::Kl);
        let run = run_smcabc(
            &prior,
            &toy,
            &obs,
            &cfg,
            2,
            &Sequential,
            &mut NoObserver,
            None,
        )
        .unwrap();
        assert!(!run.state.records.is_empty());
    }

    #[test]
    fn epsilon_target_stops() {
        let (prior, toy, obs) = toy_problem();
        let mut cfg = small_config(1_000_000);
        cfg.epsilon_target = Some(1.0);
        let run = run_smcabc(
            &prior,
            &toy,
            &obs,
            &cfg,
            2,
            &Sequential,
            &mut NoObserver,
            None,
        )
        .unwrap();
        assert_eq!(run.stop, StopReason::EpsilonTarget);
        assert_eq!(run.state.epsilon, Some(1.0));
    }
}
