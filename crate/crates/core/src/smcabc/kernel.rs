use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Particle, Prior};
use crate::distances::Discrepancy;
use crate::simulator::Simulator;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Proposed,
    Current,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaceResult {
    /// Datasets drawn under the proposal until its last hit.
    pub n_proposed: u32,
    /// Datasets drawn under the current parameter until its last hit.
    pub n_current: u32,
    pub capped: bool,
    /// The proposal race was abandoned once it could no longer be accepted.
    pub abandoned: bool,
}

impl RaceResult {
    pub fn datasets(&self) -> u64 {
        u64::from(self.n_proposed) + u64::from(self.n_current)
    }

    /// `min{1, (N - 1) / (N' - 1)}`; zero for capped or abandoned races.
    pub fn acceptance_probability(&self) -> f64 {
        if self.capped || self.abandoned {
            return 0.0;
        }
        let num = f64::from(self.n_current) - 1.0;
        let den = f64::from(self.n_proposed) - 1.0;
        (num / den).min(1.0)
    }
}

/// Runs the two `hits`-hit races, drawing one dataset at a time and
/// alternating sides with the proposal first. A side that would need more
/// than `cap` datasets ends the race as capped.
///
/// With `u = Some(u)` the caller accepts iff `u < (N - 1) / (N' - 1)`, so
/// once the current side is finished the proposal is abandoned as soon as
/// `N' - 1 >= (N - 1) / u`. The accept decision is unchanged; only the
/// datasets that could not alter it are skipped.
pub fn race<F>(hits: u32, cap: u32, u: Option<f64>, mut draw: F) -> Result<RaceResult>
where
    F: FnMut(Side) -> Result<bool>,
{
    let (mut np, mut hp, mut nc, mut hc) = (0u32, 0u32, 0u32, 0u32);
    let done = |np: u32, nc: u32, capped: bool, abandoned: bool| {
        Ok(RaceResult {
            n_proposed: np,
            n_current: nc,
            capped,
            abandoned,
        })
    };
    loop {
        let p_open = hp < hits;
        let c_open = hc < hits;
        if !p_open && !c_open {
            return done(np, nc, false, false);
        }
        if p_open && !c_open {
            if let Some(u) = u {
                if f64::from(np) - 1.0 >= (f64::from(nc) - 1.0) / u {
                    return done(np, nc, false, true);
                }
            }
        }
        if p_open {
            if np >= cap {
                return done(np, nc, true, false);
            }
            np += 1;
            if draw(Side::Proposed)? {
                hp += 1;
            }
        }
        if c_open {
            if nc >= cap {
                return done(np, nc, true, false);
            }
            nc += 1;
            if draw(Side::Current)? {
                hc += 1;
            }
        }
    }
}

/// Everything a move needs besides the particle and its random stream.
pub struct MoveContext<'a, S: Simulator + ?Sized> {
    pub epsilon: f64,
    /// Lower Cholesky factor of the proposal covariance.
    pub proposal_chol: &'a [f64],
    pub prior: &'a Prior,
    pub simulator: &'a S,
    pub discrepancy: &'a Discrepancy,
    pub sims_per_param: usize,
    pub hits: u32,
    pub race_cap: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveOutcome {
    pub particle: Particle,
    pub accepted: bool,
    pub outside_prior: bool,
    pub capped: bool,
    /// Datasets simulated by this move.
    pub datasets: u64,
}

pub fn propose<R: Rng + ?Sized>(theta: &[f64], chol: &[f64], rng: &mut R) -> Vec<f64> {
    let d = theta.len();
    let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    (0..d)
        .map(|i| theta[i] + (0..=i).map(|k| chol[i * d + k] * z[k]).sum::<f64>())
        .collect()
}

/// One r-hit move of an alive particle. On acceptance the particle takes
/// the proposal and the dataset of the proposal's last hit.
pub fn move_particle<S, R>(
    particle: &Particle,
    ctx: &MoveContext<'_, S>,
    rng: &mut R,
) -> Result<MoveOutcome>
where
    S: Simulator + ?Sized,
    R: Rng + ?Sized,
{
    let proposal = propose(&particle.theta, ctx.proposal_chol, rng);
    if !ctx.prior.contains(&proposal) {
        return Ok(MoveOutcome {
            particle: particle.clone(),
            accepted: false,
            outside_prior: true,
            capped: false,
            datasets: 0,
        });
    }
    let u: f64 = rng.random();
    let mut last_hit = None;
    let result = race(ctx.hits, ctx.race_cap, Some(u), |side| {
        let theta = match side {
            Side::Proposed => &proposal,
            Side::Current => &particle.theta,
        };
        let sim = ctx
            .simulator
            .simulate(theta, ctx.sims_per_param, rng.next_u64())?;
        let d = ctx.discrepancy.distance(&sim, rng)?;
        let hit = d < ctx.epsilon;
        if hit && side == Side::Proposed {
            last_hit = Some((sim, d));
        }
        Ok(hit)
    })?;
    let accepted = !result.capped && u < result.acceptance_probability();
    let particle = match (accepted, last_hit) {
        (true, Some((sim, distance))) => Particle {
            theta: proposal,
            weight: particle.weight,
            distance,
            sim,
        },
        _ => particle.clone(),
    };
    Ok(MoveOutcome {
        particle,
        accepted,
        outside_prior: false,
        capped: result.capped,
        datasets: result.datasets(),
    })
}
