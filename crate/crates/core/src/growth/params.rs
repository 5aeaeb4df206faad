use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Parameters of the resource-driven growth rules.
///
/// `speed` is in μm per time unit; a step displaces a tip by `speed * dt`.
/// `branching_probability` and `resource_consumption` apply per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthParams {
    pub branching_probability: f64,
    pub resource_consumption: f64,
    pub speed: f64,
    pub resource_threshold: f64,
    /// Resource given to new side branches (Model 2 only).
    pub side_branch_resource: f64,
    pub w_random: f64,
    pub w_persistence: f64,
    pub w_guidance: f64,
    pub dt: f64,
    pub t_end: f64,
    pub max_agent_length: f64,
    pub bifurcation_angle: f64,
    pub stub_length: f64,
    pub diameter: f64,
    /// Simulations growing beyond this many agents are aborted.
    pub max_agents: usize,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams {
            branching_probability: 0.038,
            resource_consumption: 0.71e-3,
            speed: 100.0,
            resource_threshold: 0.0,
            side_branch_resource: 0.0036,
            w_random: 0.3,
            w_persistence: 0.6,
            w_guidance: 0.1,
            dt: 0.04,
            t_end: 20.0,
            max_agent_length: 10.0,
            bifurcation_angle: 0.5,
            stub_length: 1.0,
            diameter: 1.0,
            max_agents: 500_000,
        }
    }
}

impl GrowthParams {
    /// Defaults for the symmetric bifurcation model (basal dendrites).
    pub fn model1_default() -> Self {
        GrowthParams {
            branching_probability: 0.006,
            resource_consumption: 0.85e-3,
            speed: 50.0,
            ..Default::default()
        }
    }

    /// Defaults for the asymmetric side-branch model (apical dendrites).
    pub fn model2_default() -> Self {
        GrowthParams::default()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.branching_probability,
            self.resource_consumption,
            self.speed,
            self.resource_threshold,
            self.side_branch_resource,
            self.w_random,
            self.w_persistence,
            self.w_guidance,
            self.dt,
            self.t_end,
            self.max_agent_length,
            self.bifurcation_angle,
            self.stub_length,
            self.diameter,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("growth parameters"));
        }
        if !(0.0..=1.0).contains(&self.branching_probability) {
            return Err(Error::config("branching_probability must lie in [0, 1]"));
        }
        if self.speed < 0.0 {
            return Err(Error::config("speed must be non-negative"));
        }
        if self.resource_consumption < 0.0 {
            return Err(Error::config("resource_consumption must be non-negative"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("dt must be positive"));
        }
        if self.t_end < self.dt {
            return Err(Error::config("t_end must be at least dt"));
        }
        if !(self.max_agent_length > 0.0) {
            return Err(Error::config("max_agent_length must be positive"));
        }
        if !(self.stub_length > 0.0) {
            return Err(Error::config("stub_length must be positive"));
        }
        if !(self.diameter > 0.0) {
            return Err(Error::config("diameter must be positive"));
        }
        Ok(())
    }

    /// Number of steps, `ceil(t_end / dt)`.
    pub fn num_steps(&self) -> u32 {
        libm::ceil(self.t_end / self.dt - 1e-9) as u32
    }

    pub fn step_length(&self) -> f64 {
        self.speed * self.dt
    }
}
