use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Agent, GrowthParams};
use crate::Vec3;

/// Static guidance cue. Only the gradient direction matters to the walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GuidanceField {
    /// φ(x) = g · x.
    ConstantGradient { gradient: Vec3 },
    /// φ(x) = -amplitude · |x - source|, an attractant peaking at `source`.
    PointSource { source: Vec3, amplitude: f64 },
}

impl Default for GuidanceField {
    fn default() -> Self {
        GuidanceField::ConstantGradient {
            gradient: Vec3::new(0.0, 0.0, 1.0),
        }
    }
}

impl GuidanceField {
    pub fn gradient(&self, x: Vec3) -> Vec3 {
        match *self {
            GuidanceField::ConstantGradient { gradient } => gradient,
            GuidanceField::PointSource { source, amplitude } => {
                let d = source - x;
                match d.normalized() {
                    Some(u) => u * amplitude,
                    None => Vec3::ZERO,
                }
            }
        }
    }
}

/// Correlated, biased random walk direction for an elongating agent.
///
/// Draws exactly three uniform variates `u` and maps them to `2u - 1`.
/// Returns the current orientation when the weighted sum vanishes.
pub fn walk_direction<R: Rng + ?Sized>(
    agent: &Agent,
    params: &GrowthParams,
    field: &GuidanceField,
    rng: &mut R,
) -> Vec3 {
    let random = Vec3::new(
        2.0 * rng.random::<f64>() - 1.0,
        2.0 * rng.random::<f64>() - 1.0,
        2.0 * rng.random::<f64>() - 1.0,
    );
    let persistence = agent.direction().unwrap_or(Vec3::ZERO);
    let midpoint = (agent.start + agent.end) * 0.5;
    let guidance = field.gradient(midpoint).normalized().unwrap_or(Vec3::ZERO);
    let y = random * params.w_random
        + persistence * params.w_persistence
        + guidance * params.w_guidance;
    y.normalized().unwrap_or(persistence)
}
