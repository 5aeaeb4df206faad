//! Agent-based neuron growth.
//!
//! A neuron is a soma plus a tree of cylindrical agents. Tip agents with
//! resource above the threshold elongate along a correlated, biased random
//! walk and branch with a fixed per-step probability. The two models differ
//! in who consumes resource and how a branch event distributes it; see
//! [`Model`].

mod field;
mod params;
mod step;
mod tree;

pub use field::{walk_direction, GuidanceField};
pub use params::GrowthParams;
pub use step::{
    apply_updates, is_active, plan_agent, plan_step, split_long_agent, step, step_model1,
    step_model2, AgentUpdate, BranchEvent, Model, StepReport,
};
pub use tree::{
    init_neuron, Agent, AgentId, Daughters, InitialNeurite, NeuronTree, SomaSpec, TreeViolation,
};

use serde::{Deserialize, Serialize};

use crate::rng::{domain, StreamKey};
use crate::{Error, Result, Vec3};

/// Everything needed to grow one neuron except the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSetup {
    pub model: Model,
    pub soma: SomaSpec,
    pub params: GrowthParams,
    pub field: GuidanceField,
}

impl ModelSetup {
    /// Built-in defaults: basal soma with a downward cue for Model 1, a
    /// single apical trunk with an upward cue for Model 2.
    pub fn preset(model: Model) -> Self {
        match model {
            Model::Model1 => ModelSetup {
                model,
                soma: SomaSpec::basal_default(),
                params: GrowthParams::model1_default(),
                field: GuidanceField::ConstantGradient {
                    gradient: Vec3::new(0.0, 0.0, -1.0),
                },
            },
            Model::Model2 => ModelSetup {
                model,
                soma: SomaSpec::apical_default(),
                params: GrowthParams::model2_default(),
                field: GuidanceField::ConstantGradient {
                    gradient: Vec3::new(0.0, 0.0, 1.0),
                },
            },
        }
    }

    pub fn simulate(&self, seed: u64) -> Result<NeuronTree> {
        simulate(self.model, &self.soma, &self.params, &self.field, seed)
    }
}

/// Grows one neuron for `ceil(t_end / dt)` steps. Fully determined by its
/// arguments.
pub fn simulate(
    model: Model,
    soma: &SomaSpec,
    params: &GrowthParams,
    field: &GuidanceField,
    seed: u64,
) -> Result<NeuronTree> {
    params.validate()?;
    let mut tree = init_neuron(soma, params.stub_length, params.diameter, model.type_code())?;
    let key = StreamKey::new(seed, domain::GROWTH);
    for s in 0..params.num_steps() {
        step(&mut tree, model, params, field, &key, s)?;
        if tree.agents.len() > params.max_agents {
            return Err(Error::GrowthLimit(params.max_agents));
        }
    }
    Ok(tree)
}
