//! One time step of the two growth models.
//!
//! A step is split in two phases. Planning reads an immutable snapshot of
//! the tree and produces one [`AgentUpdate`] per active agent, drawing all
//! randomness from the agent's own `(agent id, step)` stream. Applying
//! sorts the updates by agent id and mutates the tree, so new agent ids do
//! not depend on the order in which agents were planned.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{walk_direction, AgentId, GrowthParams, GuidanceField, NeuronTree};
use crate::rng::StreamKey;
use crate::{Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Tips bifurcate symmetrically; daughters inherit the mother's resource.
    Model1,
    /// Every agent consumes resource; tips add a side branch with a fixed
    /// start resource and keep growing straight on.
    Model2,
}

impl Model {
    /// SWC structure type written for agents grown by this model.
    pub fn type_code(self) -> i32 {
        match self {
            Model::Model1 => 3,
            Model::Model2 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchEvent {
    /// Two daughters deviating to opposite sides.
    Bifurcation { left: Vec3, right: Vec3 },
    /// A continuation along the mother direction plus one side branch.
    SideBranch { continuation: Vec3, side: Vec3 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentUpdate {
    pub id: AgentId,
    pub resource: f64,
    /// New end point for elongating tips.
    pub end: Option<Vec3>,
    pub branch: Option<BranchEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepReport {
    pub elongations: usize,
    pub branchings: usize,
    pub resource_updates: usize,
    pub new_agents: usize,
}

/// Whether `id` acts this step under `model`, judged on the current state.
pub fn is_active(tree: &NeuronTree, model: Model, params: &GrowthParams, id: AgentId) -> bool {
    let a = tree.agent(id);
    if !(a.resource > params.resource_threshold) {
        return false;
    }
    match model {
        Model::Model1 => a.is_tip(),
        Model::Model2 => true,
    }
}

/// Plans the update of one agent, or `None` when it is idle.
pub fn plan_agent(
    tree: &NeuronTree,
    model: Model,
    params: &GrowthParams,
    field: &GuidanceField,
    key: &StreamKey,
    step: u32,
    id: AgentId,
) -> Option<AgentUpdate> {
    if !is_active(tree, model, params, id) {
        return None;
    }
    let agent = tree.agent(id);
    let resource = agent.resource - params.resource_consumption;
    if !agent.is_tip() {
        return Some(AgentUpdate {
            id,
            resource,
            end: None,
            branch: None,
        });
    }
    let mut rng = key.stream(id, step);
    let dir = walk_direction(agent, params, field, &mut rng);
    let end = agent.end + dir * params.step_length();
    let branch = if rng.random::<f64>() < params.branching_probability {
        let mother = (end - agent.start).normalized().unwrap_or(dir);
        let (e1, e2) = mother.orthonormal_basis();
        let phi = 2.0 * core::f64::consts::PI * rng.random::<f64>();
        let offset = e1 * libm::cos(phi) + e2 * libm::sin(phi);
        let (ca, sa) = (
            libm::cos(params.bifurcation_angle),
            libm::sin(params.bifurcation_angle),
        );
        Some(match model {
            Model::Model1 => BranchEvent::Bifurcation {
                left: mother * ca + offset * sa,
                right: mother * ca - offset * sa,
            },
            Model::Model2 => BranchEvent::SideBranch {
                continuation: mother,
                side: mother * ca + offset * sa,
            },
        })
    } else {
        None
    };
    Some(AgentUpdate {
        id,
        resource,
        end: Some(end),
        branch,
    })
}

/// Plans all agents in the given order.
pub fn plan_step(
    tree: &NeuronTree,
    model: Model,
    params: &GrowthParams,
    field: &GuidanceField,
    key: &StreamKey,
    step: u32,
    order: impl IntoIterator<Item = AgentId>,
) -> Vec<AgentUpdate> {
    order
        .into_iter()
        .filter_map(|id| plan_agent(tree, model, params, field, key, step, id))
        .collect()
}

/// Applies planned updates in ascending agent-id order.
pub fn apply_updates(
    tree: &mut NeuronTree,
    params: &GrowthParams,
    mut updates: Vec<AgentUpdate>,
) -> Result<StepReport> {
    updates.sort_by_key(|u| u.id);
    let mut report = StepReport::default();
    for u in updates {
        report.resource_updates += 1;
        let agent = tree.agent_mut(u.id);
        agent.resource = u.resource;
        let Some(end) = u.end else { continue };
        agent.end = end;
        let (tip_end, diameter, resource, type_code) =
            (agent.end, agent.diameter, agent.resource, agent.type_code);
        report.elongations += 1;
        if let Some(event) = u.branch {
            report.branchings += 1;
            let stub = params.stub_length;
            let (a, b, ra, rb) = match event {
                BranchEvent::Bifurcation { left, right } => (left, right, resource, resource),
                BranchEvent::SideBranch { continuation, side } => {
                    (continuation, side, resource, params.side_branch_resource)
                }
            };
            tree.push_agent(
                Some(u.id),
                tip_end,
                tip_end + a * stub,
                diameter,
                ra,
                type_code,
            )?;
            tree.push_agent(
                Some(u.id),
                tip_end,
                tip_end + b * stub,
                diameter,
                rb,
                type_code,
            )?;
            report.new_agents += 2;
        }
        report.new_agents += split_long_agent(tree, params, u.id);
    }
    Ok(report)
}

/// Replaces an agent longer than `max_agent_length` by a chain of equal
/// pieces. The original id stays on the distal piece together with its
/// resource and daughters; the inserted proximal pieces are inert.
/// Returns the number of inserted agents.
pub fn split_long_agent(tree: &mut NeuronTree, params: &GrowthParams, id: AgentId) -> usize {
    let agent = tree.agent(id).clone();
    let len = agent.length();
    if !(len > params.max_agent_length) {
        return 0;
    }
    let pieces = libm::ceil(len / params.max_agent_length) as usize;
    let delta = (agent.end - agent.start) * (1.0 / pieces as f64);
    let inert = agent.resource.min(params.resource_threshold);
    let mut parent = agent.parent;
    let mut first_new = None;
    for k in 0..pieces - 1 {
        let new_id = tree.agents.len() as AgentId;
        let start = agent.start + delta * k as f64;
        tree.agents.push(super::Agent {
            id: new_id,
            parent,
            start,
            end: start + delta,
            diameter: agent.diameter,
            resource: inert,
            daughters: Default::default(),
            type_code: agent.type_code,
        });
        if let Some(p) = parent {
            if first_new.is_some() {
                tree.agent_mut(p).daughters.push(new_id);
            }
        }
        first_new.get_or_insert(new_id);
        parent = Some(new_id);
    }
    let first = first_new.expect("at least two pieces");
    match agent.parent {
        Some(p) => tree.agent_mut(p).daughters.replace(id, first),
        None => {
            for r in &mut tree.roots {
                if *r == id {
                    *r = first;
                }
            }
        }
    }
    let last = parent.expect("chain is non-empty");
    tree.agent_mut(last).daughters.push(id);
    let a = tree.agent_mut(id);
    a.parent = Some(last);
    a.start = agent.start + delta * (pieces - 1) as f64;
    pieces - 1
}

/// One step of the selected model over all agents present at the start of
/// the step.
pub fn step(
    tree: &mut NeuronTree,
    model: Model,
    params: &GrowthParams,
    field: &GuidanceField,
    key: &StreamKey,
    step_index: u32,
) -> Result<StepReport> {
    let n = tree.agents.len() as AgentId;
    let updates = plan_step(tree, model, params, field, key, step_index, 0..n);
    apply_updates(tree, params, updates)
}

pub fn step_model1(
    tree: &mut NeuronTree,
    params: &GrowthParams,
    field: &GuidanceField,
    key: &StreamKey,
    step_index: u32,
) -> Result<StepReport> {
    step(tree, Model::Model1, params, field, key, step_index)
}

pub fn step_model2(
    tree: &mut NeuronTree,
    params: &GrowthParams,
    field: &GuidanceField,
    key: &StreamKey,
    step_index: u32,
) -> Result<StepReport> {
    step(tree, Model::Model2, params, field, key, step_index)
}
