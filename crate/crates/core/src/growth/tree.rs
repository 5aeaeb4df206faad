use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

pub type AgentId = u32;

/// Up to two daughter ids stored inline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Daughters {
    ids: [AgentId; 2],
    len: u8,
}

impl Daughters {
    pub fn len(&self) -> usize {
        usize::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[AgentId] {
        &self.ids[..self.len()]
    }

    /// Appends a daughter; returns `false` when both slots are taken.
    pub fn push(&mut self, id: AgentId) -> bool {
        if self.len >= 2 {
            return false;
        }
        self.ids[self.len()] = id;
        self.len += 1;
        true
    }

    pub fn replace(&mut self, old: AgentId, new: AgentId) {
        for slot in &mut self.ids[..usize::from(self.len)] {
            if *slot == old {
                *slot = new;
            }
        }
    }
}

/// A cylindrical neurite compartment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    /// `None` when the agent is attached to the soma.
    pub parent: Option<AgentId>,
    pub start: Vec3,
    pub end: Vec3,
    pub diameter: f64,
    pub resource: f64,
    pub daughters: Daughters,
    /// SWC structure type (3 basal, 4 apical, ...).
    pub type_code: i32,
}

impl Agent {
    pub fn length(&self) -> f64 {
        self.end.distance(self.start)
    }

    pub fn direction(&self) -> Option<Vec3> {
        (self.end - self.start).normalized()
    }

    pub fn is_tip(&self) -> bool {
        self.daughters.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialNeurite {
    pub direction: Vec3,
    pub initial_resource: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomaSpec {
    pub position: Vec3,
    pub radius: f64,
    pub initial_neurites: Vec<InitialNeurite>,
}

impl SomaSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::config("soma radius must be positive"));
        }
        if !self.position.is_finite() {
            return Err(Error::NonFinite("soma position"));
        }
        if self.initial_neurites.is_empty() {
            return Err(Error::config("soma needs at least one initial neurite"));
        }
        for n in &self.initial_neurites {
            if libm::fabs(n.direction.norm() - 1.0) > 1e-9 {
                return Err(Error::config(
                    "initial neurite direction must have unit norm",
                ));
            }
            if !n.initial_resource.is_finite() {
                return Err(Error::NonFinite("initial resource"));
            }
        }
        Ok(())
    }

    /// Three basal neurites pointing downwards, spread 120 degrees apart.
    pub fn basal_default() -> Self {
        let tilt = 0.6f64;
        let initial_neurites = (0..3)
            .map(|k| {
                let phi = 2.0 * core::f64::consts::PI * f64::from(k) / 3.0;
                let d = Vec3::new(
                    libm::sin(tilt) * libm::cos(phi),
                    libm::sin(tilt) * libm::sin(phi),
                    -libm::cos(tilt),
                );
                InitialNeurite {
                    direction: d,
                    initial_resource: 0.3,
                }
            })
            .collect();
        SomaSpec {
            position: Vec3::ZERO,
            radius: 10.0,
            initial_neurites,
        }
    }

    /// A single apical trunk along +z.
    pub fn apical_default() -> Self {
        SomaSpec {
            position: Vec3::ZERO,
            radius: 10.0,
            initial_neurites: vec![InitialNeurite {
                direction: Vec3::new(0.0, 0.0, 1.0),
                initial_resource: 1.0,
            }],
        }
    }
}

/// Rooted tree of agents attached to a spherical soma. Agent ids index
/// `agents` directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronTree {
    pub soma: SomaSpec,
    pub agents: Vec<Agent>,
    pub roots: Vec<AgentId>,
}

impl NeuronTree {
    pub fn new(soma: SomaSpec) -> Self {
        NeuronTree {
            soma,
            agents: Vec::new(),
            roots: Vec::new(),
        }
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id as usize]
    }

    pub fn agent_mut(&mut self, id: AgentId) -> &mut Agent {
        &mut self.agents[id as usize]
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Adds an agent, wiring it into its parent's daughters (or the root
    /// list). Fails when the parent already has two daughters.
    pub fn push_agent(
        &mut self,
        parent: Option<AgentId>,
        start: Vec3,
        end: Vec3,
        diameter: f64,
        resource: f64,
        type_code: i32,
    ) -> Result<AgentId> {
        let id = self.agents.len() as AgentId;
        match parent {
            Some(p) => {
                if !self.agents[p as usize].daughters.push(id) {
                    return Err(Error::config("agent already has two daughters"));
                }
            }
            None => self.roots.push(id),
        }
        self.agents.push(Agent {
            id,
            parent,
            start,
            end,
            diameter,
            resource,
            daughters: Daughters::default(),
            type_code,
        });
        Ok(id)
    }

    pub fn tips(&self) -> impl Iterator<Item = &Agent> {
        self.agents.iter().filter(|a| a.is_tip())
    }

    pub fn total_length(&self) -> f64 {
        self.agents.iter().map(Agent::length).sum()
    }

    /// Agent ids in depth-first pre-order, roots in root-list order and
    /// daughters in insertion order.
    pub fn preorder(&self) -> Vec<AgentId> {
        let mut out = Vec::with_capacity(self.agents.len());
        let mut stack: Vec<AgentId> = self.roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            for &d in self.agent(id).daughters.as_slice().iter().rev() {
                stack.push(d);
            }
        }
        out
    }

    /// Checks the structural invariants: ids match positions, parent links
    /// are mutual, every agent is reachable exactly once from the roots,
    /// and daughters start where their mother ends.
    pub fn validate(&self) -> core::result::Result<(), TreeViolation> {
        let n = self.agents.len();
        for (i, a) in self.agents.iter().enumerate() {
            if a.id as usize != i {
                return Err(TreeViolation::IdMismatch(i));
            }
            match a.parent {
                Some(p) => {
                    let Some(parent) = self.agents.get(p as usize) else {
                        return Err(TreeViolation::DanglingParent(a.id));
                    };
                    if !parent.daughters.as_slice().contains(&a.id) {
                        return Err(TreeViolation::BrokenLink(a.id));
                    }
                    if parent.end.distance(a.start) > 1e-9 {
                        return Err(TreeViolation::Detached(a.id));
                    }
                }
                None => {
                    if !self.roots.contains(&a.id) {
                        return Err(TreeViolation::BrokenLink(a.id));
                    }
                }
            }
            for &d in a.daughters.as_slice() {
                if self.agents.get(d as usize).and_then(|x| x.parent) != Some(a.id) {
                    return Err(TreeViolation::BrokenLink(d));
                }
            }
        }
        let mut seen = vec![false; n];
        let mut stack: Vec<AgentId> = self.roots.clone();
        let mut visited = 0usize;
        while let Some(id) = stack.pop() {
            let Some(slot) = seen.get_mut(id as usize) else {
                return Err(TreeViolation::DanglingParent(id));
            };
            if *slot {
                return Err(TreeViolation::Cycle(id));
            }
            *slot = true;
            visited += 1;
            stack.extend_from_slice(self.agent(id).daughters.as_slice());
        }
        if visited != n {
            return Err(TreeViolation::Unreachable);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeViolation {
    IdMismatch(usize),
    DanglingParent(AgentId),
    BrokenLink(AgentId),
    Detached(AgentId),
    Cycle(AgentId),
    Unreachable,
}

/// Builds the initial morphology: one stub agent per initial neurite,
/// starting on the soma surface. Each stub carries its neurite's initial
/// resource.
pub fn init_neuron(
    soma: &SomaSpec,
    stub_length: f64,
    diameter: f64,
    type_code: i32,
) -> Result<NeuronTree> {
    if !(stub_length > 0.0) {
        return Err(Error::config("stub length must be positive"));
    }
    soma.validate()?;
    let mut tree = NeuronTree::new(soma.clone());
    for n in &soma.initial_neurites {
        let start = soma.position + n.direction * soma.radius;
        let end = start + n.direction * stub_length;
        tree.push_agent(None, start, end, diameter, n.initial_resource, type_code)?;
    }
    Ok(tree)
}
