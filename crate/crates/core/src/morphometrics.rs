//! Morphometrics: maps a morphology to a quantity-of-interest vector.
//!
//! A *segment* here is a section in the NeuroM sense: a maximal unbranched
//! path that starts at the soma or at a branch point and ends at a branch
//! point or a tip. Agents inserted by length splitting never start a new
//! section. The segment-length standard deviation uses the population
//! convention (divisor `n`); multiply by `sqrt(n / (n - 1))` for the sample
//! convention.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distances::PointCloud;
use crate::growth::{AgentId, NeuronTree};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub points: Vec<Vec3>,
    pub agents: Vec<AgentId>,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Morphometric {
    /// M1, number of segments.
    #[serde(rename = "M1")]
    SegmentCount,
    /// M2, mean segment length (μm).
    #[serde(rename = "M2")]
    MeanSegmentLength,
    /// M3, standard deviation of segment length (μm).
    #[serde(rename = "M3")]
    StdSegmentLength,
    /// M4, total dendritic length (μm).
    #[serde(rename = "M4")]
    TotalLength,
}

impl Morphometric {
    pub const ALL: [Morphometric; 4] = [
        Morphometric::SegmentCount,
        Morphometric::MeanSegmentLength,
        Morphometric::StdSegmentLength,
        Morphometric::TotalLength,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Morphometric::SegmentCount => "M1",
            Morphometric::MeanSegmentLength => "M2",
            Morphometric::StdSegmentLength => "M3",
            Morphometric::TotalLength => "M4",
        }
    }
}

impl fmt::Display for Morphometric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Morphometric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Morphometric::ALL
            .into_iter()
            .find(|m| m.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(alloc::format!("unknown morphometric '{s}'")))
    }
}

/// Partitions the neurites into maximal unbranched sections, in depth-first
/// order.
pub fn sections(tree: &NeuronTree) -> Vec<Section> {
    let mut out = Vec::new();
    let mut starts: Vec<AgentId> = tree.roots.iter().rev().copied().collect();
    while let Some(first) = starts.pop() {
        let mut section = Section {
            points: alloc::vec![tree.agent(first).start],
            agents: Vec::new(),
            length: 0.0,
        };
        let mut id = first;
        loop {
            let a = tree.agent(id);
            section.points.push(a.end);
            section.agents.push(id);
            section.length += a.length();
            match a.daughters.as_slice() {
                [only] => id = *only,
                ds => {
                    starts.extend(ds.iter().rev());
                    break;
                }
            }
        }
        out.push(section);
    }
    out
}

/// Section lengths and their summary statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub total: f64,
}

pub fn section_stats(tree: &NeuronTree) -> Result<SectionStats> {
    if tree.is_empty() {
        return Err(Error::EmptyTree);
    }
    let lengths: Vec<f64> = sections(tree).iter().map(|s| s.length).collect();
    let count = lengths.len();
    let total: f64 = lengths.iter().sum();
    let mean = total / count as f64;
    let var = lengths.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / count as f64;
    Ok(SectionStats {
        count,
        mean,
        std: libm::sqrt(var),
        total,
    })
}

/// Evaluates the selected morphometrics in the given order.
pub fn extract(tree: &NeuronTree, selection: &[Morphometric]) -> Result<Vec<f64>> {
    let s = section_stats(tree)?;
    Ok(selection
        .iter()
        .map(|m| match m {
            Morphometric::SegmentCount => s.count as f64,
            Morphometric::MeanSegmentLength => s.mean,
            Morphometric::StdSegmentLength => s.std,
            Morphometric::TotalLength => s.total,
        })
        .collect())
}

/// Rows are neurons, columns are labelled quantities of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoiMatrix {
    pub labels: Vec<String>,
    pub cloud: PointCloud,
}

impl QoiMatrix {
    pub fn new(labels: Vec<String>, cloud: PointCloud) -> Result<Self> {
        if labels.len() != cloud.dim() {
            return Err(Error::DimensionMismatch {
                left: labels.len(),
                right: cloud.dim(),
            });
        }
        Ok(QoiMatrix { labels, cloud })
    }

    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let cloud = PointCloud::from_rows(labels.len(), rows)?;
        QoiMatrix::new(labels, cloud)
    }

    pub fn rows(&self) -> usize {
        self.cloud.len()
    }

    pub fn cols(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.cloud.point(i)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.cloud.column(j)
    }
}

pub fn labels(selection: &[Morphometric]) -> Vec<String> {
    selection.iter().map(|m| m.id().to_string()).collect()
}

/// Builds the QoI matrix of several morphologies; row order follows input
/// order.
pub fn assemble<'a>(
    trees: impl IntoIterator<Item = &'a NeuronTree>,
    selection: &[Morphometric],
) -> Result<QoiMatrix> {
    let mut values = Vec::new();
    for (index, tree) in trees.into_iter().enumerate() {
        let row = extract(tree, selection).map_err(|e| Error::Extraction {
            index,
            source: Box::new(e),
        })?;
        values.extend(row);
    }
    QoiMatrix::new(labels(selection), PointCloud::new(selection.len(), values)?)
}
