//! SWC morphology files.
//!
//! A record is `id type x y z radius parent`. Soma records (type 1) hanging
//! off the root collapse into one sphere at their centroid with the largest
//! radius. A non-soma record whose parent is the soma (or -1) is the first
//! point of a neurite; every other non-soma record is the end of one agent
//! that starts at its parent's point.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use neurocal_core::growth::{AgentId, NeuronTree, SomaSpec};
use neurocal_core::Vec3;
use serde::Serialize;

pub const SOMA: i32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwcRecord {
    pub id: i64,
    pub type_code: i32,
    pub position: Vec3,
    pub radius: f64,
    pub parent: i64,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    ColumnCount { line: usize, found: usize },
    NonNumeric { line: usize, column: usize },
    NonFinite { line: usize },
    NegativeRadius { line: usize },
    NonPositiveId { line: usize },
    DuplicateId { line: usize, id: i64 },
    ForwardReference { line: usize, parent: i64 },
    DanglingParent { line: usize, parent: i64 },
    Cycle { line: usize, id: i64 },
    Multifurcation { line: usize, id: i64 },
    NoRecords,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ColumnCount { line, found } => {
                write!(f, "line {line}: expected 7 columns, found {found}")
            }
            Violation::NonNumeric { line, column } => {
                write!(f, "line {line}: column {column} is not numeric")
            }
            Violation::NonFinite { line } => write!(f, "line {line}: non-finite coordinate"),
            Violation::NegativeRadius { line } => write!(f, "line {line}: negative radius"),
            Violation::NonPositiveId { line } => write!(f, "line {line}: id must be positive"),
            Violation::DuplicateId { line, id } => write!(f, "line {line}: duplicate id {id}"),
            Violation::ForwardReference { line, parent } => {
                write!(f, "line {line}: forward reference to parent {parent}")
            }
            Violation::DanglingParent { line, parent } => {
                write!(f, "line {line}: dangling parent {parent}")
            }
            Violation::Cycle { line, id } => {
                write!(f, "line {line}: record {id} is its own ancestor")
            }
            Violation::Multifurcation { line, id } => {
                write!(
                    f,
                    "line {line}: point {id} has more than two continuing children"
                )
            }
            Violation::NoRecords => write!(f, "no records"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MorphologyReport {
    pub records: usize,
    pub type_counts: BTreeMap<i32, usize>,
    pub trees: usize,
    pub violations: Vec<Violation>,
}

impl MorphologyReport {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }
}

fn parse_line(line_no: usize, text: &str) -> Result<SwcRecord, Violation> {
    let cols: Vec<&str> = text.split_whitespace().collect();
    if cols.len() != 7 {
        return Err(Violation::ColumnCount {
            line: line_no,
            found: cols.len(),
        });
    }
    let int = |c: usize| -> Result<i64, Violation> {
        let s = cols[c];
        s.parse::<i64>()
            .or_else(|_| match s.parse::<f64>() {
                Ok(v) if v.fract() == 0.0 && v.abs() < 1e15 => Ok(v as i64),
                _ => Err(()),
            })
            .map_err(|_| Violation::NonNumeric {
                line: line_no,
                column: c + 1,
            })
    };
    let float = |c: usize| -> Result<f64, Violation> {
        cols[c].parse::<f64>().map_err(|_| Violation::NonNumeric {
            line: line_no,
            column: c + 1,
        })
    };
    let id = int(0)?;
    let type_code = int(1)?;
    let (x, y, z, radius) = (float(2)?, float(3)?, float(4)?, float(5)?);
    let parent = int(6)?;
    if id <= 0 {
        return Err(Violation::NonPositiveId { line: line_no });
    }
    if ![x, y, z, radius].iter().all(|v| v.is_finite()) {
        return Err(Violation::NonFinite { line: line_no });
    }
    if radius < 0.0 {
        return Err(Violation::NegativeRadius { line: line_no });
    }
    let type_code = i32::try_from(type_code).map_err(|_| Violation::NonNumeric {
        line: line_no,
        column: 2,
    })?;
    Ok(SwcRecord {
        id,
        type_code,
        position: Vec3::new(x, y, z),
        radius,
        parent,
        line: line_no,
    })
}

/// Parses and validates SWC text. Never panics; any violation rejects the
/// whole file and yields no trees.
pub fn parse_swc(text: &str) -> (Vec<NeuronTree>, MorphologyReport) {
    let mut report = MorphologyReport::default();
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match parse_line(i + 1, t) {
            Ok(r) => records.push(r),
            Err(v) => report.violations.push(v),
        }
    }
    report.records = records.len();
    for r in &records {
        *report.type_counts.entry(r.type_code).or_default() += 1;
    }
    if records.is_empty() && report.violations.is_empty() {
        report.violations.push(Violation::NoRecords);
    }

    let all_ids: HashMap<i64, usize> = records.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    let mut seen: HashMap<i64, usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        if seen.contains_key(&r.id) {
            report.violations.push(Violation::DuplicateId {
                line: r.line,
                id: r.id,
            });
            continue;
        }
        if r.parent == r.id {
            report.violations.push(Violation::Cycle {
                line: r.line,
                id: r.id,
            });
        } else if r.parent != -1 && !seen.contains_key(&r.parent) {
            if all_ids.contains_key(&r.parent) {
                report.violations.push(Violation::ForwardReference {
                    line: r.line,
                    parent: r.parent,
                });
            } else {
                report.violations.push(Violation::DanglingParent {
                    line: r.line,
                    parent: r.parent,
                });
            }
        }
        seen.insert(r.id, i);
    }
    if !report.violations.is_empty() {
        return (Vec::new(), report);
    }

    match build_trees(&records) {
        Ok(trees) => {
            report.trees = trees.len();
            (trees, report)
        }
        Err(v) => {
            report.violations.push(v);
            (Vec::new(), report)
        }
    }
}

/// Role of a record once parents are known to precede children.
#[derive(Clone, Copy)]
enum Role {
    Soma,
    /// First point of a neurite.
    RootPoint,
    /// End point of the given agent.
    AgentEnd(AgentId),
}

fn build_trees(records: &[SwcRecord]) -> Result<Vec<NeuronTree>, Violation> {
    let index: HashMap<i64, usize> = records.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    // Component = index of the top-level record each record descends from.
    let mut component = vec![0usize; records.len()];
    let mut roles: Vec<Role> = Vec::with_capacity(records.len());
    let mut order: Vec<usize> = Vec::new();
    let mut tree_of_root: HashMap<usize, usize> = HashMap::new();
    let mut trees: Vec<NeuronTree> = Vec::new();
    let mut soma_points: Vec<Vec<&SwcRecord>> = Vec::new();

    for (i, r) in records.iter().enumerate() {
        let parent = (r.parent != -1).then(|| index[&r.parent]);
        let comp = parent.map_or(i, |p| component[p]);
        component[i] = comp;
        let t = *tree_of_root.entry(comp).or_insert_with(|| {
            order.push(comp);
            trees.push(NeuronTree::new(SomaSpec {
                position: r.position,
                radius: 0.0,
                initial_neurites: Vec::new(),
            }));
            soma_points.push(Vec::new());
            trees.len() - 1
        });
        let parent_role = parent.map(|p| roles[p]);
        let role = match parent_role {
            None | Some(Role::Soma) if r.type_code == SOMA => {
                soma_points[t].push(r);
                Role::Soma
            }
            None | Some(Role::Soma) => Role::RootPoint,
            Some(Role::RootPoint) | Some(Role::AgentEnd(_)) => {
                let p = &records[parent.unwrap_or(i)];
                let mother = match parent_role {
                    Some(Role::AgentEnd(a)) => Some(a),
                    _ => None,
                };
                let tree = &mut trees[t];
                let id = tree
                    .push_agent(
                        mother,
                        p.position,
                        r.position,
                        2.0 * r.radius,
                        0.0,
                        r.type_code,
                    )
                    .map_err(|_| Violation::Multifurcation {
                        line: r.line,
                        id: p.id,
                    })?;
                Role::AgentEnd(id)
            }
        };
        roles.push(role);
    }

    for (tree, somas) in trees.iter_mut().zip(&soma_points) {
        if somas.is_empty() {
            tree.soma.radius = 0.0;
            continue;
        }
        let n = somas.len() as f64;
        let c = somas.iter().fold(Vec3::ZERO, |acc, r| acc + r.position) * (1.0 / n);
        tree.soma.position = c;
        tree.soma.radius = somas.iter().map(|r| r.radius).fold(0.0, f64::max);
    }
    Ok(trees)
}

fn fmt_point(out: &mut String, id: usize, type_code: i32, p: Vec3, radius: f64, parent: i64) {
    let _ = writeln!(
        out,
        "{id} {type_code} {:.4} {:.4} {:.4} {:.4} {parent}",
        p.x, p.y, p.z, radius
    );
}

/// Serializes a tree in depth-first pre-order: the soma is record 1, each
/// root agent contributes its start point (parented to the soma) and its
/// end point, every other agent only its end point. `type_code` overrides
/// the agents' own codes.
pub fn write_swc(tree: &NeuronTree, type_code: Option<i32>) -> String {
    let mut out = String::with_capacity(64 * (tree.len() + 2));
    out.push_str("# id type x y z radius parent\n");
    fmt_point(&mut out, 1, SOMA, tree.soma.position, tree.soma.radius, -1);
    let mut next = 2usize;
    let mut end_record = vec![0usize; tree.len()];
    for id in tree.preorder() {
        let a = tree.agent(id);
        let code = type_code.unwrap_or(a.type_code);
        let radius = a.diameter / 2.0;
        let parent_record = match a.parent {
            Some(p) => end_record[p as usize],
            None => {
                fmt_point(&mut out, next, code, a.start, radius, 1);
                next += 1;
                next - 1
            }
        };
        fmt_point(&mut out, next, code, a.end, radius, parent_record as i64);
        end_record[id as usize] = next;
        next += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no matching structures for type codes {0:?}")]
pub struct NoMatchingStructures(pub Vec<i32>);

/// Keeps only agents with the given type codes. An agent whose mother is
/// dropped becomes a root attached to the soma.
pub fn select_subtree(
    tree: &NeuronTree,
    type_codes: &[i32],
) -> Result<NeuronTree, NoMatchingStructures> {
    let keep = |code: i32| type_codes.contains(&code);
    if !tree.agents.iter().any(|a| keep(a.type_code)) {
        return Err(NoMatchingStructures(type_codes.to_vec()));
    }
    if tree.agents.iter().all(|a| keep(a.type_code)) {
        return Ok(tree.clone());
    }
    let mut out = NeuronTree::new(tree.soma.clone());
    let mut mapped: Vec<Option<AgentId>> = vec![None; tree.len()];
    for id in tree.preorder() {
        let a = tree.agent(id);
        if !keep(a.type_code) {
            continue;
        }
        let parent = a.parent.and_then(|p| mapped[p as usize]);
        let new_id = out
            .push_agent(parent, a.start, a.end, a.diameter, a.resource, a.type_code)
            .expect("a valid tree has at most two daughters per agent");
        mapped[id as usize] = Some(new_id);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soma_plus_chain() {
        let text = "# header\n1 1 0 0 0 5 -1\n2 4 0 0 5 1 1\n\n3 4 0 0 9 1 2\n";
        let (trees, report) = parse_swc(text);
        assert!(report.accepted(), "{:?}", report.violations);
        assert_eq!(trees.len(), 1);
        let t = &trees[0];
        assert_eq!(t.len(), 1);
        assert_eq!(t.tips().count(), 1);
        assert_eq!(t.agents[0].length(), 4.0);
        assert_eq!(t.soma.radius, 5.0);
        assert_eq!(report.type_counts[&4], 2);
    }

    #[test]
    fn forward_reference_names_line() {
        let text = "1 1 0 0 0 5 -1\n2 4 0 0 5 1 3\n3 4 0 0 9 1 1\n";
        let (trees, report) = parse_swc(text);
        assert!(trees.is_empty());
        assert_eq!(
            report.violations,
            vec![Violation::ForwardReference { line: 2, parent: 3 }]
        );
        assert!(report.violations[0]
            .to_string()
            .contains("forward reference"));
    }

    #[test]
    fn comments_only() {
        let (trees, report) = parse_swc("# nothing\n# here\n");
        assert!(trees.is_empty());
        assert_eq!(report.records, 0);
        assert_eq!(report.violations, vec![Violation::NoRecords]);
    }

    #[test]
    fn malformed_lines() {
        let (_, r) = parse_swc("1 1 0 0 0 5\n2 x 0 0 0 1 1\n3 3 0 0 nan 1 1\n4 3 0 0 0 -1 1\n");
        assert_eq!(r.violations.len(), 4);
        let (_, r) = parse_swc("1 1 0 0 0 5 -1\n1 3 0 0 0 1 1\n2 3 0 0 0 1 7\n3 3 0 0 0 1 3\n");
        assert_eq!(
            r.violations,
            vec![
                Violation::DuplicateId { line: 2, id: 1 },
                Violation::DanglingParent { line: 3, parent: 7 },
                Violation::Cycle { line: 4, id: 3 },
            ]
        );
    }

    #[test]
    fn multi_record_soma_collapses() {
        let text = "1 1 0 0 0 2 -1\n2 1 2 0 0 3 1\n3 1 -2 0 0 1 1\n4 3 0 0 5 1 1\n5 3 0 0 8 1 4\n";
        let (trees, r) = parse_swc(text);
        assert!(r.accepted());
        assert_eq!(trees[0].soma.position, Vec3::ZERO);
        assert_eq!(trees[0].soma.radius, 3.0);
    }

    #[test]
    fn single_agent_writes_three_records() {
        let text = "1 1 0 0 0 5 -1\n2 4 0 0 5 0.5 1\n3 4 0 0 9 0.5 2\n";
        let (trees, _) = parse_swc(text);
        let out = write_swc(&trees[0], None);
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 3);
        assert_eq!(out, write_swc(&trees[0], None));
    }

    #[test]
    fn subtree_selection() {
        let text = "1 1 0 0 0 5 -1\n2 3 0 0 -5 1 1\n3 3 0 0 -9 1 2\n4 4 0 0 5 1 1\n5 4 0 0 9 1 4\n6 4 1 0 12 1 5\n7 4 -1 0 12 1 5\n";
        let (trees, r) = parse_swc(text);
        assert!(r.accepted());
        let t = &trees[0];
        assert_eq!(t.len(), 4);
        let apical = select_subtree(t, &[4]).unwrap();
        assert_eq!(apical.len(), 3);
        assert!(apical.agents.iter().all(|a| a.type_code == 4));
        assert!(apical.validate().is_ok());
        assert_eq!(&select_subtree(t, &[3, 4]).unwrap(), t);
        assert!(select_subtree(t, &[7]).is_err());
    }

    #[test]
    fn multifurcation_rejected() {
        let text = "1 1 0 0 0 5 -1\n2 3 0 0 5 1 1\n3 3 0 0 9 1 2\n4 3 1 0 10 1 3\n5 3 2 0 10 1 3\n6 3 3 0 10 1 3\n";
        let (trees, r) = parse_swc(text);
        assert!(trees.is_empty());
        assert_eq!(
            r.violations,
            vec![Violation::Multifurcation { line: 6, id: 3 }]
        );
    }
}
