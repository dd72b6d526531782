//! Case-file schema and validation into a [`RadialNetwork`].

use std::collections::{HashMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CaseError, Line, NodeLimits, RadialNetwork};

pub const CASE_SCHEMA: &str = "dispregion-case/1";

/// Per-node fallback values used when a node or line record omits a field.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CaseDefaults {
    #[serde(default)]
    pub p_min: f64,
    #[serde(default)]
    pub p_max: f64,
    #[serde(default)]
    pub q_min: f64,
    #[serde(default)]
    pub q_max: f64,
    #[serde(default = "default_v_min")]
    pub v_min: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default = "default_l_max")]
    pub l_max: f64,
}

fn default_v_min() -> f64 {
    0.81
}
fn default_v_max() -> f64 {
    1.21
}
fn default_l_max() -> f64 {
    1.0
}

impl Default for CaseDefaults {
    fn default() -> Self {
        Self {
            p_min: 0.0,
            p_max: 0.0,
            q_min: 0.0,
            q_max: 0.0,
            v_min: default_v_min(),
            v_max: default_v_max(),
            l_max: default_l_max(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<f64>,
}

/// On-disk feeder description. All electrical quantities are per-unit.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub schema: String,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Squared voltage magnitude at the slack bus.
    pub v0: f64,
    /// Label of the slack bus.
    pub root: u32,
    #[serde(default)]
    pub defaults: CaseDefaults,
    /// Non-root nodes. Their order fixes the internal index 1..=N.
    pub nodes: Vec<NodeRecord>,
    pub lines: Vec<LineRecord>,
    /// Labels of nodes hosting renewable generation, in w-vector order.
    #[serde(default)]
    pub renewables: Vec<u32>,
}

/// Reads and validates a case file.
pub fn parse_case(path: impl AsRef<Path>) -> Result<RadialNetwork, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_case_str(&text)
}

pub fn parse_case_str(text: &str) -> Result<RadialNetwork, CaseError> {
    let case: CaseFile = serde_json::from_str(text).map_err(CaseError::Parse)?;
    RadialNetwork::from_case(&case)
}

fn invalid(msg: impl Into<String>) -> CaseError {
    CaseError::Validation(msg.into())
}

impl RadialNetwork {
    pub fn from_case(case: &CaseFile) -> Result<Self, CaseError> {
        if case.schema != CASE_SCHEMA {
            return Err(CaseError::Schema(format!(
                "expected schema \"{CASE_SCHEMA}\", found \"{}\"",
                case.schema
            )));
        }
        if !(case.v0.is_finite() && case.v0 > 0.0) {
            return Err(invalid(format!("v0 must be positive, got {}", case.v0)));
        }
        let n = case.nodes.len();
        if n == 0 {
            return Err(invalid("case has no non-root nodes"));
        }

        let mut index: HashMap<u32, usize> = HashMap::with_capacity(n + 1);
        index.insert(case.root, 0);
        let mut labels = vec![case.root];
        for (k, node) in case.nodes.iter().enumerate() {
            if index.insert(node.id, k + 1).is_some() {
                return Err(invalid(format!("duplicate node id {}", node.id)));
            }
            labels.push(node.id);
        }

        if case.lines.len() != n {
            return Err(invalid(format!(
                "tree violation: {} nodes besides the root need exactly {n} lines, found {}",
                n,
                case.lines.len()
            )));
        }

        let d = &case.defaults;
        let mut parent: Vec<Option<usize>> = vec![None; n + 1];
        let mut lines: Vec<Option<Line>> = vec![None; n];
        for rec in &case.lines {
            let from = *index
                .get(&rec.from)
                .ok_or_else(|| invalid(format!("line {}->{}: unknown node {}", rec.from, rec.to, rec.from)))?;
            let to = *index
                .get(&rec.to)
                .ok_or_else(|| invalid(format!("line {}->{}: unknown node {}", rec.from, rec.to, rec.to)))?;
            if to == 0 {
                return Err(invalid(format!(
                    "tree violation: line {}->{} points into the root; lines must be directed away from the root",
                    rec.from, rec.to
                )));
            }
            if from == to {
                return Err(invalid(format!("line {}->{} is a self loop", rec.from, rec.to)));
            }
            if let Some(prev) = parent[to] {
                return Err(invalid(format!(
                    "tree violation: node {} has two parents ({} and {})",
                    rec.to, labels[prev], rec.from
                )));
            }
            if !(rec.r.is_finite() && rec.x.is_finite()) {
                return Err(invalid(format!("line {}->{}: impedance must be finite", rec.from, rec.to)));
            }
            let l_max = rec.l_max.unwrap_or(d.l_max);
            if !(l_max.is_finite() && l_max > 0.0) {
                return Err(invalid(format!(
                    "line {}->{}: current limit must be positive, got {l_max}",
                    rec.from, rec.to
                )));
            }
            parent[to] = Some(from);
            lines[to - 1] = Some(Line {
                from,
                to,
                r: rec.r,
                x: rec.x,
                l_max,
            });
        }
        let lines: Vec<Line> = lines
            .into_iter()
            .enumerate()
            .map(|(k, l)| {
                l.ok_or_else(|| invalid(format!("tree violation: node {} has no parent line", labels[k + 1])))
            })
            .collect::<Result<_, _>>()?;

        let mut children = vec![Vec::new(); n + 1];
        for line in &lines {
            children[line.from].push(line.to);
        }
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n + 1];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                if !seen[c] {
                    seen[c] = true;
                    order.push(c);
                    queue.push_back(c);
                }
            }
        }
        if order.len() != n {
            let missing: Vec<u32> = (1..=n).filter(|&k| !seen[k]).map(|k| labels[k]).collect();
            return Err(invalid(format!(
                "tree violation: nodes {missing:?} are not reachable from the root (cycle or disconnected component)"
            )));
        }

        let mut limits = Vec::with_capacity(n);
        for node in &case.nodes {
            let lim = NodeLimits {
                p_min: node.p_min.unwrap_or(d.p_min),
                p_max: node.p_max.unwrap_or(d.p_max),
                q_min: node.q_min.unwrap_or(d.q_min),
                q_max: node.q_max.unwrap_or(d.q_max),
                v_min: node.v_min.unwrap_or(d.v_min),
                v_max: node.v_max.unwrap_or(d.v_max),
            };
            let id = node.id;
            let vals = [lim.p_min, lim.p_max, lim.q_min, lim.q_max, lim.v_min, lim.v_max];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("node {id}: limits must be finite")));
            }
            if lim.p_min > lim.p_max {
                return Err(invalid(format!("node {id}: p_min {} exceeds p_max {}", lim.p_min, lim.p_max)));
            }
            if lim.q_min > lim.q_max {
                return Err(invalid(format!("node {id}: q_min {} exceeds q_max {}", lim.q_min, lim.q_max)));
            }
            if !(lim.v_min > 0.0 && lim.v_min <= lim.v_max) {
                return Err(invalid(format!(
                    "node {id}: voltage limits must satisfy 0 < v_min <= v_max, got [{}, {}]",
                    lim.v_min, lim.v_max
                )));
            }
            limits.push(lim);
        }

        let mut renewables = Vec::with_capacity(case.renewables.len());
        let mut dup = HashSet::new();
        for &label in &case.renewables {
            let k = *index
                .get(&label)
                .ok_or_else(|| invalid(format!("renewable node {label} does not exist")))?;
            if k == 0 {
                return Err(invalid(format!("renewable node {label} is the root")));
            }
            if !dup.insert(k) {
                return Err(invalid(format!("renewable node {label} listed twice")));
            }
            renewables.push(k);
        }

        let parent = parent.into_iter().map(|p| p.unwrap_or(0)).collect();
        Ok(RadialNetwork {
            name: case.name.clone(),
            v0: case.v0,
            labels,
            parent,
            children,
            order,
            lines,
            limits,
            renewables,
        })
    }

    /// Rebuilds a case description, e.g. to override the renewable set.
    pub fn to_case(&self) -> CaseFile {
        CaseFile {
            schema: CASE_SCHEMA.to_string(),
            name: self.name.clone(),
            description: String::new(),
            v0: self.v0,
            root: self.labels[0],
            defaults: CaseDefaults::default(),
            nodes: self
                .limits
                .iter()
                .enumerate()
                .map(|(k, lim)| NodeRecord {
                    id: self.labels[k + 1],
                    p_min: Some(lim.p_min),
                    p_max: Some(lim.p_max),
                    q_min: Some(lim.q_min),
                    q_max: Some(lim.q_max),
                    v_min: Some(lim.v_min),
                    v_max: Some(lim.v_max),
                    note: None,
                })
                .collect(),
            lines: self
                .lines
                .iter()
                .map(|l| LineRecord {
                    from: self.labels[l.from],
                    to: self.labels[l.to],
                    r: l.r,
                    x: l.x,
                    l_max: Some(l.l_max),
                })
                .collect(),
            renewables: self.renewables.iter().map(|&k| self.labels[k]).collect(),
        }
    }
}
