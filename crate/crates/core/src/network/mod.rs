//! Radial feeder model and the constant matrices of the relaxed feasibility problem.
//!
//! Nodes are indexed `0..=N` with `0` the slack bus. Every line is indexed by its
//! destination node, so line `k` (0-based) feeds node `k + 1`.

mod case;
mod matrices;

pub use case::{parse_case, parse_case_str, CaseDefaults, CaseFile, LineRecord, NodeRecord, CASE_SCHEMA};
pub use matrices::{assemble_matrices, matrices_without_current, slater_point, ConeShape, FlowMatrices, ModelKind, StateLayout, VarKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed case file: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("unsupported case file: {0}")]
    Schema(String),
    #[error("invalid network: {0}")]
    Validation(String),
}

/// A line `from -> to`, directed away from the root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Squared-current limit.
    pub l_max: f64,
}

/// Controllable-injection and squared-voltage limits of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeLimits {
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

/// Validated radial network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialNetwork {
    pub name: String,
    pub v0: f64,
    /// Case-file label of every node, root first.
    pub labels: Vec<u32>,
    parent: Vec<usize>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
    /// `lines[k]` feeds node `k + 1`.
    pub lines: Vec<Line>,
    /// `limits[k]` belongs to node `k + 1`.
    pub limits: Vec<NodeLimits>,
    /// Internal indices (1..=N) of renewable nodes, in w order.
    pub renewables: Vec<usize>,
}

impl RadialNetwork {
    /// Number of non-root nodes (and lines).
    pub fn n(&self) -> usize {
        self.lines.len()
    }

    /// Dimension of the renewable vector w.
    pub fn w_dim(&self) -> usize {
        self.renewables.len()
    }

    pub fn parent(&self, node: usize) -> usize {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Non-root nodes in breadth-first order from the root (parents before children).
    pub fn bfs_order(&self) -> &[usize] {
        &self.order
    }

    pub fn line_into(&self, node: usize) -> &Line {
        &self.lines[node - 1]
    }

    pub fn limits_of(&self, node: usize) -> &NodeLimits {
        &self.limits[node - 1]
    }

    pub fn node_index(&self, label: u32) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Renewable generation spread over all nodes (index 0 = node 1).
    pub fn renewable_injection(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (&node, &wi) in self.renewables.iter().zip(w) {
            out[node - 1] += wi;
        }
        out
    }

    /// Same network with a different renewable set (internal indices).
    pub fn with_renewables(&self, renewables: Vec<usize>) -> Self {
        Self {
            renewables,
            ..self.clone()
        }
    }

    /// Builds a network directly from internal-index data. Lines may be given
    /// in any order; the result is validated like a parsed case.
    pub fn from_parts(
        v0: f64,
        lines: &[(usize, usize, f64, f64, f64)],
        limits: &[NodeLimits],
        renewables: &[usize],
    ) -> Result<Self, CaseError> {
        let case = CaseFile {
            schema: CASE_SCHEMA.to_string(),
            name: String::new(),
            description: String::new(),
            v0,
            root: 0,
            defaults: CaseDefaults::default(),
            nodes: limits
                .iter()
                .enumerate()
                .map(|(k, lim)| NodeRecord {
                    id: (k + 1) as u32,
                    p_min: Some(lim.p_min),
                    p_max: Some(lim.p_max),
                    q_min: Some(lim.q_min),
                    q_max: Some(lim.q_max),
                    v_min: Some(lim.v_min),
                    v_max: Some(lim.v_max),
                    note: None,
                })
                .collect(),
            lines: lines
                .iter()
                .map(|&(from, to, r, x, l_max)| LineRecord {
                    from: from as u32,
                    to: to as u32,
                    r,
                    x,
                    l_max: Some(l_max),
                })
                .collect(),
            renewables: renewables.iter().map(|&k| k as u32).collect(),
        };
        Self::from_case(&case)
    }
}
