//! DC network model: buses, lines, generators and the PTDF matrix.
//!
//! Flows follow the injection convention `f = M q` where `q` is the nodal
//! injection vector (generation minus demand) and `M` the PTDF matrix. A line
//! carries positive flow in its `from -> to` direction.

mod io;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{read_grid_csv, read_grid_json, write_grid_csv, write_grid_json};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}, row {row}: {msg}")]
    Parse { file: String, row: usize, msg: String },
    #[error("{file}, row {row}: unknown node id {node}")]
    UnknownNode { file: String, row: usize, node: u32 },
    #[error("grid is disconnected; components: {}", format_components(.components))]
    Disconnected { components: Vec<Vec<u32>> },
    #[error("line {line} has non-positive reactance {reactance}")]
    NonPositiveReactance { line: String, reactance: f64 },
    #[error("injections are unbalanced by {imbalance} MW")]
    Imbalance { imbalance: f64 },
    #[error("{0}")]
    Invalid(String),
}

fn format_components(components: &[Vec<u32>]) -> String {
    components
        .iter()
        .map(|c| {
            let ids: Vec<String> = c.iter().map(|n| n.to_string()).collect();
            format!("{{{}}}", ids.join(", "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    #[serde(default)]
    pub zone: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from: u32,
    pub to: u32,
    /// Series reactance in per unit.
    pub reactance: f64,
    /// Thermal limit in MW, applied symmetrically.
    pub flow_limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub node: u32,
    pub p_min: f64,
    pub p_max: f64,
    /// $/MWh
    pub energy_cost: f64,
    /// $/MW per hour
    pub up_reserve_cost: f64,
    /// $/MW per hour
    pub down_reserve_cost: f64,
}

/// Serializable description of a network; the JSON grid document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridData {
    pub nodes: Vec<Node>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    /// Defaults to the lowest node id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<u32>,
}

/// A validated network with its PTDF matrix. Immutable once built.
#[derive(Clone, Debug)]
pub struct GridModel {
    data: GridData,
    slack: u32,
    index: BTreeMap<u32, usize>,
    line_ends: Vec<(usize, usize)>,
    gen_node: Vec<usize>,
    ptdf: DMatrix<f64>,
}

impl GridModel {
    pub fn new(data: GridData) -> Result<Self, GridError> {
        if data.nodes.is_empty() {
            return Err(GridError::Invalid("grid has no nodes".into()));
        }
        let mut index = BTreeMap::new();
        for (i, n) in data.nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(GridError::Invalid(format!("duplicate node id {}", n.id)));
            }
        }
        let lookup = |file: &str, row: usize, node: u32| {
            index.get(&node).copied().ok_or(GridError::UnknownNode {
                file: file.into(),
                row,
                node,
            })
        };
        let mut line_ends = Vec::with_capacity(data.lines.len());
        for (k, l) in data.lines.iter().enumerate() {
            let ends = (lookup("lines", k + 1, l.from)?, lookup("lines", k + 1, l.to)?);
            if ends.0 == ends.1 {
                return Err(GridError::Invalid(format!("line {} is a self-loop", l.id)));
            }
            if !(l.reactance > 0.0) || !l.reactance.is_finite() {
                return Err(GridError::NonPositiveReactance {
                    line: l.id.clone(),
                    reactance: l.reactance,
                });
            }
            if !(l.flow_limit > 0.0) {
                return Err(GridError::Invalid(format!(
                    "line {} has non-positive flow limit {}",
                    l.id, l.flow_limit
                )));
            }
            line_ends.push(ends);
        }
        let mut gen_node = Vec::with_capacity(data.generators.len());
        for (k, g) in data.generators.iter().enumerate() {
            gen_node.push(lookup("generators", k + 1, g.node)?);
            let costs = [g.energy_cost, g.up_reserve_cost, g.down_reserve_cost];
            if costs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
                return Err(GridError::Invalid(format!("generator {} has a negative cost", g.id)));
            }
            if !(g.p_min >= 0.0) || !(g.p_min <= g.p_max) || !g.p_max.is_finite() {
                return Err(GridError::Invalid(format!(
                    "generator {} needs 0 <= p_min <= p_max, got [{}, {}]",
                    g.id, g.p_min, g.p_max
                )));
            }
        }
        let slack = data.slack.unwrap_or_else(|| *index.keys().next().unwrap());
        let slack_idx = *index
            .get(&slack)
            .ok_or_else(|| GridError::Invalid(format!("slack bus {slack} is not a node")))?;

        let components = connected_components(data.nodes.len(), &line_ends);
        if components.len() > 1 {
            let mut listed: Vec<Vec<u32>> = components
                .iter()
                .map(|c| {
                    let mut ids: Vec<u32> = c.iter().map(|&i| data.nodes[i].id).collect();
                    ids.sort_unstable();
                    ids
                })
                .collect();
            listed.sort();
            return Err(GridError::Disconnected { components: listed });
        }
        let reactances: Vec<f64> = data.lines.iter().map(|l| l.reactance).collect();
        let ptdf = compute_ptdf(data.nodes.len(), &line_ends, &reactances, slack_idx)?;
        Ok(GridModel {
            data,
            slack,
            index,
            line_ends,
            gen_node,
            ptdf,
        })
    }

    pub fn data(&self) -> &GridData {
        &self.data
    }

    pub fn nodes(&self) -> &[Node] {
        &self.data.nodes
    }

    pub fn lines(&self) -> &[Line] {
        &self.data.lines
    }

    pub fn generators(&self) -> &[Generator] {
        &self.data.generators
    }

    pub fn num_nodes(&self) -> usize {
        self.data.nodes.len()
    }

    pub fn num_lines(&self) -> usize {
        self.data.lines.len()
    }

    pub fn num_generators(&self) -> usize {
        self.data.generators.len()
    }

    pub fn slack(&self) -> u32 {
        self.slack
    }

    /// Position of a node id in the node ordering.
    pub fn node_index(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.data.lines.iter().position(|l| l.id == id)
    }

    /// Node position of every generator.
    pub fn generator_nodes(&self) -> &[usize] {
        &self.gen_node
    }

    /// Endpoints of every line as node positions.
    pub fn line_ends(&self) -> &[(usize, usize)] {
        &self.line_ends
    }

    /// `|L| x |N|` PTDF matrix; the slack column is zero.
    pub fn ptdf(&self) -> &DMatrix<f64> {
        &self.ptdf
    }

    pub fn flow_limits(&self) -> Vec<f64> {
        self.data.lines.iter().map(|l| l.flow_limit).collect()
    }

    /// Generator-to-node incidence `A`, one unit entry per column.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.num_nodes(), self.num_generators());
        for (g, &n) in self.gen_node.iter().enumerate() {
            a[(n, g)] = 1.0;
        }
        a
    }

    /// `A p`: generator outputs summed per node.
    pub fn nodal_generation(&self, p: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.num_nodes()];
        for (g, &n) in self.gen_node.iter().enumerate() {
            q[n] += p[g];
        }
        q
    }

    /// `M q` without a balance check.
    pub fn flows(&self, injection: &[f64]) -> Vec<f64> {
        let q = DVector::from_column_slice(injection);
        (&self.ptdf * q).iter().copied().collect()
    }

    /// Day-ahead flows `M (A p - d)`.
    pub fn scheduled_flows(&self, p: &[f64], d_hat: &[f64], tol: f64) -> Result<Vec<f64>, GridError> {
        if p.len() != self.num_generators() || d_hat.len() != self.num_nodes() {
            return Err(GridError::Invalid(format!(
                "expected {} dispatch and {} demand entries, got {} and {}",
                self.num_generators(),
                self.num_nodes(),
                p.len(),
                d_hat.len()
            )));
        }
        let mut q = self.nodal_generation(p);
        for (qi, d) in q.iter_mut().zip(d_hat) {
            *qi -= d;
        }
        let imbalance: f64 = q.iter().sum();
        let scale = 1f64.max(d_hat.iter().map(|d| d.abs()).sum());
        if imbalance.abs() > tol * scale {
            return Err(GridError::Imbalance { imbalance });
        }
        Ok(self.flows(&q))
    }

    /// 2-norm condition number of the reduced susceptance matrix.
    pub fn susceptance_condition(&self) -> f64 {
        let slack = self.index[&self.slack];
        let b = reduced_susceptance(self.num_nodes(), &self.line_ends, &self.reactances(), slack);
        if b.nrows() == 0 {
            return 1.0;
        }
        let sv = b.singular_values();
        sv.max() / sv.min()
    }

    fn reactances(&self) -> Vec<f64> {
        self.data.lines.iter().map(|l| l.reactance).collect()
    }
}

/// Union-find over node positions; components in order of their smallest member.
pub fn connected_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn reduced_susceptance(n: usize, ends: &[(usize, usize)], x: &[f64], slack: usize) -> DMatrix<f64> {
    let red = |i: usize| if i < slack { Some(i) } else if i > slack { Some(i - 1) } else { None };
    let mut b = DMatrix::zeros(n - 1, n - 1);
    for (&(f, t), &xl) in ends.iter().zip(x) {
        let y = 1.0 / xl;
        if let Some(i) = red(f) {
            b[(i, i)] += y;
        }
        if let Some(j) = red(t) {
            b[(j, j)] += y;
        }
        if let (Some(i), Some(j)) = (red(f), red(t)) {
            b[(i, j)] -= y;
            b[(j, i)] -= y;
        }
    }
    b
}

/// PTDF matrix of a connected network.
///
/// `ends` are `(from, to)` node positions. Column `slack` is zero: an injection
/// there is absorbed where it enters.
pub fn compute_ptdf(
    n: usize,
    ends: &[(usize, usize)],
    reactances: &[f64],
    slack: usize,
) -> Result<DMatrix<f64>, GridError> {
    if slack >= n {
        return Err(GridError::Invalid(format!("slack position {slack} out of range")));
    }
    for (k, &x) in reactances.iter().enumerate() {
        if !(x > 0.0) {
            return Err(GridError::NonPositiveReactance {
                line: k.to_string(),
                reactance: x,
            });
        }
    }
    let comps = connected_components(n, ends);
    if comps.len() > 1 {
        return Err(GridError::Disconnected {
            components: comps
                .into_iter()
                .map(|c| c.into_iter().map(|i| i as u32).collect())
                .collect(),
        });
    }
    let b = reduced_susceptance(n, ends, reactances, slack);
    let inv = if n > 1 {
        b.lu()
            .try_inverse()
            .ok_or_else(|| GridError::Invalid("reduced susceptance matrix is singular".into()))?
    } else {
        DMatrix::zeros(0, 0)
    };
    // Angle sensitivities with the slack row/column reinserted as zeros.
    let full = |i: usize, j: usize| -> f64 {
        if i == slack || j == slack {
            return 0.0;
        }
        let ri = if i < slack { i } else { i - 1 };
        let rj = if j < slack { j } else { j - 1 };
        inv[(ri, rj)]
    };
    let mut m = DMatrix::zeros(ends.len(), n);
    for (l, &(f, t)) in ends.iter().enumerate() {
        let y = 1.0 / reactances[l];
        for j in 0..n {
            m[(l, j)] = y * (full(f, j) - full(t, j));
        }
    }
    Ok(m)
}
