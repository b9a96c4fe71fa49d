//! Weighted graphs `G = (V, E, ω, μ)`.
//!
//! A [`WeightedGraph`] stores symmetric positive edge weights as sorted
//! adjacency lists together with a strictly positive node measure. Self-loops
//! are never stored: the effect of `A + I` style constructions is carried by
//! the measure (see [`Preset::RwSelfloop`]).

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance used for symmetry, stochasticity and detailed-balance
/// checks on user-provided matrices.
pub const TAU: f64 = 1e-9;

/// Relative slack allowed when classifying a node as sub-stochastic.
const SUB_STOCHASTIC_SLACK: f64 = 1e-12;

/// Unweighted, undirected topology without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n: usize,
    adj: Vec<Vec<usize>>,
}

impl Topology {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in edges {
            check_index(i, n)?;
            check_index(j, n)?;
            if i == j {
                return Err(Error::SelfLoopEdge(i));
            }
            adj[i].push(j);
            adj[j].push(i);
        }
        for (i, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateEdge(i.min(w[0]), i.max(w[0])));
            }
        }
        Ok(Self { n, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// Edges as `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }
}

/// The standard Laplacians expressed as choices of `(ω, μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `A - D`: unit weights, unit measure.
    Adj,
    /// `Ã - D̃`: identical to [`Preset::Adj`] since the self-loop difference cancels.
    AdjSelfloop,
    /// `A_rw - I`: unit weights, `μ_i = D_i`.
    Rw,
    /// `Ã_rw - I`: unit weights, `μ_i = D_i + 1`.
    RwSelfloop,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "adj" => Ok(Preset::Adj),
            "adj_selfloop" => Ok(Preset::AdjSelfloop),
            "rw" => Ok(Preset::Rw),
            "rw_selfloop" => Ok(Preset::RwSelfloop),
            other => Err(format!(
                "unknown preset `{other}` (expected adj, adj_selfloop, rw or rw_selfloop)"
            )),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Adj => "adj",
            Preset::AdjSelfloop => "adj_selfloop",
            Preset::Rw => "rw",
            Preset::RwSelfloop => "rw_selfloop",
        })
    }
}

/// A finite undirected graph with symmetric positive edge weights and a
/// positive node measure. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    mu: Vec<f64>,
}

impl WeightedGraph {
    /// Builds and validates a graph from an undirected weighted edge list.
    pub fn new(n: usize, edges: &[(usize, usize, f64)], mu: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if mu.len() != n {
            return Err(Error::MeasureLength {
                expected: n,
                got: mu.len(),
            });
        }
        for (node, &value) in mu.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveMeasure { node, value });
            }
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, weight) in edges {
            check_index(i, n)?;
            check_index(j, n)?;
            if i == j {
                return Err(Error::SelfLoopEdge(i));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::NonPositiveWeight { i, j, weight });
            }
            adj[i].push((j, weight));
            adj[j].push((i, weight));
        }
        for (i, list) in adj.iter_mut().enumerate() {
            list.sort_by_key(|&(j, _)| j);
            if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::DuplicateEdge(i.min(w[0].0), i.max(w[0].0)));
            }
        }
        Ok(Self { adj, mu })
    }

    /// Unit-weight graph on `topology` with the measure prescribed by `preset`.
    pub fn from_preset(topology: &Topology, preset: Preset) -> Result<Self> {
        let n = topology.n();
        let mu = (0..n)
            .map(|i| {
                let d = topology.degree(i) as f64;
                match preset {
                    Preset::Adj | Preset::AdjSelfloop => Ok(1.0),
                    Preset::Rw if d == 0.0 => Err(Error::IsolatedNode(i)),
                    Preset::Rw => Ok(d),
                    Preset::RwSelfloop => Ok(d + 1.0),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let edges: Vec<_> = topology.edges().into_iter().map(|(i, j)| (i, j, 1.0)).collect();
        Self::new(n, &edges, mu)
    }

    /// Graph induced by symmetric attention scores: `ω_ij = exp(e_ij)` on the
    /// edges of `topology` and `μ_i = exp(e_ii) + Σ_j ω_ij`.
    ///
    /// Only the entries on the topology's edges and the diagonal are read.
    pub fn from_attention(scores: &DMatrix<f64>, topology: &Topology) -> Result<Self> {
        let n = topology.n();
        if scores.nrows() != scores.ncols() {
            return Err(Error::NotSquare(scores.nrows(), scores.ncols()));
        }
        if scores.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: scores.nrows(),
            });
        }
        let mut edges = Vec::new();
        for (i, j) in topology.edges() {
            let (a, b) = (scores[(i, j)], scores[(j, i)]);
            if !a.is_finite() || !b.is_finite() || !approx_eq(a, b, TAU) {
                return Err(Error::AsymmetricScores(i, j));
            }
            edges.push((i, j, a.exp()));
        }
        let mut mu: Vec<f64> = (0..n).map(|i| scores[(i, i)].exp()).collect();
        for &(i, j, w) in &edges {
            mu[i] += w;
            mu[j] += w;
        }
        Self::new(n, &edges, mu)
    }

    /// Graph of a reversible random walk: `μ` from [`reversible_measure`] and
    /// `ω_ij = P_ij μ_i`.
    pub fn from_reversible_walk(p: &DMatrix<f64>) -> Result<Self> {
        let mu = reversible_measure(p)?;
        let n = mu.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if p[(i, j)] > 0.0 {
                    edges.push((i, j, 0.5 * (p[(i, j)] * mu[i] + p[(j, i)] * mu[j])));
                }
            }
        }
        Self::new(n, &edges, mu)
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Neighbours of `i` as `(j, ω_ij)`, ascending in `j`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let list = self.adj.get(i)?;
        list.binary_search_by_key(&j, |&(k, _)| k).ok().map(|pos| list[pos].1)
    }

    /// Undirected edges `(i, j, ω)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&(j, _)| j > i).map(move |&(j, w)| (i, j, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn topology(&self) -> Topology {
        let edges: Vec<_> = self.edges().map(|(i, j, _)| (i, j)).collect();
        Topology::new(self.n(), &edges).expect("weighted graph has a valid topology")
    }

    /// `μ¹_i = Σ_{j ∈ N_i} ω_ij`.
    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum()
    }

    /// `|V|_μ`.
    pub fn total_measure(&self) -> f64 {
        self.mu.iter().sum()
    }

    /// `M_max = max_i μ¹_i / μ_i`.
    pub fn m_max(&self) -> f64 {
        (0..self.n())
            .map(|i| self.weighted_degree(i) / self.mu[i])
            .fold(0.0, f64::max)
    }

    /// First node violating `Σ_j ω_ij ≤ μ_i`, if any.
    pub fn sub_stochastic_violation(&self) -> Option<usize> {
        (0..self.n()).find(|&i| self.weighted_degree(i) > self.mu[i] * (1.0 + SUB_STOCHASTIC_SLACK))
    }

    pub fn is_sub_stochastic(&self) -> bool {
        self.sub_stochastic_violation().is_none()
    }

    /// True when `Σ_j ω_ij = μ_i` at every node, i.e. the random walk has no
    /// holding mass.
    pub fn is_stochastic(&self) -> bool {
        (0..self.n()).all(|i| approx_eq(self.weighted_degree(i), self.mu[i], 1e-12))
    }

    /// Connected component label per node, labels assigned in order of the
    /// smallest node of each component.
    pub fn component_labels(&self) -> (usize, Vec<usize>) {
        let n = self.n();
        let mut labels = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if labels[start] != usize::MAX {
                continue;
            }
            labels[start] = count;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adj[u] {
                    if labels[v] == usize::MAX {
                        labels[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (count, labels)
    }

    pub fn is_connected(&self) -> bool {
        self.component_labels().0 == 1
    }

    /// Two-colouring by BFS on every component; `None` if an odd cycle exists.
    pub fn two_coloring(&self) -> Option<Vec<u8>> {
        let n = self.n();
        let mut color = vec![u8::MAX; n];
        let mut queue = VecDeque::new();
        for start in 0..n {
            if color[start] != u8::MAX {
                continue;
            }
            color[start] = 0;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adj[u] {
                    if color[v] == u8::MAX {
                        color[v] = 1 - color[u];
                        queue.push_back(v);
                    } else if color[v] == color[u] {
                        return None;
                    }
                }
            }
        }
        Some(color)
    }

    pub fn is_bipartite(&self) -> bool {
        self.two_coloring().is_some()
    }

    pub fn stats(&self) -> GraphStats {
        let (component_count, component_labels) = self.component_labels();
        GraphStats {
            total_measure: self.total_measure(),
            m_max: self.m_max(),
            component_count,
            component_labels,
            is_bipartite_structural: self.is_bipartite(),
            sub_stochastic: self.is_sub_stochastic(),
        }
    }
}

/// Aggregate quantities of a [`WeightedGraph`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub total_measure: f64,
    pub m_max: f64,
    pub component_count: usize,
    pub component_labels: Vec<usize>,
    pub is_bipartite_structural: bool,
    pub sub_stochastic: bool,
}

pub fn graph_stats(g: &WeightedGraph) -> GraphStats {
    g.stats()
}

/// Recovers a measure `μ` (normalised so that `min μ_i = 1`) satisfying
/// detailed balance `P_ij μ_i = P_ji μ_j` for a row-stochastic `P`.
///
/// Ratios are propagated along a BFS spanning tree of the support of `P`;
/// every non-tree edge is then checked for consistency.
pub fn reversible_measure(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    if n != p.ncols() {
        return Err(Error::NotSquare(n, p.ncols()));
    }
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let v = p[(i, j)];
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::NotStochastic { row: i, sum: f64::NAN });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > TAU {
            return Err(Error::NotStochastic { row: i, sum });
        }
        for j in (i + 1)..n {
            if (p[(i, j)] > 0.0) != (p[(j, i)] > 0.0) {
                return Err(Error::AsymmetricSupport(i, j));
            }
        }
    }

    let mut mu = vec![0.0; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::from([0]);
    mu[0] = 1.0;
    parent[0] = 0;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if v != u && p[(u, v)] > 0.0 && parent[v] == usize::MAX {
                mu[v] = mu[u] * p[(u, v)] / p[(v, u)];
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    if parent.contains(&usize::MAX) {
        return Err(Error::DisconnectedSupport);
    }

    let scale = mu.iter().cloned().fold(0.0, f64::max);
    for i in 0..n {
        for j in (i + 1)..n {
            if p[(i, j)] > 0.0 && (p[(i, j)] * mu[i] - p[(j, i)] * mu[j]).abs() > TAU * scale {
                return Err(Error::NotReversible(i, j));
            }
        }
    }
    let min = mu.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(mu.into_iter().map(|m| m / min).collect())
}

fn check_index(index: usize, n: usize) -> Result<()> {
    if index < n {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index, n })
    }
}

fn approx_eq(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
