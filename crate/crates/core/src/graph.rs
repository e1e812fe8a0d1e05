//! Problem instances: node-weighted undirected graphs, their text format,
//! and the instance families used by the experiments.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

/// Weights must satisfy `1 <= c(v) <= max(n, 2)^k`; `k` defaults to this value.
pub const DEFAULT_WEIGHT_EXPONENT: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("graph must have at least one node")]
    Empty,
    #[error("expected {expected} weights, found {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("weight of node {node} is {weight}, outside [1, {max}]")]
    WeightOutOfRange { node: NodeId, weight: u64, max: u64 },
    #[error("edge #{index} ({node}, {node}) is a self-loop")]
    SelfLoop { index: usize, node: NodeId },
    #[error("edge #{index} ({u}, {v}) has an endpoint outside 0..{n}")]
    EdgeOutOfRange {
        index: usize,
        u: NodeId,
        v: NodeId,
        n: usize,
    },
    #[error("edge #{index} ({u}, {v}) is a duplicate edge")]
    DuplicateEdge { index: usize, u: NodeId, v: NodeId },
    #[error("graph is disconnected: node {unreachable} is unreachable from node 0")]
    Disconnected { unreachable: NodeId },
    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Connected undirected graph with positive integer node weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    weights: Vec<u64>,
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

/// On-disk document: `{"n": .., "weights": [..], "edges": [[u, v], ..]}`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    n: usize,
    weights: Vec<u64>,
    edges: Vec<[NodeId; 2]>,
}

pub fn weight_bound(n: usize, exponent: u32) -> u64 {
    (n.max(2) as u64).saturating_pow(exponent)
}

impl WeightedGraph {
    /// Builds and validates a graph. Every invariant of the instance type is
    /// checked, including connectivity.
    pub fn new(weights: Vec<u64>, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        Self::with_exponent(weights, edges, DEFAULT_WEIGHT_EXPONENT)
    }

    pub fn with_exponent(
        weights: Vec<u64>,
        edges: &[(NodeId, NodeId)],
        exponent: u32,
    ) -> Result<Self, GraphError> {
        let n = weights.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let max = weight_bound(n, exponent);
        if let Some((node, &weight)) = weights
            .iter()
            .enumerate()
            .find(|(_, &w)| w == 0 || w > max)
        {
            return Err(GraphError::WeightOutOfRange { node, weight, max });
        }
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for (index, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(GraphError::EdgeOutOfRange { index, u, v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop { index, node: u });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge { index, u, v });
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let graph = Self {
            weights,
            adjacency,
            edge_count: seen.len(),
        };
        let dist = graph.bfs(0);
        if let Some(unreachable) = dist.iter().position(|d| d.is_none()) {
            return Err(GraphError::Disconnected { unreachable });
        }
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn weight(&self, v: NodeId) -> u64 {
        self.weights[v]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn max_weight(&self) -> u64 {
        self.weights.iter().copied().max().unwrap_or(1)
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// `Cost(T)`, the total weight of a node set.
    pub fn cost(&self, nodes: &[NodeId]) -> u64 {
        nodes.iter().map(|&v| self.weights[v]).sum()
    }

    /// True iff every node is in `nodes` or adjacent to a member.
    pub fn is_dominating(&self, nodes: &[NodeId]) -> bool {
        let mut dominated = vec![false; self.node_count()];
        for &v in nodes {
            dominated[v] = true;
            for &u in &self.adjacency[v] {
                dominated[u] = true;
            }
        }
        dominated.into_iter().all(|d| d)
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::from([source]);
        dist[source] = Some(0);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &u in &self.adjacency[v] {
                if dist[u].is_none() {
                    dist[u] = Some(d + 1);
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Exact hop diameter by BFS from every node.
    pub fn diameter(&self) -> usize {
        (0..self.node_count())
            .map(|s| self.bfs(s).into_iter().flatten().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Serializes to the graph file format. Edges are emitted sorted, so the
    /// output is byte-stable.
    pub fn to_json(&self) -> String {
        let doc = GraphDocument {
            n: self.node_count(),
            weights: self.weights.clone(),
            edges: self.edges().map(|(u, v)| [u, v]).collect(),
        };
        let mut out = serde_json::to_string(&doc).expect("graph document serializes");
        out.push('\n');
        out
    }

    /// Returns a copy with node `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[NodeId]) -> Result<Self, GraphError> {
        let mut weights = vec![0; self.node_count()];
        for (v, &w) in self.weights.iter().enumerate() {
            weights[perm[v]] = w;
        }
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Self::new(weights, &edges)
    }
}

/// Parses and validates a graph document.
pub fn load_graph(text: &str) -> Result<WeightedGraph, GraphError> {
    let doc: GraphDocument = serde_json::from_str(text).map_err(|e| GraphError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.weights.len() != doc.n {
        return Err(GraphError::WeightCount {
            expected: doc.n,
            found: doc.weights.len(),
        });
    }
    let edges: Vec<_> = doc.edges.iter().map(|&[u, v]| (u, v)).collect();
    WeightedGraph::new(doc.weights, &edges)
}

/// Two-party set-disjointness input encoded into the lower-bound family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointnessInstance {
    pub universe_size: usize,
    /// Alice's set, elements in `1..=universe_size`.
    pub set_x: BTreeSet<usize>,
    /// Bob's set, elements in `1..=universe_size`.
    pub set_y: BTreeSet<usize>,
    /// Approximation factor the instance is designed to defeat.
    pub alpha: u64,
}

impl DisjointnessInstance {
    pub fn new(
        universe_size: usize,
        set_x: impl IntoIterator<Item = usize>,
        set_y: impl IntoIterator<Item = usize>,
        alpha: u64,
    ) -> Result<Self, GraphError> {
        let inst = Self {
            universe_size,
            set_x: set_x.into_iter().collect(),
            set_y: set_y.into_iter().collect(),
            alpha,
        };
        let in_range = |s: &BTreeSet<usize>| s.iter().all(|&i| (1..=universe_size).contains(&i));
        if universe_size == 0 || alpha == 0 {
            return Err(GraphError::InvalidParameter(
                "universe size and alpha must be positive".into(),
            ));
        }
        if !in_range(&inst.set_x) || !in_range(&inst.set_y) {
            return Err(GraphError::InvalidParameter(format!(
                "set elements must lie in 1..={universe_size}"
            )));
        }
        Ok(inst)
    }

    pub fn intersects(&self) -> bool {
        self.set_x.intersection(&self.set_y).next().is_some()
    }
}

/// Cycle of `2k` nodes alternating weight 1 and `ceil(sqrt(2k+1))`, plus a
/// center of weight `2k+1` adjacent to every weight-1 node. Connecting the
/// weight-1 dominating set through cheap cycle paths is expensive here, while
/// the single center connects everything.
///
/// Node `2i` has weight 1, node `2i+1` is heavy, node `2k` is the center.
pub fn gen_cycle_center(k: usize) -> Result<WeightedGraph, GraphError> {
    if k < 2 {
        return Err(GraphError::InvalidParameter(format!(
            "cycle-center needs k >= 2, got {k}"
        )));
    }
    let n = 2 * k + 1;
    let heavy = ceil_sqrt(n as u64);
    let center = 2 * k;
    let mut weights: Vec<u64> = (0..2 * k).map(|i| if i % 2 == 0 { 1 } else { heavy }).collect();
    weights.push(n as u64);
    let mut edges: Vec<_> = (0..2 * k).map(|i| (i, (i + 1) % (2 * k))).collect();
    edges.extend((0..2 * k).step_by(2).map(|i| (i, center)));
    WeightedGraph::new(weights, &edges)
}

pub fn ceil_sqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r * r < x {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= x {
        r -= 1;
    }
    r
}

/// Layout of a lower-bound instance, for tests and diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundLayout {
    pub path_count: usize,
    pub path_len: usize,
    /// Number of tree leaves, `2^ceil(log2 L)`; leaves past column `L-1` are padding.
    pub leaf_count: usize,
    pub heavy_weight: u64,
}

impl LowerBoundLayout {
    /// Node on path `i` (0-based), column `j`.
    pub fn path_node(&self, i: usize, j: usize) -> NodeId {
        i * self.path_len + j
    }

    /// Tree node with heap index `t` (root 0, children `2t+1`, `2t+2`).
    pub fn tree_node(&self, t: usize) -> NodeId {
        self.path_count * self.path_len + t
    }

    pub fn leaf(&self, column: usize) -> NodeId {
        self.tree_node(self.leaf_count - 1 + column)
    }

    pub fn alice(&self) -> NodeId {
        self.leaf(0)
    }

    pub fn bob(&self) -> NodeId {
        self.leaf(self.path_len - 1)
    }

    pub fn node_count(&self) -> usize {
        self.path_count * self.path_len + 2 * self.leaf_count - 1
    }
}

/// `p` parallel paths of `L` nodes under a complete binary tree whose leaves
/// sit on top of the path columns, with the disjointness input encoded in
/// the weights of the path endpoints. Every CDS costs at least
/// `M = alpha * n + 1` iff the two sets intersect.
pub fn gen_lower_bound(
    inst: &DisjointnessInstance,
    path_count: usize,
    path_len: usize,
) -> Result<(WeightedGraph, LowerBoundLayout), GraphError> {
    if path_count == 0 || path_len < 2 || inst.universe_size != path_count {
        return Err(GraphError::InconsistentDimensions(format!(
            "paths={path_count}, len={path_len}, universe={} (need paths = universe >= 1, len >= 2)",
            inst.universe_size
        )));
    }
    let leaf_count = path_len.next_power_of_two();
    let mut layout = LowerBoundLayout {
        path_count,
        path_len,
        leaf_count,
        heavy_weight: 0,
    };
    let n = layout.node_count();
    let heavy = inst
        .alpha
        .checked_mul(n as u64)
        .and_then(|x| x.checked_add(1))
        .ok_or_else(|| GraphError::InvalidParameter("alpha * n + 1 overflows".into()))?;
    layout.heavy_weight = heavy;

    let mut weights = vec![1u64; n];
    let mut edges = Vec::new();
    for i in 0..path_count {
        for j in 0..path_len {
            let v = layout.path_node(i, j);
            if j + 1 < path_len {
                edges.push((v, layout.path_node(i, j + 1)));
            }
            edges.push((layout.leaf(j), v));
        }
        if inst.set_x.contains(&(i + 1)) {
            weights[layout.path_node(i, 0)] = heavy;
        }
        if inst.set_y.contains(&(i + 1)) {
            weights[layout.path_node(i, path_len - 1)] = heavy;
        }
    }
    for t in 1..(2 * leaf_count - 1) {
        edges.push((layout.tree_node((t - 1) / 2), layout.tree_node(t)));
    }
    for column in 0..leaf_count {
        let leaf = layout.leaf(column);
        if leaf != layout.alice() && leaf != layout.bob() {
            weights[leaf] = heavy;
        }
    }
    let graph = WeightedGraph::new(weights, &edges)?;
    Ok((graph, layout))
}

/// Erdős–Rényi `G(n, p)` with uniform weights in `[1, weight_max]`, where
/// `weight_max` is clamped to the weight bound `max(n, 2)^3`. If the
/// draw is disconnected, components are chained together by random edges.
/// Deterministic for a fixed seed.
pub fn gen_random_connected(
    n: usize,
    edge_prob: f64,
    weight_max: u64,
    seed: u64,
) -> Result<WeightedGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::InvalidParameter("n must be positive".into()));
    }
    if !(edge_prob > 0.0 && edge_prob <= 1.0) {
        return Err(GraphError::InvalidParameter(format!(
            "edge probability {edge_prob} not in (0, 1]"
        )));
    }
    let max = weight_bound(n, DEFAULT_WEIGHT_EXPONENT);
    if weight_max == 0 {
        return Err(GraphError::InvalidParameter("weight_max must be positive".into()));
    }
    let weight_max = weight_max.min(max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut uf = crate::union_find::UnionFind::new(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(edge_prob) {
                edges.push((u, v));
                uf.union(u, v);
            }
        }
    }
    let mut groups: Vec<Vec<NodeId>> = Vec::new();
    let mut root_group = vec![usize::MAX; n];
    for v in 0..n {
        let r = uf.find(v);
        if root_group[r] == usize::MAX {
            root_group[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_group[r]].push(v);
    }
    groups.shuffle(&mut rng);
    for pair in groups.windows(2) {
        let a = *pair[0].choose(&mut rng).expect("nonempty group");
        let b = *pair[1].choose(&mut rng).expect("nonempty group");
        edges.push((a, b));
    }
    let weights = (0..n).map(|_| rng.gen_range(1..=weight_max)).collect();
    WeightedGraph::new(weights, &edges)
}
