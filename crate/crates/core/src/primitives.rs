//! Component identification, in-component aggregation and global
//! reductions.
//!
//! These stand in for the classic MST-based component tool. Results are
//! computed centrally and each call charges `C1 * (D + ceil(sqrt n) * log* n)`
//! rounds (`C1 * D` for global reductions). `Mode::Strict` currently routes
//! through the same implementation.

use std::collections::{BTreeMap, VecDeque};

use crate::graph::NodeId;
use crate::runtime::{Network, PrimitiveKind};

/// `label[v] == label[u]` iff `u` and `v` are in the same component of the
/// subgraph `H`. Labels are the minimum node id of each component; nodes
/// outside `H` have no label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    labels: Vec<Option<NodeId>>,
}

impl ComponentLabeling {
    pub fn label(&self, v: NodeId) -> Option<NodeId> {
        self.labels[v]
    }

    pub fn labels(&self) -> &[Option<NodeId>] {
        &self.labels
    }

    /// Members of each component, keyed by label.
    pub fn components(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (v, label) in self.labels.iter().enumerate() {
            if let Some(l) = label {
                out.entry(*l).or_default().push(v);
            }
        }
        out
    }

    pub fn component_count(&self) -> usize {
        self.labels
            .iter()
            .enumerate()
            .filter(|(v, l)| **l == Some(*v))
            .count()
    }
}

/// Labels the components of `H`, the subgraph with nodes `member` and the
/// edges of `G` accepted by `edge_member` between members.
pub fn identify_components(
    net: &mut Network<'_>,
    member: impl Fn(NodeId) -> bool,
    edge_member: impl Fn(NodeId, NodeId) -> bool,
) -> ComponentLabeling {
    net.charge(PrimitiveKind::ComponentIdentify);
    let g = net.graph();
    let n = g.node_count();
    let mut labels = vec![None; n];
    let mut queue = VecDeque::new();
    for root in 0..n {
        if labels[root].is_some() || !member(root) {
            continue;
        }
        // ascending root order makes the root the minimum id of its component
        labels[root] = Some(root);
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for &u in g.neighbors(v) {
                if labels[u].is_none() && member(u) && edge_member(v, u) {
                    labels[u] = Some(root);
                    queue.push_back(u);
                }
            }
        }
    }
    ComponentLabeling { labels }
}

/// Aggregation over the members of a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateOp {
    Max,
    Sum,
    /// The `k <= 3` largest values, value-descending, ties by node id descending.
    TopK(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AggregateValue {
    Scalar(u64),
    Top(Vec<u64>),
}

impl AggregateValue {
    pub fn scalar(&self) -> Option<u64> {
        match self {
            Self::Scalar(x) => Some(*x),
            Self::Top(_) => None,
        }
    }

    pub fn top(&self) -> Option<&[u64]> {
        match self {
            Self::Top(v) => Some(v),
            Self::Scalar(_) => None,
        }
    }
}

pub const MAX_TOP_K: usize = 3;

/// Every labeled node receives the aggregate of `x` over its component.
///
/// # Panics
///
/// Panics if `op` is `TopK(k)` with `k > 3`.
pub fn component_aggregate(
    net: &mut Network<'_>,
    labeling: &ComponentLabeling,
    x: &[u64],
    op: AggregateOp,
) -> Vec<Option<AggregateValue>> {
    match op {
        AggregateOp::TopK(k) => {
            let items: Vec<Vec<u64>> = x.iter().map(|&v| vec![v]).collect();
            component_top_k(net, labeling, &items, k)
                .into_iter()
                .map(|top| top.map(AggregateValue::Top))
                .collect()
        }
        AggregateOp::Max | AggregateOp::Sum => {
            net.charge(PrimitiveKind::ComponentAggregate);
            let mut acc: BTreeMap<NodeId, u64> = BTreeMap::new();
            for (v, label) in labeling.labels.iter().enumerate() {
                if let Some(l) = label {
                    let slot = acc.entry(*l).or_insert(0);
                    *slot = match op {
                        AggregateOp::Max => (*slot).max(x[v]),
                        _ => *slot + x[v],
                    };
                }
            }
            labeling
                .labels
                .iter()
                .map(|l| l.map(|l| AggregateValue::Scalar(acc[&l])))
                .collect()
        }
    }
}

/// Top-`k` over a multiset of values held at the nodes of each component.
/// Each node may hold several values; ties are broken by holder id
/// descending, which only matters for which equal value is reported.
///
/// # Panics
///
/// Panics if `k > 3`.
pub fn component_top_k(
    net: &mut Network<'_>,
    labeling: &ComponentLabeling,
    items: &[Vec<u64>],
    k: usize,
) -> Vec<Option<Vec<u64>>> {
    assert!(k <= MAX_TOP_K, "top-k aggregation supports k <= {MAX_TOP_K}, got {k}");
    net.charge(PrimitiveKind::ComponentAggregate);
    let mut acc: BTreeMap<NodeId, Vec<(u64, NodeId)>> = BTreeMap::new();
    for (v, label) in labeling.labels.iter().enumerate() {
        if let Some(l) = label {
            let entry = acc.entry(*l).or_default();
            entry.extend(items[v].iter().map(|&x| (x, v)));
        }
    }
    let tops: BTreeMap<NodeId, Vec<u64>> = acc
        .into_iter()
        .map(|(l, mut vals)| {
            vals.sort_unstable_by(|a, b| b.cmp(a));
            (l, vals.into_iter().take(k).map(|(x, _)| x).collect())
        })
        .collect();
    labeling
        .labels
        .iter()
        .map(|l| l.map(|l| tops[&l].clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Max,
    Min,
    Sum,
    Count,
}

/// Result of a global reduction, known to all nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Value(u64),
    /// Max or min over no defined inputs; stands for the neutral element.
    Empty,
}

impl Reduction {
    pub fn value(self) -> Option<u64> {
        match self {
            Self::Value(v) => Some(v),
            Self::Empty => None,
        }
    }
}

/// Reduces `x` over all nodes. Absent entries are neutral; `Count` counts
/// present nonzero entries.
pub fn global_reduce(net: &mut Network<'_>, x: &[Option<u64>], op: ReduceOp) -> Reduction {
    net.charge(PrimitiveKind::GlobalReduce);
    let present = x.iter().flatten().copied();
    match op {
        ReduceOp::Max => present.max().map_or(Reduction::Empty, Reduction::Value),
        ReduceOp::Min => present.min().map_or(Reduction::Empty, Reduction::Value),
        ReduceOp::Sum => Reduction::Value(present.sum()),
        ReduceOp::Count => Reduction::Value(present.filter(|&v| v != 0).count() as u64),
    }
}

/// Global maximum of an arbitrary ordered key, e.g. an exact efficiency.
pub fn global_max<T: Ord + Clone>(
    net: &mut Network<'_>,
    values: impl IntoIterator<Item = Option<T>>,
) -> Option<T> {
    net.charge(PrimitiveKind::GlobalReduce);
    values.into_iter().flatten().max()
}
