//! Synchronous CONGEST round engine.
//!
//! Every message is checked against the per-edge budget `B` before delivery.
//! Each node owns an independent pseudo-random stream derived from
//! `(seed, node id)`, so results never depend on evaluation order.

use std::cell::OnceCell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ceil_sqrt, NodeId, WeightedGraph};

pub const TAG_BITS: u32 = 4;
pub const BOOL_BITS: u32 = 1;
pub const DEFAULT_CHARGE_CONSTANT: u64 = 4;
pub const DEFAULT_ROUND_LIMIT: u64 = 1_000_000;

pub type NodeRng = ChaCha8Rng;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("budget violation: node {node} sent {bit_size} bits to {to} in round {round} (B = {budget})")]
    BudgetViolation {
        node: NodeId,
        to: NodeId,
        round: u64,
        bit_size: u32,
        budget: u32,
    },
    #[error("budget violation: B = {budget} bits cannot hold an id, a component id, a weight and a tag ({required} bits)")]
    BudgetTooSmall { budget: u32, required: u32 },
    #[error("node {node} sent to non-neighbor {to} in round {round}")]
    NotANeighbor { node: NodeId, to: NodeId, round: u64 },
    #[error("node {node} sent two messages on edge to {to} in round {round}")]
    DuplicateSend { node: NodeId, to: NodeId, round: u64 },
    #[error("round limit {limit} exceeded")]
    RoundLimitExceeded { limit: u64 },
}

/// Field widths used to size messages for a given graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Widths {
    /// Node ids and component ids: `ceil(log2 n)`, at least 1.
    pub id_bits: u32,
    /// Weights: `ceil(log2(max weight + 1))`.
    pub weight_bits: u32,
    /// Counts in `0..=n`: `ceil(log2(n + 1))`.
    pub count_bits: u32,
}

pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

impl Widths {
    pub fn for_graph(g: &WeightedGraph) -> Self {
        let n = g.node_count() as u64;
        Self {
            id_bits: ceil_log2(n).max(1),
            weight_bits: ceil_log2(g.max_weight() + 1),
            count_bits: ceil_log2(n + 1).max(1),
        }
    }

    /// Smallest admissible budget: one id, one component id, one weight, one tag.
    pub fn minimum_budget(&self) -> u32 {
        2 * self.id_bits + self.weight_bits + TAG_BITS
    }
}

/// A payload type that knows its encoded size.
pub trait Encode {
    fn bit_size(&self, widths: &Widths) -> u32;
}

/// A payload together with its validated size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedMessage<P> {
    payload: P,
    bit_size: u32,
}

impl<P: Encode> BoundedMessage<P> {
    /// Returns `None` if the payload does not fit in `budget` bits.
    pub fn new(payload: P, widths: &Widths, budget: u32) -> Option<Self> {
        let bit_size = payload.bit_size(widths);
        (bit_size <= budget).then_some(Self { payload, bit_size })
    }
}

impl<P> BoundedMessage<P> {
    pub fn payload(&self) -> &P {
        &self.payload
    }

    pub fn into_payload(self) -> P {
        self.payload
    }

    pub fn bit_size(&self) -> u32 {
        self.bit_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Reserved for a message-level component tool. The current build runs
    /// the same protocol as `Charged`.
    Strict,
    /// Component primitives are computed centrally and charged their round cost.
    #[default]
    Charged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    /// Per-edge, per-round budget. `None` means `8 * ceil(log2(n + 1))`,
    /// raised to the minimum admissible budget if smaller (only for n = 1).
    pub b_bits: Option<u32>,
    pub seed: u64,
    pub mode: Mode,
    /// Cap on engine rounds.
    pub round_limit: u64,
    /// `C1` in the primitive round charges.
    pub charge_constant: u64,
    /// Keep per-iteration state snapshots in the trace (memory grows with n).
    pub record_snapshots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            b_bits: None,
            seed: 0,
            mode: Mode::Charged,
            round_limit: DEFAULT_ROUND_LIMIT,
            charge_constant: DEFAULT_CHARGE_CONSTANT,
            record_snapshots: false,
        }
    }
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn budget_for(&self, g: &WeightedGraph) -> u32 {
        self.b_bits.unwrap_or_else(|| {
            let default = 8 * ceil_log2(g.node_count() as u64 + 1).max(1);
            default.max(Widths::for_graph(g).minimum_budget())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    pub raw_rounds: u64,
    pub charged_rounds: u64,
    pub bits_sent: u64,
    pub phases: u64,
    pub iterations: u64,
    pub output_cost: u64,
    #[serde(skip)]
    pub messages: u64,
    /// Largest single message, in bits.
    #[serde(skip)]
    pub max_message_bits: u32,
}

/// Black-box primitives whose round cost is charged rather than simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveKind {
    ComponentIdentify,
    ComponentAggregate,
    GlobalReduce,
}

/// Iterated base-2 logarithm with `log*(1) = 0`.
pub fn log_star(n: u64) -> u64 {
    let mut x = n as f64;
    let mut count = 0;
    while x > 1.0 {
        x = x.log2();
        count += 1;
    }
    count
}

/// Rounds charged for one primitive call on a graph with `n` nodes and
/// diameter `diameter`.
pub fn primitive_charge(kind: PrimitiveKind, n: usize, diameter: usize, c1: u64) -> u64 {
    let d = diameter as u64;
    match kind {
        PrimitiveKind::ComponentIdentify | PrimitiveKind::ComponentAggregate => {
            c1 * (d + ceil_sqrt(n as u64) * log_star(n as u64))
        }
        PrimitiveKind::GlobalReduce => c1 * d,
    }
}

/// Adds the charge for one primitive call to `metrics`.
pub fn charge_rounds(metrics: &mut RunMetrics, kind: PrimitiveKind, g: &WeightedGraph, c1: u64) {
    metrics.charged_rounds += primitive_charge(kind, g.node_count(), g.diameter(), c1);
}

/// What a node program sees about its own node.
#[derive(Debug, Clone, Copy)]
pub struct NodeView<'g> {
    pub id: NodeId,
    pub weight: u64,
    pub neighbors: &'g [NodeId],
    pub node_count: usize,
}

/// Result of one node's local step.
#[derive(Debug, Clone)]
pub struct Step<M> {
    pub outbox: Vec<(NodeId, M)>,
    pub halt: bool,
}

/// A deterministic per-node program for [`run_protocol`].
pub trait NodeProgram {
    type State;
    type Message: Encode;
    type Output;

    fn init(&self, node: &NodeView<'_>) -> Self::State;

    /// One round: consume the messages delivered this round (sent last
    /// round), update local state, and emit at most one message per edge.
    fn step(
        &self,
        node: &NodeView<'_>,
        state: &mut Self::State,
        inbox: &[(NodeId, Self::Message)],
        rng: &mut NodeRng,
    ) -> Step<Self::Message>;

    fn output(&self, node: &NodeView<'_>, state: &Self::State) -> Self::Output;
}

pub type Inboxes<P> = Vec<Vec<(NodeId, P)>>;

/// Round engine bound to one graph and one configuration.
pub struct Network<'g> {
    graph: &'g WeightedGraph,
    widths: Widths,
    budget: u32,
    round_limit: u64,
    charge_constant: u64,
    mode: Mode,
    diameter: OnceCell<usize>,
    streams: Vec<NodeRng>,
    metrics: RunMetrics,
}

impl<'g> Network<'g> {
    pub fn new(graph: &'g WeightedGraph, cfg: &RunConfig) -> Result<Self, RuntimeError> {
        let widths = Widths::for_graph(graph);
        let budget = cfg.budget_for(graph);
        if budget < widths.minimum_budget() {
            return Err(RuntimeError::BudgetTooSmall {
                budget,
                required: widths.minimum_budget(),
            });
        }
        let streams = (0..graph.node_count())
            .map(|v| {
                let mut rng = NodeRng::seed_from_u64(cfg.seed);
                rng.set_stream(v as u64);
                rng
            })
            .collect();
        Ok(Self {
            graph,
            widths,
            budget,
            round_limit: cfg.round_limit,
            charge_constant: cfg.charge_constant,
            mode: cfg.mode,
            diameter: OnceCell::new(),
            streams,
            metrics: RunMetrics::default(),
        })
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn widths(&self) -> &Widths {
        &self.widths
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn metrics_mut(&mut self) -> &mut RunMetrics {
        &mut self.metrics
    }

    pub fn diameter(&self) -> usize {
        *self.diameter.get_or_init(|| self.graph.diameter())
    }

    pub fn view(&self, v: NodeId) -> NodeView<'g> {
        NodeView {
            id: v,
            weight: self.graph.weight(v),
            neighbors: self.graph.neighbors(v),
            node_count: self.graph.node_count(),
        }
    }

    /// Charges one black-box primitive call.
    pub fn charge(&mut self, kind: PrimitiveKind) {
        let d = self.diameter();
        self.metrics.charged_rounds +=
            primitive_charge(kind, self.graph.node_count(), d, self.charge_constant);
    }

    /// The random stream owned by node `v`.
    pub fn rng(&mut self, v: NodeId) -> &mut NodeRng {
        &mut self.streams[v]
    }

    /// Runs one synchronous round. `compose` is called once per node with
    /// that node's id and random stream and returns its outbox; the result is
    /// every node's inbox, sorted by sender.
    pub fn round<P, F>(&mut self, compose: F) -> Result<Inboxes<P>, RuntimeError>
    where
        P: Encode,
        F: Fn(NodeId, &mut NodeRng) -> Vec<(NodeId, P)>,
    {
        let outboxes: Vec<_> = self
            .streams
            .iter_mut()
            .enumerate()
            .map(|(v, rng)| compose(v, rng))
            .collect();
        self.transmit(outboxes)
    }

    fn transmit<P: Encode>(
        &mut self,
        outboxes: Vec<Vec<(NodeId, P)>>,
    ) -> Result<Inboxes<P>, RuntimeError> {
        self.metrics.raw_rounds += 1;
        self.metrics.charged_rounds += 1;
        let round = self.metrics.raw_rounds;
        if round > self.round_limit {
            return Err(RuntimeError::RoundLimitExceeded {
                limit: self.round_limit,
            });
        }
        let mut inboxes: Inboxes<P> = (0..self.graph.node_count()).map(|_| Vec::new()).collect();
        for (node, mut outbox) in outboxes.into_iter().enumerate() {
            outbox.sort_by_key(|(to, _)| *to);
            for pair in outbox.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(RuntimeError::DuplicateSend {
                        node,
                        to: pair[0].0,
                        round,
                    });
                }
            }
            for (to, payload) in outbox {
                if !self.graph.has_edge(node, to) {
                    return Err(RuntimeError::NotANeighbor { node, to, round });
                }
                let bit_size = payload.bit_size(&self.widths);
                let msg = BoundedMessage::new(payload, &self.widths, self.budget).ok_or(
                    RuntimeError::BudgetViolation {
                        node,
                        to,
                        round,
                        bit_size,
                        budget: self.budget,
                    },
                )?;
                self.metrics.bits_sent += u64::from(msg.bit_size());
                self.metrics.messages += 1;
                self.metrics.max_message_bits = self.metrics.max_message_bits.max(msg.bit_size());
                inboxes[to].push((node, msg.into_payload()));
            }
        }
        Ok(inboxes)
    }
}

/// Runs `program` on every node until all nodes halt.
///
/// Round `r` delivers the messages sent in round `r - 1`. A halted node is
/// never stepped again; messages addressed to it are still transmitted and
/// counted. Returns each node's output and the run's metrics.
pub fn run_protocol<P: NodeProgram>(
    g: &WeightedGraph,
    program: &P,
    cfg: &RunConfig,
) -> Result<(Vec<P::Output>, RunMetrics), RuntimeError> {
    let mut net = Network::new(g, cfg)?;
    let n = g.node_count();
    let views: Vec<_> = (0..n).map(|v| net.view(v)).collect();
    let mut states: Vec<_> = views.iter().map(|view| program.init(view)).collect();
    let mut halted = vec![false; n];
    let mut inboxes: Inboxes<P::Message> = (0..n).map(|_| Vec::new()).collect();
    while halted.iter().any(|h| !h) {
        let mut outboxes = Vec::with_capacity(n);
        for v in 0..n {
            if halted[v] {
                outboxes.push(Vec::new());
                continue;
            }
            let step = program.step(&views[v], &mut states[v], &inboxes[v], net.rng(v));
            halted[v] = step.halt;
            outboxes.push(step.outbox);
        }
        inboxes = net.transmit(outboxes)?;
    }
    let outputs = views
        .iter()
        .zip(&states)
        .map(|(view, state)| program.output(view, state))
        .collect();
    Ok((outputs, *net.metrics()))
}
