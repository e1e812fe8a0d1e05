//! The eight steps of one iteration. Each step runs real engine rounds for
//! its neighbor exchanges and charged primitives for component-wide and
//! global aggregation.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::stars::{augment, best_basic_star, minimal_core, AugmentedStar, BasicStar, CenterView, LegInfo, LegReport};
use super::state::PhaseState;
use crate::graph::NodeId;
use crate::primitives::{component_aggregate, component_top_k, global_max, global_reduce, AggregateOp, ReduceOp};
use crate::rational::Rational;
use crate::runtime::{Encode, Network, RuntimeError, Widths, BOOL_BITS, TAG_BITS};

/// Proposals a node forwards to one component.
pub const MAX_PROPOSALS: usize = 3;
/// Grants a component hands out per iteration.
pub const MAX_GRANTS: usize = 3;
const LIST_LEN_BITS: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhaseMessage {
    /// Sent by every non-white node: its current component and whether
    /// that component is satisfied.
    Status { component: NodeId, satisfied: bool },
    SingleComponent {
        component: NodeId,
        satisfied: bool,
        node: NodeId,
        weight: u64,
    },
    AllSatisfied { node: NodeId, weight: u64 },
    /// From a center to each member of its star.
    ActiveStar { responsible_for: Option<NodeId> },
    StarCount { component: NodeId, count: u64 },
    Mark,
    Proposals { component: NodeId, centers: Vec<NodeId> },
    Grants { component: NodeId, centers: Vec<NodeId> },
    GrantCount { count: u64 },
    Commit,
    BlueSingle { component: NodeId, node: NodeId },
    BlueTwoOrMore { node: NodeId },
    CleanupProposal { component: NodeId, partner: Option<NodeId> },
    CleanupGrant { component: NodeId, proposer: NodeId },
    PartnerGranted,
}

impl Encode for PhaseMessage {
    fn bit_size(&self, w: &Widths) -> u32 {
        let id = w.id_bits;
        let list = |k: usize| LIST_LEN_BITS + k as u32 * id;
        let option = |o: &Option<NodeId>| BOOL_BITS + o.map_or(0, |_| id);
        TAG_BITS
            + match self {
                Self::Status { .. } => id + BOOL_BITS,
                Self::SingleComponent { .. } => 2 * id + BOOL_BITS + w.weight_bits,
                Self::AllSatisfied { .. } => id + w.weight_bits,
                Self::ActiveStar { responsible_for } => option(responsible_for),
                Self::StarCount { .. } => id + w.count_bits,
                Self::Mark | Self::Commit | Self::PartnerGranted => 0,
                Self::Proposals { centers, .. } | Self::Grants { centers, .. } => {
                    id + list(centers.len())
                }
                Self::GrantCount { .. } => w.count_bits,
                Self::BlueSingle { .. } => 2 * id,
                Self::BlueTwoOrMore { .. } => id,
                Self::CleanupProposal { partner, .. } => id + option(partner),
                Self::CleanupGrant { .. } => 2 * id,
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjacentComponent {
    pub label: NodeId,
    pub satisfied: bool,
    /// Lowest-id neighbor inside the component.
    pub contact: NodeId,
}

/// What a node learned from its neighbors' status messages.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LocalView {
    /// Sorted by label.
    pub components: Vec<AdjacentComponent>,
    /// Neighbors that sent no status.
    pub white_neighbors: Vec<NodeId>,
}

impl LocalView {
    pub fn contact(&self, label: NodeId) -> Option<NodeId> {
        self.components
            .iter()
            .find(|c| c.label == label)
            .map(|c| c.contact)
    }

    pub fn unsatisfied(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.components
            .iter()
            .filter(|c| !c.satisfied)
            .map(|c| c.label)
    }
}

/// One round: every non-white node tells its neighbors its component.
pub fn broadcast_status(
    net: &mut Network<'_>,
    state: &PhaseState,
) -> Result<Vec<LocalView>, RuntimeError> {
    let g = net.graph();
    let inbox = net.round(|v, _| match state.current_label(v) {
        Some(component) => {
            let satisfied = state.current_satisfied(component);
            g.neighbors(v)
                .iter()
                .map(|&u| (u, PhaseMessage::Status { component, satisfied }))
                .collect()
        }
        None => Vec::new(),
    })?;
    Ok(inbox
        .iter()
        .enumerate()
        .map(|(v, msgs)| {
            let mut comps: BTreeMap<NodeId, AdjacentComponent> = BTreeMap::new();
            for (from, msg) in msgs {
                if let PhaseMessage::Status { component, satisfied } = *msg {
                    comps.entry(component).or_insert(AdjacentComponent {
                        label: component,
                        satisfied,
                        contact: *from,
                    });
                }
            }
            let white_neighbors = g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|u| msgs.binary_search_by_key(u, |(from, _)| *from).is_err())
                .collect();
            LocalView {
                components: comps.into_values().collect(),
                white_neighbors,
            }
        })
        .collect())
}

/// S1: refresh components and flags, broadcast status, count the
/// unsatisfied frozen components.
pub fn s1_identify_and_count(
    net: &mut Network<'_>,
    state: &mut PhaseState,
) -> Result<(Vec<LocalView>, usize), RuntimeError> {
    state.refresh(net);
    let views = broadcast_status(net, state)?;
    let leaders: Vec<Option<u64>> = (0..state.node_count())
        .map(|v| {
            let unsatisfied_leader = state.frozen_label(v) == Some(v) && !state.is_satisfied(v);
            Some(u64::from(unsatisfied_leader))
        })
        .collect();
    let count = global_reduce(net, &leaders, ReduceOp::Count)
        .value()
        .unwrap_or(0);
    Ok((views, count as usize))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct S2Outcome {
    /// Per white node: its own adjacency.
    pub centers: Vec<Option<CenterView>>,
    /// Per white node: the legs it heard about.
    pub legs: Vec<Vec<LegInfo>>,
    /// Per white node: its most efficient basic-star.
    pub best: Vec<Option<BasicStar>>,
    /// Global maximum efficiency; `None` if no useful star exists.
    pub rho_star: Option<Rational>,
}

impl S2Outcome {
    pub fn local_efficiency(&self, v: NodeId) -> Option<Rational> {
        self.best[v].as_ref().map(BasicStar::efficiency)
    }
}

/// S2: white nodes that are not self-sufficient describe themselves to
/// their white neighbors; every white node computes its best basic-star;
/// a global max yields `rho*`.
pub fn s2_max_efficiency(
    net: &mut Network<'_>,
    state: &PhaseState,
    views: &[LocalView],
) -> Result<S2Outcome, RuntimeError> {
    let g = net.graph();
    let n = g.node_count();
    let inbox = net.round(|v, _| {
        if !state.is_white(v) {
            return Vec::new();
        }
        let view = &views[v];
        let msg = match view.components.as_slice() {
            [] => None,
            [only] => Some(PhaseMessage::SingleComponent {
                component: only.label,
                satisfied: only.satisfied,
                node: v,
                weight: g.weight(v),
            }),
            many if many.iter().all(|c| c.satisfied) => Some(PhaseMessage::AllSatisfied {
                node: v,
                weight: g.weight(v),
            }),
            _ => None,
        };
        msg.map(|m| view.white_neighbors.iter().map(|&u| (u, m.clone())).collect())
            .unwrap_or_default()
    })?;

    let mut centers = vec![None; n];
    let mut legs = vec![Vec::new(); n];
    let mut best = vec![None; n];
    for v in (0..n).filter(|&v| state.is_white(v)) {
        legs[v] = inbox[v]
            .iter()
            .filter_map(|(_, msg)| match *msg {
                PhaseMessage::SingleComponent {
                    component,
                    satisfied,
                    node,
                    weight,
                } => Some(LegInfo {
                    node,
                    weight,
                    report: LegReport::Single {
                        component,
                        satisfied,
                    },
                }),
                PhaseMessage::AllSatisfied { node, weight } => Some(LegInfo {
                    node,
                    weight,
                    report: LegReport::AllSatisfied,
                }),
                _ => None,
            })
            .collect();
        let center = CenterView {
            node: v,
            weight: g.weight(v),
            components: views[v]
                .components
                .iter()
                .map(|c| (c.label, c.satisfied))
                .collect(),
        };
        best[v] = best_basic_star(&center, &legs[v]);
        centers[v] = Some(center);
    }
    let rho_star = global_max(net, best.iter().map(|b| b.as_ref().map(BasicStar::efficiency)));
    Ok(S2Outcome {
        centers,
        legs,
        best,
        rho_star,
    })
}

/// S3: every white node whose best star is `rho_tilde`-efficient selects a
/// `rho_tilde`-augmented basic-star. Purely local.
pub fn s3_select_augmented(s2: &S2Outcome, rho_tilde: Rational) -> BTreeMap<NodeId, AugmentedStar> {
    s2.best
        .iter()
        .enumerate()
        .filter_map(|(v, best)| {
            let best = best.as_ref().filter(|b| b.efficiency() >= rho_tilde)?;
            let center = s2.centers[v].as_ref()?;
            let core = minimal_core(center, best, rho_tilde);
            Some((v, augment(center, core, &s2.legs[v], rho_tilde)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveDegrees {
    /// Max active-degree over unsatisfied components; `None` if zero.
    pub delta_star: Option<u64>,
    /// Active-degree of every unsatisfied frozen component.
    pub per_component: BTreeMap<NodeId, u64>,
    /// Per node: `(center, component)` pairs it is responsible for.
    pub duties: Vec<Vec<(NodeId, NodeId)>>,
}

/// S4: centers announce their stars, responsible nodes report per-component
/// counts to the component, components sum them, and a global max gives
/// `Delta*`.
pub fn s4_active_degrees(
    net: &mut Network<'_>,
    state: &PhaseState,
    views: &[LocalView],
    stars: &BTreeMap<NodeId, AugmentedStar>,
) -> Result<ActiveDegrees, RuntimeError> {
    let n = state.node_count();
    let inbox = net.round(|v, _| {
        let Some(star) = stars.get(&v) else {
            return Vec::new();
        };
        star.legs()
            .into_iter()
            .map(|u| {
                let responsible_for = star
                    .responsible
                    .iter()
                    .find(|&(_, &r)| r == u)
                    .map(|(&c, _)| c);
                (u, PhaseMessage::ActiveStar { responsible_for })
            })
            .collect()
    })?;
    let mut duties: Vec<Vec<(NodeId, NodeId)>> = vec![Vec::new(); n];
    for (v, duty) in duties.iter_mut().enumerate() {
        if let Some(star) = stars.get(&v) {
            duty.extend(star.responsible.iter().filter(|&(_, &r)| r == v).map(|(&c, _)| (v, c)));
        }
        for (from, msg) in &inbox[v] {
            if let PhaseMessage::ActiveStar {
                responsible_for: Some(c),
            } = *msg
            {
                duty.push((*from, c));
            }
        }
        duty.sort_unstable();
    }

    let inbox = net.round(|v, _| {
        let mut counts: BTreeMap<NodeId, u64> = BTreeMap::new();
        for &(_, c) in &duties[v] {
            *counts.entry(c).or_default() += 1;
        }
        counts
            .into_iter()
            .map(|(component, count)| {
                let contact = views[v].contact(component).expect("responsible node touches its component");
                (contact, PhaseMessage::StarCount { component, count })
            })
            .collect()
    })?;
    let received: Vec<u64> = inbox
        .iter()
        .map(|msgs| {
            msgs.iter()
                .map(|(_, m)| match m {
                    PhaseMessage::StarCount { count, .. } => *count,
                    _ => 0,
                })
                .sum()
        })
        .collect();
    let sums = component_aggregate(net, state.current_labeling(), &received, AggregateOp::Sum);
    let degree_at = |v: NodeId| sums[v].as_ref().and_then(|s| s.scalar()).unwrap_or(0);
    let unsatisfied_degree: Vec<Option<u64>> = (0..n)
        .map(|v| {
            let label = state.current_label(v)?;
            (!state.current_satisfied(label)).then(|| degree_at(v))
        })
        .collect();
    let delta_star = global_reduce(net, &unsatisfied_degree, ReduceOp::Max)
        .value()
        .filter(|&d| d > 0);
    let per_component = state
        .unsatisfied_labels()
        .into_iter()
        .map(|c| (c, degree_at(c)))
        .collect();
    Ok(ActiveDegrees {
        delta_star,
        per_component,
        duties,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposals {
    pub marked: BTreeSet<NodeId>,
    /// Per node: duties whose star is marked.
    pub marked_duties: Vec<Vec<(NodeId, NodeId)>>,
    /// Per node inside a component: center ids received as proposals.
    pub received: Vec<Vec<u64>>,
    /// Component → centers whose proposal reached it.
    pub submitted: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

/// Probability that a center marks its star.
pub fn mark_probability(delta_star: u64) -> Rational {
    Rational::new(1, 5 * delta_star)
}

/// Draws a mark with probability `1/(5 delta_star)`.
pub fn draw_mark(rng: &mut impl Rng, delta_star: u64) -> bool {
    rng.gen_range(0..5 * delta_star) == 0
}

/// Keeps the `MAX_PROPOSALS` lowest center ids.
pub fn prune_proposals(mut centers: Vec<NodeId>) -> Vec<NodeId> {
    centers.sort_unstable();
    centers.dedup();
    centers.truncate(MAX_PROPOSALS);
    centers
}

/// S5: centers mark their star, members learn the mark, and responsible
/// nodes forward proposals to their components.
pub fn s5_mark_and_propose(
    net: &mut Network<'_>,
    views: &[LocalView],
    stars: &BTreeMap<NodeId, AugmentedStar>,
    degrees: &ActiveDegrees,
    delta_star: u64,
) -> Result<Proposals, RuntimeError> {
    let n = views.len();
    let mut marked = BTreeSet::new();
    for &v in stars.keys() {
        if draw_mark(net.rng(v), delta_star) {
            marked.insert(v);
        }
    }
    let inbox = net.round(|v, _| match stars.get(&v) {
        Some(star) if marked.contains(&v) => {
            star.legs().into_iter().map(|u| (u, PhaseMessage::Mark)).collect()
        }
        _ => Vec::new(),
    })?;
    let marked_duties: Vec<Vec<(NodeId, NodeId)>> = (0..n)
        .map(|v| {
            degrees.duties[v]
                .iter()
                .copied()
                .filter(|&(center, _)| {
                    if center == v {
                        marked.contains(&v)
                    } else {
                        inbox[v].binary_search_by_key(&center, |(from, _)| *from).is_ok()
                    }
                })
                .collect()
        })
        .collect();

    let outgoing: Vec<BTreeMap<NodeId, Vec<NodeId>>> = marked_duties
        .iter()
        .map(|duty| {
            let mut per: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
            for &(center, c) in duty {
                per.entry(c).or_default().push(center);
            }
            per.into_iter().map(|(c, cs)| (c, prune_proposals(cs))).collect()
        })
        .collect();
    let inbox = net.round(|v, _| {
        outgoing[v]
            .iter()
            .map(|(&component, centers)| {
                let contact = views[v].contact(component).expect("responsible node touches its component");
                (
                    contact,
                    PhaseMessage::Proposals {
                        component,
                        centers: centers.clone(),
                    },
                )
            })
            .collect()
    })?;
    let mut received = vec![Vec::new(); n];
    let mut submitted: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for (x, msgs) in inbox.iter().enumerate() {
        for (_, msg) in msgs {
            if let PhaseMessage::Proposals { component, centers } = msg {
                received[x].extend(centers.iter().map(|&c| c as u64));
                submitted.entry(*component).or_default().extend(centers);
            }
        }
    }
    Ok(Proposals {
        marked,
        marked_duties,
        received,
        submitted,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grants {
    /// Component → granted centers, largest id first.
    pub per_component: BTreeMap<NodeId, Vec<NodeId>>,
    /// Per white node: what each adjacent component granted.
    pub heard: Vec<BTreeMap<NodeId, Vec<NodeId>>>,
}

/// S6: each component grants the three largest proposing center ids and
/// tells its white neighbors.
pub fn s6_grant(
    net: &mut Network<'_>,
    state: &PhaseState,
    views: &[LocalView],
    proposals: &Proposals,
) -> Result<Grants, RuntimeError> {
    let tops = component_top_k(net, state.current_labeling(), &proposals.received, MAX_GRANTS);
    let granted: Vec<Vec<NodeId>> = tops
        .iter()
        .map(|t| t.iter().flatten().map(|&c| c as NodeId).collect())
        .collect();
    let inbox = net.round(|v, _| {
        if granted[v].is_empty() {
            return Vec::new();
        }
        let component = state.current_label(v).expect("only components grant");
        views[v]
            .white_neighbors
            .iter()
            .map(|&u| {
                (
                    u,
                    PhaseMessage::Grants {
                        component,
                        centers: granted[v].clone(),
                    },
                )
            })
            .collect()
    })?;
    let heard = inbox
        .iter()
        .map(|msgs| {
            msgs.iter()
                .filter_map(|(_, m)| match m {
                    PhaseMessage::Grants { component, centers } => Some((*component, centers.clone())),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let per_component = state
        .current_labeling()
        .components()
        .into_keys()
        .filter(|&l| !granted[l].is_empty())
        .map(|l| (l, granted[l].clone()))
        .collect();
    Ok(Grants {
        per_component,
        heard,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitOutcome {
    /// Marked center → number of its proposals granted.
    pub granted: BTreeMap<NodeId, u64>,
    pub committed: Vec<NodeId>,
    pub grayed: Vec<NodeId>,
    pub grayed_cost: u64,
    /// Frozen components that became satisfied in this step.
    pub newly_satisfied: Vec<NodeId>,
}

/// Commit rule: at least a third of the star's proposals were granted.
pub fn commits(granted: u64, proposals: usize) -> bool {
    3 * granted >= proposals as u64
}

/// S7: responsible nodes report grants to their centers; a marked star
/// with at least a third of its components granted turns gray; flags are
/// recomputed.
pub fn s7_commit(
    net: &mut Network<'_>,
    state: &mut PhaseState,
    stars: &BTreeMap<NodeId, AugmentedStar>,
    proposals: &Proposals,
    grants: &Grants,
) -> Result<CommitOutcome, RuntimeError> {
    let g = net.graph();
    let is_granted = |v: NodeId, center: NodeId, c: NodeId| {
        grants.heard[v]
            .get(&c)
            .is_some_and(|cs| cs.contains(&center))
    };
    let inbox = net.round(|v, _| {
        let mut counts: BTreeMap<NodeId, u64> = BTreeMap::new();
        for &(center, c) in &proposals.marked_duties[v] {
            if center != v {
                *counts.entry(center).or_default() += u64::from(is_granted(v, center, c));
            }
        }
        counts
            .into_iter()
            .filter(|&(_, count)| count > 0)
            .map(|(center, count)| (center, PhaseMessage::GrantCount { count }))
            .collect()
    })?;
    let mut granted = BTreeMap::new();
    let mut committed = Vec::new();
    for &v in &proposals.marked {
        let own = proposals.marked_duties[v]
            .iter()
            .filter(|&&(center, c)| center == v && is_granted(v, v, c))
            .count() as u64;
        let reported: u64 = inbox[v]
            .iter()
            .map(|(_, m)| match m {
                PhaseMessage::GrantCount { count } => *count,
                _ => 0,
            })
            .sum();
        let total = own + reported;
        granted.insert(v, total);
        if commits(total, stars[&v].phi.len()) {
            committed.push(v);
        }
    }
    let inbox = net.round(|v, _| {
        if committed.binary_search(&v).is_ok() {
            stars[&v].legs().into_iter().map(|u| (u, PhaseMessage::Commit)).collect()
        } else {
            Vec::new()
        }
    })?;
    let mut grayed: BTreeSet<NodeId> = committed.iter().copied().collect();
    for (v, msgs) in inbox.iter().enumerate() {
        if !msgs.is_empty() {
            grayed.insert(v);
        }
    }
    let grayed: Vec<NodeId> = grayed.into_iter().collect();
    let newly_satisfied = gray_and_refresh(net, state, &grayed);
    Ok(CommitOutcome {
        granted,
        committed,
        grayed_cost: g.cost(&grayed),
        grayed,
        newly_satisfied,
    })
}

fn gray_and_refresh(net: &mut Network<'_>, state: &mut PhaseState, nodes: &[NodeId]) -> Vec<NodeId> {
    let before = state.unsatisfied_labels();
    for &v in nodes {
        state.set_gray(v);
    }
    state.refresh(net);
    before
        .into_iter()
        .filter(|&c| state.is_satisfied(c))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanupOutcome {
    pub blue: Vec<NodeId>,
    /// Unsatisfied component → granted proposer.
    pub grants: BTreeMap<NodeId, NodeId>,
    pub grayed: Vec<NodeId>,
    pub grayed_cost: u64,
    pub newly_satisfied: Vec<NodeId>,
}

/// Blue threshold: `c(v) * rho_tilde <= 1`.
pub fn is_blue_weight(weight: u64, rho_tilde: Rational) -> bool {
    Rational::from_integer(weight) * rho_tilde <= Rational::from_integer(1)
}

/// S8: cheap white nodes satisfy what they can on their own or in pairs.
pub fn s8_cleanup(
    net: &mut Network<'_>,
    state: &mut PhaseState,
    rho_tilde: Rational,
) -> Result<CleanupOutcome, RuntimeError> {
    let g = net.graph();
    let n = g.node_count();
    let views = broadcast_status(net, state)?;
    let blue: Vec<bool> = (0..n)
        .map(|v| state.is_white(v) && is_blue_weight(g.weight(v), rho_tilde))
        .collect();

    let inbox = net.round(|v, _| {
        if !blue[v] {
            return Vec::new();
        }
        let msg = match views[v].components.as_slice() {
            [] => return Vec::new(),
            [only] => PhaseMessage::BlueSingle {
                component: only.label,
                node: v,
            },
            _ => PhaseMessage::BlueTwoOrMore { node: v },
        };
        views[v].white_neighbors.iter().map(|&u| (u, msg.clone())).collect()
    })?;

    // (component, partner) per blue node; the partner is the lowest-id blue
    // neighbor reaching a different component
    let proposals: Vec<Vec<(NodeId, Option<NodeId>)>> = (0..n)
        .map(|u| {
            if !blue[u] {
                return Vec::new();
            }
            let touches_many = views[u].components.len() >= 2;
            views[u]
                .unsatisfied()
                .filter_map(|c| {
                    if touches_many {
                        return Some((c, None));
                    }
                    inbox[u]
                        .iter()
                        .find(|(_, m)| match m {
                            PhaseMessage::BlueSingle { component, .. } => *component != c,
                            PhaseMessage::BlueTwoOrMore { .. } => true,
                            _ => false,
                        })
                        .map(|(w, _)| (c, Some(*w)))
                })
                .collect()
        })
        .collect();
    let inbox = net.round(|u, _| {
        proposals[u]
            .iter()
            .map(|&(component, partner)| {
                let contact = views[u].contact(component).expect("proposer touches component");
                (contact, PhaseMessage::CleanupProposal { component, partner })
            })
            .collect()
    })?;
    let received: Vec<Vec<u64>> = inbox
        .iter()
        .map(|msgs| msgs.iter().map(|(from, _)| *from as u64).collect())
        .collect();
    let tops = component_top_k(net, state.current_labeling(), &received, 1);
    let winner: Vec<Option<NodeId>> = tops
        .iter()
        .map(|t| t.as_ref().and_then(|t| t.first()).map(|&w| w as NodeId))
        .collect();

    let inbox = net.round(|x, _| match (winner[x], state.current_label(x)) {
        (Some(proposer), Some(component)) => views[x]
            .white_neighbors
            .iter()
            .map(|&u| (u, PhaseMessage::CleanupGrant { component, proposer }))
            .collect(),
        _ => Vec::new(),
    })?;
    let granted: Vec<Option<NodeId>> = (0..n)
        .map(|u| {
            inbox[u].iter().find_map(|(_, m)| match *m {
                PhaseMessage::CleanupGrant { component, proposer } if proposer == u => Some(component),
                _ => None,
            })
        })
        .collect();
    let inbox = net.round(|u, _| {
        let Some(component) = granted[u] else {
            return Vec::new();
        };
        proposals[u]
            .iter()
            .filter_map(|&(c, partner)| (c == component).then_some(partner).flatten())
            .map(|w| (w, PhaseMessage::PartnerGranted))
            .collect()
    })?;
    let mut grayed: BTreeSet<NodeId> = (0..n).filter(|&u| granted[u].is_some()).collect();
    grayed.extend((0..n).filter(|&w| !inbox[w].is_empty()));
    let grayed: Vec<NodeId> = grayed.into_iter().collect();

    let grants = state
        .unsatisfied_labels()
        .into_iter()
        .filter_map(|c| winner[c].map(|w| (c, w)))
        .collect();
    let newly_satisfied = gray_and_refresh(net, state, &grayed);
    Ok(CleanupOutcome {
        blue: (0..n).filter(|&v| blue[v]).collect(),
        grants,
        grayed_cost: g.cost(&grayed),
        grayed,
        newly_satisfied,
    })
}
