//! Local star arithmetic. Everything here runs at a single white center
//! using only what it learned from its neighbors.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::NodeId;
use crate::rational::Rational;

/// What a white node reports about its adjacent components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LegReport {
    Single { component: NodeId, satisfied: bool },
    /// Adjacent to two or more components, all satisfied.
    AllSatisfied,
}

/// A white neighbor that is not self-sufficient, as seen by a center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegInfo {
    pub node: NodeId,
    pub weight: u64,
    pub report: LegReport,
}

impl LegInfo {
    fn key(&self) -> (u64, NodeId) {
        (self.weight, self.node)
    }

    fn unsatisfied_component(&self) -> Option<NodeId> {
        match self.report {
            LegReport::Single {
                component,
                satisfied: false,
            } => Some(component),
            _ => None,
        }
    }
}

/// A white center and its adjacent current components `(label, satisfied)`,
/// sorted by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenterView {
    pub node: NodeId,
    pub weight: u64,
    pub components: Vec<(NodeId, bool)>,
}

impl CenterView {
    pub fn is_self_sufficient(&self) -> bool {
        self.components.len() >= 2 && self.components.iter().any(|&(_, s)| !s)
    }

    fn touches(&self, c: NodeId) -> bool {
        self.components.iter().any(|&(l, _)| l == c)
    }
}

/// A useful basic-star: center plus legs, with `phi` the unsatisfied
/// components it would satisfy. Legs are sorted by `(weight, node)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicStar {
    pub center: NodeId,
    pub legs: Vec<LegInfo>,
    pub cost: u64,
    pub phi: BTreeSet<NodeId>,
}

impl BasicStar {
    pub fn efficiency(&self) -> Rational {
        Rational::new(self.phi.len() as u64, self.cost)
    }

    pub fn members(&self) -> Vec<NodeId> {
        let mut m: Vec<NodeId> = std::iter::once(self.center)
            .chain(self.legs.iter().map(|l| l.node))
            .collect();
        m.sort_unstable();
        m
    }
}

/// Evaluates the star `center ∪ legs`. Returns `None` if it is useless.
///
/// A star is connected, so it satisfies every unsatisfied component it
/// touches as soon as it touches at least two components in total. An
/// all-satisfied leg always brings two components.
pub fn evaluate(center: &CenterView, legs: &[LegInfo]) -> Option<BasicStar> {
    let mut touched: BTreeSet<NodeId> = center.components.iter().map(|&(l, _)| l).collect();
    let mut phi: BTreeSet<NodeId> = center
        .components
        .iter()
        .filter(|&&(_, s)| !s)
        .map(|&(l, _)| l)
        .collect();
    let mut all_satisfied = false;
    for leg in legs {
        match leg.report {
            LegReport::Single {
                component,
                satisfied,
            } => {
                touched.insert(component);
                if !satisfied {
                    phi.insert(component);
                }
            }
            LegReport::AllSatisfied => all_satisfied = true,
        }
    }
    if phi.is_empty() || (touched.len() < 2 && !all_satisfied) {
        return None;
    }
    let mut legs = legs.to_vec();
    legs.sort_unstable_by_key(LegInfo::key);
    Some(BasicStar {
        center: center.node,
        cost: center.weight + legs.iter().map(|l| l.weight).sum::<u64>(),
        legs,
        phi,
    })
}

/// The most efficient basic-star centered at `center`, or `None` if every
/// star there is useless. Ties prefer fewer legs.
///
/// Legs touching an unsatisfied component the center does not touch are
/// deduplicated per component (cheapest kept) and taken as a cheapest-first
/// prefix. When center and prefix touch a single component, the cheapest
/// anchor (a leg touching a new satisfied component, or an all-satisfied
/// leg) is the only way to make the star useful.
pub fn best_basic_star(center: &CenterView, legs: &[LegInfo]) -> Option<BasicStar> {
    let mut sorted = legs.to_vec();
    sorted.sort_unstable_by_key(LegInfo::key);
    let mut seen = BTreeSet::new();
    let fresh: Vec<LegInfo> = sorted
        .iter()
        .filter(|l| {
            l.unsatisfied_component()
                .is_some_and(|c| !center.touches(c) && seen.insert(c))
        })
        .copied()
        .collect();
    let anchor = sorted.iter().copied().find(|l| match l.report {
        LegReport::Single {
            component,
            satisfied: true,
        } => !center.touches(component),
        LegReport::AllSatisfied => true,
        LegReport::Single { .. } => false,
    });

    let mut best: Option<BasicStar> = None;
    for m in 0..=fresh.len() {
        let prefix = &fresh[..m];
        let star = evaluate(center, prefix).or_else(|| {
            let a = anchor?;
            let mut with_anchor = prefix.to_vec();
            with_anchor.push(a);
            evaluate(center, &with_anchor)
        });
        if let Some(star) = star {
            if best
                .as_ref()
                .is_none_or(|b| star.efficiency() > b.efficiency())
            {
                best = Some(star);
            }
        }
    }
    best
}

/// Shrinks `star` to a `rho_tilde`-minimal core: repeatedly drops the
/// costliest leg whose removal keeps the star useful and `rho_tilde`-efficient.
/// On return no single-leg removal does.
pub fn minimal_core(center: &CenterView, star: &BasicStar, rho_tilde: Rational) -> BasicStar {
    let mut current = star.clone();
    'shrink: loop {
        for i in (0..current.legs.len()).rev() {
            let mut legs = current.legs.clone();
            legs.remove(i);
            if let Some(smaller) = evaluate(center, &legs) {
                if smaller.efficiency() >= rho_tilde {
                    current = smaller;
                    continue 'shrink;
                }
            }
        }
        return current;
    }
}

/// A `rho_tilde`-minimal core plus good auxiliary legs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedStar {
    pub core: BasicStar,
    /// In the order they were added.
    pub aux_legs: Vec<LegInfo>,
    /// Unsatisfied component → the star node that talks to it.
    pub responsible: BTreeMap<NodeId, NodeId>,
    pub phi: BTreeSet<NodeId>,
    pub cost: u64,
}

impl AugmentedStar {
    pub fn center(&self) -> NodeId {
        self.core.center
    }

    pub fn efficiency(&self) -> Rational {
        Rational::new(self.phi.len() as u64, self.cost)
    }

    /// Sorted members, center included.
    pub fn members(&self) -> Vec<NodeId> {
        let mut m = self.core.members();
        m.extend(self.aux_legs.iter().map(|l| l.node));
        m.sort_unstable();
        m
    }

    /// Members other than the center, sorted.
    pub fn legs(&self) -> Vec<NodeId> {
        let c = self.center();
        self.members().into_iter().filter(|&u| u != c).collect()
    }
}

/// Adds good auxiliary legs to `core` one at a time in `(weight, node)`
/// order: a leg qualifies if it touches exactly one component, that
/// component is unsatisfied and not yet touched by the star, and
/// `weight * rho_tilde <= 2`. Then assigns responsibles.
pub fn augment(
    center: &CenterView,
    core: BasicStar,
    legs: &[LegInfo],
    rho_tilde: Rational,
) -> AugmentedStar {
    let mut touched: BTreeSet<NodeId> = center.components.iter().map(|&(l, _)| l).collect();
    for leg in &core.legs {
        if let LegReport::Single { component, .. } = leg.report {
            touched.insert(component);
        }
    }
    let in_core: BTreeSet<NodeId> = core.legs.iter().map(|l| l.node).collect();
    let mut candidates: Vec<LegInfo> = legs
        .iter()
        .filter(|l| !in_core.contains(&l.node))
        .copied()
        .collect();
    candidates.sort_unstable_by_key(LegInfo::key);

    let two = Rational::from_integer(2);
    let mut phi = core.phi.clone();
    let mut cost = core.cost;
    let mut aux_legs = Vec::new();
    for leg in candidates {
        let Some(c) = leg.unsatisfied_component() else {
            continue;
        };
        if touched.contains(&c) || Rational::from_integer(leg.weight) * rho_tilde > two {
            continue;
        }
        touched.insert(c);
        phi.insert(c);
        cost += leg.weight;
        aux_legs.push(leg);
    }

    let mut responsible = BTreeMap::new();
    for &c in &phi {
        let leg = core
            .legs
            .iter()
            .chain(&aux_legs)
            .filter(|l| matches!(l.report, LegReport::Single { component, .. } if component == c))
            .map(|l| l.node)
            .min();
        responsible.insert(c, leg.unwrap_or(core.center));
    }
    AugmentedStar {
        core,
        aux_legs,
        responsible,
        phi,
        cost,
    }
}
