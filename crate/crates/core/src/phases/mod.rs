//! The phase loop that connects the dominating set.
//!
//! A phase freezes the components of the current set and runs iterations
//! of S1–S8 until fewer than half of them are unsatisfied. Every iteration
//! checks the structural guarantees of the analysis inline; a violation
//! aborts the run with [`McdsError::Invariant`].

mod state;
mod stars;
mod steps;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use state::{Color, PhaseState};
pub use stars::{
    augment, best_basic_star, evaluate, minimal_core, AugmentedStar, BasicStar, CenterView,
    LegInfo, LegReport,
};
pub use steps::{
    broadcast_status, commits, draw_mark, is_blue_weight, mark_probability, prune_proposals,
    s1_identify_and_count, s2_max_efficiency, s3_select_augmented, s4_active_degrees,
    s5_mark_and_propose, s6_grant, s7_commit, s8_cleanup, ActiveDegrees, AdjacentComponent,
    CleanupOutcome, CommitOutcome, Grants, LocalView, PhaseMessage, Proposals, S2Outcome,
    MAX_GRANTS, MAX_PROPOSALS,
};

use crate::domset::compute_dominating_set;
use crate::graph::{NodeId, WeightedGraph};
use crate::oracle::{blue_satisfiable_components, is_cds};
use crate::primitives::{global_reduce, ReduceOp};
use crate::rational::{floor_power_of_two, Rational, RationalRecord};
use crate::runtime::{Network, RunConfig, RunMetrics, RuntimeError};

/// Slack between the working efficiency and the efficiency of what S7
/// commits: stars are half as efficient, a third of their proposals are
/// granted, and a component grants at most three stars.
pub const COMMIT_EFFICIENCY_SLACK: u64 = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantKind {
    /// An S3 star is less than `rho~/2` efficient.
    StarEfficiency,
    /// A committed white node left an adjacent component unsatisfied.
    CommitSatisfies,
    /// S7 satisfied fewer than `rho~/18` components per unit cost.
    CommitEfficiency,
    /// A component is still satisfiable by cheap nodes after S8.
    CleanupComplete,
    /// An active-degree grew between iterations sharing `rho~`.
    DegreeMonotone,
    /// A satisfied flag or a color reverted.
    Monotonicity,
    /// A phase left more than `ceil(3N/4)` components.
    PhaseReduction,
    /// The output is not a connected dominating set.
    CdsValidity,
}

#[derive(Debug, Error)]
pub enum McdsError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(
        "no useful star in phase {phase} iteration {iteration} with {unsatisfied} of {frozen} components unsatisfied"
    )]
    NoUsefulStar {
        phase: u64,
        iteration: u64,
        unsatisfied: usize,
        frozen: usize,
    },
    #[error("invariant {kind:?} violated in phase {phase} iteration {iteration}: {detail}")]
    Invariant {
        kind: InvariantKind,
        phase: u64,
        iteration: u64,
        detail: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationContext {
    pub rho_star: Rational,
    pub rho_tilde: Rational,
    pub delta_star: u64,
    pub iteration_index: u64,
}

/// Full per-iteration state, kept only when snapshots are requested.
#[derive(Debug, Clone)]
pub struct IterationAudit {
    /// State seen by S2–S6.
    pub before: PhaseState,
    pub s2: S2Outcome,
    pub stars: BTreeMap<NodeId, AugmentedStar>,
    pub marked: Vec<NodeId>,
    pub grants: BTreeMap<NodeId, Vec<NodeId>>,
    pub commit: CommitOutcome,
    pub after_s7: PhaseState,
    pub cleanup: CleanupOutcome,
    pub after_s8: PhaseState,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub phase: u64,
    pub iteration: u64,
    pub rho_star: RationalRecord,
    pub rho_tilde: RationalRecord,
    pub delta_star: u64,
    pub unsatisfied_count: usize,
    pub grayed_cost: u64,
    pub per_component_active_degree: BTreeMap<NodeId, u64>,
    #[serde(skip)]
    pub star_count: usize,
    #[serde(skip)]
    pub committed: usize,
    #[serde(skip)]
    pub s7_grayed_cost: u64,
    #[serde(skip)]
    pub s7_newly_satisfied: Vec<NodeId>,
    /// Components unsatisfied at S1 and satisfied after S8.
    #[serde(skip)]
    pub newly_satisfied: Vec<NodeId>,
    #[serde(skip)]
    pub audit: Option<Box<IterationAudit>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseRecord {
    pub phase: u64,
    /// `N`.
    pub frozen_count: usize,
    pub iterations: u64,
    pub grayed_cost: u64,
    /// Components of `G[green ∪ gray]` at phase end.
    pub components_after: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trace {
    pub phases: Vec<PhaseRecord>,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct McdsOutcome {
    /// Sorted.
    pub cds: Vec<NodeId>,
    pub cost: u64,
    pub dominating_set: Vec<NodeId>,
    pub metrics: RunMetrics,
    pub trace: Trace,
}

fn violation(kind: InvariantKind, phase: u64, iteration: u64, detail: String) -> McdsError {
    McdsError::Invariant {
        kind,
        phase,
        iteration,
        detail,
    }
}

/// Computes a connected dominating set: a dominating set first, then phases
/// until the chosen nodes induce a connected subgraph.
pub fn run_mcds(g: &WeightedGraph, cfg: &RunConfig) -> Result<McdsOutcome, McdsError> {
    let mut net = Network::new(g, cfg)?;
    let ds = compute_dominating_set(&mut net)?;
    let mut members = vec![false; g.node_count()];
    for &v in &ds.members {
        members[v] = true;
    }
    let mut trace = Trace::default();
    loop {
        let state = PhaseState::start(&mut net, &members);
        let leaders: Vec<Option<u64>> = (0..g.node_count())
            .map(|v| Some(u64::from(state.frozen_label(v) == Some(v))))
            .collect();
        let frozen = global_reduce(&mut net, &leaders, ReduceOp::Count).value().unwrap_or(0);
        if frozen <= 1 {
            break;
        }
        let phase = trace.phases.len() as u64 + 1;
        let state = run_phase(&mut net, state, phase, cfg.record_snapshots, &mut trace)?;
        members = state.nonwhite_mask();
    }

    let cds: Vec<NodeId> = (0..g.node_count()).filter(|&v| members[v]).collect();
    let phase = trace.phases.len() as u64;
    if !is_cds(g, &cds) {
        return Err(violation(
            InvariantKind::CdsValidity,
            phase,
            0,
            format!("output {cds:?} is not a connected dominating set"),
        ));
    }
    let cost = g.cost(&cds);
    let mut metrics = *net.metrics();
    metrics.phases = phase;
    metrics.iterations = trace.iterations.len() as u64;
    metrics.output_cost = cost;
    Ok(McdsOutcome {
        cds,
        cost,
        dominating_set: ds.members,
        metrics,
        trace,
    })
}

/// Runs one phase to completion and returns the final state. A no-op when
/// at most one component is frozen.
pub fn run_phase(
    net: &mut Network<'_>,
    mut state: PhaseState,
    phase: u64,
    record_snapshots: bool,
    trace: &mut Trace,
) -> Result<PhaseState, McdsError> {
    let g = net.graph();
    let frozen = state.frozen_count();
    if frozen <= 1 {
        return Ok(state);
    }
    let target = frozen.div_ceil(2);
    let mut iteration = 0;
    let mut phase_cost = 0;
    let mut previous: Option<(Rational, BTreeMap<NodeId, u64>)> = None;
    loop {
        let flags_before = state.satisfied_flags().clone();
        let (views, unsatisfied) = s1_identify_and_count(net, &mut state)?;
        check_monotone(&flags_before, &state, phase, iteration)?;
        if unsatisfied < target {
            break;
        }
        iteration += 1;

        let before = record_snapshots.then(|| state.clone());
        let s2 = s2_max_efficiency(net, &state, &views)?;
        let Some(rho_star) = s2.rho_star else {
            return Err(McdsError::NoUsefulStar {
                phase,
                iteration,
                unsatisfied,
                frozen,
            });
        };
        let rho_tilde = floor_power_of_two(rho_star);
        let stars = s3_select_augmented(&s2, rho_tilde);
        for (v, star) in &stars {
            if star.efficiency() * 2 < rho_tilde {
                return Err(violation(
                    InvariantKind::StarEfficiency,
                    phase,
                    iteration,
                    format!("star at {v} has efficiency {} below {rho_tilde}/2", star.efficiency()),
                ));
            }
        }

        let degrees = s4_active_degrees(net, &state, &views, &stars)?;
        if let Some((prev_rho, prev_degrees)) = &previous {
            if *prev_rho == rho_tilde {
                for (c, &d) in &degrees.per_component {
                    let before = prev_degrees.get(c).copied().unwrap_or(0);
                    if d > before {
                        return Err(violation(
                            InvariantKind::DegreeMonotone,
                            phase,
                            iteration,
                            format!("active-degree of component {c} grew from {before} to {d}"),
                        ));
                    }
                }
            }
        }
        let Some(delta_star) = degrees.delta_star else {
            return Err(McdsError::NoUsefulStar {
                phase,
                iteration,
                unsatisfied,
                frozen,
            });
        };

        let proposals = s5_mark_and_propose(net, &views, &stars, &degrees, delta_star)?;
        let grants = s6_grant(net, &state, &views, &proposals)?;
        let unsatisfied_at_s2 = state.unsatisfied_labels();
        let flags_before = state.satisfied_flags().clone();
        let commit = s7_commit(net, &mut state, &stars, &proposals, &grants)?;
        check_monotone(&flags_before, &state, phase, iteration)?;
        check_commit(g, &state, &stars, &commit, rho_tilde, phase, iteration)?;
        let after_s7 = record_snapshots.then(|| state.clone());

        let flags_before = state.satisfied_flags().clone();
        let cleanup = s8_cleanup(net, &mut state, rho_tilde)?;
        check_monotone(&flags_before, &state, phase, iteration)?;
        let threshold = rho_tilde.recip();
        let leftover = blue_satisfiable_components(g, &state, threshold);
        if !leftover.is_empty() {
            return Err(violation(
                InvariantKind::CleanupComplete,
                phase,
                iteration,
                format!("components {leftover:?} satisfiable with nodes of cost <= {threshold}"),
            ));
        }

        let grayed_cost = commit.grayed_cost + cleanup.grayed_cost;
        phase_cost += grayed_cost;
        let newly_satisfied = unsatisfied_at_s2
            .into_iter()
            .filter(|&c| state.is_satisfied(c))
            .collect();
        let audit = before.map(|before| {
            Box::new(IterationAudit {
                before,
                s2,
                stars: stars.clone(),
                marked: proposals.marked.iter().copied().collect(),
                grants: grants.per_component.clone(),
                commit: commit.clone(),
                after_s7: after_s7.expect("recorded with before"),
                cleanup: cleanup.clone(),
                after_s8: state.clone(),
            })
        });
        trace.iterations.push(IterationRecord {
            phase,
            iteration,
            rho_star: rho_star.into(),
            rho_tilde: rho_tilde.into(),
            delta_star,
            unsatisfied_count: unsatisfied,
            grayed_cost,
            per_component_active_degree: degrees.per_component.clone(),
            star_count: stars.len(),
            committed: commit.committed.len(),
            s7_grayed_cost: commit.grayed_cost,
            s7_newly_satisfied: commit.newly_satisfied.clone(),
            newly_satisfied,
            audit,
        });
        previous = Some((rho_tilde, degrees.per_component));
    }

    let components_after = state.current_component_count();
    if components_after > (3 * frozen).div_ceil(4) {
        return Err(violation(
            InvariantKind::PhaseReduction,
            phase,
            iteration,
            format!("{components_after} components left from {frozen}"),
        ));
    }
    trace.phases.push(PhaseRecord {
        phase,
        frozen_count: frozen,
        iterations: iteration,
        grayed_cost: phase_cost,
        components_after,
    });
    Ok(state)
}

fn check_monotone(
    before: &BTreeMap<NodeId, bool>,
    state: &PhaseState,
    phase: u64,
    iteration: u64,
) -> Result<(), McdsError> {
    for (&c, &was) in before {
        if was && !state.is_satisfied(c) {
            return Err(violation(
                InvariantKind::Monotonicity,
                phase,
                iteration,
                format!("component {c} became unsatisfied"),
            ));
        }
    }
    Ok(())
}

fn check_commit(
    g: &WeightedGraph,
    state: &PhaseState,
    stars: &BTreeMap<NodeId, AugmentedStar>,
    commit: &CommitOutcome,
    rho_tilde: Rational,
    phase: u64,
    iteration: u64,
) -> Result<(), McdsError> {
    for &center in &commit.committed {
        for u in stars[&center].members() {
            for &x in g.neighbors(u) {
                let Some(c) = state.frozen_label(x) else {
                    continue;
                };
                if !state.is_satisfied(c) {
                    return Err(violation(
                        InvariantKind::CommitSatisfies,
                        phase,
                        iteration,
                        format!("component {c} next to committed node {u} is unsatisfied"),
                    ));
                }
            }
        }
    }
    if commit.grayed_cost > 0 {
        let achieved = Rational::new(commit.newly_satisfied.len() as u64, commit.grayed_cost);
        if achieved * COMMIT_EFFICIENCY_SLACK < rho_tilde {
            return Err(violation(
                InvariantKind::CommitEfficiency,
                phase,
                iteration,
                format!("committed efficiency {achieved} below {rho_tilde}/{COMMIT_EFFICIENCY_SLACK}"),
            ));
        }
    }
    Ok(())
}
