use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::NodeId;
use crate::primitives::{
    component_aggregate, identify_components, AggregateOp, AggregateValue, ComponentLabeling,
};
use crate::runtime::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    /// In the set at the start of the phase.
    Green,
    White,
    /// Added during the phase.
    Gray,
}

/// The mutable world of one phase.
///
/// Frozen components are the components of `G[green]` at phase start and
/// never change. The current components are those of `G[green ∪ gray]`.
/// Both use the minimum member id as label, so an unsatisfied frozen
/// component (which is still a current component on its own) has the same
/// label in both views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseState {
    color: Vec<Color>,
    frozen: Vec<Option<NodeId>>,
    frozen_labels: Vec<NodeId>,
    satisfied: BTreeMap<NodeId, bool>,
    current: ComponentLabeling,
    current_satisfied: BTreeMap<NodeId, bool>,
}

impl PhaseState {
    /// Colors `members` green, everything else white, and freezes the
    /// components of `G[members]`.
    pub fn start(net: &mut Network<'_>, members: &[bool]) -> Self {
        let color = members
            .iter()
            .map(|&m| if m { Color::Green } else { Color::White })
            .collect();
        Self::from_colors(net, color)
    }

    /// Builds a state from arbitrary colors: frozen components come from the
    /// green nodes, satisfied flags from the current components.
    pub fn from_colors(net: &mut Network<'_>, color: Vec<Color>) -> Self {
        let frozen_lab = identify_components(net, |v| color[v] == Color::Green, |_, _| true);
        let frozen = frozen_lab.labels().to_vec();
        let frozen_labels: Vec<NodeId> = frozen_lab.components().into_keys().collect();
        let satisfied = frozen_labels.iter().map(|&l| (l, false)).collect();
        let mut state = Self {
            color,
            frozen,
            frozen_labels,
            satisfied,
            current: frozen_lab,
            current_satisfied: BTreeMap::new(),
        };
        state.refresh(net);
        state
    }

    /// Re-identifies the current components and recomputes satisfied flags:
    /// a frozen component is satisfied iff its current component contains a
    /// gray node or another frozen component.
    pub fn refresh(&mut self, net: &mut Network<'_>) {
        let color = &self.color;
        let current = identify_components(net, |v| color[v] != Color::White, |_, _| true);
        let gray: Vec<u64> = color.iter().map(|&c| u64::from(c == Color::Gray)).collect();
        let leaders: Vec<u64> = (0..color.len())
            .map(|v| u64::from(self.frozen[v] == Some(v)))
            .collect();
        let has_gray = component_aggregate(net, &current, &gray, AggregateOp::Max);
        let leader_count = component_aggregate(net, &current, &leaders, AggregateOp::Sum);
        let scalar = |x: &Option<AggregateValue>| x.as_ref().and_then(AggregateValue::scalar).unwrap_or(0);
        self.current_satisfied.clear();
        for (label, _) in current.components() {
            let sat = scalar(&has_gray[label]) > 0 || scalar(&leader_count[label]) >= 2;
            self.current_satisfied.insert(label, sat);
        }
        for &f in &self.frozen_labels {
            let cur = current.label(f).expect("frozen leader is non-white");
            let sat = self.current_satisfied[&cur];
            self.satisfied.insert(f, sat);
        }
        self.current = current;
    }

    pub fn node_count(&self) -> usize {
        self.color.len()
    }

    pub fn color(&self, v: NodeId) -> Color {
        self.color[v]
    }

    pub fn colors(&self) -> &[Color] {
        &self.color
    }

    pub fn is_white(&self, v: NodeId) -> bool {
        self.color[v] == Color::White
    }

    pub fn nonwhite_mask(&self) -> Vec<bool> {
        self.color.iter().map(|&c| c != Color::White).collect()
    }

    /// Nodes colored gray so far in this phase.
    pub fn gray_nodes(&self) -> Vec<NodeId> {
        (0..self.color.len()).filter(|&v| self.color[v] == Color::Gray).collect()
    }

    pub(crate) fn set_gray(&mut self, v: NodeId) {
        debug_assert_eq!(self.color[v], Color::White);
        self.color[v] = Color::Gray;
    }

    /// Frozen component of a green node.
    pub fn frozen_label(&self, v: NodeId) -> Option<NodeId> {
        self.frozen[v]
    }

    pub fn frozen_labels(&self) -> &[NodeId] {
        &self.frozen_labels
    }

    /// `N = |F|`.
    pub fn frozen_count(&self) -> usize {
        self.frozen_labels.len()
    }

    pub fn is_satisfied(&self, frozen_label: NodeId) -> bool {
        self.satisfied[&frozen_label]
    }

    pub fn satisfied_flags(&self) -> &BTreeMap<NodeId, bool> {
        &self.satisfied
    }

    pub fn unsatisfied_labels(&self) -> Vec<NodeId> {
        self.satisfied
            .iter()
            .filter(|(_, &s)| !s)
            .map(|(&l, _)| l)
            .collect()
    }

    pub fn unsatisfied_count(&self) -> usize {
        self.satisfied.values().filter(|&&s| !s).count()
    }

    /// Current component of a non-white node.
    pub fn current_label(&self, v: NodeId) -> Option<NodeId> {
        self.current.label(v)
    }

    pub fn current_labeling(&self) -> &ComponentLabeling {
        &self.current
    }

    pub fn current_satisfied(&self, label: NodeId) -> bool {
        self.current_satisfied[&label]
    }

    /// Number of components of `G[green ∪ gray]`.
    pub fn current_component_count(&self) -> usize {
        self.current_satisfied.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::runtime::RunConfig;

    // 0 - 1 - 2 - 3 - 4, green {0, 2, 4}
    fn path5() -> WeightedGraph {
        WeightedGraph::new(vec![1; 5], &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap()
    }

    #[test]
    fn fresh_phase_has_nothing_satisfied() {
        let g = path5();
        let mut net = Network::new(&g, &RunConfig::default()).unwrap();
        let state = PhaseState::start(&mut net, &[true, false, true, false, true]);
        assert_eq!(state.frozen_labels(), &[0, 2, 4]);
        assert_eq!(state.unsatisfied_count(), 3);
        assert_eq!(state.current_component_count(), 3);
    }

    #[test]
    fn gray_bridge_satisfies_both_sides() {
        let g = path5();
        let mut net = Network::new(&g, &RunConfig::default()).unwrap();
        let mut state = PhaseState::start(&mut net, &[true, false, true, false, true]);
        state.set_gray(1);
        state.refresh(&mut net);
        assert!(state.is_satisfied(0));
        assert!(state.is_satisfied(2));
        assert!(!state.is_satisfied(4));
        assert_eq!(state.current_label(2), Some(0));
        assert_eq!(state.current_label(4), Some(4));
        assert_eq!(state.current_component_count(), 2);
    }
}
