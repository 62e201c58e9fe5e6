//! Tasks, policies, and the observation contract between an environment
//! and a feature-limited learner.
//!
//! A task couples a finite state graph with a feature map and a set of
//! aversive state-action pairs. An agent interacting with the task never
//! sees states directly; it only sees the feature set of the current state,
//! and it associates actions with features rather than with states.

use crate::ids::{ActionId, FeatureId, StateId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use thiserror::Error;

/// Errors raised by operations whose preconditions are violated.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("feature `{0}` is not in the policy domain")]
    UnknownFeature(FeatureId),
    #[error("state `{0}` is not a start state of the task")]
    NotAStart(StateId),
    #[error("policy domain does not equal the task feature set (offending feature `{0}`)")]
    PolicyDomainMismatch(FeatureId),
    #[error("policy maps feature `{feature}` to unknown action `{action}`")]
    PolicyUnknownAction { feature: FeatureId, action: ActionId },
    #[error("policies have different domains (offending feature `{0}`)")]
    UnionDomainMismatch(FeatureId),
    #[error("new feature `{0}` already exists in the task")]
    ExtensionNotDisjoint(FeatureId),
    #[error("augmented feature map disagrees with the original on state `{0}`")]
    ExtensionChangesOldFeatures(StateId),
    #[error("augmented feature map uses feature `{feature}` unknown to old or new sets (state `{state}`)")]
    ExtensionUnknownFeature { state: StateId, feature: FeatureId },
    #[error("augmented feature map has no entry for state `{0}`")]
    ExtensionMissingState(StateId),
    #[error("task is not valid: {0}")]
    InvalidTask(Violation),
    #[error("brute-force oracle limit exceeded: |F|*|A| = {size} > {cap}")]
    BruteForceTooLarge { size: usize, cap: usize },
    #[error("invalid run configuration: {0}")]
    BadConfig(String),
}

/// A finite, explicitly enumerated task.
///
/// All component sets use ordered collections so iteration order is a pure
/// function of the contents, which keeps seeded runs reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSpec {
    pub states: BTreeSet<StateId>,
    pub starts: BTreeSet<StateId>,
    pub actions: BTreeSet<ActionId>,
    pub features: BTreeSet<FeatureId>,
    /// Successor sets per (state, action). Absent entries mean the empty
    /// set; applying such an action is treated as impossible by the
    /// environment.
    pub transition: BTreeMap<(StateId, ActionId), BTreeSet<StateId>>,
    /// Total map from states to the features they exhibit.
    pub feature_map: BTreeMap<StateId, BTreeSet<FeatureId>>,
    /// Pairs whose application may be met with an aversive signal.
    pub aversive: BTreeSet<(StateId, ActionId)>,
}

static EMPTY_STATES: BTreeSet<StateId> = BTreeSet::new();
static EMPTY_FEATURES: BTreeSet<FeatureId> = BTreeSet::new();

impl TaskSpec {
    /// Successor set of `(state, action)`; empty if the pair has none.
    pub fn successors(&self, state: &StateId, action: &ActionId) -> &BTreeSet<StateId> {
        self.transition
            .get(&(state.clone(), action.clone()))
            .unwrap_or(&EMPTY_STATES)
    }

    /// Feature set of a state; empty if the map has no entry.
    pub fn features_of(&self, state: &StateId) -> &BTreeSet<FeatureId> {
        self.feature_map.get(state).unwrap_or(&EMPTY_FEATURES)
    }

    pub fn is_aversive(&self, state: &StateId, action: &ActionId) -> bool {
        self.aversive.contains(&(state.clone(), action.clone()))
    }

    /// Number of feature-action pairs, the size of the learner's initial
    /// memory.
    pub fn pair_count(&self) -> usize {
        self.features.len() * self.actions.len()
    }

    /// Checks every structural invariant and returns one record per
    /// failure. An empty result means the task is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.states.is_empty() {
            out.push(Violation::EmptyStates);
        }
        if self.starts.is_empty() {
            out.push(Violation::EmptyStarts);
        }
        if self.actions.is_empty() {
            out.push(Violation::EmptyActions);
        }
        if self.features.is_empty() {
            out.push(Violation::EmptyFeatures);
        }
        for s in &self.starts {
            if !self.states.contains(s) {
                out.push(Violation::StartUnknown { state: s.clone() });
            }
        }
        for ((s, a), succs) in &self.transition {
            if !self.states.contains(s) {
                out.push(Violation::TransitionUnknownState { state: s.clone() });
            }
            if !self.actions.contains(a) {
                out.push(Violation::TransitionUnknownAction { action: a.clone() });
            }
            for s2 in succs {
                if !self.states.contains(s2) {
                    out.push(Violation::TransitionUnknownSuccessor {
                        state: s.clone(),
                        action: a.clone(),
                        successor: s2.clone(),
                    });
                }
            }
        }
        for s in &self.states {
            match self.feature_map.get(s) {
                None => out.push(Violation::FeatureMapMissingState { state: s.clone() }),
                Some(fs) => {
                    for f in fs {
                        if !self.features.contains(f) {
                            out.push(Violation::FeatureMapUnknownFeature {
                                state: s.clone(),
                                feature: f.clone(),
                            });
                        }
                    }
                }
            }
        }
        for s in self.feature_map.keys() {
            if !self.states.contains(s) {
                out.push(Violation::FeatureMapUnknownState { state: s.clone() });
            }
        }
        for (s, a) in &self.aversive {
            if !self.states.contains(s) {
                out.push(Violation::AversiveUnknownState {
                    state: s.clone(),
                    action: a.clone(),
                });
            }
            if !self.actions.contains(a) {
                out.push(Violation::AversiveUnknownAction {
                    state: s.clone(),
                    action: a.clone(),
                });
            }
        }
        // Reachability: every state must be reachable from some start by a
        // finite transition chain, over any actions.
        let reachable = self.reachable_states();
        for s in &self.states {
            if !reachable.contains(s) {
                out.push(Violation::UnreachableState { state: s.clone() });
            }
        }
        out
    }

    /// Breadth-first closure of the start states under all transitions.
    pub fn reachable_states(&self) -> BTreeSet<StateId> {
        let mut seen: BTreeSet<StateId> = self
            .starts
            .iter()
            .filter(|s| self.states.contains(*s))
            .cloned()
            .collect();
        let mut queue: VecDeque<StateId> = seen.iter().cloned().collect();
        while let Some(s) = queue.pop_front() {
            for a in &self.actions {
                for s2 in self.successors(&s, a) {
                    if self.states.contains(s2) && seen.insert(s2.clone()) {
                        queue.push_back(s2.clone());
                    }
                }
            }
        }
        seen
    }

    /// Builds a copy of this task with extra features layered on top.
    ///
    /// The new features must be disjoint from the existing ones, and the
    /// augmented feature map must agree with the old one when restricted to
    /// the old feature set. Transitions, aversive pairs, and states are
    /// untouched; a policy that ignores the new features behaves
    /// identically on the result.
    pub fn extend_features(
        &self,
        new_features: &BTreeSet<FeatureId>,
        augmented_map: &BTreeMap<StateId, BTreeSet<FeatureId>>,
    ) -> Result<TaskSpec, TaskError> {
        for f in new_features {
            if self.features.contains(f) {
                return Err(TaskError::ExtensionNotDisjoint(f.clone()));
            }
        }
        for s in &self.states {
            let augmented = augmented_map
                .get(s)
                .ok_or_else(|| TaskError::ExtensionMissingState(s.clone()))?;
            let restricted: BTreeSet<FeatureId> = augmented
                .iter()
                .filter(|f| self.features.contains(*f))
                .cloned()
                .collect();
            if &restricted != self.features_of(s) {
                return Err(TaskError::ExtensionChangesOldFeatures(s.clone()));
            }
            for f in augmented {
                if !self.features.contains(f) && !new_features.contains(f) {
                    return Err(TaskError::ExtensionUnknownFeature {
                        state: s.clone(),
                        feature: f.clone(),
                    });
                }
            }
        }
        let mut features = self.features.clone();
        features.extend(new_features.iter().cloned());
        Ok(TaskSpec {
            states: self.states.clone(),
            starts: self.starts.clone(),
            actions: self.actions.clone(),
            features,
            transition: self.transition.clone(),
            feature_map: augmented_map.clone(),
            aversive: self.aversive.clone(),
        })
    }
}

/// A structural defect found by [`TaskSpec::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyStates,
    EmptyStarts,
    EmptyActions,
    EmptyFeatures,
    StartUnknown { state: StateId },
    TransitionUnknownState { state: StateId },
    TransitionUnknownAction { action: ActionId },
    TransitionUnknownSuccessor { state: StateId, action: ActionId, successor: StateId },
    FeatureMapMissingState { state: StateId },
    FeatureMapUnknownState { state: StateId },
    FeatureMapUnknownFeature { state: StateId, feature: FeatureId },
    AversiveUnknownState { state: StateId, action: ActionId },
    AversiveUnknownAction { state: StateId, action: ActionId },
    UnreachableState { state: StateId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyStates => write!(f, "state set is empty"),
            Violation::EmptyStarts => write!(f, "start set is empty"),
            Violation::EmptyActions => write!(f, "action set is empty"),
            Violation::EmptyFeatures => write!(f, "feature set is empty"),
            Violation::StartUnknown { state } => {
                write!(f, "start `{state}` is not a declared state")
            }
            Violation::TransitionUnknownState { state } => {
                write!(f, "transition references unknown state `{state}`")
            }
            Violation::TransitionUnknownAction { action } => {
                write!(f, "transition references unknown action `{action}`")
            }
            Violation::TransitionUnknownSuccessor { state, action, successor } => write!(
                f,
                "transition ({state}, {action}) targets unknown state `{successor}`"
            ),
            Violation::FeatureMapMissingState { state } => {
                write!(f, "feature map has no entry for state `{state}`")
            }
            Violation::FeatureMapUnknownState { state } => {
                write!(f, "feature map references unknown state `{state}`")
            }
            Violation::FeatureMapUnknownFeature { state, feature } => write!(
                f,
                "feature map assigns unknown feature `{feature}` to state `{state}`"
            ),
            Violation::AversiveUnknownState { state, action } => write!(
                f,
                "aversive pair ({state}, {action}) references unknown state"
            ),
            Violation::AversiveUnknownAction { state, action } => write!(
                f,
                "aversive pair ({state}, {action}) references unknown action"
            ),
            Violation::UnreachableState { state } => {
                write!(f, "state `{state}` is unreachable from every start")
            }
        }
    }
}

/// A total map from features to the actions they propose.
///
/// Features act independently: the actions proposed in a state are the
/// union of the proposals of the state's features. Features may propose
/// nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub mapping: BTreeMap<FeatureId, BTreeSet<ActionId>>,
}

impl Policy {
    pub fn new(mapping: BTreeMap<FeatureId, BTreeSet<ActionId>>) -> Self {
        Self { mapping }
    }

    /// The policy mapping every feature to every action.
    pub fn full(features: &BTreeSet<FeatureId>, actions: &BTreeSet<ActionId>) -> Self {
        Self {
            mapping: features
                .iter()
                .map(|f| (f.clone(), actions.clone()))
                .collect(),
        }
    }

    /// The policy mapping every feature to no actions.
    pub fn empty(features: &BTreeSet<FeatureId>) -> Self {
        Self {
            mapping: features
                .iter()
                .map(|f| (f.clone(), BTreeSet::new()))
                .collect(),
        }
    }

    pub fn actions_for(&self, feature: &FeatureId) -> Option<&BTreeSet<ActionId>> {
        self.mapping.get(feature)
    }

    /// All proposed actions for a state observed as `feature_set`: the
    /// union of the per-feature proposals.
    pub fn prop(&self, feature_set: &BTreeSet<FeatureId>) -> Result<BTreeSet<ActionId>, TaskError> {
        let mut out = BTreeSet::new();
        for f in feature_set {
            let actions = self
                .mapping
                .get(f)
                .ok_or_else(|| TaskError::UnknownFeature(f.clone()))?;
            out.extend(actions.iter().cloned());
        }
        Ok(out)
    }

    /// True iff the policy proposes no action for `feature_set`.
    pub fn is_blocked(&self, feature_set: &BTreeSet<FeatureId>) -> Result<bool, TaskError> {
        Ok(self.prop(feature_set)?.is_empty())
    }

    /// Pointwise union of two policies with identical domains.
    pub fn union(&self, other: &Policy) -> Result<Policy, TaskError> {
        for f in self.mapping.keys() {
            if !other.mapping.contains_key(f) {
                return Err(TaskError::UnionDomainMismatch(f.clone()));
            }
        }
        for f in other.mapping.keys() {
            if !self.mapping.contains_key(f) {
                return Err(TaskError::UnionDomainMismatch(f.clone()));
            }
        }
        let mapping = self
            .mapping
            .iter()
            .map(|(f, actions)| {
                let mut u = actions.clone();
                u.extend(other.mapping[f].iter().cloned());
                (f.clone(), u)
            })
            .collect();
        Ok(Policy { mapping })
    }

    /// Iterates all (feature, action) pairs the policy contains.
    pub fn pairs(&self) -> impl Iterator<Item = (&FeatureId, &ActionId)> {
        self.mapping
            .iter()
            .flat_map(|(f, actions)| actions.iter().map(move |a| (f, a)))
    }

    pub fn contains(&self, feature: &FeatureId, action: &ActionId) -> bool {
        self.mapping
            .get(feature)
            .is_some_and(|actions| actions.contains(action))
    }

    /// True iff every pair of `self` is also a pair of `other`.
    pub fn is_subpolicy_of(&self, other: &Policy) -> bool {
        self.pairs().all(|(f, a)| other.contains(f, a))
    }

    /// Checks that the domain is exactly the task's feature set and every
    /// mapped action is a task action.
    pub fn check_well_formed(&self, task: &TaskSpec) -> Result<(), TaskError> {
        for f in &task.features {
            if !self.mapping.contains_key(f) {
                return Err(TaskError::PolicyDomainMismatch(f.clone()));
            }
        }
        for (f, actions) in &self.mapping {
            if !task.features.contains(f) {
                return Err(TaskError::PolicyDomainMismatch(f.clone()));
            }
            for a in actions {
                if !task.actions.contains(a) {
                    return Err(TaskError::PolicyUnknownAction {
                        feature: f.clone(),
                        action: a.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// What the environment hands the learner on each visit to a state.
///
/// The state token exists for logging and adjudication only. No decision
/// rule may consult it; decisions are functions of the feature set alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub feature_set: BTreeSet<FeatureId>,
    pub state_token: StateId,
}
