//! Offline verification and computation of strategies.
//!
//! A policy is a strategy for a start state when it proposes something at
//! that start and, globally, every action it proposes anywhere is
//! non-aversive, applicable, and leads only to states the policy still acts
//! upon. The checks here are exhaustive over the task's finite state set.
//!
//! Besides the checker, this module computes the unique maximal policy
//! satisfying the global conditions by greatest-fixpoint pruning, and ships
//! a brute-force enumeration oracle for tiny tasks that serves as ground
//! truth in the test suites.

use crate::ids::{ActionId, FeatureId, StateId};
use crate::task::{Policy, TaskError, TaskSpec};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Outcome of a strategy check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyVerdict {
    pub holds: bool,
    /// First violation in lexicographic (state, action, successor) order,
    /// absent iff the check holds.
    pub witness: Option<StrategyViolation>,
}

impl StrategyVerdict {
    fn ok() -> Self {
        StrategyVerdict { holds: true, witness: None }
    }

    fn fail(witness: StrategyViolation) -> Self {
        StrategyVerdict { holds: false, witness: Some(witness) }
    }
}

/// Why a policy fails to be a strategy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum StrategyViolation {
    /// The policy proposes nothing at the start state.
    StartBlocked { start: StateId },
    /// A proposed action hits an aversive pair.
    Aversive { state: StateId, action: ActionId },
    /// A proposed action has no successors, so the environment cannot
    /// execute it.
    NoSuccessors { state: StateId, action: ActionId },
    /// A proposed action can reach a state the policy proposes nothing for.
    BlockedSuccessor { state: StateId, action: ActionId, successor: StateId },
}

impl fmt::Display for StrategyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyViolation::StartBlocked { start } => {
                write!(f, "start `{start}` is blocked")
            }
            StrategyViolation::Aversive { state, action } => {
                write!(f, "proposed pair ({state}, {action}) is aversive")
            }
            StrategyViolation::NoSuccessors { state, action } => {
                write!(f, "proposed pair ({state}, {action}) has no successors")
            }
            StrategyViolation::BlockedSuccessor { state, action, successor } => write!(
                f,
                "proposed pair ({state}, {action}) can reach blocked state `{successor}`"
            ),
        }
    }
}

/// Per-state proposal sets of a policy, with blocked states memoized.
struct PropTable {
    prop: BTreeMap<StateId, BTreeSet<ActionId>>,
}

impl PropTable {
    fn build(task: &TaskSpec, policy: &Policy) -> Result<Self, TaskError> {
        let mut prop = BTreeMap::new();
        for s in &task.states {
            prop.insert(s.clone(), policy.prop(task.features_of(s))?);
        }
        Ok(PropTable { prop })
    }

    fn actions(&self, s: &StateId) -> &BTreeSet<ActionId> {
        &self.prop[s]
    }

    fn blocked(&self, s: &StateId) -> bool {
        self.prop[s].is_empty()
    }
}

/// Scans all states for a violation of the global conditions: every
/// proposed action must be non-aversive, have at least one successor, and
/// lead only to unblocked states. Returns the first violation in
/// lexicographic (state, action, successor) order, with aversive and
/// no-successor findings ordered before successor findings of the same
/// pair.
pub fn safety_violation(
    task: &TaskSpec,
    policy: &Policy,
) -> Result<Option<StrategyViolation>, TaskError> {
    policy.check_well_formed(task)?;
    let table = PropTable::build(task, policy)?;
    Ok(safety_violation_with(task, &table))
}

fn safety_violation_with(task: &TaskSpec, table: &PropTable) -> Option<StrategyViolation> {
    for s in &task.states {
        for a in table.actions(s) {
            if task.is_aversive(s, a) {
                return Some(StrategyViolation::Aversive { state: s.clone(), action: a.clone() });
            }
            let succs = task.successors(s, a);
            if succs.is_empty() {
                return Some(StrategyViolation::NoSuccessors {
                    state: s.clone(),
                    action: a.clone(),
                });
            }
            for s2 in succs {
                if table.blocked(s2) {
                    return Some(StrategyViolation::BlockedSuccessor {
                        state: s.clone(),
                        action: a.clone(),
                        successor: s2.clone(),
                    });
                }
            }
        }
    }
    None
}

/// Checks whether `policy` is a strategy for `start`.
pub fn is_strategy(
    task: &TaskSpec,
    policy: &Policy,
    start: &StateId,
) -> Result<StrategyVerdict, TaskError> {
    if !task.starts.contains(start) {
        return Err(TaskError::NotAStart(start.clone()));
    }
    policy.check_well_formed(task)?;
    let table = PropTable::build(task, policy)?;
    if table.blocked(start) {
        return Ok(StrategyVerdict::fail(StrategyViolation::StartBlocked {
            start: start.clone(),
        }));
    }
    match safety_violation_with(task, &table) {
        Some(witness) => Ok(StrategyVerdict::fail(witness)),
        None => Ok(StrategyVerdict::ok()),
    }
}

/// Why a pair was pruned from the maximal policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PruneReason {
    Aversive { state: StateId },
    NoSuccessors { state: StateId },
    BlockedSuccessor { state: StateId, successor: StateId },
}

impl fmt::Display for PruneReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PruneReason::Aversive { state } => write!(f, "aversive at state `{state}`"),
            PruneReason::NoSuccessors { state } => {
                write!(f, "no successors at state `{state}`")
            }
            PruneReason::BlockedSuccessor { state, successor } => {
                write!(f, "blocked successor `{successor}` from state `{state}`")
            }
        }
    }
}

/// The greatest policy satisfying the global strategy conditions, together
/// with the pruned pairs in removal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaximalPolicy {
    pub policy: Policy,
    pub pruned: Vec<(FeatureId, ActionId, PruneReason)>,
}

/// Pair iteration order used during pruning. The fixpoint is the same for
/// every order; this knob exists so tests can demonstrate that.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneOrder {
    Lexicographic,
    ReverseLexicographic,
}

/// Computes the maximal policy by pruning from the full policy.
///
/// A pair (f, a) is removed when some state showing f makes a aversive,
/// inapplicable, or able to reach a currently blocked state; removal
/// repeats until nothing changes.
pub fn maximal_policy(task: &TaskSpec) -> MaximalPolicy {
    maximal_policy_with_order(task, PruneOrder::Lexicographic)
}

pub fn maximal_policy_with_order(task: &TaskSpec, order: PruneOrder) -> MaximalPolicy {
    // feature -> states exhibiting it, in sorted order
    let mut states_of: BTreeMap<&FeatureId, Vec<&StateId>> =
        task.features.iter().map(|f| (f, Vec::new())).collect();
    for s in &task.states {
        for f in task.features_of(s) {
            if let Some(list) = states_of.get_mut(f) {
                list.push(s);
            }
        }
    }

    let mut policy = Policy::full(&task.features, &task.actions);
    let mut pruned: Vec<(FeatureId, ActionId, PruneReason)> = Vec::new();

    let mut pair_order: Vec<(&FeatureId, &ActionId)> = task
        .features
        .iter()
        .flat_map(|f| task.actions.iter().map(move |a| (f, a)))
        .collect();
    if order == PruneOrder::ReverseLexicographic {
        pair_order.reverse();
    }

    loop {
        // Blocked set is recomputed per round; within a round it is a safe
        // under-approximation, so a removal justified by it stays valid.
        let blocked: BTreeSet<&StateId> = task
            .states
            .iter()
            .filter(|s| {
                task.features_of(s)
                    .iter()
                    .all(|f| policy.mapping[f].is_empty())
            })
            .collect();
        let mut changed = false;
        for &(f, a) in &pair_order {
            if !policy.contains(f, a) {
                continue;
            }
            let mut reason = None;
            for &s in &states_of[f] {
                if task.is_aversive(s, a) {
                    reason = Some(PruneReason::Aversive { state: s.clone() });
                    break;
                }
                let succs = task.successors(s, a);
                if succs.is_empty() {
                    reason = Some(PruneReason::NoSuccessors { state: s.clone() });
                    break;
                }
                if let Some(s2) = succs.iter().find(|s2| blocked.contains(s2)) {
                    reason = Some(PruneReason::BlockedSuccessor {
                        state: s.clone(),
                        successor: s2.clone(),
                    });
                    break;
                }
            }
            if let Some(reason) = reason {
                policy.mapping.get_mut(f).unwrap().remove(a);
                pruned.push((f.clone(), a.clone(), reason));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    MaximalPolicy { policy, pruned }
}

/// Whether any strategy exists for `start`: the maximal policy must
/// propose something at it.
pub fn has_strategy(task: &TaskSpec, start: &StateId) -> Result<bool, TaskError> {
    if !task.starts.contains(start) {
        return Err(TaskError::NotAStart(start.clone()));
    }
    let maximal = maximal_policy(task);
    Ok(!maximal.policy.prop(task.features_of(start))?.is_empty())
}

/// Largest feature-action pair count the enumeration oracle accepts.
/// 2^16 policies times a cheap check stays comfortably interactive.
pub const BRUTE_FORCE_CAP: usize = 16;

/// Iterator over every policy on the task's feature and action sets,
/// one per subset of the pair space.
pub struct PolicyEnumerator {
    features: Vec<FeatureId>,
    actions: Vec<ActionId>,
    next: u64,
    total: u64,
}

impl Iterator for PolicyEnumerator {
    type Item = Policy;

    fn next(&mut self) -> Option<Policy> {
        if self.next == self.total {
            return None;
        }
        let mask = self.next;
        self.next += 1;
        let mut mapping: BTreeMap<FeatureId, BTreeSet<ActionId>> = self
            .features
            .iter()
            .map(|f| (f.clone(), BTreeSet::new()))
            .collect();
        let mut bit = 0;
        for f in &self.features {
            for a in &self.actions {
                if mask & (1 << bit) != 0 {
                    mapping.get_mut(f).unwrap().insert(a.clone());
                }
                bit += 1;
            }
        }
        Some(Policy::new(mapping))
    }
}

/// Enumerates all `2^(|F|*|A|)` policies of a task, smallest mask first.
pub fn enumerate_policies(task: &TaskSpec) -> Result<PolicyEnumerator, TaskError> {
    let size = task.pair_count();
    if size > BRUTE_FORCE_CAP {
        return Err(TaskError::BruteForceTooLarge { size, cap: BRUTE_FORCE_CAP });
    }
    Ok(PolicyEnumerator {
        features: task.features.iter().cloned().collect(),
        actions: task.actions.iter().cloned().collect(),
        next: 0,
        total: 1u64 << size,
    })
}

/// Ground-truth strategy existence by exhaustive policy enumeration.
pub fn brute_force_has_strategy(task: &TaskSpec, start: &StateId) -> Result<bool, TaskError> {
    if !task.starts.contains(start) {
        return Err(TaskError::NotAStart(start.clone()));
    }
    for policy in enumerate_policies(task)? {
        if is_strategy(task, &policy, start)?.holds {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Ground-truth maximal policy: the pointwise union of every enumerated
/// policy that has no safety violation.
pub fn brute_force_maximal(task: &TaskSpec) -> Result<Policy, TaskError> {
    Ok(brute_force_summary(task)?.union_of_safe)
}

/// Everything the enumeration oracle can say about a task, gathered in a
/// single pass over all policies.
pub struct BruteForceSummary {
    /// Union of every policy with no safety violation.
    pub union_of_safe: Policy,
    /// Per start: whether some enumerated policy is a strategy for it.
    pub strategy_exists: BTreeMap<StateId, bool>,
}

pub fn brute_force_summary(task: &TaskSpec) -> Result<BruteForceSummary, TaskError> {
    let size = task.pair_count();
    if size > BRUTE_FORCE_CAP {
        return Err(TaskError::BruteForceTooLarge { size, cap: BRUTE_FORCE_CAP });
    }
    // Policies are bitmasks over (feature, action) slots; per-state
    // proposal tests reduce to mask intersections.
    let index = crate::index::TaskIndex::build(task);
    let n_actions = index.n_actions();
    let slot = |f: u32, a: usize| (f as usize) * n_actions + a;
    // all slots any feature of the state contributes
    let state_bits: Vec<u64> = index
        .feature_sets
        .iter()
        .map(|fs| {
            let mut bits = 0u64;
            for &f in fs {
                for a in 0..n_actions {
                    bits |= 1 << slot(f, a);
                }
            }
            bits
        })
        .collect();
    // slots that make a specific action proposed at the state
    let state_action_bits: Vec<u64> = (0..index.states.len())
        .flat_map(|s| {
            (0..n_actions).map(move |a| (s, a)).collect::<Vec<_>>()
        })
        .map(|(s, a)| {
            let mut bits = 0u64;
            for &f in &index.feature_sets[s] {
                bits |= 1 << slot(f, a);
            }
            bits
        })
        .collect();

    let mut union_mask = 0u64;
    let mut exists = vec![false; index.starts.len()];
    'masks: for mask in 0..(1u64 << size) {
        for s in 0..index.states.len() {
            for a in 0..n_actions {
                let cell = s * n_actions + a;
                if mask & state_action_bits[cell] == 0 {
                    continue; // not proposed here
                }
                if index.aversive[cell] {
                    continue 'masks;
                }
                let succs = &index.successors[cell];
                if succs.is_empty() {
                    continue 'masks;
                }
                if succs.iter().any(|&s2| mask & state_bits[s2 as usize] == 0) {
                    continue 'masks;
                }
            }
        }
        union_mask |= mask;
        for (i, &s0) in index.starts.iter().enumerate() {
            exists[i] = exists[i] || mask & state_bits[s0 as usize] != 0;
        }
    }

    let mut union_of_safe = Policy::empty(&task.features);
    for (fi, f) in index.features.iter().enumerate() {
        for (ai, a) in index.actions.iter().enumerate() {
            if union_mask & (1 << (fi * n_actions + ai)) != 0 {
                union_of_safe.mapping.get_mut(f).unwrap().insert(a.clone());
            }
        }
    }
    let strategy_exists: BTreeMap<StateId, bool> = index
        .starts
        .iter()
        .zip(exists)
        .map(|(&s0, e)| (index.states[s0 as usize].clone(), e))
        .collect();
    Ok(BruteForceSummary { union_of_safe, strategy_exists })
}
