//! The online avoidance learner.
//!
//! A session starts with every feature-action pair allowed and runs trials
//! against the task. Whenever an applied action is met with an aversive
//! signal, or lands in (or constitutes) a dead end the current memory
//! proposes nothing for, the pairs that caused the application are removed
//! and a task restart is requested. Removals are permanent, so the memory
//! reaches a fixpoint on every run.
//!
//! Action selection is strictly greedy over the remaining pairs: the
//! learner never explores outside its memory. Everything nondeterministic
//! (start, action, and successor choices, probabilistic signal emission)
//! is driven by one seeded generator, so a run is a pure function of the
//! task and its [`RunConfig`].

use crate::ids::{ActionId, FeatureId, StateId};
use crate::index::TaskIndex;
use crate::task::{Observation, Policy, TaskError, TaskSpec};
use crate::trace::{RemovalCause, RestartOrigin, RunTrace, TraceEvent};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// How a scheduler picks among candidates.
///
/// Scripted entries are matched by invocation index; an exhausted or
/// inapplicable entry falls back to the seeded uniform choice, so a script
/// never makes the learner pick something outside the candidate set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChooserKind<T> {
    UniformRandom,
    RoundRobin,
    Scripted(Vec<T>),
}

/// Whether an aversive pair actually emits its signal when applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SignalOracleKind {
    /// Every application of an aversive pair signals.
    Always,
    /// Signals are withheld for the first n applications of a pair, then
    /// emitted for the next n, alternating forever. Phases are counted per
    /// pair, not in global steps.
    NSwap(u64),
    /// Each application signals independently with probability p.
    Bernoulli(f64),
}

/// Everything that parameterizes a run besides the task itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub max_steps: u64,
    pub start_chooser: ChooserKind<StateId>,
    pub action_chooser: ChooserKind<ActionId>,
    pub successor_chooser: ChooserKind<StateId>,
    pub signal_oracle: SignalOracleKind,
    /// Inject an external restart every this many steps. Periodic external
    /// restarts are part of a fair setup: they guarantee that every start
    /// state keeps being tried.
    pub external_restart_every: Option<u64>,
    /// How many extra steps an internal restart request may run before it
    /// is honored. Zero means the restart happens before the next action.
    pub restart_delay: u64,
    /// Pairs already removed before the first step; used to resume a run
    /// from a memory snapshot.
    pub initial_removed: BTreeSet<(FeatureId, ActionId)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            max_steps: 1000,
            start_chooser: ChooserKind::UniformRandom,
            action_chooser: ChooserKind::UniformRandom,
            successor_chooser: ChooserKind::UniformRandom,
            signal_oracle: SignalOracleKind::Always,
            external_restart_every: Some(50),
            restart_delay: 0,
            initial_removed: BTreeSet::new(),
        }
    }
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        RunConfig { seed, ..RunConfig::default() }
    }
}

/// The learner's belief: which feature-action pairs are still allowed.
/// Stored as the removed complement; removals only ever grow it.
pub struct LearnerMemory {
    features: Vec<FeatureId>,
    actions: Vec<ActionId>,
    removed_flags: Vec<bool>,
    removed_count: usize,
}

impl LearnerMemory {
    fn new(features: Vec<FeatureId>, actions: Vec<ActionId>) -> Self {
        let len = features.len() * actions.len();
        LearnerMemory { features, actions, removed_flags: vec![false; len], removed_count: 0 }
    }

    fn pair(&self, feature: u32, action: u32) -> usize {
        feature as usize * self.actions.len() + action as usize
    }

    fn is_allowed_idx(&self, feature: u32, action: u32) -> bool {
        !self.removed_flags[self.pair(feature, action)]
    }

    /// Marks a pair removed; returns false if it already was.
    fn remove_idx(&mut self, feature: u32, action: u32) -> bool {
        let cell = self.pair(feature, action);
        if self.removed_flags[cell] {
            return false;
        }
        self.removed_flags[cell] = true;
        self.removed_count += 1;
        true
    }

    pub fn removed_len(&self) -> usize {
        self.removed_count
    }

    pub fn allowed_len(&self) -> usize {
        self.removed_flags.len() - self.removed_count
    }

    pub fn is_allowed(&self, feature: &FeatureId, action: &ActionId) -> bool {
        match (
            self.features.binary_search(feature),
            self.actions.binary_search(action),
        ) {
            (Ok(f), Ok(a)) => self.is_allowed_idx(f as u32, a as u32),
            _ => false,
        }
    }

    pub fn removed(&self) -> BTreeSet<(FeatureId, ActionId)> {
        self.collect(true)
    }

    pub fn allowed(&self) -> BTreeSet<(FeatureId, ActionId)> {
        self.collect(false)
    }

    fn collect(&self, removed: bool) -> BTreeSet<(FeatureId, ActionId)> {
        let mut out = BTreeSet::new();
        for (fi, f) in self.features.iter().enumerate() {
            for (ai, a) in self.actions.iter().enumerate() {
                if self.removed_flags[fi * self.actions.len() + ai] == removed {
                    out.insert((f.clone(), a.clone()));
                }
            }
        }
        out
    }

    /// The policy the memory currently defines.
    pub fn allowed_policy(&self) -> Policy {
        let mut mapping = std::collections::BTreeMap::new();
        for (fi, f) in self.features.iter().enumerate() {
            let actions: BTreeSet<ActionId> = self
                .actions
                .iter()
                .enumerate()
                .filter(|(ai, _)| !self.removed_flags[fi * self.actions.len() + ai])
                .map(|(_, a)| a.clone())
                .collect();
            mapping.insert(f.clone(), actions);
        }
        Policy::new(mapping)
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunEnd {
    BudgetExhausted,
    /// Every start state is blocked; nothing can be executed anymore.
    AllStartsBlocked,
}

struct PendingRestart {
    defer_remaining: u64,
}

/// A live learning run.
pub struct Session<'t> {
    task: &'t TaskSpec,
    index: TaskIndex,
    config: RunConfig,
    rng: ChaCha8Rng,
    memory: LearnerMemory,
    current: Option<u32>,
    pending: Option<PendingRestart>,
    steps_taken: u64,
    budget: u64,
    trial_count: u64,
    removal_events: u64,
    last_removal_step: Option<u64>,
    start_calls: usize,
    action_calls: usize,
    successor_calls: usize,
    apply_counts: Vec<u64>,
    ended: Option<RunEnd>,
    buffer: Vec<TraceEvent>,
}

impl<'t> Session<'t> {
    /// Sets up a session: full memory (minus any resumed removals) and a
    /// pending initial restart, so the first step opens the first trial.
    pub fn new(task: &'t TaskSpec, config: RunConfig) -> Result<Self, TaskError> {
        if let Some(v) = task.validate().into_iter().next() {
            return Err(TaskError::InvalidTask(v));
        }
        if config.max_steps == 0 {
            return Err(TaskError::BadConfig("max_steps must be positive".into()));
        }
        if let Some(0) = config.external_restart_every {
            return Err(TaskError::BadConfig("external restart period must be positive".into()));
        }
        match config.signal_oracle {
            SignalOracleKind::NSwap(0) => {
                return Err(TaskError::BadConfig("n-swap phase length must be positive".into()))
            }
            SignalOracleKind::Bernoulli(p) if !(p > 0.0 && p <= 1.0) => {
                return Err(TaskError::BadConfig(
                    "bernoulli emission probability must lie in (0, 1]".into(),
                ))
            }
            _ => {}
        }
        let index = TaskIndex::build(task);
        let mut memory = LearnerMemory::new(index.features.clone(), index.actions.clone());
        for (f, a) in &config.initial_removed {
            match (index.features.binary_search(f), index.actions.binary_search(a)) {
                (Ok(fi), Ok(ai)) => {
                    memory.remove_idx(fi as u32, ai as u32);
                }
                _ => {
                    return Err(TaskError::BadConfig(format!(
                        "resumed pair ({f}, {a}) is not a feature-action pair of the task"
                    )))
                }
            }
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let apply_counts = vec![0; index.successors.len()];
        let budget = config.max_steps;
        Ok(Session {
            task,
            index,
            config,
            rng,
            memory,
            current: None,
            pending: Some(PendingRestart { defer_remaining: 0 }),
            steps_taken: 0,
            budget,
            trial_count: 0,
            removal_events: 0,
            last_removal_step: None,
            start_calls: 0,
            action_calls: 0,
            successor_calls: 0,
            apply_counts,
            ended: None,
            buffer: Vec::new(),
        })
    }

    pub fn memory(&self) -> &LearnerMemory {
        &self.memory
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn trial_count(&self) -> u64 {
        self.trial_count
    }

    pub fn removal_events(&self) -> u64 {
        self.removal_events
    }

    pub fn last_removal_step(&self) -> Option<u64> {
        self.last_removal_step
    }

    pub fn end(&self) -> Option<RunEnd> {
        self.ended
    }

    pub fn is_live(&self) -> bool {
        self.ended.is_none() && self.steps_taken < self.budget
    }

    /// Grants the run more steps beyond the original budget.
    pub fn extend_budget(&mut self, extra: u64) {
        self.budget += extra;
    }

    /// What the learner currently sees, if a trial is underway.
    pub fn observe(&self) -> Option<Observation> {
        let s = self.current?;
        let state_token = self.index.states[s as usize].clone();
        Some(Observation {
            feature_set: self.task.features_of(&state_token).clone(),
            state_token,
        })
    }

    fn prop_empty(&self, state: u32) -> bool {
        let features = &self.index.feature_sets[state as usize];
        !(0..self.index.n_actions() as u32)
            .any(|a| features.iter().any(|&f| self.memory.is_allowed_idx(f, a)))
    }

    /// Action indices the memory proposes at `state`, ascending.
    fn prop_indices(&self, state: u32) -> Vec<u32> {
        let features = &self.index.feature_sets[state as usize];
        (0..self.index.n_actions() as u32)
            .filter(|&a| features.iter().any(|&f| self.memory.is_allowed_idx(f, a)))
            .collect()
    }

    /// Runs one loop iteration and returns the events it produced. An
    /// empty slice means the run is over (budget exhausted or every start
    /// blocked).
    pub fn step(&mut self) -> &[TraceEvent] {
        self.buffer.clear();
        if self.ended.is_some() || self.steps_taken >= self.budget {
            return &self.buffer;
        }
        let step_idx = self.steps_taken;
        self.steps_taken += 1;

        if let Some(every) = self.config.external_restart_every {
            if step_idx > 0 && step_idx.is_multiple_of(every) {
                self.buffer
                    .push(TraceEvent::RestartRequested { origin: RestartOrigin::External });
                self.pending =
                    Some(PendingRestart { defer_remaining: 0 });
            }
        }

        if self.pending.is_some() {
            let blocked_here = match self.current {
                Some(s) => self.prop_empty(s),
                None => true,
            };
            let defer = self.pending.as_ref().unwrap().defer_remaining;
            if defer == 0 || blocked_here {
                self.handle_restart();
                return &self.buffer;
            }
            self.pending.as_mut().unwrap().defer_remaining = defer - 1;
        }

        let s = self.current.expect("live session must have a current state");
        let prop = self.prop_indices(s);
        assert!(
            !prop.is_empty(),
            "blocked state reached without a pending restart; the blocked check on the \
             predecessor step must have fired"
        );
        let a = self.choose_action(&prop);
        let cell = self.index.cell(s, a);

        if self.index.successors[cell].is_empty() {
            // Nothing to execute: the environment rejects the action, the
            // learner treats it like a blocked continuation.
            self.remove_pairs(s, a, RemovalCause::BlockedSuccessor, step_idx);
            self.request_internal_restart();
            return &self.buffer;
        }

        let s2 = self.choose_successor(cell);
        let application = self.apply_counts[cell];
        self.apply_counts[cell] += 1;
        let signal = self.index.aversive[cell] && self.oracle_emits(application);
        let succ_blocked = self.prop_empty(s2);
        self.buffer.push(TraceEvent::Step {
            state: self.index.states[s as usize].clone(),
            action: self.index.actions[a as usize].clone(),
            successor: self.index.states[s2 as usize].clone(),
            signal,
        });
        if signal || succ_blocked {
            let cause = if signal { RemovalCause::Aversive } else { RemovalCause::BlockedSuccessor };
            self.remove_pairs(s, a, cause, step_idx);
            self.request_internal_restart();
        }
        self.current = Some(s2);
        &self.buffer
    }

    fn handle_restart(&mut self) {
        self.pending = None;
        let start = self.choose_start();
        self.trial_count += 1;
        self.buffer.push(TraceEvent::TrialStart {
            start: self.index.states[start as usize].clone(),
        });
        self.current = Some(start);
        if self.prop_empty(start) {
            self.buffer.push(TraceEvent::StartBlocked {
                state: self.index.states[start as usize].clone(),
            });
            let all_blocked = self.index.starts.iter().all(|&s0| self.prop_empty(s0));
            if all_blocked {
                self.ended = Some(RunEnd::AllStartsBlocked);
                return;
            }
            self.buffer
                .push(TraceEvent::RestartRequested { origin: RestartOrigin::Internal });
            self.pending = Some(PendingRestart { defer_remaining: 0 });
        }
    }

    fn request_internal_restart(&mut self) {
        self.buffer
            .push(TraceEvent::RestartRequested { origin: RestartOrigin::Internal });
        if self.pending.is_none() {
            self.pending =
                Some(PendingRestart { defer_remaining: self.config.restart_delay });
        }
    }

    /// Drops every still-allowed pair in features(state) x {action}.
    fn remove_pairs(&mut self, state: u32, action: u32, cause: RemovalCause, step_idx: u64) {
        let mut removed_features = BTreeSet::new();
        for &f in &self.index.feature_sets[state as usize] {
            if self.memory.remove_idx(f, action) {
                removed_features.insert(self.index.features[f as usize].clone());
            }
        }
        debug_assert!(
            !removed_features.is_empty(),
            "a proposed action always has at least one allowed pair behind it"
        );
        self.removal_events += 1;
        self.last_removal_step = Some(step_idx);
        self.buffer.push(TraceEvent::Removal {
            features: removed_features,
            action: self.index.actions[action as usize].clone(),
            cause,
        });
    }

    fn oracle_emits(&mut self, application: u64) -> bool {
        match self.config.signal_oracle {
            SignalOracleKind::Always => true,
            SignalOracleKind::NSwap(n) => (application / n) % 2 == 1,
            SignalOracleKind::Bernoulli(p) => self.rng.gen_bool(p),
        }
    }

    fn choose_start(&mut self) -> u32 {
        let call = self.start_calls;
        self.start_calls += 1;
        let candidates = &self.index.starts;
        match &self.config.start_chooser {
            ChooserKind::UniformRandom => candidates[self.rng.gen_range(0..candidates.len())],
            ChooserKind::RoundRobin => candidates[call % candidates.len()],
            ChooserKind::Scripted(script) => {
                let scripted = script
                    .get(call)
                    .and_then(|id| self.index.states.binary_search(id).ok())
                    .map(|i| i as u32)
                    .filter(|i| candidates.contains(i));
                match scripted {
                    Some(s) => s,
                    None => candidates[self.rng.gen_range(0..candidates.len())],
                }
            }
        }
    }

    fn choose_action(&mut self, prop: &[u32]) -> u32 {
        let call = self.action_calls;
        self.action_calls += 1;
        match &self.config.action_chooser {
            ChooserKind::UniformRandom => prop[self.rng.gen_range(0..prop.len())],
            ChooserKind::RoundRobin => prop[call % prop.len()],
            ChooserKind::Scripted(script) => {
                let scripted = script
                    .get(call)
                    .and_then(|id| self.index.actions.binary_search(id).ok())
                    .map(|i| i as u32)
                    .filter(|i| prop.contains(i));
                match scripted {
                    Some(a) => a,
                    None => prop[self.rng.gen_range(0..prop.len())],
                }
            }
        }
    }

    fn choose_successor(&mut self, cell: usize) -> u32 {
        let call = self.successor_calls;
        self.successor_calls += 1;
        let candidates = &self.index.successors[cell];
        match &self.config.successor_chooser {
            ChooserKind::UniformRandom => candidates[self.rng.gen_range(0..candidates.len())],
            ChooserKind::RoundRobin => candidates[call % candidates.len()],
            ChooserKind::Scripted(script) => {
                let scripted = script
                    .get(call)
                    .and_then(|id| self.index.states.binary_search(id).ok())
                    .map(|i| i as u32)
                    .filter(|i| candidates.contains(i));
                match scripted {
                    Some(s) => s,
                    None => candidates[self.rng.gen_range(0..candidates.len())],
                }
            }
        }
    }

    /// Whether the current memory is a true fixpoint: no removal is
    /// reachable from any unblocked start by following allowed actions
    /// through every possible successor.
    pub fn is_settled_now(&self) -> bool {
        settled(&self.index, |f, a| self.memory.is_allowed_idx(f, a))
    }
}

fn settled(index: &TaskIndex, is_allowed: impl Fn(u32, u32) -> bool) -> bool {
    let n_actions = index.n_actions() as u32;
    let prop_of = |s: u32| -> Vec<u32> {
        let features = &index.feature_sets[s as usize];
        (0..n_actions)
            .filter(|&a| features.iter().any(|&f| is_allowed(f, a)))
            .collect()
    };
    let mut visited = vec![false; index.states.len()];
    let mut queue: Vec<u32> = Vec::new();
    for &s0 in &index.starts {
        if !prop_of(s0).is_empty() && !visited[s0 as usize] {
            visited[s0 as usize] = true;
            queue.push(s0);
        }
    }
    while let Some(s) = queue.pop() {
        for a in prop_of(s) {
            let cell = index.cell(s, a);
            if index.aversive[cell] {
                return false;
            }
            let succs = &index.successors[cell];
            if succs.is_empty() {
                return false;
            }
            for &s2 in succs {
                if prop_of(s2).is_empty() {
                    return false;
                }
                if !visited[s2 as usize] {
                    visited[s2 as usize] = true;
                    queue.push(s2);
                }
            }
        }
    }
    true
}

/// Whether `allowed` is a true fixpoint for the task: from every unblocked
/// start, no reachable proposed action is aversive, inapplicable, or able
/// to reach a blocked state. When this holds, no continuation of any run
/// holding this memory will ever remove another pair.
pub fn is_settled(task: &TaskSpec, allowed: &BTreeSet<(FeatureId, ActionId)>) -> bool {
    let index = TaskIndex::build(task);
    let flags: BTreeSet<(u32, u32)> = allowed
        .iter()
        .filter_map(|(f, a)| {
            match (index.features.binary_search(f), index.actions.binary_search(a)) {
                (Ok(fi), Ok(ai)) => Some((fi as u32, ai as u32)),
                _ => None,
            }
        })
        .collect();
    settled(&index, |f, a| flags.contains(&(f, a)))
}

/// Summary of a finished run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub trace: RunTrace,
    pub removed: BTreeSet<(FeatureId, ActionId)>,
    pub allowed: BTreeSet<(FeatureId, ActionId)>,
    /// Step of the last removal if the final memory is settled; `Some(0)`
    /// when the initial memory was already settled.
    pub settle_step: Option<u64>,
    pub removal_events: u64,
    pub steps: u64,
    pub trials: u64,
    pub end: RunEnd,
}

/// Runs a session to completion, materializing the full trace.
pub fn run(task: &TaskSpec, config: RunConfig) -> Result<RunReport, TaskError> {
    let mut session = Session::new(task, config)?;
    let mut trace = RunTrace::default();
    loop {
        let events = session.step();
        if events.is_empty() {
            break;
        }
        trace.events.extend_from_slice(events);
    }
    let settle_step = if session.is_settled_now() {
        Some(session.last_removal_step().unwrap_or(0))
    } else {
        None
    };
    Ok(RunReport {
        trace,
        removed: session.memory().removed(),
        allowed: session.memory().allowed(),
        settle_step,
        removal_events: session.removal_events(),
        steps: session.steps_taken(),
        trials: session.trial_count(),
        end: session.end().unwrap_or(RunEnd::BudgetExhausted),
    })
}
