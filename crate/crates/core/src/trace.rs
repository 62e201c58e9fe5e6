//! Run traces: the ordered event log of a learning run, trial
//! segmentation, and the trace CSV / memory snapshot formats.

use crate::ids::{ActionId, FeatureId, StateId};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

/// What triggered a removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalCause {
    /// An aversive signal was witnessed.
    Aversive,
    /// The chosen successor proposes nothing, or the pair has no
    /// successors at all.
    BlockedSuccessor,
}

/// Who asked for a task restart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartOrigin {
    Internal,
    External,
}

/// One entry of the run log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    /// A trial begins at `start`. Emitted every time a restart lands, so
    /// the trace is segmented by these markers.
    TrialStart { start: StateId },
    /// One executed action, with the signal flag of its adjudication.
    Step { state: StateId, action: ActionId, successor: StateId, signal: bool },
    /// Pairs `features x {action}` were dropped from memory. Only the
    /// pairs that were still present are listed.
    Removal { features: BTreeSet<FeatureId>, action: ActionId, cause: RemovalCause },
    RestartRequested { origin: RestartOrigin },
    /// The trial's start state proposes nothing; no step can be taken
    /// from it.
    StartBlocked { state: StateId },
}

/// The ordered event log of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunTrace {
    pub events: Vec<TraceEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("event {index} precedes the first trial marker")]
    EventBeforeFirstTrial { index: usize },
    #[error("step at event {index} starts at `{found}` but the trial chain expects `{expected}`")]
    BrokenChain { index: usize, expected: StateId, found: StateId },
}

/// One trial: the events between consecutive trial markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub start: StateId,
    pub events: Vec<TraceEvent>,
}

impl Trial {
    /// The state-action chain of the trial's steps.
    pub fn steps(&self) -> impl Iterator<Item = (&StateId, &ActionId, &StateId, bool)> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Step { state, action, successor, signal } => {
                Some((state, action, successor, *signal))
            }
            _ => None,
        })
    }

    pub fn removals(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Removal { .. }))
    }

    pub fn signal_count(&self) -> usize {
        self.steps().filter(|(_, _, _, signal)| *signal).count()
    }
}

/// Splits a trace at its trial markers and checks that each trial's steps
/// form a transition chain from the trial's start.
pub fn segment_trials(trace: &RunTrace) -> Result<Vec<Trial>, TraceError> {
    let mut trials: Vec<Trial> = Vec::new();
    let mut expected: Option<StateId> = None;
    for (index, event) in trace.events.iter().enumerate() {
        match event {
            TraceEvent::TrialStart { start } => {
                trials.push(Trial { start: start.clone(), events: Vec::new() });
                expected = Some(start.clone());
            }
            _ => {
                let trial = trials
                    .last_mut()
                    .ok_or(TraceError::EventBeforeFirstTrial { index })?;
                if let TraceEvent::Step { state, successor, .. } = event {
                    match &expected {
                        Some(e) if e == state => {}
                        Some(e) => {
                            return Err(TraceError::BrokenChain {
                                index,
                                expected: e.clone(),
                                found: state.clone(),
                            })
                        }
                        None => unreachable!("expected state set at trial start"),
                    }
                    expected = Some(successor.clone());
                }
                trial.events.push(event.clone());
            }
        }
    }
    Ok(trials)
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_owned()
    }
}

/// Header of the trace CSV.
pub const TRACE_CSV_HEADER: &str = "step,trial,event,state,action,successor,signal,removed_pairs,P_size";

/// Renders a trace as CSV. `pair_count` is `|F|*|A|`, used to report the
/// remaining memory size after each event.
pub fn trace_to_csv(trace: &RunTrace, pair_count: usize) -> String {
    let mut out = String::new();
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    let mut step: u64 = 0;
    let mut trial: u64 = 0;
    let mut removed: usize = 0;
    for event in &trace.events {
        let (kind, state, action, successor, signal, pairs) = match event {
            TraceEvent::TrialStart { start } => {
                trial += 1;
                ("trial_start", start.as_str(), "", "", "", String::new())
            }
            TraceEvent::Step { state, action, successor, signal } => {
                step += 1;
                (
                    "step",
                    state.as_str(),
                    action.as_str(),
                    successor.as_str(),
                    if *signal { "1" } else { "0" },
                    String::new(),
                )
            }
            TraceEvent::Removal { features, action, cause } => {
                removed += features.len();
                let mut joined = String::new();
                for (i, f) in features.iter().enumerate() {
                    if i > 0 {
                        joined.push(';');
                    }
                    write!(joined, "{f}:{action}").unwrap();
                }
                (
                    match cause {
                        RemovalCause::Aversive => "removal_aversive",
                        RemovalCause::BlockedSuccessor => "removal_blocked",
                    },
                    "",
                    action.as_str(),
                    "",
                    "",
                    joined,
                )
            }
            TraceEvent::RestartRequested { origin } => (
                match origin {
                    RestartOrigin::Internal => "restart_internal",
                    RestartOrigin::External => "restart_external",
                },
                "",
                "",
                "",
                "",
                String::new(),
            ),
            TraceEvent::StartBlocked { state } => {
                ("start_blocked", state.as_str(), "", "", "", String::new())
            }
        };
        writeln!(
            out,
            "{step},{trial},{kind},{},{},{},{signal},{},{}",
            csv_field(state),
            csv_field(action),
            csv_field(successor),
            csv_field(&pairs),
            pair_count - removed,
        )
        .unwrap();
    }
    out
}

/// Serializes a removed-pair set as newline-delimited `feature<TAB>action`
/// lines, the format used to resume a run.
pub fn removed_to_snapshot(removed: &BTreeSet<(FeatureId, ActionId)>) -> String {
    let mut out = String::new();
    for (f, a) in removed {
        writeln!(out, "{f}\t{a}").unwrap();
    }
    out
}

/// Parses a removed-pair snapshot.
pub fn removed_from_snapshot(text: &str) -> Result<BTreeSet<(FeatureId, ActionId)>, String> {
    let mut out = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (f, a) = line
            .split_once('\t')
            .ok_or_else(|| format!("line {}: expected feature<TAB>action", lineno + 1))?;
        out.insert((FeatureId::from(f), ActionId::from(a)));
    }
    Ok(out)
}
