//! Task file format: a single JSON document describing an explicit task.
//!
//! Keys: `states`, `starts`, `actions`, `features` (arrays of strings),
//! `featureMap` (object state -> array of features), `transition` (array of
//! `{state, action, successors}` entries), `aversive` (array of
//! `[state, action]` pairs). Unknown keys are rejected.
//!
//! Export is canonical: all arrays and object keys sorted, entries with
//! empty successor sets omitted, two-space indentation, trailing newline.
//! Re-exporting an imported canonical file reproduces it byte for byte.

use crate::ids::{ActionId, FeatureId, StateId};
use crate::task::TaskSpec;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    states: Vec<StateId>,
    starts: Vec<StateId>,
    actions: Vec<ActionId>,
    features: Vec<FeatureId>,
    #[serde(rename = "featureMap")]
    feature_map: BTreeMap<StateId, Vec<FeatureId>>,
    transition: Vec<TransitionEntry>,
    aversive: Vec<(StateId, ActionId)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionEntry {
    state: StateId,
    action: ActionId,
    successors: Vec<StateId>,
}

impl From<&TaskSpec> for TaskFile {
    fn from(task: &TaskSpec) -> Self {
        TaskFile {
            states: task.states.iter().cloned().collect(),
            starts: task.starts.iter().cloned().collect(),
            actions: task.actions.iter().cloned().collect(),
            features: task.features.iter().cloned().collect(),
            feature_map: task
                .feature_map
                .iter()
                .map(|(s, fs)| (s.clone(), fs.iter().cloned().collect()))
                .collect(),
            transition: task
                .transition
                .iter()
                .filter(|(_, succs)| !succs.is_empty())
                .map(|((s, a), succs)| TransitionEntry {
                    state: s.clone(),
                    action: a.clone(),
                    successors: succs.iter().cloned().collect(),
                })
                .collect(),
            aversive: task.aversive.iter().cloned().collect(),
        }
    }
}

impl From<TaskFile> for TaskSpec {
    fn from(file: TaskFile) -> Self {
        let mut transition: BTreeMap<(StateId, ActionId), BTreeSet<StateId>> = BTreeMap::new();
        for entry in file.transition {
            transition
                .entry((entry.state, entry.action))
                .or_default()
                .extend(entry.successors);
        }
        // absent and explicitly-empty successor sets mean the same thing
        transition.retain(|_, succs| !succs.is_empty());
        TaskSpec {
            states: file.states.into_iter().collect(),
            starts: file.starts.into_iter().collect(),
            actions: file.actions.into_iter().collect(),
            features: file.features.into_iter().collect(),
            transition,
            feature_map: file
                .feature_map
                .into_iter()
                .map(|(s, fs)| (s, fs.into_iter().collect()))
                .collect(),
            aversive: file.aversive.into_iter().collect(),
        }
    }
}

/// Parses a task document. The task is not validated; run
/// [`TaskSpec::validate`] separately.
pub fn parse_task(text: &str) -> Result<TaskSpec, serde_json::Error> {
    let file: TaskFile = serde_json::from_str(text)?;
    Ok(file.into())
}

/// Renders a task in the canonical layout.
pub fn to_canonical_json(task: &TaskSpec) -> String {
    let file = TaskFile::from(task);
    let mut out = serde_json::to_string_pretty(&file).expect("task serialization cannot fail");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn canonical_round_trip_is_byte_identical() {
        let task = builtin::example1();
        let first = to_canonical_json(&task);
        let reread = parse_task(&first).unwrap();
        assert_eq!(reread, task);
        assert_eq!(to_canonical_json(&reread), first);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut doc = to_canonical_json(&builtin::example1());
        doc = doc.replacen("{", "{\n  \"extra\": 1,", 1);
        assert!(parse_task(&doc).is_err());
    }

    #[test]
    fn empty_successor_entries_are_normalized_away() {
        let doc = r#"{
  "states": ["1"],
  "starts": ["1"],
  "actions": ["a"],
  "features": ["f"],
  "featureMap": {"1": ["f"]},
  "transition": [{"state": "1", "action": "a", "successors": []}],
  "aversive": []
}"#;
        let task = parse_task(doc).unwrap();
        assert!(task.successors(&StateId::from("1"), &ActionId::from("a")).is_empty());
        assert!(!to_canonical_json(&task).contains("successors\": []"));
    }
}
