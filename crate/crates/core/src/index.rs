//! Dense integer view of a task for the inner loops of learning runs and
//! settle checks. Built once per session; string identifiers are resolved
//! back only when events are reported.

use crate::ids::{ActionId, FeatureId, StateId};
use crate::task::TaskSpec;
use std::collections::BTreeMap;

pub(crate) struct TaskIndex {
    pub states: Vec<StateId>,
    pub actions: Vec<ActionId>,
    pub features: Vec<FeatureId>,
    pub starts: Vec<u32>,
    /// `[state * n_actions + action]` -> sorted successor state indices.
    pub successors: Vec<Vec<u32>>,
    /// `[state]` -> sorted feature indices.
    pub feature_sets: Vec<Vec<u32>>,
    /// `[state * n_actions + action]` -> pair is aversive.
    pub aversive: Vec<bool>,
}

impl TaskIndex {
    pub fn build(task: &TaskSpec) -> Self {
        let states: Vec<StateId> = task.states.iter().cloned().collect();
        let actions: Vec<ActionId> = task.actions.iter().cloned().collect();
        let features: Vec<FeatureId> = task.features.iter().cloned().collect();
        let state_pos: BTreeMap<&StateId, u32> =
            states.iter().zip(0u32..).collect();
        let feature_pos: BTreeMap<&FeatureId, u32> =
            features.iter().zip(0u32..).collect();

        let n_actions = actions.len();
        let mut successors = vec![Vec::new(); states.len() * n_actions];
        let mut aversive = vec![false; states.len() * n_actions];
        for (si, s) in states.iter().enumerate() {
            for (ai, a) in actions.iter().enumerate() {
                let cell = si * n_actions + ai;
                successors[cell] = task
                    .successors(s, a)
                    .iter()
                    .filter_map(|s2| state_pos.get(s2).copied())
                    .collect();
                aversive[cell] = task.is_aversive(s, a);
            }
        }
        let feature_sets = states
            .iter()
            .map(|s| {
                task.features_of(s)
                    .iter()
                    .filter_map(|f| feature_pos.get(f).copied())
                    .collect()
            })
            .collect();
        let starts = task
            .starts
            .iter()
            .filter_map(|s| state_pos.get(s).copied())
            .collect();

        TaskIndex { states, actions, features, starts, successors, feature_sets, aversive }
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn cell(&self, state: u32, action: u32) -> usize {
        state as usize * self.n_actions() + action as usize
    }
}
