//! Seeded random task generation for the property and equivalence suites.

use crate::ids::{ActionId, FeatureId, StateId};
use crate::task::TaskSpec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Shape parameters for [`random_task`]. Generated tasks always pass
/// validation: unreachable states are pruned after generation, and every
/// state carries at least one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomTaskParams {
    pub seed: u64,
    pub state_count: usize,
    pub action_count: usize,
    pub feature_count: usize,
    /// Successor counts per (state, action) are drawn from
    /// `0..=max_successors`; zero models actions the environment cannot
    /// execute there.
    pub max_successors: usize,
    /// Probability that any given (state, action) pair is aversive.
    pub aversive_density: f64,
}

impl Default for RandomTaskParams {
    fn default() -> Self {
        RandomTaskParams {
            seed: 0,
            state_count: 6,
            action_count: 3,
            feature_count: 4,
            max_successors: 2,
            aversive_density: 0.2,
        }
    }
}

/// Largest shapes the generator accepts; the point of generated tasks is
/// to stay within reach of the enumeration oracle.
pub const MAX_STATES: usize = 8;
pub const MAX_ACTIONS: usize = 3;
pub const MAX_FEATURES: usize = 4;
pub const MAX_SUCCESSORS: usize = 2;

/// Deterministically generates a valid task from the parameters.
pub fn random_task(params: &RandomTaskParams) -> TaskSpec {
    assert!((1..=MAX_STATES).contains(&params.state_count), "state count out of range");
    assert!((1..=MAX_ACTIONS).contains(&params.action_count), "action count out of range");
    assert!((1..=MAX_FEATURES).contains(&params.feature_count), "feature count out of range");
    assert!(params.max_successors <= MAX_SUCCESSORS, "successor bound out of range");
    assert!(
        (0.0..=1.0).contains(&params.aversive_density),
        "aversive density must lie in [0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let states: Vec<StateId> = (0..params.state_count)
        .map(|i| StateId::from(format!("s{i}")))
        .collect();
    let actions: BTreeSet<ActionId> = (0..params.action_count)
        .map(|i| ActionId::from(format!("a{i}")))
        .collect();
    let features: Vec<FeatureId> = (0..params.feature_count)
        .map(|i| FeatureId::from(format!("f{i}")))
        .collect();

    let start_count = rng.gen_range(1..=params.state_count);
    let mut starts: BTreeSet<StateId> = BTreeSet::new();
    while starts.len() < start_count {
        starts.insert(states[rng.gen_range(0..states.len())].clone());
    }

    let mut transition: BTreeMap<(StateId, ActionId), BTreeSet<StateId>> = BTreeMap::new();
    for s in &states {
        for a in &actions {
            // inapplicable pairs are rare but must occur
            let succ_count = if params.max_successors == 0 || rng.gen_bool(0.15) {
                0
            } else {
                rng.gen_range(1..=params.max_successors)
            };
            let mut succs = BTreeSet::new();
            for _ in 0..succ_count {
                succs.insert(states[rng.gen_range(0..states.len())].clone());
            }
            if !succs.is_empty() {
                transition.insert((s.clone(), a.clone()), succs);
            }
        }
    }

    let mut feature_map: BTreeMap<StateId, BTreeSet<FeatureId>> = BTreeMap::new();
    for s in &states {
        let count = rng.gen_range(1..=params.feature_count);
        let mut fs = BTreeSet::new();
        while fs.len() < count {
            fs.insert(features[rng.gen_range(0..features.len())].clone());
        }
        feature_map.insert(s.clone(), fs);
    }

    let mut aversive: BTreeSet<(StateId, ActionId)> = BTreeSet::new();
    for s in &states {
        for a in &actions {
            if rng.gen_bool(params.aversive_density) {
                aversive.insert((s.clone(), a.clone()));
            }
        }
    }

    let mut task = TaskSpec {
        states: states.into_iter().collect(),
        starts,
        actions,
        features: features.into_iter().collect(),
        transition,
        feature_map,
        aversive,
    };

    // Keep only the reachable fragment so the result validates.
    let reachable = task.reachable_states();
    task.states.retain(|s| reachable.contains(s));
    task.transition.retain(|(s, _), _| reachable.contains(s));
    for succs in task.transition.values_mut() {
        succs.retain(|s| reachable.contains(s));
    }
    task.transition.retain(|_, succs| !succs.is_empty());
    task.feature_map.retain(|s, _| reachable.contains(s));
    task.aversive.retain(|(s, _)| reachable.contains(s));
    task
}
