//! Property tests for policies and observations.

use avoidlab_core::gen::{random_task, RandomTaskParams};
use avoidlab_core::{ActionId, FeatureId, Policy, StateId};
use proptest::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

fn arb_policy(features: usize, actions: usize) -> impl Strategy<Value = Policy> {
    proptest::collection::vec(proptest::bool::ANY, features * actions).prop_map(move |bits| {
        let mut mapping: BTreeMap<FeatureId, BTreeSet<ActionId>> = BTreeMap::new();
        for f in 0..features {
            let mut set = BTreeSet::new();
            for a in 0..actions {
                if bits[f * actions + a] {
                    set.insert(ActionId::from(format!("a{a}").as_str()));
                }
            }
            mapping.insert(FeatureId::from(format!("f{f}").as_str()), set);
        }
        Policy::new(mapping)
    })
}

fn arb_feature_set(features: usize) -> impl Strategy<Value = BTreeSet<FeatureId>> {
    proptest::collection::btree_set(0..features, 0..=features).prop_map(|idx| {
        idx.into_iter().map(|f| FeatureId::from(format!("f{f}").as_str())).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prop_is_monotone_in_the_policy(
        p1 in arb_policy(4, 3),
        p2 in arb_policy(4, 3),
        fs in arb_feature_set(4),
    ) {
        let union = p1.union(&p2).unwrap();
        let small = p1.prop(&fs).unwrap();
        let big = union.prop(&fs).unwrap();
        prop_assert!(small.is_subset(&big));
    }

    #[test]
    fn prop_is_monotone_in_the_feature_set(
        p in arb_policy(4, 3),
        fs in arb_feature_set(4),
        extra in arb_feature_set(4),
    ) {
        let mut bigger = fs.clone();
        bigger.extend(extra.iter().cloned());
        let small = p.prop(&fs).unwrap();
        let big = p.prop(&bigger).unwrap();
        prop_assert!(small.is_subset(&big));
    }

    #[test]
    fn union_is_commutative_and_idempotent(p1 in arb_policy(3, 3), p2 in arb_policy(3, 3)) {
        prop_assert_eq!(p1.union(&p2).unwrap(), p2.union(&p1).unwrap());
        prop_assert_eq!(p1.union(&p1).unwrap(), p1.clone());
    }

    #[test]
    fn feature_extension_leaves_prop_untouched(seed in 0u64..500, deco_states in proptest::collection::btree_set(0usize..6, 0..6)) {
        let task = random_task(&RandomTaskParams { seed, ..RandomTaskParams::default() });
        let new_feature = FeatureId::from("deco");
        let mut augmented = task.feature_map.clone();
        for (i, s) in task.states.iter().enumerate() {
            if deco_states.contains(&i) {
                augmented.get_mut(s).unwrap().insert(new_feature.clone());
            }
        }
        let extended = task
            .extend_features(&[new_feature.clone()].into_iter().collect(), &augmented)
            .unwrap();

        // a policy over the old features, silent on the new one
        let old_policy = Policy::full(&task.features, &task.actions);
        let mut mapping = old_policy.mapping.clone();
        mapping.insert(new_feature, BTreeSet::new());
        let lifted = Policy::new(mapping);

        for s in &task.states {
            let before = old_policy.prop(task.features_of(s)).unwrap();
            let after = lifted.prop(extended.features_of(s)).unwrap();
            prop_assert_eq!(before, after);
        }
    }
}

#[test]
fn validation_accepts_generator_output_across_shapes() {
    for (states, actions, features) in [(1, 1, 1), (3, 2, 2), (8, 3, 4), (5, 1, 4)] {
        for seed in 0..30 {
            let task = random_task(&RandomTaskParams {
                seed,
                state_count: states,
                action_count: actions,
                feature_count: features,
                max_successors: 2,
                aversive_density: 0.3,
            });
            let violations = task.validate();
            assert!(violations.is_empty(), "{states}/{actions}/{features} seed {seed}: {violations:?}");
        }
    }
}

#[test]
fn observation_state_token_never_steers_decisions() {
    // two tasks identical up to a state renaming produce the same
    // decision stream; only features matter
    use avoidlab_core::learner::{run, RunConfig};
    let task = random_task(&RandomTaskParams { seed: 11, ..RandomTaskParams::default() });
    let mut renamed = task.clone();
    let rename = |s: &StateId| StateId::from(format!("x-{s}").as_str());
    renamed.states = task.states.iter().map(rename).collect();
    renamed.starts = task.starts.iter().map(rename).collect();
    renamed.transition = task
        .transition
        .iter()
        .map(|((s, a), succ)| ((rename(s), a.clone()), succ.iter().map(rename).collect()))
        .collect();
    renamed.feature_map = task.feature_map.iter().map(|(s, f)| (rename(s), f.clone())).collect();
    renamed.aversive = task.aversive.iter().map(|(s, a)| (rename(s), a.clone())).collect();

    let a = run(&task, RunConfig::with_seed(5)).unwrap();
    let b = run(&renamed, RunConfig::with_seed(5)).unwrap();
    assert_eq!(a.removed, b.removed, "feature-action memory must not depend on state names");
    assert_eq!(a.removal_events, b.removal_events);
}
