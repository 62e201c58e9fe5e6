//! Built-in worked tasks, available to the CLI by name.

use crate::ids::{ActionId, FeatureId, StateId};
use crate::task::TaskSpec;
use std::collections::{BTreeMap, BTreeSet};

fn states(names: &[&str]) -> BTreeSet<StateId> {
    names.iter().map(|n| StateId::from(*n)).collect()
}

fn actions(names: &[&str]) -> BTreeSet<ActionId> {
    names.iter().map(|n| ActionId::from(*n)).collect()
}

fn features(names: &[&str]) -> BTreeSet<FeatureId> {
    names.iter().map(|n| FeatureId::from(*n)).collect()
}

/// Two-state task with a single action.
///
/// Both states are starts. State 1 shows feature `f` and its only action is
/// aversive; state 2 shows feature `g` and loops harmlessly. Only start 2
/// admits a strategy, namely `{f -> {}, g -> {a}}`.
pub fn example1() -> TaskSpec {
    let mut transition = BTreeMap::new();
    transition.insert(
        (StateId::from("1"), ActionId::from("a")),
        states(&["1"]),
    );
    transition.insert(
        (StateId::from("2"), ActionId::from("a")),
        states(&["2"]),
    );
    let mut feature_map = BTreeMap::new();
    feature_map.insert(StateId::from("1"), features(&["f"]));
    feature_map.insert(StateId::from("2"), features(&["g"]));
    TaskSpec {
        states: states(&["1", "2"]),
        starts: states(&["1", "2"]),
        actions: actions(&["a"]),
        features: features(&["f", "g"]),
        transition,
        feature_map,
        aversive: [(StateId::from("1"), ActionId::from("a"))]
            .into_iter()
            .collect(),
    }
}

/// One-state task with actions `a` and `b`, where `b` is aversive.
///
/// The state shows the single feature `f1`. The pair (f1, a) is the unique
/// safe behavior; an avoidance learner drops (f1, b) at the first witnessed
/// signal and then never changes its memory again.
pub fn fig2b() -> TaskSpec {
    let mut transition = BTreeMap::new();
    transition.insert(
        (StateId::from("1"), ActionId::from("a")),
        states(&["1"]),
    );
    transition.insert(
        (StateId::from("1"), ActionId::from("b")),
        states(&["1"]),
    );
    let mut feature_map = BTreeMap::new();
    feature_map.insert(StateId::from("1"), features(&["f1"]));
    TaskSpec {
        states: states(&["1"]),
        starts: states(&["1"]),
        actions: actions(&["a", "b"]),
        features: features(&["f1"]),
        transition,
        feature_map,
        aversive: [(StateId::from("1"), ActionId::from("b"))]
            .into_iter()
            .collect(),
    }
}

/// Task with no strategy for its only start, on which run order decides
/// whether the pair (f, a) survives.
///
/// Start 1 and trap state 2 share the one feature `f`. Action `b` is
/// aversive at state 1 and leads into state 2, where every action is
/// aversive; action `a` loops safely at state 1. A run that tries `b`
/// first and restarts immediately keeps (f, a) forever, because state 2 is
/// never acted upon once (f, b) is gone. Deferring the restart lets the
/// run act inside state 2, which removes (f, a) as well.
pub fn fig5_reconstruction() -> TaskSpec {
    let mut transition = BTreeMap::new();
    transition.insert(
        (StateId::from("1"), ActionId::from("a")),
        states(&["1"]),
    );
    transition.insert(
        (StateId::from("1"), ActionId::from("b")),
        states(&["2"]),
    );
    transition.insert(
        (StateId::from("2"), ActionId::from("a")),
        states(&["2"]),
    );
    transition.insert(
        (StateId::from("2"), ActionId::from("b")),
        states(&["2"]),
    );
    let mut feature_map = BTreeMap::new();
    feature_map.insert(StateId::from("1"), features(&["f"]));
    feature_map.insert(StateId::from("2"), features(&["f"]));
    TaskSpec {
        states: states(&["1", "2"]),
        starts: states(&["1"]),
        actions: actions(&["a", "b"]),
        features: features(&["f"]),
        transition,
        feature_map,
        aversive: [
            (StateId::from("1"), ActionId::from("b")),
            (StateId::from("2"), ActionId::from("a")),
            (StateId::from("2"), ActionId::from("b")),
        ]
        .into_iter()
        .collect(),
    }
}

/// Resolves a built-in task by its CLI name.
pub fn by_name(name: &str) -> Option<TaskSpec> {
    match name {
        "example1" => Some(example1()),
        "fig2b" => Some(fig2b()),
        "fig5-reconstruction" => Some(fig5_reconstruction()),
        _ => None,
    }
}

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] = &["example1", "fig2b", "fig5-reconstruction"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid_tasks() {
        for name in NAMES {
            let task = by_name(name).unwrap();
            assert!(task.validate().is_empty(), "{name} failed validation");
        }
    }

    #[test]
    fn by_name_rejects_unknown() {
        assert!(by_name("nope").is_none());
    }
}
