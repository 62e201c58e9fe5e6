//! Run-level guarantees of the learner: preserved strategies, clean
//! post-fixpoint behavior, and the memory fixpoint bound.

use avoidlab_core::gen::{random_task, RandomTaskParams};
use avoidlab_core::learner::{run, RunConfig, Session};
use avoidlab_core::oracle::maximal_policy;
use avoidlab_core::trace::TraceEvent;
use avoidlab_core::SignalOracleKind;
use std::collections::BTreeSet;

fn tiny_task(seed: u64) -> avoidlab_core::TaskSpec {
    random_task(&RandomTaskParams {
        seed,
        state_count: 6,
        action_count: 3,
        feature_count: 4,
        max_successors: 2,
        aversive_density: 0.25,
    })
}

fn fair_config(seed: u64) -> RunConfig {
    RunConfig {
        max_steps: 300,
        external_restart_every: Some(7),
        ..RunConfig::with_seed(seed)
    }
}

#[test]
fn every_run_preserves_the_maximal_policy() {
    for task_seed in 0..50 {
        let task = tiny_task(task_seed);
        let maximal = maximal_policy(&task);
        let keep: BTreeSet<_> =
            maximal.policy.pairs().map(|(f, a)| (f.clone(), a.clone())).collect();
        for run_seed in 0..8 {
            let report = run(&task, fair_config(run_seed)).unwrap();
            assert!(
                keep.is_subset(&report.allowed),
                "task {task_seed} run {run_seed}: a preserved pair was removed"
            );
            // the memory fixpoint bound: removal events never exceed the
            // pair space
            assert!(report.removal_events as usize <= task.pair_count());
        }
    }
}

#[test]
fn unfair_runs_also_preserve_the_maximal_policy() {
    // withheld signals and no external restarts are still covered by the
    // preservation guarantee
    for task_seed in 0..25 {
        let task = tiny_task(task_seed);
        let maximal = maximal_policy(&task);
        let keep: BTreeSet<_> =
            maximal.policy.pairs().map(|(f, a)| (f.clone(), a.clone())).collect();
        let config = RunConfig {
            max_steps: 300,
            signal_oracle: SignalOracleKind::NSwap(4),
            external_restart_every: None,
            ..RunConfig::with_seed(1)
        };
        let report = run(&task, config).unwrap();
        assert!(keep.is_subset(&report.allowed), "task {task_seed}");
    }
}

#[test]
fn settled_runs_stay_clean_forever_after() {
    let mut settled_runs = 0;
    for task_seed in 0..40 {
        let task = tiny_task(task_seed);
        for run_seed in 0..4 {
            let mut session = Session::new(&task, fair_config(run_seed)).unwrap();
            while session.is_live() {
                session.step();
            }
            if session.end().is_some() || !session.is_settled_now() {
                continue;
            }
            settled_runs += 1;
            let removals_before = session.removal_events();
            session.extend_budget(500);
            let mut post_signals = 0;
            while session.is_live() {
                for event in session.step().to_vec() {
                    match event {
                        TraceEvent::Removal { .. } => panic!(
                            "task {task_seed} run {run_seed}: removal after the settle point"
                        ),
                        TraceEvent::Step { signal: true, .. } => post_signals += 1,
                        _ => {}
                    }
                }
            }
            assert_eq!(session.removal_events(), removals_before);
            assert_eq!(post_signals, 0, "task {task_seed} run {run_seed}: post-settle signal");
        }
    }
    assert!(settled_runs > 40, "only {settled_runs} settled runs exercised");
}

#[test]
fn settle_predicate_matches_continued_behavior() {
    // when the final memory is NOT settled, some fair continuation can
    // still remove pairs; when it is, none can. Spot-check the negative
    // side by continuing unsettled runs with a long budget.
    let mut unsettled_checked = 0;
    for task_seed in 0..40 {
        let task = tiny_task(task_seed);
        let mut session = Session::new(&task, RunConfig { max_steps: 3, ..fair_config(0) }).unwrap();
        while session.is_live() {
            session.step();
        }
        if session.end().is_some() || session.is_settled_now() {
            continue;
        }
        // a genuinely unsettled memory: some continuation removes a pair.
        // fair random continuation over a long budget should find it.
        session.extend_budget(4000);
        let before = session.removal_events();
        while session.is_live() {
            session.step();
            if session.removal_events() > before {
                break;
            }
        }
        if session.removal_events() > before {
            unsettled_checked += 1;
        }
    }
    assert!(unsettled_checked > 5, "only {unsettled_checked} unsettled continuations removed");
}
