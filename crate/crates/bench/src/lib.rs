//! Shared fixtures for the benchmark suite.

use avoidlab_core::gen::{random_task, RandomTaskParams};
use avoidlab_core::grid::{GridProblem, Point};
use avoidlab_core::TaskSpec;

/// A 6-state task within reach of the enumeration oracle.
pub fn tiny_task(seed: u64) -> TaskSpec {
    random_task(&RandomTaskParams {
        seed,
        state_count: 6,
        action_count: 3,
        feature_count: 4,
        max_successors: 2,
        aversive_density: 0.25,
    })
}

/// A mid-size navigation problem, a few thousand reachable states.
pub fn bench_grid() -> GridProblem {
    GridProblem {
        width: 6,
        height: 6,
        starts: [Point::new(0, 0), Point::new(6, 6)].into_iter().collect(),
        targets: [Point::new(3, 3), Point::new(1, 5)].into_iter().collect(),
        tau: 14,
    }
}
