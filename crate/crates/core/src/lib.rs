//! Avoidance learning on finite tasks with feature-limited observations.
//!
//! The crate models tasks whose agents see states only through feature
//! sets and receive boolean aversive signals instead of rewards. It
//! provides:
//!
//! - the task and policy model with validation and feature extension
//!   ([`task`]),
//! - an offline strategy checker, maximal-policy computation, and a
//!   brute-force enumeration oracle ([`oracle`]),
//! - the online avoidance learner with pluggable schedulers, signal
//!   oracles, and settle detection ([`learner`], [`trace`]),
//! - a grid navigation task family with a constructive strategy
//!   ([`grid`]),
//! - a constant-step-size Q-learning baseline that demonstrates value
//!   oscillation under adversarial reward schedules ([`qsim`]),
//! - worked built-in tasks and a seeded random task generator
//!   ([`builtin`], [`gen`]).

pub mod builtin;
pub mod gen;
pub mod grid;
pub mod ids;
pub mod io;
pub mod learner;
pub mod oracle;
pub mod qsim;
pub mod task;
pub mod trace;

mod index;

pub use ids::{ActionId, FeatureId, StateId};
pub use learner::{
    is_settled, run, ChooserKind, LearnerMemory, RunConfig, RunEnd, RunReport, Session,
    SignalOracleKind,
};
pub use oracle::{
    has_strategy, is_strategy, maximal_policy, MaximalPolicy, PruneReason, StrategyVerdict,
    StrategyViolation,
};
pub use task::{Observation, Policy, TaskError, TaskSpec, Violation};
pub use trace::{segment_trials, RemovalCause, RestartOrigin, RunTrace, TraceEvent, Trial};
