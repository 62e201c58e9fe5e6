//! Constant-step-size Q-learning baseline on a one-state task whose risky
//! action pays off or punishes in long alternating phases.
//!
//! The safe action always earns +1. The risky action earns +5 for n
//! consecutive applications, then -10 for the next n, forever. Each
//! outcome has empirical frequency one half, yet a constant-step-size
//! value estimate chases whichever phase it is in and never settles; the
//! time series produced here makes that oscillation measurable.

use crate::ids::{ActionId, StateId};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

/// Reward of the safe action.
pub const SAFE_REWARD: f64 = 1.0;
/// Reward of the risky action during a generous phase.
pub const SWAP_HIGH: f64 = 5.0;
/// Reward of the risky action during a punishing phase.
pub const SWAP_LOW: f64 = -10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QSimError {
    #[error("step size must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("discount factor must lie in [0, 1), got {0}")]
    InvalidGamma(f64),
    #[error("phase length must be positive")]
    InvalidPhaseLength,
    #[error("step count must be positive")]
    InvalidSteps,
}

/// Tabular action-value estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: BTreeMap<(StateId, ActionId), f64>,
}

impl QTable {
    /// A table over the given pairs, all starting at zero.
    pub fn zeroed(pairs: impl IntoIterator<Item = (StateId, ActionId)>) -> Self {
        QTable { values: pairs.into_iter().map(|p| (p, 0.0)).collect() }
    }

    pub fn get(&self, state: &StateId, action: &ActionId) -> f64 {
        *self.values.get(&(state.clone(), action.clone())).unwrap_or(&0.0)
    }

    /// Greatest estimate over the known actions of a state; zero when the
    /// state has no entries.
    pub fn max_over_actions(&self, state: &StateId) -> f64 {
        self.values
            .iter()
            .filter(|((s, _), _)| s == state)
            .map(|(_, &v)| v)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.max(v))))
            .unwrap_or(0.0)
    }
}

/// One Q-learning update:
/// `Q(s,a) += alpha * (r + gamma * max_a' Q(s2,a') - Q(s,a))`.
pub fn q_update(
    q: &mut QTable,
    state: &StateId,
    action: &ActionId,
    reward: f64,
    next_state: &StateId,
    alpha: f64,
    gamma: f64,
) -> Result<(), QSimError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(QSimError::InvalidAlpha(alpha));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(QSimError::InvalidGamma(gamma));
    }
    let bootstrap = q.max_over_actions(next_state);
    let key = (state.clone(), action.clone());
    let old = *q.values.get(&key).unwrap_or(&0.0);
    let new = old + alpha * (reward + gamma * bootstrap - old);
    debug_assert!(new.is_finite(), "bounded rewards keep estimates finite");
    q.values.insert(key, new);
    Ok(())
}

/// The adversarial outcome schedule of the risky action: +5 for the first
/// n applications, -10 for the next n, and so on. Phases advance with
/// applications of that action, not with global time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapSchedule {
    n: u64,
    applications: u64,
}

impl SwapSchedule {
    pub fn new(n: u64) -> Result<Self, QSimError> {
        if n == 0 {
            return Err(QSimError::InvalidPhaseLength);
        }
        Ok(SwapSchedule { n, applications: 0 })
    }

    /// Completed-application count so far.
    pub fn applications(&self) -> u64 {
        self.applications
    }

    /// Index of the phase the next application falls into.
    pub fn phase(&self) -> u64 {
        self.applications / self.n
    }

    /// The reward of the next application; advances the counter.
    pub fn next_reward(&mut self) -> f64 {
        let reward = if self.phase().is_multiple_of(2) { SWAP_HIGH } else { SWAP_LOW };
        self.applications += 1;
        reward
    }
}

/// How the baseline picks between the safe and risky action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionPattern {
    /// a, b, a, b, ...
    Alternating,
    /// Uniform coin flips from a seeded generator.
    SeededRandom { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QSimParams {
    pub n: u64,
    pub alpha: f64,
    pub gamma: f64,
    pub steps: u64,
    pub pattern: ActionPattern,
}

impl Default for QSimParams {
    fn default() -> Self {
        QSimParams {
            n: 800,
            alpha: 0.25,
            gamma: 0.5,
            steps: 40_000,
            pattern: ActionPattern::Alternating,
        }
    }
}

/// One row of the simulated time series, logged after every global step.
#[derive(Debug, Clone, PartialEq)]
pub struct QSimRow {
    pub step: u64,
    pub q_a: f64,
    pub q_b: f64,
    pub reward: f64,
    pub action: char,
    pub phase: u64,
}

/// Runs the one-state baseline task: action `a` always rewards +1, action
/// `b` follows the swap schedule. Returns the per-step value estimates.
pub fn simulate(params: &QSimParams) -> Result<Vec<QSimRow>, QSimError> {
    if params.steps == 0 {
        return Err(QSimError::InvalidSteps);
    }
    let state = StateId::from("1");
    let act_a = ActionId::from("a");
    let act_b = ActionId::from("b");
    let mut q = QTable::zeroed([
        (state.clone(), act_a.clone()),
        (state.clone(), act_b.clone()),
    ]);
    let mut schedule = SwapSchedule::new(params.n)?;
    let mut rng = match params.pattern {
        ActionPattern::SeededRandom { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        ActionPattern::Alternating => None,
    };
    let mut rows = Vec::with_capacity(params.steps as usize);
    for step in 1..=params.steps {
        let take_a = match &mut rng {
            Some(rng) => rng.gen_bool(0.5),
            None => step % 2 == 1,
        };
        let (action, reward) = if take_a {
            (&act_a, SAFE_REWARD)
        } else {
            (&act_b, schedule.next_reward())
        };
        q_update(&mut q, &state, action, reward, &state, params.alpha, params.gamma)?;
        rows.push(QSimRow {
            step,
            q_a: q.get(&state, &act_a),
            q_b: q.get(&state, &act_b),
            reward,
            action: if take_a { 'a' } else { 'b' },
            phase: schedule.phase(),
        });
    }
    Ok(rows)
}

/// Header of the time-series CSV.
pub const QSIM_CSV_HEADER: &str = "step,q_1a,q_1b,reward,action,phase";

/// Renders the time series as CSV.
pub fn rows_to_csv(rows: &[QSimRow]) -> String {
    let mut out = String::new();
    out.push_str(QSIM_CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.step, r.q_a, r.q_b, r.reward, r.action, r.phase)
            .unwrap();
    }
    out
}

/// Number of strict sign flips in a series, ignoring zeros.
pub fn sign_changes(series: impl IntoIterator<Item = f64>) -> usize {
    let mut count = 0;
    let mut last: Option<bool> = None; // sign of the last nonzero value
    for v in series {
        if v == 0.0 {
            continue;
        }
        let positive = v > 0.0;
        if let Some(prev) = last {
            if prev != positive {
                count += 1;
            }
        }
        last = Some(positive);
    }
    count
}
