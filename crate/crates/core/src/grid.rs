//! Grid navigation task family.
//!
//! An agent walks a rectangular terrain chasing a target location under a
//! time limit; reaching the target relocates it and resets the clock, and
//! running out of time makes every action aversive. The agent observes
//! only the offset to the target and the remaining time, which is enough
//! to support a strategy: head straight for the target whenever it is
//! reachable in the remaining time.

use crate::ids::{ActionId, FeatureId, StateId};
use crate::task::{Policy, TaskSpec};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// A cell of the terrain (or an offset between two cells).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub fn new(x: i32, y: i32) -> Self {
        Point { x, y }
    }

    /// L1 norm, the step count needed with horizontal/vertical moves.
    pub fn l1_norm(&self) -> u32 {
        self.x.unsigned_abs() + self.y.unsigned_abs()
    }
}

impl From<(i32, i32)> for Point {
    fn from((x, y): (i32, i32)) -> Self {
        Point { x, y }
    }
}

impl From<Point> for (i32, i32) {
    fn from(p: Point) -> Self {
        (p.x, p.y)
    }
}

/// L1 distance between two points.
pub fn l1(p: Point, q: Point) -> u32 {
    (q.x - p.x).unsigned_abs() + (q.y - p.y).unsigned_abs()
}

/// The nine movement actions. Positive Y points downward, so `Up`
/// decreases y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GridAction {
    Left,
    Right,
    Up,
    Down,
    LeftUp,
    LeftDown,
    RightUp,
    RightDown,
    Wait,
}

impl GridAction {
    pub const ALL: [GridAction; 9] = [
        GridAction::Left,
        GridAction::Right,
        GridAction::Up,
        GridAction::Down,
        GridAction::LeftUp,
        GridAction::LeftDown,
        GridAction::RightUp,
        GridAction::RightDown,
        GridAction::Wait,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GridAction::Left => "left",
            GridAction::Right => "right",
            GridAction::Up => "up",
            GridAction::Down => "down",
            GridAction::LeftUp => "left-up",
            GridAction::LeftDown => "left-down",
            GridAction::RightUp => "right-up",
            GridAction::RightDown => "right-down",
            GridAction::Wait => "wait",
        }
    }

    pub fn id(self) -> ActionId {
        ActionId::from(self.name())
    }

    pub fn from_name(name: &str) -> Option<GridAction> {
        GridAction::ALL.iter().copied().find(|a| a.name() == name)
    }
}

/// Candidate positions an action can move `(x, y)` to, before terrain
/// clipping. Straight moves and waiting are deterministic; a diagonal can
/// land on the combined step or on either of its two components.
pub fn move_candidates(x: i32, y: i32, action: GridAction) -> Vec<Point> {
    match action {
        GridAction::Left => vec![Point::new(x - 1, y)],
        GridAction::Right => vec![Point::new(x + 1, y)],
        GridAction::Up => vec![Point::new(x, y - 1)],
        GridAction::Down => vec![Point::new(x, y + 1)],
        GridAction::LeftUp => {
            vec![Point::new(x - 1, y - 1), Point::new(x - 1, y), Point::new(x, y - 1)]
        }
        GridAction::LeftDown => {
            vec![Point::new(x - 1, y + 1), Point::new(x - 1, y), Point::new(x, y + 1)]
        }
        GridAction::RightUp => {
            vec![Point::new(x + 1, y - 1), Point::new(x + 1, y), Point::new(x, y - 1)]
        }
        GridAction::RightDown => {
            vec![Point::new(x + 1, y + 1), Point::new(x + 1, y), Point::new(x, y + 1)]
        }
        GridAction::Wait => vec![Point::new(x, y)],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("start set is empty")]
    EmptyStarts,
    #[error("target set is empty")]
    EmptyTargets,
    #[error("{role} ({point:?}) lies outside the terrain")]
    OutsideTerrain { role: &'static str, point: (i32, i32) },
    #[error("targets {p:?} and {q:?} are {distance} apart, not under the time limit {tau}")]
    TargetsTooFar { p: (i32, i32), q: (i32, i32), distance: u32, tau: u32 },
    #[error("start {start:?} is {distance} from target {target:?}, not under the time limit {tau}")]
    StartTooFar { start: (i32, i32), target: (i32, i32), distance: u32, tau: u32 },
}

/// A navigation problem: terrain spanning `[0, width] x [0, height]`
/// inclusive, start and target location sets, and a time limit. Every
/// target must be reachable from every start and from every other target
/// in strictly fewer than `tau` straight-line steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridProblem {
    pub width: u32,
    pub height: u32,
    pub starts: BTreeSet<Point>,
    pub targets: BTreeSet<Point>,
    pub tau: u32,
}

impl GridProblem {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0 && p.y >= 0 && p.x <= self.width as i32 && p.y <= self.height as i32
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.starts.is_empty() {
            return Err(GridError::EmptyStarts);
        }
        if self.targets.is_empty() {
            return Err(GridError::EmptyTargets);
        }
        for &p in &self.starts {
            if !self.contains(p) {
                return Err(GridError::OutsideTerrain { role: "start", point: p.into() });
            }
        }
        for &p in &self.targets {
            if !self.contains(p) {
                return Err(GridError::OutsideTerrain { role: "target", point: p.into() });
            }
        }
        for &p in &self.targets {
            for &q in &self.targets {
                let distance = l1(p, q);
                if distance >= self.tau {
                    return Err(GridError::TargetsTooFar {
                        p: p.into(),
                        q: q.into(),
                        distance,
                        tau: self.tau,
                    });
                }
            }
        }
        for &p in &self.starts {
            for &q in &self.targets {
                let distance = l1(p, q);
                if distance >= self.tau {
                    return Err(GridError::StartTooFar {
                        start: p.into(),
                        target: q.into(),
                        distance,
                        tau: self.tau,
                    });
                }
            }
        }
        Ok(())
    }
}

/// A navigation state: where the agent is, where the active target is,
/// and how much time remains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GridState {
    pub agent: Point,
    pub target: Point,
    pub time: u32,
}

impl GridState {
    pub fn id(&self) -> StateId {
        StateId::from(format!(
            "a{}_{}_t{}_{}_k{}",
            self.agent.x, self.agent.y, self.target.x, self.target.y, self.time
        ))
    }
}

/// The agent-centric observation of a state: offset to the target and
/// remaining time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GridFeature {
    pub offset: Point,
    pub time: u32,
}

impl GridFeature {
    pub fn id(&self) -> FeatureId {
        FeatureId::from(format!("o{}_{}_k{}", self.offset.x, self.offset.y, self.time))
    }
}

/// The single feature a state exhibits.
pub fn grid_feature(s: GridState) -> GridFeature {
    GridFeature {
        offset: Point::new(s.target.x - s.agent.x, s.target.y - s.agent.y),
        time: s.time,
    }
}

/// Whether applying any action in `s` is aversive: true exactly when the
/// clock has run out.
pub fn grid_aversive(s: GridState, _action: GridAction) -> bool {
    s.time == 0
}

/// All states an action application can produce.
///
/// Each movement candidate is clipped to the terrain (falling back to the
/// old position). Landing on the target relocates it to any target
/// location and resets the clock; otherwise the clock ticks down.
pub fn grid_transition(
    problem: &GridProblem,
    s: GridState,
    action: GridAction,
) -> BTreeSet<GridState> {
    let mut out = BTreeSet::new();
    for candidate in move_candidates(s.agent.x, s.agent.y, action) {
        let agent = if problem.contains(candidate) { candidate } else { s.agent };
        if agent == s.target {
            for &target in &problem.targets {
                out.insert(GridState { agent, target, time: problem.tau });
            }
        } else {
            out.insert(GridState { agent, target: s.target, time: s.time.saturating_sub(1) });
        }
    }
    out
}

/// Start states of the task: every start location paired with every
/// target, at the full time budget.
fn start_states(problem: &GridProblem) -> Vec<GridState> {
    let mut out = Vec::new();
    for &agent in &problem.starts {
        for &target in &problem.targets {
            out.push(GridState { agent, target, time: problem.tau });
        }
    }
    out
}

/// Compiles a grid problem into an explicit task.
///
/// States are enumerated by search from the start states, so the result
/// contains exactly the reachable fragment. The feature set covers the
/// whole observation space (all offsets the terrain admits at every clock
/// value) so that policies over grid features are well formed regardless
/// of which offsets a particular problem realizes.
pub fn build_task(problem: &GridProblem) -> Result<TaskSpec, GridError> {
    problem.validate()?;

    let mut features = BTreeSet::new();
    let w = problem.width as i32;
    let h = problem.height as i32;
    for x in -w..=w {
        for y in -h..=h {
            for t in 0..=problem.tau {
                features.insert(GridFeature { offset: Point::new(x, y), time: t }.id());
            }
        }
    }

    let mut visited: BTreeSet<GridState> = BTreeSet::new();
    let mut queue: VecDeque<GridState> = VecDeque::new();
    for s in start_states(problem) {
        if visited.insert(s) {
            queue.push_back(s);
        }
    }
    let mut transition: BTreeMap<(StateId, ActionId), BTreeSet<StateId>> = BTreeMap::new();
    let mut aversive: BTreeSet<(StateId, ActionId)> = BTreeSet::new();
    let mut feature_map: BTreeMap<StateId, BTreeSet<FeatureId>> = BTreeMap::new();

    while let Some(s) = queue.pop_front() {
        let sid = s.id();
        feature_map.insert(sid.clone(), [grid_feature(s).id()].into_iter().collect());
        for action in GridAction::ALL {
            let succs = grid_transition(problem, s, action);
            if grid_aversive(s, action) {
                aversive.insert((sid.clone(), action.id()));
            }
            let succ_ids: BTreeSet<StateId> = succs.iter().map(|s2| s2.id()).collect();
            for s2 in succs {
                if visited.insert(s2) {
                    queue.push_back(s2);
                }
            }
            transition.insert((sid.clone(), action.id()), succ_ids);
        }
    }

    Ok(TaskSpec {
        states: visited.iter().map(|s| s.id()).collect(),
        starts: start_states(problem).iter().map(|s| s.id()).collect(),
        actions: GridAction::ALL.iter().map(|a| a.id()).collect(),
        features,
        transition,
        feature_map,
        aversive,
    })
}

/// Whether a feature admits deterministic homing: the straight-line
/// distance to the target must be bridgeable in the remaining time.
pub fn within_reach(f: GridFeature) -> bool {
    f.offset.l1_norm() < f.time
}

/// The constructive strategy for every grid task: walk straight toward
/// the target whenever it is within reach, first in x and then in y, and
/// wait on it once there; propose nothing otherwise.
pub fn homing_policy(problem: &GridProblem) -> Policy {
    let mut mapping = BTreeMap::new();
    let w = problem.width as i32;
    let h = problem.height as i32;
    for x in -w..=w {
        for y in -h..=h {
            for t in 0..=problem.tau {
                let f = GridFeature { offset: Point::new(x, y), time: t };
                let actions: BTreeSet<ActionId> = if within_reach(f) {
                    let action = if x < 0 {
                        GridAction::Left
                    } else if x > 0 {
                        GridAction::Right
                    } else if y < 0 {
                        GridAction::Up
                    } else if y > 0 {
                        GridAction::Down
                    } else {
                        GridAction::Wait
                    };
                    [action.id()].into_iter().collect()
                } else {
                    BTreeSet::new()
                };
                mapping.insert(f.id(), actions);
            }
        }
    }
    Policy::new(mapping)
}

/// Parses a grid problem document: JSON keys `width`, `height`, `starts`,
/// `targets`, `tau`, points written as `[x, y]`.
pub fn parse_problem(text: &str) -> Result<GridProblem, serde_json::Error> {
    serde_json::from_str(text)
}

/// Renders a problem in the document format.
pub fn problem_to_json(problem: &GridProblem) -> String {
    let mut out =
        serde_json::to_string_pretty(problem).expect("problem serialization cannot fail");
    out.push('\n');
    out
}
