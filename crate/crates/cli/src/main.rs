//! Command-line front end for the avoidance-learning toolkit.
//!
//! Exit codes: 0 success, 1 domain failure, 2 parse failure, 3 I/O
//! failure.

mod experiment;

use avoidlab_core::gen::{self, RandomTaskParams};
use avoidlab_core::grid;
use avoidlab_core::learner::{ChooserKind, RunConfig, SignalOracleKind};
use avoidlab_core::oracle;
use avoidlab_core::qsim::{self, ActionPattern, QSimParams};
use avoidlab_core::{builtin, io, ActionId, StateId, TaskSpec};
use clap::{Parser, Subcommand};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Failure classes, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// The inputs parse but the request cannot be satisfied (exit 1).
    Domain(String),
    /// A document failed to parse (exit 2).
    Parse(String),
    /// The filesystem failed us (exit 3).
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(msg) => write!(f, "{msg}"),
            CliError::Parse(msg) => write!(f, "parse error: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl From<avoidlab_core::TaskError> for CliError {
    fn from(e: avoidlab_core::TaskError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<grid::GridError> for CliError {
    fn from(e: grid::GridError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<qsim::QSimError> for CliError {
    fn from(e: qsim::QSimError) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn json_parse_error(path: &Path, e: &serde_json::Error) -> CliError {
    CliError::Parse(format!("{} at line {}, column {}", path.display(), e.line(), e.column()))
}

/// Resolves a task source: a built-in name, `grid:<problem file>`, or a
/// task file path.
pub fn load_task(source: &str) -> Result<TaskSpec, CliError> {
    if let Some(task) = builtin::by_name(source) {
        return Ok(task);
    }
    if let Some(problem_path) = source.strip_prefix("grid:") {
        let path = Path::new(problem_path);
        let text = read_file(path)?;
        let problem = grid::parse_problem(&text).map_err(|e| json_parse_error(path, &e))?;
        return Ok(grid::build_task(&problem)?);
    }
    let path = Path::new(source);
    let text = read_file(path)?;
    io::parse_task(&text).map_err(|e| json_parse_error(path, &e))
}

fn seed_or_fallback(explicit: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = explicit {
        return Ok(seed);
    }
    match std::env::var("AVOIDLAB_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::Domain(format!("AVOIDLAB_SEED is not an integer: `{text}`"))),
        Err(_) => Ok(0),
    }
}

fn parse_signal_oracle(text: &str) -> Result<SignalOracleKind, CliError> {
    if text == "always" {
        return Ok(SignalOracleKind::Always);
    }
    if let Some(n) = text.strip_prefix("nswap:") {
        let n: u64 = n
            .parse()
            .map_err(|_| CliError::Domain(format!("bad n-swap phase length `{n}`")))?;
        return Ok(SignalOracleKind::NSwap(n));
    }
    if let Some(p) = text.strip_prefix("bernoulli:") {
        let p: f64 = p
            .parse()
            .map_err(|_| CliError::Domain(format!("bad bernoulli probability `{p}`")))?;
        return Ok(SignalOracleKind::Bernoulli(p));
    }
    Err(CliError::Domain(format!(
        "unknown signal oracle `{text}`; use always, nswap:N, or bernoulli:P"
    )))
}

#[derive(Parser)]
#[command(
    name = "avoidlab",
    about = "Avoidance learning on finite tasks with feature-limited observations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a task file against the structural invariants
    Validate {
        /// Task file (or built-in name / grid:<problem file>)
        task: String,
    },
    /// Print the maximal policy, pruned pairs, and per-start verdicts
    Oracle {
        /// Task source: file path, built-in name, or grid:<problem file>
        task: String,
        /// Report only this start state
        #[arg(long)]
        start: Option<String>,
    },
    /// Run seeded learning sessions; write per-run traces and a summary
    Learn {
        /// Task source: file path, built-in name, or grid:<problem file>
        task: String,
        /// Base seed; run i uses seed + i (falls back to AVOIDLAB_SEED)
        #[arg(long)]
        seed: Option<u64>,
        /// Number of independent runs
        #[arg(long, default_value_t = 1)]
        reps: u64,
        /// Step budget per run
        #[arg(long, default_value_t = 1000)]
        max_steps: u64,
        /// Signal emission: always, nswap:N, or bernoulli:P
        #[arg(long, default_value = "always")]
        signal_oracle: String,
        /// Steps an internal restart request may be deferred
        #[arg(long, default_value_t = 0)]
        restart_delay: u64,
        /// Inject an external restart every N steps (0 disables)
        #[arg(long, default_value_t = 50)]
        restart_every: u64,
        /// Scripted presets for the fig5-reconstruction task:
        /// `preserve` or `delayed`
        #[arg(long)]
        preset: Option<String>,
        /// Resume from a removed-pair snapshot
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Output directory
        #[arg(long, short, default_value = "avoidlab-out")]
        out: PathBuf,
    },
    /// Compile a grid problem file into a task file
    Grid {
        /// Grid problem file
        problem: PathBuf,
        /// Task file to write
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Simulate the constant-step-size value-estimation baseline
    Qsim {
        /// Outcome phase length of the risky action
        #[arg(long, default_value_t = 800)]
        n: u64,
        /// Step size
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        /// Discount factor
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Global steps to simulate
        #[arg(long, default_value_t = 40_000)]
        steps: u64,
        /// Action pattern: alternating or random
        #[arg(long, default_value = "alternating")]
        pattern: String,
        /// Seed for the random pattern (falls back to AVOIDLAB_SEED)
        #[arg(long)]
        seed: Option<u64>,
        /// Write the CSV here instead of standard output
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded random task
    Gen {
        /// Seed (falls back to AVOIDLAB_SEED)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 6)]
        states: usize,
        #[arg(long, default_value_t = 3)]
        actions: usize,
        #[arg(long, default_value_t = 4)]
        features: usize,
        #[arg(long, default_value_t = 2)]
        max_successors: usize,
        #[arg(long, default_value_t = 0.2)]
        aversive_density: f64,
        /// Write the task here instead of standard output
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write a task source in the canonical task file format
    Export {
        /// Task source: file path, built-in name, or grid:<problem file>
        task: String,
        /// Write the task here instead of standard output
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { task } => cmd_validate(&task),
        Command::Oracle { task, start } => cmd_oracle(&task, start.as_deref()),
        Command::Learn {
            task,
            seed,
            reps,
            max_steps,
            signal_oracle,
            restart_delay,
            restart_every,
            preset,
            resume,
            out,
        } => {
            let base_seed = seed_or_fallback(seed)?;
            let mut config = RunConfig {
                seed: base_seed,
                max_steps,
                signal_oracle: parse_signal_oracle(&signal_oracle)?,
                restart_delay,
                external_restart_every: if restart_every == 0 { None } else { Some(restart_every) },
                ..RunConfig::default()
            };
            if let Some(preset) = &preset {
                apply_preset(&mut config, preset)?;
            }
            if let Some(path) = &resume {
                let text = read_file(path)?;
                config.initial_removed = avoidlab_core::trace::removed_from_snapshot(&text)
                    .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            }
            experiment::cmd_learn(&task, config, reps, &out)
        }
        Command::Grid { problem, out } => cmd_grid(&problem, &out),
        Command::Qsim { n, alpha, gamma, steps, pattern, seed, out } => {
            let pattern = match pattern.as_str() {
                "alternating" => ActionPattern::Alternating,
                "random" => ActionPattern::SeededRandom { seed: seed_or_fallback(seed)? },
                other => {
                    return Err(CliError::Domain(format!(
                        "unknown pattern `{other}`; use alternating or random"
                    )))
                }
            };
            let params = QSimParams { n, alpha, gamma, steps, pattern };
            let rows = qsim::simulate(&params)?;
            let csv = qsim::rows_to_csv(&rows);
            match out {
                Some(path) => {
                    write_file(&path, &csv)?;
                    println!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Gen { seed, states, actions, features, max_successors, aversive_density, out } => {
            if states == 0 || states > gen::MAX_STATES {
                return Err(CliError::Domain(format!(
                    "state count must lie in 1..={}",
                    gen::MAX_STATES
                )));
            }
            if actions == 0 || actions > gen::MAX_ACTIONS {
                return Err(CliError::Domain(format!(
                    "action count must lie in 1..={}",
                    gen::MAX_ACTIONS
                )));
            }
            if features == 0 || features > gen::MAX_FEATURES {
                return Err(CliError::Domain(format!(
                    "feature count must lie in 1..={}",
                    gen::MAX_FEATURES
                )));
            }
            if max_successors > gen::MAX_SUCCESSORS {
                return Err(CliError::Domain(format!(
                    "successor bound must lie in 0..={}",
                    gen::MAX_SUCCESSORS
                )));
            }
            if !(0.0..=1.0).contains(&aversive_density) {
                return Err(CliError::Domain("aversive density must lie in [0, 1]".into()));
            }
            let params = RandomTaskParams {
                seed: seed_or_fallback(seed)?,
                state_count: states,
                action_count: actions,
                feature_count: features,
                max_successors,
                aversive_density,
            };
            let task = gen::random_task(&params);
            let doc = io::to_canonical_json(&task);
            match out {
                Some(path) => write_file(&path, &doc)?,
                None => print!("{doc}"),
            }
            Ok(())
        }
        Command::Export { task, out } => {
            let task = load_task(&task)?;
            let doc = io::to_canonical_json(&task);
            match out {
                Some(path) => write_file(&path, &doc)?,
                None => print!("{doc}"),
            }
            Ok(())
        }
    }
}

fn cmd_validate(source: &str) -> Result<(), CliError> {
    let task = load_task(source)?;
    let violations = task.validate();
    if violations.is_empty() {
        println!(
            "ok: {} states, {} actions, {} features, {} aversive pairs",
            task.states.len(),
            task.actions.len(),
            task.features.len(),
            task.aversive.len()
        );
        Ok(())
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Err(CliError::Domain(format!("{} violation(s) found", violations.len())))
    }
}

fn cmd_oracle(source: &str, start: Option<&str>) -> Result<(), CliError> {
    let task = load_task(source)?;
    if let Some(v) = task.validate().into_iter().next() {
        return Err(CliError::Domain(format!("task is not valid: {v}")));
    }
    let maximal = oracle::maximal_policy(&task);

    println!("maximal policy:");
    for (feature, actions) in &maximal.policy.mapping {
        let list: Vec<&str> = actions.iter().map(ActionId::as_str).collect();
        println!("  {feature} -> {{{}}}", list.join(", "));
    }
    println!("pruned pairs:");
    if maximal.pruned.is_empty() {
        println!("  none");
    }
    for (feature, action, reason) in &maximal.pruned {
        println!("  ({feature}, {action}): {reason}");
    }

    let starts: Vec<StateId> = match start {
        Some(name) => {
            let id = StateId::from(name);
            if !task.starts.contains(&id) {
                return Err(CliError::Domain(format!("`{name}` is not a start state")));
            }
            vec![id]
        }
        None => task.starts.iter().cloned().collect(),
    };
    println!("starts:");
    for s0 in &starts {
        let has = !maximal.policy.prop(task.features_of(s0))?.is_empty();
        if has {
            println!("  {s0}: strategy exists");
        } else {
            println!("  {s0}: NO strategy");
        }
    }
    Ok(())
}

fn cmd_grid(problem_path: &Path, out: &Path) -> Result<(), CliError> {
    let text = read_file(problem_path)?;
    let problem =
        grid::parse_problem(&text).map_err(|e| json_parse_error(problem_path, &e))?;
    let task = grid::build_task(&problem)?;
    write_file(out, &io::to_canonical_json(&task))?;
    println!(
        "compiled {}: {} states, {} features, {} start states -> {}",
        problem_path.display(),
        task.states.len(),
        task.features.len(),
        task.starts.len(),
        out.display()
    );
    Ok(())
}

/// The scripted schedules demonstrating run-dependent preservation on the
/// fig5-reconstruction task.
fn apply_preset(config: &mut RunConfig, preset: &str) -> Result<(), CliError> {
    match preset {
        // try the trap action once, restart immediately, then loop safely:
        // the looping pair survives
        "preserve" => {
            config.action_chooser = ChooserKind::Scripted(vec![ActionId::from("b")]);
            config.restart_delay = 0;
            config.external_restart_every = None;
            Ok(())
        }
        // same start, but the restart is deferred two steps, so the run
        // acts inside the trap and loses the looping pair as well
        "delayed" => {
            config.action_chooser =
                ChooserKind::Scripted(vec![ActionId::from("b"), ActionId::from("a")]);
            config.restart_delay = 2;
            config.external_restart_every = None;
            Ok(())
        }
        other => Err(CliError::Domain(format!(
            "unknown preset `{other}`; use preserve or delayed"
        ))),
    }
}
