//! The `learn` subcommand: fans repetitions out to a worker pool, writes
//! one trace CSV and one memory snapshot per run, and reduces everything
//! into a summary document.

use crate::{load_task, write_file, CliError};
use avoidlab_core::learner::{run, RunConfig, RunEnd};
use avoidlab_core::trace::{removed_to_snapshot, trace_to_csv, TraceEvent};
use avoidlab_core::{FeatureId, ActionId};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// Final memory sets beyond this size are kept out of the summary; the
/// per-run snapshot file always has the full set.
const EMBED_PAIR_LIMIT: usize = 256;

#[derive(Serialize)]
struct Summary {
    task: String,
    repetitions: u64,
    base_seed: u64,
    config: RunConfig,
    runs: Vec<RunRow>,
}

#[derive(Serialize)]
struct RunRow {
    seed: u64,
    steps: u64,
    trials: u64,
    removal_events: u64,
    removed_pairs: usize,
    allowed_pairs: usize,
    signals: u64,
    settle_step: Option<u64>,
    /// Signals witnessed after the settle step; zero whenever settled.
    post_settle_signals: Option<u64>,
    end: RunEnd,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_allowed: Option<Vec<(FeatureId, ActionId)>>,
    trace_file: String,
    removed_file: String,
}

struct RunArtifacts {
    row: RunRow,
    trace_csv: String,
    snapshot: String,
}

pub fn cmd_learn(
    source: &str,
    base_config: RunConfig,
    reps: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    if reps == 0 {
        return Err(CliError::Domain("need at least one repetition".into()));
    }
    let task = load_task(source)?;
    if let Some(v) = task.validate().into_iter().next() {
        return Err(CliError::Domain(format!("task is not valid: {v}")));
    }

    let artifacts: Vec<Result<RunArtifacts, CliError>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let config = RunConfig { seed: base_config.seed + rep, ..base_config.clone() };
            let seed = config.seed;
            let report = run(&task, config).map_err(CliError::from)?;

            let mut signals = 0u64;
            let mut post_settle_signals = 0u64;
            let mut step = 0u64;
            for event in &report.trace.events {
                if let TraceEvent::Step { signal, .. } = event {
                    step += 1;
                    if *signal {
                        signals += 1;
                        if let Some(settle) = report.settle_step {
                            if step > settle {
                                post_settle_signals += 1;
                            }
                        }
                    }
                }
            }

            let trace_file = format!("run_{rep:03}.csv");
            let removed_file = format!("run_{rep:03}.removed.tsv");
            let row = RunRow {
                seed,
                steps: report.steps,
                trials: report.trials,
                removal_events: report.removal_events,
                removed_pairs: report.removed.len(),
                allowed_pairs: report.allowed.len(),
                signals,
                settle_step: report.settle_step,
                post_settle_signals: report.settle_step.map(|_| post_settle_signals),
                end: report.end,
                final_allowed: (task.pair_count() <= EMBED_PAIR_LIMIT)
                    .then(|| report.allowed.iter().cloned().collect()),
                trace_file,
                removed_file,
            };
            Ok(RunArtifacts {
                trace_csv: trace_to_csv(&report.trace, task.pair_count()),
                snapshot: removed_to_snapshot(&report.removed),
                row,
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(reps as usize);
    for artifact in artifacts {
        let artifact = artifact?;
        write_file(&out_dir.join(&artifact.row.trace_file), &artifact.trace_csv)?;
        write_file(&out_dir.join(&artifact.row.removed_file), &artifact.snapshot)?;
        rows.push(artifact.row);
    }

    let settled = rows.iter().filter(|r| r.settle_step.is_some()).count();
    let summary = Summary {
        task: source.to_owned(),
        repetitions: reps,
        base_seed: base_config.seed,
        config: base_config,
        runs: rows,
    };
    let mut doc = serde_json::to_string_pretty(&summary)
        .expect("summary serialization cannot fail");
    doc.push('\n');
    write_file(&out_dir.join("summary.json"), &doc)?;

    println!(
        "{} run(s) on {}: {} settled; summary in {}",
        reps,
        source,
        settled,
        out_dir.join("summary.json").display()
    );
    Ok(())
}
