//! Scenario runner: config files in, CSV time series and JSON summaries out.

pub mod config;
pub mod report;
pub mod run;
pub mod suites;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub use config::{parse_config, ConfigError, ScenarioConfig, FORMAT_VERSION};
pub use report::{BatchIndex, IndexEntry, RunReport};
pub use run::{csv_text, emit_csv, emit_summary, parse_summary, run_scenario, summary_json, ScenarioRun, CSV_HEADER};

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scenario `{scenario}`: {source}")]
    Geometry {
        scenario: String,
        source: pinchlab::GeomError,
    },
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_config(&bytes).map_err(|source| CliError::Config {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub strict: bool,
    pub threads: Option<usize>,
}

/// Runs one loaded scenario and writes its two output files.
pub fn execute(cfg: &ScenarioConfig, out_dir: &Path) -> Result<(RunReport, PathBuf, PathBuf), CliError> {
    let run = run_scenario(cfg).map_err(|source| CliError::Geometry {
        scenario: cfg.name.clone(),
        source,
    })?;
    let csv = out_dir.join(&cfg.csv_path);
    let summary = out_dir.join(&cfg.summary_path);
    emit_csv(&run.trajectory, run.trace.as_ref(), run.report.t_est, &csv).map_err(io_err(&csv))?;
    emit_summary(&run.report, &summary).map_err(io_err(&summary))?;
    Ok((run.report, csv, summary))
}

fn failed(name: String, config: &Path, error: String) -> IndexEntry {
    IndexEntry {
        name,
        config: config.display().to_string(),
        csv: None,
        summary: None,
        status: None,
        singularity: None,
        violations: None,
        invariant_failures: None,
        warnings: None,
        error: Some(error),
        ok: false,
    }
}

/// Runs every config on a worker pool, then writes `index.json` into the
/// output directory. Entries keep the order of `paths`.
pub fn run_batch(paths: &[PathBuf], opts: &BatchOptions) -> Result<BatchIndex, CliError> {
    let mut loaded: Vec<Result<ScenarioConfig, String>> = paths
        .iter()
        .map(|p| {
            load_config(p).map(|mut c| {
                if let Some(s) = opts.seed {
                    c.seed = s;
                }
                c
            })
        })
        .map(|r| r.map_err(|e| e.to_string()))
        .collect();
    // Two scenarios writing the same file would race; reject the later ones.
    let mut claimed = HashSet::new();
    for slot in loaded.iter_mut() {
        if let Ok(c) = slot {
            let files = [opts.out_dir.join(&c.csv_path), opts.out_dir.join(&c.summary_path)];
            if files.iter().any(|f| claimed.contains(f)) {
                *slot = Err(format!("scenario `{}` writes to a file claimed by an earlier scenario", c.name));
            } else {
                claimed.extend(files);
            }
        }
    }
    let work = || -> Vec<IndexEntry> {
        loaded
            .par_iter()
            .zip(paths.par_iter())
            .map(|(slot, path)| {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let cfg = match slot {
                    Ok(c) => c,
                    Err(e) => return failed(stem, path, e.clone()),
                };
                match execute(cfg, &opts.out_dir) {
                    Ok((r, csv, summary)) => IndexEntry {
                        name: r.name.clone(),
                        config: path.display().to_string(),
                        csv: Some(csv.display().to_string()),
                        summary: Some(summary.display().to_string()),
                        status: Some(r.status.clone()),
                        singularity: Some(r.singularity.clone()),
                        violations: Some(r.violations),
                        invariant_failures: Some(r.invariant_failures.len()),
                        warnings: Some(r.warnings.len()),
                        error: None,
                        ok: r.ok(opts.strict),
                    },
                    Err(e) => failed(cfg.name.clone(), path, e.to_string()),
                }
            })
            .collect()
    };
    let scenarios = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let index = BatchIndex {
        format_version: FORMAT_VERSION,
        strict: opts.strict,
        all_ok: scenarios.iter().all(|s| s.ok),
        scenarios,
    };
    let path = opts.out_dir.join(INDEX_FILE);
    run::write_json(&index, &path).map_err(io_err(&path))?;
    Ok(index)
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    run::write_json(value, path).map_err(io_err(path))
}
