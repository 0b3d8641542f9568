//! Seed and sweep fan-out with one output directory per run.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::scenario::{Scenario, ScenarioError};

/// Environment variable overriding the default output root.
pub const OUT_DIR_ENV: &str = "BRPL_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "runs";
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for Sweep {
    type Err = String;

    /// Parses `key=v1,v2,...`.
    fn from_str(s: &str) -> Result<Sweep, String> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| format!("expected key=v1,v2,... but got `{s}`"))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if key.trim().is_empty() || values.iter().any(|v| v.is_empty()) {
            return Err(format!("malformed sweep `{s}`"));
        }
        Ok(Sweep {
            key: key.trim().to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Job {
    pub dir: PathBuf,
    pub scenario: Scenario,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub result: Result<brpl_sim::Summary, String>,
}

/// Output root: the explicit directory, else `BRPL_OUT_DIR`, else `runs`.
pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Expands seeds and sweep points into independent jobs under `root/name`.
pub fn plan(
    scenario: &Scenario,
    name: &str,
    root: &Path,
    seeds: &[u64],
    sweep: Option<&Sweep>,
) -> Result<Vec<Job>, ScenarioError> {
    let base = root.join(name);
    let points: Vec<(PathBuf, Scenario)> = match sweep {
        None => vec![(base, scenario.clone())],
        Some(sw) => sw
            .values
            .iter()
            .map(|v| Ok((base.join(format!("{}={}", sw.key, v)), scenario.with_override(&sw.key, v)?)))
            .collect::<Result<_, ScenarioError>>()?,
    };
    let mut jobs = Vec::new();
    for (dir, s) in points {
        for &seed in seeds {
            let mut s = s.clone();
            s.run.seed = seed;
            jobs.push(Job {
                dir: dir.join(format!("seed-{seed}")),
                scenario: s,
            });
        }
    }
    Ok(jobs)
}

pub fn manifest_text(scenario: &Scenario) -> String {
    format!(
        "# brpl-cli {} resolved scenario\n{}",
        env!("CARGO_PKG_VERSION"),
        scenario.to_toml()
    )
}

/// Runs one job and writes its CSVs and manifest.
pub fn execute(job: &Job) -> Result<brpl_sim::Summary, String> {
    std::fs::create_dir_all(&job.dir).map_err(|e| format!("{}: {e}", job.dir.display()))?;
    std::fs::write(job.dir.join(MANIFEST_FILE), manifest_text(&job.scenario))
        .map_err(|e| format!("{}: {e}", job.dir.display()))?;
    let cfg = job.scenario.to_sim_config().map_err(|e| e.to_string())?;
    let sink = brpl_sim::run(cfg).map_err(|e| e.to_string())?;
    sink.write_csv(&job.dir).map_err(|e| e.to_string())?;
    Ok(sink.summarize())
}

/// Runs all jobs concurrently; a failing job does not affect the others.
pub fn run_all(jobs: &[Job]) -> Vec<RunOutcome> {
    jobs.par_iter()
        .map(|job| RunOutcome {
            dir: job.dir.clone(),
            result: execute(job),
        })
        .collect()
}
