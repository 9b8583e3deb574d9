//! Many episodes over (controller, seed) pairs and the success-rate table.

use super::config::{Config, ControllerKind};
use super::episode::{run_episode, write_episode, EpisodeOptions, EpisodeResult};
use super::HarnessError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub controller: ControllerKind,
    pub tries: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchReport {
    /// Sorted by controller, then seed.
    pub episodes: Vec<EpisodeResult>,
    pub rows: Vec<BatchRow>,
}

impl BatchReport {
    pub fn row(&self, controller: ControllerKind) -> Option<&BatchRow> {
        self.rows.iter().find(|r| r.controller == controller)
    }

    pub fn episodes_of(&self, controller: ControllerKind) -> impl Iterator<Item = &EpisodeResult> {
        self.episodes.iter().filter(move |e| e.controller == controller)
    }
}

impl fmt::Display for BatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>6} {:>10} {:>8}", "controller", "tries", "successes", "rate")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<10} {:>6} {:>10} {:>7.0}%",
                r.controller.name(),
                r.tries,
                r.successes,
                100.0 * r.success_rate
            )?;
        }
        Ok(())
    }
}

/// Runs every (controller, seed) pair concurrently. Episode errors count as
/// failures. With `log_dir`, each episode's CSV and summary go to
/// `<log_dir>/<controller>_seed<seed>/`.
pub fn run_batch(cfg: &Config, controllers: &[ControllerKind], seeds: &[u64], log_dir: Option<&Path>) -> Result<BatchReport, HarnessError> {
    if seeds.is_empty() || controllers.is_empty() {
        return Err(HarnessError::Config("batch needs at least one controller and one seed".into()));
    }
    cfg.validate()?;
    let mut jobs: Vec<(ControllerKind, u64)> = controllers.iter().flat_map(|&c| seeds.iter().map(move |&s| (c, s))).collect();
    jobs.sort();
    jobs.dedup();
    let episodes: Vec<EpisodeResult> = jobs
        .par_iter()
        .map(|&(controller, seed)| {
            let mut c = cfg.clone();
            c.episode.controller = controller;
            c.episode.seed = seed;
            let run = run_episode(&c, &EpisodeOptions::default()).and_then(|(r, trace)| match log_dir {
                Some(dir) => write_episode(&dir.join(format!("{}_seed{seed}", controller.name())), &r, &trace),
                None => Ok(r),
            });
            run.unwrap_or_else(|e| EpisodeResult::failed(controller, seed, &e))
        })
        .collect();

    let mut kinds: Vec<ControllerKind> = controllers.to_vec();
    kinds.sort();
    kinds.dedup();
    let rows = kinds
        .into_iter()
        .map(|controller| {
            let mine: Vec<&EpisodeResult> = episodes.iter().filter(|e| e.controller == controller).collect();
            let successes = mine.iter().filter(|e| e.success()).count();
            BatchRow {
                controller,
                tries: mine.len(),
                successes,
                success_rate: successes as f64 / mine.len() as f64,
            }
        })
        .collect();
    Ok(BatchReport { episodes, rows })
}

#[derive(Serialize)]
struct ResultLine<'a> {
    controller: &'a str,
    seed: u64,
    outcome: &'a str,
    path_length: f64,
    elapsed: f64,
    final_distance: f64,
    steps: usize,
    max_low_mu_depth: f64,
    failure_reason: &'a str,
}

/// Writes `results.csv` (one line per episode) and `summary.csv`.
pub fn write_batch(out: &Path, report: &BatchReport) -> Result<(), HarnessError> {
    fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("results.csv"))?;
    for e in &report.episodes {
        w.serialize(ResultLine {
            controller: e.controller.name(),
            seed: e.seed,
            outcome: e.outcome.name(),
            path_length: e.path_length,
            elapsed: e.elapsed,
            final_distance: e.final_distance,
            steps: e.steps,
            max_low_mu_depth: e.max_low_mu_depth,
            failure_reason: e.failure_reason.as_deref().unwrap_or(""),
        })?;
    }
    w.flush()?;
    let mut s = csv::Writer::from_path(out.join("summary.csv"))?;
    for r in &report.rows {
        s.serialize(r)?;
    }
    s.flush()?;
    Ok(())
}
