//! Run bundles: one CSV and one JSON file per run, then a manifest.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use oilbench::harness::BoundRefusal;
use oilbench::{BoundReport, ExperimentConfig, RunRecord, ScheduleKind};
use serde::Serialize;

pub const CSV_HEADER: [&str; 10] = [
    "round",
    "env_steps",
    "loss",
    "avg_cumulative_loss",
    "cumulative_regret",
    "cumulative_reward",
    "eta_t",
    "sigma_t",
    "inner_iters",
    "solver_converged",
];

/// Shortest decimal that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv(path: &Path, rec: &RunRecord) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(CSV_HEADER)?;
    for r in &rec.rows {
        w.write_record([
            r.round.to_string(),
            r.env_steps.to_string(),
            num(r.loss),
            num(r.avg_cumulative_loss),
            r.cumulative_regret.map(num).unwrap_or_default(),
            num(r.cumulative_reward),
            num(r.eta_t),
            num(r.sigma_t),
            r.inner_iters.to_string(),
            r.solver_converged.to_string(),
        ])?;
    }
    let file = w.into_inner().map_err(|e| anyhow::anyhow!("flushing {}: {e}", path.display()))?;
    file.sync_all()?;
    Ok(())
}

#[derive(Serialize)]
struct Timings<'a> {
    total_secs: f64,
    per_round_secs: &'a [f64],
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: &'a ExperimentConfig,
    config_hash: &'a str,
    seed: u64,
    algo: &'a str,
    schedule: Option<ScheduleKind>,
    complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    rounds: usize,
    final_avg_cumulative_loss: f64,
    final_regret: Option<f64>,
    hindsight_value: Option<f64>,
    sum_interpolation_errors: Option<f64>,
    c_max: Option<f64>,
    bound_reports: &'a [BoundReport],
    bound_refusals: &'a [BoundRefusal],
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Timings<'a>>,
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.sync_all()?;
    Ok(())
}

pub fn write_metadata(path: &Path, cfg: &ExperimentConfig, rec: &RunRecord, timings: bool) -> anyhow::Result<()> {
    let eps = &rec.ledger.interpolation_errors;
    let meta = Metadata {
        config: cfg,
        config_hash: &rec.config_hash,
        seed: rec.seed,
        algo: rec.algo.name(),
        schedule: rec.schedule,
        complete: rec.complete,
        error: rec.error.as_deref(),
        rounds: rec.rows.len(),
        final_avg_cumulative_loss: rec.final_avg_cumulative_loss(),
        final_regret: rec.final_regret(),
        hindsight_value: rec.ledger.hindsight_value,
        sum_interpolation_errors: (!eps.is_empty()).then(|| rec.ledger.sum_interpolation_errors()),
        c_max: rec.c_max,
        bound_reports: &rec.bound_reports,
        bound_refusals: &rec.bound_refusals,
        timings: timings
            .then(|| Timings { total_secs: rec.wall_clock_secs.iter().sum(), per_round_secs: &rec.wall_clock_secs }),
    };
    write_json(path, &meta)
}

#[derive(Serialize)]
pub struct ManifestEntry {
    pub seed: u64,
    pub csv: String,
    pub json: String,
    pub rows: usize,
    pub complete: bool,
}

#[derive(Serialize)]
pub struct Manifest {
    pub name: String,
    pub algo: String,
    pub config_hash: String,
    pub runs: Vec<ManifestEntry>,
}

/// Writes every run's files, then the manifest.
pub fn write_bundle(
    dir: &Path,
    cfg: &ExperimentConfig,
    records: &[RunRecord],
    timings: bool,
) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut runs = Vec::with_capacity(records.len());
    for rec in records {
        let stem = format!("{}_{}_seed{}", cfg.name, rec.algo.name(), rec.seed);
        let csv = format!("{stem}.csv");
        let json = format!("{stem}.json");
        write_csv(&dir.join(&csv), rec)?;
        write_metadata(&dir.join(&json), cfg, rec, timings)?;
        runs.push(ManifestEntry { seed: rec.seed, csv, json, rows: rec.rows.len(), complete: rec.complete });
    }
    let manifest = Manifest { name: cfg.name.clone(), algo: cfg.algo.name().into(), config_hash: cfg.hash(), runs };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}
