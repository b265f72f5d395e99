//! Multi-seed experiment execution, sweep mode, and report files.
//!
//! Per seed: `history_<seed>.ndjson`. Per experiment: `summary.json`
//! embedding the resolved config, per-seed stats and the aggregate.
//! Everything written is deterministic for a given config, so reruns are
//! byte-identical; every summary number is recomputable from the
//! history files.

use crate::bench::{
    aggregate_stats, load_tabular, report_stats, AggregateStats, Backend, QueryLedger, RunStats,
    SyntheticOracle, SyntheticOracleConfig,
};
use crate::error::{Error, Result};
use crate::experiment::{BackendConfig, ControllerKind, ResolvedConfig, SEED_OFFSET_ENV};
use crate::search::{run_nao, run_random, run_re, run_semi_re, run_seminas, SearchHistory};
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub ledger_count: usize,
    pub test_queries: usize,
    pub stats: RunStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ResolvedConfig,
    pub seed_offset: u64,
    pub per_seed: Vec<SeedReport>,
    pub failed_seeds: Vec<(u64, String)>,
    pub aggregate: Option<AggregateStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub mean_best_test: f64,
    pub sd_best_test: f64,
    pub standard_error: f64,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: String,
    pub rows: Vec<SweepRow>,
    pub seeds: Vec<u64>,
}

fn build_backend(config: &ResolvedConfig) -> Result<Backend> {
    match &config.backend {
        BackendConfig::Synthetic {
            seed,
            base,
            weight_scale,
            interaction_scale,
            n_interactions,
            noise_sd,
        } => Ok(Backend::Synthetic(SyntheticOracle::new(
            SyntheticOracleConfig {
                seed: *seed,
                base: *base,
                weight_scale: *weight_scale,
                interaction_scale: *interaction_scale,
                n_interactions: *n_interactions,
                noise_sd: *noise_sd,
            },
            config.space.clone(),
        ))),
        BackendConfig::Tabular { path } => {
            Ok(Backend::Tabular(load_tabular(path, &config.space)?))
        }
    }
}

/// Runs one seed to completion and computes its statistics.
pub fn run_single_seed(
    config: &ResolvedConfig,
    backend: &Backend,
    seed: u64,
) -> Result<(SearchHistory, SeedReport)> {
    let ledger = QueryLedger::new();
    let history = match config.controller {
        ControllerKind::Seminas => run_seminas(
            &config.space,
            backend,
            &ledger,
            &config.budget,
            &config.controller_config,
            seed,
        )?,
        ControllerKind::Nao => run_nao(
            &config.space,
            backend,
            &ledger,
            &config.budget,
            &config.controller_config,
            seed,
        )?,
        ControllerKind::Random => {
            run_random(&config.space, backend, &ledger, config.queries, seed)?
        }
        ControllerKind::Re => run_re(
            &config.space,
            backend,
            &ledger,
            config.queries,
            &config.evolution,
            seed,
        )?,
        ControllerKind::SemiRe => run_semi_re(
            &config.space,
            backend,
            &ledger,
            config.queries,
            &config.semi_re,
            &config.controller_config,
            seed,
        )?,
    };
    let stats = report_stats(&history, backend, &config.space, &ledger)?;
    let report = SeedReport {
        seed,
        ledger_count: ledger.count(),
        test_queries: ledger.test_count(),
        stats,
    };
    Ok((history, report))
}

fn seed_offset() -> Result<u64> {
    match std::env::var(SEED_OFFSET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_OFFSET_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(0),
    }
}

/// Runs every seed (in parallel up to `jobs`), writes one history file
/// per seed plus `summary.json`, and returns the summary. Failed seeds
/// are recorded rather than aborting the others.
pub fn run_experiment(config: &ResolvedConfig, jobs: usize) -> Result<Summary> {
    let offset = seed_offset()?;
    let backend = build_backend(config)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let seeds: Vec<u64> = config.seeds.iter().map(|s| s + offset).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    let mut results: Vec<(u64, Result<(SearchHistory, SeedReport)>)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| (seed, run_single_seed(config, &backend, seed)))
            .collect()
    });
    results.sort_by_key(|(seed, _)| *seed);

    let mut per_seed = Vec::new();
    let mut failed = Vec::new();
    for (seed, outcome) in results {
        match outcome {
            Ok((history, report)) => {
                let path = config.output_dir.join(format!("history_{seed:04}.ndjson"));
                std::fs::write(&path, history.to_ndjson()?)?;
                per_seed.push(report);
            }
            Err(e) => failed.push((seed, e.to_string())),
        }
    }
    let aggregate = if per_seed.is_empty() {
        None
    } else {
        Some(aggregate_stats(
            &per_seed.iter().map(|r| r.stats.clone()).collect::<Vec<_>>(),
        )?)
    };
    let summary = Summary {
        config: config.clone(),
        seed_offset: offset,
        per_seed,
        failed_seeds: failed,
        aggregate,
    };
    std::fs::write(
        config.output_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    MUnlabeled,
    UpsampleRatio,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m_unlabeled" => Ok(SweepAxis::MUnlabeled),
            "upsample_ratio" => Ok(SweepAxis::UpsampleRatio),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?} (expected m_unlabeled|upsample_ratio)"
            ))),
        }
    }
}

/// Paired sweep: one experiment per axis value, identical seeds across
/// values, each into `<output_dir>/<axis>_<value>/`; writes `sweep.json`.
pub fn run_sweep(
    config: &ResolvedConfig,
    axis: SweepAxis,
    values: &[usize],
    jobs: usize,
) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let axis_name = match axis {
        SweepAxis::MUnlabeled => "m_unlabeled",
        SweepAxis::UpsampleRatio => "upsample_ratio",
    };
    std::fs::create_dir_all(&config.output_dir)?;
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut point = config.clone();
        match axis {
            SweepAxis::MUnlabeled => point.budget.m_unlabeled = value,
            SweepAxis::UpsampleRatio => {
                if value == 0 {
                    return Err(Error::Config("upsample_ratio 0 is not valid".into()));
                }
                point.controller_config.upsample_ratio = value;
            }
        }
        point.output_dir = config.output_dir.join(format!("{axis_name}_{value}"));
        let summary = run_experiment(&point, jobs)?;
        if !summary.failed_seeds.is_empty() {
            return Err(Error::Config(format!(
                "sweep point {axis_name}={value} had failed seeds: {:?}",
                summary.failed_seeds
            )));
        }
        let tests: Vec<f64> = summary
            .per_seed
            .iter()
            .map(|r| r.stats.best_test)
            .collect();
        rows.push(SweepRow {
            value,
            mean_best_test: stats::mean(&tests),
            sd_best_test: stats::std_dev(&tests),
            standard_error: stats::standard_error(&tests),
            runs: tests.len(),
        });
    }
    let report = SweepReport {
        axis: axis_name.to_string(),
        rows,
        seeds: config.seeds.clone(),
    };
    std::fs::write(
        config.output_dir.join("sweep.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

/// Recomputes a summary's aggregate from history files on disk
/// (consistency oracle used by tests and `bench` tooling).
pub fn recompute_mean_best_valid(dir: &Path) -> Result<f64> {
    let mut bests = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("history_") && n.ends_with(".ndjson"))
                .unwrap_or(false)
        })
        .collect();
    entries.sort();
    for path in entries {
        let history = SearchHistory::from_ndjson(&std::fs::read_to_string(&path)?)?;
        let best = history
            .best()
            .ok_or_else(|| Error::Usage(format!("{} is empty", path.display())))?;
        bests.push(best.accuracy);
    }
    if bests.is_empty() {
        return Err(Error::Usage(format!(
            "no history files found in {}",
            dir.display()
        )));
    }
    Ok(stats::mean(&bests))
}
