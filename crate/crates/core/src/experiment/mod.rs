//! Experiment configuration: flat key-value config files, named presets,
//! and resolution into fully-defaulted run parameters.

mod run;

pub use run::{run_experiment, run_sweep, SeedReport, Summary, SweepReport, SweepRow};

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::search::{EvolutionParams, SearchBudget, SemiReParams};
use crate::space::SearchSpaceSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable adding a constant offset to every seed (CI
/// sharding).
pub const SEED_OFFSET_ENV: &str = "SEMINAS_SEED_OFFSET";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Seminas,
    Nao,
    Random,
    Re,
    SemiRe,
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seminas" => Ok(ControllerKind::Seminas),
            "nao" => Ok(ControllerKind::Nao),
            "random" => Ok(ControllerKind::Random),
            "re" => Ok(ControllerKind::Re),
            "semi_re" => Ok(ControllerKind::SemiRe),
            other => Err(Error::Config(format!(
                "unknown controller {other:?} (expected seminas|nao|random|re|semi_re)"
            ))),
        }
    }
}

/// Raw experiment file: flat keys, all optional except `backend`.
/// Unknown keys are rejected. A `preset` key pulls in a named base
/// configuration; explicit keys override it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub controller: Option<String>,
    pub backend: Option<String>,
    pub backend_seed: Option<u64>,
    pub backend_path: Option<String>,
    pub noise_sd: Option<f64>,
    pub oracle_base: Option<f64>,
    pub weight_scale: Option<f64>,
    pub interaction_scale: Option<f64>,
    pub n_interactions: Option<usize>,
    pub space_max_nodes: Option<usize>,
    pub space_max_edges: Option<usize>,
    pub n_initial: Option<usize>,
    pub m_unlabeled: Option<usize>,
    pub k_seeds: Option<usize>,
    pub iterations: Option<usize>,
    pub step_size: Option<f64>,
    pub new_per_iteration: Option<usize>,
    pub steps_per_eval: Option<usize>,
    pub queries: Option<usize>,
    pub population_size: Option<usize>,
    pub sample_size: Option<usize>,
    pub candidates_per_cycle: Option<usize>,
    pub retrain_every: Option<usize>,
    pub retrain_m_unlabeled: Option<usize>,
    pub hidden_size: Option<usize>,
    pub predictor_widths: Option<Vec<usize>>,
    pub loss_weight_lambda: Option<f64>,
    pub learning_rate: Option<f64>,
    pub epochs_supervised: Option<usize>,
    pub epochs_semi: Option<usize>,
    pub dropout_rate: Option<f64>,
    pub upsample_ratio: Option<usize>,
    pub batch_size: Option<usize>,
    pub max_steps_supervised: Option<usize>,
    pub max_steps_semi: Option<usize>,
    pub warm_start_semi: Option<bool>,
    pub seeds: Option<String>,
    pub output_dir: Option<String>,
}

macro_rules! merge_fields {
    ($base:ident, $over:ident; $($field:ident),+ $(,)?) => {
        $(if $over.$field.is_some() { $base.$field = $over.$field.clone(); })+
    };
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Overlays explicit keys of `self` on top of `base`.
    pub fn over(self, mut base: ExperimentConfig) -> ExperimentConfig {
        let over = self;
        merge_fields!(base, over;
            controller, backend, backend_seed, backend_path, noise_sd, oracle_base,
            weight_scale, interaction_scale, n_interactions, space_max_nodes,
            space_max_edges, n_initial, m_unlabeled, k_seeds, iterations, step_size,
            new_per_iteration, steps_per_eval, queries, population_size, sample_size,
            candidates_per_cycle, retrain_every, retrain_m_unlabeled, hidden_size,
            predictor_widths, loss_weight_lambda, learning_rate, epochs_supervised,
            epochs_semi, dropout_rate, upsample_ratio, batch_size,
            max_steps_supervised, max_steps_semi, warm_start_semi, seeds, output_dir,
        );
        base.preset = None;
        base
    }
}

/// Backend selection with everything needed to construct it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BackendConfig {
    Synthetic {
        seed: u64,
        base: f64,
        weight_scale: f64,
        interaction_scale: f64,
        n_interactions: usize,
        noise_sd: f64,
    },
    Tabular {
        path: PathBuf,
    },
}

/// Fully-defaulted experiment parameters, embedded verbatim in every
/// report so each number is recomputable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub controller: ControllerKind,
    pub backend: BackendConfig,
    pub space: SearchSpaceSpec,
    pub budget: SearchBudget,
    pub queries: usize,
    pub evolution: EvolutionParams,
    pub semi_re: SemiReParams,
    pub controller_config: ControllerConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let t = text.trim();
    if let Some((a, b)) = t.split_once("..") {
        let lo: u64 = a.trim().parse().map_err(|_| bad_seeds(t))?;
        let hi: u64 = b.trim().parse().map_err(|_| bad_seeds(t))?;
        if hi <= lo {
            return Err(bad_seeds(t));
        }
        return Ok((lo..hi).collect());
    }
    t.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad_seeds(t)))
        .collect()
}

fn bad_seeds(t: &str) -> Error {
    Error::Config(format!(
        "seeds {t:?} must be a range `lo..hi` or a comma list"
    ))
}

/// Named experiment presets. Budget shapes follow the tabular-benchmark
/// evaluation protocol; training-step caps keep them desk-runnable.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig {
        backend: Some("synthetic".into()),
        seeds: Some("0..20".into()),
        ..ExperimentConfig::default()
    };
    match name {
        "seminas-300" => {
            cfg.controller = Some("seminas".into());
            cfg.n_initial = Some(100);
            cfg.m_unlabeled = Some(10_000);
            cfg.k_seeds = Some(100);
            cfg.iterations = Some(2);
            cfg.new_per_iteration = Some(100);
            cfg.upsample_ratio = Some(100);
            cfg.max_steps_supervised = Some(1000);
            cfg.max_steps_semi = Some(1500);
        }
        "seminas-2000" => {
            cfg.controller = Some("seminas".into());
            cfg.n_initial = Some(1100);
            cfg.m_unlabeled = Some(10_000);
            cfg.k_seeds = Some(100);
            cfg.iterations = Some(3);
            cfg.new_per_iteration = Some(300);
            cfg.upsample_ratio = Some(10);
            cfg.max_steps_supervised = Some(1000);
            cfg.max_steps_semi = Some(1500);
        }
        "nao-300" => {
            cfg = preset("seminas-300")?;
            cfg.controller = Some("nao".into());
        }
        "nao-2000" => {
            cfg = preset("seminas-2000")?;
            cfg.controller = Some("nao".into());
        }
        "random-2000" => {
            cfg.controller = Some("random".into());
            cfg.queries = Some(2000);
        }
        "re-2000" => {
            cfg.controller = Some("re".into());
            cfg.queries = Some(2000);
        }
        "semi-re-1000" => {
            cfg.controller = Some("semi_re".into());
            cfg.queries = Some(1000);
            cfg.max_steps_supervised = Some(300);
            cfg.max_steps_semi = Some(200);
        }
        "semi-re-2000" => {
            cfg = preset("semi-re-1000")?;
            cfg.queries = Some(2000);
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?} (expected seminas-300, seminas-2000, nao-300, \
                 nao-2000, random-2000, re-2000, semi-re-1000, semi-re-2000)"
            )))
        }
    }
    Ok(cfg)
}

/// Fills every default, expands the preset, validates.
pub fn resolve(raw: ExperimentConfig) -> Result<ResolvedConfig> {
    let cfg = match &raw.preset {
        Some(name) => raw.clone().over(preset(name)?),
        None => raw,
    };
    let backend_name = cfg
        .backend
        .as_deref()
        .ok_or_else(|| Error::Config("backend is required (synthetic|tabular)".into()))?;
    let backend = match backend_name {
        "synthetic" => BackendConfig::Synthetic {
            seed: cfg.backend_seed.unwrap_or(0),
            base: cfg.oracle_base.unwrap_or(0.88),
            weight_scale: cfg.weight_scale.unwrap_or(0.02),
            interaction_scale: cfg.interaction_scale.unwrap_or(0.03),
            n_interactions: cfg.n_interactions.unwrap_or(6),
            noise_sd: cfg.noise_sd.unwrap_or(0.01),
        },
        "tabular" => BackendConfig::Tabular {
            path: PathBuf::from(cfg.backend_path.as_deref().ok_or_else(|| {
                Error::Config("tabular backend requires backend_path".into())
            })?),
        },
        other => {
            return Err(Error::Config(format!(
                "unknown backend {other:?} (expected synthetic|tabular)"
            )))
        }
    };
    let mut space = SearchSpaceSpec::default();
    if let Some(n) = cfg.space_max_nodes {
        space.max_nodes = n;
    }
    if let Some(e) = cfg.space_max_edges {
        space.max_edges = e;
    }
    let default_budget = SearchBudget::default();
    let budget = SearchBudget {
        n_initial: cfg.n_initial.unwrap_or(default_budget.n_initial),
        m_unlabeled: cfg.m_unlabeled.unwrap_or(default_budget.m_unlabeled),
        k_seeds: cfg.k_seeds.unwrap_or(default_budget.k_seeds),
        iterations: cfg.iterations.unwrap_or(default_budget.iterations),
        step_size: cfg.step_size.unwrap_or(default_budget.step_size),
        new_per_iteration: cfg
            .new_per_iteration
            .unwrap_or(default_budget.new_per_iteration),
        steps_per_eval: cfg.steps_per_eval.unwrap_or(default_budget.steps_per_eval),
    };
    let evolution = EvolutionParams {
        population_size: cfg.population_size.unwrap_or(100),
        sample_size: cfg.sample_size.unwrap_or(10),
    };
    let semi_re = SemiReParams {
        evolution: evolution.clone(),
        candidates_per_cycle: cfg.candidates_per_cycle.unwrap_or(16),
        retrain_every: cfg.retrain_every.unwrap_or(100),
        m_unlabeled: cfg.retrain_m_unlabeled.unwrap_or(500),
    };
    let dc = ControllerConfig::default();
    let controller_config = ControllerConfig {
        hidden_size: cfg.hidden_size.unwrap_or(dc.hidden_size),
        predictor_widths: cfg
            .predictor_widths
            .clone()
            .unwrap_or_else(|| dc.predictor_widths.clone()),
        loss_weight_lambda: cfg.loss_weight_lambda.unwrap_or(dc.loss_weight_lambda),
        learning_rate: cfg.learning_rate.unwrap_or(dc.learning_rate),
        epochs_supervised: cfg.epochs_supervised.unwrap_or(dc.epochs_supervised),
        epochs_semi: cfg.epochs_semi.unwrap_or(dc.epochs_semi),
        dropout_rate: cfg.dropout_rate.unwrap_or(dc.dropout_rate),
        upsample_ratio: cfg.upsample_ratio.unwrap_or(dc.upsample_ratio),
        batch_size: cfg.batch_size.unwrap_or(dc.batch_size),
        max_steps_supervised: cfg.max_steps_supervised,
        max_steps_semi: cfg.max_steps_semi,
        warm_start_semi: cfg.warm_start_semi.unwrap_or(dc.warm_start_semi),
    };
    controller_config.validate().map_err(|e| Error::Config(e.to_string()))?;
    let controller: ControllerKind = cfg
        .controller
        .as_deref()
        .unwrap_or("seminas")
        .parse()?;
    let seeds = parse_seeds(cfg.seeds.as_deref().unwrap_or("0..20"))?;
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    Ok(ResolvedConfig {
        controller,
        backend,
        space,
        budget,
        queries: cfg.queries.unwrap_or(2000),
        evolution,
        semi_re,
        controller_config,
        seeds,
        output_dir: PathBuf::from(cfg.output_dir.as_deref().unwrap_or("runs")),
    })
}
