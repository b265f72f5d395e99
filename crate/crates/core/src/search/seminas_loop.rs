//! The semi-supervised gradient-ascent search loop, and its
//! supervised-only counterpart.
//!
//! Per iteration: retrain the surrogate semi-supervised on everything
//! evaluated so far plus fresh random unlabeled architectures, take the
//! top-K of the mixed labeled/pseudo pool, push each seed's embedding
//! uphill along the predictor gradient and decode. Decodes that collide
//! with already-evaluated graphs are retried at larger step multiples,
//! then filled by seed mutations, then by fresh random draws, so every
//! iteration evaluates exactly `new_per_iteration` novel graphs.

use crate::bench::{Backend, QueryLedger};
use crate::controller::{fit_semi_supervised, ControllerConfig, ControllerModel, LabelSource};
use crate::error::Result;
use crate::search::state::SearchState;
use crate::search::{gradient_ascent_step, SearchBudget, SearchHistory, Source};
use crate::space::{
    canonicalize, decode_tokens, encode_tokens, mutate, random_architecture, validate, CellGraph,
    SearchSpaceSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ETA_MULTIPLES: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

pub fn run_seminas(
    space: &SearchSpaceSpec,
    backend: &Backend,
    ledger: &QueryLedger,
    budget: &SearchBudget,
    config: &ControllerConfig,
    seed: u64,
) -> Result<SearchHistory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SearchState::new(backend, ledger);

    for _ in 0..budget.n_initial {
        state.random_novel(space, &mut rng, 0, Source::Random)?;
    }

    for iter in 1..=budget.iterations {
        let unlabeled: Vec<CellGraph> = (0..budget.m_unlabeled)
            .map(|_| random_architecture(space, &mut rng))
            .collect();
        let mut model = ControllerModel::new(config.clone(), space.clone(), &mut rng)?;
        let outcome = fit_semi_supervised(&mut model, &state.labeled, &unlabeled, &mut rng)?;

        // top-K of the mixed ground-truth + pseudo pool
        let mut pool: Vec<(&CellGraph, f64, &str)> = state
            .labeled
            .records()
            .iter()
            .filter(|r| r.source == LabelSource::GroundTruth)
            .chain(outcome.pseudo.records())
            .map(|r| (&r.graph, r.accuracy, r.hash.as_str()))
            .collect();
        pool.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.2.cmp(b.2))
        });
        let seeds: Vec<CellGraph> = pool
            .iter()
            .take(budget.k_seeds)
            .map(|(g, _, _)| (*g).clone())
            .collect();

        let mut produced = 0usize;
        // gradient ascent, escalating step multiples on duplicates
        if !seeds.is_empty() {
            'ascent: for mult in ETA_MULTIPLES {
                for seed_graph in &seeds {
                    if produced == budget.new_per_iteration {
                        break 'ascent;
                    }
                    let tokens = encode_tokens(seed_graph, space)?;
                    let e = model.encode(&tokens)?;
                    let step = gradient_ascent_step(&model, &e, budget.step_size * mult)?;
                    let decoded = model.decode_greedy(&step.embedding)?;
                    let g = canonicalize(&decode_tokens(&decoded, space)?);
                    if !validate(&g, space).is_empty() {
                        continue;
                    }
                    if state.try_evaluate(&g, iter, Source::Ascent)?.is_some() {
                        produced += 1;
                    }
                }
            }
            // fill with mutations of the seeds, escalating edit depth
            let mut attempts = 0usize;
            let max_attempts = 200 * budget.new_per_iteration.max(1);
            let mut cursor = 0usize;
            while produced < budget.new_per_iteration && attempts < max_attempts {
                attempts += 1;
                let base = &seeds[cursor % seeds.len()];
                cursor += 1;
                let depth = 1 + attempts / (8 * seeds.len());
                let mut g = base.clone();
                for _ in 0..depth {
                    g = mutate(&g, space, &mut rng);
                }
                if state.try_evaluate(&g, iter, Source::Mutation)?.is_some() {
                    produced += 1;
                }
            }
        }
        // last resort: random novel draws keep the budget exact
        while produced < budget.new_per_iteration {
            state.random_novel(space, &mut rng, iter, Source::Random)?;
            produced += 1;
        }
    }
    Ok(state.history)
}

/// The supervised-only baseline: the same loop without unlabeled data
/// (M = 0) and without up-sampling.
pub fn run_nao(
    space: &SearchSpaceSpec,
    backend: &Backend,
    ledger: &QueryLedger,
    budget: &SearchBudget,
    config: &ControllerConfig,
    seed: u64,
) -> Result<SearchHistory> {
    let mut b = budget.clone();
    b.m_unlabeled = 0;
    let mut c = config.clone();
    c.upsample_ratio = 1;
    run_seminas(space, backend, ledger, &b, &c, seed)
}
