//! Regularized (aging) evolution and its predictor-filtered variant.
//!
//! Both engines share the tournament/mutation machinery so that the
//! filtered variant with one candidate per cycle consumes the search rng
//! identically to plain evolution — the two runs coincide bit for bit.
//! The filtered variant draws all controller training randomness from a
//! second, independent stream.

use crate::bench::{Backend, QueryLedger};
use crate::controller::{fit_semi_supervised, ControllerConfig, ControllerModel};
use crate::error::{Error, Result};
use crate::search::state::SearchState;
use crate::search::{SearchHistory, Source};
use crate::space::{
    canonical_hash, encode_tokens, mutate, random_architecture, CellGraph, SearchSpaceSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub population_size: usize,
    pub sample_size: usize,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            population_size: 100,
            sample_size: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiReParams {
    pub evolution: EvolutionParams,
    /// Candidate mutations scored per cycle; only the argmax is
    /// ground-truth evaluated.
    pub candidates_per_cycle: usize,
    /// Predictor retraining period in ground-truth evaluations.
    pub retrain_every: usize,
    /// Unlabeled architectures per retraining.
    pub m_unlabeled: usize,
}

impl Default for SemiReParams {
    fn default() -> Self {
        SemiReParams {
            evolution: EvolutionParams::default(),
            candidates_per_cycle: 16,
            retrain_every: 100,
            m_unlabeled: 500,
        }
    }
}

fn tournament_index(
    population: &VecDeque<(CellGraph, f64)>,
    sample_size: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for _ in 0..sample_size.max(1) {
        let idx = rng.gen_range(0..population.len());
        let fitness = population[idx].1;
        if best.map(|(_, b)| fitness > b).unwrap_or(true) {
            best = Some((idx, fitness));
        }
    }
    best.expect("population is non-empty").0
}

/// Up to `count` distinct novel mutations of `parent`, chaining deeper
/// edits as attempts accumulate.
fn propose_candidates(
    parent: &CellGraph,
    count: usize,
    seen: &BTreeSet<String>,
    space: &SearchSpaceSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<CellGraph> {
    let mut out: Vec<CellGraph> = Vec::with_capacity(count);
    let mut hashes: BTreeSet<String> = BTreeSet::new();
    let mut attempts = 0usize;
    let cap = 64 * count.max(1);
    while out.len() < count && attempts < cap {
        attempts += 1;
        let depth = 1 + attempts / 32;
        let mut g = parent.clone();
        for _ in 0..depth {
            g = mutate(&g, space, rng);
        }
        let h = canonical_hash(&g);
        if !seen.contains(&h) && !hashes.contains(&h) {
            hashes.insert(h);
            out.push(g);
        }
    }
    out
}

struct Evolver<'a, 'b> {
    state: &'b mut SearchState<'a>,
    space: &'b SearchSpaceSpec,
    params: EvolutionParams,
    population: VecDeque<(CellGraph, f64)>,
}

impl<'a, 'b> Evolver<'a, 'b> {
    fn seed_population(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        for _ in 0..self.params.population_size {
            let acc = self
                .state
                .random_novel(self.space, rng, 0, Source::Random)?;
            let g = self
                .state
                .history
                .records
                .last()
                .expect("just evaluated")
                .graph
                .clone();
            self.population.push_back((g, acc));
        }
        Ok(())
    }

    /// One aging-evolution cycle: tournament parent, novel child (chosen
    /// by `pick`), evaluate, enqueue, kill oldest. `source` tags history.
    fn cycle(
        &mut self,
        iter: usize,
        candidates_per_cycle: usize,
        pick: impl Fn(&[CellGraph]) -> usize,
        source: Source,
        rng: &mut ChaCha8Rng,
    ) -> Result<()> {
        let parent_idx = tournament_index(&self.population, self.params.sample_size, rng);
        let parent = self.population[parent_idx].0.clone();
        let candidates =
            propose_candidates(&parent, candidates_per_cycle, &self.state.seen, self.space, rng);
        let (child, child_source) = if candidates.is_empty() {
            (None, Source::Random)
        } else {
            (Some(candidates[pick(&candidates)].clone()), source)
        };
        let (graph, acc) = match child {
            Some(c) => match self.state.try_evaluate(&c, iter, child_source)? {
                Some(acc) => (c, acc),
                None => {
                    // tabular miss: fall back to a fresh random immigrant
                    let acc = self.state.random_novel(self.space, rng, iter, Source::Random)?;
                    let g = self.state.history.records.last().unwrap().graph.clone();
                    (g, acc)
                }
            },
            None => {
                let acc = self.state.random_novel(self.space, rng, iter, Source::Random)?;
                let g = self.state.history.records.last().unwrap().graph.clone();
                (g, acc)
            }
        };
        self.population.push_back((graph, acc));
        self.population.pop_front();
        Ok(())
    }
}

/// Aging evolution: tournament parent selection, single-edit mutation,
/// oldest-member removal. Exactly `queries` ground-truth evaluations.
pub fn run_re(
    space: &SearchSpaceSpec,
    backend: &Backend,
    ledger: &QueryLedger,
    queries: usize,
    params: &EvolutionParams,
    seed: u64,
) -> Result<SearchHistory> {
    if queries < params.population_size {
        return Err(Error::Usage(format!(
            "queries {queries} must cover the initial population {}",
            params.population_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SearchState::new(backend, ledger);
    let mut evolver = Evolver {
        state: &mut state,
        space,
        params: params.clone(),
        population: VecDeque::new(),
    };
    evolver.seed_population(&mut rng)?;
    let mut iter = 0;
    while evolver.state.history.len() < queries {
        iter += 1;
        evolver.cycle(iter, 1, |_| 0, Source::Evolution, &mut rng)?;
    }
    Ok(state.history)
}

/// Aging evolution with a semi-supervised accuracy predictor as fitness
/// filter: each cycle scores `candidates_per_cycle` mutations with the
/// predictor and sends only the argmax to the ground-truth evaluator.
/// The predictor is retrained every `retrain_every` evaluations; its
/// queries never touch the ledger.
pub fn run_semi_re(
    space: &SearchSpaceSpec,
    backend: &Backend,
    ledger: &QueryLedger,
    queries: usize,
    params: &SemiReParams,
    config: &ControllerConfig,
    seed: u64,
) -> Result<SearchHistory> {
    if queries < params.evolution.population_size {
        return Err(Error::Usage(format!(
            "queries {queries} must cover the initial population {}",
            params.evolution.population_size
        )));
    }
    let mut rng_search = ChaCha8Rng::seed_from_u64(seed);
    let mut rng_ctrl = ChaCha8Rng::seed_from_u64(seed ^ 0x5e31_ae00_c0ff_ee11);
    let mut state = SearchState::new(backend, ledger);
    let mut evolver = Evolver {
        state: &mut state,
        space,
        params: params.evolution.clone(),
        population: VecDeque::new(),
    };
    evolver.seed_population(&mut rng_search)?;

    let mut model: Option<ControllerModel> = None;
    let mut last_retrain = 0usize;
    let mut iter = 0;
    while evolver.state.history.len() < queries {
        iter += 1;
        let evaluated = evolver.state.history.len();
        if model.is_none() || evaluated - last_retrain >= params.retrain_every {
            let mut m = ControllerModel::new(config.clone(), space.clone(), &mut rng_ctrl)?;
            let unlabeled: Vec<CellGraph> = (0..params.m_unlabeled)
                .map(|_| random_architecture(space, &mut rng_ctrl))
                .collect();
            fit_semi_supervised(&mut m, &evolver.state.labeled, &unlabeled, &mut rng_ctrl)?;
            model = Some(m);
            last_retrain = evaluated;
        }
        let predictor = model.as_ref().expect("predictor trained above");
        evolver.cycle(
            iter,
            params.candidates_per_cycle,
            |candidates| {
                let mut best = 0usize;
                let mut best_score = f64::NEG_INFINITY;
                for (i, c) in candidates.iter().enumerate() {
                    let score = encode_tokens(c, space)
                        .and_then(|t| predictor.encode(&t))
                        .and_then(|e| predictor.predict_from_embedding(&e))
                        .unwrap_or(f64::NEG_INFINITY);
                    if score > best_score {
                        best_score = score;
                        best = i;
                    }
                }
                best
            },
            Source::FilteredEvolution,
            &mut rng_search,
        )?;
    }
    Ok(state.history)
}
