//! Random search baseline: unique random architectures until the quota.

use crate::bench::{Backend, QueryLedger};
use crate::error::{Error, Result};
use crate::search::state::SearchState;
use crate::search::{SearchHistory, Source};
use crate::space::SearchSpaceSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_random(
    space: &SearchSpaceSpec,
    backend: &Backend,
    ledger: &QueryLedger,
    queries: usize,
    seed: u64,
) -> Result<SearchHistory> {
    if queries == 0 {
        return Err(Error::Usage("random search needs queries >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SearchState::new(backend, ledger);
    for _ in 0..queries {
        state.random_novel(space, &mut rng, 0, Source::Random)?;
    }
    Ok(state.history)
}
