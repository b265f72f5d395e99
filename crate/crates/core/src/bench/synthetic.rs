//! Seeded synthetic accuracy oracle over the cell space.
//!
//! A desk-scale stand-in for a real tabular benchmark: accuracy is a
//! deterministic function of the canonical graph built from per-(band,
//! op) weights, per-slot-pair edge weights, a few sparse pairwise
//! interaction terms and hash-seeded noise. Querying the same graph
//! twice returns the same value, like a fixed table entry.

use crate::space::{canonical_hash, canonicalize, CellGraph, NodeOp, SearchSpaceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const N_BANDS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOracleConfig {
    pub seed: u64,
    pub base: f64,
    pub weight_scale: f64,
    pub interaction_scale: f64,
    pub n_interactions: usize,
    pub noise_sd: f64,
}

impl Default for SyntheticOracleConfig {
    fn default() -> Self {
        SyntheticOracleConfig {
            seed: 0,
            base: 0.88,
            weight_scale: 0.02,
            interaction_scale: 0.03,
            n_interactions: 6,
            noise_sd: 0.01,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticOracle {
    config: SyntheticOracleConfig,
    space: SearchSpaceSpec,
    op_weights: Vec<f64>,   // band * n_ops + op
    edge_weights: Vec<f64>, // slot pair, row-major upper-triangular
    interactions: Vec<(usize, usize, f64)>, // pairs of (band, op) feature indices
}

/// Maps a node of an n-node graph to its slot in the max_nodes layout
/// (OUTPUT pinned to the last slot, same convention as the token codec).
fn slot_of(node: usize, n: usize, s: usize) -> usize {
    if node == n - 1 {
        s - 1
    } else {
        node
    }
}

fn band_of(node: usize, n: usize) -> usize {
    debug_assert!(node >= 1 && node <= n - 2);
    let intermediates = (n - 2).max(1);
    (N_BANDS * (node - 1) / intermediates).min(N_BANDS - 1)
}

impl SyntheticOracle {
    pub fn new(config: SyntheticOracleConfig, space: SearchSpaceSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n_ops = space.ops.len();
        let w = config.weight_scale;
        let op_weights: Vec<f64> = (0..N_BANDS * n_ops)
            .map(|_| rng.gen_range(-w..=w))
            .collect();
        let s = space.max_nodes;
        let edge_weights: Vec<f64> = (0..s * (s - 1) / 2)
            .map(|_| rng.gen_range(-w..=w))
            .collect();
        let n_features = N_BANDS * n_ops;
        let iw = config.interaction_scale;
        let mut interactions = Vec::with_capacity(config.n_interactions);
        for _ in 0..config.n_interactions {
            let a = rng.gen_range(0..n_features);
            let b = rng.gen_range(0..n_features);
            interactions.push((a, b, rng.gen_range(-iw..=iw)));
        }
        SyntheticOracle {
            config,
            space,
            op_weights,
            edge_weights,
            interactions,
        }
    }

    pub fn config(&self) -> &SyntheticOracleConfig {
        &self.config
    }

    pub fn space(&self) -> &SearchSpaceSpec {
        &self.space
    }

    fn pair_index(&self, a: usize, b: usize) -> usize {
        // row-major upper-triangular index of slot pair (a, b), a < b
        let s = self.space.max_nodes;
        a * s - a * (a + 1) / 2 + (b - a - 1)
    }

    fn structural_score(&self, g: &CellGraph) -> f64 {
        let n = g.node_count();
        let n_ops = self.space.ops.len();
        let mut score = 0.0;
        let mut present = vec![false; N_BANDS * n_ops];
        for node in 1..n.saturating_sub(1) {
            if let NodeOp::Op(k) = g.ops()[node] {
                let feature = band_of(node, n) * n_ops + k as usize;
                score += self.op_weights[feature];
                present[feature] = true;
            }
        }
        let s = self.space.max_nodes;
        for (u, v) in g.edges() {
            let (a, b) = (slot_of(u, n, s), slot_of(v, n, s));
            score += self.edge_weights[self.pair_index(a, b)];
        }
        for &(a, b, w) in &self.interactions {
            if present[a] && present[b] {
                score += w;
            }
        }
        score
    }

    fn noise(&self, hash: &str, tag: u64) -> f64 {
        if self.config.noise_sd == 0.0 {
            return 0.0;
        }
        let h = u64::from_str_radix(&hash[..16], 16).expect("hash is hex");
        let mut rng =
            ChaCha8Rng::seed_from_u64(self.config.seed ^ h.rotate_left(17) ^ tag);
        // Box-Muller from two uniforms; plain and platform-stable
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        z * self.config.noise_sd
    }

    /// (valid accuracy, test accuracy), both deterministic per
    /// (config seed, canonical hash) and clipped to [0, 1].
    pub fn accuracy(&self, g: &CellGraph) -> (f64, f64) {
        let c = canonicalize(g);
        let hash = canonical_hash(&c);
        let score = self.config.base + self.structural_score(&c);
        let valid = (score + self.noise(&hash, 0x76a5_1d01)).clamp(0.0, 1.0);
        let test = (score + self.noise(&hash, 0x7e57_a002)).clamp(0.0, 1.0);
        (valid, test)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::random_architecture;

    fn flat_config() -> SyntheticOracleConfig {
        SyntheticOracleConfig {
            seed: 1,
            base: 0.9,
            weight_scale: 0.0,
            interaction_scale: 0.0,
            n_interactions: 0,
            noise_sd: 0.0,
        }
    }

    #[test]
    fn constant_oracle_returns_base_everywhere() {
        let space = SearchSpaceSpec::default();
        let oracle = SyntheticOracle::new(flat_config(), space.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = random_architecture(&space, &mut rng);
            assert_eq!(oracle.accuracy(&g), (0.9, 0.9));
        }
    }

    #[test]
    fn single_op_weight_separates_twins_exactly() {
        let space = SearchSpaceSpec::default();
        let mut oracle = SyntheticOracle::new(flat_config(), space.clone());
        // hand-plant one positive weight: band 0, op 2
        let bonus = 0.015;
        oracle.op_weights[2] = bonus;
        // 3-node chains differing only in the middle op
        let mk = |op: u8| {
            let mut g = CellGraph::new(
                vec![NodeOp::Input, NodeOp::Op(op), NodeOp::Output],
                vec![false; 9],
            )
            .unwrap();
            g.set_edge(0, 1, true);
            g.set_edge(1, 2, true);
            g
        };
        let with = oracle.accuracy(&mk(2)).0;
        let without = oracle.accuracy(&mk(0)).0;
        assert!((with - without - bonus).abs() < 1e-15);
    }

    #[test]
    fn same_graph_twice_gives_identical_values() {
        let space = SearchSpaceSpec::default();
        let oracle = SyntheticOracle::new(SyntheticOracleConfig::default(), space.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let g = random_architecture(&space, &mut rng);
            assert_eq!(oracle.accuracy(&g), oracle.accuracy(&g));
        }
    }

    #[test]
    fn valid_and_test_noise_are_independent() {
        let space = SearchSpaceSpec::default();
        let oracle = SyntheticOracle::new(SyntheticOracleConfig::default(), space.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut differ = 0;
        for _ in 0..20 {
            let g = random_architecture(&space, &mut rng);
            let (v, t) = oracle.accuracy(&g);
            if v != t {
                differ += 1;
            }
        }
        assert!(differ >= 19, "independent noise should split the values");
    }

    #[test]
    fn rebuilding_oracle_reproduces_values() {
        let space = SearchSpaceSpec::default();
        let a = SyntheticOracle::new(SyntheticOracleConfig::default(), space.clone());
        let b = SyntheticOracle::new(SyntheticOracleConfig::default(), space.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = random_architecture(&space, &mut rng);
            assert_eq!(a.accuracy(&g), b.accuracy(&g));
        }
    }
}
