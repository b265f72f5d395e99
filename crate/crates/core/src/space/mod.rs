//! Cell-DAG search space: validity rules, random generation, mutation,
//! pruning canonicalization, canonical hashing and the bijective token
//! codec consumed by the controller.

mod graph;
mod sample;
mod tokens;

pub use graph::{canonical_hash, canonicalize, validate, CellGraph, NodeOp, Violation};
pub use sample::{canonical_neighbors, enumerate_space, mutate, random_architecture};
pub use tokens::{
    alphabet_size, decode_tokens, encode_tokens, PosKind, Token, TokenLayout, TokenSequence,
};

use serde::{Deserialize, Serialize};

/// Shape of the architecture space: NASBench-style cells with a node
/// budget, an edge budget and a small operation vocabulary (INPUT and
/// OUTPUT are reserved and not searchable).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpaceSpec {
    pub max_nodes: usize,
    pub max_edges: usize,
    pub ops: Vec<String>,
}

impl Default for SearchSpaceSpec {
    fn default() -> Self {
        SearchSpaceSpec {
            max_nodes: 7,
            max_edges: 9,
            ops: vec![
                "conv1x1".to_string(),
                "conv3x3".to_string(),
                "maxpool3x3".to_string(),
            ],
        }
    }
}

impl SearchSpaceSpec {
    /// Same vocabulary and edge budget, smaller node budget. Used for
    /// exhaustively enumerable toy spaces.
    pub fn with_max_nodes(max_nodes: usize) -> Self {
        SearchSpaceSpec {
            max_nodes,
            ..SearchSpaceSpec::default()
        }
    }
}
