//! Fixed-layout token codec for cell graphs.
//!
//! Layout for a space with S = max_nodes slots:
//! `SOS, bit(0,1), bit(0,2), .., bit(S-2,S-1), op(slot 1), .., op(slot S-2), EOS`
//! Edge bits cover every slot pair in row-major upper-triangular order.
//! A graph with n nodes occupies slots 0..n-2 plus slot S-1 (OUTPUT is
//! always pinned to the last slot); unused intermediate slots carry PAD
//! in their op position and zero bits. Every valid graph maps to exactly
//! one sequence and back.

use crate::error::{Error, Result};
use crate::space::graph::{CellGraph, NodeOp};
use crate::space::SearchSpaceSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    Pad,
    Sos,
    Eos,
    Bit(bool),
    Op(u8),
}

impl Token {
    /// Dense id for embedding lookup.
    pub fn id(self) -> usize {
        match self {
            Token::Pad => 0,
            Token::Sos => 1,
            Token::Eos => 2,
            Token::Bit(false) => 3,
            Token::Bit(true) => 4,
            Token::Op(k) => 5 + k as usize,
        }
    }

    pub fn from_id(id: usize, n_ops: usize) -> Result<Token> {
        match id {
            0 => Ok(Token::Pad),
            1 => Ok(Token::Sos),
            2 => Ok(Token::Eos),
            3 => Ok(Token::Bit(false)),
            4 => Ok(Token::Bit(true)),
            k if k < 5 + n_ops => Ok(Token::Op((k - 5) as u8)),
            _ => Err(Error::UnknownToken {
                id,
                alphabet: 5 + n_ops,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence(pub Vec<Token>);

impl TokenSequence {
    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.0.iter().map(|t| t.id()).collect()
    }
}

/// Token alphabet size for a space.
pub fn alphabet_size(spec: &SearchSpaceSpec) -> usize {
    5 + spec.ops.len()
}

/// Position kinds of the fixed layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PosKind {
    Sos,
    /// Edge bit; payload is the bit index.
    Bit(usize),
    /// Op-or-PAD position; payload is the slot (1..=S-2).
    OpSlot(usize),
    Eos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenLayout {
    pub max_nodes: usize,
    pub n_bits: usize,
    pub n_op_slots: usize,
    pub len: usize,
    pairs: Vec<(usize, usize)>,
}

impl TokenLayout {
    pub fn for_spec(spec: &SearchSpaceSpec) -> Self {
        let s = spec.max_nodes;
        let mut pairs = Vec::new();
        for i in 0..s {
            for j in (i + 1)..s {
                pairs.push((i, j));
            }
        }
        let n_bits = pairs.len();
        let n_op_slots = s - 2;
        TokenLayout {
            max_nodes: s,
            n_bits,
            n_op_slots,
            len: 1 + n_bits + n_op_slots + 1,
            pairs,
        }
    }

    pub fn bit_pair(&self, bit_index: usize) -> (usize, usize) {
        self.pairs[bit_index]
    }

    pub fn pos_kind(&self, pos: usize) -> PosKind {
        if pos == 0 {
            PosKind::Sos
        } else if pos <= self.n_bits {
            PosKind::Bit(pos - 1)
        } else if pos <= self.n_bits + self.n_op_slots {
            PosKind::OpSlot(pos - self.n_bits)
        } else {
            PosKind::Eos
        }
    }
}

/// Maps a node index of an n-node graph to its slot in the S-slot layout.
fn slot_of(node: usize, n: usize, s: usize) -> usize {
    if node == n - 1 {
        s - 1
    } else {
        node
    }
}

pub fn encode_tokens(g: &CellGraph, spec: &SearchSpaceSpec) -> Result<TokenSequence> {
    let layout = TokenLayout::for_spec(spec);
    let n = g.node_count();
    let s = spec.max_nodes;
    if n > s || n < 2 {
        return Err(Error::Usage(format!(
            "graph with {n} nodes does not fit a {s}-slot layout"
        )));
    }
    // inverse slot map
    let mut node_at = vec![None; s];
    for node in 0..n {
        node_at[slot_of(node, n, s)] = Some(node);
    }
    let mut tokens = Vec::with_capacity(layout.len);
    tokens.push(Token::Sos);
    for b in 0..layout.n_bits {
        let (a, c) = layout.bit_pair(b);
        let present = match (node_at[a], node_at[c]) {
            (Some(u), Some(v)) => g.edge(u, v),
            _ => false,
        };
        tokens.push(Token::Bit(present));
    }
    for slot in 1..=layout.n_op_slots {
        match node_at[slot] {
            Some(node) => match g.ops()[node] {
                NodeOp::Op(k) => tokens.push(Token::Op(k)),
                _ => {
                    return Err(Error::Usage(format!(
                        "node {node} is not a searchable operation"
                    )))
                }
            },
            None => tokens.push(Token::Pad),
        }
    }
    tokens.push(Token::Eos);
    Ok(TokenSequence(tokens))
}

/// Parses a sequence back into a cell graph. Rejects malformed input with
/// the position of the first offending token. Sequences whose used slots
/// are non-contiguous are accepted and compacted (the greedy decoder can
/// emit them); canonical encodings are reconstructed exactly.
pub fn decode_tokens(t: &TokenSequence, spec: &SearchSpaceSpec) -> Result<CellGraph> {
    let layout = TokenLayout::for_spec(spec);
    if t.len() != layout.len {
        return Err(Error::Decode {
            index: t.len().min(layout.len),
            reason: format!("sequence length {} != layout length {}", t.len(), layout.len),
        });
    }
    let toks = t.tokens();
    let s = spec.max_nodes;
    let mut bits = vec![false; layout.n_bits];
    let mut slot_ops: Vec<Option<u8>> = vec![None; s];
    for (pos, &tok) in toks.iter().enumerate() {
        match layout.pos_kind(pos) {
            PosKind::Sos => {
                if tok != Token::Sos {
                    return Err(Error::Decode {
                        index: pos,
                        reason: format!("expected SOS, found {tok:?}"),
                    });
                }
            }
            PosKind::Bit(b) => match tok {
                Token::Bit(v) => bits[b] = v,
                other => {
                    return Err(Error::Decode {
                        index: pos,
                        reason: format!("expected edge bit, found {other:?}"),
                    })
                }
            },
            PosKind::OpSlot(slot) => match tok {
                Token::Op(k) if (k as usize) < spec.ops.len() => slot_ops[slot] = Some(k),
                Token::Pad => slot_ops[slot] = None,
                other => {
                    return Err(Error::Decode {
                        index: pos,
                        reason: format!("expected operation or PAD, found {other:?}"),
                    })
                }
            },
            PosKind::Eos => {
                if tok != Token::Eos {
                    return Err(Error::Decode {
                        index: pos,
                        reason: format!("expected EOS, found {tok:?}"),
                    });
                }
            }
        }
    }
    // used slots: endpoints plus op-bearing intermediates
    let mut used = vec![false; s];
    used[0] = true;
    used[s - 1] = true;
    for slot in 1..s - 1 {
        used[slot] = slot_ops[slot].is_some();
    }
    // set bits must connect used slots
    for (b, &present) in bits.iter().enumerate() {
        if present {
            let (a, c) = layout.bit_pair(b);
            if !used[a] || !used[c] {
                return Err(Error::Decode {
                    index: 1 + b,
                    reason: format!("edge bit ({a},{c}) set for empty node slot"),
                });
            }
        }
    }
    // compact used slots into node indices
    let slots: Vec<usize> = (0..s).filter(|&sl| used[sl]).collect();
    let n = slots.len();
    let mut node_of = vec![usize::MAX; s];
    for (node, &slot) in slots.iter().enumerate() {
        node_of[slot] = node;
    }
    let mut node_ops = Vec::with_capacity(n);
    for (node, &slot) in slots.iter().enumerate() {
        node_ops.push(if node == 0 {
            NodeOp::Input
        } else if node == n - 1 {
            NodeOp::Output
        } else {
            NodeOp::Op(slot_ops[slot].expect("used intermediate slot has an op"))
        });
    }
    let mut g = CellGraph::new(node_ops, vec![false; n * n])?;
    for (b, &present) in bits.iter().enumerate() {
        if present {
            let (a, c) = layout.bit_pair(b);
            g.set_edge(node_of[a], node_of[c], true);
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::graph::{canonicalize, validate};
    use crate::space::sample::random_architecture;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec() -> SearchSpaceSpec {
        SearchSpaceSpec::default()
    }

    #[test]
    fn minimal_cell_layout_is_exact() {
        let g = CellGraph::minimal();
        let t = encode_tokens(&g, &spec()).unwrap();
        assert_eq!(t.len(), 28); // SOS + 21 bits + 5 op slots + EOS
        assert_eq!(t.tokens()[0], Token::Sos);
        // only the (0, 6) slot pair bit is set: bit index 5
        for b in 0..21 {
            let expected = Token::Bit(b == 5);
            assert_eq!(t.tokens()[1 + b], expected, "bit {b}");
        }
        for p in 0..5 {
            assert_eq!(t.tokens()[22 + p], Token::Pad);
        }
        assert_eq!(t.tokens()[27], Token::Eos);
        assert_eq!(decode_tokens(&t, &spec()).unwrap(), g);
    }

    #[test]
    fn ten_thousand_random_graphs_round_trip() {
        let sp = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..10_000 {
            let g = random_architecture(&sp, &mut rng);
            let t = encode_tokens(&g, &sp).unwrap();
            let back = decode_tokens(&t, &sp).unwrap();
            assert_eq!(back, g, "round trip failed at sample {i}");
        }
    }

    #[test]
    fn op_token_in_bit_position_is_rejected_at_index() {
        let g = CellGraph::minimal();
        let mut t = encode_tokens(&g, &spec()).unwrap();
        t.0[3] = Token::Op(1);
        let err = decode_tokens(&t, &spec()).unwrap_err();
        match err {
            Error::Decode { index, reason } => {
                assert_eq!(index, 3);
                assert!(reason.contains("expected edge bit"), "{reason}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn edge_bit_to_empty_slot_is_rejected() {
        let g = CellGraph::minimal();
        let mut t = encode_tokens(&g, &spec()).unwrap();
        // bit index 0 is slot pair (0, 1); slot 1 is PAD in the minimal cell
        t.0[1] = Token::Bit(true);
        let err = decode_tokens(&t, &spec()).unwrap_err();
        match err {
            Error::Decode { index, reason } => {
                assert_eq!(index, 1);
                assert!(reason.contains("empty node slot"), "{reason}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn token_ids_round_trip_through_alphabet() {
        let sp = spec();
        let n_ops = sp.ops.len();
        for id in 0..alphabet_size(&sp) {
            let tok = Token::from_id(id, n_ops).unwrap();
            assert_eq!(tok.id(), id);
        }
        assert!(Token::from_id(alphabet_size(&sp), n_ops).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip_on_random_valid_graphs(seed in 0u64..10_000) {
            let sp = spec();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_architecture(&sp, &mut rng);
            prop_assert!(validate(&g, &sp).is_empty());
            prop_assert_eq!(canonicalize(&g), g.clone());
            let t = encode_tokens(&g, &sp).unwrap();
            prop_assert_eq!(t.len(), TokenLayout::for_spec(&sp).len);
            let back = decode_tokens(&t, &sp).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
