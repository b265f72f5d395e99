//! Cell graphs: DAG architectures with per-node operations, their
//! validity rules, pruning canonicalization and canonical hashing.

use crate::error::{Error, Result};
use crate::space::SearchSpaceSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

/// Operation attached to a node. `Op` indexes the searchable vocabulary
/// of a [`SearchSpaceSpec`]; INPUT/OUTPUT are reserved endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeOp {
    Input,
    Output,
    Op(u8),
}

impl NodeOp {
    fn code(self) -> u8 {
        match self {
            NodeOp::Op(k) => k,
            NodeOp::Input => 254,
            NodeOp::Output => 255,
        }
    }
}

/// Directed acyclic cell: node 0 is INPUT, the last node is OUTPUT,
/// adjacency is strictly upper-triangular.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellGraph {
    node_ops: Vec<NodeOp>,
    adj: Vec<bool>, // n x n row-major
}

impl CellGraph {
    pub fn new(node_ops: Vec<NodeOp>, adj: Vec<bool>) -> Result<Self> {
        let n = node_ops.len();
        if adj.len() != n * n {
            return Err(Error::Dimension {
                op: "cell graph adjacency",
                left: format!("{n} nodes"),
                right: format!("{} adjacency entries", adj.len()),
            });
        }
        Ok(CellGraph { node_ops, adj })
    }

    /// The smallest cell: INPUT -> OUTPUT.
    pub fn minimal() -> Self {
        CellGraph {
            node_ops: vec![NodeOp::Input, NodeOp::Output],
            adj: vec![false, true, false, false],
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_ops.len()
    }

    pub fn ops(&self) -> &[NodeOp] {
        &self.node_ops
    }

    #[inline]
    pub fn edge(&self, from: usize, to: usize) -> bool {
        self.adj[from * self.node_count() + to]
    }

    pub fn set_edge(&mut self, from: usize, to: usize, present: bool) {
        let n = self.node_count();
        self.adj[from * n + to] = present;
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.node_count();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.adj[i * n + j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// `ops=<comma list>;adj=<row-major 0/1 string>`
    pub fn to_text(&self, spec: &SearchSpaceSpec) -> String {
        let ops: Vec<&str> = self
            .node_ops
            .iter()
            .map(|op| match op {
                NodeOp::Input => "input",
                NodeOp::Output => "output",
                NodeOp::Op(k) => spec.ops[*k as usize].as_str(),
            })
            .collect();
        let adj: String = self
            .adj
            .iter()
            .map(|&e| if e { '1' } else { '0' })
            .collect();
        format!("ops={};adj={}", ops.join(","), adj)
    }

    pub fn parse_text(line: &str, spec: &SearchSpaceSpec) -> Result<Self> {
        let mut ops_part = None;
        let mut adj_part = None;
        for field in line.trim().split(';') {
            match field.split_once('=') {
                Some(("ops", v)) => ops_part = Some(v),
                Some(("adj", v)) => adj_part = Some(v),
                _ => {
                    return Err(Error::Usage(format!(
                        "unrecognized architecture field {field:?}"
                    )))
                }
            }
        }
        let (ops_s, adj_s) = match (ops_part, adj_part) {
            (Some(o), Some(a)) => (o, a),
            _ => {
                return Err(Error::Usage(
                    "architecture text needs both ops= and adj= fields".into(),
                ))
            }
        };
        let node_ops: Vec<NodeOp> = ops_s
            .split(',')
            .map(|name| match name.trim() {
                "input" => Ok(NodeOp::Input),
                "output" => Ok(NodeOp::Output),
                other => spec
                    .ops
                    .iter()
                    .position(|o| o == other)
                    .map(|k| NodeOp::Op(k as u8))
                    .ok_or_else(|| Error::Usage(format!("unknown operation {other:?}"))),
            })
            .collect::<Result<_>>()?;
        let n = node_ops.len();
        if adj_s.len() != n * n {
            return Err(Error::Usage(format!(
                "adjacency string has {} chars, expected {}",
                adj_s.len(),
                n * n
            )));
        }
        let adj: Vec<bool> = adj_s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Usage(format!("bad adjacency char {other:?}"))),
            })
            .collect::<Result<_>>()?;
        CellGraph::new(node_ops, adj)
    }

    fn reachable_from_input(&self) -> Vec<bool> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if self.adj[u * n + v] && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    fn reaches_output(&self) -> Vec<bool> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = vec![n - 1];
        seen[n - 1] = true;
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if self.adj[u * n + v] && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}

/// A violated validity rule. Violations are data, not errors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NodeBudgetExceeded { nodes: usize, max: usize },
    TooFewNodes { nodes: usize },
    EdgeBudgetExceeded { edges: usize, max: usize },
    BadEndpoint { index: usize },
    UnknownOperation { index: usize },
    NotUpperTriangular { from: usize, to: usize },
    NodeOffPath { index: usize },
    NoInputOutputPath,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NodeBudgetExceeded { nodes, max } => {
                write!(f, "node budget exceeded: {nodes} > {max}")
            }
            Violation::TooFewNodes { nodes } => write!(f, "too few nodes: {nodes} < 2"),
            Violation::EdgeBudgetExceeded { edges, max } => {
                write!(f, "edge budget exceeded: {edges} > {max}")
            }
            Violation::BadEndpoint { index } => {
                write!(f, "node {index} must be INPUT (0) or OUTPUT (last) only there")
            }
            Violation::UnknownOperation { index } => {
                write!(f, "node {index} has an operation outside the vocabulary")
            }
            Violation::NotUpperTriangular { from, to } => {
                write!(f, "edge {from}->{to} is not strictly upper-triangular")
            }
            Violation::NodeOffPath { index } => {
                write!(f, "node {index} not on any input-output path")
            }
            Violation::NoInputOutputPath => write!(f, "no input-output path"),
        }
    }
}

/// Checks every invariant; returns all violations (empty = ok).
pub fn validate(g: &CellGraph, spec: &SearchSpaceSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = g.node_count();
    if n < 2 {
        out.push(Violation::TooFewNodes { nodes: n });
        return out;
    }
    if n > spec.max_nodes {
        out.push(Violation::NodeBudgetExceeded {
            nodes: n,
            max: spec.max_nodes,
        });
    }
    for (i, op) in g.ops().iter().enumerate() {
        let ok = match op {
            NodeOp::Input => i == 0,
            NodeOp::Output => i == n - 1,
            NodeOp::Op(k) => {
                if (*k as usize) >= spec.ops.len() {
                    out.push(Violation::UnknownOperation { index: i });
                }
                i != 0 && i != n - 1
            }
        };
        if !ok {
            out.push(Violation::BadEndpoint { index: i });
        }
    }
    for i in 0..n {
        for j in 0..=i.min(n - 1) {
            if g.edge(i, j) {
                out.push(Violation::NotUpperTriangular { from: i, to: j });
            }
        }
    }
    let edges = g.edge_count();
    if edges > spec.max_edges {
        out.push(Violation::EdgeBudgetExceeded {
            edges,
            max: spec.max_edges,
        });
    }
    let fwd = g.reachable_from_input();
    let bwd = g.reaches_output();
    if !(fwd[n - 1] && bwd[0]) {
        out.push(Violation::NoInputOutputPath);
    } else {
        for i in 1..n - 1 {
            if !(fwd[i] && bwd[i]) {
                out.push(Violation::NodeOffPath { index: i });
            }
        }
    }
    out
}

/// Prunes nodes off every INPUT->OUTPUT path, then relabels intermediate
/// nodes to the lexicographically smallest topological labeling of
/// (ops, adjacency). Isomorphic-after-pruning graphs map to the same
/// canonical form. A graph with no INPUT->OUTPUT path collapses to the
/// (invalid) edgeless two-node cell.
pub fn canonicalize(g: &CellGraph) -> CellGraph {
    let n = g.node_count();
    let fwd = g.reachable_from_input();
    let bwd = g.reaches_output();
    if !(fwd[n - 1] && bwd[0]) {
        let mut degenerate = CellGraph::minimal();
        degenerate.set_edge(0, 1, false);
        return degenerate;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| fwd[i] && bwd[i]).collect();
    let m = kept.len();
    let ops: Vec<NodeOp> = kept.iter().map(|&i| g.ops()[i]).collect();
    let mut adj = vec![false; m * m];
    for a in 0..m {
        for b in 0..m {
            adj[a * m + b] = g.edge(kept[a], kept[b]);
        }
    }
    // minimum lexicographic key over topological relabelings of the
    // intermediates (INPUT and OUTPUT stay pinned)
    let mut perm: Vec<usize> = (0..m).collect(); // new position -> pruned index
    let mut best: Option<(Vec<u8>, Vec<usize>)> = None;
    permute_intermediates(&mut perm, 1, m, &mut |p| {
        // topological: every edge must go from a smaller new position
        let mut pos = vec![0usize; m];
        for (new_pos, &old) in p.iter().enumerate() {
            pos[old] = new_pos;
        }
        for a in 0..m {
            for b in 0..m {
                if adj[a * m + b] && pos[a] >= pos[b] {
                    return;
                }
            }
        }
        let mut key = Vec::with_capacity(m + m * m);
        for &old in p.iter() {
            key.push(ops[old].code());
        }
        for &oa in p.iter() {
            for &ob in p.iter() {
                key.push(adj[oa * m + ob] as u8);
            }
        }
        if best.as_ref().map(|(k, _)| key < *k).unwrap_or(true) {
            best = Some((key, p.to_vec()));
        }
    });
    let (_, order) = best.expect("at least one topological order exists for a DAG");
    let new_ops: Vec<NodeOp> = order.iter().map(|&old| ops[old]).collect();
    let mut new_adj = vec![false; m * m];
    for (a, &oa) in order.iter().enumerate() {
        for (b, &ob) in order.iter().enumerate() {
            new_adj[a * m + b] = adj[oa * m + ob];
        }
    }
    CellGraph {
        node_ops: new_ops,
        adj: new_adj,
    }
}

fn permute_intermediates(perm: &mut Vec<usize>, lo: usize, m: usize, visit: &mut impl FnMut(&[usize])) {
    // permutes positions 1..m-1, leaving 0 and m-1 fixed
    if m <= 2 || lo == m - 2 {
        visit(perm);
        return;
    }
    for i in lo..m - 1 {
        perm.swap(lo, i);
        permute_intermediates(perm, lo + 1, m, visit);
        perm.swap(lo, i);
    }
}

/// SHA-256 digest (lowercase hex) of the canonical structure. Equal for
/// isomorphic graphs after pruning; stable across runs and platforms.
pub fn canonical_hash(g: &CellGraph) -> String {
    let c = canonicalize(g);
    let mut bytes = Vec::with_capacity(1 + c.node_count() + c.adj.len());
    bytes.push(c.node_count() as u8);
    for op in c.ops() {
        bytes.push(op.code());
    }
    for &e in &c.adj {
        bytes.push(e as u8);
    }
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SearchSpaceSpec {
        SearchSpaceSpec::default()
    }

    fn three_chain(op: u8) -> CellGraph {
        // input -> op -> output
        let mut g = CellGraph::new(
            vec![NodeOp::Input, NodeOp::Op(op), NodeOp::Output],
            vec![false; 9],
        )
        .unwrap();
        g.set_edge(0, 1, true);
        g.set_edge(1, 2, true);
        g
    }

    #[test]
    fn minimal_two_node_cell_is_valid() {
        assert!(validate(&CellGraph::minimal(), &spec()).is_empty());
    }

    #[test]
    fn edge_budget_boundary_plus_one_is_reported() {
        // 7 nodes, 10 edges
        let n = 7;
        let mut ops = vec![NodeOp::Input];
        ops.extend(std::iter::repeat(NodeOp::Op(0)).take(5));
        ops.push(NodeOp::Output);
        let mut g = CellGraph::new(ops, vec![false; n * n]).unwrap();
        // chain (6 edges) plus 4 skips = 10 edges
        for i in 0..6 {
            g.set_edge(i, i + 1, true);
        }
        for i in 0..4 {
            g.set_edge(i, i + 2, true);
        }
        assert_eq!(g.edge_count(), 10);
        let v = validate(&g, &spec());
        assert!(
            v.iter()
                .any(|x| matches!(x, Violation::EdgeBudgetExceeded { edges: 10, max: 9 })),
            "{v:?}"
        );
        assert!(v.iter().any(|x| x.to_string().contains("edge budget exceeded")));
    }

    /// Independent DFS path oracle: node i is on an input-output path iff
    /// some simple path 0 -> .. -> i -> .. -> n-1 exists.
    fn on_path_by_dfs(g: &CellGraph, target: usize) -> bool {
        fn dfs(g: &CellGraph, u: usize, target: usize, hit: bool) -> bool {
            let n = g.node_count();
            let hit = hit || u == target;
            if u == n - 1 {
                return hit;
            }
            (0..n).any(|v| g.edge(u, v) && dfs(g, v, target, hit))
        }
        dfs(g, 0, target, false)
    }

    #[test]
    fn isolated_middle_node_is_off_path() {
        let mut g = CellGraph::new(
            vec![NodeOp::Input, NodeOp::Op(1), NodeOp::Op(0), NodeOp::Output],
            vec![false; 16],
        )
        .unwrap();
        g.set_edge(0, 1, true);
        g.set_edge(1, 3, true);
        // node 2 isolated
        let v = validate(&g, &spec());
        assert!(v.contains(&Violation::NodeOffPath { index: 2 }), "{v:?}");
        assert!(!on_path_by_dfs(&g, 2));
        assert!(on_path_by_dfs(&g, 1));
        assert!(v.iter().any(|x| x.to_string().contains("not on any input-output path")));
    }

    #[test]
    fn pruning_unreachable_node_preserves_digest() {
        let pruned = three_chain(1);
        let mut with_extra = CellGraph::new(
            vec![NodeOp::Input, NodeOp::Op(1), NodeOp::Op(2), NodeOp::Output],
            vec![false; 16],
        )
        .unwrap();
        with_extra.set_edge(0, 1, true);
        with_extra.set_edge(1, 3, true);
        // node 2 dangles off input only
        with_extra.set_edge(0, 2, true);
        assert_eq!(canonical_hash(&pruned), canonical_hash(&with_extra));
    }

    #[test]
    fn distinct_three_node_graphs_hash_differently() {
        let a = three_chain(0);
        let b = three_chain(1);
        let mut c = three_chain(0);
        c.set_edge(0, 2, true); // add skip edge
        assert_ne!(canonical_hash(&a), canonical_hash(&b));
        assert_ne!(canonical_hash(&a), canonical_hash(&c));
        assert_ne!(canonical_hash(&b), canonical_hash(&c));
    }

    #[test]
    fn digest_is_stable_across_invocations() {
        // frozen value: any change to the canonical form or hash layout
        // is a breaking change for stored benchmarks
        let g = CellGraph::minimal();
        assert_eq!(
            canonical_hash(&g),
            "fecb37bd20309685ab255e3795104d6aefe3f3d740849d18c5feb91dd858e8d4"
        );
    }

    #[test]
    fn isomorphic_relabelings_share_canonical_form() {
        // two parallel branches with different ops, listed in either order
        let mut a = CellGraph::new(
            vec![NodeOp::Input, NodeOp::Op(0), NodeOp::Op(2), NodeOp::Output],
            vec![false; 16],
        )
        .unwrap();
        a.set_edge(0, 1, true);
        a.set_edge(0, 2, true);
        a.set_edge(1, 3, true);
        a.set_edge(2, 3, true);
        let mut b = CellGraph::new(
            vec![NodeOp::Input, NodeOp::Op(2), NodeOp::Op(0), NodeOp::Output],
            vec![false; 16],
        )
        .unwrap();
        b.set_edge(0, 1, true);
        b.set_edge(0, 2, true);
        b.set_edge(1, 3, true);
        b.set_edge(2, 3, true);
        assert_eq!(canonicalize(&a), canonicalize(&b));
        assert_eq!(canonical_hash(&a), canonical_hash(&b));
    }

    #[test]
    fn text_form_round_trips() {
        let g = three_chain(2);
        let text = g.to_text(&spec());
        assert_eq!(text, "ops=input,maxpool3x3,output;adj=010001000");
        let parsed = CellGraph::parse_text(&text, &spec()).unwrap();
        assert_eq!(parsed, g);
    }

    #[test]
    fn parse_rejects_unknown_operation() {
        let err = CellGraph::parse_text("ops=input,conv9x9,output;adj=010001000", &spec());
        assert!(err.is_err());
    }
}
