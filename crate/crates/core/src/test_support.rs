//! Shared helpers for unit tests: seeded random graphs and independent
//! oracles. Compiled only for test builds.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::graph::{CsrGraph, NodeId};

/// Random directed graph where every node gets at least one out-edge, so all
/// walk mass keeps moving and row sums are exactly predictable.
pub(crate) fn random_graph_no_dangling(
    n: usize,
    extra_edges: usize,
    rng: &mut ChaCha12Rng,
) -> CsrGraph {
    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(n + extra_edges);
    for u in 0..n as NodeId {
        let mut v = rng.random_range(0..n as NodeId);
        if v == u {
            v = (v + 1) % n as NodeId;
        }
        edges.push((u, v));
    }
    for _ in 0..extra_edges {
        let u = rng.random_range(0..n as NodeId);
        let v = rng.random_range(0..n as NodeId);
        edges.push((u, v));
    }
    CsrGraph::from_edges(n, &edges, true).unwrap()
}

/// Random undirected graph with roughly `avg_deg` neighbors per node.
pub(crate) fn random_undirected(n: usize, avg_deg: usize, rng: &mut ChaCha12Rng) -> CsrGraph {
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for u in 0..n as NodeId {
        for _ in 0..avg_deg.div_ceil(2) {
            let v = rng.random_range(0..n as NodeId);
            if v != u {
                edges.push((u, v));
            }
        }
    }
    CsrGraph::from_edges(n, &edges, false).unwrap()
}

/// Independent oracle: classical personalized PageRank from `source` with
/// constant stopping probability `alpha`, by explicit power iteration until
/// the surviving tail falls below `tail_tol`. Dangling mass is absorbed in
/// place, matching the toolkit's semantics.
pub(crate) fn power_iteration_ppr(
    g: &CsrGraph,
    source: NodeId,
    alpha: f64,
    tail_tol: f64,
) -> Vec<f64> {
    let n = g.n();
    let mut pi = vec![0.0f64; n];
    let mut cur = vec![0.0f64; n];
    cur[source as usize] = 1.0;
    let mut survive = 1.0f64;
    while survive > tail_tol {
        let mut next = vec![0.0f64; n];
        let mut moved = false;
        for j in 0..n {
            let mass = cur[j];
            if mass == 0.0 {
                continue;
            }
            let deg = g.out_degree(j as u32);
            if deg == 0 {
                pi[j] += mass; // absorbed whole
            } else {
                pi[j] += alpha * mass;
                let w = (1.0 - alpha) * mass / deg as f64;
                for &v in g.neighbors(j as u32) {
                    next[v as usize] += w;
                }
                moved = true;
            }
        }
        cur = next;
        survive *= 1.0 - alpha;
        if !moved {
            break;
        }
    }
    pi
}
