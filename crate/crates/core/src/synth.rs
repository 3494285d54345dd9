//! Seeded synthetic graph generators for tests, bundled data, and benchmarks.
//!
//! Both generators walk the candidate node pairs in a fixed order and draw
//! one uniform variate per pair from a stage-labeled RNG, so a given seed
//! always yields the same graph on every platform.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, NodeId};
use crate::labels::LabelSet;
use crate::seeding::rng_for;

/// Undirected stochastic block model. Nodes are numbered block by block;
/// an unordered pair inside a block is an edge with probability `p_in`,
/// across blocks with probability `p_out`. Returns the graph together with
/// single-label ground truth (label = block index).
pub fn stochastic_block_model(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(CsrGraph, LabelSet)> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::InvalidParameter(
            "block sizes must be non-empty and positive".into(),
        ));
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be in [0,1], got {p}"
            )));
        }
    }
    let n: usize = block_sizes.iter().sum();
    if n > NodeId::MAX as usize {
        return Err(Error::InvalidParameter(format!("{n} nodes exceed node id range")));
    }
    let mut block_of = Vec::with_capacity(n);
    for (b, &size) in block_sizes.iter().enumerate() {
        block_of.extend(std::iter::repeat_n(b, size));
    }
    let mut rng = rng_for(seed, "sbm", 0);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if block_of[u] == block_of[v] { p_in } else { p_out };
            if rng.random_range(0.0..1.0) < p {
                edges.push((u as NodeId, v as NodeId));
            }
        }
    }
    let g = CsrGraph::from_edges(n, &edges, false)?;
    let labels: Vec<Vec<u32>> = block_of.iter().map(|&b| vec![b as u32]).collect();
    let labels = LabelSet::new(labels, block_sizes.len())?;
    Ok((g, labels))
}

/// Erdős–Rényi graph: every candidate pair (unordered when undirected,
/// ordered with u≠v when directed) is an edge independently with
/// probability `p`.
pub fn erdos_renyi(n: usize, p: f64, directed: bool, seed: u64) -> Result<CsrGraph> {
    if n == 0 {
        return Err(Error::InvalidParameter("graph must have at least one node".into()));
    }
    if n > NodeId::MAX as usize {
        return Err(Error::InvalidParameter(format!("{n} nodes exceed node id range")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "edge probability must be in [0,1], got {p}"
        )));
    }
    let mut rng = rng_for(seed, "er", 0);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for u in 0..n {
        let start = if directed { 0 } else { u + 1 };
        for v in start..n {
            if u == v {
                continue;
            }
            if rng.random_range(0.0..1.0) < p {
                edges.push((u as NodeId, v as NodeId));
            }
        }
    }
    CsrGraph::from_edges(n, &edges, directed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sbm_labels_follow_blocks() {
        let (g, labels) = stochastic_block_model(&[4, 6], 1.0, 0.0, 7).unwrap();
        assert_eq!(g.n(), 10);
        assert_eq!(labels.n_classes(), 2);
        for u in 0..4 {
            assert_eq!(labels.labels_of(u), &[0]);
        }
        for u in 4..10 {
            assert_eq!(labels.labels_of(u as u32), &[1]);
        }
    }

    #[test]
    fn sbm_extreme_probabilities_give_disjoint_cliques() {
        let (g, _) = stochastic_block_model(&[5, 5], 1.0, 0.0, 1).unwrap();
        for u in 0..10u32 {
            for v in 0..10u32 {
                if u == v {
                    continue;
                }
                let same_block = (u < 5) == (v < 5);
                assert_eq!(g.has_edge(u, v), same_block, "pair ({u},{v})");
            }
        }
    }

    #[test]
    fn sbm_density_matches_expectation() {
        // 3σ binomial band around the expected undirected edge count.
        let (g, _) = stochastic_block_model(&[100, 100], 0.10, 0.01, 3).unwrap();
        let within = 100.0 * 99.0 / 2.0 * 2.0; // unordered in-block pairs
        let across = 100.0 * 100.0;
        let expect = 0.10 * within + 0.01 * across;
        let var = 0.10 * 0.90 * within + 0.01 * 0.99 * across;
        let got = g.undirected_edge_count() as f64;
        assert!(
            (got - expect).abs() <= 3.0 * var.sqrt(),
            "edge count {got} outside 3σ of {expect}"
        );
    }

    #[test]
    fn same_seed_same_graph() {
        let (g1, _) = stochastic_block_model(&[30, 30], 0.2, 0.05, 9).unwrap();
        let (g2, _) = stochastic_block_model(&[30, 30], 0.2, 0.05, 9).unwrap();
        assert_eq!(g1.m(), g2.m());
        for u in 0..g1.n() as u32 {
            assert_eq!(g1.neighbors(u), g2.neighbors(u));
        }
        let g3 = erdos_renyi(50, 0.1, true, 11).unwrap();
        let g4 = erdos_renyi(50, 0.1, true, 11).unwrap();
        for u in 0..50u32 {
            assert_eq!(g3.neighbors(u), g4.neighbors(u));
        }
    }

    #[test]
    fn erdos_renyi_directed_density() {
        let g = erdos_renyi(120, 0.05, true, 5).unwrap();
        let pairs: f64 = 120.0 * 119.0;
        let expect = 0.05 * pairs;
        let sd = (0.05 * 0.95 * pairs).sqrt();
        assert!((g.m() as f64 - expect).abs() <= 3.0 * sd);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(stochastic_block_model(&[], 0.5, 0.5, 1).is_err());
        assert!(stochastic_block_model(&[3, 0], 0.5, 0.5, 1).is_err());
        assert!(stochastic_block_model(&[3], 1.5, 0.5, 1).is_err());
        assert!(erdos_renyi(0, 0.5, false, 1).is_err());
        assert!(erdos_renyi(5, -0.1, false, 1).is_err());
    }
}
