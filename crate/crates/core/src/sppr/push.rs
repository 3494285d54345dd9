//! Generalized push: single-source supervised PPR in time independent of
//! graph size.
//!
//! Walk mass is tracked per hop: `r^(k)(v)` is probability mass sitting at
//! node `v` having survived exactly `k` hops, not yet classified. Whenever
//! some `r^(k)(v)` exceeds `delta · out_degree(v)`, it is "pushed": the
//! stopping share `alpha_k · r` moves into the estimate `pi_hat(v)`, the rest
//! spreads to out-neighbors at hop `k+1`. Residues that never clear the
//! threshold stay behind and bound the estimation error; mass pushed past the
//! final hop is parked and never propagated (truncated semantics).
//!
//! Hops are processed in ascending order and drained completely before the
//! next begins. Mass only ever flows from hop `k` to hop `k+1`, so each
//! `(hop, node)` pair is pushed at most once per drain — this gives
//! deterministic output and makes the `1/(alpha_min·delta)` operation bound
//! directly observable.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, NodeId};
use crate::proximity::SparseRowMatrix;
use crate::schedule::Schedule;

/// Above this node count the per-source workspace switches from dense arrays
/// to hash maps (a dense f64 workspace would dominate memory for huge graphs
/// while push touches only a local neighborhood).
const DENSE_WORKSPACE_CAP: usize = 1 << 18;

/// Final bookkeeping of one push run.
#[derive(Debug, Clone)]
pub struct PushState {
    /// Sub-threshold residues left at each hop `0..=max_hop+1`, sorted by
    /// node id. The last slot holds the mass parked past the final hop.
    pub residues: Vec<Vec<(NodeId, f64)>>,
    /// Number of push operations performed.
    pub pushes: u64,
    /// Total mass parked at hop `max_hop + 1` (sum of the last residue slot).
    pub discarded_mass: f64,
}

impl PushState {
    /// Total residue mass over all hops, parked mass included.
    pub fn total_residue(&self) -> f64 {
        self.residues
            .iter()
            .map(|hop| hop.iter().map(|&(_, r)| r).sum::<f64>())
            .sum()
    }
}

/// Aggregate statistics of a whole-graph push sweep.
#[derive(Debug, Clone, Copy)]
pub struct PushStats {
    pub total_pushes: u64,
    /// Largest single estimate value seen across all sources. When a
    /// threshold leaves the proximity matrix empty, any delta below this
    /// value would retain at least one entry.
    pub max_estimate: f64,
}

/// Hop workspace: nonnegative values addressed by node, with first-touch
/// order preserved so drains are deterministic.
trait HopMap {
    fn add(&mut self, u: NodeId, v: f64);
    fn get(&self, u: NodeId) -> f64;
    fn zero(&mut self, u: NodeId);
    /// Nodes in first-touch order; entries may have been zeroed since.
    fn touched(&self) -> &[NodeId];
    fn clear(&mut self);
    /// Nonzero entries sorted by node id.
    fn collect_sorted(&self) -> Vec<(NodeId, f64)> {
        let mut out: Vec<(NodeId, f64)> = self
            .touched()
            .iter()
            .filter_map(|&u| {
                let v = self.get(u);
                (v != 0.0).then_some((u, v))
            })
            .collect();
        out.sort_unstable_by_key(|&(u, _)| u);
        out
    }
}

struct DenseHopMap {
    vals: Vec<f64>,
    touched: Vec<NodeId>,
}

impl DenseHopMap {
    fn new(n: usize) -> Self {
        DenseHopMap {
            vals: vec![0.0; n],
            touched: Vec::new(),
        }
    }
}

impl HopMap for DenseHopMap {
    #[inline]
    fn add(&mut self, u: NodeId, v: f64) {
        let slot = &mut self.vals[u as usize];
        if *slot == 0.0 {
            self.touched.push(u);
        }
        *slot += v;
    }
    #[inline]
    fn get(&self, u: NodeId) -> f64 {
        self.vals[u as usize]
    }
    #[inline]
    fn zero(&mut self, u: NodeId) {
        self.vals[u as usize] = 0.0;
    }
    fn touched(&self) -> &[NodeId] {
        &self.touched
    }
    fn clear(&mut self) {
        for &u in &self.touched {
            self.vals[u as usize] = 0.0;
        }
        self.touched.clear();
    }
}

struct SparseHopMap {
    vals: HashMap<NodeId, f64>,
    touched: Vec<NodeId>,
}

impl SparseHopMap {
    fn new() -> Self {
        SparseHopMap {
            vals: HashMap::new(),
            touched: Vec::new(),
        }
    }
}

impl HopMap for SparseHopMap {
    #[inline]
    fn add(&mut self, u: NodeId, v: f64) {
        // Map iteration order is nondeterministic; the touched list records
        // first-touch order and is the only order drains ever use.
        match self.vals.entry(u) {
            std::collections::hash_map::Entry::Occupied(mut e) => *e.get_mut() += v,
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(v);
                self.touched.push(u);
            }
        }
    }
    #[inline]
    fn get(&self, u: NodeId) -> f64 {
        self.vals.get(&u).copied().unwrap_or(0.0)
    }
    #[inline]
    fn zero(&mut self, u: NodeId) {
        if let Some(slot) = self.vals.get_mut(&u) {
            *slot = 0.0;
        }
    }
    fn touched(&self) -> &[NodeId] {
        &self.touched
    }
    fn clear(&mut self) {
        self.vals.clear();
        self.touched.clear();
    }
}

/// Computes the estimate vector for one source. Returns the sorted nonzero
/// estimates and the final push state.
pub fn generalized_push(
    g: &CsrGraph,
    source: NodeId,
    delta: f64,
    s: &Schedule,
) -> Result<(Vec<(NodeId, f64)>, PushState)> {
    generalized_push_inner(g, source, delta, s, None)
}

/// Like [`generalized_push`] but re-checks global mass conservation after
/// every single push, panicking on violation. Test support: quadratic in the
/// touched set, use only on small graphs.
pub fn generalized_push_audited(
    g: &CsrGraph,
    source: NodeId,
    delta: f64,
    s: &Schedule,
) -> Result<(Vec<(NodeId, f64)>, PushState)> {
    generalized_push_inner(g, source, delta, s, Some(1e-10))
}

fn generalized_push_inner(
    g: &CsrGraph,
    source: NodeId,
    delta: f64,
    s: &Schedule,
    audit_tol: Option<f64>,
) -> Result<(Vec<(NodeId, f64)>, PushState)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "push threshold must be in (0, 1), got {delta}"
        )));
    }
    if source as usize >= g.n() {
        return Err(Error::InvalidParameter(format!(
            "source {source} out of range for {} nodes",
            g.n()
        )));
    }
    if g.n() <= DENSE_WORKSPACE_CAP {
        let mut ws = DensePushWorkspace::new(g.n());
        Ok(push_from(g, source, delta, s, &mut ws, audit_tol))
    } else {
        let mut ws = SparsePushWorkspace::new();
        Ok(push_from(g, source, delta, s, &mut ws, audit_tol))
    }
}

/// Reusable per-source buffers, generic over the hop-map backing.
struct PushWorkspace<M> {
    pi: M,
    cur: M,
    next: M,
}

type DensePushWorkspace = PushWorkspace<DenseHopMap>;
type SparsePushWorkspace = PushWorkspace<SparseHopMap>;

impl DensePushWorkspace {
    fn new(n: usize) -> Self {
        PushWorkspace {
            pi: DenseHopMap::new(n),
            cur: DenseHopMap::new(n),
            next: DenseHopMap::new(n),
        }
    }
}

impl SparsePushWorkspace {
    fn new() -> Self {
        PushWorkspace {
            pi: SparseHopMap::new(),
            cur: SparseHopMap::new(),
            next: SparseHopMap::new(),
        }
    }
}

fn push_from<M: HopMap>(
    g: &CsrGraph,
    source: NodeId,
    delta: f64,
    s: &Schedule,
    ws: &mut PushWorkspace<M>,
    audit_tol: Option<f64>,
) -> (Vec<(NodeId, f64)>, PushState) {
    ws.pi.clear();
    ws.cur.clear();
    ws.next.clear();
    ws.cur.add(source, 1.0);

    let hops = s.max_hop() + 1;
    let mut residues: Vec<Vec<(NodeId, f64)>> = Vec::with_capacity(hops + 1);
    let mut pushes = 0u64;

    for k in 0..hops {
        let alpha = s.alpha(k);
        // Pushes at hop k write only to hop k+1, so one in-order pass over
        // the touched list is exactly a FIFO drain of this hop.
        let mut idx = 0;
        while idx < ws.cur.touched().len() {
            let v = ws.cur.touched()[idx];
            idx += 1;
            let r = ws.cur.get(v);
            if r <= 0.0 {
                continue;
            }
            let deg = g.out_degree(v);
            // Strict guard; for dangling nodes it degenerates to r > 0.
            if r <= delta * deg as f64 {
                continue;
            }
            pushes += 1;
            if deg == 0 {
                // Absorbing: stranded mass stops here whole.
                ws.pi.add(v, r);
            } else {
                ws.pi.add(v, alpha * r);
                let w = (1.0 - alpha) * r / deg as f64;
                for &u in g.neighbors(v) {
                    ws.next.add(u, w);
                }
            }
            ws.cur.zero(v);
            if let Some(tol) = audit_tol {
                audit_mass(ws, &residues, tol);
            }
        }
        residues.push(ws.cur.collect_sorted());
        std::mem::swap(&mut ws.cur, &mut ws.next);
        ws.next.clear();
    }
    // Whatever flowed past the final hop is parked, never pushed.
    let parked = ws.cur.collect_sorted();
    let discarded_mass = parked.iter().map(|&(_, r)| r).sum();
    residues.push(parked);

    let estimates = ws.pi.collect_sorted();
    (
        estimates,
        PushState {
            residues,
            pushes,
            discarded_mass,
        },
    )
}

/// Recomputes total mass (estimates + live hops + committed residues) and
/// asserts it is 1 within `tol`.
fn audit_mass<M: HopMap>(ws: &PushWorkspace<M>, committed: &[Vec<(NodeId, f64)>], tol: f64) {
    let live: f64 = ws
        .pi
        .touched()
        .iter()
        .map(|&u| ws.pi.get(u))
        .chain(ws.cur.touched().iter().map(|&u| ws.cur.get(u)))
        .chain(ws.next.touched().iter().map(|&u| ws.next.get(u)))
        .sum();
    let done: f64 = committed
        .iter()
        .map(|hop| hop.iter().map(|&(_, r)| r).sum::<f64>())
        .sum();
    let total = live + done;
    assert!(
        (total - 1.0).abs() <= tol,
        "mass conservation violated: total {total} deviates from 1 by {}",
        (total - 1.0).abs()
    );
}

/// Runs [`generalized_push`] for every source and stacks the estimate vectors
/// into a sparse matrix (row `u` = estimates of source `u`, unthresholded).
pub fn push_all_sources(g: &CsrGraph, delta: f64, s: &Schedule) -> Result<SparseRowMatrix> {
    push_all_sources_with_stats(g, delta, s).map(|(m, _)| m)
}

/// Whole-graph sweep with aggregate statistics. Rows are computed
/// independently (work-stealing over sources); output is bit-identical for
/// any thread count.
pub fn push_all_sources_with_stats(
    g: &CsrGraph,
    delta: f64,
    s: &Schedule,
) -> Result<(SparseRowMatrix, PushStats)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "push threshold must be in (0, 1), got {delta}"
        )));
    }
    let n = g.n();
    let results: Vec<(Vec<(NodeId, f64)>, u64)> = if n <= DENSE_WORKSPACE_CAP {
        (0..n as NodeId)
            .into_par_iter()
            .map_init(
                || DensePushWorkspace::new(n),
                |ws, u| {
                    let (row, state) = push_from(g, u, delta, s, ws, None);
                    (row, state.pushes)
                },
            )
            .collect()
    } else {
        (0..n as NodeId)
            .into_par_iter()
            .map_init(SparsePushWorkspace::new, |ws, u| {
                let (row, state) = push_from(g, u, delta, s, ws, None);
                (row, state.pushes)
            })
            .collect()
    };
    let total_pushes = results.iter().map(|(_, p)| p).sum();
    let max_estimate = results
        .iter()
        .flat_map(|(row, _)| row.iter().map(|&(_, v)| v))
        .fold(0.0f64, f64::max);
    let rows: Vec<Vec<(NodeId, f64)>> = results.into_iter().map(|(row, _)| row).collect();
    let matrix = SparseRowMatrix::from_rows(n, n, rows)?;
    Ok((
        matrix,
        PushStats {
            total_pushes,
            max_estimate,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_for;
    use crate::sppr::exact::exact_sppr;
    use crate::test_support::random_graph_no_dangling;
    use rand::Rng;

    fn path_graph() -> CsrGraph {
        CsrGraph::from_edges(3, &[(0, 1), (1, 2)], false).unwrap()
    }

    #[test]
    fn guard_blocks_everything_when_delta_large() {
        // Source with out-degree 2 and delta = 0.5: the unit residue fails
        // the strict guard 1 > 0.5·2, so nothing at all happens.
        let g = path_graph();
        let s = Schedule::new(vec![0.5, 0.5, 1.0]).unwrap();
        let (pi, state) = generalized_push(&g, 1, 0.5, &s).unwrap();
        assert!(pi.is_empty());
        assert_eq!(state.pushes, 0);
        assert_eq!(state.residues[0], vec![(1, 1.0)]);
        assert!(state.residues[1..].iter().all(|h| h.is_empty()));
    }

    #[test]
    fn tiny_delta_matches_exact_row_within_error_bound() {
        let g = path_graph();
        let s = Schedule::new(vec![0.5, 0.5, 1.0]).unwrap();
        let delta = 1e-6;
        let exact = exact_sppr(&g, &s).unwrap();
        for source in 0..3u32 {
            let (pi, _) = generalized_push(&g, source, delta, &s).unwrap();
            let mut dense = [0.0f64; 3];
            for (u, v) in pi {
                dense[u as usize] = v;
            }
            for j in 0..3 {
                let err = (dense[j] - exact[[source as usize, j]]).abs();
                let bound = delta * s.max_hop() as f64 * g.out_degree(j as u32) as f64;
                assert!(err <= bound, "source {source} node {j}: err {err} > bound {bound}");
            }
        }
    }

    #[test]
    fn push_count_within_theoretical_bound() {
        let mut rng = rng_for(31, "test", 0);
        let g = random_graph_no_dangling(200, 800, &mut rng);
        let s = crate::schedule::init_schedule(
            crate::schedule::InitDist::Geometric { alpha: 0.2 },
            15,
        )
        .unwrap();
        for delta in [1e-2, 1e-3, 1e-4] {
            let (_, state) = generalized_push(&g, 0, delta, &s).unwrap();
            let bound = 1.0 / (s.alpha_min() * delta);
            assert!(
                (state.pushes as f64) <= bound,
                "delta {delta}: {} pushes > bound {bound}",
                state.pushes
            );
        }
    }

    #[test]
    fn every_push_conserves_mass_with_dangling_nodes() {
        // Random directed graph; roughly a third of the nodes dangling.
        let mut rng = rng_for(32, "test", 0);
        let mut edges = Vec::new();
        for _ in 0..240 {
            let u = rng.random_range(0..60u32);
            let v = rng.random_range(0..60u32);
            if u < 40 {
                edges.push((u, v));
            }
        }
        let g = CsrGraph::from_edges(60, &edges, true).unwrap();
        let s = Schedule::new(vec![0.3; 7]).unwrap();
        for source in [0u32, 10, 39] {
            let (pi, state) = generalized_push_audited(&g, source, 1e-4, &s).unwrap();
            let total: f64 =
                pi.iter().map(|&(_, v)| v).sum::<f64>() + state.total_residue();
            assert!((total - 1.0).abs() < 1e-10, "source {source}: total {total}");
        }
    }

    #[test]
    fn estimates_underestimate_and_residue_bounds_the_gap() {
        let mut rng = rng_for(33, "test", 1);
        let mut edges = Vec::new();
        for u in 0..80u32 {
            for _ in 0..3 {
                let v = rng.random_range(0..80u32);
                if v != u {
                    edges.push((u, v));
                }
            }
        }
        let g = CsrGraph::from_edges(80, &edges, false).unwrap();
        let s = Schedule::new(vec![0.25; 11]).unwrap();
        let exact = exact_sppr(&g, &s).unwrap();
        let source = 5u32;
        let (pi, state) = generalized_push(&g, source, 1e-3, &s).unwrap();
        let residue_total = state.total_residue();
        let mut dense = vec![0.0f64; 80];
        for (u, v) in pi {
            dense[u as usize] = v;
        }
        for j in 0..80 {
            let truth = exact[[source as usize, j]];
            assert!(
                dense[j] <= truth + 1e-12,
                "node {j}: estimate {} exceeds exact value {truth}",
                dense[j]
            );
            assert!(
                truth <= dense[j] + residue_total + 1e-12,
                "node {j}: exact {truth} beyond estimate + residue {}",
                dense[j] + residue_total
            );
        }
    }

    #[test]
    fn mass_parked_past_final_hop_is_tracked() {
        // Ring of 4, two hops, tiny delta: plenty of mass flows past hop 1.
        let g = CsrGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], false).unwrap();
        let s = Schedule::new(vec![0.5, 0.5]).unwrap();
        let (pi, state) = generalized_push(&g, 0, 1e-9, &s).unwrap();
        assert!(state.discarded_mass > 0.0);
        let total: f64 = pi.iter().map(|&(_, v)| v).sum::<f64>() + state.total_residue();
        assert!((total - 1.0).abs() < 1e-12);
        // Survival through both hops is 0.25; all of it gets parked because
        // delta is far below every residue.
        assert!((state.discarded_mass - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dense_and_sparse_workspaces_agree() {
        let mut rng = rng_for(34, "test", 2);
        let g = random_graph_no_dangling(120, 480, &mut rng);
        let s = Schedule::new(vec![0.2; 9]).unwrap();
        for source in [0u32, 60, 119] {
            let mut dense_ws = DensePushWorkspace::new(g.n());
            let mut sparse_ws = SparsePushWorkspace::new();
            let (pi_d, st_d) = push_from(&g, source, 1e-4, &s, &mut dense_ws, None);
            let (pi_s, st_s) = push_from(&g, source, 1e-4, &s, &mut sparse_ws, None);
            assert_eq!(pi_d, pi_s, "estimates must agree bit-for-bit");
            assert_eq!(st_d.pushes, st_s.pushes);
            assert_eq!(st_d.residues, st_s.residues);
        }
    }

    #[test]
    fn all_sources_rows_match_single_source_calls() {
        let mut rng = rng_for(35, "test", 3);
        let g = random_graph_no_dangling(50, 200, &mut rng);
        let s = Schedule::new(vec![0.3; 6]).unwrap();
        let (matrix, stats) = push_all_sources_with_stats(&g, 1e-3, &s).unwrap();
        let mut expected_pushes = 0u64;
        for u in 0..50u32 {
            let (pi, state) = generalized_push(&g, u, 1e-3, &s).unwrap();
            assert_eq!(matrix.row(u as usize), pi.as_slice(), "row {u}");
            expected_pushes += state.pushes;
        }
        assert_eq!(stats.total_pushes, expected_pushes);
        assert!(stats.max_estimate > 0.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let g = path_graph();
        let s = Schedule::new(vec![0.5, 0.5]).unwrap();
        assert!(generalized_push(&g, 0, 0.0, &s).is_err());
        assert!(generalized_push(&g, 0, 1.0, &s).is_err());
        assert!(generalized_push(&g, 7, 0.5, &s).is_err());
    }
}
