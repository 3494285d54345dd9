//! Graph ingestion and sampling.
//!
//! Directed graphs in compressed sparse row form. The CSR structure doubles as
//! the random-walk transition operator: row `u` assigns probability
//! `1/out_degree(u)` to each stored neighbor. Nodes without out-edges
//! ("dangling" nodes) are absorbing for every walk-based computation
//! downstream: mass that arrives there stops immediately.
//!
//! Also home to the two sampling operations the rest of the toolkit builds on:
//! BFS subgraph sampling (training works on induced subgraphs) and the
//! hide-edges split used by link-prediction evaluation.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Node identifier. Dense, 0-based.
pub type NodeId = u32;

/// Immutable directed graph in CSR form.
///
/// For `directed=false` the edge multiset is symmetric: each undirected edge
/// is stored in both directions and `m()` counts both. Within each row the
/// neighbor list is strictly increasing, so there are no parallel edges.
#[derive(Debug, Clone)]
pub struct CsrGraph {
    n: usize,
    directed: bool,
    row_offsets: Vec<usize>,
    col_indices: Vec<NodeId>,
}

impl CsrGraph {
    /// Builds a graph from an edge list over nodes `0..n`.
    ///
    /// Duplicate edges are collapsed; self-loops are kept. When
    /// `directed=false` each input pair is stored in both directions.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)], directed: bool) -> Result<CsrGraph> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph must have at least one node".into()));
        }
        if n > NodeId::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "node count {n} exceeds the 32-bit id space"
            )));
        }
        let mut all: Vec<(NodeId, NodeId)> = Vec::with_capacity(if directed {
            edges.len()
        } else {
            2 * edges.len()
        });
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            all.push((u, v));
            if !directed && u != v {
                all.push((v, u));
            }
        }
        all.sort_unstable();
        all.dedup();

        let mut row_offsets = vec![0usize; n + 1];
        for &(u, _) in &all {
            row_offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = all.into_iter().map(|(_, v)| v).collect();
        Ok(CsrGraph {
            n,
            directed,
            row_offsets,
            col_indices,
        })
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored directed edges (counts both directions when
    /// `directed=false`).
    pub fn m(&self) -> usize {
        self.col_indices.len()
    }

    /// Whether the graph was built as directed.
    pub fn directed(&self) -> bool {
        self.directed
    }

    /// Number of undirected edges: unordered pairs, self-loops counted once.
    /// For directed graphs this is simply `m()`.
    pub fn undirected_edge_count(&self) -> usize {
        if self.directed {
            return self.m();
        }
        let loops = (0..self.n as NodeId).filter(|&u| self.has_edge(u, u)).count();
        (self.m() - loops) / 2 + loops
    }

    /// Out-degree of `u`.
    #[inline]
    pub fn out_degree(&self, u: NodeId) -> usize {
        self.row_offsets[u as usize + 1] - self.row_offsets[u as usize]
    }

    /// True when `u` has no out-edges (absorbing for walks).
    #[inline]
    pub fn is_dangling(&self, u: NodeId) -> bool {
        self.out_degree(u) == 0
    }

    /// Sorted out-neighbor list of `u`.
    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.col_indices[self.row_offsets[u as usize]..self.row_offsets[u as usize + 1]]
    }

    /// Whether the directed edge (u, v) is stored.
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Iterates all stored directed edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.n as NodeId).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Reversed graph: (u, v) is an edge of the result iff (v, u) is an edge
    /// of `self`. Node count and edge count are preserved.
    pub fn transpose(&self) -> CsrGraph {
        let mut row_offsets = vec![0usize; self.n + 1];
        for &v in &self.col_indices {
            row_offsets[v as usize + 1] += 1;
        }
        for i in 0..self.n {
            row_offsets[i + 1] += row_offsets[i];
        }
        let mut cursor = row_offsets.clone();
        let mut col_indices = vec![0 as NodeId; self.m()];
        // Source rows are visited in increasing order, so each transposed row
        // is filled with increasing column ids and stays sorted.
        for u in 0..self.n as NodeId {
            for &v in self.neighbors(u) {
                col_indices[cursor[v as usize]] = u;
                cursor[v as usize] += 1;
            }
        }
        CsrGraph {
            n: self.n,
            directed: self.directed,
            row_offsets,
            col_indices,
        }
    }
}

/// Reads an edge list: one "u v" pair per line, `#`/`%` comment lines, blank
/// lines ignored. Nodes are `0..max_id+1`; ids absent from the file become
/// isolated (dangling) nodes so the file's id space survives label joins.
pub fn load_edge_list(path: &Path, directed: bool) -> Result<CsrGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut max_id: Option<NodeId> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let lineno = idx + 1;
        let mut parts = trimmed.split_whitespace();
        let (u, v) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => {
                let u: NodeId = a.parse().map_err(|_| {
                    Error::parse(path, lineno, format!("invalid node id {a:?}"))
                })?;
                let v: NodeId = b.parse().map_err(|_| {
                    Error::parse(path, lineno, format!("invalid node id {b:?}"))
                })?;
                (u, v)
            }
            _ => {
                return Err(Error::parse(
                    path,
                    lineno,
                    "expected exactly two whitespace-separated node ids",
                ))
            }
        };
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let Some(max_id) = max_id else {
        return Err(Error::parse(path, 0, "no edges found"));
    };
    CsrGraph::from_edges(max_id as usize + 1, &edges, directed)
}

/// Writes the edge list back to text. Undirected graphs are written one line
/// per unordered pair, so `load_edge_list(write_edge_list(g))` reproduces the
/// edge multiset (isolated trailing nodes are not representable in this
/// format; use the binary cache to preserve them).
pub fn write_edge_list(g: &CsrGraph, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (u, v) in g.edges() {
        if !g.directed() && v < u {
            continue; // mirror of an already-written pair
        }
        writeln!(w, "{u} {v}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Magic prefix of the binary graph cache.
const CACHE_MAGIC: &[u8; 6] = b"SPPRG1";

/// Writes the binary cache: magic, little-endian u64 `n` and `m`, the n+1
/// row offsets, then the m column indices (all u64). Unlike the text format
/// this preserves isolated nodes exactly.
pub fn write_binary_cache(g: &CsrGraph, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(CACHE_MAGIC)?;
    put(&(g.n as u64).to_le_bytes())?;
    put(&(g.m() as u64).to_le_bytes())?;
    for &off in &g.row_offsets {
        put(&(off as u64).to_le_bytes())?;
    }
    for &c in &g.col_indices {
        put(&(c as u64).to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a binary cache written by [`write_binary_cache`]. The format carries
/// no directedness flag, so the caller must say how the edges are meant to be
/// interpreted; for `directed=false` the stored multiset is verified to be
/// symmetric.
pub fn read_binary_cache(path: &Path, directed: bool) -> Result<CsrGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != CACHE_MAGIC {
        return Err(Error::parse(path, 0, "bad magic: not a graph cache file"));
    }
    let mut u64_buf = [0u8; 8];
    let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut u64_buf).map_err(|e| Error::io(path, e))?;
        Ok(u64::from_le_bytes(u64_buf))
    };
    let n = read_u64(&mut r)? as usize;
    let m = read_u64(&mut r)? as usize;
    if n == 0 || n > NodeId::MAX as usize {
        return Err(Error::parse(path, 0, format!("invalid node count {n}")));
    }
    let mut row_offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        row_offsets.push(read_u64(&mut r)? as usize);
    }
    let mut col_indices = Vec::with_capacity(m);
    for _ in 0..m {
        let c = read_u64(&mut r)?;
        if c >= n as u64 {
            return Err(Error::parse(path, 0, format!("column index {c} out of range")));
        }
        col_indices.push(c as NodeId);
    }
    if row_offsets[0] != 0 || row_offsets[n] != m {
        return Err(Error::parse(path, 0, "offset array does not span the index array"));
    }
    for i in 0..n {
        if row_offsets[i] > row_offsets[i + 1] {
            return Err(Error::parse(path, 0, "offsets not nondecreasing"));
        }
        let row = &col_indices[row_offsets[i]..row_offsets[i + 1]];
        if row.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parse(path, 0, format!("row {i} not strictly increasing")));
        }
    }
    let g = CsrGraph {
        n,
        directed,
        row_offsets,
        col_indices,
    };
    if !directed {
        for (u, v) in g.edges() {
            if !g.has_edge(v, u) {
                return Err(Error::parse(
                    path,
                    0,
                    format!("edge ({u}, {v}) has no mirror but directed=false was requested"),
                ));
            }
        }
    }
    Ok(g)
}

/// Identity bookkeeping for an induced subgraph.
#[derive(Debug, Clone)]
pub struct NodeMapping {
    sub_to_orig: Vec<NodeId>,
    orig_to_sub: HashMap<NodeId, NodeId>,
}

impl NodeMapping {
    fn new(sub_to_orig: Vec<NodeId>) -> NodeMapping {
        let orig_to_sub = sub_to_orig
            .iter()
            .enumerate()
            .map(|(i, &orig)| (orig, i as NodeId))
            .collect();
        NodeMapping {
            sub_to_orig,
            orig_to_sub,
        }
    }

    /// Subgraph size.
    pub fn len(&self) -> usize {
        self.sub_to_orig.len()
    }

    /// True when the mapping is empty (never produced by the sampler).
    pub fn is_empty(&self) -> bool {
        self.sub_to_orig.is_empty()
    }

    /// Original id of subgraph node `sub`.
    pub fn to_orig(&self, sub: NodeId) -> NodeId {
        self.sub_to_orig[sub as usize]
    }

    /// Subgraph id of original node `orig`, if sampled.
    pub fn to_sub(&self, orig: NodeId) -> Option<NodeId> {
        self.orig_to_sub.get(&orig).copied()
    }

    /// The sampled original ids, in subgraph-id order (ascending).
    pub fn sub_to_orig(&self) -> &[NodeId] {
        &self.sub_to_orig
    }
}

/// Samples `min(n_s, g.n)` nodes by repeated BFS and returns the induced
/// subgraph plus the id mapping.
///
/// A uniform-random unvisited source starts a BFS over out-edges; when the
/// queue exhausts before the quota is met, a fresh random source is drawn.
/// Traversal stops the moment the quota is reached, so the sample hugs the
/// locality of the last BFS frontier. Sampled nodes are relabeled `0..n_s`
/// in ascending original-id order.
pub fn sample_bfs_subgraph(
    g: &CsrGraph,
    n_s: usize,
    rng: &mut ChaCha12Rng,
) -> Result<(CsrGraph, NodeMapping)> {
    if n_s == 0 {
        return Err(Error::InvalidParameter("subgraph size must be at least 1".into()));
    }
    let target = n_s.min(g.n());

    // One shuffled scan order gives every restart a uniform-random unvisited
    // source: the relative order of still-unvisited nodes in a uniform
    // permutation is itself uniform.
    let mut scan: Vec<NodeId> = (0..g.n() as NodeId).collect();
    scan.shuffle(rng);

    let mut visited = vec![false; g.n()];
    let mut selected: Vec<NodeId> = Vec::with_capacity(target);
    let mut queue = std::collections::VecDeque::new();
    let mut scan_pos = 0usize;

    'outer: while selected.len() < target {
        while visited[scan[scan_pos] as usize] {
            scan_pos += 1;
        }
        let source = scan[scan_pos];
        visited[source as usize] = true;
        selected.push(source);
        if selected.len() == target {
            break;
        }
        queue.clear();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if !visited[v as usize] {
                    visited[v as usize] = true;
                    selected.push(v);
                    queue.push_back(v);
                    if selected.len() == target {
                        break 'outer;
                    }
                }
            }
        }
    }

    selected.sort_unstable();
    let mapping = NodeMapping::new(selected);
    let mut sub_edges: Vec<(NodeId, NodeId)> = Vec::new();
    for (sub_u, &orig_u) in mapping.sub_to_orig().iter().enumerate() {
        for &orig_v in g.neighbors(orig_u) {
            if let Some(sub_v) = mapping.to_sub(orig_v) {
                sub_edges.push((sub_u as NodeId, sub_v));
            }
        }
    }
    // The induced edge set of a symmetric multiset is symmetric, so the
    // directedness flag carries over unchanged.
    let sub = CsrGraph::from_edges(target, &sub_edges, g.directed())?;
    Ok((sub, mapping))
}

/// Train/test material for link prediction: the graph with test edges
/// removed, the removed (positive) pairs, and an equal number of sampled
/// non-edges (negative pairs).
#[derive(Debug, Clone)]
pub struct EdgeSplit {
    pub train_graph: CsrGraph,
    pub test_pos: Vec<(NodeId, NodeId)>,
    pub test_neg: Vec<(NodeId, NodeId)>,
}

/// Hides `floor(ratio · edge_count)` edges uniformly at random and samples an
/// equal number of non-edges of the ORIGINAL graph as negatives.
///
/// For undirected graphs both directions of a hidden edge are removed
/// together and pairs are reported as (min, max). Negative pairs always have
/// distinct endpoints. Sampling is rejection-based; pathologically dense
/// graphs where non-edges are too rare to find within the attempt budget
/// produce an error.
pub fn remove_edges_split(g: &CsrGraph, ratio: f64, rng: &mut ChaCha12Rng) -> Result<EdgeSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "hide ratio must be in (0, 1), got {ratio}"
        )));
    }
    let mut candidates: Vec<(NodeId, NodeId)> = if g.directed() {
        g.edges().collect()
    } else {
        g.edges().filter(|&(u, v)| u <= v).collect()
    };
    let hide = ((candidates.len() as f64) * ratio).floor() as usize;
    if hide == 0 {
        return Err(Error::InvalidParameter(format!(
            "ratio {ratio} hides zero of the {} edges",
            candidates.len()
        )));
    }
    // Partial Fisher–Yates: after the loop the first `hide` slots are a
    // uniform sample without replacement.
    for i in 0..hide {
        let j = rng.random_range(i..candidates.len());
        candidates.swap(i, j);
    }
    let test_pos: Vec<(NodeId, NodeId)> = candidates[..hide].to_vec();
    let kept = &candidates[hide..];

    let mut test_neg: Vec<(NodeId, NodeId)> = Vec::with_capacity(hide);
    let mut seen = std::collections::HashSet::new();
    let budget = 100 * hide + 1000;
    let mut attempts = 0usize;
    while test_neg.len() < hide {
        attempts += 1;
        if attempts > budget {
            return Err(Error::Numerical(format!(
                "could not sample {hide} non-edges within {budget} attempts; graph too dense"
            )));
        }
        let a = rng.random_range(0..g.n() as NodeId);
        let b = rng.random_range(0..g.n() as NodeId);
        if a == b {
            continue;
        }
        let pair = if g.directed() || a < b { (a, b) } else { (b, a) };
        if g.has_edge(pair.0, pair.1) || !seen.insert(pair) {
            continue;
        }
        test_neg.push(pair);
    }

    let train_graph = CsrGraph::from_edges(g.n(), kept, g.directed())?;
    Ok(EdgeSplit {
        train_graph,
        test_pos,
        test_neg,
    })
}
