//! Sparse proximity assembly and the log transform.
//!
//! The proximity of a node pair combines walks in both directions:
//! `S(u,v) = pi_u(v) + pi^T_v(u)`, where the first term comes from pushes on
//! the input graph and the second from pushes on its transpose. Entries must
//! clear the push threshold `delta` strictly to be retained, which guarantees
//! the subsequent elementwise transform `M = ln(S/delta)` is strictly
//! positive on every stored entry. `M` is what gets factorized.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, NodeId};
use crate::schedule::Schedule;
use crate::sppr::push::push_all_sources_with_stats;

/// Row-indexed sparse real matrix with sorted columns per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRowMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<(NodeId, f64)>>,
}

impl SparseRowMatrix {
    /// Wraps per-row `(col, value)` lists, validating sortedness and bounds.
    pub fn from_rows(
        n_rows: usize,
        n_cols: usize,
        rows: Vec<Vec<(NodeId, f64)>>,
    ) -> Result<SparseRowMatrix> {
        if rows.len() != n_rows {
            return Err(Error::InvalidParameter(format!(
                "expected {n_rows} rows, got {}",
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            for &(c, v) in row {
                if c as usize >= n_cols {
                    return Err(Error::InvalidParameter(format!(
                        "column {c} out of range in row {i}"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "non-finite value at ({i}, {c})"
                    )));
                }
            }
            if row.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::InvalidParameter(format!(
                    "row {i} columns not strictly increasing"
                )));
            }
        }
        Ok(SparseRowMatrix {
            n_rows,
            n_cols,
            rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Stored entry count.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Sorted `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> &[(NodeId, f64)] {
        &self.rows[i]
    }

    /// Iterates all entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, NodeId, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(c, v)| (i, c, v)))
    }

    /// Column-major mirror of the matrix (used for products with the
    /// transpose).
    pub fn transposed(&self) -> SparseRowMatrix {
        let mut rows: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); self.n_cols];
        // Row-major traversal appends increasing row ids per target column,
        // so the transposed rows come out sorted.
        for (i, c, v) in self.entries() {
            rows[c as usize].push((i as NodeId, v));
        }
        SparseRowMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            rows,
        }
    }

    /// Frobenius norm of the stored entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|(_, _, v)| v * v).sum::<f64>().sqrt()
    }

    /// Densifies (test/oracle use; guard by size).
    pub fn to_dense(&self) -> ndarray::Array2<f64> {
        let mut out = ndarray::Array2::zeros((self.n_rows, self.n_cols));
        for (i, c, v) in self.entries() {
            out[[i, c as usize]] = v;
        }
        out
    }
}

/// Assembly statistics alongside the matrix itself.
#[derive(Debug, Clone, Copy)]
pub struct ProximityStats {
    /// Largest raw estimate seen before thresholding, over both passes.
    /// When assembly retains nothing, any `delta` below this value would
    /// retain at least one entry.
    pub max_estimate: f64,
    /// Total pushes over both passes.
    pub total_pushes: u64,
}

/// Builds the thresholded proximity matrix from two push sweeps: one on the
/// graph, one on its transpose. An estimate contributes only if strictly
/// greater than `delta`; ties at exactly `delta` are dropped. Both passes run
/// even for undirected graphs (the code path is uniform; the two passes then
/// agree and every stored entry is the sum of both directions).
pub fn assemble_proximity(g: &CsrGraph, delta: f64, s: &Schedule) -> Result<SparseRowMatrix> {
    assemble_proximity_with_stats(g, delta, s).map(|(m, _)| m)
}

/// [`assemble_proximity`] plus sweep statistics.
pub fn assemble_proximity_with_stats(
    g: &CsrGraph,
    delta: f64,
    s: &Schedule,
) -> Result<(SparseRowMatrix, ProximityStats)> {
    let (forward, f_stats) = push_all_sources_with_stats(g, delta, s)?;
    let transpose = g.transpose();
    let (backward, b_stats) = push_all_sources_with_stats(&transpose, delta, s)?;

    let n = g.n();
    let mut rows: Vec<Vec<(NodeId, f64)>> = Vec::with_capacity(n);
    // Forward pass: estimates of source u land in row u. Transpose pass:
    // estimates of source v land in column v, i.e. backward row v
    // contributes (u, v) entries — exactly the rows of its transpose.
    let backward_t = backward.transposed();
    for u in 0..n {
        let fwd = forward.row(u).iter().filter(|&&(_, val)| val > delta);
        let bwd = backward_t.row(u).iter().filter(|&&(_, val)| val > delta);
        // Merge two sorted streams, summing entries that collide.
        let mut merged: Vec<(NodeId, f64)> = Vec::new();
        let mut fwd = fwd.peekable();
        let mut bwd = bwd.peekable();
        loop {
            match (fwd.peek(), bwd.peek()) {
                (Some(&&(cf, vf)), Some(&&(cb, vb))) => {
                    if cf < cb {
                        merged.push((cf, vf));
                        fwd.next();
                    } else if cb < cf {
                        merged.push((cb, vb));
                        bwd.next();
                    } else {
                        merged.push((cf, vf + vb));
                        fwd.next();
                        bwd.next();
                    }
                }
                (Some(&&(cf, vf)), None) => {
                    merged.push((cf, vf));
                    fwd.next();
                }
                (None, Some(&&(cb, vb))) => {
                    merged.push((cb, vb));
                    bwd.next();
                }
                (None, None) => break,
            }
        }
        rows.push(merged);
    }
    let matrix = SparseRowMatrix::from_rows(n, n, rows)?;
    Ok((
        matrix,
        ProximityStats {
            max_estimate: f_stats.max_estimate.max(b_stats.max_estimate),
            total_pushes: f_stats.total_pushes + b_stats.total_pushes,
        },
    ))
}

/// Replaces every stored value by `ln(value/delta)`. All inputs must exceed
/// `delta` (assembly's strict threshold guarantees this), so all outputs are
/// strictly positive; the sparsity pattern is untouched.
pub fn log_transform(s: &SparseRowMatrix, delta: f64) -> Result<SparseRowMatrix> {
    let mut rows = Vec::with_capacity(s.n_rows());
    for i in 0..s.n_rows() {
        let mut row = Vec::with_capacity(s.row(i).len());
        for &(c, v) in s.row(i) {
            if v <= delta {
                return Err(Error::Internal(format!(
                    "log transform fed a value {v} ≤ delta {delta} at ({i}, {c})"
                )));
            }
            row.push((c, (v / delta).ln()));
        }
        rows.push(row);
    }
    SparseRowMatrix::from_rows(s.n_rows(), s.n_cols(), rows)
}

/// Writes the matrix as MatrixMarket coordinate text (1-based indices).
pub fn write_matrix_market(m: &SparseRowMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "%%MatrixMarket matrix coordinate real general").map_err(|e| Error::io(path, e))?;
    writeln!(w, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz()).map_err(|e| Error::io(path, e))?;
    for (i, c, v) in m.entries() {
        writeln!(w, "{} {} {v:.16e}", i + 1, c as usize + 1).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a matrix written by [`write_matrix_market`].
pub fn read_matrix_market(path: &Path) -> Result<SparseRowMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 0, "empty matrix file"))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    if !header.starts_with("%%MatrixMarket") {
        return Err(Error::parse(path, 1, "missing MatrixMarket header"));
    }
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triples: Vec<(usize, NodeId, f64)> = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let lineno = idx + 1;
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if dims.is_none() {
            if parts.len() != 3 {
                return Err(Error::parse(path, lineno, "expected \"rows cols nnz\""));
            }
            let r = parts[0].parse().map_err(|_| Error::parse(path, lineno, "bad row count"))?;
            let c = parts[1].parse().map_err(|_| Error::parse(path, lineno, "bad col count"))?;
            let z = parts[2].parse().map_err(|_| Error::parse(path, lineno, "bad nnz"))?;
            dims = Some((r, c, z));
            continue;
        }
        if parts.len() != 3 {
            return Err(Error::parse(path, lineno, "expected \"row col value\""));
        }
        let i: usize = parts[0].parse().map_err(|_| Error::parse(path, lineno, "bad row"))?;
        let c: usize = parts[1].parse().map_err(|_| Error::parse(path, lineno, "bad col"))?;
        let v: f64 = parts[2].parse().map_err(|_| Error::parse(path, lineno, "bad value"))?;
        if i == 0 || c == 0 {
            return Err(Error::parse(path, lineno, "indices are 1-based"));
        }
        triples.push((i - 1, (c - 1) as NodeId, v));
    }
    let Some((n_rows, n_cols, nnz)) = dims else {
        return Err(Error::parse(path, 0, "missing dimension line"));
    };
    if triples.len() != nnz {
        return Err(Error::parse(
            path,
            0,
            format!("expected {nnz} entries, found {}", triples.len()),
        ));
    }
    triples.sort_unstable_by_key(|&(i, c, _)| (i, c));
    let mut rows: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n_rows];
    for (i, c, v) in triples {
        if i >= n_rows {
            return Err(Error::parse(path, 0, format!("row {} out of range", i + 1)));
        }
        rows[i].push((c, v));
    }
    SparseRowMatrix::from_rows(n_rows, n_cols, rows)
}
