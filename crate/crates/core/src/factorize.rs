//! SVD backends and embedding extraction.
//!
//! Two backends produce the same `SvdTriple` contract: [`dense_svd`] is exact
//! (LAPACK divide-and-conquer; used for training subgraphs and as the quality
//! oracle) and [`randomized_sparse_svd`] is a seeded randomized range finder
//! that touches the matrix only through sparse products (used for
//! whole-graph embedding). Embeddings are the singular triple with the
//! spectrum split evenly across both sides: `X = U·sqrt(Σ)`, `Y = V·sqrt(Σ)`,
//! so `X·Yᵀ` reproduces the rank-d approximation.
//!
//! Sign convention: a singular column pair is flipped so that the entry of
//! largest magnitude in the `U` column is positive (first such entry on
//! ties). SVD signs are otherwise arbitrary, and downstream consumers (the
//! classification loss, test oracles) need decompositions to be comparable.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{JobSvd, SVDDC};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::proximity::SparseRowMatrix;
use crate::seeding::rng_for;

/// Rank-d singular triple: `U` (n_rows×d), nonincreasing `sigma` (d), `V`
/// (n_cols×d). Columns of `U` and `V` are orthonormal within backend
/// tolerance (1e-8 dense, 1e-6 randomized).
#[derive(Debug, Clone)]
pub struct SvdTriple {
    pub u: Array2<f64>,
    pub sigma: Array1<f64>,
    pub v: Array2<f64>,
}

/// The two embedding matrices. Row `u` of `x` scores outgoing proximity,
/// row `v` of `y` incoming; the model's score for a pair is `x_u · y_v`.
#[derive(Debug, Clone)]
pub struct EmbeddingPair {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
}

impl EmbeddingPair {
    /// Embedding dimension.
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Node count.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }
}

/// Flips each `U`/`V` column pair so the largest-magnitude entry of the `U`
/// column is positive. Ties take the first such entry; all-zero columns are
/// left alone.
pub(crate) fn canonicalize_signs(u: &mut Array2<f64>, v: &mut Array2<f64>) {
    let cols = u.ncols().min(v.ncols());
    for j in 0..cols {
        let col = u.column(j);
        let mut best = 0.0f64;
        let mut best_val = 0.0f64;
        for &x in col.iter() {
            if x.abs() > best {
                best = x.abs();
                best_val = x;
            }
        }
        if best_val < 0.0 {
            u.column_mut(j).mapv_inplace(|x| -x);
            v.column_mut(j).mapv_inplace(|x| -x);
        }
    }
}

/// Full SVD of a dense matrix: `U` (r×k), `sigma` (k), `V` (c×k) with
/// k = min(r, c), signs canonicalized. The factorization the training
/// backward pass differentiates through.
pub fn dense_svd_full(m: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (u, sigma, vt) = m
        .svddc(JobSvd::Some)
        .map_err(|e| Error::Numerical(format!("dense SVD failed: {e}")))?;
    let u = u.ok_or_else(|| Error::Internal("SVD returned no left vectors".into()))?;
    let vt = vt.ok_or_else(|| Error::Internal("SVD returned no right vectors".into()))?;
    let mut u = u;
    let mut v = vt.t().to_owned();
    canonicalize_signs(&mut u, &mut v);
    Ok((u, sigma, v))
}

/// Top-d singular triple of a dense matrix.
pub fn dense_svd(m: &Array2<f64>, d: usize) -> Result<SvdTriple> {
    let k = m.nrows().min(m.ncols());
    if d == 0 || d > k {
        return Err(Error::InvalidParameter(format!(
            "rank {d} out of range for a {}×{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let (u, sigma, v) = dense_svd_full(m)?;
    Ok(SvdTriple {
        u: u.slice(ndarray::s![.., ..d]).to_owned(),
        sigma: sigma.slice(ndarray::s![..d]).to_owned(),
        v: v.slice(ndarray::s![.., ..d]).to_owned(),
    })
}

/// Dense product `out = m · g` where `m` is sparse (rows × g.ncols), row-parallel.
fn sparse_dense_mul(m: &SparseRowMatrix, g: &Array2<f64>) -> Array2<f64> {
    let k = g.ncols();
    let g_slice = g.as_slice().expect("right operand must be standard layout");
    let mut out = vec![0.0f64; m.n_rows() * k];
    out.par_chunks_mut(k).enumerate().for_each(|(i, out_row)| {
        for &(c, v) in m.row(i) {
            let g_row = &g_slice[c as usize * k..c as usize * k + k];
            for t in 0..k {
                out_row[t] += v * g_row[t];
            }
        }
    });
    Array2::from_shape_vec((m.n_rows(), k), out).expect("shape checked above")
}

/// Two-pass modified Gram–Schmidt on the columns of `y`. Columns that vanish
/// (matrix rank below the sketch width) are left as zero vectors.
fn orthonormalize(y: Array2<f64>) -> Array2<f64> {
    let (n, k) = y.dim();
    let mut cols: Vec<Array1<f64>> = y.columns().into_iter().map(|c| c.to_owned()).collect();
    for j in 0..k {
        for _pass in 0..2 {
            for i in 0..j {
                let r = cols[i].dot(&cols[j]);
                if r != 0.0 {
                    let qi = cols[i].clone();
                    cols[j].scaled_add(-r, &qi);
                }
            }
        }
        let norm = cols[j].dot(&cols[j]).sqrt();
        if norm > 1e-300 {
            cols[j].mapv_inplace(|x| x / norm);
        } else {
            cols[j].fill(0.0);
        }
    }
    let mut out = Array2::zeros((n, k));
    for (j, col) in cols.into_iter().enumerate() {
        out.column_mut(j).assign(&col);
    }
    out
}

/// Randomized range-finder SVD of a sparse matrix.
///
/// Sketch width is `d + oversampling` Gaussian probes; `power_iters` rounds
/// of `M Mᵀ` sharpen the subspace before the small projected SVD. The matrix
/// is touched only through sparse products, so the cost is
/// `O(nnz·(d+oversampling)·(power_iters+1) + n·d²)`. Output is a
/// deterministic function of the RNG state.
pub fn randomized_sparse_svd(
    m: &SparseRowMatrix,
    d: usize,
    oversampling: usize,
    power_iters: usize,
    rng: &mut ChaCha12Rng,
) -> Result<SvdTriple> {
    let min_dim = m.n_rows().min(m.n_cols());
    if d == 0 || d > min_dim {
        return Err(Error::InvalidParameter(format!(
            "rank {d} out of range for a {}×{} matrix",
            m.n_rows(),
            m.n_cols()
        )));
    }
    if oversampling < 2 {
        return Err(Error::InvalidParameter(format!(
            "oversampling must be at least 2, got {oversampling}"
        )));
    }
    let k = (d + oversampling).min(min_dim);
    let mt = m.transposed();

    // Gaussian probe block, filled in a fixed row-major order.
    let mut probes = Array2::zeros((m.n_cols(), k));
    for i in 0..m.n_cols() {
        for j in 0..k {
            probes[[i, j]] = StandardNormal.sample(rng);
        }
    }

    let mut q = orthonormalize(sparse_dense_mul(m, &probes));
    for _ in 0..power_iters {
        let z = orthonormalize(sparse_dense_mul(&mt, &q));
        q = orthonormalize(sparse_dense_mul(m, &z));
    }
    // Project: B = Qᵀ M, computed as (Mᵀ Q)ᵀ to reuse the sparse kernel.
    let w = sparse_dense_mul(&mt, &q); // n_cols × k
    let b = w.t().as_standard_layout().to_owned(); // k × n_cols
    let (ub, sigma, vtb) = b
        .svddc(JobSvd::Some)
        .map_err(|e| Error::Numerical(format!("projected SVD failed: {e}")))?;
    let ub = ub.ok_or_else(|| Error::Internal("projected SVD returned no U".into()))?;
    let vtb = vtb.ok_or_else(|| Error::Internal("projected SVD returned no VT".into()))?;

    let mut u = q.dot(&ub.slice(ndarray::s![.., ..d]));
    let mut v = vtb.slice(ndarray::s![..d, ..]).t().to_owned();
    let sigma = sigma.slice(ndarray::s![..d]).to_owned();
    canonicalize_signs(&mut u, &mut v);
    Ok(SvdTriple { u, sigma, v })
}

/// Runs [`randomized_sparse_svd`] `attempts` times with seeds derived from
/// `(seed, "svd", attempt)` and keeps the attempt with the smallest exact
/// reconstruction residual. One attempt is the normal mode; more buy down
/// the small failure probability of the sketching guarantee.
pub fn randomized_sparse_svd_seeded(
    m: &SparseRowMatrix,
    d: usize,
    oversampling: usize,
    power_iters: usize,
    seed: u64,
    attempts: usize,
) -> Result<SvdTriple> {
    if attempts == 0 {
        return Err(Error::InvalidParameter("attempts must be at least 1".into()));
    }
    let mut best: Option<(f64, SvdTriple)> = None;
    for a in 0..attempts {
        let mut rng = rng_for(seed, "svd", a as u64);
        let t = randomized_sparse_svd(m, d, oversampling, power_iters, &mut rng)?;
        let residual = reconstruction_residual(m, &t);
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, t));
        }
    }
    Ok(best.expect("attempts >= 1").1)
}

/// Exact Frobenius residual ‖M − UΣVᵀ‖_F computed without densifying:
/// ‖M‖² − 2⟨M, UΣVᵀ⟩ + Σσ² (the last term uses orthonormality of U, V).
pub fn reconstruction_residual(m: &SparseRowMatrix, t: &SvdTriple) -> f64 {
    let d = t.sigma.len();
    let mut cross = 0.0f64;
    for (i, c, v) in m.entries() {
        let mut approx = 0.0;
        for j in 0..d {
            approx += t.u[[i, j]] * t.sigma[j] * t.v[[c as usize, j]];
        }
        cross += v * approx;
    }
    let m_norm2: f64 = m.entries().map(|(_, _, v)| v * v).sum();
    let s_norm2: f64 = t.sigma.iter().map(|s| s * s).sum();
    (m_norm2 - 2.0 * cross + s_norm2).max(0.0).sqrt()
}

/// Splits the spectrum across both sides: `X = U·diag(√σ)`, `Y = V·diag(√σ)`.
/// Numerically zero singular values simply zero the corresponding columns.
pub fn embed_from_svd(t: &SvdTriple) -> EmbeddingPair {
    let mut x = t.u.clone();
    let mut y = t.v.clone();
    for (j, &s) in t.sigma.iter().enumerate() {
        let scale = s.max(0.0).sqrt();
        x.column_mut(j).mapv_inplace(|e| e * scale);
        y.column_mut(j).mapv_inplace(|e| e * scale);
    }
    EmbeddingPair { x, y }
}

/// Which side of the factorization an embedding file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingSide {
    X,
    Y,
}

impl EmbeddingSide {
    fn as_str(self) -> &'static str {
        match self {
            EmbeddingSide::X => "X",
            EmbeddingSide::Y => "Y",
        }
    }
}

/// Writes one embedding matrix as TSV: header `#lemane d=<d> side=<X|Y>`,
/// then one row per node (id followed by `d` values).
pub fn write_embedding(path: &Path, side: EmbeddingSide, m: &Array2<f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "#lemane d={} side={}", m.ncols(), side.as_str())
        .map_err(|e| Error::io(path, e))?;
    for (i, row) in m.axis_iter(Axis(0)).enumerate() {
        write!(w, "{i}").map_err(|e| Error::io(path, e))?;
        for v in row.iter() {
            write!(w, "\t{v:.16e}").map_err(|e| Error::io(path, e))?;
        }
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an embedding TSV written by [`write_embedding`].
pub fn read_embedding(path: &Path) -> Result<(Array2<f64>, EmbeddingSide)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 0, "empty embedding file"))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let rest = header
        .strip_prefix("#lemane ")
        .ok_or_else(|| Error::parse(path, 1, "missing \"#lemane\" header"))?;
    let mut d: Option<usize> = None;
    let mut side: Option<EmbeddingSide> = None;
    for token in rest.split_whitespace() {
        if let Some(val) = token.strip_prefix("d=") {
            d = Some(
                val.parse()
                    .map_err(|_| Error::parse(path, 1, "bad dimension in header"))?,
            );
        } else if let Some(val) = token.strip_prefix("side=") {
            side = Some(match val {
                "X" => EmbeddingSide::X,
                "Y" => EmbeddingSide::Y,
                other => {
                    return Err(Error::parse(path, 1, format!("unknown side {other:?}")))
                }
            });
        }
    }
    let d = d.ok_or_else(|| Error::parse(path, 1, "header missing d="))?;
    let side = side.ok_or_else(|| Error::parse(path, 1, "header missing side="))?;
    let mut values: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut parts = trimmed.split_whitespace();
        let id: usize = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|_| Error::parse(path, lineno, "bad node id"))?;
        if id != count {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected node {count}, found {id} (rows must be consecutive)"),
            ));
        }
        let mut row_vals = 0usize;
        for tok in parts {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad value {tok:?}")))?;
            values.push(v);
            row_vals += 1;
        }
        if row_vals != d {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {d} values, found {row_vals}"),
            ));
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::parse(path, 0, "no embedding rows"));
    }
    let m = Array2::from_shape_vec((count, d), values)
        .map_err(|e| Error::Internal(format!("embedding shape: {e}")))?;
    Ok((m, side))
}
