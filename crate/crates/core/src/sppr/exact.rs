//! Exact supervised-PPR by dense iteration.
//!
//! The proximity of `v` to `u` is the probability that a walk from `u`,
//! stopping at hop `k` with probability `alpha_k`, stops at `v` within `L`
//! hops. Writing `P` for the row-stochastic transition matrix this is the
//! matrix polynomial
//!
//! ```text
//! S = sum_{l=0}^{L}  alpha_l · prod_{k<l} (1 - alpha_k) · P^l
//! ```
//!
//! computed here with two accumulators: `S += alpha_k · R` then
//! `R <- (1 - alpha_k) · R · P` per hop, with `R` starting as the identity.
//! Mass that reaches a dangling node is absorbed whole — added to `S` at
//! full weight the hop it arrives, and dropped from `R` by the `P` step
//! (dangling rows of `P` are zero). The push algorithm implements the same
//! semantics, so the two routes are directly comparable.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::schedule::Schedule;

/// Dense real matrix, row-major.
pub type DenseMatrix = Array2<f64>;

/// Largest node count accepted by the dense route by default. An n×n f64
/// matrix at this cap is 3.2 GB; past it, use the push route.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// Computes the full supervised-PPR matrix with the default size cap.
pub fn exact_sppr(g: &CsrGraph, s: &Schedule) -> Result<DenseMatrix> {
    exact_sppr_with_cap(g, s, DEFAULT_DENSE_CAP)
}

/// Computes the full supervised-PPR matrix; row `u` is the stop distribution
/// of a walk from `u`, truncated after hop `max_hop`.
pub fn exact_sppr_with_cap(g: &CsrGraph, s: &Schedule, cap: usize) -> Result<DenseMatrix> {
    let n = g.n();
    if n > cap {
        return Err(Error::InvalidParameter(format!(
            "graph with {n} nodes exceeds the dense cap {cap}; use the push route"
        )));
    }
    let dangling: Vec<bool> = (0..n as u32).map(|u| g.is_dangling(u)).collect();
    let inv_deg: Vec<f64> = (0..n as u32)
        .map(|u| {
            let d = g.out_degree(u);
            if d == 0 {
                0.0
            } else {
                1.0 / d as f64
            }
        })
        .collect();

    let mut s_mat = vec![0.0f64; n * n];
    let mut r = vec![0.0f64; n * n];
    let mut r_next = vec![0.0f64; n * n];
    for i in 0..n {
        r[i * n + i] = 1.0;
    }

    for (k, &alpha) in s.alphas().iter().enumerate() {
        let last = k == s.max_hop();
        // Each task owns one source row of every buffer, so the result is
        // bit-identical for any thread count.
        s_mat
            .par_chunks_mut(n)
            .zip(r.par_chunks_mut(n))
            .zip(r_next.par_chunks_mut(n))
            .for_each(|((s_row, r_row), next_row)| {
                for j in 0..n {
                    let mass = r_row[j];
                    if mass == 0.0 {
                        continue;
                    }
                    if dangling[j] {
                        // Stranded mass stops here regardless of alpha.
                        s_row[j] += mass;
                    } else {
                        s_row[j] += alpha * mass;
                        if !last {
                            let w = (1.0 - alpha) * mass * inv_deg[j];
                            for &v in g.neighbors(j as u32) {
                                next_row[v as usize] += w;
                            }
                        }
                    }
                }
                if !last {
                    r_row.fill(0.0);
                }
            });
        if !last {
            std::mem::swap(&mut r, &mut r_next);
        }
    }

    Array2::from_shape_vec((n, n), s_mat)
        .map_err(|e| Error::Internal(format!("shape error assembling dense matrix: {e}")))
}
