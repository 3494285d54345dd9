//! Reverse-mode gradients of a forward pass with respect to the stopping
//! probabilities, plus the central-difference oracle used to validate them.
//!
//! The chain runs loss → (X, Y) → (U, Σ, V) → M → S → α. The SVD step uses
//! the standard full-SVD adjoint with regularized spectral gaps; because the
//! loss touches only the first d singular columns, the core matrix of that
//! adjoint is nonzero only in its first d rows and columns, which brings the
//! backward cost down from O(n³) to a handful of O(n²d) products. The final
//! step exploits that the supervised-PPR matrix is a polynomial in the α's
//! with hop-power coefficients: S = Σ_k ∏_{j<k}(1−α_j)·(α_k·P^k|_nd + P^k|_dg)
//! where |_nd and |_dg restrict columns to non-dangling and dangling nodes.
//! The replay walks the unscaled powers P^k once and assembles every ∂S/∂α_k
//! from two inner products per hop — no division by (1−α_k), so the gradient
//! stays exact at α_k = 1.

use ndarray::{s, Array1, Array2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::schedule::{Schedule, EPS_ALPHA};

use super::loss::LossGrad;
use super::ForwardCache;

/// Gradient w.r.t. α₀…α_L plus a flag raised when the spectrum was too
/// degenerate for the SVD adjoint to be trustworthy (near-equal kept
/// singular values or a kept value near zero).
#[derive(Debug, Clone)]
pub struct GradResult {
    pub grad: Vec<f64>,
    pub degenerate: bool,
}

/// Central differences of an arbitrary loss functional over the schedule.
/// Perturbed coordinates are clamped to the legal [ε_α, 1] range and the
/// quotient uses the actually-realized step, so boundary coordinates get
/// one-sided-leaning but still consistent estimates.
pub fn grad_fd<F>(mut f: F, s: &Schedule, h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&Schedule) -> Result<f64>,
{
    if h <= 0.0 {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let alphas = s.alphas().to_vec();
    let mut grad = vec![0.0f64; alphas.len()];
    for (k, slot) in grad.iter_mut().enumerate() {
        let a = alphas[k];
        let a_plus = (a + h).min(1.0);
        let a_minus = (a - h).max(EPS_ALPHA);
        let width = a_plus - a_minus;
        if width <= 0.0 {
            continue;
        }
        let mut up = alphas.clone();
        up[k] = a_plus;
        let mut down = alphas.clone();
        down[k] = a_minus;
        let f_plus = f(&Schedule::new(up)?)?;
        let f_minus = f(&Schedule::new(down)?)?;
        *slot = (f_plus - f_minus) / width;
    }
    Ok(grad)
}

/// Full analytic gradient: loss adjoints on the embeddings, through the SVD,
/// the log transform, the threshold mask, and the hop replay.
pub fn grad_analytic(cache: &ForwardCache, sub: &CsrGraph, lg: &LossGrad) -> Result<GradResult> {
    let n = cache.s_matrix.nrows();
    if sub.n() != n {
        return Err(Error::InvalidParameter(format!(
            "cache holds {n} nodes but the subgraph has {}",
            sub.n()
        )));
    }
    if lg.gx.dim() != (n, cache.d) || lg.gy.dim() != (n, cache.d) {
        return Err(Error::InvalidParameter(
            "loss gradients must be n×d to match the cache".into(),
        ));
    }
    let (g_m, degenerate) = svd_backward(cache, &lg.gx, &lg.gy);
    // Log transform and straight-through mask: M = ln(S/δ) on survivors, so
    // ∂L/∂S = ∂L/∂M / S there and exactly zero on thresholded-away entries.
    let mut g_s = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let sv = cache.s_matrix[[i, j]];
            if sv > 0.0 {
                g_s[[i, j]] = g_m[[i, j]] / sv;
            }
        }
    }
    let grad = replay_alpha_grad(sub, &cache.schedule, &g_s);
    Ok(GradResult { grad, degenerate })
}

/// Adjoint of `M = U Σ Vᵀ` (full square SVD) given adjoints of the embedding
/// matrices `X = U_d √Σ_d`, `Y = V_d √Σ_d`. Returns `∂L/∂M` and the
/// degeneracy flag.
///
/// With P = UᵀḠ_U, Q = VᵀḠ_V, P̃ = P − Pᵀ, Q̃ = Q − Qᵀ, and
/// F_ij = 1/(σ_j² − σ_i²) off-diagonal:
///   ∂L/∂M = U·[ (F∘P̃)Σ + Σ(F∘Q̃) + diag(σ̄) ]·Vᵀ.
/// Ḡ_U and Ḡ_V have only d nonzero columns, so the bracket is assembled as a
/// dense n×d block plus a d×(n−d) strip.
pub(crate) fn svd_backward(
    cache: &ForwardCache,
    gx: &Array2<f64>,
    gy: &Array2<f64>,
) -> (Array2<f64>, bool) {
    let n = cache.s_matrix.nrows();
    let d = cache.d;
    let u = &cache.u_full;
    let v = &cache.v_full;
    let sigma = &cache.sigma_full;
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    if sigma_max <= 0.0 {
        return (Array2::zeros((n, n)), true);
    }
    let eps_gap = 1e-8 * sigma_max * sigma_max;
    let tiny = 1e-12 * sigma_max;
    let mut degenerate = false;

    // Pull the adjoints through the √Σ column scaling.
    let mut gu = Array2::<f64>::zeros((n, d));
    let mut gv = Array2::<f64>::zeros((n, d));
    let mut gsigma = Array1::<f64>::zeros(n);
    for i in 0..d {
        if sigma[i] < tiny {
            // X's column is numerically zero and σ̄ would divide by √σ → 0.
            degenerate = true;
            continue;
        }
        let sq = sigma[i].sqrt();
        for r in 0..n {
            gu[[r, i]] = sq * gx[[r, i]];
            gv[[r, i]] = sq * gy[[r, i]];
        }
        let du = u.column(i).dot(&gx.column(i));
        let dv = v.column(i).dot(&gy.column(i));
        gsigma[i] = (du + dv) / (2.0 * sq);
    }

    // Any near-coincident pair involving a kept index makes the 1/(σ²−σ²)
    // weights unreliable.
    'scan: for j in 0..d {
        for i in 0..n {
            if i != j && (sigma[i] * sigma[i] - sigma[j] * sigma[j]).abs() < eps_gap {
                degenerate = true;
                break 'scan;
            }
        }
    }

    let a = u.t().dot(&gu); // P's nonzero columns: P[:, :d]
    let b = v.t().dot(&gv); // Q's nonzero columns
    let f = |i: usize, j: usize| -> f64 {
        let gap = sigma[j] * sigma[j] - sigma[i] * sigma[i];
        let denom = gap.abs().max(eps_gap);
        if gap >= 0.0 {
            1.0 / denom
        } else {
            -1.0 / denom
        }
    };

    let mut k_left = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        for j in 0..d {
            if i == j {
                k_left[[i, j]] = gsigma[i];
                continue;
            }
            let ptil = a[[i, j]] - if i < d { a[[j, i]] } else { 0.0 };
            let qtil = b[[i, j]] - if i < d { b[[j, i]] } else { 0.0 };
            k_left[[i, j]] = f(i, j) * (ptil * sigma[j] + sigma[i] * qtil);
        }
    }
    let mut m_bar = u.dot(&k_left).dot(&v.slice(s![.., ..d]).t());
    if n > d {
        // Columns j ≥ d: P̃_ij = −P_ji = −A[j, i] (and likewise for Q̃).
        let mut k_right = Array2::<f64>::zeros((d, n - d));
        for i in 0..d {
            for j in d..n {
                k_right[[i, j - d]] = f(i, j) * (-a[[j, i]] * sigma[j] - sigma[i] * b[[j, i]]);
            }
        }
        let strip = k_right.dot(&v.slice(s![.., d..]).t()); // d×n
        m_bar += &u.slice(s![.., ..d]).dot(&strip);
    }
    (m_bar, degenerate)
}

/// Assembles ∂L/∂α_k from ∂L/∂S by replaying the unscaled hop powers.
///
/// With p_l = ⟨Ḡ_S, P^l⟩ over non-dangling columns and q_l the same over
/// dangling columns:
///   ∂L/∂α_k = prefix_k·(p_k − T_k),
///   T_k = (α_{k+1}·p_{k+1} + q_{k+1}) + (1−α_{k+1})·T_{k+1},  T_L = 0,
/// where prefix_k = ∏_{j<k}(1−α_j).
pub(crate) fn replay_alpha_grad(sub: &CsrGraph, schedule: &Schedule, g_s: &Array2<f64>) -> Vec<f64> {
    let n = sub.n();
    let l_max = schedule.max_hop();
    let alphas = schedule.alphas();
    let dangling: Vec<bool> = (0..n).map(|u| sub.is_dangling(u as u32)).collect();
    let g_slice = g_s.as_slice().expect("gradient matrix is standard layout");

    let mut v_cur = vec![0.0f64; n * n];
    for i in 0..n {
        v_cur[i * n + i] = 1.0;
    }
    let mut v_next = vec![0.0f64; n * n];
    let mut p = vec![0.0f64; l_max + 1];
    let mut q = vec![0.0f64; l_max + 1];

    for l in 0..=l_max {
        // Row-partitioned partial sums, reduced in row order for bit-stable
        // results at any thread count.
        let partials: Vec<(f64, f64)> = v_cur
            .par_chunks(n)
            .zip(g_slice.par_chunks(n))
            .map(|(vrow, grow)| {
                let mut pn = 0.0;
                let mut pd = 0.0;
                for j in 0..n {
                    let prod = vrow[j] * grow[j];
                    if dangling[j] {
                        pd += prod;
                    } else {
                        pn += prod;
                    }
                }
                (pn, pd)
            })
            .collect();
        for (pn, pd) in partials {
            p[l] += pn;
            q[l] += pd;
        }

        if l < l_max {
            v_next
                .par_chunks_mut(n)
                .zip(v_cur.par_chunks(n))
                .for_each(|(next_row, cur_row)| {
                    next_row.fill(0.0);
                    for j in 0..n {
                        let mass = cur_row[j];
                        if mass == 0.0 || dangling[j] {
                            continue;
                        }
                        let w = mass / sub.out_degree(j as u32) as f64;
                        for &nb in sub.neighbors(j as u32) {
                            next_row[nb as usize] += w;
                        }
                    }
                });
            std::mem::swap(&mut v_cur, &mut v_next);
        }
    }

    let mut t_vals = vec![0.0f64; l_max + 1];
    for k in (0..l_max).rev() {
        t_vals[k] = (alphas[k + 1] * p[k + 1] + q[k + 1]) + (1.0 - alphas[k + 1]) * t_vals[k + 1];
    }
    let mut grad = vec![0.0f64; l_max + 1];
    let mut prefix = 1.0;
    for k in 0..=l_max {
        grad[k] = prefix * (p[k] - t_vals[k]);
        prefix *= 1.0 - alphas[k];
    }
    grad
}

/// Worst per-coordinate relative gap between two gradient vectors, with the
/// denominator floored at 1% of the overall gradient scale (and at 1e-10) so
/// coordinates that are tiny relative to the vector don't dominate.
pub fn max_relative_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "gradient vectors must have equal length");
    let scale = a
        .iter()
        .chain(b.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    let mut worst = 0.0f64;
    for k in 0..a.len() {
        let denom = a[k].abs().max(b[k].abs()).max(0.01 * scale).max(1e-10);
        worst = worst.max((a[k] - b[k]).abs() / denom);
    }
    worst
}
