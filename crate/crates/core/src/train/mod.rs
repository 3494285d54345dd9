//! The differentiable training pipeline: exact supervised PPR → threshold →
//! log → SVD → embeddings → task loss, reverse-mode gradients with respect
//! to the stopping probabilities, and the SGD loop over BFS-sampled
//! subgraphs.
//!
//! Sub-sampling semantics: each iteration draws a fresh subgraph of up to
//! `n_s` nodes. The loss divisors written in terms of the whole graph are
//! replaced by the sample size — n² by n_s², and the edge-average divisor by
//! n_s as well (the surprising but deliberate reading; a flag restores the
//! true edge count). For classification only the 5% visible labeled nodes
//! contribute label information, the class cliques are intersected with the
//! sample, and negatives are resampled per iteration.

pub mod backprop;
pub mod loss;

pub use backprop::{grad_analytic, grad_fd, max_relative_gap, GradResult};
pub use loss::{
    loss_class, loss_class_grad, loss_link, loss_link_grad, loss_link_with_divisor, ClassData,
    LossGrad,
};

use std::collections::HashSet;

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::factorize::{dense_svd_full, EmbeddingPair};
use crate::graph::{sample_bfs_subgraph, CsrGraph, NodeId};
use crate::labels::LabelSet;
use crate::schedule::{init_schedule, InitDist, Schedule, DEFAULT_MAX_HOP};
use crate::seeding::rng_for;
use crate::sppr::{exact_sppr_with_cap, DEFAULT_DENSE_CAP};

/// Which downstream task the schedule is being trained for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Link,
    Class,
}

/// How ∂L/∂α is obtained each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradMode {
    Analytic,
    FiniteDiff,
}

/// Hyperparameters of the training loop.
///
/// `beta`/`gamma` weight the two loss terms of whichever task is selected
/// (β′/γ′ in the classification reading). `use_true_edge_count` restores the
/// subgraph's real edge count as the L₂ divisor instead of the sample size.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub task: Task,
    pub l_max: usize,
    pub dim: usize,
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub convergence_tol: f64,
    pub n_s: usize,
    pub init: InitDist,
    pub seed: u64,
    pub grad_mode: GradMode,
    pub use_true_edge_count: bool,
    pub fd_step: f64,
    pub dense_cap: usize,
    pub negatives_per_node: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            task: Task::Link,
            l_max: DEFAULT_MAX_HOP,
            dim: 128,
            delta: 1e-5,
            beta: 1.0,
            gamma: 1.0,
            learning_rate: 0.01,
            max_iters: 100,
            convergence_tol: 1e-4,
            n_s: 5000,
            init: InitDist::Poisson { t: 5.0 },
            seed: 42,
            grad_mode: GradMode::Analytic,
            use_true_edge_count: false,
            fd_step: 1e-5,
            dense_cap: DEFAULT_DENSE_CAP,
            negatives_per_node: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in (0,1), got {}",
                self.delta
            )));
        }
        if self.beta < 0.0 || self.gamma < 0.0 {
            return Err(Error::InvalidParameter("loss weights must be nonnegative".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.convergence_tol < 0.0 {
            return Err(Error::InvalidParameter("convergence tolerance must be nonnegative".into()));
        }
        if self.n_s == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        if self.dim > self.n_s {
            return Err(Error::InvalidParameter(format!(
                "dimension {} exceeds sample size {}",
                self.dim, self.n_s
            )));
        }
        if self.n_s > self.dense_cap {
            return Err(Error::InvalidParameter(format!(
                "sample size {} exceeds the dense cap {}",
                self.n_s, self.dense_cap
            )));
        }
        if self.fd_step <= 0.0 {
            return Err(Error::InvalidParameter("finite-difference step must be positive".into()));
        }
        if self.negatives_per_node == 0 {
            return Err(Error::InvalidParameter("negatives per node must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything the backward pass needs from one forward pass. Holding the
/// full square SVD (not just the top d columns) is what lets the adjoint
/// rotate gradients through the discarded part of the spectrum.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub schedule: Schedule,
    /// Supervised PPR after thresholding (entries < δ zeroed; the surviving
    /// entries double as the mask).
    pub s_matrix: Array2<f64>,
    /// ln(S/δ) on surviving entries, zero elsewhere.
    pub m_matrix: Array2<f64>,
    pub u_full: Array2<f64>,
    pub sigma_full: Array1<f64>,
    pub v_full: Array2<f64>,
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub delta: f64,
    pub d: usize,
}

/// One differentiable forward pass on a (sub)graph: exact supervised PPR,
/// strict-< threshold, log transform, full dense SVD, embedding extraction.
pub fn forward(sub: &CsrGraph, s: &Schedule, cfg: &TrainConfig) -> Result<(EmbeddingPair, ForwardCache)> {
    let n = sub.n();
    if n > cfg.dense_cap {
        return Err(Error::InvalidParameter(format!(
            "subgraph with {n} nodes exceeds the dense cap {}",
            cfg.dense_cap
        )));
    }
    if cfg.dim > n {
        return Err(Error::InvalidParameter(format!(
            "dimension {} exceeds subgraph size {n}",
            cfg.dim
        )));
    }
    let mut s_matrix = exact_sppr_with_cap(sub, s, cfg.dense_cap)?;
    s_matrix.mapv_inplace(|v| if v < cfg.delta { 0.0 } else { v });
    let m_matrix = s_matrix.mapv(|v| if v > 0.0 { (v / cfg.delta).ln() } else { 0.0 });
    if m_matrix.iter().all(|&v| v == 0.0) {
        return Err(Error::Numerical(format!(
            "threshold {} too large for subgraph: log-proximity matrix is all zero",
            cfg.delta
        )));
    }
    let (u_full, sigma_full, v_full) = dense_svd_full(&m_matrix)?;
    let d = cfg.dim;
    let mut x = Array2::<f64>::zeros((n, d));
    let mut y = Array2::<f64>::zeros((n, d));
    for j in 0..d {
        let sq = sigma_full[j].max(0.0).sqrt();
        for i in 0..n {
            x[[i, j]] = sq * u_full[[i, j]];
            y[[i, j]] = sq * v_full[[i, j]];
        }
    }
    let pair = EmbeddingPair { x: x.clone(), y: y.clone() };
    let cache = ForwardCache {
        schedule: s.clone(),
        s_matrix,
        m_matrix,
        u_full,
        sigma_full,
        v_full,
        x,
        y,
        delta: cfg.delta,
        d,
    };
    Ok((pair, cache))
}

/// The task loss of one iteration, bound to its sampled context.
#[derive(Debug, Clone)]
pub enum LossContext<'a> {
    Link {
        beta: f64,
        gamma: f64,
        edge_divisor: f64,
    },
    Class {
        data: ClassData<'a>,
        beta: f64,
        gamma: f64,
    },
}

impl LossContext<'_> {
    pub fn value(&self, e: &EmbeddingPair, sub: &CsrGraph) -> Result<f64> {
        match self {
            LossContext::Link { beta, gamma, edge_divisor } => {
                loss_link_with_divisor(e, sub, *beta, *gamma, *edge_divisor)
            }
            LossContext::Class { data, beta, gamma } => loss_class(e, data, *beta, *gamma),
        }
    }

    pub fn with_grad(&self, e: &EmbeddingPair, sub: &CsrGraph) -> Result<LossGrad> {
        match self {
            LossContext::Link { beta, gamma, edge_divisor } => {
                loss_link_grad(e, sub, *beta, *gamma, *edge_divisor)
            }
            LossContext::Class { data, beta, gamma } => loss_class_grad(e, data, *beta, *gamma),
        }
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub schedule: Schedule,
    /// Loss at the start of each iteration, before that iteration's SGD step.
    pub loss_trace: Vec<f64>,
    pub converged: bool,
    /// Iterations whose analytic gradient carried the degenerate-spectrum flag.
    pub degenerate_iters: usize,
}

/// Fixed per-run classification state: the label set, the 5% visible subset,
/// and the frozen random projection of the cross-entropy head.
struct ClassFixture<'a> {
    ls: &'a LabelSet,
    visible: HashSet<NodeId>,
    w: Array2<f64>,
    b: Array1<f64>,
}

/// Validates the task/labels pairing and draws the run-constant class state.
fn build_class_fixture<'a>(
    g: &CsrGraph,
    labels: Option<&'a LabelSet>,
    cfg: &TrainConfig,
) -> Result<Option<ClassFixture<'a>>> {
    match (cfg.task, labels) {
        (Task::Class, None) => Err(Error::InvalidParameter(
            "classification training requires labels".into(),
        )),
        (Task::Link, Some(_)) => Err(Error::InvalidParameter(
            "link training takes no labels; drop them or switch the task".into(),
        )),
        (Task::Link, None) => Ok(None),
        (Task::Class, Some(ls)) => {
            if ls.n_nodes() != g.n() {
                return Err(Error::InvalidParameter(format!(
                    "labels cover {} nodes but the graph has {}",
                    ls.n_nodes(),
                    g.n()
                )));
            }
            if ls.n_classes() == 0 {
                return Err(Error::InvalidParameter("label set has no classes".into()));
            }
            let visible: HashSet<NodeId> =
                ls.train_visible_for_seed(cfg.seed).into_iter().collect();
            let bound = 1.0 / (2.0 * cfg.dim as f64).sqrt();
            let mut wrng = rng_for(cfg.seed, "wmat", 0);
            let w = Array2::from_shape_fn((2 * cfg.dim, ls.n_classes()), |_| {
                wrng.random_range(-bound..bound)
            });
            let b = Array1::<f64>::zeros(ls.n_classes());
            Ok(Some(ClassFixture { ls, visible, w, b }))
        }
    }
}

/// One iteration's sampled material: the subgraph plus (for classification)
/// the visible labeled nodes inside it and the heterophily negatives.
struct IterSample {
    sub: CsrGraph,
    visible_in_sub: Vec<(usize, Vec<u32>)>,
    negatives: Vec<(usize, usize)>,
}

/// Draws iteration `iter`'s subgraph and class-task pairings, all derived
/// deterministically from the run seed and the iteration index.
fn draw_iter_sample(
    g: &CsrGraph,
    cfg: &TrainConfig,
    fixture: Option<&ClassFixture<'_>>,
    iter: u64,
) -> Result<IterSample> {
    let mut srng = rng_for(cfg.seed, "sample", iter);
    let mut picked = None;
    for _ in 0..10 {
        let (sub, mapping) = sample_bfs_subgraph(g, cfg.n_s, &mut srng)?;
        if sub.n() >= cfg.dim {
            picked = Some((sub, mapping));
            break;
        }
    }
    let (sub, mapping) = picked.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "no subgraph of at least {} nodes after 10 attempts; the graph may be too small",
            cfg.dim
        ))
    })?;
    let n_sub = sub.n();

    let mut visible_in_sub: Vec<(usize, Vec<u32>)> = Vec::new();
    let mut negatives: Vec<(usize, usize)> = Vec::new();
    if let Some(ClassFixture { ls, visible, .. }) = fixture {
        if n_sub < 2 {
            return Err(Error::InvalidParameter(
                "classification needs subgraphs of at least 2 nodes".into(),
            ));
        }
        for i in 0..n_sub {
            let orig = mapping.to_orig(i as NodeId);
            if visible.contains(&orig) {
                let lab = ls.labels_of(orig);
                if !lab.is_empty() {
                    visible_in_sub.push((i, lab.to_vec()));
                }
            }
        }
        let mut nrng = rng_for(cfg.seed, "negatives", iter);
        let want = cfg.negatives_per_node * n_sub;
        while negatives.len() < want {
            let a = nrng.random_range(0..n_sub);
            let b = nrng.random_range(0..n_sub);
            if a != b {
                negatives.push((a, b));
            }
        }
    }
    Ok(IterSample {
        sub,
        visible_in_sub,
        negatives,
    })
}

/// Binds one iteration's sample (and the run-constant class state) into the
/// loss the schedule is differentiated against.
fn context_for<'a>(
    sample: &'a IterSample,
    fixture: Option<&'a ClassFixture<'_>>,
    cfg: &TrainConfig,
) -> LossContext<'a> {
    let n_sub = sample.sub.n();
    match fixture {
        None => LossContext::Link {
            beta: cfg.beta,
            gamma: cfg.gamma,
            edge_divisor: if cfg.use_true_edge_count {
                sample.sub.m() as f64
            } else {
                n_sub as f64
            },
        },
        Some(ClassFixture { ls, w, b, .. }) => LossContext::Class {
            data: ClassData {
                visible: &sample.visible_in_sub,
                n_classes: ls.n_classes(),
                negatives: &sample.negatives,
                w,
                b,
                node_divisor: n_sub as f64,
            },
            beta: cfg.beta,
            gamma: cfg.gamma,
        },
    }
}

/// Trains the stopping probabilities by SGD over BFS-sampled subgraphs.
///
/// Convergence: the relative loss change across a 5-iteration window drops
/// below `convergence_tol`. `labels` must be present exactly when the task
/// is classification; only the seeded 5% subset of labeled nodes is visible
/// to the loss.
pub fn train_schedule(
    g: &CsrGraph,
    labels: Option<&LabelSet>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let class_fixture = build_class_fixture(g, labels, cfg)?;

    let mut schedule = init_schedule(cfg.init, cfg.l_max)?;
    let mut loss_trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut degenerate_iters = 0usize;

    for iter in 0..cfg.max_iters {
        let sample = draw_iter_sample(g, cfg, class_fixture.as_ref(), iter as u64)?;
        let ctx = context_for(&sample, class_fixture.as_ref(), cfg);
        let sub = &sample.sub;

        let (e, cache) = forward(sub, &schedule, cfg)?;
        let (loss, grad) = match cfg.grad_mode {
            GradMode::Analytic => {
                let lg = ctx.with_grad(&e, sub)?;
                let gr = grad_analytic(&cache, sub, &lg)?;
                if gr.degenerate {
                    degenerate_iters += 1;
                }
                (lg.loss, gr.grad)
            }
            GradMode::FiniteDiff => {
                let value = ctx.value(&e, sub)?;
                let fd = grad_fd(
                    |sch| forward(sub, sch, cfg).and_then(|(ee, _)| ctx.value(&ee, sub)),
                    &schedule,
                    cfg.fd_step,
                )?;
                (value, fd)
            }
        };

        loss_trace.push(loss);
        if loss_trace.len() >= 6 {
            let prev = loss_trace[loss_trace.len() - 6];
            let rel = (loss - prev).abs() / prev.abs().max(1e-12);
            if rel < cfg.convergence_tol {
                converged = true;
                break;
            }
        }
        schedule.step(&grad, cfg.learning_rate);
    }

    Ok(TrainOutcome {
        schedule,
        loss_trace,
        converged,
        degenerate_iters,
    })
}
