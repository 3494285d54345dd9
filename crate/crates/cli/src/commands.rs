//! The five pipeline commands. Each one loads its inputs, runs the
//! corresponding core stage, writes artifacts under the output directory,
//! and records a manifest describing the run.
//!
//! Artifact layout under `--out`:
//!   schedule.tsv, loss_trace.tsv        (train)
//!   embedding_x.tsv, embedding_y.tsv    (embed)
//!   report.json                         (eval)
//!   sample.edges, sample_nodes.tsv      (sample)
//!   train_graph.edges                   (pipeline, link task)
//!   <command>_manifest.json             (every command)

use std::io::Write as _;
use std::path::{Path, PathBuf};

use lemane_core::factorize::{
    dense_svd, embed_from_svd, randomized_sparse_svd_seeded, read_embedding, write_embedding,
    EmbeddingPair, EmbeddingSide, SvdTriple,
};
use lemane_core::graph::{
    load_edge_list, remove_edges_split, sample_bfs_subgraph, write_edge_list, CsrGraph, EdgeSplit,
};
use lemane_core::labels::{load_labels, LabelSet};
use lemane_core::proximity::{assemble_proximity_with_stats, log_transform};
use lemane_core::schedule::{read_schedule, write_schedule, Schedule};
use lemane_core::seeding::rng_for;
use lemane_core::train::{train_schedule, Task, TrainOutcome};
use lemane_core::{link_precision, node_classification, EvalReport};
use lemane_core::{Error, Result};

use crate::config::RunConfig;
use crate::manifest::RunManifest;

/// Output-directory handle; creates the directory on construction.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: &Path) -> Result<OutDir> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

fn graph_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.graph
        .path
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("no graph given; set [graph] path or --graph".into()))
}

fn labels_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.graph.labels.as_deref().ok_or_else(|| {
        Error::InvalidParameter("task class needs labels; set [graph] labels or --labels".into())
    })
}

fn load_graph(cfg: &RunConfig, manifest: &mut RunManifest) -> Result<CsrGraph> {
    let path = graph_path(cfg)?;
    manifest.record_input(path)?;
    load_edge_list(path, cfg.graph.directed)
}

/// Loads labels when the configured task needs them; `None` for link runs.
fn load_task_labels(
    cfg: &RunConfig,
    n: usize,
    manifest: &mut RunManifest,
) -> Result<Option<LabelSet>> {
    match cfg.train.task {
        Task::Link => Ok(None),
        Task::Class => {
            let path = labels_path(cfg)?;
            manifest.record_input(path)?;
            Ok(Some(load_labels(path, n)?))
        }
    }
}

fn write_loss_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "iter\tloss").map_err(|e| Error::io(path, e))?;
    for (i, loss) in trace.iter().enumerate() {
        writeln!(w, "{i}\t{loss:.16e}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn run_train(
    g: &CsrGraph,
    labels: Option<&LabelSet>,
    cfg: &RunConfig,
    out: &OutDir,
    manifest: &mut RunManifest,
) -> Result<TrainOutcome> {
    let outcome = manifest.time_stage("train", || train_schedule(g, labels, &cfg.train))?;
    let schedule_path = out.path("schedule.tsv");
    write_schedule(&outcome.schedule, &schedule_path)?;
    manifest.record_artifact("schedule", &schedule_path);
    let trace_path = out.path("loss_trace.tsv");
    write_loss_trace(&trace_path, &outcome.loss_trace)?;
    manifest.record_artifact("loss_trace", &trace_path);
    Ok(outcome)
}

/// Push → log transform → SVD → scaled embeddings, on whichever graph the
/// caller passes (full graph, or the train split in a link pipeline).
fn run_embed(
    g: &CsrGraph,
    schedule: &Schedule,
    cfg: &RunConfig,
    out: &OutDir,
    manifest: &mut RunManifest,
) -> Result<EmbeddingPair> {
    let delta = cfg.embed.delta;
    let (proximity, stats) =
        manifest.time_stage("push", || assemble_proximity_with_stats(g, delta, schedule))?;
    if proximity.nnz() == 0 {
        return Err(Error::Numerical(format!(
            "threshold {delta} retained no proximity entries; any threshold below {:.3e} \
             retains at least one",
            stats.max_estimate
        )));
    }
    let log_matrix = log_transform(&proximity, delta)?;

    let d = cfg.embed.dim;
    let triple: SvdTriple = manifest.time_stage("svd", || {
        if g.n() <= cfg.embed.dense_cap {
            dense_svd(&log_matrix.to_dense(), d)
        } else {
            randomized_sparse_svd_seeded(
                &log_matrix,
                d,
                cfg.embed.oversampling,
                cfg.embed.power_iters,
                cfg.train.seed,
                cfg.embed.attempts,
            )
        }
    })?;
    let embedding = embed_from_svd(&triple);

    let x_path = out.path("embedding_x.tsv");
    write_embedding(&x_path, EmbeddingSide::X, &embedding.x)?;
    manifest.record_artifact("embedding_x", &x_path);
    let y_path = out.path("embedding_y.tsv");
    write_embedding(&y_path, EmbeddingSide::Y, &embedding.y)?;
    manifest.record_artifact("embedding_y", &y_path);
    Ok(embedding)
}

/// The held-out edge split every link evaluation scores against. Deriving it
/// from the original graph with the run seed makes the standalone `eval`
/// command agree with the split a `pipeline` run trained around.
fn derive_link_split(g: &CsrGraph, cfg: &RunConfig) -> Result<EdgeSplit> {
    let mut rng = rng_for(cfg.train.seed, "split", 0);
    remove_edges_split(g, cfg.eval.hide_ratio, &mut rng)
}

fn run_eval(
    embedding: &EmbeddingPair,
    split: Option<&EdgeSplit>,
    labels: Option<&LabelSet>,
    cfg: &RunConfig,
    out: &OutDir,
    manifest: &mut RunManifest,
) -> Result<EvalReport> {
    let seed = cfg.train.seed;
    let report = manifest.time_stage("eval", || match cfg.train.task {
        Task::Link => {
            let split = split.ok_or_else(|| Error::Internal("link eval without a split".into()))?;
            link_precision(embedding, split, seed)
        }
        Task::Class => {
            let labels =
                labels.ok_or_else(|| Error::Internal("class eval without labels".into()))?;
            node_classification(
                embedding,
                labels,
                cfg.eval.train_ratio,
                cfg.eval.trained_with_5pct,
                seed,
            )
        }
    })?;
    let report_path = out.path("report.json");
    std::fs::write(&report_path, report.json_line() + "\n")
        .map_err(|e| Error::io(&report_path, e))?;
    manifest.record_artifact("report", &report_path);
    Ok(report)
}

fn read_embedding_pair(out: &OutDir, manifest: &mut RunManifest) -> Result<EmbeddingPair> {
    let x_path = out.path("embedding_x.tsv");
    let y_path = out.path("embedding_y.tsv");
    manifest.record_input(&x_path)?;
    manifest.record_input(&y_path)?;
    let (x, x_side) = read_embedding(&x_path)?;
    let (y, y_side) = read_embedding(&y_path)?;
    if x_side != EmbeddingSide::X || y_side != EmbeddingSide::Y {
        return Err(Error::InvalidParameter(format!(
            "embedding sides are swapped or mislabeled: {} holds {:?}, {} holds {:?}",
            x_path.display(),
            x_side,
            y_path.display(),
            y_side
        )));
    }
    if x.nrows() != y.nrows() || x.ncols() != y.ncols() {
        return Err(Error::InvalidParameter(format!(
            "embedding shapes disagree: {}×{} vs {}×{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    Ok(EmbeddingPair { x, y })
}

/// `train`: learn a stopping-probability schedule on the configured graph.
pub fn cmd_train(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let mut manifest = RunManifest::new("train", cfg.train.seed, cfg.snapshot());
    let g = load_graph(cfg, &mut manifest)?;
    let labels = load_task_labels(cfg, g.n(), &mut manifest)?;
    let outcome = run_train(&g, labels.as_ref(), cfg, out, &mut manifest)?;
    manifest.write(&out.path("train_manifest.json"))?;
    let first = outcome.loss_trace.first().copied().unwrap_or(f64::NAN);
    let last = outcome.loss_trace.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained schedule over {} iterations (converged: {}), loss {:.6} -> {:.6}",
        outcome.loss_trace.len(),
        outcome.converged,
        first,
        last
    );
    Ok(())
}

/// `embed`: push + factorize the full graph under a stored schedule.
pub fn cmd_embed(cfg: &RunConfig, out: &OutDir, schedule_path: Option<&Path>) -> Result<()> {
    let mut manifest = RunManifest::new("embed", cfg.train.seed, cfg.snapshot());
    let g = load_graph(cfg, &mut manifest)?;
    let schedule_path = schedule_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.path("schedule.tsv"));
    manifest.record_input(&schedule_path)?;
    let schedule = read_schedule(&schedule_path)?;
    let embedding = run_embed(&g, &schedule, cfg, out, &mut manifest)?;
    manifest.write(&out.path("embed_manifest.json"))?;
    println!(
        "embedded {} nodes into dimension {}",
        embedding.n(),
        embedding.dim()
    );
    Ok(())
}

/// `eval`: score stored embeddings on the configured task.
pub fn cmd_eval(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let mut manifest = RunManifest::new("eval", cfg.train.seed, cfg.snapshot());
    let embedding = read_embedding_pair(out, &mut manifest)?;
    let (split, labels) = match cfg.train.task {
        Task::Link => {
            let g = load_graph(cfg, &mut manifest)?;
            if g.n() != embedding.n() {
                return Err(Error::InvalidParameter(format!(
                    "graph has {} nodes but embeddings have {}",
                    g.n(),
                    embedding.n()
                )));
            }
            (Some(derive_link_split(&g, cfg)?), None)
        }
        Task::Class => {
            let path = labels_path(cfg)?;
            manifest.record_input(path)?;
            (None, Some(load_labels(path, embedding.n())?))
        }
    };
    let report = run_eval(
        &embedding,
        split.as_ref(),
        labels.as_ref(),
        cfg,
        out,
        &mut manifest,
    )?;
    manifest.write(&out.path("eval_manifest.json"))?;
    println!("{}", report.json_line());
    Ok(())
}

/// `sample`: draw one BFS training subgraph and write it out for inspection.
pub fn cmd_sample(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let mut manifest = RunManifest::new("sample", cfg.train.seed, cfg.snapshot());
    let g = load_graph(cfg, &mut manifest)?;
    let mut rng = rng_for(cfg.train.seed, "sample", 0);
    let (sub, mapping) = manifest.time_stage("sample", || {
        sample_bfs_subgraph(&g, cfg.train.n_s, &mut rng)
    })?;

    let edges_path = out.path("sample.edges");
    write_edge_list(&sub, &edges_path)?;
    manifest.record_artifact("sample_edges", &edges_path);

    let nodes_path = out.path("sample_nodes.tsv");
    let file = std::fs::File::create(&nodes_path).map_err(|e| Error::io(&nodes_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "sub\torig").map_err(|e| Error::io(&nodes_path, e))?;
    for (sub_id, &orig) in mapping.sub_to_orig().iter().enumerate() {
        writeln!(w, "{sub_id}\t{orig}").map_err(|e| Error::io(&nodes_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&nodes_path, e))?;
    manifest.record_artifact("sample_nodes", &nodes_path);

    manifest.write(&out.path("sample_manifest.json"))?;
    println!("sampled {} nodes, {} edges", sub.n(), sub.m());
    Ok(())
}

/// `pipeline`: train → embed → eval in one run.
///
/// For link prediction the test edges must be hidden before anything learns,
/// so the split comes first and both training and embedding see only the
/// train graph; evaluation scores the held-out pairs. For classification the
/// full graph flows through every stage and the label split happens inside
/// the evaluation protocol.
pub fn cmd_pipeline(cfg: &RunConfig, out: &OutDir) -> Result<()> {
    let mut manifest = RunManifest::new("pipeline", cfg.train.seed, cfg.snapshot());
    let g = load_graph(cfg, &mut manifest)?;
    let labels = load_task_labels(cfg, g.n(), &mut manifest)?;

    let split = match cfg.train.task {
        Task::Link => {
            let split = manifest.time_stage("split", || derive_link_split(&g, cfg))?;
            let train_graph_path = out.path("train_graph.edges");
            write_edge_list(&split.train_graph, &train_graph_path)?;
            manifest.record_artifact("train_graph", &train_graph_path);
            Some(split)
        }
        Task::Class => None,
    };
    let work_graph = split.as_ref().map(|s| &s.train_graph).unwrap_or(&g);

    run_train(work_graph, labels.as_ref(), cfg, out, &mut manifest)?;
    let schedule = read_schedule(&out.path("schedule.tsv"))?;
    let embedding = run_embed(work_graph, &schedule, cfg, out, &mut manifest)?;
    let report = run_eval(
        &embedding,
        split.as_ref(),
        labels.as_ref(),
        cfg,
        out,
        &mut manifest,
    )?;
    manifest.write(&out.path("pipeline_manifest.json"))?;
    println!("{}", report.json_line());
    Ok(())
}
