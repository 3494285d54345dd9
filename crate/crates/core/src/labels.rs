//! Node labels for the classification task.
//!
//! A `LabelSet` holds the (possibly multi-label) class assignments of a
//! graph's nodes plus the small "visible" subset that schedule training is
//! allowed to see: a fixed 5% sample of the labeled nodes, drawn once per run
//! from the run seed. Evaluation re-derives the same subset so the classifier
//! can be denied those nodes as test examples.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::seeding::rng_for;

/// Fraction of labeled nodes visible to schedule training.
pub const TRAIN_LABEL_FRACTION: f64 = 0.05;

/// Per-node class assignments over classes `0..n_classes`.
#[derive(Debug, Clone)]
pub struct LabelSet {
    /// Sorted, deduplicated class ids per node; empty = unlabeled.
    labels: Vec<Vec<u32>>,
    n_classes: usize,
    /// Sorted node subset visible to schedule training, once assigned.
    train_5pct: Option<Vec<NodeId>>,
}

impl LabelSet {
    /// Builds a label set from per-node class lists (unlabeled nodes empty).
    pub fn new(mut labels: Vec<Vec<u32>>, n_classes: usize) -> Result<LabelSet> {
        for per_node in &mut labels {
            per_node.sort_unstable();
            per_node.dedup();
            if let Some(&c) = per_node.last() {
                if c as usize >= n_classes {
                    return Err(Error::InvalidParameter(format!(
                        "label {c} out of range for {n_classes} classes"
                    )));
                }
            }
        }
        Ok(LabelSet {
            labels,
            n_classes,
            train_5pct: None,
        })
    }

    /// Number of nodes covered (labeled or not).
    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Number of classes.
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Class ids of `u` (sorted; empty when unlabeled).
    pub fn labels_of(&self, u: NodeId) -> &[u32] {
        &self.labels[u as usize]
    }

    /// All labeled nodes, ascending.
    pub fn labeled_nodes(&self) -> Vec<NodeId> {
        (0..self.labels.len() as NodeId)
            .filter(|&u| !self.labels[u as usize].is_empty())
            .collect()
    }

    /// Draws the 5% training-visible subset from the run seed and stores it.
    /// Size is `ceil(0.05 · labeled count)`; the result is sorted and
    /// deterministic for a given seed.
    pub fn assign_train_visible(&mut self, run_seed: u64) {
        self.train_5pct = Some(Self::draw_train_visible(&self.labeled_nodes(), run_seed));
    }

    /// The training-visible subset, if assigned.
    pub fn train_visible(&self) -> Option<&[NodeId]> {
        self.train_5pct.as_deref()
    }

    /// Derives the 5% subset for `run_seed` without storing it (evaluation
    /// uses this to reconstruct what training saw).
    pub fn train_visible_for_seed(&self, run_seed: u64) -> Vec<NodeId> {
        Self::draw_train_visible(&self.labeled_nodes(), run_seed)
    }

    fn draw_train_visible(labeled: &[NodeId], run_seed: u64) -> Vec<NodeId> {
        let count = ((labeled.len() as f64) * TRAIN_LABEL_FRACTION).ceil() as usize;
        let mut shuffled = labeled.to_vec();
        let mut rng = rng_for(run_seed, "label5pct", 0);
        shuffled.shuffle(&mut rng);
        let mut subset: Vec<NodeId> = shuffled.into_iter().take(count).collect();
        subset.sort_unstable();
        subset
    }
}

/// Reads a label file: one "node label" pair per line, multiple lines per
/// node allowed (multi-label), `#`/`%` comments and blank lines ignored.
/// `n` is the graph's node count; labels for out-of-range nodes are errors.
pub fn load_labels(path: &Path, n: usize) -> Result<LabelSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut labels = vec![Vec::new(); n];
    let mut max_class: Option<u32> = None;
    let mut any = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let lineno = idx + 1;
        let mut parts = trimmed.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => {
                let u: NodeId = a
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("invalid node id {a:?}")))?;
                let c: u32 = b
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("invalid label {b:?}")))?;
                if u as usize >= n {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("node {u} out of range for graph with {n} nodes"),
                    ));
                }
                labels[u as usize].push(c);
                max_class = Some(max_class.map_or(c, |m| m.max(c)));
                any = true;
            }
            _ => {
                return Err(Error::parse(
                    path,
                    lineno,
                    "expected exactly two whitespace-separated integers",
                ))
            }
        }
    }
    if !any {
        return Err(Error::parse(path, 0, "no labels found"));
    }
    LabelSet::new(labels, max_class.unwrap() as usize + 1)
}
