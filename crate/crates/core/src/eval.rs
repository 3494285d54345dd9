//! Task metrics: link-prediction precision and node-classification micro-F1
//! with the normalize-and-concatenate protocol.
//!
//! Link prediction scores a pair (u,v) by the inner product x_u·y_v and
//! reports precision at K = |test positives| over a balanced test set. Node
//! classification builds features z_v = concat(x_v/‖x_v‖, y_v/‖y_v‖) and
//! trains one-vs-rest logistic regression by full-batch gradient descent.

use std::collections::HashSet;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factorize::EmbeddingPair;
use crate::graph::{EdgeSplit, NodeId};
use crate::labels::LabelSet;
use crate::seeding::rng_for;
use crate::train::loss::sigmoid;

/// Gradient-descent settings of the in-house one-vs-rest logistic regression.
const LOGREG_EPOCHS: usize = 200;
const LOGREG_LR: f64 = 1.0;
const LOGREG_L2: f64 = 1e-4;

/// One evaluation result, ready for report output.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub task: String,
    pub metric: String,
    /// Fraction in [0, 1].
    pub value: f64,
    /// Human-readable description of the split the value was measured on.
    pub split: String,
    pub seed: u64,
}

impl EvalReport {
    /// The one-line report record: `{"task":…, "metric":…, "value":…, "seed":…}`.
    pub fn json_line(&self) -> String {
        format!(
            "{{\"task\":\"{}\",\"metric\":\"{}\",\"value\":{},\"seed\":{}}}",
            self.task, self.metric, self.value, self.seed
        )
    }
}

/// Precision of link prediction on a balanced held-out split.
///
/// Every test pair (u,v) is scored x_u·y_v; pairs are ranked by descending
/// score with ties broken by (u,v) lexicographic order, and precision is the
/// fraction of true positives among the top K = |test_pos|.
pub fn link_precision(e: &EmbeddingPair, split: &EdgeSplit, seed: u64) -> Result<EvalReport> {
    let k = split.test_pos.len();
    if k == 0 || split.test_neg.len() != k {
        return Err(Error::InvalidParameter(format!(
            "balanced nonempty test split required, got {} positives and {} negatives",
            k,
            split.test_neg.len()
        )));
    }
    let n = e.n() as NodeId;
    let mut scored: Vec<(f64, NodeId, NodeId, bool)> = Vec::with_capacity(2 * k);
    for (pairs, is_pos) in [(&split.test_pos, true), (&split.test_neg, false)] {
        for &(u, v) in pairs.iter() {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "test pair ({u},{v}) outside embedding of {n} nodes"
                )));
            }
            let s = e.x.row(u as usize).dot(&e.y.row(v as usize));
            scored.push((s, u, v, is_pos));
        }
    }
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });
    let hits = scored[..k].iter().filter(|t| t.3).count();
    Ok(EvalReport {
        task: "link".into(),
        metric: "precision".into(),
        value: hits as f64 / k as f64,
        split: format!("test_pos={k},test_neg={k}"),
        seed,
    })
}

/// Micro-averaged F1 over per-node label sets: TP/FP/FN are pooled over all
/// (node, class) decisions and F1 = 2TP/(2TP+FP+FN).
pub fn micro_f1(predicted: &[Vec<u32>], truth: &[Vec<u32>]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(Error::InvalidParameter(format!(
            "micro-F1 needs matching nonempty inputs, got {} predictions for {} truths",
            predicted.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (pred, tru) in predicted.iter().zip(truth) {
        let tru_set: HashSet<u32> = tru.iter().copied().collect();
        let pred_set: HashSet<u32> = pred.iter().copied().collect();
        for c in &pred_set {
            if tru_set.contains(c) {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        for c in &tru_set {
            if !pred_set.contains(c) {
                fn_ += 1;
            }
        }
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Err(Error::InvalidParameter(
            "micro-F1 undefined: no label decisions in either input".into(),
        ));
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

/// One binary classifier of the one-vs-rest ensemble.
struct BinaryClassifier {
    w: Array1<f64>,
    b: f64,
}

impl BinaryClassifier {
    /// Full-batch gradient descent on logistic loss with L2 on the weights
    /// (never the bias). A class with no positive training example keeps its
    /// weights at zero and learns the bias alone, so it scores via the base
    /// rate instead of erroring.
    fn train(feats: &[Array1<f64>], targets: &[f64]) -> BinaryClassifier {
        let dim = feats.first().map_or(0, |z| z.len());
        let m = feats.len() as f64;
        let has_positive = targets.iter().any(|&t| t > 0.0);
        let mut w = Array1::<f64>::zeros(dim);
        let mut b = 0.0f64;
        for _ in 0..LOGREG_EPOCHS {
            let mut gw = Array1::<f64>::zeros(dim);
            let mut gb = 0.0f64;
            for (z, &t) in feats.iter().zip(targets) {
                let err = sigmoid(w.dot(z) + b) - t;
                gw.scaled_add(err, z);
                gb += err;
            }
            if has_positive {
                gw /= m;
                gw.scaled_add(LOGREG_L2, &w);
                w.scaled_add(-LOGREG_LR, &gw);
            }
            b -= LOGREG_LR * gb / m;
        }
        BinaryClassifier { w, b }
    }

    fn score(&self, z: &Array1<f64>) -> f64 {
        self.w.dot(z) + self.b
    }
}

/// L2-normalizes x_v and y_v separately (zero rows stay zero) and
/// concatenates them into the classifier feature vector.
fn concat_normalized(e: &EmbeddingPair, v: usize) -> Array1<f64> {
    let d = e.dim();
    let mut z = Array1::<f64>::zeros(2 * d);
    for (offset, side) in [(0, &e.x), (d, &e.y)] {
        let row = side.row(v);
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            for j in 0..d {
                z[offset + j] = row[j] / norm;
            }
        }
    }
    z
}

/// Micro-F1 of one-vs-rest logistic regression on the concatenated
/// normalized embeddings.
///
/// Labeled nodes are split at `train_ratio` using the "split" stage of
/// `seed`. With `trained_with_5pct` the classifier's training set starts
/// from the 5% of labeled nodes that were visible while the schedule was
/// trained (re-derived from the same seed) and is topped up with fresh nodes
/// to `train_ratio`; the ratio must then exceed 0.05. Each node is assigned
/// its top-k classes where k is its true label count, ties broken by class
/// id.
pub fn node_classification(
    e: &EmbeddingPair,
    labels: &LabelSet,
    train_ratio: f64,
    trained_with_5pct: bool,
    seed: u64,
) -> Result<EvalReport> {
    if labels.n_nodes() != e.n() {
        return Err(Error::InvalidParameter(format!(
            "labels cover {} nodes but embeddings have {}",
            labels.n_nodes(),
            e.n()
        )));
    }
    let lo = if trained_with_5pct { 0.05 } else { 0.0 };
    if !(train_ratio > lo && train_ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train ratio must lie in ({lo}, 1), got {train_ratio}"
        )));
    }
    let labeled = labels.labeled_nodes();
    if labeled.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 labeled nodes to split, got {}",
            labeled.len()
        )));
    }
    let target = ((labeled.len() as f64 * train_ratio).round() as usize)
        .clamp(1, labeled.len() - 1);
    let mut shuffled = labeled.clone();
    shuffled.shuffle(&mut rng_for(seed, "split", 0));
    let train: Vec<NodeId> = if trained_with_5pct {
        let mut chosen: Vec<NodeId> = labels.train_visible_for_seed(seed);
        let have: HashSet<NodeId> = chosen.iter().copied().collect();
        for &u in &shuffled {
            if chosen.len() >= target {
                break;
            }
            if !have.contains(&u) {
                chosen.push(u);
            }
        }
        chosen
    } else {
        shuffled[..target].to_vec()
    };
    let train_set: HashSet<NodeId> = train.iter().copied().collect();
    let test: Vec<NodeId> = labeled
        .iter()
        .copied()
        .filter(|u| !train_set.contains(u))
        .collect();
    if test.is_empty() {
        return Err(Error::InvalidParameter(
            "train ratio leaves no test nodes".into(),
        ));
    }

    let train_feats: Vec<Array1<f64>> = train
        .iter()
        .map(|&u| concat_normalized(e, u as usize))
        .collect();
    let classifiers: Vec<BinaryClassifier> = (0..labels.n_classes() as u32)
        .into_par_iter()
        .map(|class| {
            let targets: Vec<f64> = train
                .iter()
                .map(|&u| f64::from(labels.labels_of(u).contains(&class)))
                .collect();
            BinaryClassifier::train(&train_feats, &targets)
        })
        .collect();

    let mut predicted: Vec<Vec<u32>> = Vec::with_capacity(test.len());
    let mut truth: Vec<Vec<u32>> = Vec::with_capacity(test.len());
    for &u in &test {
        let z = concat_normalized(e, u as usize);
        let mut ranked: Vec<(f64, u32)> = classifiers
            .iter()
            .enumerate()
            .map(|(k, c)| (c.score(&z), k as u32))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let k_v = labels.labels_of(u).len();
        predicted.push(ranked[..k_v].iter().map(|&(_, k)| k).collect());
        truth.push(labels.labels_of(u).to_vec());
    }
    let value = micro_f1(&predicted, &truth)?;
    Ok(EvalReport {
        task: "class".into(),
        metric: "micro_f1".into(),
        value,
        split: format!(
            "train_ratio={train_ratio},train={},test={},five_pct={}",
            train.len(),
            test.len(),
            trained_with_5pct
        ),
        seed,
    })
}
