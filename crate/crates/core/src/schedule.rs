//! The trainable stopping schedule.
//!
//! A walk at hop `k` stops there with probability `alpha_k`; the vector
//! `(alpha_0, ..., alpha_L)` is the only trainable parameter of the whole
//! method. Constant schedules recover classical personalized PageRank;
//! training bends the hop profile toward whatever the task loss rewards.
//!
//! The unconditional probability of stopping at exactly hop `l` is the "stop
//! mass" `phi(l) = alpha_l · prod_{k<l} (1 - alpha_k)`. Truncation at hop `L`
//! discards the survival mass `prod_{k<=L} (1 - alpha_k)`, so stop masses sum
//! to `1 - survival`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Default maximum hop count.
pub const DEFAULT_MAX_HOP: usize = 15;

/// Lower clamp for every stopping probability. Keeps the push algorithm's
/// `1/(alpha_min · delta)` cost bound finite and SGD iterates inside the
/// feasible set.
pub const EPS_ALPHA: f64 = 1e-4;

/// Initialization families for the hop-length distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitDist {
    /// phi(l) = alpha·(1-alpha)^l — memoryless; yields a constant schedule.
    Geometric { alpha: f64 },
    /// phi(l) = e^{-t}·t^l/l! — the heat-kernel hop profile.
    Poisson { t: f64 },
    /// phi(l) = 1/(L+1).
    Uniform,
}

/// Stopping probabilities `alpha_0..alpha_L`, each in `[EPS_ALPHA, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    alphas: Vec<f64>,
}

impl Schedule {
    /// Wraps raw stopping probabilities, validating the clamp range.
    pub fn new(alphas: Vec<f64>) -> Result<Schedule> {
        if alphas.is_empty() {
            return Err(Error::InvalidParameter("schedule must have at least one hop".into()));
        }
        for (k, &a) in alphas.iter().enumerate() {
            if !(EPS_ALPHA..=1.0).contains(&a) {
                return Err(Error::InvalidParameter(format!(
                    "alpha_{k} = {a} outside [{EPS_ALPHA}, 1]"
                )));
            }
        }
        Ok(Schedule { alphas })
    }

    /// Constant schedule (classical PPR with stopping probability `alpha`).
    pub fn constant(alpha: f64, max_hop: usize) -> Result<Schedule> {
        Schedule::new(vec![alpha; max_hop + 1])
    }

    /// Maximum hop `L` (the schedule has `L+1` entries).
    pub fn max_hop(&self) -> usize {
        self.alphas.len() - 1
    }

    /// The stopping probabilities.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Stopping probability at hop `k`.
    pub fn alpha(&self, k: usize) -> f64 {
        self.alphas[k]
    }

    /// Applies one SGD step `alpha_k <- clamp(alpha_k - eta·grad_k)`.
    pub fn step(&mut self, grad: &[f64], eta: f64) {
        debug_assert_eq!(grad.len(), self.alphas.len());
        for (a, &g) in self.alphas.iter_mut().zip(grad) {
            *a = (*a - eta * g).clamp(EPS_ALPHA, 1.0);
        }
    }

    /// Unconditional probability of stopping at exactly hop `l`.
    pub fn stop_mass(&self, l: usize) -> Result<f64> {
        if l > self.max_hop() {
            return Err(Error::InvalidParameter(format!(
                "hop {l} beyond maximum {}",
                self.max_hop()
            )));
        }
        let survive: f64 = self.alphas[..l].iter().map(|a| 1.0 - a).product();
        Ok(self.alphas[l] * survive)
    }

    /// Probability of surviving all hops, `prod_{k<=L} (1 - alpha_k)`.
    /// Stop masses sum to exactly one minus this.
    pub fn survival(&self) -> f64 {
        self.alphas.iter().map(|a| 1.0 - a).product()
    }

    /// Smallest stopping probability over hops `1..=L` — the quantity the
    /// push algorithm's `1/(alpha_min·delta)` operation bound is stated in.
    /// (`alpha_0` only converts residue to estimate at the source and does
    /// not drive propagation cost.) Falls back to `alpha_0` when `L = 0`.
    pub fn alpha_min(&self) -> f64 {
        if self.alphas.len() == 1 {
            self.alphas[0]
        } else {
            self.alphas[1..].iter().copied().fold(f64::INFINITY, f64::min)
        }
    }
}

/// Builds a schedule whose stop masses follow `dist` up to hop `max_hop`.
///
/// The conditional form is `alpha_k = phi(k) / (1 − sum_{j<k} phi(j))`,
/// clamped into `[EPS_ALPHA, 1]`. If the distribution's mass is numerically
/// exhausted before hop `k` (denominator ≤ 0), that and every later hop get
/// `alpha = 1`.
pub fn init_schedule(dist: InitDist, max_hop: usize) -> Result<Schedule> {
    if max_hop < 1 {
        return Err(Error::InvalidParameter("max hop must be at least 1".into()));
    }
    match dist {
        InitDist::Geometric { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "geometric parameter must be in (0,1), got {alpha}"
                )));
            }
        }
        InitDist::Poisson { t } => {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "poisson parameter must be positive, got {t}"
                )));
            }
        }
        InitDist::Uniform => {}
    }
    let phi = |l: usize| -> f64 {
        match dist {
            InitDist::Geometric { alpha } => alpha * (1.0 - alpha).powi(l as i32),
            InitDist::Poisson { t } => {
                // e^{-t}·t^l/l!, built multiplicatively to avoid factorial overflow.
                let mut v = (-t).exp();
                for i in 1..=l {
                    v *= t / i as f64;
                }
                v
            }
            InitDist::Uniform => 1.0 / (max_hop as f64 + 1.0),
        }
    };
    let mut alphas = Vec::with_capacity(max_hop + 1);
    let mut consumed = 0.0;
    for k in 0..=max_hop {
        let remaining = 1.0 - consumed;
        let mass = phi(k);
        let a = if remaining <= 0.0 { 1.0 } else { mass / remaining };
        let a = a.clamp(EPS_ALPHA, 1.0);
        alphas.push(a);
        consumed += mass;
    }
    Schedule::new(alphas)
}

/// Writes the schedule file: first line `L=<max hop>`, then one stopping
/// probability per line with 17 significant digits (every f64 round-trips).
pub fn write_schedule(s: &Schedule, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "L={}", s.max_hop()).map_err(|e| Error::io(path, e))?;
    for &a in s.alphas() {
        writeln!(w, "{a:.16e}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a schedule file written by [`write_schedule`].
pub fn read_schedule(path: &Path) -> Result<Schedule> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 0, "empty schedule file"))?;
    let first = first.map_err(|e| Error::io(path, e))?;
    let max_hop: usize = first
        .trim()
        .strip_prefix("L=")
        .ok_or_else(|| Error::parse(path, 1, "expected header \"L=<max hop>\""))?
        .parse()
        .map_err(|_| Error::parse(path, 1, "invalid hop count"))?;
    let mut alphas = Vec::with_capacity(max_hop + 1);
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let a: f64 = trimmed
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("invalid probability {trimmed:?}")))?;
        alphas.push(a);
    }
    if alphas.len() != max_hop + 1 {
        return Err(Error::parse(
            path,
            0,
            format!("expected {} probabilities, found {}", max_hop + 1, alphas.len()),
        ));
    }
    Schedule::new(alphas)
}
