//! Run configuration: a flat `key = value` file with `[graph]`, `[train]`,
//! `[embed]`, and `[eval]` sections, overlaid by command-line flags.
//!
//! Unknown sections and keys are errors — a typo must fail loudly rather
//! than silently fall back to a default. Full-line comments start with `#`
//! or `;`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lemane_core::schedule::InitDist;
use lemane_core::train::{GradMode, Task, TrainConfig};
use lemane_core::{Error, Result};

/// Where the inputs live and how to read them.
#[derive(Debug, Clone, Default)]
pub struct GraphConfig {
    pub path: Option<PathBuf>,
    pub directed: bool,
    pub labels: Option<PathBuf>,
}

/// Embedding-generation settings (the push → log → SVD stage).
#[derive(Debug, Clone)]
pub struct EmbedConfig {
    pub delta: f64,
    pub dim: usize,
    pub oversampling: usize,
    pub power_iters: usize,
    /// Randomized-SVD retries; the best reconstruction wins.
    pub attempts: usize,
    /// Graphs of at most this many nodes use the exact dense SVD instead.
    pub dense_cap: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            delta: 1e-5,
            dim: 128,
            oversampling: 10,
            power_iters: 2,
            attempts: 1,
            dense_cap: 4096,
        }
    }
}

/// Evaluation protocol settings.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Fraction of labeled nodes the classifier trains on.
    pub train_ratio: f64,
    /// Count the 5% schedule-training nodes toward `train_ratio`.
    pub trained_with_5pct: bool,
    /// Fraction of edges hidden for the link-prediction test split.
    pub hide_ratio: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_ratio: 0.5,
            trained_with_5pct: true,
            hide_ratio: 0.3,
        }
    }
}

/// The full merged configuration of one run.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub graph: GraphConfig,
    pub train: TrainConfig,
    pub embed: EmbedConfig,
    pub eval: EvalConfig,
}

fn parse_key<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::InvalidParameter(format!("[{section}] {key}: cannot parse {value:?}"))
    })
}

fn parse_bool(section: &str, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::InvalidParameter(format!(
            "[{section}] {key}: expected true or false, got {other:?}"
        ))),
    }
}

pub fn parse_task(value: &str) -> Result<Task> {
    match value {
        "link" => Ok(Task::Link),
        "class" => Ok(Task::Class),
        other => Err(Error::InvalidParameter(format!(
            "task must be link or class, got {other:?}"
        ))),
    }
}

fn parse_grad_mode(value: &str) -> Result<GradMode> {
    match value {
        "analytic" => Ok(GradMode::Analytic),
        "fd" => Ok(GradMode::FiniteDiff),
        other => Err(Error::InvalidParameter(format!(
            "grad_mode must be analytic or fd, got {other:?}"
        ))),
    }
}

/// `uniform`, `geometric:<alpha>`, or `poisson:<t>`.
fn parse_init(value: &str) -> Result<InitDist> {
    if value == "uniform" {
        return Ok(InitDist::Uniform);
    }
    if let Some(a) = value.strip_prefix("geometric:") {
        return Ok(InitDist::Geometric {
            alpha: parse_key("train", "init", a)?,
        });
    }
    if let Some(t) = value.strip_prefix("poisson:") {
        return Ok(InitDist::Poisson {
            t: parse_key("train", "init", t)?,
        });
    }
    Err(Error::InvalidParameter(format!(
        "init must be uniform, geometric:<alpha>, or poisson:<t>, got {value:?}"
    )))
}

fn render_init(init: InitDist) -> String {
    match init {
        InitDist::Uniform => "uniform".into(),
        InitDist::Geometric { alpha } => format!("geometric:{alpha}"),
        InitDist::Poisson { t } => format!("poisson:{t}"),
    }
}

fn render_task(task: Task) -> &'static str {
    match task {
        Task::Link => "link",
        Task::Class => "class",
    }
}

fn render_grad_mode(mode: GradMode) -> &'static str {
    match mode {
        GradMode::Analytic => "analytic",
        GradMode::FiniteDiff => "fd",
    }
}

impl RunConfig {
    /// Reads and overlays a config file onto the defaults. Relative input
    /// paths inside the file resolve against the file's own directory, so a
    /// config works no matter where the command runs.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.apply_file(path)?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            for slot in [&mut cfg.graph.path, &mut cfg.graph.labels] {
                if let Some(p) = slot.take() {
                    *slot = Some(if p.is_relative() { dir.join(p) } else { p });
                }
            }
        }
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                match name {
                    "graph" | "train" | "embed" | "eval" => section = Some(name.to_string()),
                    other => {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("unknown section [{other}]"),
                        ))
                    }
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(path, lineno, "expected 'key = value'"));
            };
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(Error::parse(path, lineno, format!("empty value for {key}")));
            }
            let Some(section) = section.as_deref() else {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("key {key} appears before any [section]"),
                ));
            };
            self.apply_key(section, key, value).map_err(|e| match e {
                Error::InvalidParameter(msg) => Error::parse(path, lineno, msg),
                other => other,
            })?;
        }
        Ok(())
    }

    fn apply_key(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        match (section, key) {
            ("graph", "path") => self.graph.path = Some(PathBuf::from(value)),
            ("graph", "directed") => self.graph.directed = parse_bool(section, key, value)?,
            ("graph", "labels") => self.graph.labels = Some(PathBuf::from(value)),

            ("train", "seed") => self.train.seed = parse_key(section, key, value)?,
            ("train", "task") => self.train.task = parse_task(value)?,
            ("train", "l_max") => self.train.l_max = parse_key(section, key, value)?,
            ("train", "dim") => self.train.dim = parse_key(section, key, value)?,
            ("train", "delta") => self.train.delta = parse_key(section, key, value)?,
            ("train", "beta") => self.train.beta = parse_key(section, key, value)?,
            ("train", "gamma") => self.train.gamma = parse_key(section, key, value)?,
            ("train", "learning_rate") => {
                self.train.learning_rate = parse_key(section, key, value)?
            }
            ("train", "max_iters") => self.train.max_iters = parse_key(section, key, value)?,
            ("train", "convergence_tol") => {
                self.train.convergence_tol = parse_key(section, key, value)?
            }
            ("train", "n_s") => self.train.n_s = parse_key(section, key, value)?,
            ("train", "init") => self.train.init = parse_init(value)?,
            ("train", "negatives_per_node") => {
                self.train.negatives_per_node = parse_key(section, key, value)?
            }
            ("train", "grad_mode") => self.train.grad_mode = parse_grad_mode(value)?,
            ("train", "use_true_edge_count") => {
                self.train.use_true_edge_count = parse_bool(section, key, value)?
            }
            ("train", "fd_step") => self.train.fd_step = parse_key(section, key, value)?,
            ("train", "dense_cap") => self.train.dense_cap = parse_key(section, key, value)?,

            ("embed", "delta") => self.embed.delta = parse_key(section, key, value)?,
            ("embed", "dim") => self.embed.dim = parse_key(section, key, value)?,
            ("embed", "oversampling") => self.embed.oversampling = parse_key(section, key, value)?,
            ("embed", "power_iters") => self.embed.power_iters = parse_key(section, key, value)?,
            ("embed", "attempts") => self.embed.attempts = parse_key(section, key, value)?,
            ("embed", "dense_cap") => self.embed.dense_cap = parse_key(section, key, value)?,

            ("eval", "train_ratio") => self.eval.train_ratio = parse_key(section, key, value)?,
            ("eval", "trained_with_5pct") => {
                self.eval.trained_with_5pct = parse_bool(section, key, value)?
            }
            ("eval", "hide_ratio") => self.eval.hide_ratio = parse_key(section, key, value)?,

            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown key {key:?} in section [{section}]"
                )))
            }
        }
        Ok(())
    }

    /// Checks everything a command relies on before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(self.embed.delta > 0.0 && self.embed.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "[embed] delta must lie in (0,1), got {}",
                self.embed.delta
            )));
        }
        if self.embed.dim == 0 {
            return Err(Error::InvalidParameter("[embed] dim must be positive".into()));
        }
        if self.embed.oversampling < 2 {
            return Err(Error::InvalidParameter(format!(
                "[embed] oversampling must be at least 2, got {}",
                self.embed.oversampling
            )));
        }
        if self.embed.attempts == 0 {
            return Err(Error::InvalidParameter("[embed] attempts must be at least 1".into()));
        }
        if !(self.eval.train_ratio > 0.0 && self.eval.train_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "[eval] train_ratio must lie in (0,1), got {}",
                self.eval.train_ratio
            )));
        }
        if !(self.eval.hide_ratio > 0.0 && self.eval.hide_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "[eval] hide_ratio must lie in (0,1), got {}",
                self.eval.hide_ratio
            )));
        }
        Ok(())
    }

    /// The canonical section → key → value rendering recorded in manifests.
    /// Rebuilding a config from this snapshot reproduces the run.
    pub fn snapshot(&self) -> BTreeMap<String, BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        let mut graph = BTreeMap::new();
        if let Some(p) = &self.graph.path {
            graph.insert("path".into(), p.display().to_string());
        }
        graph.insert("directed".into(), self.graph.directed.to_string());
        if let Some(p) = &self.graph.labels {
            graph.insert("labels".into(), p.display().to_string());
        }
        out.insert("graph".into(), graph);

        let t = &self.train;
        let mut train = BTreeMap::new();
        train.insert("seed".into(), t.seed.to_string());
        train.insert("task".into(), render_task(t.task).into());
        train.insert("l_max".into(), t.l_max.to_string());
        train.insert("dim".into(), t.dim.to_string());
        train.insert("delta".into(), t.delta.to_string());
        train.insert("beta".into(), t.beta.to_string());
        train.insert("gamma".into(), t.gamma.to_string());
        train.insert("learning_rate".into(), t.learning_rate.to_string());
        train.insert("max_iters".into(), t.max_iters.to_string());
        train.insert("convergence_tol".into(), t.convergence_tol.to_string());
        train.insert("n_s".into(), t.n_s.to_string());
        train.insert("init".into(), render_init(t.init));
        train.insert("negatives_per_node".into(), t.negatives_per_node.to_string());
        train.insert("grad_mode".into(), render_grad_mode(t.grad_mode).into());
        train.insert("use_true_edge_count".into(), t.use_true_edge_count.to_string());
        train.insert("fd_step".into(), t.fd_step.to_string());
        train.insert("dense_cap".into(), t.dense_cap.to_string());
        out.insert("train".into(), train);

        let e = &self.embed;
        let mut embed = BTreeMap::new();
        embed.insert("delta".into(), e.delta.to_string());
        embed.insert("dim".into(), e.dim.to_string());
        embed.insert("oversampling".into(), e.oversampling.to_string());
        embed.insert("power_iters".into(), e.power_iters.to_string());
        embed.insert("attempts".into(), e.attempts.to_string());
        embed.insert("dense_cap".into(), e.dense_cap.to_string());
        out.insert("embed".into(), embed);

        let v = &self.eval;
        let mut eval = BTreeMap::new();
        eval.insert("train_ratio".into(), v.train_ratio.to_string());
        eval.insert("trained_with_5pct".into(), v.trained_with_5pct.to_string());
        eval.insert("hide_ratio".into(), v.hide_ratio.to_string());
        out.insert("eval".into(), eval);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(text: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ini");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn parses_a_full_config() {
        let (_d, p) = write_config(
            "# comment\n\
             [graph]\n\
             path = g.edges\n\
             directed = true\n\
             labels = g.labels\n\
             [train]\n\
             seed = 7\n\
             task = class\n\
             dim = 16\n\
             delta = 1e-4\n\
             init = geometric:0.2\n\
             [embed]\n\
             delta = 1e-6\n\
             dim = 32\n\
             [eval]\n\
             train_ratio = 0.3\n",
        );
        let cfg = RunConfig::load(&p).unwrap();
        // Relative inputs resolve against the config file's directory.
        assert_eq!(
            cfg.graph.path.as_deref(),
            Some(p.parent().unwrap().join("g.edges").as_path())
        );
        assert!(cfg.graph.directed);
        assert_eq!(cfg.train.seed, 7);
        assert_eq!(cfg.train.task, Task::Class);
        assert_eq!(cfg.train.dim, 16);
        assert_eq!(cfg.train.delta, 1e-4);
        assert_eq!(cfg.train.init, InitDist::Geometric { alpha: 0.2 });
        assert_eq!(cfg.embed.delta, 1e-6);
        assert_eq!(cfg.embed.dim, 32);
        assert_eq!(cfg.eval.train_ratio, 0.3);
        // Untouched keys keep their defaults.
        assert_eq!(cfg.train.l_max, 15);
        assert_eq!(cfg.embed.oversampling, 10);
        assert_eq!(cfg.eval.hide_ratio, 0.3);
    }

    #[test]
    fn unknown_keys_and_sections_fail_fast() {
        let (_d, p) = write_config("[train]\nlearningrate = 0.1\n");
        assert!(RunConfig::load(&p).is_err());
        let (_d, p) = write_config("[training]\nseed = 1\n");
        assert!(RunConfig::load(&p).is_err());
        let (_d, p) = write_config("seed = 1\n");
        assert!(RunConfig::load(&p).is_err(), "key before any section");
    }

    #[test]
    fn bad_values_name_the_offender() {
        let (_d, p) = write_config("[train]\nseed = abc\n");
        let err = RunConfig::load(&p).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
        let (_d, p) = write_config("[train]\ntask = edges\n");
        assert!(RunConfig::load(&p).is_err());
        let (_d, p) = write_config("[graph]\ndirected = yes\n");
        assert!(RunConfig::load(&p).is_err());
        let (_d, p) = write_config("[train]\ninit = binomial:3\n");
        assert!(RunConfig::load(&p).is_err());
    }

    #[test]
    fn delta_grid_values_parse_and_validate() {
        for delta in ["1e-7", "1e-6", "1e-5", "1e-4"] {
            let (_d, p) = write_config(&format!(
                "[train]\ndelta = {delta}\nn_s = 200\ndim = 16\n[embed]\ndelta = {delta}\n"
            ));
            let cfg = RunConfig::load(&p).unwrap();
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn validate_rejects_out_of_range_protocol_knobs() {
        let mut cfg = RunConfig::default();
        cfg.train.n_s = 200;
        cfg.train.dim = 16;
        cfg.validate().unwrap();
        cfg.eval.hide_ratio = 1.0;
        assert!(cfg.validate().is_err());
        cfg.eval.hide_ratio = 0.3;
        cfg.embed.oversampling = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn snapshot_round_trips_through_apply() {
        let mut cfg = RunConfig::default();
        cfg.graph.path = Some(PathBuf::from("data/x.edges"));
        cfg.train.seed = 99;
        cfg.train.init = InitDist::Poisson { t: 2.5 };
        cfg.embed.delta = 1e-6;
        let snap = cfg.snapshot();
        let mut rebuilt = RunConfig::default();
        for (section, keys) in &snap {
            for (key, value) in keys {
                rebuilt.apply_key(section, key, value).unwrap();
            }
        }
        assert_eq!(rebuilt.snapshot(), snap, "snapshot → apply → snapshot is stable");
    }
}
