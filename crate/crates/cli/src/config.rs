//! Run configuration: a flat key=value namespace filled from defaults, an
//! optional config file, and `--key value` command-line overrides (flags win).
//! Unknown keys are rejected, and everything is validated against module
//! preconditions before any command does work.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use pcconv_core::filter::validate_t;
use pcconv_core::fit::target_zoo;
use pcconv_core::model::{baseline_mode, BaselineMode, ModelConfig, TrainConfig};

/// How the node set is partitioned for training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitKind {
    /// 20 per class / 500 validation / 1000 test.
    Citation,
    /// 2.5% / 2.5% / 95%.
    Sparse,
    /// train/validation fractions, remainder to test.
    Ratio(f64, f64),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub eta: f64,
    pub p: f64,
    pub t: f64,
    pub n_order: usize,
    pub k_order: usize,
    pub hidden: usize,
    pub mlp_layers: usize,
    pub dropout: f64,
    pub lr: f64,
    pub theta_lr: Option<f64>,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub mode: String,
    pub split: String,
    pub dataset_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    // Subcommand-specific knobs share the same namespace.
    pub grid: usize,
    pub target: String,
    pub theta: Option<Vec<f64>>,
    pub m: usize,
    pub classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub d: usize,
    pub mu: f64,
    pub sigma: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eta: 0.5,
            p: 2.0,
            t: 0.5,
            n_order: 10,
            k_order: 4,
            hidden: 64,
            mlp_layers: 1,
            dropout: 0.0,
            lr: 0.05,
            theta_lr: None,
            weight_decay: 5e-4,
            max_epochs: 1000,
            patience: 200,
            seed: 0,
            mode: "pcnet".into(),
            split: "ratio:0.6/0.2".into(),
            dataset_dir: None,
            out_dir: PathBuf::from("out"),
            grid: 201,
            target: "low_band_pass".into(),
            theta: None,
            m: 50,
            classes: 3,
            p_in: 0.05,
            p_out: 0.005,
            d: 16,
            mu: 1.0,
            sigma: 0.5,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("key '{key}': cannot parse '{value}'"))
}

impl RunConfig {
    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "eta" => self.eta = parse_num(key, value)?,
            "p" => self.p = parse_num(key, value)?,
            "t" => self.t = parse_num(key, value)?,
            "N" => self.n_order = parse_num(key, value)?,
            "K" => self.k_order = parse_num(key, value)?,
            "hidden" => self.hidden = parse_num(key, value)?,
            "mlp_layers" => self.mlp_layers = parse_num(key, value)?,
            "dropout" => self.dropout = parse_num(key, value)?,
            "lr" => self.lr = parse_num(key, value)?,
            "theta_lr" => self.theta_lr = Some(parse_num(key, value)?),
            "weight_decay" => self.weight_decay = parse_num(key, value)?,
            "max_epochs" => self.max_epochs = parse_num(key, value)?,
            "patience" => self.patience = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "mode" => self.mode = value.to_string(),
            "split" => self.split = value.to_string(),
            "dataset_dir" => self.dataset_dir = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "grid" => self.grid = parse_num(key, value)?,
            "target" => self.target = value.to_string(),
            "theta" => {
                let parsed: Result<Vec<f64>, _> =
                    value.split(',').map(|tok| tok.trim().parse()).collect();
                self.theta =
                    Some(parsed.map_err(|_| format!("key 'theta': cannot parse '{value}'"))?);
            }
            "m" => self.m = parse_num(key, value)?,
            "classes" => self.classes = parse_num(key, value)?,
            "p_in" => self.p_in = parse_num(key, value)?,
            "p_out" => self.p_out = parse_num(key, value)?,
            "d" => self.d = parse_num(key, value)?,
            "mu" => self.mu = parse_num(key, value)?,
            "sigma" => self.sigma = parse_num(key, value)?,
            other => return Err(format!("unknown configuration key '{other}'")),
        }
        Ok(())
    }

    /// Builds a config from `--config <file>` plus `--key value` overrides.
    pub fn from_args(args: &[String]) -> Result<Self, String> {
        let mut config_path: Option<PathBuf> = None;
        let mut overrides: Vec<(String, String)> = Vec::new();
        let mut iter = args.iter();
        while let Some(arg) = iter.next() {
            let key = arg
                .strip_prefix("--")
                .ok_or_else(|| format!("expected '--key value', found '{arg}'"))?;
            let value = iter
                .next()
                .ok_or_else(|| format!("flag '--{key}' is missing a value"))?;
            if key == "config" {
                config_path = Some(PathBuf::from(value));
            } else {
                overrides.push((key.to_string(), value.to_string()));
            }
        }

        let mut cfg = RunConfig::default();
        if let Some(path) = config_path {
            let text = fs::read_to_string(&path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            for (ln, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), ln + 1))?;
                cfg.apply(key.trim(), value.trim())
                    .map_err(|e| format!("{}:{}: {e}", path.display(), ln + 1))?;
            }
        }
        for (key, value) in &overrides {
            cfg.apply(key, value)?;
        }
        Ok(cfg)
    }

    /// Module-precondition validation; runs before any output is written.
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(format!("eta = {} outside [0, 1]", self.eta));
        }
        if self.p < 2.0 {
            return Err(format!("p = {} below 2", self.p));
        }
        if self.k_order == 0 {
            return Err("K must be at least 1".into());
        }
        validate_t(self.t, self.k_order).map_err(|e| e.to_string())?;
        if let Some(theta) = &self.theta {
            if theta.len() != self.k_order + 1 {
                return Err(format!(
                    "theta holds {} values but K = {} needs {}",
                    theta.len(),
                    self.k_order,
                    self.k_order + 1
                ));
            }
        }
        if self.grid < self.k_order + 2 {
            return Err(format!(
                "grid = {} too small for K = {}",
                self.grid, self.k_order
            ));
        }
        self.mode_kind()?;
        self.model_config().validate().map_err(|e| e.to_string())?;
        self.train_config().validate().map_err(|e| e.to_string())?;
        self.split_kind()?;
        target_zoo(&self.target).map_err(|e| e.to_string())?;
        if self.classes == 0 || self.m < 2 * self.classes {
            return Err(format!(
                "m = {} too small for {} classes",
                self.m, self.classes
            ));
        }
        for (name, prob) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&prob) {
                return Err(format!("{name} = {prob} outside [0, 1]"));
            }
        }
        if self.p_in == 0.0 && self.p_out == 0.0 {
            return Err("degenerate SBM: both edge probabilities are zero".into());
        }
        if self.d == 0 {
            return Err("d must be positive".into());
        }
        Ok(())
    }

    pub fn split_kind(&self) -> Result<SplitKind, String> {
        match self.split.as_str() {
            "citation" => Ok(SplitKind::Citation),
            "sparse" => Ok(SplitKind::Sparse),
            other => {
                let fractions = other
                    .strip_prefix("ratio:")
                    .ok_or_else(|| format!("unknown split '{other}'"))?;
                let (a, b) = fractions
                    .split_once('/')
                    .ok_or_else(|| format!("split ratio '{fractions}' is not 'a/b'"))?;
                let train: f64 = a.parse().map_err(|_| format!("bad ratio '{a}'"))?;
                let val: f64 = b.parse().map_err(|_| format!("bad ratio '{b}'"))?;
                if train <= 0.0 || val <= 0.0 || train + val >= 1.0 {
                    return Err(format!("infeasible split fractions {train}/{val}"));
                }
                Ok(SplitKind::Ratio(train, val))
            }
        }
    }

    pub fn mode_kind(&self) -> Result<BaselineMode, String> {
        baseline_mode(&self.mode).map_err(|e| e.to_string())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            t: self.t,
            p: self.p,
            eta: self.eta,
            n_order: self.n_order,
            k_order: self.k_order,
            hidden: self.hidden,
            mlp_layers: self.mlp_layers,
            dropout: self.dropout,
            mode: self.mode_kind().unwrap_or(BaselineMode::PcNet),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            weight_decay: self.weight_decay,
            theta_learning_rate: self.theta_lr,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
        }
    }

    /// Default bank coefficients when no explicit `theta` is configured.
    pub fn theta_or_default(&self) -> Vec<f64> {
        self.theta.clone().unwrap_or_else(|| {
            let mut th = vec![1.0 / self.k_order as f64; self.k_order + 1];
            th[0] = 1.0;
            th
        })
    }

    /// The fully resolved configuration as sorted key=value lines.
    pub fn resolved(&self, command: &str) -> String {
        let mut map = BTreeMap::new();
        map.insert("command", command.to_string());
        map.insert("eta", self.eta.to_string());
        map.insert("p", self.p.to_string());
        map.insert("t", self.t.to_string());
        map.insert("N", self.n_order.to_string());
        map.insert("K", self.k_order.to_string());
        map.insert("hidden", self.hidden.to_string());
        map.insert("mlp_layers", self.mlp_layers.to_string());
        map.insert("dropout", self.dropout.to_string());
        map.insert("lr", self.lr.to_string());
        map.insert(
            "theta_lr",
            self.theta_lr.map_or("default".into(), |v| v.to_string()),
        );
        map.insert("weight_decay", self.weight_decay.to_string());
        map.insert("max_epochs", self.max_epochs.to_string());
        map.insert("patience", self.patience.to_string());
        map.insert("seed", self.seed.to_string());
        map.insert("mode", self.mode.clone());
        map.insert("split", self.split.clone());
        map.insert(
            "dataset_dir",
            self.dataset_dir
                .as_ref()
                .map_or("unset".into(), |p| p.display().to_string()),
        );
        map.insert("out_dir", self.out_dir.display().to_string());
        map.insert("grid", self.grid.to_string());
        map.insert("target", self.target.clone());
        map.insert(
            "theta",
            self.theta.as_ref().map_or("default".into(), |th| {
                th.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            }),
        );
        map.insert("m", self.m.to_string());
        map.insert("classes", self.classes.to_string());
        map.insert("p_in", self.p_in.to_string());
        map.insert("p_out", self.p_out.to_string());
        map.insert("d", self.d.to_string());
        map.insert("mu", self.mu.to_string());
        map.insert("sigma", self.sigma.to_string());

        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}
