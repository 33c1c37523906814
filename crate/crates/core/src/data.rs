//! Dataset ingestion, synthetic stochastic-block-model generation, and the
//! split protocols used by the experiments.
//!
//! On-disk layout is plain text: `edges.tsv` (two 0-based node ids per line),
//! `features.csv` (one row of comma-separated reals per node), `labels.csv`
//! (one integer class per node). The SBM generator gives graphs with
//! controllable edge homophily plus Gaussian class features, reproducible
//! from an integer seed.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;
use crate::rng::SplitMix64;

/// A node-classification dataset: graph, features, labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    /// Validates shape agreement and that every class in `0..C` occurs.
    pub fn new(graph: Graph, features: DenseMatrix, labels: Vec<usize>) -> Result<Self> {
        let m = graph.n_nodes();
        if features.n_rows() != m {
            return Err(Error::dims(format!(
                "{} feature rows for {m} nodes",
                features.n_rows()
            )));
        }
        if labels.len() != m {
            return Err(Error::dims(format!(
                "{} labels for {m} nodes",
                labels.len()
            )));
        }
        let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
        if n_classes == 0 {
            return Err(Error::invalid("dataset has no labels"));
        }
        let mut seen = vec![false; n_classes];
        for &c in &labels {
            seen[c] = true;
        }
        if let Some(gap) = seen.iter().position(|&s| !s) {
            return Err(Error::invalid(format!(
                "label gap: class {gap} absent although classes up to {} occur",
                n_classes - 1
            )));
        }
        Ok(Self {
            graph,
            features,
            labels,
            n_classes,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.n_cols()
    }
}

/// Disjoint train/validation/test node index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl Split {
    /// Checks disjointness, bounds, and non-emptiness.
    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        if self.train_idx.is_empty() || self.val_idx.is_empty() || self.test_idx.is_empty() {
            return Err(Error::invalid("split has an empty part"));
        }
        let mut seen = vec![false; n_nodes];
        for idx in [&self.train_idx, &self.val_idx, &self.test_idx] {
            for &i in idx {
                if i >= n_nodes {
                    return Err(Error::invalid(format!("split index {i} out of range")));
                }
                if seen[i] {
                    return Err(Error::invalid(format!("node {i} appears in two parts")));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(text.lines().map(|l| l.to_string()).collect())
}

/// Loads a dataset from `edges.tsv`, `features.csv`, and `labels.csv`.
///
/// Duplicate and reversed edge lines merge; self-loops are rejected with the
/// offending line number.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let feat_path = dir.join("features.csv");
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in read_lines(&feat_path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: feat_path.display().to_string(),
                    line: ln + 1,
                    message: format!("bad real value '{}'", tok.trim()),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    path: feat_path.display().to_string(),
                    line: ln + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::invalid("features.csv holds no rows"));
    }
    let m = rows.len();
    let d = rows[0].len();
    let features = DenseMatrix::from_vec(m, d, rows.concat())?;

    let label_path = dir.join("labels.csv");
    let mut labels = Vec::with_capacity(m);
    for (ln, line) in read_lines(&label_path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: usize = line.trim().parse().map_err(|_| Error::Parse {
            path: label_path.display().to_string(),
            line: ln + 1,
            message: format!("bad label '{}'", line.trim()),
        })?;
        labels.push(value);
    }

    let edge_path = dir.join("edges.tsv");
    let mut edges = Vec::new();
    for (ln, line) in read_lines(&edge_path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse_id = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or_else(|| Error::Parse {
                path: edge_path.display().to_string(),
                line: ln + 1,
                message: "expected two node ids".into(),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                path: edge_path.display().to_string(),
                line: ln + 1,
                message: format!("bad node id in '{line}'"),
            })
        };
        let u = parse_id(parts.next())?;
        let v = parse_id(parts.next())?;
        if u == v {
            return Err(Error::Parse {
                path: edge_path.display().to_string(),
                line: ln + 1,
                message: format!("self-loop on node {u}"),
            });
        }
        if u >= m || v >= m {
            return Err(Error::Parse {
                path: edge_path.display().to_string(),
                line: ln + 1,
                message: format!("node id {} out of range (m = {m})", u.max(v)),
            });
        }
        edges.push((u, v));
    }
    let graph = Graph::new(m, edges)?;
    Dataset::new(graph, features, labels)
}

/// Writes `edges.tsv`, `features.csv`, and `labels.csv` under `dir`.
pub fn save_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let write = |name: &str, content: String| -> Result<()> {
        let path = dir.join(name);
        let mut f =
            fs::File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        f.write_all(content.as_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))
    };

    let mut edges = String::new();
    for &(u, v) in ds.graph.edges() {
        edges.push_str(&format!("{u}\t{v}\n"));
    }
    write("edges.tsv", edges)?;

    let mut feats = String::new();
    for i in 0..ds.n_nodes() {
        let row: Vec<String> = ds.features.row(i).iter().map(|v| format!("{v}")).collect();
        feats.push_str(&row.join(","));
        feats.push('\n');
    }
    write("features.csv", feats)?;

    let mut labels = String::new();
    for &c in &ds.labels {
        labels.push_str(&format!("{c}\n"));
    }
    write("labels.csv", labels)
}

/// Scales each feature row to unit L1 norm; zero rows stay zero. Useful for
/// bag-of-words inputs.
pub fn row_normalize(features: &mut DenseMatrix) {
    for i in 0..features.n_rows() {
        let row = features.row_mut(i);
        let norm: f64 = row.iter().map(|v| v.abs()).sum();
        if norm > 0.0 {
            for v in row {
                *v /= norm;
            }
        }
    }
}

/// Parameters of the stochastic block model generator.
#[derive(Debug, Clone, Copy)]
pub struct SbmConfig {
    pub n_nodes: usize,
    pub n_classes: usize,
    /// Edge probability between same-class nodes.
    pub p_in: f64,
    /// Edge probability between different-class nodes.
    pub p_out: f64,
    pub feature_dim: usize,
    /// Magnitude of the class mean vectors.
    pub mu: f64,
    /// Isotropic feature noise.
    pub sigma: f64,
    pub seed: u64,
}

/// Generates an SBM dataset with round-robin class assignment and Gaussian
/// class features.
///
/// Graph sampling consumes one uniform per unordered pair in a fixed order,
/// so output is byte-stable for a given seed. Class means are coordinate axes
/// scaled by `mu` when the feature dimension allows (exactly orthogonal);
/// otherwise random unit directions.
pub fn sbm_generate(cfg: &SbmConfig) -> Result<Dataset> {
    if cfg.n_classes == 0 || cfg.n_nodes < 2 * cfg.n_classes {
        return Err(Error::invalid(format!(
            "sbm needs m >= 2C, got m = {}, C = {}",
            cfg.n_nodes, cfg.n_classes
        )));
    }
    for (name, p) in [("p_in", cfg.p_in), ("p_out", cfg.p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("{name} = {p} outside [0, 1]")));
        }
    }
    if cfg.p_in == 0.0 && cfg.p_out == 0.0 {
        return Err(Error::invalid(
            "degenerate SBM: both edge probabilities are zero",
        ));
    }
    if cfg.feature_dim == 0 {
        return Err(Error::invalid("feature_dim must be positive"));
    }

    let labels: Vec<usize> = (0..cfg.n_nodes).map(|i| i % cfg.n_classes).collect();
    let mut rng = SplitMix64::new(cfg.seed);

    let mut edges = Vec::new();
    for u in 0..cfg.n_nodes {
        for v in (u + 1)..cfg.n_nodes {
            let p = if labels[u] == labels[v] {
                cfg.p_in
            } else {
                cfg.p_out
            };
            if rng.next_f64() < p {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::new(cfg.n_nodes, edges)?;

    let mut means = DenseMatrix::zeros(cfg.n_classes, cfg.feature_dim);
    if cfg.feature_dim >= cfg.n_classes {
        for c in 0..cfg.n_classes {
            means.set(c, c, cfg.mu);
        }
    } else {
        for c in 0..cfg.n_classes {
            let dir: Vec<f64> = (0..cfg.feature_dim).map(|_| rng.next_gaussian()).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            for (j, v) in dir.iter().enumerate() {
                means.set(c, j, cfg.mu * v / norm);
            }
        }
    }

    let mut features = DenseMatrix::zeros(cfg.n_nodes, cfg.feature_dim);
    for (i, &c) in labels.iter().enumerate() {
        for j in 0..cfg.feature_dim {
            features.set(i, j, means.get(c, j) + cfg.sigma * rng.next_gaussian());
        }
    }

    Dataset::new(graph, features, labels)
}

/// Citation-style split sizes: 20 per class, then 500 validation and 1000
/// test nodes.
pub const CITATION_TRAIN_PER_CLASS: usize = 20;
pub const CITATION_VAL: usize = 500;
pub const CITATION_TEST: usize = 1000;

/// Fraction used for both train and validation in sparse splitting.
pub const SPARSE_FRACTION: f64 = 0.025;

/// The two sparse split protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparseSplitMode {
    /// 20 nodes per class for training, 500 validation, 1000 test.
    Citation,
    /// 2.5% / 2.5% / 95% with floor rounding, remainder to test.
    Fraction,
}

pub fn split_sparse(ds: &Dataset, seed: u64, mode: SparseSplitMode) -> Result<Split> {
    let m = ds.n_nodes();
    let mut rng = SplitMix64::new(seed);
    let split = match mode {
        SparseSplitMode::Citation => {
            let mut train = Vec::with_capacity(CITATION_TRAIN_PER_CLASS * ds.n_classes);
            for c in 0..ds.n_classes {
                let mut members: Vec<usize> = (0..m).filter(|&i| ds.labels[i] == c).collect();
                if members.len() < CITATION_TRAIN_PER_CLASS {
                    return Err(Error::invalid(format!(
                        "class {c} has {} nodes, needs {CITATION_TRAIN_PER_CLASS}",
                        members.len()
                    )));
                }
                rng.shuffle(&mut members);
                train.extend_from_slice(&members[..CITATION_TRAIN_PER_CLASS]);
            }
            let in_train: Vec<bool> = {
                let mut mask = vec![false; m];
                for &i in &train {
                    mask[i] = true;
                }
                mask
            };
            let mut rest: Vec<usize> = (0..m).filter(|&i| !in_train[i]).collect();
            if rest.len() < CITATION_VAL + CITATION_TEST {
                return Err(Error::invalid(format!(
                    "{} remaining nodes cannot fill {CITATION_VAL} validation + {CITATION_TEST} test",
                    rest.len()
                )));
            }
            rng.shuffle(&mut rest);
            Split {
                train_idx: train,
                val_idx: rest[..CITATION_VAL].to_vec(),
                test_idx: rest[CITATION_VAL..CITATION_VAL + CITATION_TEST].to_vec(),
            }
        }
        SparseSplitMode::Fraction => {
            let n_train = (m as f64 * SPARSE_FRACTION).floor() as usize;
            let n_val = (m as f64 * SPARSE_FRACTION).floor() as usize;
            if n_train == 0 || n_val == 0 || n_train + n_val >= m {
                return Err(Error::invalid(format!(
                    "m = {m} too small for 2.5%/2.5%/95% splitting"
                )));
            }
            let mut order: Vec<usize> = (0..m).collect();
            rng.shuffle(&mut order);
            Split {
                train_idx: order[..n_train].to_vec(),
                val_idx: order[n_train..n_train + n_val].to_vec(),
                test_idx: order[n_train + n_val..].to_vec(),
            }
        }
    };
    let mut split = split;
    split.train_idx.sort_unstable();
    split.val_idx.sort_unstable();
    split.test_idx.sort_unstable();
    split.validate(m)?;
    Ok(split)
}

/// Random split by fractions; floor counts for train and validation, the
/// remainder goes to test.
pub fn split_ratio(ds: &Dataset, train_frac: f64, val_frac: f64, seed: u64) -> Result<Split> {
    if !(0.0..1.0).contains(&train_frac)
        || !(0.0..1.0).contains(&val_frac)
        || train_frac <= 0.0
        || val_frac <= 0.0
        || train_frac + val_frac >= 1.0
    {
        return Err(Error::invalid(format!(
            "invalid split fractions {train_frac}/{val_frac}"
        )));
    }
    let m = ds.n_nodes();
    let n_train = (m as f64 * train_frac).floor() as usize;
    let n_val = (m as f64 * val_frac).floor() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= m {
        return Err(Error::invalid(format!(
            "m = {m} too small for {train_frac}/{val_frac} splitting"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut order);
    let mut split = Split {
        train_idx: order[..n_train].to_vec(),
        val_idx: order[n_train..n_train + n_val].to_vec(),
        test_idx: order[n_train + n_val..].to_vec(),
    };
    split.train_idx.sort_unstable();
    split.val_idx.sort_unstable();
    split.test_idx.sort_unstable();
    split.validate(m)?;
    Ok(split)
}
