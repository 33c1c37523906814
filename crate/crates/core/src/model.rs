//! PCNet: feature transform, PC-Conv with learnable bank coefficients,
//! softmax cross-entropy, hand-derived gradients, Adam, and an early-stopped
//! full-batch training loop.
//!
//! The forward pass caches the propagated powers `P_n = L^n H`; both the
//! logits and every gradient reuse them, so one epoch costs one propagation
//! sweep forward and one backward. Training is single-threaded and fully
//! deterministic for a fixed seed.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::filter::{fold_basis, FilterParams};
use crate::graph::{pc_laplacian, NormalizationConfig};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::pcpoly::build_table;
use crate::rng::SplitMix64;

/// Diffusion scale used by the low-pass baseline; small enough that every
/// bank filter collapses to `(1 - lambda)^k` while staying valid (`t > 0`).
pub const LOWPASS_T: f64 = 1e-6;

/// Training-time model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    /// Full PC-Conv bank.
    PcNet,
    /// `t` frozen at [`LOWPASS_T`]: an effectively pure `(1-lambda)^k` bank.
    LowPass,
    /// Bank coefficients frozen at the identity channel; propagation inert.
    MlpOnly,
}

/// Parses a mode flag as used by configs and the command line.
pub fn baseline_mode(flag: &str) -> Result<BaselineMode> {
    match flag {
        "pcnet" => Ok(BaselineMode::PcNet),
        "lowpass" => Ok(BaselineMode::LowPass),
        "mlp_only" => Ok(BaselineMode::MlpOnly),
        other => Err(Error::invalid(format!(
            "unknown mode '{other}'; expected pcnet, lowpass, or mlp_only"
        ))),
    }
}

/// Architecture and filter hyperparameters (fixed during training).
#[derive(Debug, Clone, Copy)]
pub struct ModelConfig {
    pub t: f64,
    pub p: f64,
    pub eta: f64,
    /// Truncation order N of every bank filter.
    pub n_order: usize,
    /// Bank size K.
    pub k_order: usize,
    pub hidden: usize,
    /// 1 = single linear transform, 2 = linear-ReLU-dropout-linear.
    pub mlp_layers: usize,
    pub dropout: f64,
    pub mode: BaselineMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            t: 0.5,
            p: 2.0,
            eta: 0.5,
            n_order: 10,
            k_order: 4,
            hidden: 64,
            mlp_layers: 1,
            dropout: 0.0,
            mode: BaselineMode::PcNet,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mlp_layers != 1 && self.mlp_layers != 2 {
            return Err(Error::invalid(format!(
                "mlp_layers = {} (must be 1 or 2)",
                self.mlp_layers
            )));
        }
        if self.mlp_layers == 2 && self.hidden == 0 {
            return Err(Error::invalid("two-layer transform needs hidden > 0"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!(
                "dropout = {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.k_order == 0 {
            return Err(Error::invalid("k_order must be at least 1"));
        }
        // The remaining fields share FilterParams validation.
        FilterParams::new(
            vec![0.0; self.k_order + 1],
            self.effective_t(),
            self.p,
            self.eta,
            self.n_order,
        )?;
        Ok(())
    }

    /// The diffusion scale after applying the mode constraint.
    pub fn effective_t(&self) -> f64 {
        match self.mode {
            BaselineMode::LowPass => LOWPASS_T,
            _ => self.t,
        }
    }
}

/// Optimization settings.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Separate rate for the bank coefficients; `None` follows
    /// `learning_rate`.
    pub theta_learning_rate: Option<f64>,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            weight_decay: 5e-4,
            theta_learning_rate: None,
            max_epochs: 1000,
            patience: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if let Some(tlr) = self.theta_learning_rate {
            if tlr <= 0.0 {
                return Err(Error::invalid("theta_learning_rate must be positive"));
            }
        }
        if self.weight_decay < 0.0 {
            return Err(Error::invalid("weight_decay must be non-negative"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be positive"));
        }
        if self.patience > self.max_epochs {
            return Err(Error::invalid(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        Ok(())
    }

    pub fn effective_theta_lr(&self) -> f64 {
        self.theta_learning_rate.unwrap_or(self.learning_rate)
    }
}

/// The PCNet node classifier.
#[derive(Debug, Clone)]
pub struct PcNetModel {
    w1: DenseMatrix,
    b1: Vec<f64>,
    w2: Option<DenseMatrix>,
    b2: Option<Vec<f64>>,
    filter: FilterParams,
    dropout: f64,
    mode: BaselineMode,
    /// `basis[n][k-1] = C_n(k, t) (-1)^n / n!`, fixed once t/N/K are set.
    basis: Vec<Vec<f64>>,
}

impl PcNetModel {
    /// Initializes weights (Glorot-scaled Gaussians, zero biases) and the
    /// bank coefficients (`theta_0 = 1`, `theta_k = 1/K`; the identity
    /// channel alone under [`BaselineMode::MlpOnly`]).
    pub fn init(
        feature_dim: usize,
        n_classes: usize,
        cfg: &ModelConfig,
        rng: &mut SplitMix64,
    ) -> Result<Self> {
        cfg.validate()?;
        if feature_dim == 0 || n_classes == 0 {
            return Err(Error::invalid("empty feature or class dimension"));
        }
        let t = cfg.effective_t();
        let mut theta = vec![0.0; cfg.k_order + 1];
        theta[0] = 1.0;
        if cfg.mode != BaselineMode::MlpOnly {
            for th in theta.iter_mut().skip(1) {
                *th = 1.0 / cfg.k_order as f64;
            }
        }
        let filter = FilterParams::new(theta, t, cfg.p, cfg.eta, cfg.n_order)?;
        let basis = fold_basis(&build_table(t, cfg.n_order, cfg.k_order)?);

        let glorot = |rows: usize, cols: usize, rng: &mut SplitMix64| {
            let scale = (2.0 / (rows + cols) as f64).sqrt();
            let mut w = DenseMatrix::zeros(rows, cols);
            for v in w.data_mut() {
                *v = scale * rng.next_gaussian();
            }
            w
        };

        let (w1, b1, w2, b2) = if cfg.mlp_layers == 1 {
            (
                glorot(feature_dim, n_classes, rng),
                vec![0.0; n_classes],
                None,
                None,
            )
        } else {
            (
                glorot(feature_dim, cfg.hidden, rng),
                vec![0.0; cfg.hidden],
                Some(glorot(cfg.hidden, n_classes, rng)),
                Some(vec![0.0; n_classes]),
            )
        };

        Ok(Self {
            w1,
            b1,
            w2,
            b2,
            filter,
            dropout: cfg.dropout,
            mode: cfg.mode,
            basis,
        })
    }

    pub fn filter(&self) -> &FilterParams {
        &self.filter
    }

    pub fn theta(&self) -> &[f64] {
        self.filter.theta()
    }

    pub fn mode(&self) -> BaselineMode {
        self.mode
    }

    pub fn n_classes(&self) -> usize {
        self.w2.as_ref().map_or(self.w1.n_cols(), |w2| w2.n_cols())
    }

    pub fn feature_dim(&self) -> usize {
        self.w1.n_rows()
    }

    pub fn mlp_layers(&self) -> usize {
        if self.w2.is_some() {
            2
        } else {
            1
        }
    }

    /// Power-basis coefficients of the current bank (theta folded against the
    /// coefficient basis).
    fn folded(&self) -> Vec<f64> {
        let theta = self.filter.theta();
        let mut a = vec![0.0; self.filter.n_order() + 1];
        for (n, row) in self.basis.iter().enumerate() {
            let mut acc = 0.0;
            for (km1, &phi) in row.iter().enumerate() {
                acc += theta[km1 + 1] * phi;
            }
            a[n] = acc;
        }
        a[0] += theta[0];
        a
    }

    /// The feature transform `Theta(X)` without dropout (evaluation path).
    pub fn feature_transform(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let mut h = affine(x, &self.w1, &self.b1)?;
        if let (Some(w2), Some(b2)) = (&self.w2, &self.b2) {
            relu_inplace(&mut h);
            h = affine(&h, w2, b2)?;
        }
        Ok(h)
    }

    /// Every learnable parameter flattened in the order W1, b1, [W2, b2],
    /// theta; [`Gradients::flat`] matches this layout.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut flat = self.w1.data().to_vec();
        flat.extend_from_slice(&self.b1);
        if let (Some(w2), Some(b2)) = (&self.w2, &self.b2) {
            flat.extend_from_slice(w2.data());
            flat.extend_from_slice(b2);
        }
        flat.extend_from_slice(self.filter.theta());
        flat
    }

    /// Writes parameters back in the [`Self::params_flat`] layout.
    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.params_flat().len();
        if flat.len() != expected {
            return Err(Error::dims(format!(
                "expected {expected} parameters, got {}",
                flat.len()
            )));
        }
        let mut pos = 0usize;
        let w1_len = self.w1.data().len();
        self.w1.data_mut().copy_from_slice(&flat[pos..pos + w1_len]);
        pos += w1_len;
        let b1_len = self.b1.len();
        self.b1.copy_from_slice(&flat[pos..pos + b1_len]);
        pos += b1_len;
        if let (Some(w2), Some(b2)) = (&mut self.w2, &mut self.b2) {
            let w2_len = w2.data().len();
            w2.data_mut().copy_from_slice(&flat[pos..pos + w2_len]);
            pos += w2_len;
            let b2_len = b2.len();
            b2.copy_from_slice(&flat[pos..pos + b2_len]);
            pos += b2_len;
        }
        self.filter.set_theta(flat[pos..].to_vec())
    }
}

fn affine(x: &DenseMatrix, w: &DenseMatrix, b: &[f64]) -> Result<DenseMatrix> {
    let mut out = x.matmul(w)?;
    for i in 0..out.n_rows() {
        let row = out.row_mut(i);
        for (v, bias) in row.iter_mut().zip(b) {
            *v += bias;
        }
    }
    Ok(out)
}

fn relu_inplace(m: &mut DenseMatrix) {
    for v in m.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn row_softmax(logits: &DenseMatrix) -> DenseMatrix {
    let mut probs = logits.clone();
    for i in 0..probs.n_rows() {
        let row = probs.row_mut(i);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    probs
}

/// Intermediate state captured by [`forward`] and consumed by [`backward`].
pub struct ForwardCache {
    x: DenseMatrix,
    pre_act: Option<DenseMatrix>,
    dropout_scale: Option<DenseMatrix>,
    dropped: Option<DenseMatrix>,
    powers: Vec<DenseMatrix>,
    folded: Vec<f64>,
    probs: DenseMatrix,
}

/// Full forward pass: feature transform, cached propagation powers, folded
/// logits, row softmax. Dropout fires only with `training` set and a
/// two-layer transform.
pub fn forward(
    model: &PcNetModel,
    l: &SparseMatrix,
    x: &DenseMatrix,
    training: bool,
    rng: &mut SplitMix64,
) -> Result<(DenseMatrix, ForwardCache)> {
    if l.n_rows() != l.n_cols() || l.n_rows() != x.n_rows() {
        return Err(Error::dims(format!(
            "forward: operator {}x{}, features {}x{}",
            l.n_rows(),
            l.n_cols(),
            x.n_rows(),
            x.n_cols()
        )));
    }
    if x.n_cols() != model.feature_dim() {
        return Err(Error::dims(format!(
            "forward: model expects {} features, got {}",
            model.feature_dim(),
            x.n_cols()
        )));
    }

    let mut pre_act = None;
    let mut dropout_scale = None;
    let mut dropped = None;
    let h = if let (Some(w2), Some(b2)) = (&model.w2, &model.b2) {
        let a1 = affine(x, &model.w1, &model.b1)?;
        let mut r = a1.clone();
        relu_inplace(&mut r);
        let d = if training && model.dropout > 0.0 {
            let keep = 1.0 - model.dropout;
            let mut scale = DenseMatrix::zeros(r.n_rows(), r.n_cols());
            for v in scale.data_mut() {
                *v = if rng.next_f64() < keep {
                    1.0 / keep
                } else {
                    0.0
                };
            }
            let mut d = r.clone();
            for (v, s) in d.data_mut().iter_mut().zip(scale.data()) {
                *v *= s;
            }
            dropout_scale = Some(scale);
            d
        } else {
            r.clone()
        };
        let h = affine(&d, w2, b2)?;
        pre_act = Some(a1);
        dropped = Some(d);
        h
    } else {
        affine(x, &model.w1, &model.b1)?
    };

    let folded = model.folded();
    let mut powers = Vec::with_capacity(folded.len());
    powers.push(h);
    for _ in 1..folded.len() {
        let next = l.spmm(powers.last().unwrap())?;
        powers.push(next);
    }
    let mut logits = powers[0].clone();
    logits.scale(folded[0]);
    for (n, power) in powers.iter().enumerate().skip(1) {
        logits.axpy(folded[n], power)?;
    }
    let probs = row_softmax(&logits);

    let cache = ForwardCache {
        x: x.clone(),
        pre_act,
        dropout_scale,
        dropped,
        powers,
        folded,
        probs: probs.clone(),
    };
    Ok((probs, cache))
}

/// Probability floor inside the cross-entropy.
const PROB_EPS: f64 = 1e-12;

/// Mean negative log-likelihood over the training indices.
pub fn loss(probs: &DenseMatrix, labels: &[usize], train_idx: &[usize]) -> Result<f64> {
    if train_idx.is_empty() {
        return Err(Error::invalid("loss over empty training set"));
    }
    if labels.len() != probs.n_rows() {
        return Err(Error::dims(format!(
            "{} labels for {} probability rows",
            labels.len(),
            probs.n_rows()
        )));
    }
    let mut total = 0.0;
    for &i in train_idx {
        if i >= probs.n_rows() {
            return Err(Error::invalid(format!("train index {i} out of range")));
        }
        let c = labels[i];
        if c >= probs.n_cols() {
            return Err(Error::invalid(format!("label {c} out of range")));
        }
        total -= probs.get(i, c).max(PROB_EPS).ln();
    }
    Ok(total / train_idx.len() as f64)
}

/// Gradients for every learnable parameter group.
pub struct Gradients {
    pub d_theta: Vec<f64>,
    pub d_w1: DenseMatrix,
    pub d_b1: Vec<f64>,
    pub d_w2: Option<DenseMatrix>,
    pub d_b2: Option<Vec<f64>>,
}

impl Gradients {
    /// Flattened in the [`PcNetModel::params_flat`] layout.
    pub fn flat(&self) -> Vec<f64> {
        let mut flat = self.d_w1.data().to_vec();
        flat.extend_from_slice(&self.d_b1);
        if let (Some(dw2), Some(db2)) = (&self.d_w2, &self.d_b2) {
            flat.extend_from_slice(dw2.data());
            flat.extend_from_slice(db2);
        }
        flat.extend_from_slice(&self.d_theta);
        flat
    }
}

/// Analytic backward pass from a matching [`ForwardCache`].
///
/// `d theta_k = sum_n C_n(k,t) (-1)^n / n! <dLogits, P_n>`; the feature-side
/// gradient re-propagates `dLogits` through the (symmetric) operator. Weight
/// decay contributes `wd * W` to weight gradients only, never biases or
/// theta.
pub fn backward(
    model: &PcNetModel,
    l: &SparseMatrix,
    cache: &ForwardCache,
    labels: &[usize],
    train_idx: &[usize],
    weight_decay: f64,
) -> Result<Gradients> {
    let m = cache.probs.n_rows();
    let c = cache.probs.n_cols();
    if cache.x.n_cols() != model.feature_dim()
        || c != model.n_classes()
        || cache.folded.len() != model.filter.n_order() + 1
    {
        return Err(Error::invalid("stale cache: shapes do not match the model"));
    }
    if train_idx.is_empty() {
        return Err(Error::invalid("backward over empty training set"));
    }

    // dLoss/dLogits for mean cross-entropy after softmax.
    let inv = 1.0 / train_idx.len() as f64;
    let mut d_logits = DenseMatrix::zeros(m, c);
    for &i in train_idx {
        let label = labels[i];
        for j in 0..c {
            let onehot = if j == label { 1.0 } else { 0.0 };
            let g = d_logits.get(i, j) + (cache.probs.get(i, j) - onehot) * inv;
            d_logits.set(i, j, g);
        }
    }

    // Bank gradients via Frobenius inner products with the cached powers.
    let inner: Vec<f64> = cache
        .powers
        .iter()
        .map(|p| {
            p.data()
                .iter()
                .zip(d_logits.data())
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    let k_order = model.filter.k_order();
    let mut d_theta = vec![0.0; k_order + 1];
    d_theta[0] = inner[0];
    for (km1, slot) in d_theta[1..].iter_mut().enumerate() {
        let mut acc = 0.0;
        for (n, s) in inner.iter().enumerate() {
            acc += model.basis[n][km1] * s;
        }
        *slot = acc;
    }

    // dLoss/dH = sum_n a_n L^n dLogits (the operator is symmetric).
    let mut d_h = d_logits.clone();
    d_h.scale(cache.folded[0]);
    let mut q = d_logits;
    for &a_n in &cache.folded[1..] {
        q = l.spmm(&q)?;
        d_h.axpy(a_n, &q)?;
    }

    let col_sums = |m: &DenseMatrix| -> Vec<f64> {
        let mut s = vec![0.0; m.n_cols()];
        for i in 0..m.n_rows() {
            for (j, v) in m.row(i).iter().enumerate() {
                s[j] += v;
            }
        }
        s
    };

    if let (Some(w2), Some(_)) = (&model.w2, &model.b2) {
        let dropped = cache
            .dropped
            .as_ref()
            .ok_or_else(|| Error::invalid("stale cache: missing hidden activations"))?;
        let pre_act = cache
            .pre_act
            .as_ref()
            .ok_or_else(|| Error::invalid("stale cache: missing pre-activations"))?;

        let mut d_w2 = dropped.transpose().matmul(&d_h)?;
        if weight_decay > 0.0 {
            d_w2.axpy(weight_decay, w2)?;
        }
        let d_b2 = col_sums(&d_h);

        let mut d_hidden = d_h.matmul(&w2.transpose())?;
        if let Some(scale) = &cache.dropout_scale {
            for (v, s) in d_hidden.data_mut().iter_mut().zip(scale.data()) {
                *v *= s;
            }
        }
        for (v, pre) in d_hidden.data_mut().iter_mut().zip(pre_act.data()) {
            if *pre <= 0.0 {
                *v = 0.0;
            }
        }
        let mut d_w1 = cache.x.transpose().matmul(&d_hidden)?;
        if weight_decay > 0.0 {
            d_w1.axpy(weight_decay, &model.w1)?;
        }
        let d_b1 = col_sums(&d_hidden);
        Ok(Gradients {
            d_theta,
            d_w1,
            d_b1,
            d_w2: Some(d_w2),
            d_b2: Some(d_b2),
        })
    } else {
        let mut d_w1 = cache.x.transpose().matmul(&d_h)?;
        if weight_decay > 0.0 {
            d_w1.axpy(weight_decay, &model.w1)?;
        }
        let d_b1 = col_sums(&d_h);
        Ok(Gradients {
            d_theta,
            d_w1,
            d_b1,
            d_w2: None,
            d_b2: None,
        })
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Per-parameter-group Adam moment estimates.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: usize,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(Error::dims(format!(
            "adam_step: state holds {} entries, params {} and grads {}",
            state.m.len(),
            params.len(),
            grads.len()
        )));
    }
    state.step += 1;
    let bc1 = 1.0 - ADAM_BETA1.powi(state.step as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(state.step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g;
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
    Ok(())
}

/// Per-epoch training record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
}

/// Trajectory of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
}

/// Full-batch training with early stopping on validation accuracy.
///
/// Runs at most `max_epochs` epochs, tracks the best validation accuracy,
/// stops once `patience` epochs pass without improvement, and returns the
/// parameters from the best-validation epoch.
pub fn train(
    dataset: &Dataset,
    split: &Split,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<(PcNetModel, TrainHistory)> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    split.validate(dataset.n_nodes())?;

    let operator = pc_laplacian(
        &dataset.graph,
        &NormalizationConfig {
            eta: model_cfg.eta,
            p: model_cfg.p,
            t: model_cfg.effective_t(),
        },
    )?;
    let mut rng = SplitMix64::new(train_cfg.seed);
    let mut model = PcNetModel::init(
        dataset.feature_dim(),
        dataset.n_classes,
        model_cfg,
        &mut rng,
    )?;

    let mut st_w1 = AdamState::new(model.w1.data().len());
    let mut st_b1 = AdamState::new(model.b1.len());
    let mut st_w2 = model.w2.as_ref().map(|w| AdamState::new(w.data().len()));
    let mut st_b2 = model.b2.as_ref().map(|b| AdamState::new(b.len()));
    let mut st_theta = AdamState::new(model.filter.theta().len());
    let freeze_theta = model_cfg.mode == BaselineMode::MlpOnly;

    let mut history = TrainHistory {
        records: Vec::new(),
        best_epoch: 0,
        best_val_acc: f64::NEG_INFINITY,
    };
    let mut best_model = model.clone();

    for epoch in 1..=train_cfg.max_epochs {
        let (probs, cache) = forward(&model, &operator, &dataset.features, true, &mut rng)?;
        let train_loss = loss(&probs, &dataset.labels, &split.train_idx)?;
        let grads = backward(
            &model,
            &operator,
            &cache,
            &dataset.labels,
            &split.train_idx,
            train_cfg.weight_decay,
        )?;

        adam_step(
            &mut st_w1,
            model.w1.data_mut(),
            grads.d_w1.data(),
            train_cfg.learning_rate,
        )?;
        adam_step(
            &mut st_b1,
            &mut model.b1,
            &grads.d_b1,
            train_cfg.learning_rate,
        )?;
        if let (Some(w2), Some(st), Some(dw2)) = (&mut model.w2, &mut st_w2, &grads.d_w2) {
            adam_step(st, w2.data_mut(), dw2.data(), train_cfg.learning_rate)?;
        }
        if let (Some(b2), Some(st), Some(db2)) = (&mut model.b2, &mut st_b2, &grads.d_b2) {
            adam_step(st, b2, db2, train_cfg.learning_rate)?;
        }
        if !freeze_theta {
            let mut theta = model.filter.theta().to_vec();
            adam_step(
                &mut st_theta,
                &mut theta,
                &grads.d_theta,
                train_cfg.effective_theta_lr(),
            )?;
            model.filter.set_theta(theta)?;
        }

        let val_acc = evaluate_with_operator(&model, &operator, dataset, &split.val_idx)?;
        history.records.push(EpochRecord {
            epoch,
            train_loss,
            val_acc,
        });
        if val_acc > history.best_val_acc {
            history.best_val_acc = val_acc;
            history.best_epoch = epoch;
            best_model = model.clone();
        }
        if epoch - history.best_epoch >= train_cfg.patience {
            break;
        }
    }
    Ok((best_model, history))
}

/// Accuracy of argmax predictions over `idx`; ties resolve to the lowest
/// class index.
pub fn evaluate(model: &PcNetModel, dataset: &Dataset, idx: &[usize]) -> Result<f64> {
    let operator = pc_laplacian(
        &dataset.graph,
        &NormalizationConfig {
            eta: model.filter.eta(),
            p: model.filter.p(),
            t: model.filter.t(),
        },
    )?;
    evaluate_with_operator(model, &operator, dataset, idx)
}

fn evaluate_with_operator(
    model: &PcNetModel,
    operator: &SparseMatrix,
    dataset: &Dataset,
    idx: &[usize],
) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::invalid("evaluate over empty index set"));
    }
    let mut rng = SplitMix64::new(0); // unused: evaluation path draws nothing
    let (probs, _) = forward(model, operator, &dataset.features, false, &mut rng)?;
    let mut correct = 0usize;
    for &i in idx {
        if i >= probs.n_rows() {
            return Err(Error::invalid(format!("evaluate index {i} out of range")));
        }
        let row = probs.row(i);
        let mut arg = 0usize;
        for (j, &v) in row.iter().enumerate() {
            if v > row[arg] {
                arg = j;
            }
        }
        if arg == dataset.labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / idx.len() as f64)
}

const MODEL_MAGIC: &[u8; 4] = b"PCN1";

/// Serializes a model: magic bytes, little-endian u64 dimension header,
/// little-endian f64 hyperparameters, then the parameter blocks
/// (W1, b1, [W2, b2], theta).
pub fn save_model(path: &Path, model: &PcNetModel) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    let dims = [
        model.mlp_layers() as u64,
        model.feature_dim() as u64,
        model.w2.as_ref().map_or(0, |_| model.w1.n_cols()) as u64,
        model.n_classes() as u64,
        model.filter.k_order() as u64,
        model.filter.n_order() as u64,
        match model.mode {
            BaselineMode::PcNet => 0u64,
            BaselineMode::LowPass => 1,
            BaselineMode::MlpOnly => 2,
        },
    ];
    for d in dims {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for v in [
        model.filter.t(),
        model.filter.p(),
        model.filter.eta(),
        model.dropout,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let push_slice = |s: &[f64], buf: &mut Vec<u8>| {
        for v in s {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    };
    push_slice(model.w1.data(), &mut buf);
    push_slice(&model.b1, &mut buf);
    if let (Some(w2), Some(b2)) = (&model.w2, &model.b2) {
        push_slice(w2.data(), &mut buf);
        push_slice(b2, &mut buf);
    }
    push_slice(model.filter.theta(), &mut buf);

    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(&buf)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads a model written by [`save_model`], validating the magic bytes and
/// parameter shapes.
pub fn load_model(path: &Path) -> Result<PcNetModel> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let fail = |msg: &str| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: msg.into(),
    };
    if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
        return Err(fail("bad magic: not a PCN1 model file"));
    }
    let mut pos = 4usize;
    let read_u64 = |pos: &mut usize| -> Result<u64> {
        let end = *pos + 8;
        if end > bytes.len() {
            return Err(fail("truncated header"));
        }
        let v = u64::from_le_bytes(bytes[*pos..end].try_into().unwrap());
        *pos = end;
        Ok(v)
    };
    let mlp_layers = read_u64(&mut pos)? as usize;
    let feature_dim = read_u64(&mut pos)? as usize;
    let hidden = read_u64(&mut pos)? as usize;
    let n_classes = read_u64(&mut pos)? as usize;
    let k_order = read_u64(&mut pos)? as usize;
    let n_order = read_u64(&mut pos)? as usize;
    let mode = match read_u64(&mut pos)? {
        0 => BaselineMode::PcNet,
        1 => BaselineMode::LowPass,
        2 => BaselineMode::MlpOnly,
        other => return Err(fail(&format!("unknown mode tag {other}"))),
    };
    if mlp_layers != 1 && mlp_layers != 2 {
        return Err(fail("mlp_layers must be 1 or 2"));
    }

    let read_f64s = |count: usize, pos: &mut usize| -> Result<Vec<f64>> {
        let end = *pos + 8 * count;
        if end > bytes.len() {
            return Err(fail("truncated parameter block"));
        }
        let out = bytes[*pos..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        *pos = end;
        Ok(out)
    };
    let hyper = read_f64s(4, &mut pos)?;
    let (t, p, eta, dropout) = (hyper[0], hyper[1], hyper[2], hyper[3]);

    let first_cols = if mlp_layers == 2 { hidden } else { n_classes };
    let w1 = DenseMatrix::from_vec(
        feature_dim,
        first_cols,
        read_f64s(feature_dim * first_cols, &mut pos)?,
    )?;
    let b1 = read_f64s(first_cols, &mut pos)?;
    let (w2, b2) = if mlp_layers == 2 {
        let w2 =
            DenseMatrix::from_vec(hidden, n_classes, read_f64s(hidden * n_classes, &mut pos)?)?;
        let b2 = read_f64s(n_classes, &mut pos)?;
        (Some(w2), Some(b2))
    } else {
        (None, None)
    };
    let theta = read_f64s(k_order + 1, &mut pos)?;
    if pos != bytes.len() {
        return Err(fail("trailing bytes after parameters"));
    }

    let filter = FilterParams::new(theta, t, p, eta, n_order)?;
    let basis = fold_basis(&build_table(t, n_order, k_order)?);
    Ok(PcNetModel {
        w1,
        b1,
        w2,
        b2,
        filter,
        dropout,
        mode,
        basis,
    })
}
