//! Subcommand implementations. Every command validates its configuration
//! before touching the filesystem, writes `run.txt` with the resolved
//! settings, and emits deterministic CSV/binary artifacts under `out_dir`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use pcconv_core::data::{
    load_dataset, save_dataset, sbm_generate, split_ratio, split_sparse, SbmConfig,
    SparseSplitMode, Split,
};
use pcconv_core::filter::{
    apply_conv, spectral_oracle, twofold_closed_form, FactorOrder, FilterParams,
};
use pcconv_core::fit::{fit_least_squares, lambda_grid, target_zoo};
use pcconv_core::graph::edge_homophily;
use pcconv_core::model::{evaluate, load_model, save_model, train};
use pcconv_core::pcpoly::build_table;
use pcconv_core::rng::SplitMix64;
use pcconv_core::Dataset;

use crate::config::{RunConfig, SplitKind};

/// Command failure, split by exit-code class: configuration errors exit
/// with 2, runtime errors with 1.
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn write_text(path: &Path, content: &str) -> CmdResult {
    fs::write(path, content).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Validates, prepares `out_dir`, and records the resolved configuration.
fn start_run(cfg: &RunConfig, command: &str) -> CmdResult {
    cfg.validate().map_err(Failure::Config)?;
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| runtime(format!("{}: {e}", cfg.out_dir.display())))?;
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let body = format!("# generated-at {stamp}\n{}", cfg.resolved(command));
    write_text(&cfg.out_dir.join("run.txt"), &body)
}

/// `coeffs`: the Poisson-Charlier table as `n,k,C` rows.
pub fn cmd_coeffs(cfg: &RunConfig) -> CmdResult {
    start_run(cfg, "coeffs")?;
    let table = build_table(cfg.t, cfg.n_order, cfg.k_order).map_err(runtime)?;
    let mut csv = String::from("n,k,C\n");
    for n in 0..=cfg.n_order {
        for k in 1..=cfg.k_order {
            csv.push_str(&format!("{n},{k},{}\n", table.coeff(n, k)));
        }
    }
    write_text(&cfg.out_dir.join("coeffs.csv"), &csv)
}

/// `response`: the scalar filter response over a uniform grid on [0, 2].
pub fn cmd_response(cfg: &RunConfig) -> CmdResult {
    start_run(cfg, "response")?;
    let params = FilterParams::new(cfg.theta_or_default(), cfg.t, cfg.p, cfg.eta, cfg.n_order)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let mut csv = String::from("lambda,response\n");
    for lam in lambda_grid(cfg.grid) {
        csv.push_str(&format!(
            "{lam},{}\n",
            pcconv_core::filter::scalar_response(&params, lam)
        ));
    }
    write_text(&cfg.out_dir.join("response.csv"), &csv)
}

/// `fit`: least-squares fit of the bank to a named target; writes the fitted
/// curve and the bank coefficients.
pub fn cmd_fit(cfg: &RunConfig) -> CmdResult {
    start_run(cfg, "fit")?;
    let target = target_zoo(&cfg.target).map_err(runtime)?;
    let fit =
        fit_least_squares(&target, cfg.grid, cfg.k_order, cfg.n_order, cfg.t).map_err(runtime)?;

    let mut curve = String::from("lambda,target,fitted\n");
    for (i, &lam) in fit.grid.iter().enumerate() {
        curve.push_str(&format!(
            "{lam},{},{}\n",
            target.eval(lam),
            fit.responses[i]
        ));
    }
    write_text(&cfg.out_dir.join("fit_curve.csv"), &curve)?;

    let mut theta_csv = String::from("k,theta\n");
    for (k, th) in fit.theta.iter().enumerate() {
        theta_csv.push_str(&format!("{k},{th}\n"));
    }
    write_text(&cfg.out_dir.join("fit_theta.csv"), &theta_csv)?;
    println!("rmse={}", fit.rmse);
    Ok(())
}

/// `synth`: generate an SBM dataset and write it in the on-disk layout plus
/// a `meta.txt` with the measured homophily.
pub fn cmd_synth(cfg: &RunConfig) -> CmdResult {
    start_run(cfg, "synth")?;
    let ds = sbm_generate(&SbmConfig {
        n_nodes: cfg.m,
        n_classes: cfg.classes,
        p_in: cfg.p_in,
        p_out: cfg.p_out,
        feature_dim: cfg.d,
        mu: cfg.mu,
        sigma: cfg.sigma,
        seed: cfg.seed,
    })
    .map_err(runtime)?;
    save_dataset(&cfg.out_dir, &ds).map_err(runtime)?;
    let h = edge_homophily(&ds.graph, &ds.labels).map_err(runtime)?;
    let meta = format!(
        "m={}\nC={}\np_in={}\np_out={}\nseed={}\nh={h}\n",
        cfg.m, cfg.classes, cfg.p_in, cfg.p_out, cfg.seed
    );
    write_text(&cfg.out_dir.join("meta.txt"), &meta)?;
    println!("h={h}");
    Ok(())
}

fn load_and_split(cfg: &RunConfig) -> Result<(Dataset, Split), Failure> {
    let dir = cfg
        .dataset_dir
        .as_ref()
        .ok_or_else(|| Failure::Config("dataset_dir is required".into()))?;
    let ds = load_dataset(dir).map_err(runtime)?;
    let split = match cfg.split_kind().map_err(Failure::Config)? {
        SplitKind::Citation => {
            split_sparse(&ds, cfg.seed, SparseSplitMode::Citation).map_err(runtime)?
        }
        SplitKind::Sparse => {
            split_sparse(&ds, cfg.seed, SparseSplitMode::Fraction).map_err(runtime)?
        }
        SplitKind::Ratio(a, b) => split_ratio(&ds, a, b, cfg.seed).map_err(runtime)?,
    };
    Ok((ds, split))
}

/// `train`: full training run; emits `history.csv` and `model.bin` and
/// prints validation/test accuracy.
pub fn cmd_train(cfg: &RunConfig) -> CmdResult {
    cfg.validate().map_err(Failure::Config)?;
    if cfg.dataset_dir.is_none() {
        return Err(Failure::Config("dataset_dir is required".into()));
    }
    start_run(cfg, "train")?;
    let (ds, split) = load_and_split(cfg)?;
    let (model, history) =
        train(&ds, &split, &cfg.model_config(), &cfg.train_config()).map_err(runtime)?;

    let mut csv = String::from("epoch,train_loss,val_acc\n");
    for rec in &history.records {
        csv.push_str(&format!(
            "{},{},{}\n",
            rec.epoch, rec.train_loss, rec.val_acc
        ));
    }
    write_text(&cfg.out_dir.join("history.csv"), &csv)?;
    save_model(&cfg.out_dir.join("model.bin"), &model).map_err(runtime)?;

    let test_acc = evaluate(&model, &ds, &split.test_idx).map_err(runtime)?;
    println!("best_val_acc={}", history.best_val_acc);
    println!("test_accuracy={test_acc}");
    Ok(())
}

/// `eval`: reload `model.bin` and report accuracy on the configured split.
pub fn cmd_eval(cfg: &RunConfig) -> CmdResult {
    cfg.validate().map_err(Failure::Config)?;
    if cfg.dataset_dir.is_none() {
        return Err(Failure::Config("dataset_dir is required".into()));
    }
    let model_path: PathBuf = cfg.out_dir.join("model.bin");
    if !model_path.exists() {
        return Err(Failure::Config(format!(
            "{} does not exist (run train first)",
            model_path.display()
        )));
    }
    start_run(cfg, "eval")?;
    let (ds, split) = load_and_split(cfg)?;
    let model = load_model(&model_path).map_err(runtime)?;
    let test_acc = evaluate(&model, &ds, &split.test_idx).map_err(runtime)?;
    println!("test_accuracy={test_acc}");
    Ok(())
}

/// `oracle-check`: exercises the spectral-equivalence and order-invariance
/// oracles on generated instances and prints the maximum deviations.
pub fn cmd_oracle_check(cfg: &RunConfig) -> CmdResult {
    start_run(cfg, "oracle-check")?;
    let mut rng = SplitMix64::new(cfg.seed);

    // Filter oracle on one generated instance.
    let edge_prob = (4.0 / cfg.m as f64).min(1.0);
    let ds = sbm_generate(&SbmConfig {
        n_nodes: cfg.m,
        n_classes: cfg.classes,
        p_in: edge_prob,
        p_out: edge_prob,
        feature_dim: cfg.d,
        mu: cfg.mu,
        sigma: cfg.sigma,
        seed: cfg.seed,
    })
    .map_err(runtime)?;
    let operator = pcconv_core::graph::pc_laplacian(
        &ds.graph,
        &pcconv_core::graph::NormalizationConfig {
            eta: cfg.eta,
            p: cfg.p,
            t: cfg.t,
        },
    )
    .map_err(runtime)?;
    let theta: Vec<f64> = (0..=cfg.k_order)
        .map(|_| rng.next_f64() * 2.0 - 1.0)
        .collect();
    let params = FilterParams::new(theta, cfg.t, cfg.p, cfg.eta, cfg.n_order).map_err(runtime)?;
    let fast = apply_conv(&operator, &ds.features, &params).map_err(runtime)?;
    let slow = spectral_oracle(&operator.to_dense(), &ds.features, &params).map_err(runtime)?;
    let mut max_filter_dev: f64 = 0.0;
    for (a, b) in fast.data().iter().zip(slow.data()) {
        max_filter_dev = max_filter_dev.max((a - b).abs());
    }
    let filter_tol = 1e-8 * ds.features.max_abs().max(1.0);

    // Order invariance of the two-fold closed form on small instances.
    let mut twofold_order_dev: f64 = 0.0;
    for _ in 0..5 {
        let m_small = 6 + rng.next_below(20);
        let sub = sbm_generate(&SbmConfig {
            n_nodes: m_small,
            n_classes: 2,
            p_in: 0.4,
            p_out: 0.2,
            feature_dim: 3,
            mu: 1.0,
            sigma: 0.5,
            seed: rng.next_u64(),
        })
        .map_err(runtime)?;
        let l = pcconv_core::graph::standard_laplacian(&sub.graph).to_dense();
        let t = 0.2 + rng.next_f64() * 0.8;
        let alpha1 = (-2.0 * t).exp() * (0.05 + 0.7 * rng.next_f64());
        let upper = -alpha1.ln() / t;
        let p = 2.0 + rng.next_f64() * (upper - 2.0) * 0.9;
        let alpha2 = 0.1 + rng.next_f64() * 1.5;
        let z1 = twofold_closed_form(
            &l,
            &sub.features,
            alpha1,
            alpha2,
            t,
            p,
            FactorOrder::HeteroFirst,
        )
        .map_err(runtime)?;
        let z2 = twofold_closed_form(
            &l,
            &sub.features,
            alpha1,
            alpha2,
            t,
            p,
            FactorOrder::HomoFirst,
        )
        .map_err(runtime)?;
        for (a, b) in z1.data().iter().zip(z2.data()) {
            twofold_order_dev = twofold_order_dev.max((a - b).abs());
        }
    }

    println!("max_filter_dev={max_filter_dev:e}");
    println!("twofold_order_dev={twofold_order_dev:e}");
    if max_filter_dev > filter_tol {
        return Err(Failure::Runtime(format!(
            "filter deviation {max_filter_dev:e} exceeds {filter_tol:e}"
        )));
    }
    if twofold_order_dev > 1e-10 {
        return Err(Failure::Runtime(format!(
            "two-fold order deviation {twofold_order_dev:e} exceeds 1e-10"
        )));
    }
    Ok(())
}
