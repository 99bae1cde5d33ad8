//! `train`: MLP on MNIST, one run log per seed plus an across-seed aggregate.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ahtsgd::curvature::estimate_lambda_max;
use ahtsgd::data_io::{self, IdxDataset, RunRecord, RunWriter, Split};
use ahtsgd::objectives::{Init, Mlp, MlpSpec, Objective};
use ahtsgd::optimizer::Optimizer;
use ahtsgd::stable_noise::{stream_rng, streams};
use ahtsgd::stats;
use rayon::prelude::*;

use super::common::{pool, OptimizerParams};
use crate::config::{self, Params};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub opt: OptimizerParams,
    /// Falls back to `$AHTSGD_DATA_DIR`, then `data/mnist`.
    pub data_dir: Option<PathBuf>,
    pub init: Init,
    pub epochs: u64,
    pub seeds: Vec<u64>,
    /// Train on this many examples drawn by `subset_seed`; the whole
    /// training set when absent.
    pub subset: Option<usize>,
    pub subset_seed: u64,
    pub batch: usize,
    pub test_batch: usize,
    pub widths: Vec<usize>,
    /// Train rows every this many steps (0 disables them).
    pub log_every: u64,
    /// Power-iteration λ_max on logged train rows every this many steps
    /// (0 disables it).
    pub lambda_max_every: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            opt: OptimizerParams::default(),
            data_dir: None,
            init: Init::KaimingUniform,
            epochs: 10,
            seeds: (0..15).collect(),
            subset: None,
            subset_seed: 0,
            batch: 64,
            test_batch: 1000,
            widths: MlpSpec::default().widths,
            log_every: 50,
            lambda_max_every: 0,
            jobs: 1,
            out: PathBuf::from("out/train"),
        }
    }
}

fn init_name(init: Init) -> &'static str {
    match init {
        Init::Zeros => "zeros",
        Init::KaimingUniform => "kaiming",
    }
}

impl Params for TrainParams {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if self.opt.set(key, value)? {
            return Ok(());
        }
        match key {
            "data_dir" | "dataset" => self.data_dir = (!value.is_empty()).then(|| config::path(value)),
            "init" => {
                self.init = value
                    .parse()
                    .map_err(|_| CliError::Config(format!("unknown init {value:?} (zeros | kaiming)")))?
            }
            "epochs" => self.epochs = config::parse_count(key, value)?,
            "seeds" => self.seeds = config::parse_seeds(key, value)?,
            "subset" => {
                self.subset = if value.is_empty() || value == "none" {
                    None
                } else {
                    Some(config::parse_usize(key, value)?)
                }
            }
            "subset_seed" => self.subset_seed = config::parse_count(key, value)?,
            "batch" => self.batch = config::parse_usize(key, value)?,
            "test_batch" => self.test_batch = config::parse_usize(key, value)?,
            "widths" => self.widths = config::parse_list(key, value)?,
            "log_every" => self.log_every = config::parse_count(key, value)?,
            "lambda_max_every" => self.lambda_max_every = config::parse_count(key, value)?,
            "jobs" => self.jobs = config::parse_usize(key, value)?,
            "out" => self.out = config::path(value),
            _ => return Err(config::unknown(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = self.opt.pairs();
        v.extend([
            ("data_dir", self.data_dir.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
            ("init", init_name(self.init).to_owned()),
            ("epochs", self.epochs.to_string()),
            ("seeds", config::render_seeds(&self.seeds)),
            ("subset", config::opt(&self.subset)),
            ("subset_seed", self.subset_seed.to_string()),
            ("batch", self.batch.to_string()),
            ("test_batch", self.test_batch.to_string()),
            ("widths", config::join(&self.widths)),
            ("log_every", self.log_every.to_string()),
            ("lambda_max_every", self.lambda_max_every.to_string()),
            ("jobs", self.jobs.to_string()),
            ("out", self.out.display().to_string()),
        ]);
        v
    }
}

/// Test-set evaluation after each epoch (epoch 0 is the initialisation).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochEval {
    pub epoch: u64,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub path: PathBuf,
    pub evals: Vec<EpochEval>,
    /// Parameters after the last epoch.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub epoch: u64,
    pub seeds: usize,
    pub mean_accuracy: f64,
    pub sd_accuracy: f64,
    pub mean_loss: f64,
    pub sd_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub runs: Vec<SeedRun>,
    pub aggregate: Vec<AggregateRow>,
}

pub const AGGREGATE_HEADER: [&str; 7] = [
    "method",
    "epoch",
    "seeds",
    "mean_test_accuracy",
    "sd_test_accuracy",
    "mean_test_loss",
    "sd_test_loss",
];

pub fn seed_file(seed: u64) -> String {
    format!("run_seed{seed}.csv")
}

fn check(p: &TrainParams) -> Result<(), CliError> {
    if p.batch == 0 || p.test_batch == 0 {
        return Err(CliError::Config("batch and test_batch must be >= 1".into()));
    }
    if p.seeds.is_empty() {
        return Err(CliError::Config("seeds must not be empty".into()));
    }
    if p.widths.len() < 2 {
        return Err(CliError::Config("widths needs at least an input and an output layer".into()));
    }
    p.opt.build(0)?;
    Ok(())
}

/// Loads the train and test splits and checks them against the network shape.
pub fn load_data(p: &TrainParams) -> Result<(IdxDataset, IdxDataset), CliError> {
    let dir = data_io::resolve_data_dir(p.data_dir.as_deref());
    let train = data_io::load_mnist(&dir, Split::Train).map_err(CliError::data)?;
    let test = data_io::load_mnist(&dir, Split::Test).map_err(CliError::data)?;
    let train = match p.subset {
        Some(n) => train.subset(n, p.subset_seed),
        None => train,
    };
    let (d, k) = (p.widths[0], *p.widths.last().unwrap());
    if train.image_dim() != d {
        return Err(CliError::Config(format!(
            "input width {d} does not match image size {}",
            train.image_dim()
        )));
    }
    if k != data_io::NUM_CLASSES as usize {
        return Err(CliError::Config(format!("output width must be {}, got {k}", data_io::NUM_CLASSES)));
    }
    Ok((train, test))
}

pub fn run(p: &TrainParams) -> Result<TrainSummary, CliError> {
    check(p)?;
    let (train, test) = load_data(p)?;
    run_on(p, &train, &test)
}

/// Trains every seed on already loaded data.
pub fn run_on(p: &TrainParams, train: &IdxDataset, test: &IdxDataset) -> Result<TrainSummary, CliError> {
    check(p)?;
    let mlp = Mlp::new(&MlpSpec {
        widths: p.widths.clone(),
    })?;
    config::echo(&p.out, "train", p)?;
    let workers = pool(p.jobs)?;
    let results: Vec<Result<SeedRun, CliError>> =
        workers.install(|| p.seeds.par_iter().map(|&s| train_seed(p, &mlp, train, test, s)).collect());
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }
    let aggregate = aggregate(&runs);
    write_aggregate(&p.out.join("aggregate.csv"), &p.opt.method, &aggregate)?;
    Ok(TrainSummary { runs, aggregate })
}

fn train_seed(p: &TrainParams, mlp: &Mlp, train: &IdxDataset, test: &IdxDataset, seed: u64) -> Result<SeedRun, CliError> {
    let path = p.out.join(seed_file(seed));
    let mut log = RunWriter::create(&path)?;
    let started = Instant::now();
    let wall = || started.elapsed().as_millis() as u64;
    let mut theta = mlp.init(p.init, &mut stream_rng(seed, streams::INIT));
    let mut opt = Optimizer::new(p.opt.build(seed)?)?;
    let mut diag_rng = stream_rng(seed, streams::DIAGNOSTIC);

    let mut evals = Vec::with_capacity(p.epochs as usize + 1);
    let mut test_row = |epoch: u64, step: u64, opt: &Optimizer, theta: &[f64], log: &mut RunWriter| {
        let e = data_io::evaluate(mlp, theta, test, p.test_batch)?;
        let (alpha, sigma) = current_alpha_sigma(opt, step);
        log.write(&RunRecord {
            step,
            epoch,
            split: "test".into(),
            loss: e.loss,
            accuracy: Some(e.accuracy()),
            alpha,
            sigma,
            sharpness_raw: opt.sharpness().last_raw,
            sharpness_ema: opt.sharpness().ema,
            lambda_max: None,
            grad_norm: None,
            wall_ms: wall(),
        })?;
        evals.push(EpochEval {
            epoch,
            loss: e.loss,
            accuracy: e.accuracy(),
        });
        Ok::<_, CliError>(())
    };
    test_row(0, 0, &opt, &theta, &mut log)?;

    for epoch in 1..=p.epochs {
        for batch in train.batches(p.batch, seed, epoch)? {
            let r = opt.step(&mut theta, mlp, &batch)?;
            let step = r.step + 1;
            if p.log_every > 0 && step % p.log_every == 0 {
                let lambda_max = if p.lambda_max_every > 0 && step % p.lambda_max_every == 0 {
                    let hvp = |th: &[f64], v: &[f64]| mlp.hvp(th, v, &batch);
                    Some(estimate_lambda_max(&hvp, &theta, 50, 1e-4, &mut diag_rng)?.value)
                } else {
                    None
                };
                log.write(&RunRecord {
                    step,
                    epoch,
                    split: "train".into(),
                    loss: r.loss,
                    accuracy: None,
                    alpha: r.alpha_used,
                    sigma: r.sigma_used,
                    sharpness_raw: r.sharpness_raw,
                    sharpness_ema: r.sharpness_ema,
                    lambda_max,
                    grad_norm: Some(r.grad_norm),
                    wall_ms: wall(),
                })?;
            }
        }
        test_row(epoch, opt.steps_taken(), &opt, &theta, &mut log)?;
    }
    Ok(SeedRun {
        seed,
        path,
        evals,
        theta,
    })
}

/// α and σ the optimizer would report at global step `t`.
fn current_alpha_sigma(opt: &Optimizer, t: u64) -> (f64, f64) {
    use ahtsgd::optimizer::Method;
    let cfg = opt.config();
    match &cfg.method {
        Method::Ahtsgd(_) => (opt.schedule().map_or(1.0, |s| s.alpha()), cfg.noise.sigma(t)),
        Method::LevyFixed { alpha } => (*alpha, cfg.noise.sigma(t)),
        Method::Sgld { temperature } => (2.0, temperature.sqrt()),
        Method::Sgd => (2.0, 0.0),
    }
}

pub fn aggregate(runs: &[SeedRun]) -> Vec<AggregateRow> {
    let epochs = runs.iter().map(|r| r.evals.len()).min().unwrap_or(0);
    (0..epochs)
        .map(|i| {
            let acc: Vec<f64> = runs.iter().map(|r| r.evals[i].accuracy).collect();
            let loss: Vec<f64> = runs.iter().map(|r| r.evals[i].loss).collect();
            let sd = |x: &[f64]| if x.len() > 1 { stats::std_dev(x) } else { 0.0 };
            AggregateRow {
                epoch: runs[0].evals[i].epoch,
                seeds: runs.len(),
                mean_accuracy: stats::mean(&acc),
                sd_accuracy: sd(&acc),
                mean_loss: stats::mean(&loss),
                sd_loss: sd(&loss),
            }
        })
        .collect()
}

fn write_aggregate(path: &Path, method: &str, rows: &[AggregateRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            method.to_owned(),
            r.epoch.to_string(),
            r.seeds.to_string(),
            r.mean_accuracy.to_string(),
            r.sd_accuracy.to_string(),
            r.mean_loss.to_string(),
            r.sd_loss.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
