//! `ackley`: many independent optimizer runs on the Ackley function.

use std::path::PathBuf;

use ahtsgd::objectives::{ackley, Ackley};
use ahtsgd::optimizer::Optimizer;
use ahtsgd::stable_noise::{stream_rng, streams};
use ahtsgd::stats;
use rand::Rng;
use rayon::prelude::*;

use super::common::{derive_seed, parse_real, pool, OptimizerParams};
use crate::config::{self, Params};
use crate::error::CliError;

/// Final value below which a run counts as having reached the global basin.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct AckleyParams {
    pub opt: OptimizerParams,
    pub dims: usize,
    pub runs: usize,
    pub steps: u64,
    pub seed: u64,
    pub threshold: f64,
    /// Initial points are uniform on `[−init_range, init_range]^d`.
    pub init_range: f64,
    /// Fixed start for every run instead of the uniform draw.
    pub init_point: Option<Vec<f64>>,
    pub log_every: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

impl Default for AckleyParams {
    fn default() -> Self {
        Self {
            opt: OptimizerParams {
                method: "levy_fixed".into(),
                eta: 0.01,
                alpha: 1.5,
                noise_init: 5.0,
                gamma: 0.55,
                ..OptimizerParams::default()
            },
            dims: 2,
            runs: 200,
            steps: 2000,
            seed: 0,
            threshold: DEFAULT_SUCCESS_THRESHOLD,
            init_range: 5.0,
            init_point: None,
            log_every: 10,
            jobs: 1,
            out: PathBuf::from("out/ackley"),
        }
    }
}

impl Params for AckleyParams {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if self.opt.set(key, value)? {
            return Ok(());
        }
        match key {
            "dims" => self.dims = config::parse_usize(key, value)?,
            "runs" => self.runs = config::parse_usize(key, value)?,
            "steps" => self.steps = config::parse_count(key, value)?,
            "seed" => self.seed = config::parse_count(key, value)?,
            "threshold" => self.threshold = parse_real(key, value)?,
            "init_range" => self.init_range = parse_real(key, value)?,
            "init_point" => {
                self.init_point = if value.is_empty() {
                    None
                } else {
                    Some(config::parse_list(key, value)?)
                }
            }
            "log_every" => self.log_every = config::parse_count(key, value)?,
            "jobs" => self.jobs = config::parse_usize(key, value)?,
            "out" => self.out = config::path(value),
            _ => return Err(config::unknown(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = self.opt.pairs();
        v.extend([
            ("dims", self.dims.to_string()),
            ("runs", self.runs.to_string()),
            ("steps", self.steps.to_string()),
            ("seed", self.seed.to_string()),
            ("threshold", self.threshold.to_string()),
            ("init_range", self.init_range.to_string()),
            ("init_point", self.init_point.as_deref().map(config::join).unwrap_or_default()),
            ("log_every", self.log_every.to_string()),
            ("jobs", self.jobs.to_string()),
            ("out", self.out.display().to_string()),
        ]);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AckleyRun {
    pub run: usize,
    pub f_init: f64,
    pub f_final: f64,
    pub x_final: Vec<f64>,
    /// `(step, f)` at every logged step, including 0 and the last.
    pub trace: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AckleySummary {
    pub runs: Vec<AckleyRun>,
    pub successes: usize,
    pub success_fraction: f64,
}

fn one_run(p: &AckleyParams, run: usize) -> Result<AckleyRun, CliError> {
    let run_seed = derive_seed(p.seed, run as u64);
    let mut x: Vec<f64> = match &p.init_point {
        Some(x0) => x0.clone(),
        None => {
            let mut rng = stream_rng(run_seed, streams::INIT);
            (0..p.dims).map(|_| rng.random_range(-p.init_range..=p.init_range)).collect()
        }
    };
    let obj = Ackley { dim: p.dims };
    let mut opt = Optimizer::new(p.opt.build(run_seed)?)?;
    let f_init = ackley(&x);
    let mut trace = vec![(0, f_init)];
    for t in 1..=p.steps {
        opt.step(&mut x, &obj, &())?;
        if t == p.steps || (p.log_every > 0 && t % p.log_every == 0) {
            trace.push((t, ackley(&x)));
        }
    }
    Ok(AckleyRun {
        run,
        f_init,
        f_final: ackley(&x),
        x_final: x,
        trace,
    })
}

pub fn run(p: &AckleyParams) -> Result<AckleySummary, CliError> {
    if p.dims == 0 {
        return Err(CliError::Config("dims must be >= 1".into()));
    }
    if let Some(x0) = &p.init_point {
        if x0.len() != p.dims {
            return Err(CliError::Config(format!("init_point has {} coordinates, dims is {}", x0.len(), p.dims)));
        }
    }
    if !(p.init_range > 0.0) {
        return Err(CliError::Config("init_range must be > 0".into()));
    }
    p.opt.build(0)?;
    config::echo(&p.out, "ackley", p)?;
    let traj_path = p.out.join("trajectories.csv");
    let runs_path = p.out.join("runs.csv");
    let mut traj = csv::Writer::from_path(&traj_path).map_err(|e| CliError::io(&traj_path, e))?;
    let mut runs_w = csv::Writer::from_path(&runs_path).map_err(|e| CliError::io(&runs_path, e))?;
    traj.write_record(["run", "step", "f"])?;
    let mut head = vec!["run".to_string(), "f_init".into(), "f_final".into(), "success".into()];
    head.extend((0..p.dims).map(|i| format!("x{i}")));
    runs_w.write_record(&head)?;

    let workers = pool(p.jobs)?;
    let chunk = p.jobs.max(1) * 8;
    let mut all = Vec::with_capacity(p.runs);
    let ids: Vec<usize> = (0..p.runs).collect();
    for block in ids.chunks(chunk) {
        let results: Vec<AckleyRun> =
            workers.install(|| block.par_iter().map(|&r| one_run(p, r)).collect::<Result<_, _>>())?;
        for r in results {
            for (t, f) in &r.trace {
                traj.write_record([r.run.to_string(), t.to_string(), f.to_string()])?;
            }
            let mut row = vec![
                r.run.to_string(),
                r.f_init.to_string(),
                r.f_final.to_string(),
                (r.f_final < p.threshold).to_string(),
            ];
            row.extend(r.x_final.iter().map(f64::to_string));
            runs_w.write_record(&row)?;
            all.push(r);
        }
        traj.flush().map_err(|e| CliError::io(&traj_path, e))?;
        runs_w.flush().map_err(|e| CliError::io(&runs_path, e))?;
    }

    let successes = all.iter().filter(|r| r.f_final < p.threshold).count();
    let success_fraction = if all.is_empty() { 0.0 } else { successes as f64 / all.len() as f64 };
    let finals: Vec<f64> = all.iter().map(|r| r.f_final).collect();
    let summary_path = p.out.join("summary.csv");
    let mut s = csv::Writer::from_path(&summary_path).map_err(|e| CliError::io(&summary_path, e))?;
    s.write_record(["method", "runs", "successes", "success_fraction", "median_f_final"])?;
    s.write_record([
        p.opt.method.clone(),
        all.len().to_string(),
        successes.to_string(),
        success_fraction.to_string(),
        if finals.is_empty() { String::new() } else { stats::median(&finals).to_string() },
    ])?;
    s.flush().map_err(|e| CliError::io(&summary_path, e))?;
    Ok(AckleySummary {
        runs: all,
        successes,
        success_fraction,
    })
}
