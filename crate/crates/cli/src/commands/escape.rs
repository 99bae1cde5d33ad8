//! `escape`: first-passage times out of the sharp well of the double-well
//! potential under Lévy-driven gradient descent.

use std::path::PathBuf;

use ahtsgd::objectives::DoubleWell;
use ahtsgd::stable_noise::{fill_scaled, stream_rng, StableNoiseParams};
use ahtsgd::stats::{self, MannWhitney};
use rayon::prelude::*;

use super::common::{derive_seed, parse_real, pool};
use crate::config::{self, Params};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeParams {
    pub alphas: Vec<f64>,
    pub sigma: f64,
    pub barrier: f64,
    pub sharp_width: f64,
    pub wide_width: f64,
    /// Depth of the wide well below the barrier top; defaults to `barrier`.
    pub wide_depth: Option<f64>,
    pub eta: f64,
    pub trials: usize,
    pub max_steps: u64,
    pub x0: f64,
    /// Escape is the first iterate beyond this point; defaults to the
    /// barrier top.
    pub boundary: Option<f64>,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

impl Default for EscapeParams {
    fn default() -> Self {
        Self {
            alphas: vec![1.2, 1.6, 2.0],
            sigma: 0.1,
            barrier: 1.0,
            sharp_width: 0.5,
            wide_width: 2.0,
            wide_depth: None,
            eta: 0.01,
            trials: 200,
            max_steps: 100_000,
            x0: 0.0,
            boundary: None,
            seed: 0,
            jobs: 1,
            out: PathBuf::from("out/escape"),
        }
    }
}

impl Params for EscapeParams {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let opt_real = |v: &str| if v.is_empty() { Ok(None) } else { parse_real(key, v).map(Some) };
        match key {
            "alphas" => self.alphas = config::parse_list(key, value)?,
            "sigma" => self.sigma = parse_real(key, value)?,
            "barrier" => self.barrier = parse_real(key, value)?,
            "sharp_width" => self.sharp_width = parse_real(key, value)?,
            "wide_width" => self.wide_width = parse_real(key, value)?,
            "wide_depth" => self.wide_depth = opt_real(value)?,
            "eta" => self.eta = parse_real(key, value)?,
            "trials" => self.trials = config::parse_usize(key, value)?,
            "max_steps" => self.max_steps = config::parse_count(key, value)?,
            "x0" => self.x0 = parse_real(key, value)?,
            "boundary" => self.boundary = opt_real(value)?,
            "seed" => self.seed = config::parse_count(key, value)?,
            "jobs" => self.jobs = config::parse_usize(key, value)?,
            "out" => self.out = config::path(value),
            _ => return Err(config::unknown(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("alphas", config::join(&self.alphas)),
            ("sigma", self.sigma.to_string()),
            ("barrier", self.barrier.to_string()),
            ("sharp_width", self.sharp_width.to_string()),
            ("wide_width", self.wide_width.to_string()),
            ("wide_depth", config::opt(&self.wide_depth)),
            ("eta", self.eta.to_string()),
            ("trials", self.trials.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("x0", self.x0.to_string()),
            ("boundary", config::opt(&self.boundary)),
            ("seed", self.seed.to_string()),
            ("jobs", self.jobs.to_string()),
            ("out", self.out.display().to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEscapes {
    pub alpha: f64,
    /// Escape step per trial; censored trials hold `max_steps`.
    pub steps: Vec<u64>,
    pub censored: usize,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeSummary {
    pub per_alpha: Vec<AlphaEscapes>,
    /// One-sided test that escape times at the smallest α are smaller than
    /// at the largest α.
    pub extremes: Option<(f64, f64, MannWhitney)>,
}

impl EscapeParams {
    pub fn well(&self) -> Result<DoubleWell, CliError> {
        Ok(DoubleWell::new(
            self.barrier,
            self.sharp_width,
            self.wide_width,
            self.wide_depth.unwrap_or(self.barrier),
        )?)
    }
}

const DRAW_BLOCK: usize = 4096;

/// Steps until the iterate first exceeds `boundary`, or `None` if it stays
/// inside for `max_steps` steps.
pub fn first_passage(
    well: &DoubleWell,
    x0: f64,
    boundary: f64,
    eta: f64,
    alpha: f64,
    sigma: f64,
    max_steps: u64,
    seed: u64,
    stream: u64,
) -> Result<Option<u64>, CliError> {
    let params = StableNoiseParams::new(alpha, sigma)?;
    let pre = eta.powf(1.0 / alpha);
    let mut rng = stream_rng(seed, stream);
    let mut draws = vec![0.0; DRAW_BLOCK];
    let mut used = DRAW_BLOCK;
    let mut x = x0;
    for t in 1..=max_steps {
        if used == DRAW_BLOCK {
            fill_scaled(params, &mut rng, &mut draws);
            used = 0;
        }
        x = x - eta * well.derivative(x) + pre * draws[used];
        used += 1;
        if !x.is_finite() {
            return Err(CliError::Numeric(format!("iterate became {x} at step {t}")));
        }
        if x > boundary {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

pub fn run(p: &EscapeParams) -> Result<EscapeSummary, CliError> {
    if p.trials == 0 {
        return Err(CliError::Config("trials must be >= 1".into()));
    }
    if p.alphas.is_empty() {
        return Err(CliError::Config("alphas must not be empty".into()));
    }
    if !(p.eta > 0.0) {
        return Err(CliError::Config("eta must be > 0".into()));
    }
    let well = p.well()?;
    let boundary = p.boundary.unwrap_or(well.barrier_location());
    config::echo(&p.out, "escape", p)?;
    let workers = pool(p.jobs)?;

    let trials_path = p.out.join("trials.csv");
    let mut tw = csv::Writer::from_path(&trials_path).map_err(|e| CliError::io(&trials_path, e))?;
    tw.write_record(["alpha", "trial", "escape_step", "censored"])?;
    let mut per_alpha = Vec::with_capacity(p.alphas.len());
    for (ai, &alpha) in p.alphas.iter().enumerate() {
        let seed = derive_seed(p.seed, ai as u64);
        let results: Vec<Option<u64>> = workers.install(|| {
            (0..p.trials)
                .into_par_iter()
                .map(|j| first_passage(&well, p.x0, boundary, p.eta, alpha, p.sigma, p.max_steps, seed, j as u64))
                .collect::<Result<_, _>>()
        })?;
        let steps: Vec<u64> = results.iter().map(|r| r.unwrap_or(p.max_steps)).collect();
        for (j, r) in results.iter().enumerate() {
            tw.write_record([
                alpha.to_string(),
                j.to_string(),
                r.unwrap_or(p.max_steps).to_string(),
                r.is_none().to_string(),
            ])?;
        }
        tw.flush().map_err(|e| CliError::io(&trials_path, e))?;
        let as_f: Vec<f64> = steps.iter().map(|&s| s as f64).collect();
        per_alpha.push(AlphaEscapes {
            alpha,
            censored: results.iter().filter(|r| r.is_none()).count(),
            median: stats::median(&as_f),
            steps,
        });
    }

    let medians_path = p.out.join("medians.csv");
    let mut mw = csv::Writer::from_path(&medians_path).map_err(|e| CliError::io(&medians_path, e))?;
    mw.write_record(["alpha", "median_escape_step", "escaped", "censored", "trials"])?;
    for a in &per_alpha {
        mw.write_record([
            a.alpha.to_string(),
            a.median.to_string(),
            (a.steps.len() - a.censored).to_string(),
            a.censored.to_string(),
            a.steps.len().to_string(),
        ])?;
    }
    mw.flush().map_err(|e| CliError::io(&medians_path, e))?;

    let extremes = if per_alpha.len() >= 2 {
        let lo = per_alpha.iter().min_by(|a, b| a.alpha.total_cmp(&b.alpha)).unwrap();
        let hi = per_alpha.iter().max_by(|a, b| a.alpha.total_cmp(&b.alpha)).unwrap();
        let f = |v: &[u64]| v.iter().map(|&s| s as f64).collect::<Vec<_>>();
        let test = stats::mann_whitney_less(&f(&lo.steps), &f(&hi.steps));
        let path = p.out.join("mann_whitney.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
        w.write_record(["alpha_low", "alpha_high", "u", "z", "p_value_less"])?;
        w.write_record([
            lo.alpha.to_string(),
            hi.alpha.to_string(),
            test.u.to_string(),
            test.z.to_string(),
            test.p_less.to_string(),
        ])?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Some((lo.alpha, hi.alpha, test))
    } else {
        None
    };
    Ok(EscapeSummary { per_alpha, extremes })
}
