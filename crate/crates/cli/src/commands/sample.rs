//! `sample`: raw stable draws and their summary statistics.

use std::path::PathBuf;

use ahtsgd::stable_noise::{sample_vector, stream_rng, streams, StableNoiseParams};
use ahtsgd::stats;

use crate::config::{self, Params};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleParams {
    pub alpha: f64,
    pub sigma: f64,
    pub n: u64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            sigma: 1.0,
            n: 1_000_000,
            seed: 0,
            out: PathBuf::from("out/sample"),
        }
    }
}

impl Params for SampleParams {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "alpha" => self.alpha = config::parse(key, value)?,
            "sigma" => self.sigma = config::parse(key, value)?,
            "n" => self.n = config::parse_count(key, value)?,
            "seed" => self.seed = config::parse_count(key, value)?,
            "out" => self.out = config::path(value),
            _ => return Err(config::unknown(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("alpha", self.alpha.to_string()),
            ("sigma", self.sigma.to_string()),
            ("n", self.n.to_string()),
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
        ]
    }
}

/// Summary of a batch of draws. Empty when `n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub n: u64,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub median: Option<f64>,
    pub iqr: Option<f64>,
    /// Fraction of draws with `|x| > 3σ` and `|x| > 10σ`.
    pub tail_3: Option<f64>,
    pub tail_10: Option<f64>,
    /// Kolmogorov–Smirnov test against `N(0, 2σ²)`; only at α = 2.
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "n",
    "alpha",
    "sigma",
    "mean",
    "variance",
    "median",
    "iqr",
    "tail_gt_3sigma",
    "tail_gt_10sigma",
    "ks_statistic",
    "ks_p_value",
];

pub fn run(p: &SampleParams) -> Result<SampleSummary, CliError> {
    let params = StableNoiseParams::new(p.alpha, p.sigma)?;
    config::echo(&p.out, "sample", p)?;
    let mut rng = stream_rng(p.seed, streams::NOISE);
    let draws = sample_vector(params, p.n as usize, &mut rng);

    let draws_path = p.out.join("draws.csv");
    let mut w = csv::Writer::from_path(&draws_path).map_err(|e| CliError::io(&draws_path, e))?;
    w.write_record(["x"])?;
    for x in &draws {
        w.write_record([x.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(&draws_path, e))?;

    let summary = summarize(&draws, p.alpha, p.sigma);
    let summary_path = p.out.join("summary.csv");
    let mut s = csv::Writer::from_path(&summary_path).map_err(|e| CliError::io(&summary_path, e))?;
    s.write_record(SUMMARY_HEADER)?;
    let o = config::opt;
    s.write_record([
        summary.n.to_string(),
        p.alpha.to_string(),
        p.sigma.to_string(),
        o(&summary.mean),
        o(&summary.variance),
        o(&summary.median),
        o(&summary.iqr),
        o(&summary.tail_3),
        o(&summary.tail_10),
        o(&summary.ks_statistic),
        o(&summary.ks_p_value),
    ])?;
    s.flush().map_err(|e| CliError::io(&summary_path, e))?;
    Ok(summary)
}

pub fn summarize(draws: &[f64], alpha: f64, sigma: f64) -> SampleSummary {
    let n = draws.len() as u64;
    if draws.is_empty() {
        return SampleSummary {
            n,
            mean: None,
            variance: None,
            median: None,
            iqr: None,
            tail_3: None,
            tail_10: None,
            ks_statistic: None,
            ks_p_value: None,
        };
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p| stats::quantile_sorted(&sorted, p);
    let frac = |k: f64| draws.iter().filter(|x| x.abs() > k * sigma).count() as f64 / draws.len() as f64;
    let ks = (alpha == 2.0 && sigma > 0.0).then(|| {
        let sd = std::f64::consts::SQRT_2 * sigma;
        stats::ks_one_sample(draws, |x| stats::normal_cdf(x / sd))
    });
    SampleSummary {
        n,
        mean: Some(stats::mean(draws)),
        variance: (draws.len() > 1).then(|| stats::variance(draws)),
        median: Some(q(0.5)),
        iqr: Some(q(0.75) - q(0.25)),
        tail_3: Some(frac(3.0)),
        tail_10: Some(frac(10.0)),
        ks_statistic: ks.map(|k| k.statistic),
        ks_p_value: ks.map(|k| k.p_value),
    }
}
