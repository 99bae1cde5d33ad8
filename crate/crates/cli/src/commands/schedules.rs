//! `schedules`: α and σ traces without any training.

use std::path::PathBuf;

use ahtsgd::schedules::{noise_sigma, AlphaMode, AlphaSchedule};

use super::common::{parse_real, OptimizerParams};
use crate::config::{self, Params};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulesParams {
    /// Uses `alpha_mode`, `k`, `v`, `c`, `lambda`, `warmup`, `noise_init`
    /// and `gamma`; the rest is ignored.
    pub opt: OptimizerParams,
    pub steps: u64,
    /// Smoothed sharpness fed to the adaptive controller, cycled if shorter
    /// than the trace.
    pub sharpness: Vec<f64>,
    pub out: PathBuf,
}

impl Default for SchedulesParams {
    fn default() -> Self {
        Self {
            opt: OptimizerParams::default(),
            steps: 1000,
            sharpness: vec![0.0],
            out: PathBuf::from("out/schedules"),
        }
    }
}

impl Params for SchedulesParams {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if self.opt.set(key, value)? {
            return Ok(());
        }
        match key {
            "mode" => self.opt.alpha_mode = value.to_owned(),
            "steps" => self.steps = config::parse_count(key, value)?,
            "sharpness" => {
                self.sharpness = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_real(key, s))
                    .collect::<Result<_, _>>()?
            }
            "out" => self.out = config::path(value),
            _ => return Err(config::unknown(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = self.opt.pairs();
        v.extend([
            ("steps", self.steps.to_string()),
            ("sharpness", config::join(&self.sharpness)),
            ("out", self.out.display().to_string()),
        ]);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRow {
    pub step: u64,
    pub sharpness: Option<f64>,
    pub alpha: f64,
    /// Sigmoid target and its input, when the adaptive controller ran.
    pub alpha_raw: Option<f64>,
    pub z: Option<f64>,
    pub sigma: f64,
}

pub const TRACE_HEADER: [&str; 6] = ["step", "sharpness", "alpha", "alpha_raw", "z", "sigma"];

/// Row 0 is the initial state; row `t ≥ 1` follows the update for step `t`.
pub fn trace(p: &SchedulesParams) -> Result<Vec<ScheduleRow>, CliError> {
    let mut sched: AlphaSchedule = p.opt.schedule()?;
    let adaptive = matches!(sched.mode(), AlphaMode::Adaptive { .. });
    if adaptive && p.sharpness.iter().any(|s| !s.is_finite()) || adaptive && p.sharpness.is_empty() {
        return Err(CliError::Config("sharpness must be a non-empty list of finite values".into()));
    }
    let (ni, g) = (p.opt.noise_init, p.opt.gamma);
    ahtsgd::schedules::NoiseScale::new(ni, g)?;
    let mut rows = Vec::with_capacity(p.steps as usize + 1);
    rows.push(ScheduleRow {
        step: 0,
        sharpness: None,
        alpha: sched.alpha(),
        alpha_raw: None,
        z: None,
        sigma: noise_sigma(ni, g, 0),
    });
    for t in 1..=p.steps {
        let s = adaptive.then(|| p.sharpness[(t as usize - 1) % p.sharpness.len()]);
        let alpha = sched.advance(t, s, s.unwrap_or(0.0));
        let last = if adaptive { sched.last_step() } else { None };
        rows.push(ScheduleRow {
            step: t,
            sharpness: s,
            alpha,
            alpha_raw: last.map(|l| l.alpha_raw),
            z: last.map(|l| l.z),
            sigma: noise_sigma(ni, g, t),
        });
    }
    Ok(rows)
}

pub fn run(p: &SchedulesParams) -> Result<Vec<ScheduleRow>, CliError> {
    let rows = trace(p)?;
    config::echo(&p.out, "schedules", p)?;
    let path = p.out.join("trace.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
    w.write_record(TRACE_HEADER)?;
    for r in &rows {
        w.write_record([
            r.step.to_string(),
            config::opt(&r.sharpness),
            r.alpha.to_string(),
            config::opt(&r.alpha_raw),
            config::opt(&r.z),
            r.sigma.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(rows)
}
