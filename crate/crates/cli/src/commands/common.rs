//! Optimizer settings shared by the `ackley`, `escape` and `train` commands.

use ahtsgd::optimizer::{Method, OptimizerConfig};
use ahtsgd::schedules::{AlphaSchedule, Midpoint, NoiseScale, DEFAULT_LAMBDA, DEFAULT_STEEPNESS, DEFAULT_WARMUP};

use crate::config::{parse, parse_bool, parse_usize};
use crate::error::CliError;

/// Real number, also accepting a fraction such as `1/10`.
pub fn parse_real(key: &str, value: &str) -> Result<f64, CliError> {
    if let Some((a, b)) = value.split_once('/') {
        let (a, b): (f64, f64) = (parse(key, a.trim())?, parse(key, b.trim())?);
        if b == 0.0 {
            return Err(CliError::Config(format!("`{key}`: division by zero in {value:?}")));
        }
        return Ok(a / b);
    }
    parse(key, value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerParams {
    /// `sgd`, `sgld`, `levy_fixed` or `ahtsgd`.
    pub method: String,
    pub eta: f64,
    /// Tail index for `levy_fixed`.
    pub alpha: f64,
    /// `adaptive` or `annealing` (for `ahtsgd`).
    pub alpha_mode: String,
    pub k: f64,
    pub v: f64,
    /// Sigmoid midpoint: a number or `auto`.
    pub c: String,
    pub lambda: f64,
    pub warmup: usize,
    pub noise_init: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub probes: usize,
    pub probe_every: u64,
    pub rho: f64,
    pub track_sharpness: bool,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            method: "ahtsgd".into(),
            eta: 0.01,
            alpha: 1.5,
            alpha_mode: "adaptive".into(),
            k: 0.1,
            v: DEFAULT_STEEPNESS,
            c: "auto".into(),
            lambda: DEFAULT_LAMBDA,
            warmup: DEFAULT_WARMUP,
            noise_init: 0.005,
            gamma: 0.55,
            temperature: 1.0,
            momentum: 0.0,
            weight_decay: 0.0,
            probes: 1,
            probe_every: 1,
            rho: 0.05,
            track_sharpness: false,
        }
    }
}

impl OptimizerParams {
    /// Returns `Ok(false)` when `key` is not an optimizer setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, CliError> {
        match key {
            "method" => self.method = value.to_owned(),
            "eta" => self.eta = parse_real(key, value)?,
            "alpha" => self.alpha = parse_real(key, value)?,
            "alpha_mode" => self.alpha_mode = value.to_owned(),
            "k" => self.k = parse_real(key, value)?,
            "v" => self.v = parse_real(key, value)?,
            "c" => {
                if value != "auto" {
                    parse_real(key, value)?;
                }
                self.c = value.to_owned();
            }
            "lambda" => self.lambda = parse_real(key, value)?,
            "warmup" => self.warmup = parse_usize(key, value)?,
            "noise_init" => self.noise_init = parse_real(key, value)?,
            "gamma" => self.gamma = parse_real(key, value)?,
            "temperature" => self.temperature = parse_real(key, value)?,
            "momentum" => self.momentum = parse_real(key, value)?,
            "weight_decay" => self.weight_decay = parse_real(key, value)?,
            "probes" => self.probes = parse_usize(key, value)?,
            "probe_every" => self.probe_every = parse_usize(key, value)? as u64,
            "rho" => self.rho = parse_real(key, value)?,
            "track_sharpness" => self.track_sharpness = parse_bool(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("method", self.method.clone()),
            ("eta", self.eta.to_string()),
            ("alpha", self.alpha.to_string()),
            ("alpha_mode", self.alpha_mode.clone()),
            ("k", self.k.to_string()),
            ("v", self.v.to_string()),
            ("c", self.c.clone()),
            ("lambda", self.lambda.to_string()),
            ("warmup", self.warmup.to_string()),
            ("noise_init", self.noise_init.to_string()),
            ("gamma", self.gamma.to_string()),
            ("temperature", self.temperature.to_string()),
            ("momentum", self.momentum.to_string()),
            ("weight_decay", self.weight_decay.to_string()),
            ("probes", self.probes.to_string()),
            ("probe_every", self.probe_every.to_string()),
            ("rho", self.rho.to_string()),
            ("track_sharpness", self.track_sharpness.to_string()),
        ]
    }

    pub fn schedule(&self) -> Result<AlphaSchedule, CliError> {
        match self.alpha_mode.as_str() {
            "adaptive" => {
                let c = if self.c == "auto" {
                    Midpoint::Auto { warmup: self.warmup }
                } else {
                    Midpoint::Fixed(parse_real("c", &self.c)?)
                };
                Ok(AlphaSchedule::adaptive(self.v, c, self.lambda)?)
            }
            "annealing" => Ok(AlphaSchedule::annealing(self.k)?),
            other => Err(CliError::Config(format!(
                "unknown alpha_mode {other:?} (adaptive | annealing)"
            ))),
        }
    }

    pub fn method(&self) -> Result<Method, CliError> {
        Ok(match self.method.as_str() {
            "sgd" => Method::Sgd,
            "sgld" => Method::Sgld {
                temperature: self.temperature,
            },
            "levy_fixed" | "levy" => Method::LevyFixed { alpha: self.alpha },
            "ahtsgd" => Method::Ahtsgd(self.schedule()?),
            other => {
                return Err(CliError::Config(format!(
                    "unknown method {other:?} (sgd | sgld | levy_fixed | ahtsgd)"
                )))
            }
        })
    }

    pub fn build(&self, seed: u64) -> Result<OptimizerConfig, CliError> {
        let mut cfg = OptimizerConfig::new(self.eta, self.method()?, NoiseScale::new(self.noise_init, self.gamma)?, seed);
        cfg.momentum = self.momentum;
        cfg.weight_decay = self.weight_decay;
        cfg.probes = self.probes;
        cfg.probe_every = self.probe_every;
        cfg.rho = self.rho;
        cfg.track_sharpness = self.track_sharpness;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Independent 64-bit seed for item `index` of a sweep (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Thread pool of `jobs` workers (0 means one per core).
pub fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} worker threads: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions() {
        assert_eq!(parse_real("k", "1/10").unwrap(), 0.1);
        assert_eq!(parse_real("k", "0.25").unwrap(), 0.25);
        assert!(parse_real("k", "1/0").is_err());
    }

    #[test]
    fn unknown_method_is_a_config_error() {
        let p = OptimizerParams {
            method: "adam".into(),
            ..Default::default()
        };
        assert!(matches!(p.build(0), Err(CliError::Config(_))));
    }

    #[test]
    fn round_trips_through_pairs() {
        let mut p = OptimizerParams::default();
        p.set("alpha_mode", "annealing").unwrap();
        p.set("k", "1/50").unwrap();
        let mut q = OptimizerParams::default();
        for (k, v) in p.pairs() {
            assert!(q.set(k, &v).unwrap());
        }
        assert_eq!(p, q);
    }
}
