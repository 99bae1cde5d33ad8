//! `theory`: tabulates a closed-form calculator over a grid of inputs.
//!
//! Every input accepts a scalar, a list `a,b,c`, or an inclusive linear grid
//! `start:stop:count`. The table is the Cartesian product of the inputs the
//! chosen function uses, varying the last input fastest.

use std::path::PathBuf;

use ahtsgd::theory::{self, BoundInputs};

use super::common::parse_real;
use crate::config::{self, Params};
use crate::error::CliError;

pub const FUNCTIONS: [&str; 6] = [
    "escape_time",
    "escape_ratio",
    "suboptimality",
    "early_acceleration",
    "convergence_bound",
    "sgd_convergence_bound",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    pub function: String,
    pub barrier: String,
    pub sigma: String,
    pub alpha: String,
    pub eta: String,
    pub lambda_max: String,
    pub gamma: String,
    pub horizon: String,
    pub init_dist: String,
    pub c_alpha: String,
    pub out: PathBuf,
}

impl Default for TheoryParams {
    fn default() -> Self {
        Self {
            function: "escape_time".into(),
            barrier: "1".into(),
            sigma: "0.1".into(),
            alpha: "1:2:11".into(),
            eta: "0.01".into(),
            lambda_max: "200".into(),
            gamma: "0.55".into(),
            horizon: "100".into(),
            init_dist: "1".into(),
            c_alpha: "1".into(),
            out: PathBuf::from("out/theory"),
        }
    }
}

impl Params for TheoryParams {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let slot = match key {
            "function" => &mut self.function,
            "barrier" => &mut self.barrier,
            "sigma" => &mut self.sigma,
            "alpha" => &mut self.alpha,
            "eta" => &mut self.eta,
            "lambda_max" => &mut self.lambda_max,
            "gamma" => &mut self.gamma,
            "horizon" => &mut self.horizon,
            "init_dist" => &mut self.init_dist,
            "c_alpha" => &mut self.c_alpha,
            "out" => {
                self.out = config::path(value);
                return Ok(());
            }
            _ => return Err(config::unknown(key)),
        };
        *slot = value.to_owned();
        if key != "function" {
            grid(key, value)?;
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("function", self.function.clone()),
            ("barrier", self.barrier.clone()),
            ("sigma", self.sigma.clone()),
            ("alpha", self.alpha.clone()),
            ("eta", self.eta.clone()),
            ("lambda_max", self.lambda_max.clone()),
            ("gamma", self.gamma.clone()),
            ("horizon", self.horizon.clone()),
            ("init_dist", self.init_dist.clone()),
            ("c_alpha", self.c_alpha.clone()),
            ("out", self.out.display().to_string()),
        ]
    }
}

/// Scalar, comma list, or `start:stop:count` (inclusive, `count ≥ 2`).
pub fn grid(key: &str, spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, n] => {
            let (a, b) = (parse_real(key, a)?, parse_real(key, b)?);
            let n = config::parse_usize(key, n)?;
            if n < 2 {
                return Err(CliError::Config(format!("`{key}`: a grid needs count >= 2")));
            }
            // Endpoints exact; interior points by interpolation.
            Ok((0..n)
                .map(|i| {
                    if i == n - 1 {
                        b
                    } else {
                        a + (b - a) * i as f64 / (n - 1) as f64
                    }
                })
                .collect())
        }
        [_] => {
            let v: Vec<f64> = spec
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_real(key, s))
                .collect::<Result<_, _>>()?;
            if v.is_empty() {
                return Err(CliError::Config(format!("`{key}`: empty grid")));
            }
            Ok(v)
        }
        _ => Err(CliError::Config(format!("`{key}`: cannot parse grid {spec:?}"))),
    }
}

fn inputs_for(function: &str) -> Result<&'static [&'static str], CliError> {
    Ok(match function {
        "escape_time" | "escape_ratio" => &["barrier", "sigma", "alpha"],
        "suboptimality" => &["lambda_max", "eta", "alpha"],
        "early_acceleration" => &["gamma", "alpha", "horizon"],
        "convergence_bound" => &["init_dist", "c_alpha", "sigma", "alpha", "gamma", "horizon"],
        "sgd_convergence_bound" => &["init_dist", "sigma", "gamma", "horizon"],
        other => {
            return Err(CliError::Config(format!(
                "unknown function {other:?} ({})",
                FUNCTIONS.join(" | ")
            )))
        }
    })
}

impl TheoryParams {
    fn spec(&self, key: &str) -> &str {
        match key {
            "barrier" => &self.barrier,
            "sigma" => &self.sigma,
            "alpha" => &self.alpha,
            "eta" => &self.eta,
            "lambda_max" => &self.lambda_max,
            "gamma" => &self.gamma,
            "horizon" => &self.horizon,
            "init_dist" => &self.init_dist,
            "c_alpha" => &self.c_alpha,
            _ => unreachable!("not a grid input: {key}"),
        }
    }
}

/// One table row: the inputs in column order, then the outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRow {
    pub inputs: Vec<f64>,
    pub value: f64,
    /// Exponent and overflow flag for the guarded exponentials.
    pub exponent: Option<f64>,
    pub overflow: Option<bool>,
    /// Both acceleration conditions, for `early_acceleration`.
    pub by_exponent: Option<bool>,
    pub by_quoted: Option<bool>,
}

fn horizon(x: f64) -> Result<u64, CliError> {
    if x >= 1.0 && x.fract() == 0.0 {
        Ok(x as u64)
    } else {
        Err(CliError::Config(format!("horizon must be a positive integer, got {x}")))
    }
}

fn evaluate(function: &str, x: &[f64]) -> Result<TheoryRow, CliError> {
    let plain = |value: f64| TheoryRow {
        inputs: x.to_vec(),
        value,
        exponent: None,
        overflow: None,
        by_exponent: None,
        by_quoted: None,
    };
    let guarded = |g: theory::Guarded| TheoryRow {
        exponent: Some(g.exponent),
        overflow: Some(g.overflow),
        ..plain(g.value)
    };
    Ok(match function {
        "escape_time" => guarded(theory::escape_time(x[0], x[1], x[2])?),
        "escape_ratio" => guarded(theory::escape_ratio(x[0], x[1], x[2])?),
        "suboptimality" => plain(theory::suboptimality_factor(x[0], x[1], x[2])?),
        "early_acceleration" => TheoryRow {
            by_exponent: Some(theory::acceleration_by_exponent(x[0], x[1])),
            by_quoted: Some(theory::acceleration_by_quoted_condition(x[0], x[1])),
            ..plain(theory::early_acceleration_ratio(x[0], x[1], horizon(x[2])?)?)
        },
        "convergence_bound" => {
            let inputs = BoundInputs {
                init_dist: x[0],
                c_alpha: x[1],
                sigma: x[2],
                alpha: x[3],
                gamma: x[4],
                horizon: horizon(x[5])?,
                ..BoundInputs::default()
            };
            plain(theory::convergence_bound(&inputs, |_| x[2], |_| x[3])?)
        }
        "sgd_convergence_bound" => {
            let inputs = BoundInputs {
                init_dist: x[0],
                sigma: x[1],
                gamma: x[2],
                horizon: horizon(x[3])?,
                ..BoundInputs::default()
            };
            plain(theory::sgd_convergence_bound(&inputs)?)
        }
        _ => unreachable!(),
    })
}

pub fn table(p: &TheoryParams) -> Result<(Vec<&'static str>, Vec<TheoryRow>), CliError> {
    let names = inputs_for(&p.function)?;
    let grids: Vec<Vec<f64>> = names.iter().map(|k| grid(k, p.spec(k))).collect::<Result<_, _>>()?;
    let total: usize = grids.iter().map(Vec::len).product();
    let mut rows = Vec::with_capacity(total);
    for mut i in 0..total {
        let mut x = vec![0.0; grids.len()];
        for (slot, g) in x.iter_mut().zip(&grids).rev() {
            *slot = g[i % g.len()];
            i /= g.len();
        }
        rows.push(evaluate(&p.function, &x)?);
    }
    Ok((names.to_vec(), rows))
}

pub fn run(p: &TheoryParams) -> Result<Vec<TheoryRow>, CliError> {
    let (names, rows) = table(p)?;
    config::echo(&p.out, "theory", p)?;
    let path = p.out.join("table.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
    let mut head: Vec<&str> = names.clone();
    head.push("value");
    let guarded = matches!(p.function.as_str(), "escape_time" | "escape_ratio");
    let early = p.function == "early_acceleration";
    if guarded {
        head.extend(["exponent", "overflow"]);
    }
    if early {
        head.extend(["accelerates_by_exponent", "accelerates_by_quoted_condition"]);
    }
    w.write_record(&head)?;
    for r in &rows {
        let mut rec: Vec<String> = r.inputs.iter().map(f64::to_string).collect();
        rec.push(r.value.to_string());
        if guarded {
            rec.push(config::opt(&r.exponent));
            rec.push(config::opt(&r.overflow));
        }
        if early {
            rec.push(config::opt(&r.by_exponent));
            rec.push(config::opt(&r.by_quoted));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(rows)
}
