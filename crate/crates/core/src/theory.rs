//! Closed-form escape-time, suboptimality and convergence-bound expressions.
//!
//! These evaluate the expressions as written; they are diagnostics, not
//! verified bounds. In particular `C_α` (the second moment of the noise) is
//! infinite for α < 2, so callers supply it as a plain constant.

use libm::tgamma as gamma;

use crate::error::{Error, Result};
use crate::stable_noise::check_alpha;

/// Exponents above this return a flagged `+∞` instead of overflowing.
pub const EXP_OVERFLOW: f64 = 700.0;

/// A value that may have been replaced by `+∞` because its exponent exceeded
/// [`EXP_OVERFLOW`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guarded {
    pub value: f64,
    pub exponent: f64,
    pub overflow: bool,
}

fn guarded_exp(exponent: f64) -> Guarded {
    if exponent > EXP_OVERFLOW {
        Guarded {
            value: f64::INFINITY,
            exponent,
            overflow: true,
        }
    } else {
        Guarded {
            value: exponent.exp(),
            exponent,
            overflow: false,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and >= 0, got {v}")))
    }
}

/// Inputs shared by the calculators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub barrier: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub eta: f64,
    pub lambda_max: f64,
    pub gamma: f64,
    pub horizon: u64,
    pub smoothness: f64,
    /// `‖θ₀ − θ*‖`.
    pub init_dist: f64,
    /// Noise constant `C_α` of the convergence bound.
    pub c_alpha: f64,
}

impl Default for BoundInputs {
    fn default() -> Self {
        Self {
            barrier: 1.0,
            sigma: 0.1,
            alpha: 2.0,
            eta: 0.01,
            lambda_max: 1.0,
            gamma: 0.55,
            horizon: 100,
            smoothness: 1.0,
            init_dist: 1.0,
            c_alpha: 1.0,
        }
    }
}

/// `exp(H / σ^α)`.
pub fn escape_time(barrier: f64, sigma: f64, alpha: f64) -> Result<Guarded> {
    non_negative("barrier", barrier)?;
    positive("sigma", sigma)?;
    check_alpha(alpha)?;
    Ok(guarded_exp(barrier / sigma.powf(alpha)))
}

/// `exp(H/σ² − (H/σ^α)·Γ(1 + 2/α)^{α/2})`.
pub fn escape_ratio(barrier: f64, sigma: f64, alpha: f64) -> Result<Guarded> {
    non_negative("barrier", barrier)?;
    positive("sigma", sigma)?;
    check_alpha(alpha)?;
    let g = gamma(1.0 + 2.0 / alpha).powf(alpha / 2.0);
    Ok(guarded_exp(barrier / (sigma * sigma) - barrier / sigma.powf(alpha) * g))
}

/// `(λ_max / (2/η))^{2−α}`.
pub fn suboptimality_factor(lambda_max: f64, eta: f64, alpha: f64) -> Result<f64> {
    positive("lambda_max", lambda_max)?;
    positive("eta", eta)?;
    check_alpha(alpha)?;
    Ok((lambda_max * eta / 2.0).powf(2.0 - alpha))
}

fn early_checks(gamma: f64, alpha_t: f64, horizon: u64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("must lie in (0, 1), got {gamma}")));
    }
    if !(alpha_t > 1.0 && alpha_t <= 2.0) {
        return Err(Error::param("alpha_t", format!("must lie in (1, 2], got {alpha_t}")));
    }
    if horizon == 0 {
        return Err(Error::param("horizon", "must be >= 1"));
    }
    Ok(())
}

/// `T^{γ − min(γ, 1 − 1/α_T)}`.
pub fn early_acceleration_ratio(gamma: f64, alpha_t: f64, horizon: u64) -> Result<f64> {
    early_checks(gamma, alpha_t, horizon)?;
    Ok((horizon as f64).powf(gamma - gamma.min(1.0 - 1.0 / alpha_t)))
}

/// Where the ratio exceeds 1 for `T > 1`, from the exponent:
/// `γ > 1 − 1/α_T`, i.e. `α_T < 1/(1 − γ)`.
pub fn acceleration_by_exponent(gamma: f64, alpha_t: f64) -> bool {
    // Same expression as the ratio's exponent, so the two agree on the boundary.
    gamma > 1.0 - 1.0 / alpha_t
}

/// The regime condition as usually quoted alongside the ratio: `α_T < 2 − γ`.
pub fn acceleration_by_quoted_condition(gamma: f64, alpha_t: f64) -> bool {
    alpha_t < 2.0 - gamma
}

/// Grid point where the quoted condition and the exponent disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionMismatch {
    pub gamma: f64,
    pub alpha_t: f64,
    pub ratio: f64,
    pub by_exponent: bool,
    pub by_quoted: bool,
}

/// Evaluates both conditions and the ratio on every grid point and returns
/// the points where the conditions differ. Also checks that the ratio itself
/// agrees with the exponent condition; a disagreement there is an error.
pub fn scan_acceleration_conditions(gammas: &[f64], alphas: &[f64], horizon: u64) -> Result<Vec<ConditionMismatch>> {
    if horizon < 2 {
        return Err(Error::param("horizon", "must be >= 2 for a strict comparison"));
    }
    let mut out = Vec::new();
    for &g in gammas {
        for &a in alphas {
            let ratio = early_acceleration_ratio(g, a, horizon)?;
            let by_exponent = acceleration_by_exponent(g, a);
            let by_quoted = acceleration_by_quoted_condition(g, a);
            // A positive exponent below ~1e-16 can round the ratio to exactly 1.
            if (ratio > 1.0) != by_exponent && !(by_exponent && ratio == 1.0) {
                return Err(Error::Config(format!(
                    "ratio {ratio} at gamma {g}, alpha {a} contradicts the exponent condition"
                )));
            }
            if by_exponent != by_quoted {
                out.push(ConditionMismatch {
                    gamma: g,
                    alpha_t: a,
                    ratio,
                    by_exponent,
                    by_quoted,
                });
            }
        }
    }
    Ok(out)
}

/// `‖θ₀−θ*‖²/T^γ + C_α/T^{min(γ, 1−1/α(T))} · Σ_{t=1..T} σ_t^{α_t}/t^γ`.
///
/// `sigma_at(t)` and `alpha_at(t)` are evaluated for `t = 1..=T`.
pub fn convergence_bound<S, A>(inputs: &BoundInputs, sigma_at: S, alpha_at: A) -> Result<f64>
where
    S: Fn(u64) -> f64,
    A: Fn(u64) -> f64,
{
    let (g, t_max) = (inputs.gamma, inputs.horizon);
    if t_max == 0 {
        return Err(Error::param("horizon", "must be >= 1"));
    }
    non_negative("gamma", g)?;
    non_negative("init_dist", inputs.init_dist)?;
    non_negative("c_alpha", inputs.c_alpha)?;
    let mut terms = Vec::with_capacity(t_max as usize);
    for t in 1..=t_max {
        let (s, a) = (sigma_at(t), alpha_at(t));
        non_negative("sigma_t", s)?;
        check_alpha(a)?;
        terms.push(s.powf(a) / (t as f64).powf(g));
    }
    let t = t_max as f64;
    let alpha_end = alpha_at(t_max);
    let sum = kahan_sum(&terms);
    Ok(inputs.init_dist.powi(2) / t.powf(g) + inputs.c_alpha / t.powf(g.min(1.0 - 1.0 / alpha_end)) * sum)
}

/// The plain-SGD form with constant σ: `‖θ₀−θ*‖²/T^γ + σ²/T^γ · Σ 1/t^γ`.
pub fn sgd_convergence_bound(inputs: &BoundInputs) -> Result<f64> {
    let (g, t_max) = (inputs.gamma, inputs.horizon);
    if t_max == 0 {
        return Err(Error::param("horizon", "must be >= 1"));
    }
    non_negative("gamma", g)?;
    non_negative("sigma", inputs.sigma)?;
    let terms: Vec<f64> = (1..=t_max).map(|t| 1.0 / (t as f64).powf(g)).collect();
    let t = t_max as f64;
    Ok(inputs.init_dist.powi(2) / t.powf(g) + inputs.sigma.powi(2) / t.powf(g) * kahan_sum(&terms))
}

fn kahan_sum(xs: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let y = x - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}
