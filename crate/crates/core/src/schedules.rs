//! Time-varying tail index α_t and noise scale σ_t.

use crate::error::{Error, Result};
use crate::stable_noise::{ALPHA_MAX, ALPHA_MIN};

/// Number of sharpness samples used to auto-calibrate the sigmoid midpoint.
pub const DEFAULT_WARMUP: usize = 50;
pub const DEFAULT_STEEPNESS: f64 = 2.0;
pub const DEFAULT_LAMBDA: f64 = 0.1;

/// One evaluation of the adaptive controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveStep {
    pub z: f64,
    pub alpha_raw: f64,
    pub alpha: f64,
}

/// Sigmoid of the smoothed sharpness, mapped linearly onto `[1, 2]`, then a
/// partial move of size `lambda` from the current α toward that target.
pub fn adaptive_alpha(alpha: f64, ema_sharpness: f64, v: f64, c: f64, lambda: f64) -> AdaptiveStep {
    // exp overflow gives z = 0, underflow gives z = 1; both are the right limits.
    let z = 1.0 / (1.0 + (-v * (ema_sharpness - c)).exp());
    let alpha_raw = ALPHA_MIN + (ALPHA_MAX - ALPHA_MIN) * z;
    let next = (alpha + lambda * (alpha_raw - alpha)).clamp(ALPHA_MIN, ALPHA_MAX);
    AdaptiveStep {
        z,
        alpha_raw,
        alpha: next,
    }
}

/// `2 − exp(−k·t)`.
pub fn annealing_alpha(k: f64, t: u64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::param("k", format!("must be finite and > 0, got {k}")));
    }
    Ok(2.0 - (-k * t as f64).exp())
}

/// Where the sigmoid is centred.
#[derive(Debug, Clone, PartialEq)]
pub enum Midpoint {
    Fixed(f64),
    /// Median of the first `warmup` raw sharpness samples. α is held at its
    /// minimum until the median is available.
    Auto { warmup: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaMode {
    Adaptive { v: f64, c: Midpoint, lambda: f64 },
    Annealing { k: f64 },
}

/// Tail-index controller state.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSchedule {
    mode: AlphaMode,
    alpha: f64,
    calibration: Vec<f64>,
    midpoint: Option<f64>,
    last: Option<AdaptiveStep>,
}

impl AlphaSchedule {
    pub fn adaptive(v: f64, c: Midpoint, lambda: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param("v", format!("must be finite and > 0, got {v}")));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::param("lambda", format!("must lie in (0, 1], got {lambda}")));
        }
        let midpoint = match c {
            Midpoint::Fixed(c) if !c.is_finite() => {
                return Err(Error::param("c", format!("must be finite, got {c}")))
            }
            Midpoint::Fixed(c) => Some(c),
            Midpoint::Auto { warmup: 0 } => return Err(Error::param("c", "auto warm-up must be >= 1")),
            Midpoint::Auto { .. } => None,
        };
        Ok(Self {
            mode: AlphaMode::Adaptive { v, c, lambda },
            alpha: ALPHA_MIN,
            calibration: Vec::new(),
            midpoint,
            last: None,
        })
    }

    pub fn annealing(k: f64) -> Result<Self> {
        annealing_alpha(k, 0)?;
        Ok(Self {
            mode: AlphaMode::Annealing { k },
            alpha: ALPHA_MIN,
            calibration: Vec::new(),
            midpoint: None,
            last: None,
        })
    }

    pub fn mode(&self) -> &AlphaMode {
        &self.mode
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Resolved sigmoid midpoint, once known.
    pub fn midpoint(&self) -> Option<f64> {
        self.midpoint
    }

    /// The most recent adaptive evaluation, if any.
    pub fn last_step(&self) -> Option<AdaptiveStep> {
        self.last
    }

    pub fn calibrating(&self) -> bool {
        matches!(self.mode, AlphaMode::Adaptive { .. }) && self.midpoint.is_none()
    }

    /// Pure adaptive update from the smoothed sharpness. Holds α while the
    /// midpoint is still being calibrated; annealing schedules are returned
    /// unchanged.
    pub fn adaptive_alpha_step(&self, ema_sharpness: f64) -> Self {
        let mut next = self.clone();
        if let (AlphaMode::Adaptive { v, lambda, .. }, Some(c)) = (&self.mode, self.midpoint) {
            let step = adaptive_alpha(self.alpha, ema_sharpness, *v, c, *lambda);
            next.alpha = step.alpha;
            next.last = Some(step);
        }
        next
    }

    /// Advance the controller for global step `t` and return the α to use.
    ///
    /// `raw_sharpness` is the new `s_t` when this step probed curvature
    /// (feeds midpoint calibration); `ema_sharpness` is the smoothed value
    /// after this step's update.
    pub fn advance(&mut self, t: u64, raw_sharpness: Option<f64>, ema_sharpness: f64) -> f64 {
        match &self.mode {
            AlphaMode::Annealing { k } => {
                self.alpha = 2.0 - (-k * t as f64).exp();
            }
            AlphaMode::Adaptive { c, .. } => {
                if self.midpoint.is_none() {
                    if let (Midpoint::Auto { warmup }, Some(s)) = (c, raw_sharpness) {
                        self.calibration.push(s);
                        if self.calibration.len() >= *warmup {
                            self.midpoint = Some(crate::stats::median(&self.calibration));
                            self.calibration = Vec::new();
                        }
                    }
                    // α stays at its minimum for the whole warm-up, including
                    // the step that completes it.
                    return self.alpha;
                }
                *self = self.adaptive_alpha_step(ema_sharpness);
            }
        }
        self.alpha
    }
}

/// Decaying noise scale `σ_t = √noise_init / (1+t)^{γ/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScale {
    pub noise_init: f64,
    pub gamma: f64,
}

impl NoiseScale {
    /// `noise_init = 0` is accepted and switches the noise off.
    pub fn new(noise_init: f64, gamma: f64) -> Result<Self> {
        if !(noise_init >= 0.0 && noise_init.is_finite()) {
            return Err(Error::param("noise_init", format!("must be finite and >= 0, got {noise_init}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be finite and >= 0, got {gamma}")));
        }
        Ok(Self { noise_init, gamma })
    }

    pub fn sigma(&self, t: u64) -> f64 {
        noise_sigma(self.noise_init, self.gamma, t)
    }
}

pub fn noise_sigma(noise_init: f64, gamma: f64, t: u64) -> f64 {
    noise_init.sqrt() / (1.0 + t as f64).powf(gamma / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn midpoint_is_fixed_point() {
        let s = adaptive_alpha(1.5, 0.8, 3.0, 0.8, 0.1);
        assert_eq!(s.z, 0.5);
        assert_eq!(s.alpha_raw, 1.5);
        assert_eq!(s.alpha, 1.5);
    }

    #[test]
    fn saturates_without_nan() {
        let hi = adaptive_alpha(1.0, 1e308, 2.0, 0.0, 0.1);
        assert_eq!(hi.z, 1.0);
        assert_eq!(hi.alpha_raw, 2.0);
        let lo = adaptive_alpha(2.0, -1e308, 2.0, 0.0, 0.1);
        assert_eq!(lo.z, 0.0);
        assert_eq!(lo.alpha_raw, 1.0);
    }

    #[test]
    fn hand_evaluated_step() {
        let s = adaptive_alpha(1.0, 0.0, 1.0, 0.0, 0.1);
        assert_eq!(s.alpha_raw, 1.5);
        assert!((s.alpha - 1.05).abs() < 1e-15);
    }

    #[test]
    fn annealing_values() {
        assert_eq!(annealing_alpha(0.1, 0).unwrap(), 1.0);
        let a = annealing_alpha(0.1, 10).unwrap();
        assert!((a - (2.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((a - 1.6321).abs() < 1e-4);
        assert!(annealing_alpha(0.2, 100).unwrap() > 1.999);
        assert!(annealing_alpha(0.0, 1).is_err());
        assert!(annealing_alpha(-0.5, 1).is_err());
    }

    #[test]
    fn noise_sigma_values() {
        assert!((noise_sigma(0.001, 0.55, 0) - 0.031_622_776_6).abs() < 1e-9);
        for t in [0, 1, 10, 1000] {
            assert_eq!(noise_sigma(0.004, 0.0, t), 0.004f64.sqrt());
        }
        let s = noise_sigma(0.005, 0.55, 899);
        assert!((s - 0.010_891_014).abs() < 1e-8, "{s}");
        assert!(NoiseScale::new(-1.0, 0.5).is_err());
        assert!(NoiseScale::new(0.1, -0.5).is_err());
    }

    #[test]
    fn auto_midpoint_holds_alpha_during_warmup() {
        let mut sched = AlphaSchedule::adaptive(2.0, Midpoint::Auto { warmup: 5 }, 0.1).unwrap();
        for t in 0..5 {
            let a = sched.advance(t, Some(t as f64), 10.0);
            assert_eq!(a, 1.0);
        }
        assert_eq!(sched.midpoint(), Some(2.0));
        let a = sched.advance(5, Some(0.0), 2.0);
        assert!((a - 1.05).abs() < 1e-15);
        assert!(!sched.calibrating());
    }

    #[test]
    fn steps_without_probe_do_not_calibrate() {
        let mut sched = AlphaSchedule::adaptive(2.0, Midpoint::Auto { warmup: 2 }, 0.1).unwrap();
        sched.advance(0, None, 0.0);
        sched.advance(1, Some(1.0), 0.0);
        assert!(sched.calibrating());
        sched.advance(2, Some(3.0), 0.0);
        assert_eq!(sched.midpoint(), Some(2.0));
    }

    #[test]
    fn annealing_schedule_follows_global_step() {
        let mut sched = AlphaSchedule::annealing(0.1).unwrap();
        assert_eq!(sched.advance(0, None, 0.0), 1.0);
        assert_eq!(sched.advance(10, None, 0.0), 2.0 - (-1.0f64).exp());
    }

    #[test]
    fn constructor_validation() {
        assert!(AlphaSchedule::adaptive(0.0, Midpoint::Fixed(0.0), 0.1).is_err());
        assert!(AlphaSchedule::adaptive(1.0, Midpoint::Fixed(f64::NAN), 0.1).is_err());
        assert!(AlphaSchedule::adaptive(1.0, Midpoint::Fixed(0.0), 0.0).is_err());
        assert!(AlphaSchedule::adaptive(1.0, Midpoint::Auto { warmup: 0 }, 0.1).is_err());
        assert!(AlphaSchedule::annealing(0.0).is_err());
    }

    #[test]
    fn constant_input_converges_geometrically() {
        let mut sched = AlphaSchedule::adaptive(2.0, Midpoint::Fixed(0.7), 0.1).unwrap();
        for t in 0..200u64 {
            let a = sched.advance(t, Some(0.7), 0.7);
            let expected = 1.5 - 0.5 * 0.9f64.powi(t as i32 + 1);
            assert!((a - expected).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn alpha_stays_in_range(
            v in 0.01f64..50.0,
            c in -10.0f64..10.0,
            lambda in 0.001f64..=1.0,
            seq in proptest::collection::vec(-1e6f64..1e6, 1..200),
        ) {
            let mut sched = AlphaSchedule::adaptive(v, Midpoint::Fixed(c), lambda).unwrap();
            for (t, s) in seq.iter().enumerate() {
                let a = sched.advance(t as u64, Some(*s), *s);
                prop_assert!((1.0..=2.0).contains(&a));
            }
        }

        #[test]
        fn alpha_raw_increasing_in_sharpness(
            v in 0.01f64..5.0, c in -3.0f64..3.0, a in -5.0f64..5.0, d in 0.01f64..2.0,
        ) {
            let lo = adaptive_alpha(1.5, a, v, c, 0.1);
            let hi = adaptive_alpha(1.5, a + d, v, c, 0.1);
            prop_assert!(hi.alpha_raw > lo.alpha_raw);
        }

        #[test]
        fn contraction_toward_target(
            alpha in 1.0f64..=2.0, ema in -5.0f64..5.0, v in 0.1f64..5.0, lambda in 0.01f64..=1.0,
        ) {
            let s = adaptive_alpha(alpha, ema, v, 0.0, lambda);
            let before = (alpha - s.alpha_raw).abs();
            let after = (s.alpha - s.alpha_raw).abs();
            prop_assert!((after - (1.0 - lambda) * before).abs() < 1e-12);
        }

        #[test]
        fn annealing_nondecreasing(k in 1e-4f64..5.0, t in 0u64..100_000) {
            let a = annealing_alpha(k, t).unwrap();
            let b = annealing_alpha(k, t + 1).unwrap();
            prop_assert!((1.0..=2.0).contains(&a));
            prop_assert!(b >= a);
        }

        #[test]
        fn sigma_decreasing_and_scaling(n in 1e-6f64..1.0, g in 0.01f64..2.0, t in 0u64..100_000) {
            prop_assert!(noise_sigma(n, g, t + 1) < noise_sigma(n, g, t));
            let ratio = noise_sigma(4.0 * n, g, t) / noise_sigma(n, g, t);
            prop_assert!((ratio - 2.0).abs() < 1e-12);
        }
    }
}
