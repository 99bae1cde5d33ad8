use super::{check_len, Objective};
use crate::error::{Error, Result};

/// Required curvature ratio between the sharp and the wide minimum.
pub const DEFAULT_MIN_CURVATURE_RATIO: f64 = 10.0;

/// One-dimensional potential with a narrow well at `x = 0`, a barrier at
/// `x = sharp_width`, and a wide well at `x = sharp_width + wide_width`.
///
/// Built from smoothstep pieces `S(t) = 3t² − 2t³` with quadratic tails, so it
/// is C² everywhere except at the barrier top (C¹ there):
///
/// ```text
///   x < 0            3H (x/a)²
///   0 ≤ x ≤ a        H S(x/a)
///   a < x ≤ a + b    H − D S((x − a)/b)
///   x > a + b        H − D + 3D ((x − a − b)/b)²
/// ```
///
/// The barrier is exactly `H` above the sharp minimum. Vector inputs are
/// treated as independent coordinates and summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleWell {
    pub barrier: f64,
    pub sharp_width: f64,
    pub wide_width: f64,
    pub wide_depth: f64,
    pub dim: usize,
}

impl DoubleWell {
    pub fn new(barrier: f64, sharp_width: f64, wide_width: f64, wide_depth: f64) -> Result<Self> {
        for (name, v) in [
            ("barrier", barrier),
            ("sharp_width", sharp_width),
            ("wide_width", wide_width),
            ("wide_depth", wide_depth),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter {
                    name: "double_well",
                    reason: format!("{name} must be finite and > 0, got {v}"),
                });
            }
        }
        let well = Self {
            barrier,
            sharp_width,
            wide_width,
            wide_depth,
            dim: 1,
        };
        if well.curvature_ratio() < DEFAULT_MIN_CURVATURE_RATIO {
            return Err(Error::param(
                "double_well",
                format!(
                    "sharp/wide curvature ratio {} is below {}",
                    well.curvature_ratio(),
                    DEFAULT_MIN_CURVATURE_RATIO
                ),
            ));
        }
        Ok(well)
    }

    /// Barrier `h` with the default geometry: sharp width 0.5, wide width 2,
    /// and a wide well as deep as the barrier, so both minima sit at 0 and the
    /// curvature ratio is 16 for every `h`.
    pub fn with_barrier(barrier: f64) -> Result<Self> {
        Self::new(barrier, 0.5, 2.0, barrier)
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn sharp_min(&self) -> f64 {
        0.0
    }

    pub fn barrier_location(&self) -> f64 {
        self.sharp_width
    }

    pub fn wide_min(&self) -> f64 {
        self.sharp_width + self.wide_width
    }

    pub fn curvature_ratio(&self) -> f64 {
        self.second_derivative(self.sharp_min()) / self.second_derivative(self.wide_min())
    }

    pub fn potential(&self, x: f64) -> f64 {
        let (h, a, b, d) = (self.barrier, self.sharp_width, self.wide_width, self.wide_depth);
        if x < 0.0 {
            let t = x / a;
            3.0 * h * t * t
        } else if x <= a {
            h * smoothstep(x / a)
        } else if x <= a + b {
            h - d * smoothstep((x - a) / b)
        } else {
            let u = (x - a - b) / b;
            h - d + 3.0 * d * u * u
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (h, a, b, d) = (self.barrier, self.sharp_width, self.wide_width, self.wide_depth);
        if x < 0.0 {
            6.0 * h * x / (a * a)
        } else if x <= a {
            h * smoothstep_d(x / a) / a
        } else if x <= a + b {
            -d * smoothstep_d((x - a) / b) / b
        } else {
            6.0 * d * (x - a - b) / (b * b)
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let (h, a, b, d) = (self.barrier, self.sharp_width, self.wide_width, self.wide_depth);
        if x < 0.0 {
            6.0 * h / (a * a)
        } else if x <= a {
            h * (6.0 - 12.0 * x / a) / (a * a)
        } else if x <= a + b {
            -d * (6.0 - 12.0 * (x - a) / b) / (b * b)
        } else {
            6.0 * d / (b * b)
        }
    }
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn smoothstep_d(t: f64) -> f64 {
    6.0 * t * (1.0 - t)
}

impl Objective for DoubleWell {
    type Batch = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, theta: &[f64], _: &()) -> Result<f64> {
        check_len("theta", theta.len(), self.dim)?;
        Ok(theta.iter().map(|&x| self.potential(x)).sum())
    }

    fn loss_grad(&self, theta: &[f64], b: &()) -> Result<(f64, Vec<f64>)> {
        let l = self.loss(theta, b)?;
        Ok((l, theta.iter().map(|&x| self.derivative(x)).collect()))
    }

    fn hvp(&self, theta: &[f64], v: &[f64], _: &()) -> Result<Vec<f64>> {
        check_len("theta", theta.len(), self.dim)?;
        check_len("v", v.len(), self.dim)?;
        Ok(theta.iter().zip(v).map(|(&x, &d)| self.second_derivative(x) * d).collect())
    }
}
