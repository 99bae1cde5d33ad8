use std::f64::consts::{E, PI};

use super::{check_len, Objective};
use crate::error::Result;

const A: f64 = 20.0;
const B: f64 = 0.2;
const TWO_PI: f64 = 2.0 * PI;

/// Ackley function with the standard constants `a = 20`, `b = 0.2`, `c = 2π`.
/// Global minimum `f(0) = 0`; local minima sit near the integer lattice.
pub fn ackley(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let r = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let mean_cos = x.iter().map(|v| (TWO_PI * v).cos()).sum::<f64>() / n;
    -A * (-B * r).exp() - mean_cos.exp() + A + E
}

/// Gradient of [`ackley`]. At the origin the radial term is not
/// differentiable; its contribution is taken as zero there.
pub fn ackley_grad(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let r = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let mean_cos = x.iter().map(|v| (TWO_PI * v).cos()).sum::<f64>() / n;
    let radial = if r > 0.0 { A * B * (-B * r).exp() / (n * r) } else { 0.0 };
    let osc = TWO_PI / n * mean_cos.exp();
    x.iter().map(|&v| radial * v + osc * (TWO_PI * v).sin()).collect()
}

fn ackley_hvp(x: &[f64], v: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let r = (x.iter().map(|t| t * t).sum::<f64>() / n).sqrt();
    let mean_cos = x.iter().map(|t| (TWO_PI * t).cos()).sum::<f64>() / n;
    let e_cos = mean_cos.exp();
    let x_dot_v: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let s_dot_v: f64 = x.iter().zip(v).map(|(a, b)| (TWO_PI * a).sin() * b).sum();
    let (radial, radial_rank1) = if r > 0.0 {
        let a = A * B * (-B * r).exp() / (n * r);
        (a, -a * (B + 1.0 / r) / (n * r))
    } else {
        (0.0, 0.0)
    };
    let osc = TWO_PI * TWO_PI / n * e_cos;
    x.iter()
        .zip(v)
        .map(|(&xi, &vi)| {
            radial * vi + radial_rank1 * xi * x_dot_v
                + osc * ((TWO_PI * xi).cos() * vi - (TWO_PI * xi).sin() * s_dot_v / n)
        })
        .collect()
}

/// [`ackley`] as an [`Objective`] of fixed dimension.
#[derive(Debug, Clone, Copy)]
pub struct Ackley {
    pub dim: usize,
}

impl Objective for Ackley {
    type Batch = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, theta: &[f64], _: &()) -> Result<f64> {
        check_len("theta", theta.len(), self.dim)?;
        Ok(ackley(theta))
    }

    fn loss_grad(&self, theta: &[f64], _: &()) -> Result<(f64, Vec<f64>)> {
        check_len("theta", theta.len(), self.dim)?;
        Ok((ackley(theta), ackley_grad(theta)))
    }

    fn hvp(&self, theta: &[f64], v: &[f64], _: &()) -> Result<Vec<f64>> {
        check_len("theta", theta.len(), self.dim)?;
        check_len("v", v.len(), self.dim)?;
        Ok(ackley_hvp(theta, v))
    }
}
