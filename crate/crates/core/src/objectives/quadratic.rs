use super::{check_len, Objective};
use crate::error::{Error, Result};

/// `½ θᵀAθ + bᵀθ` with a dense symmetric `A` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Quadratic {
    pub fn new(dim: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_len("A", a.len(), dim * dim)?;
        check_len("b", b.len(), dim)?;
        for i in 0..dim {
            for j in 0..i {
                if a[i * dim + j] != a[j * dim + i] {
                    return Err(Error::Config(format!("A is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { dim, a, b })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut a = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            a[i * n + i] = *d;
        }
        Self {
            dim: n,
            a,
            b: vec![0.0; n],
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.a[i * self.dim + i]).sum()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.a
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
            .collect()
    }
}

impl Objective for Quadratic {
    type Batch = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, theta: &[f64], _: &()) -> Result<f64> {
        check_len("theta", theta.len(), self.dim)?;
        let at = self.apply(theta);
        Ok(theta
            .iter()
            .zip(&at)
            .zip(&self.b)
            .map(|((t, a), b)| 0.5 * t * a + b * t)
            .sum())
    }

    fn loss_grad(&self, theta: &[f64], batch: &()) -> Result<(f64, Vec<f64>)> {
        let loss = self.loss(theta, batch)?;
        let g = self.apply(theta).iter().zip(&self.b).map(|(a, b)| a + b).collect();
        Ok((loss, g))
    }

    fn hvp(&self, theta: &[f64], v: &[f64], _: &()) -> Result<Vec<f64>> {
        check_len("theta", theta.len(), self.dim)?;
        check_len("v", v.len(), self.dim)?;
        Ok(self.apply(v))
    }
}
