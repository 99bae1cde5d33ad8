//! Differentiable test problems.

mod ackley;
mod double_well;
mod mlp;
mod quadratic;

pub use ackley::{ackley, ackley_grad, Ackley};
pub use double_well::DoubleWell;
pub use mlp::{Evaluation, Init, LabeledBatch, Mlp, MlpSpec};
pub use quadratic::Quadratic;

use crate::error::{Error, Result};

/// Value, gradient and Hessian-vector product of a loss over a parameter
/// vector, evaluated on a batch (`()` for deterministic objectives).
pub trait Objective {
    type Batch: ?Sized;

    fn dim(&self) -> usize;

    fn loss(&self, theta: &[f64], batch: &Self::Batch) -> Result<f64>;

    fn loss_grad(&self, theta: &[f64], batch: &Self::Batch) -> Result<(f64, Vec<f64>)>;

    fn grad(&self, theta: &[f64], batch: &Self::Batch) -> Result<Vec<f64>> {
        Ok(self.loss_grad(theta, batch)?.1)
    }

    fn hvp(&self, theta: &[f64], v: &[f64], batch: &Self::Batch) -> Result<Vec<f64>>;
}

pub(crate) fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} has length {got}, expected {expected}")))
    }
}
