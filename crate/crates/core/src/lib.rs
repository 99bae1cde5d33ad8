//! Adaptive heavy-tailed stochastic gradient descent.
//!
//! SGD with injected symmetric Lévy α-stable noise whose tail index follows a
//! running estimate of loss-landscape sharpness. Heavy tails (α near 1) early in
//! training favour large exploratory jumps; as sharpness settles the controller
//! moves α toward 2 and the noise becomes Gaussian.
//!
//! Layout:
//!
//! - [`stable_noise`]: Chambers–Mallows–Stuck sampling and seeded RNG streams.
//! - [`curvature`]: Hutchinson trace, the log-sharpness signal, EMA tracking,
//!   power-iteration λ_max and finite-difference Hessian-vector products.
//! - [`schedules`]: adaptive and annealed tail index, decaying noise scale.
//! - [`optimizer`]: SGD, SGLD, fixed-α Lévy SGD and the adaptive optimizer.
//! - [`objectives`]: Ackley, a double-well potential, quadratics and an MLP.
//! - [`data_io`]: MNIST IDX loading, batching and run-record CSV output.
//! - [`theory`]: closed-form escape-time and convergence-bound calculators.
//! - [`stats`]: empirical quantiles and the KS / Mann–Whitney tests used by
//!   experiments.

pub mod curvature;
pub mod data_io;
pub mod error;
pub mod objectives;
pub mod optimizer;
pub mod schedules;
pub mod stable_noise;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
