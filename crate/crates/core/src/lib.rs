//! Continuous convolutional source separation via Beurling LASSO.
//!
//! The library separates a mixture of convolved spike trains into per-pattern
//! channels without ever parametrizing the underlying measures: the TV-norm
//! prox is evaluated through its Moreau decomposition as a Euclidean
//! projection onto the dual certificate ball, and the semi-infinite sup-norm
//! constraint of that ball is handled by an exchange method.
//!
//! Modules:
//! - [`measures`]: spike trains and their total variation norm.
//! - [`patterns`]: the convolution kernels.
//! - [`operators`]: forward/adjoint convolution, certificates, mixing.
//! - [`duality`]: conjugates, dual objective, gap reports.
//! - [`solver`]: the dual-proximal iteration.
//! - [`baselines`]: grid FISTA and Frank-Wolfe oracles.
//! - [`synthesis`]: reproducible instance generation.
//! - [`io`], [`config`]: CSV formats and JSON problem files.
//!
//! All numerics are generic over the scalar type via [`Real`]; the aliases
//! below fix `f64` for everyday use.

pub mod baselines;
pub mod config;
pub mod duality;
pub mod error;
pub mod io;
pub mod measures;
pub mod operators;
pub mod patterns;
pub mod real;
pub mod rng;
pub mod solver;
pub mod synthesis;

pub use error::{Error, Result};
pub use real::Real;
pub use rng::PortableRng;

/// `f64` aliases for the domain types.
pub type Spike = measures::Spike<f64>;
pub type SparseMeasure = measures::SparseMeasure<f64>;
pub type Pattern = patterns::Pattern<f64>;
pub type Grid = operators::Grid<f64>;
pub type GridSignal = operators::GridSignal<f64>;
pub type MultiChannelSignal = operators::MultiChannelSignal<f64>;
pub type Certificate<'a> = operators::Certificate<'a, f64>;
pub type DualPoint = duality::DualPoint<f64>;
pub type GapReport = duality::GapReport<f64>;
pub type SolverConfig = solver::SolverConfig<f64>;
pub type SolveResult = solver::SolveResult<f64>;
pub type FwConfig = baselines::FwConfig<f64>;
pub type FwSolution = baselines::FwSolution<f64>;
pub type ScenarioSpec = synthesis::ScenarioSpec<f64>;
