//! Simulation and numerical-verification toolkit for random walks in random
//! scenery (RWRS) and their Kesten–Spitzer limit process.
//!
//! The crate is organized around one pipeline:
//!
//! * [`lattice`] validates step/scenery distributions and derives the lattice
//!   periodicity structure `(d, alpha, alpha0)` of the RWRS.
//! * [`walk`] simulates walks, sceneries, RWRS trajectories and local times,
//!   and provides the deterministic parallel batch sampler used everywhere.
//! * [`oracle`] computes exact (rational) distributions of `Z_k` by path
//!   enumeration; it is the ground truth every Monte Carlo estimate is tested
//!   against.
//! * [`green_kubo`] sums the lag-autocovariance series for the limiting
//!   variance of centered additive functionals, in the d-block order that
//!   makes the series absolutely convergent.
//! * [`brownian`] works with discretized Brownian local-time profiles: Gram
//!   matrices and determinants, inverse-norm and inverse-distance moments,
//!   and simulation of the limit variable.
//! * [`moments`] evaluates the closed-form simplex integrals and the moment
//!   formula for the limit local time, with sandwich bounds and Carleman
//!   partial sums.
//! * [`limits`] runs the end-to-end convergence experiments (LLN, CLT,
//!   local-limit plateau, ratio ergodic theorem, functional limit).
//! * [`report`] holds the experiment report types and CSV/JSON writers.

pub mod brownian;
pub mod green_kubo;
pub mod lattice;
pub mod limits;
pub mod linalg;
pub mod moments;
pub mod observable;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod stats;
pub mod walk;

pub use lattice::{LatticePmf, ModelConfig, PeriodicityInfo};
pub use observable::Observable;
pub use report::{Estimate, ExperimentReport};
pub use rng::StreamRng;
