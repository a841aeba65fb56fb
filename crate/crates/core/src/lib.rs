//! Data-generation game for coopetitive cross-silo federated learning.
//!
//! Organizations choose how many synthetic samples to generate. The game is a
//! weighted potential game, so its Nash equilibrium is the minimizer of one
//! convex potential over the strategy box; [`solver::fpi_solve`] finds it by
//! fixed-point iteration on the first-order conditions.
//!
//! Modules, bottom up: [`model`] (types and validation), [`economics`]
//! (errors, costs, utilities), [`game`] (potential and its checks),
//! [`solver`], [`baselines`], [`scaling`] (learning-curve fit and presets),
//! [`scenario`] (seeded sampling), [`experiment`] (sweeps) and [`report`]
//! (output files).

pub mod baselines;
pub mod economics;
pub mod exec;
pub mod experiment;
pub mod game;
pub mod model;
pub mod report;
pub mod rng;
pub mod scaling;
pub mod scenario;
pub mod solver;

pub use exec::Execution;
pub use model::{Scenario, ScalingLaw, StrategyProfile};
pub use solver::{fpi_solve, SolveReport, SolverConfig};
