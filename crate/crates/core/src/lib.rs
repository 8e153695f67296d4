//! Fastener installation sequencing for a two-plate joint.
//!
//! A spring-network plate is condensed onto its 40 fastener holes
//! ([`model`]); each install or refasten recomputes the contact equilibrium
//! as a bound-constrained QP ([`solver`], [`assembly`]); greedy policies
//! choose the order of actions ([`heuristics`]); [`cli`] wraps it all in a
//! command-line harness writing CSV and JSON records.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix it to `f64`, which is what the CLI uses.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod heuristics;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::Matrix<f64>;
pub type Model = model::ReducedModel<f64>;
pub type State<'m> = assembly::AssemblyState<'m, f64>;
pub type Stats = assembly::GapStats<f64>;
pub type Scenario = heuristics::Scenario<f64>;
pub type Run = heuristics::RunResult<f64>;
pub type Qp = solver::QpProblem<f64>;
pub type QpSolution = solver::QpSolution<f64>;
