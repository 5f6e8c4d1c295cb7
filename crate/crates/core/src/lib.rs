//! Benders decomposition with batched Lagrangian cut generation for
//! two-stage stochastic mixed-integer programs.
//!
//! The layers build on each other:
//!
//! * [`instance`] holds the problem data and its deterministic equivalent;
//! * [`benders`] manages the multi-cut relaxed master and Benders cuts;
//! * [`separation`] evaluates the single-scenario Lagrangian function and
//!   separates cuts by a cutting-plane method;
//! * [`batch`] sweeps scenario batches and decides when to resolve;
//! * [`averaged`] builds averaged cuts and measures cut strength;
//! * [`lab`] generates instance families, persists them and computes
//!   brute-force reference bounds.

pub mod averaged;
pub mod batch;
pub mod benders;
pub mod error;
pub mod instance;
pub mod lab;
pub mod separation;
mod solver;

pub use error::{CoreError, Result};
pub use solver::{solver_calls, Clock, ClockMode};
