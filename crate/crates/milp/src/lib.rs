//! Desk-scale LP/MILP kernel: a dense revised simplex and a best-bound
//! branch-and-bound on top of it.
//!
//! Models are plain values ([`MilpModel`]); solving is a pure function of
//! the model, so distinct models can be solved concurrently. The
//! [`MilpBackend`] trait is the seam for plugging in an external solver.

mod branch;
mod error;
mod lp_format;
mod model;
mod simplex;
mod tolerances;

pub use branch::{solve_milp, MipOptions, MipSolution, MipStatus};
pub use error::MilpError;
pub use lp_format::to_lp_string;
pub use model::{amend_model, MilpModel, Row, RowSense};
pub use simplex::{solve_lp, solve_lp_with, LpSolution, LpStatus};
pub use tolerances::Tolerances;

/// The three operations every solver backend provides.
pub trait MilpBackend: Send + Sync {
    fn solve_lp(&self, model: &MilpModel) -> Result<LpSolution, MilpError>;
    fn solve_milp(&self, model: &MilpModel, opts: &MipOptions) -> Result<MipSolution, MilpError>;
    fn amend_model(&self, model: &MilpModel, rows: &[Row]) -> Result<MilpModel, MilpError> {
        amend_model(model, rows)
    }
}

/// The solver shipped in this crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bundled;

impl MilpBackend for Bundled {
    fn solve_lp(&self, model: &MilpModel) -> Result<LpSolution, MilpError> {
        solve_lp(model)
    }

    fn solve_milp(&self, model: &MilpModel, opts: &MipOptions) -> Result<MipSolution, MilpError> {
        solve_milp(model, opts)
    }
}
