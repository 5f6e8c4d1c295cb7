use serde::{Deserialize, Serialize};

/// Every numerical threshold used by the kernel lives here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Primal and dual feasibility.
    pub feasibility: f64,
    /// Distance from the nearest integer below which a value counts as integral.
    pub integrality: f64,
    /// Relative MIP gap, measured as `(value - bound) / (1 + |value|)`.
    pub mip_gap: f64,
    /// Smallest magnitude accepted as a pivot element.
    pub pivot: f64,
    /// Reduced-cost threshold for entering candidates.
    pub optimality: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    /// Pivots between two refactorizations of the basis inverse.
    pub refactor_every: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-8,
            integrality: 1e-6,
            mip_gap: 1e-6,
            pivot: 1e-9,
            optimality: 1e-9,
            bland_after: 1000,
            refactor_every: 50,
        }
    }
}
