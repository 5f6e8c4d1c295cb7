use serde::{Deserialize, Serialize};

use crate::error::MilpError;

/// Row sense. Every model is a minimization whose rows are `>=` or `=`;
/// callers negate `<=` rows before handing them over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Row {
            coeffs,
            sense: RowSense::Ge,
            rhs,
        }
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Row {
            coeffs,
            sense: RowSense::Eq,
            rhs,
        }
    }

    /// `coeffs . x <= rhs`, stored as `-coeffs . x >= -rhs`.
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Row {
            coeffs: coeffs.into_iter().map(|a| -a).collect(),
            sense: RowSense::Ge,
            rhs: -rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            RowSense::Ge => (self.rhs - act).max(0.0),
            RowSense::Eq => (self.rhs - act).abs(),
        }
    }
}

/// A minimization model: `min c.x  s.t.  rows,  lower <= x <= upper`,
/// with `integer[j]` marking integrality-restricted columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    /// Optional column names, used only by the LP-format export.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

impl MilpModel {
    /// Continuous model with `n` columns, all bounded below by zero.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        MilpModel {
            objective,
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            integer: vec![false; n],
            names: Vec::new(),
        }
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn push_row(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
    }

    pub fn set_integer(&mut self, j: usize, integer: bool) {
        self.integer[j] = integer;
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Same model with every integrality restriction dropped.
    pub fn relaxed(&self) -> MilpModel {
        let mut m = self.clone();
        m.integer.iter_mut().for_each(|f| *f = false);
        m
    }

    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&f| f)
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        let n = self.num_cols();
        if self.lower.len() != n || self.upper.len() != n || self.integer.len() != n {
            return Err(MilpError::Dimension(format!(
                "column attributes disagree: objective {n}, lower {}, upper {}, integer {}",
                self.lower.len(),
                self.upper.len(),
                self.integer.len()
            )));
        }
        if !self.names.is_empty() && self.names.len() != n {
            return Err(MilpError::Dimension(format!(
                "{} names for {n} columns",
                self.names.len()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(MilpError::Dimension(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(MilpError::NonFinite(format!("row {i}")));
            }
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(MilpError::NonFinite(format!("objective coefficient {j}")));
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(MilpError::Bounds {
                    col: j,
                    lower: self.lower[j],
                    upper: self.upper[j],
                });
            }
        }
        Ok(())
    }
}

/// Returns `model` with `rows` appended.
///
/// Correctness of a later solve never depends on any previously computed
/// basis; the bundled simplex always starts cold.
pub fn amend_model(model: &MilpModel, rows: &[Row]) -> Result<MilpModel, MilpError> {
    let n = model.num_cols();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.coeffs.len() != n) {
        return Err(MilpError::Dimension(format!(
            "appended row {i} has {} coefficients, model has {n} columns",
            r.coeffs.len()
        )));
    }
    let mut out = model.clone();
    out.rows.extend(rows.iter().cloned());
    Ok(out)
}
