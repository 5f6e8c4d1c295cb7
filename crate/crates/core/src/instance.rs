//! Two-stage stochastic MIP data model.
//!
//! ```text
//! min  c.x + sum_s p_s d_s.y^s
//! s.t. A x = b
//!      T^s x + W^s y^s >= h^s        for every scenario s
//!      0 <= x <= x_upper, last p1 entries of x integer
//!      y^s >= 0
//! ```

use std::fmt;

use lagbatch_milp::{MilpModel, Row};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::solver;

/// Coordinate-format sparse matrix. Entries are kept sorted by
/// `(row, col)` with duplicates summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        SparseMatrix {
            rows,
            cols,
            triplets: merged,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            triplets: Vec::new(),
        }
    }

    pub fn from_dense(dense: &[Vec<f64>], cols: usize) -> Self {
        let mut t = Vec::new();
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        SparseMatrix::new(dense.len(), cols, t)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for &(r, c, v) in &self.triplets {
            out[r][c] += v;
        }
        out
    }

    /// `M x`
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &(r, c, v) in &self.triplets {
            out[r] += v * x[c];
        }
        out
    }

    /// `M^T y`
    pub fn tmul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for &(r, c, v) in &self.triplets {
            out[c] += v * y[r];
        }
        out
    }

    fn index_issue(&self) -> Option<(usize, usize)> {
        self.triplets
            .iter()
            .find(|(r, c, _)| *r >= self.rows || *c >= self.cols)
            .map(|&(r, c, _)| (r, c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub probability: f64,
    pub d: Vec<f64>,
    pub t: SparseMatrix,
    pub w: SparseMatrix,
    pub h: Vec<f64>,
}

impl Scenario {
    pub fn n2(&self) -> usize {
        self.d.len()
    }

    pub fn m2(&self) -> usize {
        self.h.len()
    }
}

/// Sense of a second-stage row as read from input. Stored scenarios only
/// ever hold `>=` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputSense {
    #[serde(rename = ">=", alias = "ge")]
    Ge,
    #[serde(rename = "<=", alias = "le")]
    Le,
    #[serde(rename = "=", alias = "eq")]
    Eq,
}

/// Rewrites mixed-sense rows `T x + W y (sense) h` into `>=` rows only:
/// `<=` rows are negated and `=` rows become a `>=` pair.
pub fn normalize_senses(
    t: &SparseMatrix,
    w: &SparseMatrix,
    h: &[f64],
    senses: &[InputSense],
) -> Result<(SparseMatrix, SparseMatrix, Vec<f64>)> {
    if senses.len() != h.len() {
        return Err(CoreError::Dimension(format!(
            "{} senses for {} rows",
            senses.len(),
            h.len()
        )));
    }
    let t_rows = group_rows(t);
    let w_rows = group_rows(w);
    let mut tt = Vec::new();
    let mut wt = Vec::new();
    let mut hh = Vec::new();
    let emit = |i: usize, sign: f64, tt: &mut Vec<_>, wt: &mut Vec<_>, hh: &mut Vec<f64>| {
        let r = hh.len();
        for &(c, v) in &t_rows[i] {
            tt.push((r, c, sign * v));
        }
        for &(c, v) in &w_rows[i] {
            wt.push((r, c, sign * v));
        }
        hh.push(sign * h[i]);
    };
    for (i, sense) in senses.iter().enumerate() {
        match sense {
            InputSense::Ge => emit(i, 1.0, &mut tt, &mut wt, &mut hh),
            InputSense::Le => emit(i, -1.0, &mut tt, &mut wt, &mut hh),
            InputSense::Eq => {
                emit(i, 1.0, &mut tt, &mut wt, &mut hh);
                emit(i, -1.0, &mut tt, &mut wt, &mut hh);
            }
        }
    }
    let m = hh.len();
    Ok((
        SparseMatrix::new(m, t.cols, tt),
        SparseMatrix::new(m, w.cols, wt),
        hh,
    ))
}

fn group_rows(m: &SparseMatrix) -> Vec<Vec<(usize, f64)>> {
    let mut rows = vec![Vec::new(); m.rows];
    for &(r, c, v) in &m.triplets {
        if r < m.rows {
            rows[r].push((c, v));
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmipInstance {
    #[serde(default)]
    pub name: String,
    pub n1: usize,
    /// The trailing `p1` first-stage columns are integer.
    pub p1: usize,
    pub c: Vec<f64>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    /// Upper bounds on x; `+inf` when absent.
    pub x_upper: Vec<f64>,
    pub scenarios: Vec<Scenario>,
}

impl SmipInstance {
    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn n2(&self) -> usize {
        self.scenarios.first().map_or(0, Scenario::n2)
    }

    pub fn m2(&self) -> usize {
        self.scenarios.first().map_or(0, Scenario::m2)
    }

    pub fn m1(&self) -> usize {
        self.b.len()
    }

    pub fn is_integer(&self, j: usize) -> bool {
        j >= self.n1 - self.p1
    }

    /// True when every first-stage column is integer with bounds `[0, 1]`.
    pub fn is_pure_binary(&self) -> bool {
        self.p1 == self.n1 && self.x_upper.iter().all(|&u| u == 1.0)
    }

    pub fn scenario(&self, s: usize) -> Result<&Scenario> {
        self.scenarios.get(s).ok_or(CoreError::ScenarioIndex {
            index: s,
            count: self.scenarios.len(),
        })
    }

    pub fn first_stage_cost(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Checks that `x` lies in X: bounds, `Ax = b` within 1e-8, and
    /// integrality of the trailing `p1` entries within 1e-6.
    pub fn check_first_stage(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n1 {
            return Err(CoreError::Dimension(format!(
                "first-stage point has {} entries, expected n1={}",
                x.len(),
                self.n1
            )));
        }
        for (j, &v) in x.iter().enumerate() {
            if v < -1e-8 || v > self.x_upper[j] + 1e-8 {
                return Err(CoreError::Dimension(format!("x[{j}] = {v} outside its bounds")));
            }
            if self.is_integer(j) && (v - v.round()).abs() > 1e-6 {
                return Err(CoreError::Dimension(format!("x[{j}] = {v} is not integral")));
            }
        }
        let ax = self.a.mul(x);
        for (i, (lhs, rhs)) in ax.iter().zip(&self.b).enumerate() {
            if (lhs - rhs).abs() > 1e-8 {
                return Err(CoreError::Dimension(format!(
                    "first-stage row {i}: {lhs} != {rhs}"
                )));
            }
        }
        Ok(())
    }

    /// First-stage rows `A x = b` as dense rows of width `width`, with x in
    /// the leading columns.
    pub(crate) fn first_stage_rows(&self, width: usize) -> Vec<Row> {
        let mut rows = vec![vec![0.0; width]; self.m1()];
        for &(r, c, v) in &self.a.triplets {
            rows[r][c] += v;
        }
        rows.into_iter()
            .zip(&self.b)
            .map(|(coeffs, &b)| Row::eq(coeffs, b))
            .collect()
    }

    /// Applies x bounds and integrality to the leading `n1` model columns.
    pub(crate) fn apply_first_stage_columns(&self, model: &mut MilpModel, integral: bool) {
        for j in 0..self.n1 {
            model.set_bounds(j, 0.0, self.x_upper[j]);
            model.set_integer(j, integral && self.is_integer(j));
        }
    }
}

/// Every broken invariant found in an instance; empty when well formed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(CoreError::Malformed(self.to_string()))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            write!(f, "ok")
        } else {
            write!(f, "{}", self.issues.join("; "))
        }
    }
}

pub fn validate_instance(inst: &SmipInstance) -> ValidationReport {
    let mut issues = Vec::new();
    let n1 = inst.n1;
    if inst.p1 > n1 {
        issues.push(format!("p1={} exceeds n1={n1}", inst.p1));
    }
    if inst.c.len() != n1 {
        issues.push(format!("c has length {}, expected n1={n1}", inst.c.len()));
    }
    if inst.x_upper.len() != n1 {
        issues.push(format!("x_upper has length {}, expected n1={n1}", inst.x_upper.len()));
    }
    if inst.x_upper.iter().any(|&u| u.is_nan() || u < 0.0) {
        issues.push("x_upper has a negative or NaN entry".into());
    }
    if inst.a.cols != n1 {
        issues.push(format!("A has {} cols, expected n1={n1}", inst.a.cols));
    }
    if inst.a.rows != inst.b.len() {
        issues.push(format!("A has {} rows but b has length {}", inst.a.rows, inst.b.len()));
    }
    if let Some((r, c)) = inst.a.index_issue() {
        issues.push(format!("A has an entry at ({r},{c}) outside its shape"));
    }
    if inst.scenarios.is_empty() {
        issues.push("no scenarios".into());
    }
    let n2 = inst.n2();
    let m2 = inst.m2();
    let mut total = 0.0;
    for (k, sc) in inst.scenarios.iter().enumerate() {
        let s = k + 1;
        total += sc.probability;
        if !(sc.probability > 0.0 && sc.probability <= 1.0) {
            issues.push(format!("p_{s} = {} is not in (0,1]", sc.probability));
        }
        if sc.d.len() != n2 {
            issues.push(format!("d_{s} has length {}, expected n2={n2}", sc.d.len()));
        }
        if sc.h.len() != m2 {
            issues.push(format!("h^{s} has length {}, expected m2={m2}", sc.h.len()));
        }
        if sc.t.cols != n1 {
            issues.push(format!("T^{s} has {} cols, expected n1={n1}", sc.t.cols));
        }
        if sc.t.rows != m2 {
            issues.push(format!("T^{s} has {} rows, expected m2={m2}", sc.t.rows));
        }
        if sc.w.cols != n2 {
            issues.push(format!("W^{s} has {} cols, expected n2={n2}", sc.w.cols));
        }
        if sc.w.rows != m2 {
            issues.push(format!("W^{s} has {} rows, expected m2={m2}", sc.w.rows));
        }
        if let Some((r, c)) = sc.t.index_issue() {
            issues.push(format!("T^{s} has an entry at ({r},{c}) outside its shape"));
        }
        if let Some((r, c)) = sc.w.index_issue() {
            issues.push(format!("W^{s} has an entry at ({r},{c}) outside its shape"));
        }
        let finite = sc.d.iter().chain(&sc.h).all(|v| v.is_finite())
            && sc.t.triplets.iter().chain(&sc.w.triplets).all(|t| t.2.is_finite());
        if !finite {
            issues.push(format!("scenario {s} holds non-finite data"));
        }
    }
    if !inst.scenarios.is_empty() && (total - 1.0).abs() > 1e-12 {
        issues.push(format!("probabilities sum to {total}"));
    }
    ValidationReport { issues }
}

/// Deterministic-equivalent MILP. Columns: x (n1), then y^1, ..., y^S.
pub fn extensive_form(inst: &SmipInstance) -> Result<MilpModel> {
    validate_instance(inst).into_result()?;
    let (n1, n2) = (inst.n1, inst.n2());
    let width = n1 + n2 * inst.num_scenarios();
    let mut objective = inst.c.clone();
    for sc in &inst.scenarios {
        objective.extend(sc.d.iter().map(|d| sc.probability * d));
    }
    let mut model = MilpModel::new(objective);
    inst.apply_first_stage_columns(&mut model, true);
    for row in inst.first_stage_rows(width) {
        model.push_row(row);
    }
    for (s, sc) in inst.scenarios.iter().enumerate() {
        let offset = n1 + s * n2;
        let mut rows = vec![vec![0.0; width]; sc.m2()];
        for &(r, c, v) in &sc.t.triplets {
            rows[r][c] += v;
        }
        for &(r, c, v) in &sc.w.triplets {
            rows[r][offset + c] += v;
        }
        for (coeffs, &h) in rows.into_iter().zip(&sc.h) {
            model.push_row(Row::ge(coeffs, h));
        }
    }
    Ok(model)
}

/// LP `min d_s.y  s.t.  W^s y >= h^s - T^s x,  y >= 0`.
pub(crate) fn second_stage_model(sc: &Scenario, x: &[f64]) -> MilpModel {
    let tx = sc.t.mul(x);
    let mut model = MilpModel::new(sc.d.clone());
    let mut rows = vec![vec![0.0; sc.n2()]; sc.m2()];
    for &(r, c, v) in &sc.w.triplets {
        rows[r][c] += v;
    }
    for (i, coeffs) in rows.into_iter().enumerate() {
        model.push_row(Row::ge(coeffs, sc.h[i] - tx[i]));
    }
    model
}

/// Second-stage value `f_s(x)`. Returns `+inf` when the second stage is
/// infeasible at `x` and `-inf` when it is unbounded.
pub fn second_stage_value(inst: &SmipInstance, s: usize, x: &[f64]) -> Result<f64> {
    let sc = inst.scenario(s)?;
    if x.len() != inst.n1 {
        return Err(CoreError::Dimension(format!(
            "first-stage point has {} entries, expected n1={}",
            x.len(),
            inst.n1
        )));
    }
    let sol = solver::lp(&second_stage_model(sc, x))?;
    use lagbatch_milp::LpStatus::*;
    match sol.status {
        Optimal => Ok(sol.objective),
        Infeasible => Ok(f64::INFINITY),
        Unbounded => Ok(f64::NEG_INFINITY),
        other => Err(CoreError::SolverStatus(format!(
            "{other:?} on second stage of scenario {s}: {}",
            sol.diagnostic.unwrap_or_default()
        ))),
    }
}

/// The two-scenario reference instance: one binary first-stage variable
/// with unit cost, and scenarios `y >= 1 - x`, `y >= 2 - x` with unit
/// recourse cost and probability 1/2 each. Its optimum is 1.5.
pub fn fixture_t1() -> SmipInstance {
    let scenario = |h: f64| Scenario {
        probability: 0.5,
        d: vec![1.0],
        t: SparseMatrix::new(1, 1, vec![(0, 0, 1.0)]),
        w: SparseMatrix::new(1, 1, vec![(0, 0, 1.0)]),
        h: vec![h],
    };
    SmipInstance {
        name: "T1".into(),
        n1: 1,
        p1: 1,
        c: vec![1.0],
        a: SparseMatrix::zeros(0, 1),
        b: vec![],
        x_upper: vec![1.0],
        scenarios: vec![scenario(1.0), scenario(2.0)],
    }
}
