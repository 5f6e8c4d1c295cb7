//! Dense revised primal simplex.
//!
//! The model is brought to standard form `min c.z, Az = b, z >= 0, b >= 0`
//! by shifting, mirroring or splitting columns and adding one slack per
//! inequality (finite upper bounds become explicit rows). Phase one
//! minimizes the sum of artificials; phase two the true objective with
//! artificials barred from re-entering. The basis inverse is kept dense and
//! updated by elementary row operations, with periodic refactorization.

use serde::{Deserialize, Serialize};

use crate::error::MilpError;
use crate::model::{MilpModel, RowSense};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The basis became numerically singular or the returned point failed
    /// the feasibility recheck. See `LpSolution::diagnostic`.
    Numerical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values, one per model column. Empty unless `Optimal`.
    pub x: Vec<f64>,
    /// Row multipliers in row order; `>= 0` on `Ge` rows of a minimization.
    pub duals: Vec<f64>,
    /// `c - A^T y`, one per model column.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub diagnostic: Option<String>,
}

impl LpSolution {
    fn bare(status: LpStatus, iterations: usize, diagnostic: Option<String>) -> Self {
        let objective = match status {
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        LpSolution {
            status,
            x: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective,
            iterations,
            diagnostic,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(model: &MilpModel) -> Result<LpSolution, MilpError> {
    solve_lp_with(model, &Tolerances::default())
}

pub fn solve_lp_with(model: &MilpModel, tol: &Tolerances) -> Result<LpSolution, MilpError> {
    model.validate()?;
    let std = StandardForm::build(model);
    let mut engine = Engine::new(&std, tol);
    let out = engine.run();
    Ok(match out {
        Outcome::Optimal => finish(model, &std, &engine, tol),
        Outcome::Infeasible => LpSolution::bare(LpStatus::Infeasible, engine.iterations, None),
        Outcome::Unbounded => LpSolution::bare(LpStatus::Unbounded, engine.iterations, None),
        Outcome::IterationLimit => LpSolution::bare(
            LpStatus::IterationLimit,
            engine.iterations,
            Some(format!("stopped after {} pivots", engine.iterations)),
        ),
        Outcome::Singular(msg) => {
            LpSolution::bare(LpStatus::Numerical, engine.iterations, Some(msg))
        }
    })
}

#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// `x = lo + z`
    Shift { col: usize, lo: f64 },
    /// `x = hi - z`
    Mirror { col: usize, hi: f64 },
    /// `x = z_pos - z_neg`
    Free { pos: usize, neg: usize },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct StandardForm {
    /// Sparse columns of the standard-form matrix: `(row, value)`.
    cols: Vec<Vec<(usize, f64)>>,
    kind: Vec<ColKind>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    /// +1 or -1: whether a row was negated to make its rhs nonnegative.
    row_sign: Vec<f64>,
    /// Initial basic column for each row.
    start_basis: Vec<usize>,
    maps: Vec<ColMap>,
}

impl StandardForm {
    fn build(model: &MilpModel) -> Self {
        let n = model.num_cols();
        let mut maps = Vec::with_capacity(n);
        let mut n_struct = 0usize;
        let mut struct_cost = Vec::new();
        for j in 0..n {
            let (lo, hi, c) = (model.lower[j], model.upper[j], model.objective[j]);
            let map = if lo.is_finite() && hi.is_finite() && hi - lo <= 0.0 {
                ColMap::Fixed(lo)
            } else if lo.is_finite() {
                struct_cost.push(c);
                n_struct += 1;
                ColMap::Shift { col: n_struct - 1, lo }
            } else if hi.is_finite() {
                struct_cost.push(-c);
                n_struct += 1;
                ColMap::Mirror { col: n_struct - 1, hi }
            } else {
                struct_cost.push(c);
                struct_cost.push(-c);
                n_struct += 2;
                ColMap::Free {
                    pos: n_struct - 2,
                    neg: n_struct - 1,
                }
            };
            maps.push(map);
        }

        // Rows over structural columns, before slacks.
        struct PendingRow {
            coeffs: Vec<(usize, f64)>,
            rhs: f64,
            slack: Option<f64>,
        }
        let mut pending = Vec::new();
        for row in &model.rows {
            let mut coeffs = Vec::new();
            let mut rhs = row.rhs;
            for (j, &a) in row.coeffs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                match maps[j] {
                    ColMap::Shift { col, lo } => {
                        coeffs.push((col, a));
                        rhs -= a * lo;
                    }
                    ColMap::Mirror { col, hi } => {
                        coeffs.push((col, -a));
                        rhs -= a * hi;
                    }
                    ColMap::Free { pos, neg } => {
                        coeffs.push((pos, a));
                        coeffs.push((neg, -a));
                    }
                    ColMap::Fixed(v) => rhs -= a * v,
                }
            }
            let slack = match row.sense {
                RowSense::Ge => Some(-1.0),
                RowSense::Eq => None,
            };
            pending.push(PendingRow { coeffs, rhs, slack });
        }
        for j in 0..n {
            if let ColMap::Shift { col, lo } = maps[j] {
                if model.upper[j].is_finite() {
                    pending.push(PendingRow {
                        coeffs: vec![(col, 1.0)],
                        rhs: model.upper[j] - lo,
                        slack: Some(1.0),
                    });
                }
            }
        }

        let m = pending.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct];
        let mut kind = vec![ColKind::Structural; n_struct];
        let mut cost = struct_cost;
        let mut rhs = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        let mut start_basis = Vec::with_capacity(m);
        for (i, row) in pending.into_iter().enumerate() {
            // Ge rows with rhs <= 0 are negated so their slack enters the
            // starting basis with a +1 coefficient.
            let negate = match row.slack {
                Some(s) if s < 0.0 => row.rhs <= 0.0,
                _ => row.rhs < 0.0,
            };
            let sign = if negate { -1.0 } else { 1.0 };
            for (col, a) in row.coeffs {
                cols[col].push((i, sign * a));
            }
            rhs.push(sign * row.rhs);
            row_sign.push(sign);
            let mut basic = None;
            if let Some(s) = row.slack {
                cols.push(vec![(i, sign * s)]);
                kind.push(ColKind::Slack);
                cost.push(0.0);
                if sign * s > 0.0 {
                    basic = Some(cols.len() - 1);
                }
            }
            start_basis.push(basic.unwrap_or(usize::MAX));
        }
        for (i, b) in start_basis.iter_mut().enumerate() {
            if *b == usize::MAX {
                cols.push(vec![(i, 1.0)]);
                kind.push(ColKind::Artificial);
                cost.push(0.0);
                *b = cols.len() - 1;
            }
        }
        // Duplicate structural coefficients (a column mapped twice into one
        // row cannot happen, but Free columns are split) are already unique.
        StandardForm {
            cols,
            kind,
            cost,
            rhs,
            row_sign,
            start_basis,
            maps,
        }
    }

    fn num_rows(&self) -> usize {
        self.rhs.len()
    }
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    Singular(String),
}

struct Engine<'a> {
    sf: &'a StandardForm,
    tol: &'a Tolerances,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// Row-major dense basis inverse.
    binv: Vec<Vec<f64>>,
    xb: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    max_iterations: usize,
}

impl<'a> Engine<'a> {
    fn new(sf: &'a StandardForm, tol: &'a Tolerances) -> Self {
        let m = sf.num_rows();
        let mut in_basis = vec![false; sf.cols.len()];
        for &b in &sf.start_basis {
            in_basis[b] = true;
        }
        let binv = (0..m)
            .map(|i| {
                let mut r = vec![0.0; m];
                r[i] = 1.0;
                r
            })
            .collect();
        Engine {
            sf,
            tol,
            basis: sf.start_basis.clone(),
            in_basis,
            binv,
            xb: sf.rhs.clone(),
            iterations: 0,
            since_refactor: 0,
            max_iterations: 50_000 + 50 * (m + sf.cols.len()),
        }
    }

    fn run(&mut self) -> Outcome {
        let sf = self.sf;
        let has_artificial = sf.kind.iter().any(|k| *k == ColKind::Artificial);
        if has_artificial {
            let phase1: Vec<f64> = sf
                .kind
                .iter()
                .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
                .collect();
            match self.iterate(&phase1, false) {
                Outcome::Optimal => {}
                Outcome::Unbounded => {
                    return Outcome::Singular("phase one reported an unbounded ray".into())
                }
                other => return other,
            }
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(b, _)| sf.kind[**b] == ColKind::Artificial)
                .map(|(_, v)| v.max(0.0))
                .sum();
            let bnorm = sf.rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if infeas > self.tol.feasibility * (1.0 + bnorm) {
                return Outcome::Infeasible;
            }
            if let Err(msg) = self.drive_out_artificials() {
                return Outcome::Singular(msg);
            }
        }
        let cost = sf.cost.clone();
        self.iterate(&cost, true)
    }

    fn iterate(&mut self, cost: &[f64], phase_two: bool) -> Outcome {
        let sf = self.sf;
        let m = sf.num_rows();
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut y = vec![0.0; m];
        let mut d = vec![0.0; m];
        loop {
            if self.iterations >= self.max_iterations {
                return Outcome::IterationLimit;
            }
            if self.since_refactor >= self.tol.refactor_every {
                if let Err(msg) = self.refactor() {
                    return Outcome::Singular(msg);
                }
            }
            // y = c_B^T B^{-1}
            y.iter_mut().for_each(|v| *v = 0.0);
            for (i, &b) in self.basis.iter().enumerate() {
                let cb = cost[b];
                if cb != 0.0 {
                    for (yk, bik) in y.iter_mut().zip(&self.binv[i]) {
                        *yk += cb * bik;
                    }
                }
            }
            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            for (j, col) in sf.cols.iter().enumerate() {
                if self.in_basis[j] || (phase_two && sf.kind[j] == ColKind::Artificial) {
                    continue;
                }
                let rj = cost[j] - col.iter().map(|&(k, a)| y[k] * a).sum::<f64>();
                if rj < -self.tol.optimality {
                    if bland {
                        entering = Some((j, rj));
                        break;
                    }
                    if entering.map_or(true, |(_, best)| rj < best) {
                        entering = Some((j, rj));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Outcome::Optimal;
            };
            // d = B^{-1} a_q
            for (i, di) in d.iter_mut().enumerate() {
                *di = sf.cols[q].iter().map(|&(k, a)| self.binv[i][k] * a).sum();
            }
            // Ratio test.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let di = d[i];
                let basic_art = phase_two && sf.kind[self.basis[i]] == ColKind::Artificial;
                let ratio = if basic_art && di.abs() > self.tol.pivot {
                    0.0
                } else if di > self.tol.pivot {
                    self.xb[i].max(0.0) / di
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        if ratio < best - 1e-12 {
                            true
                        } else if ratio <= best + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                di.abs() > d[r].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, theta)) = leave else {
                return Outcome::Unbounded;
            };
            self.pivot(r, q, &d, theta);
            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= self.tol.bland_after {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize, d: &[f64], theta: f64) {
        let m = d.len();
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * d[i];
            }
        }
        self.xb[r] = theta;
        let piv = d[r];
        let prow: Vec<f64> = self.binv[r].iter().map(|v| v / piv).collect();
        for i in 0..m {
            if i == r || d[i] == 0.0 {
                continue;
            }
            let f = d[i];
            for (v, p) in self.binv[i].iter_mut().zip(&prow) {
                *v -= f * p;
            }
        }
        self.binv[r] = prow;
        self.in_basis[self.basis[r]] = false;
        self.in_basis[q] = true;
        self.basis[r] = q;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    /// Recomputes `B^{-1}` and `x_B` from scratch by Gauss-Jordan elimination.
    fn refactor(&mut self) -> Result<(), String> {
        let sf = self.sf;
        let m = sf.num_rows();
        let mut a = vec![vec![0.0; 2 * m]; m];
        for (c, &b) in self.basis.iter().enumerate() {
            for &(k, v) in &sf.cols[b] {
                a[k][c] = v;
            }
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                .unwrap();
            if a[p][c].abs() < 1e-12 {
                return Err(format!(
                    "basis matrix singular at column {c} (basic variable {})",
                    self.basis[c]
                ));
            }
            a.swap(p, c);
            let piv = a[c][c];
            a[c].iter_mut().for_each(|v| *v /= piv);
            let pivot_row = a[c].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i == c {
                    continue;
                }
                let f = row[c];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
        // After elimination, row c of the right half is row c of B^{-1}
        // where basis position c corresponds to column c of B.
        for (c, row) in a.into_iter().enumerate() {
            self.binv[c] = row[m..].to_vec();
        }
        for i in 0..m {
            let v: f64 = self.binv[i].iter().zip(&sf.rhs).map(|(b, r)| b * r).sum();
            self.xb[i] = if v < 0.0 && v > -self.tol.feasibility { 0.0 } else { v };
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn drive_out_artificials(&mut self) -> Result<(), String> {
        let sf = self.sf;
        let m = sf.num_rows();
        for r in 0..m {
            if sf.kind[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (j, col) in sf.cols.iter().enumerate() {
                if self.in_basis[j] || sf.kind[j] == ColKind::Artificial {
                    continue;
                }
                let alpha: f64 = col.iter().map(|&(k, a)| self.binv[r][k] * a).sum();
                if alpha.abs() > 1e-7 && best.map_or(true, |(_, b)| alpha.abs() > b) {
                    best = Some((j, alpha.abs()));
                }
            }
            if let Some((q, _)) = best {
                let d: Vec<f64> = (0..m)
                    .map(|i| sf.cols[q].iter().map(|&(k, a)| self.binv[i][k] * a).sum())
                    .collect();
                let theta = self.xb[r].max(0.0) / d[r];
                self.pivot(r, q, &d, theta);
            }
            // Otherwise the row is redundant; its artificial stays basic at
            // zero and the phase-two ratio test keeps it there.
        }
        self.refactor()
    }
}

fn finish(model: &MilpModel, sf: &StandardForm, engine: &Engine, tol: &Tolerances) -> LpSolution {
    let m = sf.num_rows();
    let mut z = vec![0.0; sf.cols.len()];
    for (i, &b) in engine.basis.iter().enumerate() {
        z[b] = engine.xb[i].max(0.0);
    }
    let x: Vec<f64> = sf
        .maps
        .iter()
        .map(|map| match *map {
            ColMap::Shift { col, lo } => lo + z[col],
            ColMap::Mirror { col, hi } => hi - z[col],
            ColMap::Free { pos, neg } => z[pos] - z[neg],
            ColMap::Fixed(v) => v,
        })
        .collect();
    let mut y = vec![0.0; m];
    for (i, &b) in engine.basis.iter().enumerate() {
        let cb = sf.cost[b];
        if cb != 0.0 {
            for (yk, bik) in y.iter_mut().zip(&engine.binv[i]) {
                *yk += cb * bik;
            }
        }
    }
    let n_orig_rows = model.num_rows();
    let duals: Vec<f64> = (0..n_orig_rows).map(|i| y[i] * sf.row_sign[i]).collect();
    let mut reduced_costs = model.objective.clone();
    for (row, yi) in model.rows.iter().zip(&duals) {
        for (r, a) in reduced_costs.iter_mut().zip(&row.coeffs) {
            *r -= yi * a;
        }
    }
    let objective = model.objective_value(&x);

    // Recheck primal feasibility in the original space.
    let mut worst = 0.0f64;
    for row in &model.rows {
        let scale = 1.0 + row.rhs.abs();
        worst = worst.max(row.violation(&x) / scale);
    }
    for j in 0..x.len() {
        worst = worst.max((model.lower[j] - x[j]).max(0.0));
        worst = worst.max((x[j] - model.upper[j]).max(0.0));
    }
    if worst > 1e-6 {
        return LpSolution {
            status: LpStatus::Numerical,
            x,
            duals,
            reduced_costs,
            objective,
            iterations: engine.iterations,
            diagnostic: Some(format!(
                "returned point violates the model by {worst:.3e} (feasibility tolerance {:.1e})",
                tol.feasibility
            )),
        };
    }
    LpSolution {
        status: LpStatus::Optimal,
        x,
        duals,
        reduced_costs,
        objective,
        iterations: engine.iterations,
        diagnostic: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Row;

    #[test]
    fn single_bound_row_has_unit_dual() {
        // min y  s.t.  y >= 2, y >= 0
        let mut m = MilpModel::new(vec![1.0]);
        m.push_row(Row::ge(vec![1.0], 2.0));
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bound_attained_at_zero() {
        let m = MilpModel::new(vec![1.0]);
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn negative_cost_without_rows_is_unbounded() {
        let m = MilpModel::new(vec![-1.0]);
        assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut m = MilpModel::new(vec![1.0]);
        m.push_row(Row::ge(vec![1.0], 3.0));
        m.push_row(Row::le(vec![1.0], 2.0));
        assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn free_and_mirrored_columns() {
        // min x0 - x1  s.t. x0 >= -3 (free column), x1 <= 4 (lower -inf)
        let mut m = MilpModel::new(vec![1.0, -1.0]);
        m.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        m.set_bounds(1, f64::NEG_INFINITY, 4.0);
        m.push_row(Row::ge(vec![1.0, 0.0], -3.0));
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] + 3.0).abs() < 1e-12);
        assert!((sol.x[1] - 4.0).abs() < 1e-12);
        assert!((sol.objective + 7.0).abs() < 1e-12);
    }

    #[test]
    fn equality_rows_and_fixed_columns() {
        // min x + 2y + 3z  s.t. x + y + z = 4, z fixed at 1, y >= 1
        let mut m = MilpModel::new(vec![1.0, 2.0, 3.0]);
        m.set_bounds(2, 1.0, 1.0);
        m.push_row(Row::eq(vec![1.0, 1.0, 1.0], 4.0));
        m.push_row(Row::ge(vec![0.0, 1.0, 0.0], 1.0));
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - (2.0 + 2.0 + 3.0)).abs() < 1e-10);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut m = MilpModel::new(vec![1.0, 1.0]);
        m.push_row(Row::eq(vec![1.0, 1.0], 2.0));
        m.push_row(Row::eq(vec![2.0, 2.0], 4.0));
        let sol = solve_lp(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-10);
    }
}
