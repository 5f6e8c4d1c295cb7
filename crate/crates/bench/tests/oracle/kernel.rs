//! Random LP and MILP models with answers known without the simplex code.

use lagbatch_milp::{LpSolution, MilpModel, Row};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random LP with a known feasible point and finite column bounds, so it is
/// always feasible and bounded.
pub fn random_bounded_lp(rng: &mut ChaCha8Rng) -> MilpModel {
    let n = rng.gen_range(1..=12);
    let m = rng.gen_range(1..=12);
    let objective = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let mut model = MilpModel::new(objective);
    for j in 0..n {
        let lo = if rng.gen_bool(0.3) { -rng.gen_range(0.0..3.0) } else { 0.0 };
        model.set_bounds(j, lo, lo + rng.gen_range(0.5..6.0));
    }
    let x0: Vec<f64> = (0..n).map(|j| rng.gen_range(model.lower[j]..model.upper[j])).collect();
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.7) { rng.gen_range(-4.0..4.0) } else { 0.0 })
            .collect();
        let act: f64 = coeffs.iter().zip(&x0).map(|(a, x)| a * x).sum();
        if rng.gen_bool(0.2) {
            model.push_row(Row::eq(coeffs, act));
        } else {
            model.push_row(Row::ge(coeffs, act - rng.gen_range(0.0..2.0)));
        }
    }
    model
}

/// Dual objective from the row multipliers alone:
/// `b.y + sum_j (r_j > 0 ? r_j lo_j : r_j hi_j)` with `r = c - A^T y`.
pub fn dual_objective(model: &MilpModel, sol: &LpSolution) -> f64 {
    let mut r = model.objective.clone();
    for (row, y) in model.rows.iter().zip(&sol.duals) {
        for (rj, a) in r.iter_mut().zip(&row.coeffs) {
            *rj -= y * a;
        }
    }
    let by: f64 = model.rows.iter().zip(&sol.duals).map(|(row, y)| row.rhs * y).sum();
    let bounds: f64 = r
        .iter()
        .enumerate()
        .map(|(j, &rj)| if rj > 0.0 { rj * model.lower[j] } else { rj * model.upper[j] })
        .sum();
    by + bounds
}

/// Pure integer model over small boxes, integer data.
pub fn random_integer_model(rng: &mut ChaCha8Rng) -> MilpModel {
    let n = rng.gen_range(1..=8);
    let m = rng.gen_range(1..=6);
    let objective: Vec<f64> = (0..n).map(|_| rng.gen_range(-9..=9) as f64).collect();
    let mut model = MilpModel::new(objective);
    for j in 0..n {
        model.set_bounds(j, 0.0, rng.gen_range(1..=2) as f64);
        model.set_integer(j, true);
    }
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
        let rhs = rng.gen_range(-6..=3) as f64;
        if rng.gen_bool(0.15) {
            model.push_row(Row::le(coeffs, rhs + 6.0));
        } else {
            model.push_row(Row::ge(coeffs, rhs));
        }
    }
    model
}

/// Optimum over every integer point of the box; `None` if none is feasible.
pub fn enumerate_integer_optimum(model: &MilpModel) -> Option<f64> {
    let n = model.num_cols();
    let mut x: Vec<f64> = model.lower.clone();
    let mut best: Option<f64> = None;
    loop {
        if model.rows.iter().all(|r| r.violation(&x) == 0.0) {
            let v = model.objective_value(&x);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
        // Odometer step over the box.
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            if x[j] < model.upper[j] {
                x[j] += 1.0;
                break;
            }
            x[j] = model.lower[j];
            j += 1;
        }
    }
}
