//! Lagrangian function evaluation and cut separation by cutting planes.
//!
//! `Qbar_s(pi, pi0) = min { pi.x + pi0 * d_s.y : x in X, T^s x + W^s y >= h^s, y >= 0 }`
//! is concave in `(pi, pi0)`. The separation problem maximizes
//! `Qbar_s(pi, pi0) - pi.x_hat - pi0 * theta_hat` over a compact domain.
//! It is solved by an outer approximation of `Qbar_s` built from sampled
//! points of the scenario epigraph, tightened by exact evaluations.

use lagbatch_milp::{LpStatus, MilpModel, MipOptions, MipStatus, Row, Tolerances};
use serde::{Deserialize, Serialize};

use crate::benders::{Cut, CutKind, MasterState};
use crate::error::{CoreError, Result};
use crate::instance::SmipInstance;
use crate::solver;

const RANK_TOL: f64 = 1e-10;
const GAP_ABS_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-11;

/// Feasible set of cut coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SeparationDomain {
    /// `||pi||_inf <= radius`. With `pi0_fixed`, `pi0 = 1`; otherwise
    /// `pi0` ranges over `[0, 1]`.
    ExactBox { radius: f64, pi0_fixed: bool },
    /// `pi = sum_k mu_k basis_k` with `|mu_k| <= coef_bound`.
    RestrictedSpan {
        basis: Vec<Vec<f64>>,
        coef_bound: f64,
        pi0_fixed: bool,
    },
}

impl SeparationDomain {
    pub fn exact(radius: f64) -> Self {
        SeparationDomain::ExactBox {
            radius,
            pi0_fixed: true,
        }
    }

    pub fn pi0_fixed(&self) -> bool {
        match self {
            SeparationDomain::ExactBox { pi0_fixed, .. }
            | SeparationDomain::RestrictedSpan { pi0_fixed, .. } => *pi0_fixed,
        }
    }

    /// Columns of the map `mu -> pi`, and the bound on each `|mu_k|`.
    fn generator(&self, n1: usize) -> Result<(Vec<Vec<f64>>, f64)> {
        match self {
            SeparationDomain::ExactBox { radius, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(CoreError::EmptyDomain(format!("box radius {radius}")));
                }
                let cols = (0..n1)
                    .map(|j| (0..n1).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect();
                Ok((cols, *radius))
            }
            SeparationDomain::RestrictedSpan {
                basis, coef_bound, ..
            } => {
                if !(*coef_bound > 0.0 && coef_bound.is_finite()) {
                    return Err(CoreError::EmptyDomain(format!("coefficient bound {coef_bound}")));
                }
                if let Some(b) = basis.iter().find(|b| b.len() != n1) {
                    return Err(CoreError::Dimension(format!(
                        "basis vector has {} entries, expected n1={n1}",
                        b.len()
                    )));
                }
                Ok((basis.clone(), *coef_bound))
            }
        }
    }
}

/// Finite sample of `(x, theta)` points from the epigraph of scenario `s`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampledEpigraph {
    pub points: Vec<(Vec<f64>, f64)>,
}

impl SampledEpigraph {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Adds a point unless an identical one is present.
    pub fn insert(&mut self, x: Vec<f64>, theta: f64) -> bool {
        let dup = self
            .points
            .iter()
            .any(|(px, pt)| (pt - theta).abs() <= 1e-12 && px.iter().zip(&x).all(|(a, b)| a == b));
        if !dup {
            self.points.push((x, theta));
        }
        !dup
    }

    /// Adds the samples of an evaluation; true if any point was new.
    pub fn absorb(&mut self, eval: &QbarValue) -> bool {
        let mut grew = false;
        for (x, theta) in &eval.samples {
            grew |= self.insert(x.clone(), *theta);
        }
        grew
    }

    /// `min_j pi.x_j + pi0 * theta_j`, or `+inf` when empty.
    pub fn model_value(&self, pi: &[f64], pi0: f64) -> f64 {
        self.points
            .iter()
            .map(|(x, t)| dot(pi, x) + pi0 * t)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Result of one evaluation of `Qbar_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct QbarValue {
    /// Proven lower bound on the optimum; equal to it up to the MIP gap.
    pub value: f64,
    /// Objective of the returned minimizer.
    pub incumbent_value: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Epigraph points `(x, d_s.y)` from the minimizer and every improving
    /// incumbent found on the way.
    pub samples: Vec<(Vec<f64>, f64)>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn qbar_options() -> MipOptions {
    MipOptions {
        tolerances: Tolerances {
            mip_gap: 1e-9,
            ..Tolerances::default()
        },
        ..MipOptions::default()
    }
}

/// Single-scenario MILP over `(x, y)` with objective `pi.x + pi0 * d_s.y`.
pub fn qbar_model(inst: &SmipInstance, s: usize, pi: &[f64], pi0: f64) -> Result<MilpModel> {
    let sc = inst.scenario(s)?;
    if pi.len() != inst.n1 {
        return Err(CoreError::Dimension(format!(
            "pi has {} entries, expected n1={}",
            pi.len(),
            inst.n1
        )));
    }
    let (n1, n2) = (inst.n1, sc.n2());
    let mut objective = pi.to_vec();
    objective.extend(sc.d.iter().map(|d| pi0 * d));
    let mut model = MilpModel::new(objective);
    inst.apply_first_stage_columns(&mut model, true);
    for row in inst.first_stage_rows(n1 + n2) {
        model.push_row(row);
    }
    let mut rows = vec![vec![0.0; n1 + n2]; sc.m2()];
    for &(r, c, v) in &sc.t.triplets {
        rows[r][c] += v;
    }
    for &(r, c, v) in &sc.w.triplets {
        rows[r][n1 + c] += v;
    }
    for (coeffs, &h) in rows.into_iter().zip(&sc.h) {
        model.push_row(Row::ge(coeffs, h));
    }
    Ok(model)
}

/// Evaluates `Qbar_s(pi, pi0)` by branch-and-bound.
pub fn evaluate_qbar(inst: &SmipInstance, s: usize, pi: &[f64], pi0: f64) -> Result<QbarValue> {
    if !(pi0 >= 0.0) {
        return Err(CoreError::Config(format!("pi0 = {pi0} must be nonnegative")));
    }
    let model = qbar_model(inst, s, pi, pi0)?;
    let sol = solver::milp(&model, &qbar_options())?;
    let n1 = inst.n1;
    let d = &inst.scenarios[s].d;
    let incumbent = match (sol.status, sol.incumbent) {
        (MipStatus::Optimal, Some(x)) => x,
        (MipStatus::Infeasible, _) => return Err(CoreError::ScenarioInfeasible { scenario: s }),
        (status, _) => {
            return Err(CoreError::SolverStatus(format!(
                "{status:?} evaluating the Lagrangian function of scenario {s}"
            )))
        }
    };
    let split = |v: &[f64]| (v[..n1].to_vec(), dot(d, &v[n1..]));
    let mut samples: Vec<(Vec<f64>, f64)> = sol.improvements.iter().map(|v| split(v)).collect();
    samples.push(split(&incumbent));
    Ok(QbarValue {
        value: sol.bound.min(sol.value),
        incumbent_value: sol.value,
        x: incumbent[..n1].to_vec(),
        y: incumbent[n1..].to_vec(),
        samples,
    })
}

/// `rhs - pi.x_hat - pi0 * theta_hat`; positive when violated.
pub fn cut_violation(cut: &Cut, x_hat: &[f64], theta_hat: f64) -> f64 {
    cut.violation(x_hat, theta_hat)
}

/// Outcome of one separation.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub cut: Cut,
    /// True violation of `cut` at the separated point.
    pub violation: f64,
    /// Final upper bound on the best achievable violation.
    pub upper_bound: f64,
    pub iterations: usize,
    /// Set when the iteration cap stopped the loop before the gap closed.
    pub truncated: bool,
    /// Upper and lower bracket after every iteration.
    pub bracket: Vec<(f64, f64)>,
}

/// Settings for [`separate_cut`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationOptions {
    pub delta: f64,
    pub max_iterations: usize,
    /// Birth iteration stamped on the returned cut.
    pub iteration: usize,
    /// Stop as soon as no violated cut can exist. Turn off to obtain the
    /// best violation even when it is negative.
    pub stop_when_satisfied: bool,
}

impl SeparationOptions {
    pub fn with_delta(delta: f64) -> Self {
        SeparationOptions {
            delta,
            ..Self::default()
        }
    }

    /// Exact maximization regardless of the sign of the optimum.
    pub fn exhaustive() -> Self {
        SeparationOptions {
            stop_when_satisfied: false,
            ..Self::default()
        }
    }
}

impl Default for SeparationOptions {
    fn default() -> Self {
        SeparationOptions {
            delta: 0.0,
            max_iterations: 200,
            iteration: 0,
            stop_when_satisfied: true,
        }
    }
}

/// Candidate coefficients and the outer-approximation bound they attain.
struct Candidate {
    pi: Vec<f64>,
    pi0: f64,
    bound: f64,
}

/// Maximizes the sampled-model violation over the domain. Among optimal
/// coefficient vectors, the one with the smallest 1-norm is returned.
fn separation_master(
    epi: &SampledEpigraph,
    gen: &[Vec<f64>],
    mu_bound: f64,
    pi0_fixed: bool,
    x_hat: &[f64],
    theta_hat: f64,
) -> Result<Candidate> {
    let n1 = x_hat.len();
    let k = gen.len();
    // columns: mu (k), pi0, eta
    let (c_pi0, c_eta) = (k, k + 1);
    let mut objective = vec![0.0; k + 2];
    for (m, g) in gen.iter().enumerate() {
        objective[m] = dot(g, x_hat);
    }
    objective[c_pi0] = theta_hat;
    objective[c_eta] = -1.0;
    let mut model = MilpModel::new(objective);
    for m in 0..k {
        model.set_bounds(m, -mu_bound, mu_bound);
    }
    if pi0_fixed {
        model.set_bounds(c_pi0, 1.0, 1.0);
    } else {
        model.set_bounds(c_pi0, 0.0, 1.0);
    }
    model.set_bounds(c_eta, f64::NEG_INFINITY, f64::INFINITY);
    for (x, theta) in &epi.points {
        let mut coeffs = vec![0.0; k + 2];
        for (m, g) in gen.iter().enumerate() {
            coeffs[m] = dot(g, x);
        }
        coeffs[c_pi0] = *theta;
        coeffs[c_eta] = -1.0;
        model.push_row(Row::ge(coeffs, 0.0));
    }
    let first = solver::lp(&model)?;
    if first.status != LpStatus::Optimal {
        return Err(CoreError::SolverStatus(format!(
            "{:?} on separation master: {}",
            first.status,
            first.diagnostic.unwrap_or_default()
        )));
    }
    let bound = -first.objective;

    // Second stage: same optimum, smallest ||pi||_1 via t_i >= |(G mu)_i|.
    let mut tie = model.clone();
    let width = k + 2 + n1;
    tie.objective = vec![0.0; width];
    for i in 0..n1 {
        tie.objective[k + 2 + i] = 1.0;
    }
    tie.lower.resize(width, 0.0);
    tie.upper.resize(width, f64::INFINITY);
    tie.integer.resize(width, false);
    tie.names.clear();
    for row in &mut tie.rows {
        row.coeffs.resize(width, 0.0);
    }
    let mut keep = model.objective.iter().map(|c| -c).collect::<Vec<_>>();
    keep.resize(width, 0.0);
    tie.push_row(Row::ge(keep, bound - GAP_ABS_TOL * (1.0 + bound.abs())));
    for i in 0..n1 {
        let mut up = vec![0.0; width];
        let mut down = vec![0.0; width];
        for (m, g) in gen.iter().enumerate() {
            up[m] = -g[i];
            down[m] = g[i];
        }
        up[k + 2 + i] = 1.0;
        down[k + 2 + i] = 1.0;
        tie.push_row(Row::ge(up, 0.0));
        tie.push_row(Row::ge(down, 0.0));
    }
    let second = solver::lp(&tie)?;
    let decode = |z: &[f64]| {
        let mut pi = vec![0.0; n1];
        for (m, g) in gen.iter().enumerate() {
            for i in 0..n1 {
                pi[i] += z[m] * g[i];
            }
        }
        let pi0 = if pi0_fixed { 1.0 } else { z[c_pi0].clamp(0.0, 1.0) };
        (pi, pi0)
    };
    let model_violation =
        |pi: &[f64], pi0: f64| epi.model_value(pi, pi0) - dot(pi, x_hat) - pi0 * theta_hat;
    if second.status == LpStatus::Optimal {
        let (pi, pi0) = decode(&second.x);
        // The tie-break may only trade away rounding noise.
        if model_violation(&pi, pi0) >= bound - TIE_TOL * (1.0 + bound.abs()) {
            return Ok(Candidate { pi, pi0, bound });
        }
    } else {
        log::debug!("tie-break LP returned {:?}; keeping first solution", second.status);
    }
    let (pi, pi0) = decode(&first.x);
    Ok(Candidate { pi, pi0, bound })
}

/// Separates a cut for scenario `s` at `(x_hat, theta_hat)`.
///
/// The loop keeps an upper bound from the outer approximation and a lower
/// bound from the best exactly evaluated cut, and stops once
/// `UB <= 0` or `UB - LB < delta * UB`. `epi` is extended in place.
/// With [`SeparationOptions::stop_when_satisfied`] off, the first test is
/// dropped and `|UB|` replaces `UB` in the second.
pub fn separate_cut(
    inst: &SmipInstance,
    s: usize,
    x_hat: &[f64],
    theta_hat: f64,
    domain: &SeparationDomain,
    opts: &SeparationOptions,
    epi: &mut SampledEpigraph,
) -> Result<Separation> {
    inst.scenario(s)?;
    if !(0.0..1.0).contains(&opts.delta) {
        return Err(CoreError::Config(format!("delta = {} is not in [0, 1)", opts.delta)));
    }
    if x_hat.len() != inst.n1 {
        return Err(CoreError::Dimension(format!(
            "x_hat has {} entries, expected n1={}",
            x_hat.len(),
            inst.n1
        )));
    }
    let (gen, mu_bound) = domain.generator(inst.n1)?;
    let pi0_fixed = domain.pi0_fixed();
    let violation_of = |pi: &[f64], pi0: f64, q: f64| q - dot(pi, x_hat) - pi0 * theta_hat;

    let mut best: Option<(Vec<f64>, f64, f64, f64)> = None; // pi, pi0, rhs, violation
    if epi.is_empty() {
        let pi = vec![0.0; inst.n1];
        let q = evaluate_qbar(inst, s, &pi, 1.0)?;
        epi.absorb(&q);
        best = Some((pi.clone(), 1.0, q.value, violation_of(&pi, 1.0, q.value)));
    }

    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    if let Some((_, _, _, v)) = &best {
        lb = *v;
    }
    let mut bracket = Vec::new();
    let mut iterations = 0;
    let mut truncated = false;
    loop {
        let cand = separation_master(epi, &gen, mu_bound, pi0_fixed, x_hat, theta_hat)?;
        ub = ub.min(cand.bound);
        let open = if opts.stop_when_satisfied {
            ub > 0.0 && ub - lb >= opts.delta * ub
        } else {
            ub - lb >= opts.delta * ub.abs()
        };
        if !(open && ub - lb > GAP_ABS_TOL) {
            bracket.push((ub, lb));
            break;
        }
        if iterations >= opts.max_iterations {
            truncated = true;
            break;
        }
        iterations += 1;
        let q = evaluate_qbar(inst, s, &cand.pi, cand.pi0)?;
        let grew = epi.absorb(&q);
        let v = violation_of(&cand.pi, cand.pi0, q.value);
        if best.as_ref().map_or(true, |b| v > b.3) {
            best = Some((cand.pi, cand.pi0, q.value, v));
        }
        lb = lb.max(v);
        bracket.push((ub, lb));
        if !grew {
            // The master would return the same candidate again; its model
            // value already matches the exact value up to rounding.
            break;
        }
    }

    let (pi, pi0, rhs, violation) = match best {
        Some(b) => b,
        None => {
            // The master already proves no violation; return the
            // zero-coefficient cut at its exact value.
            let pi = vec![0.0; inst.n1];
            let q = evaluate_qbar(inst, s, &pi, 1.0)?;
            epi.absorb(&q);
            let v = violation_of(&pi, 1.0, q.value);
            (pi, 1.0, q.value, v)
        }
    };
    Ok(Separation {
        cut: Cut {
            scenario: s,
            kind: CutKind::Lagrangian,
            pi,
            pi0,
            rhs,
            birth_iteration: opts.iteration,
        },
        violation,
        upper_bound: ub,
        iterations,
        truncated,
        bracket,
    })
}

/// Span of up to `k` Benders cut directions of scenario `s`, chosen by
/// slack at the current master point (binding first, then newest first)
/// and orthonormalized; dependent vectors are skipped.
pub fn restricted_domain(
    state: &MasterState,
    s: usize,
    k: usize,
    coef_bound: f64,
) -> Result<SeparationDomain> {
    let pool = state.pools.get(s).ok_or(CoreError::ScenarioIndex {
        index: s,
        count: state.pools.len(),
    })?;
    let mut ranked: Vec<(i64, usize, &Cut)> = pool
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == CutKind::Benders)
        .map(|(i, c)| {
            let slack = -c.violation(&state.x, state.theta[s]);
            ((slack.max(0.0) / 1e-9).round() as i64, i, c)
        })
        .collect();
    if ranked.is_empty() {
        return Err(CoreError::EmptyPool { scenario: s });
    }
    ranked.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(b.2.birth_iteration.cmp(&a.2.birth_iteration))
            .then(b.1.cmp(&a.1))
    });
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (_, _, cut) in ranked {
        if basis.len() >= k {
            break;
        }
        let norm0 = cut.pi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = cut.pi.clone();
        for b in &basis {
            let proj = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
        let norm = v.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= RANK_TOL * norm0.max(1.0) {
            continue;
        }
        basis.push(v.into_iter().map(|x| x / norm).collect());
    }
    Ok(SeparationDomain::RestrictedSpan {
        basis,
        coef_bound,
        pi0_fixed: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benders::ThetaFloor;
    use crate::instance::fixture_t1;

    #[test]
    fn qbar_on_t1() {
        let inst = fixture_t1();
        let q = evaluate_qbar(&inst, 1, &[0.0], 1.0).unwrap();
        assert_eq!((q.value, q.x.clone()), (1.0, vec![1.0]));
        let q = evaluate_qbar(&inst, 1, &[1.0], 1.0).unwrap();
        assert_eq!(q.value, 2.0);
        let q = evaluate_qbar(&inst, 0, &[0.0], 0.0).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn separation_on_t1_exact() {
        let inst = fixture_t1();
        let mut epi = SampledEpigraph::default();
        let sep = separate_cut(
            &inst,
            1,
            &[0.0],
            0.0,
            &SeparationDomain::exact(1.0),
            &SeparationOptions::default(),
            &mut epi,
        )
        .unwrap();
        assert!((sep.violation - 2.0).abs() < 1e-9, "{sep:?}");
        assert!((sep.cut.pi[0] - 1.0).abs() < 1e-9);
        assert!((sep.cut.rhs - 2.0).abs() < 1e-9);
        assert!(!sep.truncated);
    }

    #[test]
    fn separation_with_half_tolerance() {
        let inst = fixture_t1();
        let mut epi = SampledEpigraph::default();
        let opts = SeparationOptions::with_delta(0.5);
        let sep = separate_cut(&inst, 1, &[0.0], 0.0, &SeparationDomain::exact(1.0), &opts, &mut epi)
            .unwrap();
        assert!(sep.violation >= 1.0 - 1e-8);
    }

    #[test]
    fn point_in_hull_is_not_separated() {
        let inst = fixture_t1();
        let mut epi = SampledEpigraph::default();
        // theta above f_2 everywhere on [0, 1]
        let sep = separate_cut(
            &inst,
            1,
            &[0.5],
            2.0,
            &SeparationDomain::exact(1.0),
            &SeparationOptions::default(),
            &mut epi,
        )
        .unwrap();
        assert!(sep.violation <= 1e-9);
    }

    #[test]
    fn violation_arithmetic() {
        let cut = Cut {
            scenario: 1,
            kind: CutKind::Lagrangian,
            pi: vec![1.0],
            pi0: 1.0,
            rhs: 2.0,
            birth_iteration: 0,
        };
        assert_eq!(cut_violation(&cut, &[0.0], 0.0), 2.0);
        assert_eq!(cut_violation(&cut, &[0.0], 2.0), 0.0);
        assert_eq!(cut_violation(&cut, &[1.0], 2.0), -1.0);
    }

    fn pool_state(pis: &[Vec<f64>]) -> MasterState {
        let mut inst = fixture_t1();
        inst.n1 = pis[0].len();
        inst.p1 = inst.n1;
        let mut state = MasterState::new(&inst, ThetaFloor::Fixed(0.0));
        state.x = vec![0.0; inst.n1];
        for (i, pi) in pis.iter().enumerate() {
            state.pools[0].push(Cut {
                scenario: 0,
                kind: CutKind::Benders,
                pi: pi.clone(),
                pi0: 1.0,
                rhs: 0.0,
                birth_iteration: i,
            });
        }
        state
    }

    fn basis(d: SeparationDomain) -> Vec<Vec<f64>> {
        match d {
            SeparationDomain::RestrictedSpan { basis, .. } => basis,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn restricted_domain_single_and_collinear() {
        let b = basis(restricted_domain(&pool_state(&[vec![1.0, 0.0]]), 0, 10, 1.0).unwrap());
        assert_eq!(b, vec![vec![1.0, 0.0]]);
        let b = basis(
            restricted_domain(&pool_state(&[vec![1.0, 0.0], vec![2.0, 0.0]]), 0, 10, 1.0).unwrap(),
        );
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn restricted_domain_caps_at_k() {
        let pis: Vec<Vec<f64>> = (0..12)
            .map(|i| (0..12).map(|j| if i == j { 1.0 + j as f64 } else { 0.1 }).collect())
            .collect();
        let b = basis(restricted_domain(&pool_state(&pis), 0, 10, 1.0).unwrap());
        assert_eq!(b.len(), 10);
        for (i, u) in b.iter().enumerate() {
            for (j, v) in b.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(u, v) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn restricted_domain_needs_benders_cuts() {
        let inst = fixture_t1();
        let state = MasterState::new(&inst, ThetaFloor::Auto);
        assert!(matches!(
            restricted_domain(&state, 0, 10, 1.0),
            Err(CoreError::EmptyPool { scenario: 0 })
        ));
    }
}
