//! Multi-cut relaxed master and Benders optimality cuts.

use lagbatch_milp::{LpStatus, MilpModel, MipOptions, MipStatus, Row, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::instance::{second_stage_model, SmipInstance};
use crate::solver::{self, Clock, ClockMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CutKind {
    Benders,
    Lagrangian,
    Averaged,
}

/// `pi.x + pi0 * theta_s >= rhs` for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub scenario: usize,
    pub kind: CutKind,
    pub pi: Vec<f64>,
    pub pi0: f64,
    pub rhs: f64,
    pub birth_iteration: usize,
}

impl Cut {
    /// `rhs - pi.x - pi0 * theta`; positive means violated.
    pub fn violation(&self, x: &[f64], theta: f64) -> f64 {
        let px: f64 = self.pi.iter().zip(x).map(|(p, x)| p * x).sum();
        self.rhs - px - self.pi0 * theta
    }

    fn same_direction(&self, other: &Cut) -> bool {
        (self.pi0 - other.pi0).abs() <= 1e-9
            && self.pi.len() == other.pi.len()
            && self.pi.iter().zip(&other.pi).all(|(a, b)| (a - b).abs() <= 1e-9)
    }
}

/// Lower bound on each `theta_s` in the master.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum ThetaFloor {
    /// 0 for scenarios with nonnegative costs, -1e7 otherwise.
    #[default]
    Auto,
    Fixed(f64),
}

impl ThetaFloor {
    fn value(&self, d: &[f64]) -> f64 {
        match *self {
            ThetaFloor::Auto if d.iter().all(|&v| v >= 0.0) => 0.0,
            ThetaFloor::Auto => -1e7,
            ThetaFloor::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BendersConfig {
    pub cut_tol: f64,
    pub max_iterations: usize,
    pub theta_floor: ThetaFloor,
    pub clock: ClockMode,
}

impl Default for BendersConfig {
    fn default() -> Self {
        BendersConfig {
            cut_tol: 1e-6,
            max_iterations: 1000,
            theta_floor: ThetaFloor::Auto,
            clock: ClockMode::Wall,
        }
    }
}

/// Cut pools, current master point and lower-bound history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MasterState {
    pub pools: Vec<Vec<Cut>>,
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    /// `(time in seconds, lower bound)` per master solve.
    pub lb_history: Vec<(f64, f64)>,
    pub iteration: usize,
    pub theta_floor: Vec<f64>,
    /// Set when a loop stopped at its iteration cap.
    pub truncated: bool,
    #[serde(skip)]
    clock: Option<Clock>,
}

impl MasterState {
    pub fn new(inst: &SmipInstance, floor: ThetaFloor) -> Self {
        let s = inst.num_scenarios();
        MasterState {
            pools: vec![Vec::new(); s],
            x: vec![0.0; inst.n1],
            theta: inst.scenarios.iter().map(|sc| floor.value(&sc.d)).collect(),
            lb_history: Vec::new(),
            iteration: 0,
            theta_floor: inst.scenarios.iter().map(|sc| floor.value(&sc.d)).collect(),
            truncated: false,
            clock: None,
        }
    }

    /// Time stamps in `lb_history` are measured on this clock; without one
    /// they are 0.
    pub fn set_clock(&mut self, clock: Clock) {
        self.clock = Some(clock);
    }

    pub fn clock(&self) -> Option<Clock> {
        self.clock
    }

    pub fn lb(&self) -> f64 {
        self.lb_history.last().map_or(f64::NEG_INFINITY, |&(_, lb)| lb)
    }

    /// Pools `cut` unless a cut of the same scenario with the same
    /// coefficients and a rhs at least as large is already present.
    pub fn add_cut(&mut self, cut: Cut) -> bool {
        let pool = &mut self.pools[cut.scenario];
        if pool.iter().any(|c| c.same_direction(&cut) && c.rhs >= cut.rhs) {
            return false;
        }
        pool.push(cut);
        true
    }

    pub fn cuts(&self) -> impl Iterator<Item = &Cut> {
        self.pools.iter().flatten()
    }

    pub fn count(&self, kind: CutKind) -> usize {
        self.cuts().filter(|c| c.kind == kind).count()
    }

    /// Largest violation of any pooled cut at the current point.
    pub fn max_pool_violation(&self) -> f64 {
        self.cuts()
            .map(|c| c.violation(&self.x, self.theta[c.scenario]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn now(&self) -> f64 {
        self.clock.map_or(0.0, |c| c.elapsed())
    }
}

/// Subproblem value `f_s(x)` and an optimal dual vector.
pub fn solve_benders_subproblem(
    inst: &SmipInstance,
    s: usize,
    x: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let sc = inst.scenario(s)?;
    if x.len() != inst.n1 {
        return Err(CoreError::Dimension(format!(
            "first-stage point has {} entries, expected n1={}",
            x.len(),
            inst.n1
        )));
    }
    let sol = solver::lp(&second_stage_model(sc, x))?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.objective, sol.duals)),
        LpStatus::Infeasible => Err(CoreError::SubproblemInfeasible { scenario: s }),
        LpStatus::Unbounded => Err(CoreError::SubproblemUnbounded { scenario: s }),
        other => Err(CoreError::SolverStatus(format!(
            "{other:?} on subproblem of scenario {s}: {}",
            sol.diagnostic.unwrap_or_default()
        ))),
    }
}

/// Benders cut `(T^s)^T lambda . x + theta_s >= lambda . h^s`, after
/// checking that `lambda` is dual feasible.
pub fn benders_cut_from_dual(inst: &SmipInstance, s: usize, lambda: &[f64]) -> Result<Cut> {
    let sc = inst.scenario(s)?;
    if lambda.len() != sc.m2() {
        return Err(CoreError::Dimension(format!(
            "dual vector has {} entries, expected m2={}",
            lambda.len(),
            sc.m2()
        )));
    }
    if let Some(i) = lambda.iter().position(|&l| l < -1e-8 || !l.is_finite()) {
        return Err(CoreError::DualInfeasible {
            scenario: s,
            reason: format!("lambda[{i}] = {} is negative", lambda[i]),
        });
    }
    let wl = sc.w.tmul(lambda);
    if let Some(j) = (0..sc.n2()).find(|&j| wl[j] > sc.d[j] + 1e-8) {
        return Err(CoreError::DualInfeasible {
            scenario: s,
            reason: format!("(lambda^T W)[{j}] = {} exceeds d[{j}] = {}", wl[j], sc.d[j]),
        });
    }
    Ok(raw_benders_cut(inst, s, lambda, 0))
}

fn raw_benders_cut(inst: &SmipInstance, s: usize, lambda: &[f64], iteration: usize) -> Cut {
    let sc = &inst.scenarios[s];
    let lambda: Vec<f64> = lambda.iter().map(|&l| l.max(0.0)).collect();
    Cut {
        scenario: s,
        kind: CutKind::Benders,
        pi: sc.t.tmul(&lambda),
        pi0: 1.0,
        rhs: lambda.iter().zip(&sc.h).map(|(l, h)| l * h).sum(),
        birth_iteration: iteration,
    }
}

/// Master model over `(x, theta_1..theta_S)` with every pooled cut.
pub fn master_model(inst: &SmipInstance, state: &MasterState, integral: bool) -> MilpModel {
    let (n1, ns) = (inst.n1, inst.num_scenarios());
    let width = n1 + ns;
    let mut objective = inst.c.clone();
    objective.extend(inst.scenarios.iter().map(|sc| sc.probability));
    let mut model = MilpModel::new(objective);
    inst.apply_first_stage_columns(&mut model, integral);
    for s in 0..ns {
        model.set_bounds(n1 + s, state.theta_floor[s], f64::INFINITY);
    }
    for row in inst.first_stage_rows(width) {
        model.push_row(row);
    }
    for cut in state.cuts() {
        let mut coeffs = cut.pi.clone();
        coeffs.resize(width, 0.0);
        coeffs[n1 + cut.scenario] = cut.pi0;
        model.push_row(Row::ge(coeffs, cut.rhs));
    }
    model
}

/// Point and bound from a master solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterPoint {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub lb: f64,
}

/// Solves the LP relaxation of the master over all pooled cuts, stores the
/// point in `state` and appends to its bound history. The recorded bound
/// never decreases: the pools only grow, so an earlier bound stays valid.
pub fn solve_master(inst: &SmipInstance, state: &mut MasterState) -> Result<MasterPoint> {
    let sol = solver::lp(&master_model(inst, state, false))?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(CoreError::Master("infeasible".into())),
        LpStatus::Unbounded => return Err(CoreError::Master("unbounded".into())),
        other => {
            return Err(CoreError::Master(format!(
                "not solved ({other:?}): {}",
                sol.diagnostic.unwrap_or_default()
            )))
        }
    }
    let n1 = inst.n1;
    state.x = sol.x[..n1].to_vec();
    state.theta = sol.x[n1..].to_vec();
    let lb = sol.objective.max(state.lb());
    let t = state.now();
    state.lb_history.push((t, lb));
    Ok(MasterPoint {
        x: state.x.clone(),
        theta: state.theta.clone(),
        lb,
    })
}

/// Solves every subproblem at the current master point and pools the
/// Benders cuts violated by more than `cut_tol`. Returns the number added.
pub fn benders_pass(inst: &SmipInstance, state: &mut MasterState, cut_tol: f64) -> Result<usize> {
    let mut added = 0;
    let x = state.x.clone();
    for s in 0..inst.num_scenarios() {
        let (value, lambda) = solve_benders_subproblem(inst, s, &x)?;
        if value - state.theta[s] > cut_tol {
            let cut = raw_benders_cut(inst, s, &lambda, state.iteration);
            if cut.violation(&x, state.theta[s]) > cut_tol && state.add_cut(cut) {
                added += 1;
            }
        }
    }
    Ok(added)
}

/// Alternates master solves and Benders passes until no subproblem yields
/// a violated cut. The returned state's clock starts after this loop.
pub fn benders_root_loop(inst: &SmipInstance, cfg: &BendersConfig) -> Result<MasterState> {
    crate::instance::validate_instance(inst).into_result()?;
    let mut state = MasterState::new(inst, cfg.theta_floor);
    benders_continue(inst, &mut state, cfg)?;
    state.set_clock(Clock::start(cfg.clock));
    if let Some(last) = state.lb_history.last_mut() {
        last.0 = 0.0;
    }
    Ok(state)
}

/// Benders loop from an existing state.
pub fn benders_continue(
    inst: &SmipInstance,
    state: &mut MasterState,
    cfg: &BendersConfig,
) -> Result<()> {
    let mut solves = 0;
    loop {
        solve_master(inst, state)?;
        solves += 1;
        if benders_pass(inst, state, cfg.cut_tol)? == 0 {
            return Ok(());
        }
        state.iteration += 1;
        if solves >= cfg.max_iterations {
            solve_master(inst, state)?;
            state.truncated = true;
            log::warn!("Benders loop stopped after {solves} master solves");
            return Ok(());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    NodeLimit,
    TimeLimit,
}

/// Outcome of solving the cut-augmented master to integer optimality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub value: f64,
    pub bound: f64,
    pub x: Option<Vec<f64>>,
    pub seconds: f64,
    pub nodes: usize,
    pub rounds: usize,
}

impl SolveReport {
    /// Relative gap in percent.
    pub fn gap_percent(&self) -> f64 {
        if !self.value.is_finite() {
            return 100.0;
        }
        100.0 * (self.value - self.bound).max(0.0) / self.value.abs().max(1e-9)
    }
}

/// Hands the cut-augmented master to branch-and-bound. Every integer
/// master solution is checked against all subproblems and violated
/// Benders cuts are added, so on termination the value is the true
/// optimum (second stages are continuous).
pub fn solve_to_optimality(
    inst: &SmipInstance,
    state: &MasterState,
    time_limit: Option<f64>,
    clock: ClockMode,
) -> Result<SolveReport> {
    let clock = Clock::start(clock);
    let mut work = state.clone();
    let mut best_value = f64::INFINITY;
    let mut best_x = None;
    let mut bound = f64::NEG_INFINITY;
    let mut nodes = 0;
    let mut rounds = 0;
    let opts = MipOptions {
        tolerances: Tolerances {
            mip_gap: 1e-9,
            ..Tolerances::default()
        },
        ..MipOptions::default()
    };
    let status = loop {
        rounds += 1;
        let sol = solver::milp(&master_model(inst, &work, true), &opts)?;
        nodes += sol.nodes;
        let x_full = match (sol.status, sol.incumbent) {
            (MipStatus::Optimal | MipStatus::NodeLimit, Some(x)) => x,
            (MipStatus::Infeasible, _) => return Err(CoreError::Master("infeasible".into())),
            (MipStatus::Unbounded, _) => return Err(CoreError::Master("unbounded".into())),
            (status, _) => {
                return Err(CoreError::SolverStatus(format!("{status:?} on integer master")))
            }
        };
        bound = bound.max(sol.bound);
        work.x = x_full[..inst.n1].to_vec();
        work.theta = x_full[inst.n1..].to_vec();
        let mut upper = inst.first_stage_cost(&work.x);
        for (s, sc) in inst.scenarios.iter().enumerate() {
            let (value, _) = solve_benders_subproblem(inst, s, &work.x)?;
            upper += sc.probability * value;
        }
        if upper < best_value {
            best_value = upper;
            best_x = Some(work.x.clone());
        }
        if sol.status == MipStatus::NodeLimit {
            break SolveStatus::NodeLimit;
        }
        let added = benders_pass(inst, &mut work, 1e-7)?;
        if added == 0 || best_value - bound <= 1e-6 * (1.0 + best_value.abs()) {
            bound = bound.min(best_value);
            break SolveStatus::Optimal;
        }
        if time_limit.is_some_and(|lim| clock.elapsed() >= lim) {
            break SolveStatus::TimeLimit;
        }
    };
    Ok(SolveReport {
        status,
        value: best_value,
        bound,
        x: best_x,
        seconds: clock.elapsed(),
        nodes,
        rounds,
    })
}
