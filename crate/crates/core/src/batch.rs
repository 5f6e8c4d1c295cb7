//! Batched Lagrangian cut generation.
//!
//! Scenarios are split into batches. Each iteration solves the relaxed
//! master once, then walks the batches in a chosen order, separating a cut
//! for every scenario of a batch and pooling it at once. After each batch
//! the probability-weighted violations collected so far are compared with
//! `eps`; once they exceed it the master is resolved. A full walk that never
//! exceeds `eps` certifies the current point as `eps`-optimal.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::averaged::{average_pi, make_averaged_cut, StrengthRecord};
use crate::benders::{
    benders_continue, benders_pass, benders_root_loop, solve_master, BendersConfig, CutKind,
    MasterState,
};
use crate::error::{CoreError, Result};
use crate::instance::{validate_instance, SmipInstance};
use crate::separation::{
    restricted_domain, separate_cut, SampledEpigraph, SeparationDomain, SeparationOptions,
};
use crate::solver::{Clock, ClockMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PermutationPolicy {
    /// Start after the batch that last triggered a resolve.
    #[default]
    FixedRoundRobin,
    RandomShuffle,
    Identity,
}

/// Partition of the scenarios into batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSchedule {
    pub batches: Vec<Vec<usize>>,
    pub kappa: usize,
    pub policy: PermutationPolicy,
    /// Zero-based index of the batch that last triggered a resolve.
    pub last_stop: Option<usize>,
    seed: u64,
    draws: u64,
}

impl BatchSchedule {
    pub fn tau(&self) -> usize {
        self.batches.len()
    }
}

/// Batch size `max(1, floor(m * beta))`.
pub fn batch_size(m: usize, beta: f64) -> usize {
    ((m as f64 * beta).floor() as usize).clamp(1, m.max(1))
}

/// Splits `0..m` into `ceil(m / kappa)` batches after a seeded shuffle.
pub fn make_batches(m: usize, beta: f64, seed: u64, policy: PermutationPolicy) -> Result<BatchSchedule> {
    if m == 0 {
        return Err(CoreError::EmptyInput("scenario set"));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(CoreError::Config(format!("beta = {beta} is not in (0, 1]")));
    }
    let kappa = batch_size(m, beta);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let batches = order.chunks(kappa).map(|c| c.to_vec()).collect();
    Ok(BatchSchedule {
        batches,
        kappa,
        policy,
        last_stop: None,
        seed,
        draws: 0,
    })
}

/// Order in which the batches are visited next, as zero-based indices.
pub fn next_order(schedule: &mut BatchSchedule) -> Vec<usize> {
    let tau = schedule.tau();
    match schedule.policy {
        PermutationPolicy::Identity => (0..tau).collect(),
        PermutationPolicy::FixedRoundRobin => {
            let start = schedule.last_stop.map_or(0, |t| (t + 1) % tau);
            (0..tau).map(|i| (start + i) % tau).collect()
        }
        PermutationPolicy::RandomShuffle => {
            schedule.draws += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed ^ schedule.draws.rotate_left(32));
            let mut order: Vec<usize> = (0..tau).collect();
            order.shuffle(&mut rng);
            order
        }
    }
}

/// True iff the accumulated weighted violation strictly exceeds `eps`.
pub fn stopping_triggered(accumulated_violation: f64, eps: f64) -> bool {
    accumulated_violation > eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Paradigm {
    /// Separation over a box around the origin.
    Exact,
    /// Separation over the span of Benders cut directions, alternating
    /// with Benders passes.
    RstrMIP,
}

/// How separation domains are formed for each scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub paradigm: Paradigm,
    pub radius: f64,
    pub k: usize,
    /// With `false`, `pi0` is a variable in `[0, 1]`.
    pub pi0_fixed: bool,
}

impl DomainSpec {
    pub fn exact(radius: f64) -> Self {
        DomainSpec {
            paradigm: Paradigm::Exact,
            radius,
            k: 10,
            pi0_fixed: true,
        }
    }

    pub fn domain_for(&self, state: &MasterState, s: usize) -> Result<SeparationDomain> {
        match self.paradigm {
            Paradigm::Exact => Ok(SeparationDomain::ExactBox {
                radius: self.radius,
                pi0_fixed: self.pi0_fixed,
            }),
            Paradigm::RstrMIP => {
                // No Benders cut yet means an empty span: only pi = 0 remains.
                let mut d = match restricted_domain(state, s, self.k, self.radius) {
                    Err(CoreError::EmptyPool { .. }) => SeparationDomain::RestrictedSpan {
                        basis: Vec::new(),
                        coef_bound: self.radius,
                        pi0_fixed: self.pi0_fixed,
                    },
                    other => other?,
                };
                if let SeparationDomain::RestrictedSpan { pi0_fixed, .. } = &mut d {
                    *pi0_fixed = self.pi0_fixed;
                }
                Ok(d)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub eps: f64,
    pub beta: f64,
    pub paradigm: Paradigm,
    pub delta: f64,
    pub k: usize,
    /// Box radius for exact separation; coefficient bound for the span.
    pub radius: f64,
    pub pi0_fixed: bool,
    pub averaged: bool,
    /// Also measure averaged-cut strength against exact separation.
    pub collect_stats: bool,
    pub time_limit: Option<f64>,
    pub seed: u64,
    pub policy: PermutationPolicy,
    pub clock: ClockMode,
    pub cut_tol: f64,
    /// Cap on separations; `None` means `10 * tau * |S|`.
    pub max_separations: Option<usize>,
    pub stall_rounds: usize,
    pub benders: BendersConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eps: 1e-6,
            beta: 1.0,
            paradigm: Paradigm::Exact,
            delta: 0.0,
            k: 10,
            radius: 1.0,
            pi0_fixed: true,
            averaged: false,
            collect_stats: false,
            time_limit: None,
            seed: 0,
            policy: PermutationPolicy::FixedRoundRobin,
            clock: ClockMode::Wall,
            cut_tol: 1e-6,
            max_separations: None,
            stall_rounds: 5,
            benders: BendersConfig::default(),
        }
    }
}

impl RunConfig {
    /// Restricted-span defaults: `delta = 0.5`, `K = 10`.
    pub fn rstr_mip() -> Self {
        RunConfig {
            paradigm: Paradigm::RstrMIP,
            delta: 0.5,
            k: 10,
            ..RunConfig::default()
        }
    }

    pub fn domain_spec(&self) -> DomainSpec {
        DomainSpec {
            paradigm: self.paradigm,
            radius: self.radius,
            k: self.k,
            pi0_fixed: self.pi0_fixed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) {
            return Err(CoreError::Config(format!("eps = {} must be >= 0", self.eps)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(CoreError::Config(format!("beta = {} is not in (0, 1]", self.beta)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(CoreError::Config(format!("delta = {} is not in [0, 1)", self.delta)));
        }
        if !(self.radius > 0.0) {
            return Err(CoreError::Config(format!("radius = {} must be > 0", self.radius)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Running,
    EpsOptimal,
    TimeLimit,
    Stalled,
    IterationLimit,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Running => "running",
            RunStatus::EpsOptimal => "eps_optimal",
            RunStatus::TimeLimit => "time_limit",
            RunStatus::Stalled => "stalled",
            RunStatus::IterationLimit => "iteration_limit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            RunStatus::Running,
            RunStatus::EpsOptimal,
            RunStatus::TimeLimit,
            RunStatus::Stalled,
            RunStatus::IterationLimit,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub iteration: usize,
    /// One-based index of the batch that triggered the resolve; 0 for
    /// records not caused by a batch.
    pub batch: usize,
    pub lb: f64,
    pub ub: Option<f64>,
    pub cuts_benders: usize,
    pub cuts_lagrangian: usize,
    pub cuts_averaged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub status: RunStatus,
}

pub const TRAJECTORY_HEADER: &str =
    "time_s,iter,batch,lb,cuts_benders,cuts_lagrangian,cuts_averaged,status";

impl Trajectory {
    pub fn final_lb(&self) -> f64 {
        self.records.last().map_or(f64::NEG_INFINITY, |r| r.lb)
    }

    pub fn initial_lb(&self) -> f64 {
        self.records.first().map_or(f64::NEG_INFINITY, |r| r.lb)
    }

    /// CSV with one row per record; the last row carries the terminal status.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAJECTORY_HEADER);
        out.push('\n');
        let n = self.records.len();
        for (i, r) in self.records.iter().enumerate() {
            let status = if i + 1 == n { self.status } else { RunStatus::Running };
            let _ = writeln!(
                out,
                "{:.6},{},{},{:?},{},{},{},{}",
                r.time,
                r.iteration,
                r.batch,
                r.lb,
                r.cuts_benders,
                r.cuts_lagrangian,
                r.cuts_averaged,
                status.as_str()
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Trajectory> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == TRAJECTORY_HEADER => {}
            other => {
                return Err(CoreError::Malformed(format!(
                    "trajectory header {:?}, expected {TRAJECTORY_HEADER:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut records = Vec::new();
        let mut status = RunStatus::Running;
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || CoreError::Malformed(format!("trajectory row {}: {line:?}", n + 2));
            if f.len() != 8 {
                return Err(bad());
            }
            let num = |i: usize| f[i].trim().parse::<f64>().map_err(|_| bad());
            let int = |i: usize| f[i].trim().parse::<usize>().map_err(|_| bad());
            records.push(TrajectoryRecord {
                time: num(0)?,
                iteration: int(1)?,
                batch: int(2)?,
                lb: num(3)?,
                ub: None,
                cuts_benders: int(4)?,
                cuts_lagrangian: int(5)?,
                cuts_averaged: int(6)?,
            });
            status = RunStatus::parse(f[7].trim()).ok_or_else(bad)?;
        }
        Ok(Trajectory { records, status })
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub state: MasterState,
    pub strength: Vec<StrengthRecord>,
    pub separations: usize,
}

/// Benders phase followed by batched Lagrangian cut generation.
pub fn run(inst: &SmipInstance, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    validate_instance(inst).into_result()?;
    let bcfg = BendersConfig {
        cut_tol: cfg.cut_tol,
        clock: cfg.clock,
        ..cfg.benders
    };
    let state = benders_root_loop(inst, &bcfg)?;
    run_from_state(inst, cfg, state)
}

struct Runner<'a> {
    inst: &'a SmipInstance,
    cfg: &'a RunConfig,
    state: MasterState,
    clock: Clock,
    records: Vec<TrajectoryRecord>,
    epigraphs: Vec<SampledEpigraph>,
    strength: Vec<StrengthRecord>,
    separations: usize,
    stall: usize,
}

impl Runner<'_> {
    fn record(&mut self, batch: usize, ub: Option<f64>) {
        let lb = self.state.lb();
        self.records.push(TrajectoryRecord {
            time: self.clock.elapsed(),
            iteration: self.state.iteration,
            batch,
            lb,
            ub,
            cuts_benders: self.state.count(CutKind::Benders),
            cuts_lagrangian: self.state.count(CutKind::Lagrangian),
            cuts_averaged: self.state.count(CutKind::Averaged),
        });
    }

    fn out_of_time(&self) -> bool {
        self.cfg.time_limit.is_some_and(|lim| self.clock.elapsed() >= lim)
    }

    /// Resolves the master; returns true when the stall rule fires.
    fn resolve(&mut self, batch: usize) -> Result<bool> {
        let before = self.state.lb();
        self.state.iteration += 1;
        solve_master(self.inst, &mut self.state)?;
        self.record(batch, None);
        if self.state.lb() - before < 1e-9 {
            self.stall += 1;
        } else {
            self.stall = 0;
        }
        Ok(self.stall >= self.cfg.stall_rounds)
    }
}

/// Batched generation from an existing master state. The state's current
/// point must come from a master solve over its pools.
pub fn run_from_state(inst: &SmipInstance, cfg: &RunConfig, mut state: MasterState) -> Result<RunOutcome> {
    cfg.validate()?;
    let m = inst.num_scenarios();
    let mut schedule = make_batches(m, cfg.beta, cfg.seed, cfg.policy)?;
    let max_seps = cfg
        .max_separations
        .unwrap_or(10 * schedule.tau() * m);
    let clock = Clock::start(cfg.clock);
    state.set_clock(clock);
    let spec = cfg.domain_spec();
    let mut r = Runner {
        inst,
        cfg,
        state,
        clock,
        records: Vec::new(),
        epigraphs: vec![SampledEpigraph::default(); m],
        strength: Vec::new(),
        separations: 0,
        stall: 0,
    };
    r.record(0, None);

    let status = 'outer: loop {
        if cfg.paradigm == Paradigm::RstrMIP {
            if benders_pass(inst, &mut r.state, cfg.cut_tol)? > 0 {
                if r.resolve(0)? {
                    break RunStatus::Stalled;
                }
                if r.out_of_time() {
                    break RunStatus::TimeLimit;
                }
                continue;
            }
        }
        let x_hat = r.state.x.clone();
        let theta_hat = r.state.theta.clone();
        let order = next_order(&mut schedule);
        let mut acc = 0.0;
        let mut processed: Vec<usize> = Vec::new();
        let mut sweep_cuts = Vec::new();
        let mut triggered = None;
        for &t in &order {
            for &s in &schedule.batches[t] {
                if r.out_of_time() {
                    break 'outer RunStatus::TimeLimit;
                }
                if r.separations >= max_seps {
                    break 'outer RunStatus::IterationLimit;
                }
                let domain = spec.domain_for(&r.state, s)?;
                let opts = SeparationOptions {
                    delta: cfg.delta,
                    iteration: r.state.iteration,
                    ..SeparationOptions::default()
                };
                let sep = separate_cut(inst, s, &x_hat, theta_hat[s], &domain, &opts, &mut r.epigraphs[s])?;
                r.separations += 1;
                processed.push(s);
                if sep.cut.pi0 == 1.0 {
                    sweep_cuts.push(sep.cut.clone());
                }
                if sep.violation > 0.0 {
                    acc += inst.scenarios[s].probability * sep.violation;
                    r.state.add_cut(sep.cut);
                }
            }
            if stopping_triggered(acc, cfg.eps) {
                triggered = Some(t);
                break;
            }
        }
        let Some(t) = triggered else {
            r.record(0, Some(r.state.lb() + acc));
            break RunStatus::EpsOptimal;
        };
        schedule.last_stop = Some(t);
        if cfg.averaged && !sweep_cuts.is_empty() && processed.len() < m {
            averaged_round(&mut r, &processed, &sweep_cuts, &x_hat, &theta_hat)?;
        }
        if r.resolve(t + 1)? {
            break RunStatus::Stalled;
        }
    };
    Ok(RunOutcome {
        trajectory: Trajectory {
            records: r.records,
            status,
        },
        state: r.state,
        strength: r.strength,
        separations: r.separations,
    })
}

fn averaged_round(
    r: &mut Runner<'_>,
    processed: &[usize],
    sweep_cuts: &[crate::benders::Cut],
    x_hat: &[f64],
    theta_hat: &[f64],
) -> Result<()> {
    let inst = r.inst;
    let pibar = average_pi(sweep_cuts)?;
    let radius = pibar.iter().fold(r.cfg.radius, |m, v| m.max(v.abs()));
    for s in 0..inst.num_scenarios() {
        if processed.contains(&s) {
            continue;
        }
        let cut = make_averaged_cut(inst, s, &pibar, r.state.iteration)?;
        let avg_violation = cut.violation(x_hat, theta_hat[s]);
        if r.cfg.collect_stats {
            let mut epi = SampledEpigraph::default();
            let exact = separate_cut(
                inst,
                s,
                x_hat,
                theta_hat[s],
                &SeparationDomain::exact(radius),
                &SeparationOptions::exhaustive(),
                &mut epi,
            )?;
            r.strength.push(StrengthRecord {
                scenario: s,
                x: x_hat.to_vec(),
                theta: theta_hat[s],
                avg_violation,
                exact_violation: exact.violation,
                v: exact.violation - avg_violation,
            });
        }
        if avg_violation > r.cfg.cut_tol {
            r.state.add_cut(cut);
        }
    }
    Ok(())
}

/// Per-scenario violations of freshly separated cuts at the current point,
/// without pooling anything.
pub fn sweep(
    inst: &SmipInstance,
    state: &MasterState,
    spec: &DomainSpec,
    delta: f64,
) -> Result<Vec<f64>> {
    let opts = SeparationOptions::with_delta(delta);
    (0..inst.num_scenarios())
        .map(|s| {
            let domain = spec.domain_for(state, s)?;
            let mut epi = SampledEpigraph::default();
            let sep = separate_cut(inst, s, &state.x, state.theta[s], &domain, &opts, &mut epi)?;
            Ok(sep.violation)
        })
        .collect()
}

/// Probability-weighted sum of positive violations.
pub fn weighted_violation(inst: &SmipInstance, violations: &[f64]) -> f64 {
    inst.scenarios
        .iter()
        .zip(violations)
        .map(|(sc, v)| sc.probability * v.max(0.0))
        .sum()
}

/// Re-separates every scenario at the state's point and checks that the
/// weighted violation is within `eps / (1 - delta)`.
pub fn eps_optimality_certificate(
    inst: &SmipInstance,
    state: &MasterState,
    eps: f64,
    spec: &DomainSpec,
    delta: f64,
) -> Result<bool> {
    let v = sweep(inst, state, spec, delta)?;
    Ok(weighted_violation(inst, &v) <= eps / (1.0 - delta) + 1e-9)
}

/// Re-runs the Benders loop on a state, e.g. after loading it from disk.
pub fn reoptimize(inst: &SmipInstance, state: &mut MasterState, cfg: &RunConfig) -> Result<()> {
    let bcfg = BendersConfig {
        cut_tol: cfg.cut_tol,
        ..cfg.benders
    };
    benders_continue(inst, state, &bcfg)
}
