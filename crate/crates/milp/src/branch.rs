//! Best-bound branch-and-bound over the bundled simplex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::MilpError;
use crate::model::MilpModel;
use crate::simplex::{solve_lp_with, LpStatus};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
    /// An LP relaxation failed numerically; the search stopped there.
    Numerical,
}

#[derive(Debug, Clone)]
pub struct MipOptions {
    pub tolerances: Tolerances,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions {
            tolerances: Tolerances::default(),
            node_limit: 100_000,
            time_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution {
    pub status: MipStatus,
    pub incumbent: Option<Vec<f64>>,
    /// Objective of the incumbent, `+inf` without one.
    pub value: f64,
    /// Best proven lower bound.
    pub bound: f64,
    pub nodes: usize,
    /// Every improving incumbent in discovery order; the last one is
    /// `incumbent`.
    pub improvements: Vec<Vec<f64>>,
    pub lp_iterations: usize,
}

impl MipSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == MipStatus::Optimal
    }

    pub fn gap(&self) -> f64 {
        if self.value.is_finite() && self.bound.is_finite() {
            (self.value - self.bound).max(0.0) / (1.0 + self.value.abs())
        } else {
            f64::INFINITY
        }
    }
}

struct Node {
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

// Min-heap on bound, FIFO on ties.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}

pub fn solve_milp(model: &MilpModel, opts: &MipOptions) -> Result<MipSolution, MilpError> {
    model.validate()?;
    let tol = &opts.tolerances;
    let start = Instant::now();
    let mut lower = model.lower.clone();
    let mut upper = model.upper.clone();
    for j in 0..model.num_cols() {
        if model.integer[j] {
            lower[j] = (lower[j] - tol.integrality).ceil();
            upper[j] = (upper[j] + tol.integrality).floor();
            if lower[j] > upper[j] {
                return Ok(empty(MipStatus::Infeasible, f64::INFINITY, 0, 0));
            }
        }
    }

    let mut work = model.clone();
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        seq,
        lower,
        upper,
    });
    let mut incumbent: Option<Vec<f64>> = None;
    let mut value = f64::INFINITY;
    let mut improvements = Vec::new();
    let mut nodes = 0usize;
    let mut lp_iterations = 0usize;
    let mut cutoff_bound: Option<f64> = None;

    let prune_at = |value: f64| value - tol.mip_gap * (1.0 + value.abs());

    while let Some(node) = heap.pop() {
        if incumbent.is_some() && node.bound >= prune_at(value) {
            // Best-bound order: every remaining node is at least as bad.
            cutoff_bound = Some(node.bound);
            heap.clear();
            break;
        }
        if nodes >= opts.node_limit {
            heap.push(node);
            return Ok(limited(
                MipStatus::NodeLimit,
                incumbent,
                value,
                &heap,
                nodes,
                improvements,
                lp_iterations,
            ));
        }
        if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            heap.push(node);
            return Ok(limited(
                MipStatus::TimeLimit,
                incumbent,
                value,
                &heap,
                nodes,
                improvements,
                lp_iterations,
            ));
        }
        nodes += 1;
        work.lower.clone_from(&node.lower);
        work.upper.clone_from(&node.upper);
        let lp = solve_lp_with(&work, tol)?;
        lp_iterations += lp.iterations;
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if nodes == 1 {
                    return Ok(empty(MipStatus::Unbounded, f64::NEG_INFINITY, nodes, lp_iterations));
                }
                continue;
            }
            LpStatus::IterationLimit | LpStatus::Numerical => {
                heap.push(node);
                return Ok(limited(
                    MipStatus::Numerical,
                    incumbent,
                    value,
                    &heap,
                    nodes,
                    improvements,
                    lp_iterations,
                ));
            }
        }
        if incumbent.is_some() && lp.objective >= prune_at(value) {
            continue;
        }
        // Most fractional variable, lowest index on ties.
        let mut branch: Option<(usize, f64)> = None;
        for j in 0..model.num_cols() {
            if !model.integer[j] {
                continue;
            }
            let v = lp.x[j];
            let frac = v - v.floor();
            let dist = frac.min(1.0 - frac);
            if dist > tol.integrality && branch.map_or(true, |(_, d)| dist > d) {
                branch = Some((j, dist));
            }
        }
        match branch {
            None => {
                let mut x = lp.x;
                for j in 0..x.len() {
                    if model.integer[j] {
                        x[j] = x[j].round();
                    }
                }
                let v = model.objective_value(&x);
                if v < value {
                    value = v;
                    improvements.push(x.clone());
                    incumbent = Some(x);
                }
            }
            Some((j, _)) => {
                let v = lp.x[j];
                let mut down_upper = node.upper.clone();
                down_upper[j] = v.floor();
                let mut up_lower = node.lower.clone();
                up_lower[j] = v.ceil();
                seq += 1;
                heap.push(Node {
                    bound: lp.objective,
                    seq,
                    lower: node.lower.clone(),
                    upper: down_upper,
                });
                seq += 1;
                heap.push(Node {
                    bound: lp.objective,
                    seq,
                    lower: up_lower,
                    upper: node.upper,
                });
            }
        }
    }

    Ok(match incumbent {
        Some(x) => MipSolution {
            status: MipStatus::Optimal,
            incumbent: Some(x),
            value,
            bound: value.min(cutoff_bound.unwrap_or(value)),
            nodes,
            improvements,
            lp_iterations,
        },
        None => empty(MipStatus::Infeasible, f64::INFINITY, nodes, lp_iterations),
    })
}

fn bound_of(heap: &BinaryHeap<Node>, value: f64) -> f64 {
    heap.peek().map_or(value, |n| n.bound)
}

fn empty(status: MipStatus, bound: f64, nodes: usize, lp_iterations: usize) -> MipSolution {
    MipSolution {
        status,
        incumbent: None,
        value: f64::INFINITY,
        bound,
        nodes,
        improvements: Vec::new(),
        lp_iterations,
    }
}

fn limited(
    status: MipStatus,
    incumbent: Option<Vec<f64>>,
    value: f64,
    heap: &BinaryHeap<Node>,
    nodes: usize,
    improvements: Vec<Vec<f64>>,
    lp_iterations: usize,
) -> MipSolution {
    MipSolution {
        status,
        incumbent,
        value,
        bound: bound_of(heap, value),
        nodes,
        improvements,
        lp_iterations,
    }
}
