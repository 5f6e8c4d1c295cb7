//! Gamma-gap-closed profiles.
//!
//! For instance `p` the baseline is the lower bound at time zero and
//! `g_p` the largest gap closed by any method. Method `m` reaches the
//! threshold at the first time its bound has closed `gamma * g_p`;
//! `rho_m(tau)` is the share of instances reached by time `tau`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use lagbatch_core::batch::Trajectory;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub tau: f64,
    pub rho: f64,
}

/// Lower-bound history of one (instance, method) run.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrajectory {
    pub instance: String,
    pub method: String,
    /// `(time, lb)` in time order.
    pub points: Vec<(f64, f64)>,
}

impl LabeledTrajectory {
    pub fn new(instance: &str, method: &str, points: Vec<(f64, f64)>) -> Self {
        LabeledTrajectory {
            instance: instance.to_string(),
            method: method.to_string(),
            points,
        }
    }

    pub fn from_trajectory(instance: &str, method: &str, t: &Trajectory) -> Self {
        Self::new(instance, method, t.records.iter().map(|r| (r.time, r.lb)).collect())
    }
}

/// Per-method profile, keyed by method label. Methods missing on some
/// instance (a crashed run) count as never reaching it there.
pub fn gap_closed_profile(runs: &[LabeledTrajectory], gamma: f64) -> Result<BTreeMap<String, Vec<ProfilePoint>>> {
    if runs.is_empty() {
        return Err(BenchError::Empty("no trajectories"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(BenchError::Config(format!("gamma = {gamma} is not in [0, 1]")));
    }
    if runs.iter().any(|r| r.points.is_empty()) {
        return Err(BenchError::Empty("trajectory without records"));
    }

    let mut baseline: BTreeMap<&str, f64> = BTreeMap::new();
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for r in runs {
        let b = baseline.entry(&r.instance).or_insert(f64::INFINITY);
        *b = b.min(r.points[0].1);
    }
    for r in runs {
        let closed = r.points.last().unwrap().1 - baseline[r.instance.as_str()];
        let g = best.entry(&r.instance).or_insert(0.0);
        *g = g.max(closed);
    }
    let n_instances = baseline.len() as f64;

    // Earliest reaching time per (method, instance).
    let mut reach: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in runs {
        let base = baseline[r.instance.as_str()];
        let target = gamma * best[r.instance.as_str()];
        let slack = 1e-12 * (1.0 + base.abs());
        let t = r
            .points
            .iter()
            .find(|(_, lb)| lb - base >= target - slack)
            .map_or(f64::INFINITY, |p| p.0);
        reach.entry(&r.method).or_default().push(t);
    }

    let mut events: Vec<f64> = reach.values().flatten().copied().filter(|t| t.is_finite()).collect();
    events.push(0.0);
    events.sort_by(f64::total_cmp);
    events.dedup();

    Ok(reach
        .into_iter()
        .map(|(method, times)| {
            let curve = events
                .iter()
                .map(|&tau| ProfilePoint {
                    tau,
                    rho: times.iter().filter(|&&t| t <= tau).count() as f64 / n_instances,
                })
                .collect();
            (method.to_string(), curve)
        })
        .collect())
}

/// Value of a step profile at `tau`; zero before the first point.
pub fn rho_at(curve: &[ProfilePoint], tau: f64) -> f64 {
    curve.iter().take_while(|p| p.tau <= tau).last().map_or(0.0, |p| p.rho)
}

/// Two whitespace-separated columns, ready for gnuplot or pandas.
pub fn to_dat(curve: &[ProfilePoint]) -> String {
    let mut out = String::from("# tau rho\n");
    for p in curve {
        let _ = writeln!(out, "{} {}", p.tau, p.rho);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(instance: &str, method: &str, pts: &[(f64, f64)]) -> LabeledTrajectory {
        LabeledTrajectory::new(instance, method, pts.to_vec())
    }

    #[test]
    fn two_instances_reached_at_three_and_seven() {
        let runs = [
            step("p1", "m", &[(0.0, 0.0), (3.0, 1.0)]),
            step("p2", "m", &[(0.0, 5.0), (2.0, 5.5), (7.0, 6.0)]),
        ];
        let prof = gap_closed_profile(&runs, 1.0).unwrap();
        let curve = &prof["m"];
        assert_eq!(
            curve,
            &vec![
                ProfilePoint { tau: 0.0, rho: 0.0 },
                ProfilePoint { tau: 3.0, rho: 0.5 },
                ProfilePoint { tau: 7.0, rho: 1.0 },
            ]
        );
        assert_eq!(rho_at(curve, 3.0), 0.5);
        assert_eq!(rho_at(curve, 6.9), 0.5);
        assert_eq!(rho_at(curve, 7.0), 1.0);
    }

    #[test]
    fn a_method_that_never_catches_up_stays_at_zero() {
        let runs = [
            step("p1", "fast", &[(0.0, 0.0), (1.0, 2.0)]),
            step("p1", "slow", &[(0.0, 0.0), (5.0, 0.5)]),
            step("p2", "fast", &[(0.0, 1.0), (2.0, 3.0)]),
            step("p2", "slow", &[(0.0, 1.0), (4.0, 1.1)]),
        ];
        let prof = gap_closed_profile(&runs, 0.95).unwrap();
        assert!(prof["slow"].iter().all(|p| p.rho == 0.0));
        assert_eq!(prof["fast"].last().unwrap().rho, 1.0);
    }

    #[test]
    fn zero_gamma_jumps_to_one_at_time_zero() {
        let runs = [
            step("p1", "a", &[(0.0, 0.0), (3.0, 1.0)]),
            step("p1", "b", &[(0.0, 0.0), (9.0, 0.2)]),
        ];
        let prof = gap_closed_profile(&runs, 0.0).unwrap();
        for curve in prof.values() {
            assert_eq!(curve[0], ProfilePoint { tau: 0.0, rho: 1.0 });
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(gap_closed_profile(&[], 0.5).is_err());
    }

    #[test]
    fn dat_format() {
        let curve = [ProfilePoint { tau: 0.0, rho: 0.0 }, ProfilePoint { tau: 2.5, rho: 0.5 }];
        assert_eq!(to_dat(&curve), "# tau rho\n0 0\n2.5 0.5\n");
    }
}
