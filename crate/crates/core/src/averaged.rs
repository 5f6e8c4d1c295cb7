//! Averaged Lagrangian cuts and cut-strength statistics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::benders::{Cut, CutKind};
use crate::error::{CoreError, Result};
use crate::instance::SmipInstance;
use crate::separation::{
    evaluate_qbar, separate_cut, SampledEpigraph, SeparationDomain, SeparationOptions,
};

/// Componentwise mean of the cut coefficients. All cuts need `pi0 = 1`.
pub fn average_pi(cuts: &[Cut]) -> Result<Vec<f64>> {
    let first = cuts.first().ok_or(CoreError::EmptyInput("cut list"))?;
    if let Some(c) = cuts.iter().find(|c| c.pi0 != 1.0) {
        return Err(CoreError::MixedPi0(c.pi0));
    }
    let n = first.pi.len();
    if cuts.iter().any(|c| c.pi.len() != n) {
        return Err(CoreError::Dimension("cuts of different widths".into()));
    }
    let mut mean = vec![0.0; n];
    for c in cuts {
        for (m, p) in mean.iter_mut().zip(&c.pi) {
            *m += p;
        }
    }
    let k = cuts.len() as f64;
    Ok(mean.into_iter().map(|m| m / k).collect())
}

/// `pibar.x + theta_s >= Qbar_s(pibar, 1)`, valid for scenario `s` by
/// construction.
pub fn make_averaged_cut(inst: &SmipInstance, s: usize, pibar: &[f64], iteration: usize) -> Result<Cut> {
    let q = evaluate_qbar(inst, s, pibar, 1.0)?;
    Ok(Cut {
        scenario: s,
        kind: CutKind::Averaged,
        pi: pibar.to_vec(),
        pi0: 1.0,
        rhs: q.value,
        birth_iteration: iteration,
    })
}

/// Strength of `pi` at `x_hat`: the best achievable
/// `Qbar_s(pi', 1) - pi'.x_hat` over the domain minus that of `pi`.
pub fn cut_strength(
    inst: &SmipInstance,
    s: usize,
    x_hat: &[f64],
    pi: &[f64],
    domain: &SeparationDomain,
    delta: f64,
) -> Result<f64> {
    let mut epi = SampledEpigraph::default();
    let best = separate_cut(
        inst,
        s,
        x_hat,
        0.0,
        domain,
        &SeparationOptions {
            delta,
            ..SeparationOptions::exhaustive()
        },
        &mut epi,
    )?;
    let q = evaluate_qbar(inst, s, pi, 1.0)?;
    let own: f64 = q.value - pi.iter().zip(x_hat).map(|(p, x)| p * x).sum::<f64>();
    Ok(best.violation - own)
}

/// Averaged cut compared with an exactly separated cut at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthRecord {
    pub scenario: usize,
    pub x: Vec<f64>,
    pub theta: f64,
    pub avg_violation: f64,
    pub exact_violation: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityStats {
    /// Percent of records whose averaged cut is violated.
    pub pct_positive: f64,
    /// Mean of `avg / exact` in percent, over records with a positive
    /// exact violation; `None` when there are none.
    pub avg_ratio: Option<f64>,
    pub n_records: usize,
    /// Records left out of the ratio.
    pub n_skipped: usize,
}

pub fn quality_stats(records: &[StrengthRecord], delta: f64) -> Result<QualityStats> {
    if records.is_empty() {
        return Err(CoreError::EmptyInput("strength records"));
    }
    let positive = records.iter().filter(|r| r.avg_violation > 0.0).count();
    let ratios: Vec<f64> = records
        .iter()
        .filter(|r| r.exact_violation > 1e-9)
        .map(|r| (r.avg_violation / r.exact_violation).clamp(0.0, 1.0 + delta))
        .collect();
    let avg_ratio = (!ratios.is_empty()).then(|| 100.0 * ratios.iter().sum::<f64>() / ratios.len() as f64);
    Ok(QualityStats {
        pct_positive: 100.0 * positive as f64 / records.len() as f64,
        avg_ratio,
        n_records: records.len(),
        n_skipped: records.len() - ratios.len(),
    })
}

pub const STATS_HEADER: &str = "family,beta,pct_positive,avg_ratio,n_records,n_skipped";

/// One row per `(family, beta, stats)` entry.
pub fn stats_csv(rows: &[(String, f64, QualityStats)]) -> String {
    let mut out = String::from(STATS_HEADER);
    out.push('\n');
    for (family, beta, st) in rows {
        let ratio = st.avg_ratio.map_or_else(|| "n/a".to_string(), |r| format!("{r:.2}"));
        let _ = writeln!(
            out,
            "{family},{beta},{:.2},{ratio},{},{}",
            st.pct_positive, st.n_records, st.n_skipped
        );
    }
    out
}

/// Spread of the dual coefficients across scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualStats {
    /// Mean coefficient over the solved subset.
    pub mean_solved: Vec<f64>,
    /// Mean over all scenarios, when every scenario has a cut.
    pub mean_all: Option<Vec<f64>>,
    /// `(1/|S|) sum_s ||pi_s - mean_all||^2`, when every scenario has a cut.
    pub v2: Option<f64>,
}

/// `cuts[s]` is the cut of scenario `s`, if one was separated; `solved`
/// picks the subset the averaged coefficients come from.
pub fn dual_stats(cuts: &[Option<Cut>], solved: &[usize]) -> Result<DualStats> {
    let chosen: Vec<Cut> = solved
        .iter()
        .map(|&s| cuts.get(s).cloned().flatten().ok_or(CoreError::EmptyInput("solved cut")))
        .collect::<Result<_>>()?;
    let mean_solved = average_pi(&chosen)?;
    let all: Option<Vec<Cut>> = cuts.iter().cloned().collect();
    let (mean_all, v2) = match all {
        Some(all) if !all.is_empty() => {
            let mean = average_pi(&all)?;
            let v2 = all
                .iter()
                .map(|c| c.pi.iter().zip(&mean).map(|(p, m)| (p - m).powi(2)).sum::<f64>())
                .sum::<f64>()
                / all.len() as f64;
            (Some(mean), Some(v2))
        }
        _ => (None, None),
    };
    Ok(DualStats {
        mean_solved,
        mean_all,
        v2,
    })
}
