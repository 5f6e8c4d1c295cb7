//! Replays the epsilon-optimality certificate on stored master states.

use lagbatch_core::batch::{eps_optimality_certificate, sweep, weighted_violation, RunStatus};
use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::experiment::Results;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyLine {
    pub instance: String,
    pub method: String,
    pub status: String,
    pub eps: f64,
    /// Probability-weighted violation of a fresh full sweep.
    pub violation: f64,
    pub certified: bool,
}

impl CertifyLine {
    /// A run that claims eps-optimality must carry a valid certificate.
    pub fn consistent(&self) -> bool {
        self.certified || self.status != RunStatus::EpsOptimal.as_str()
    }
}

/// One line per run with a stored state; crashed runs are skipped.
pub fn certify_results(results: &Results) -> Result<Vec<CertifyLine>> {
    let m = &results.manifest;
    let mut lines = Vec::new();
    for r in &m.runs {
        let Some(state) = results.state(r)? else { continue };
        let spec = m
            .method(&r.method)
            .ok_or_else(|| BenchError::Config(format!("manifest has no method {}", r.method)))?;
        let cfg = spec.run_config(m.seed, m.clock, m.time_limit)?;
        let inst = results.instance(&r.instance)?;
        let domain = cfg.domain_spec();
        let violation = weighted_violation(&inst, &sweep(&inst, &state, &domain, cfg.delta)?);
        let certified = eps_optimality_certificate(&inst, &state, cfg.eps, &domain, cfg.delta)?;
        lines.push(CertifyLine {
            instance: r.instance.clone(),
            method: r.method.clone(),
            status: r.status.clone(),
            eps: cfg.eps,
            violation,
            certified,
        });
    }
    Ok(lines)
}
