//! Experiment configuration: instance sources, method matrix, limits.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use lagbatch_core::batch::{Paradigm, RunConfig};
use lagbatch_core::instance::SmipInstance;
use lagbatch_core::lab::{self, generate, FamilyParams};
use lagbatch_core::ClockMode;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Where an instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceSource {
    /// JSON instance file; relative paths resolve against the config file.
    Path(PathBuf),
    Generate(FamilyParams),
}

impl InstanceSource {
    pub fn load(&self) -> Result<(SmipInstance, String)> {
        match self {
            InstanceSource::Path(p) => {
                let inst = lab::load(p).map_err(|source| BenchError::Instance {
                    name: p.display().to_string(),
                    source,
                })?;
                let family = inst.name.split('-').next().unwrap_or("custom").to_string();
                Ok((inst, family))
            }
            InstanceSource::Generate(params) => {
                let inst = generate(params).map_err(|source| BenchError::Instance {
                    name: params.label(),
                    source,
                })?;
                Ok((inst, params.family.as_str().to_string()))
            }
        }
    }
}

/// One column of the method matrix. The name carries paradigm and batch
/// size, e.g. `Exact-Tra`, `Exact-Lbb(0.25)`, `RstrMIP-Lbb(0.1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default)]
    pub averaged: bool,
    /// Measure averaged-cut strength; only meaningful with `averaged`.
    #[serde(default)]
    pub collect_stats: bool,
}

impl MethodSpec {
    pub fn named(name: &str) -> Self {
        MethodSpec {
            name: name.to_string(),
            eps: None,
            delta: None,
            k: None,
            radius: None,
            averaged: false,
            collect_stats: false,
        }
    }

    pub fn with_averaged(mut self, collect_stats: bool) -> Self {
        self.averaged = true;
        self.collect_stats = collect_stats;
        self
    }

    /// Name used in file names and tables.
    pub fn label(&self) -> String {
        if self.averaged {
            format!("{}-Avg", self.name)
        } else {
            self.name.clone()
        }
    }

    pub fn run_config(&self, seed: u64, clock: ClockMode, time_limit: f64) -> Result<RunConfig> {
        let (paradigm, beta) = parse_method_name(&self.name)?;
        let base = match paradigm {
            Paradigm::Exact => RunConfig::default(),
            Paradigm::RstrMIP => RunConfig::rstr_mip(),
        };
        let cfg = RunConfig {
            beta,
            eps: self.eps.unwrap_or(base.eps),
            delta: self.delta.unwrap_or(base.delta),
            k: self.k.unwrap_or(base.k),
            radius: self.radius.unwrap_or(base.radius),
            averaged: self.averaged,
            collect_stats: self.averaged && self.collect_stats,
            time_limit: Some(time_limit),
            seed,
            clock,
            ..base
        };
        cfg.validate()
            .map_err(|e| BenchError::Config(format!("method {}: {e}", self.name)))?;
        Ok(cfg)
    }
}

/// Splits `Exact-Lbb(0.25)` into its paradigm and batch fraction; `Tra`
/// means a single batch holding every scenario.
pub fn parse_method_name(name: &str) -> Result<(Paradigm, f64)> {
    let bad = || {
        BenchError::Config(format!(
            "method name {name:?} is not one of Exact-Tra, Exact-Lbb(beta), RstrMIP-Tra, RstrMIP-Lbb(beta)"
        ))
    };
    let (head, tail) = name.split_once('-').ok_or_else(bad)?;
    let paradigm = match head {
        "Exact" => Paradigm::Exact,
        "RstrMIP" => Paradigm::RstrMIP,
        _ => return Err(bad()),
    };
    if tail == "Tra" {
        return Ok((paradigm, 1.0));
    }
    let beta: f64 = tail
        .strip_prefix("Lbb(")
        .and_then(|t| t.strip_suffix(')'))
        .and_then(|b| b.parse().ok())
        .ok_or_else(bad)?;
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(BenchError::Config(format!("{name}: batch fraction must lie in (0, 1]")));
    }
    Ok((paradigm, beta))
}

fn default_time_limit() -> f64 {
    60.0
}

fn default_gammas() -> Vec<f64> {
    vec![0.75, 0.95]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_jobs() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instances: Vec<InstanceSource>,
    pub methods: Vec<MethodSpec>,
    /// Seconds per run, and again for the final branch-and-cut.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub clock: ClockMode,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

/// Twenty small instances over the three families, with `n1 <= 6` and at
/// most six scenarios, so every oracle stays enumerable.
pub fn desk_suite(seed: u64) -> Vec<FamilyParams> {
    (0..20u64)
        .map(|i| {
            let s = seed.wrapping_mul(1000).wrapping_add(i);
            let scenarios = 3 + (i as usize % 4);
            match i % 3 {
                0 => FamilyParams::sslp(3 + (i as usize % 4), 4 + (i as usize % 3), scenarios, s),
                1 => FamilyParams::sslpv(3 + (i as usize % 3), 4 + (i as usize % 2), scenarios, s),
                _ => {
                    let nodes = 3 + (i as usize % 2);
                    FamilyParams::smcf(nodes, nodes + 1 + (i as usize % 2), 2, scenarios, s)
                }
            }
        })
        .collect()
}

impl ExperimentConfig {
    /// The desk suite under the standard method matrix.
    pub fn desk(seed: u64) -> Self {
        ExperimentConfig {
            instances: desk_suite(seed).into_iter().map(InstanceSource::Generate).collect(),
            methods: vec![
                MethodSpec::named("Exact-Tra"),
                MethodSpec::named("Exact-Lbb(0.25)"),
                MethodSpec::named("Exact-Lbb(0.5)"),
                MethodSpec::named("Exact-Lbb(0.25)").with_averaged(true),
                MethodSpec::named("RstrMIP-Tra"),
                MethodSpec::named("RstrMIP-Lbb(0.25)"),
            ],
            time_limit: default_time_limit(),
            gammas: default_gammas(),
            out_dir: default_out_dir(),
            seed,
            clock: ClockMode::Wall,
            jobs: 1,
        }
    }

    /// Reads a config file; relative instance paths and `out_dir` stay
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for src in &mut cfg.instances {
            if let InstanceSource::Path(p) = src {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            return Err(BenchError::Config("no instances".into()));
        }
        if self.methods.is_empty() {
            return Err(BenchError::Config("at least one method is required".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
            return Err(BenchError::Config(format!("gamma = {g} is not in (0, 1]")));
        }
        if !(self.time_limit > 0.0) {
            return Err(BenchError::Config(format!("time limit {} must be positive", self.time_limit)));
        }
        if self.jobs == 0 {
            return Err(BenchError::Config("jobs must be at least 1".into()));
        }
        let mut labels = HashSet::new();
        for m in &self.methods {
            m.run_config(self.seed, self.clock, self.time_limit)?;
            if !labels.insert(m.label()) {
                return Err(BenchError::Config(format!("method {} appears twice", m.label())));
            }
        }
        Ok(())
    }
}
