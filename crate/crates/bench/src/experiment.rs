//! Runs the method matrix over the instance set and writes trajectories,
//! master states and a manifest.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use lagbatch_core::averaged::StrengthRecord;
use lagbatch_core::batch::{run, RunOutcome, Trajectory};
use lagbatch_core::benders::{solve_to_optimality, MasterState, SolveReport};
use lagbatch_core::instance::SmipInstance;
use lagbatch_core::lab;
use lagbatch_core::ClockMode;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MethodSpec};
use crate::error::{error_chain, BenchError, Result};

pub const MANIFEST: &str = "manifest.json";

/// Stated in every manifest so readers know what the profiles measure.
pub const BASELINE_NOTE: &str =
    "gap baseline is the lower bound after the Benders root loop; Benders time is not counted";

/// Status string for runs that returned an error or panicked.
pub const CRASHED: &str = "crashed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub family: String,
    pub method: String,
    pub seed: u64,
    pub status: String,
    pub initial_lb: Option<f64>,
    pub final_lb: Option<f64>,
    /// Clock reading at the last trajectory record.
    pub run_seconds: Option<f64>,
    pub separations: usize,
    /// Paths relative to the results directory.
    pub trajectory: Option<String>,
    pub state: Option<String>,
    pub strength: Option<String>,
    /// Branch-and-cut on the final master.
    pub solve: Option<SolveReport>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn crashed(&self) -> bool {
        self.status == CRASHED
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub clock: ClockMode,
    pub time_limit: f64,
    pub gammas: Vec<f64>,
    pub baseline: String,
    pub instances: Vec<String>,
    pub methods: Vec<MethodSpec>,
    pub runs: Vec<RunRecord>,
}

impl Manifest {
    pub fn any_crashed(&self) -> bool {
        self.runs.iter().any(RunRecord::crashed)
    }

    pub fn method(&self, label: &str) -> Option<&MethodSpec> {
        self.methods.iter().find(|m| m.label() == label)
    }
}

/// File-system friendly form of a label.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| BenchError::io(path, e))
}

struct Loaded {
    inst: SmipInstance,
    family: String,
}

/// Runs every (instance, method) pair. A failing run is recorded as
/// crashed and the others continue; only configuration problems abort.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let mut loaded = Vec::new();
    for src in &cfg.instances {
        let (inst, family) = src.load()?;
        if loaded.iter().any(|l: &Loaded| l.inst.name == inst.name) {
            return Err(BenchError::Config(format!("instance name {} appears twice", inst.name)));
        }
        loaded.push(Loaded { inst, family });
    }

    let out = &cfg.out_dir;
    for sub in ["instances", "trajectories", "states", "strength"] {
        create_dir(&out.join(sub))?;
    }
    for l in &loaded {
        let path = out.join("instances").join(format!("{}.json", file_stem(&l.inst.name)));
        lab::save(&l.inst, &path).map_err(BenchError::Core)?;
    }

    let pairs: Vec<(&Loaded, &MethodSpec)> = loaded
        .iter()
        .flat_map(|l| cfg.methods.iter().map(move |m| (l, m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        pairs
            .par_iter()
            .map(|(l, m)| execute(cfg, &l.inst, &l.family, m))
            .collect()
    });

    let manifest = Manifest {
        seed: cfg.seed,
        clock: cfg.clock,
        time_limit: cfg.time_limit,
        gammas: cfg.gammas.clone(),
        baseline: BASELINE_NOTE.to_string(),
        instances: loaded.iter().map(|l| l.inst.name.clone()).collect(),
        methods: cfg.methods.clone(),
        runs,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&out.join(MANIFEST), &(text + "\n"))?;
    Ok(manifest)
}

fn execute(cfg: &ExperimentConfig, inst: &SmipInstance, family: &str, method: &MethodSpec) -> RunRecord {
    let mut record = RunRecord {
        instance: inst.name.clone(),
        family: family.to_string(),
        method: method.label(),
        seed: cfg.seed,
        status: CRASHED.to_string(),
        initial_lb: None,
        final_lb: None,
        run_seconds: None,
        separations: 0,
        trajectory: None,
        state: None,
        strength: None,
        solve: None,
        error: None,
    };
    let attempt = catch_unwind(AssertUnwindSafe(|| run_one(cfg, inst, method, &mut record)));
    let error = match attempt {
        Ok(Ok(())) => None,
        Ok(Err(e)) => Some(error_chain(&e)),
        Err(panic) => Some(
            panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".to_string()),
        ),
    };
    if let Some(e) = error {
        log::error!("{} / {}: {e}", record.instance, record.method);
        record.status = CRASHED.to_string();
        record.error = Some(e);
    } else {
        log::info!("{} / {}: {}", record.instance, record.method, record.status);
    }
    record
}

fn run_one(cfg: &ExperimentConfig, inst: &SmipInstance, method: &MethodSpec, record: &mut RunRecord) -> Result<()> {
    let rc = method.run_config(cfg.seed, cfg.clock, cfg.time_limit)?;
    let RunOutcome {
        trajectory,
        state,
        strength,
        separations,
    } = run(inst, &rc)?;
    let stem = format!("{}__{}", file_stem(&inst.name), file_stem(&method.label()));
    let traj_rel = format!("trajectories/{stem}.csv");
    write(&cfg.out_dir.join(&traj_rel), &trajectory.to_csv())?;
    let state_rel = format!("states/{stem}.json");
    let state_text = serde_json::to_string(&state).expect("state serializes");
    write(&cfg.out_dir.join(&state_rel), &state_text)?;
    if rc.collect_stats {
        let rel = format!("strength/{stem}.json");
        write(&cfg.out_dir.join(&rel), &serde_json::to_string(&strength).expect("records serialize"))?;
        record.strength = Some(rel);
    }
    record.status = trajectory.status.as_str().to_string();
    record.initial_lb = Some(trajectory.initial_lb());
    record.final_lb = Some(trajectory.final_lb());
    record.run_seconds = trajectory.records.last().map(|r| r.time);
    record.separations = separations;
    record.trajectory = Some(traj_rel);
    record.state = Some(state_rel);
    record.solve = Some(solve_to_optimality(inst, &state, Some(cfg.time_limit), cfg.clock)?);
    Ok(())
}

/// Everything a results directory holds, read back from disk.
#[derive(Debug, Clone)]
pub struct Results {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|source| BenchError::Json {
        path: path.display().to_string(),
        source,
    })
}

impl Results {
    pub fn open(dir: &Path) -> Result<Self> {
        Ok(Results {
            dir: dir.to_path_buf(),
            manifest: parse_json(&dir.join(MANIFEST))?,
        })
    }

    pub fn trajectory(&self, run: &RunRecord) -> Result<Option<Trajectory>> {
        let Some(rel) = &run.trajectory else { return Ok(None) };
        let path = self.dir.join(rel);
        Ok(Some(Trajectory::from_csv(&read(&path)?)?))
    }

    pub fn state(&self, run: &RunRecord) -> Result<Option<MasterState>> {
        run.state.as_ref().map(|rel| parse_json(&self.dir.join(rel))).transpose()
    }

    pub fn strength(&self, run: &RunRecord) -> Result<Vec<StrengthRecord>> {
        match &run.strength {
            Some(rel) => parse_json(&self.dir.join(rel)),
            None => Ok(Vec::new()),
        }
    }

    pub fn instance(&self, name: &str) -> Result<SmipInstance> {
        let path = self.dir.join("instances").join(format!("{}.json", file_stem(name)));
        lab::load(&path).map_err(BenchError::Core)
    }
}
