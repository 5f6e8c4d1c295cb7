use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use lagbatch_bench::certify::certify_results;
use lagbatch_bench::{emit_profiles, emit_report, run_experiment, BenchError, ExperimentConfig, InstanceSource, Results};
use lagbatch_core::lab::{self, generate, FamilyParams, Preset};
use lagbatch_core::ClockMode;

#[derive(Parser)]
#[command(name = "lagbatch", version, about = "Batched Lagrangian cut experiments for two-stage stochastic MIPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    Wall,
    Calls,
}

impl From<ClockArg> for ClockMode {
    fn from(c: ClockArg) -> Self {
        match c {
            ClockArg::Wall => ClockMode::Wall,
            ClockArg::Calls => ClockMode::Calls,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Sslp,
    Sslpv,
    Smcf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instance files, either from a config or from one family spec.
    Gen {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        #[arg(long, default_value_t = 4)]
        sites: usize,
        #[arg(long, default_value_t = 6)]
        clients: usize,
        #[arg(long, default_value_t = 4)]
        nodes: usize,
        #[arg(long, default_value_t = 6)]
        edges: usize,
        #[arg(long, default_value_t = 2)]
        commodities: usize,
        #[arg(long, default_value_t = 5)]
        scenarios: usize,
        /// Allow the published benchmark sizes.
        #[arg(long)]
        benchmark: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "instances")]
        out: PathBuf,
    },
    /// Run every method on every instance; without --config the desk suite is used.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum)]
        clock: Option<ClockArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write gamma-gap-closed profile data files for a results directory.
    Profile {
        #[arg(long, default_value = "results")]
        results: PathBuf,
        /// Thresholds; defaults to those stored with the results.
        #[arg(long = "gamma")]
        gammas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write summary tables, profiles and averaged-cut statistics.
    Report {
        #[arg(long, default_value = "results")]
        results: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check the epsilon-optimality certificate of every stored run.
    Certify {
        #[arg(long, default_value = "results")]
        results: PathBuf,
    },
}

fn experiment_config(
    config: Option<PathBuf>,
    seed: Option<u64>,
    time_limit: Option<f64>,
    jobs: Option<usize>,
    clock: Option<ClockArg>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match config {
        Some(path) => ExperimentConfig::load(&path)?,
        None => ExperimentConfig::desk(seed.unwrap_or(0)),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = time_limit {
        cfg.time_limit = t;
    }
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    if let Some(c) = clock {
        cfg.clock = c.into();
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Returns `Ok(false)` when some run crashed or failed its certificate.
fn dispatch(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Gen {
            config,
            family,
            sites,
            clients,
            nodes,
            edges,
            commodities,
            scenarios,
            benchmark,
            seed,
            out,
        } => {
            let params: Vec<FamilyParams> = match (config, family) {
                (Some(path), _) => ExperimentConfig::load(&path)?
                    .instances
                    .into_iter()
                    .filter_map(|s| match s {
                        InstanceSource::Generate(p) => Some(p),
                        InstanceSource::Path(_) => None,
                    })
                    .collect(),
                (None, Some(f)) => {
                    let p = match f {
                        FamilyArg::Sslp => FamilyParams::sslp(sites, clients, scenarios, seed),
                        FamilyArg::Sslpv => FamilyParams::sslpv(sites, clients, scenarios, seed),
                        FamilyArg::Smcf => FamilyParams::smcf(nodes, edges, commodities, scenarios, seed),
                    };
                    vec![p.with_preset(if benchmark { Preset::Benchmark } else { Preset::Desk })]
                }
                (None, None) => return Err(BenchError::Config("gen needs --config or --family".into()).into()),
            };
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for p in params {
                let inst = generate(&p).map_err(|source| BenchError::Instance { name: p.label(), source })?;
                let path = out.join(format!("{}.json", inst.name));
                lab::save(&inst, &path)?;
                println!("{} (n1={}, |S|={})", path.display(), inst.n1, inst.num_scenarios());
            }
            Ok(true)
        }
        Command::Run {
            config,
            seed,
            time_limit,
            jobs,
            clock,
            out,
        } => {
            let cfg = experiment_config(config, seed, time_limit, jobs, clock, out)?;
            let manifest = run_experiment(&cfg)?;
            for r in &manifest.runs {
                let lb = r.final_lb.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
                println!("{:<28} {:<22} {:<16} lb {lb}", r.instance, r.method, r.status);
            }
            println!("manifest: {}", cfg.out_dir.join(lagbatch_bench::experiment::MANIFEST).display());
            Ok(!manifest.any_crashed())
        }
        Command::Profile { results, gammas, out } => {
            let res = Results::open(&results)?;
            let gammas = if gammas.is_empty() { res.manifest.gammas.clone() } else { gammas };
            if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
                return Err(BenchError::Config(format!("gamma = {g} is not in (0, 1]")).into());
            }
            let dir = out.unwrap_or_else(|| results.join("report"));
            for path in emit_profiles(&res, &gammas, &dir)? {
                println!("{}", path.display());
            }
            Ok(true)
        }
        Command::Report { results, out } => {
            let res = Results::open(&results)?;
            let dir = out.unwrap_or_else(|| results.join("report"));
            let files = emit_report(&res, &dir)?;
            print!("{}", std::fs::read_to_string(dir.join("summary.txt"))?);
            println!("{} files written to {}", files.len(), dir.display());
            Ok(true)
        }
        Command::Certify { results } => {
            let res = Results::open(&results)?;
            let lines = certify_results(&res)?;
            if lines.is_empty() {
                bail!("no stored master states under {}", results.display());
            }
            let mut ok = true;
            for l in &lines {
                let verdict = if l.certified { "certified" } else { "not certified" };
                println!(
                    "{:<28} {:<22} {:<16} violation {:.3e} (eps {:.1e}) {verdict}",
                    l.instance, l.method, l.status, l.violation, l.eps
                );
                ok &= l.consistent();
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            let config = err.downcast_ref::<BenchError>().is_some_and(BenchError::is_config);
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}
