use std::path::Path;
use std::process::Command;

use lagbatch_bench::report::{summary_rows, SUMMARY_COLUMNS};
use lagbatch_bench::{emit_report, run_experiment, ExperimentConfig, InstanceSource, MethodSpec, Results};
use lagbatch_core::batch::Trajectory;
use lagbatch_core::lab::FamilyParams;
use lagbatch_core::ClockMode;

fn small_config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        instances: vec![
            InstanceSource::Generate(FamilyParams::sslp(3, 4, 3, 1)),
            InstanceSource::Generate(FamilyParams::smcf(3, 4, 2, 3, 2)),
        ],
        methods: vec![
            MethodSpec::named("Exact-Tra"),
            MethodSpec::named("Exact-Lbb(0.5)").with_averaged(true),
        ],
        out_dir: out.to_path_buf(),
        clock: ClockMode::Calls,
        ..ExperimentConfig::desk(0)
    }
}

fn lb_column(path: &Path) -> Vec<f64> {
    let t = Trajectory::from_csv(&std::fs::read_to_string(path).unwrap()).unwrap();
    t.records.iter().map(|r| r.lb).collect()
}

#[test]
fn one_instance_two_methods_gives_two_files_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.instances.truncate(1);
    let manifest = run_experiment(&cfg).unwrap();
    assert_eq!(manifest.runs.len(), 2);
    assert!(dir.path().join("manifest.json").is_file());
    let files: Vec<_> = std::fs::read_dir(dir.path().join("trajectories")).unwrap().collect();
    assert_eq!(files.len(), 2);
    assert!(manifest.baseline.contains("Benders"));
    for r in &manifest.runs {
        assert!(matches!(r.status.as_str(), "eps_optimal" | "time_limit"), "{r:?}");
        assert!(r.solve.is_some());
    }
    let reread = Results::open(dir.path()).unwrap();
    assert_eq!(reread.manifest, manifest);
}

#[test]
fn small_batches_terminate_normally_on_desk_sslp() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.instances = lagbatch_bench::desk_suite(0)
        .into_iter()
        .filter(|p| p.family == lagbatch_core::lab::Family::Sslp)
        .map(InstanceSource::Generate)
        .collect();
    cfg.methods = vec![MethodSpec::named("Exact-Lbb(0.05)")];
    let manifest = run_experiment(&cfg).unwrap();
    assert!(manifest.runs.iter().all(|r| matches!(r.status.as_str(), "eps_optimal" | "time_limit")));
}

#[test]
fn same_seed_same_lower_bounds_and_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_experiment(&small_config(a.path())).unwrap();
    let mut cfg = small_config(b.path());
    cfg.jobs = 3;
    let mb = run_experiment(&cfg).unwrap();
    for (ra, rb) in ma.runs.iter().zip(&mb.runs) {
        let ta = a.path().join(ra.trajectory.as_ref().unwrap());
        let tb = b.path().join(rb.trajectory.as_ref().unwrap());
        assert_eq!(lb_column(&ta), lb_column(&tb));
        assert_eq!(std::fs::read(&ta).unwrap(), std::fs::read(&tb).unwrap());
    }
    let ra = emit_report(&Results::open(a.path()).unwrap(), &a.path().join("report")).unwrap();
    let rb = emit_report(&Results::open(b.path()).unwrap(), &b.path().join("report")).unwrap();
    assert_eq!(ra.len(), rb.len());
    for (fa, fb) in ra.iter().zip(&rb) {
        assert_eq!(std::fs::read(fa).unwrap(), std::fs::read(fb).unwrap(), "{}", fa.display());
    }
}

#[test]
fn reports_regenerate_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&small_config(dir.path())).unwrap();
    let res = Results::open(dir.path()).unwrap();
    let first = emit_report(&res, &dir.path().join("r1")).unwrap();
    let second = emit_report(&res, &dir.path().join("r2")).unwrap();
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
    let summary = std::fs::read_to_string(dir.path().join("r1/summary.csv")).unwrap();
    let header = summary.lines().next().unwrap();
    for col in SUMMARY_COLUMNS {
        assert!(header.contains(col), "{header}");
    }
    // Two thresholds, two methods.
    assert_eq!(std::fs::read_dir(dir.path().join("r1/profiles")).unwrap().count(), 4);
    let rows = summary_rows(&res);
    assert!(rows.iter().all(|r| r.runs == 2 && r.solved <= r.runs));
}

/// Second stage `-y >= 1` has no solution, so the Benders phase fails.
const BROKEN: &str = r#"{
  "name": "broken", "n1": 1, "p1": 1, "c": [1.0],
  "A": {"rows": 0, "cols": 1, "triplets": []}, "b": [], "x_ub": [1.0],
  "scenarios": [{"p": 1.0, "d": [1.0], "T": {"triplets": []}, "W": {"triplets": [[0, 0, -1.0]]}, "h": [1.0]}]
}"#;

#[test]
fn a_crashing_run_does_not_stop_the_others() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, BROKEN).unwrap();
    let mut cfg = small_config(&dir.path().join("out"));
    cfg.instances.truncate(1);
    cfg.instances.push(InstanceSource::Path(broken));
    let manifest = run_experiment(&cfg).unwrap();
    assert!(manifest.any_crashed());
    let (bad, good): (Vec<_>, Vec<_>) = manifest.runs.iter().partition(|r| r.instance == "broken");
    assert!(bad.iter().all(|r| r.crashed() && r.error.is_some()));
    assert!(good.iter().all(|r| !r.crashed()));
    // The report still covers the runs that finished.
    emit_report(&Results::open(&dir.path().join("out")).unwrap(), &dir.path().join("report")).unwrap();
}

#[test]
fn empty_results_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.instances.truncate(1);
    let mut manifest = run_experiment(&cfg).unwrap();
    manifest.runs.clear();
    let res = Results {
        dir: dir.path().to_path_buf(),
        manifest,
    };
    let out = dir.path().join("report");
    assert!(emit_report(&res, &out).is_err());
    assert!(!out.exists());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lagbatch"))
}

#[test]
fn cli_round_trip_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "instances": [{"generate": {"family": "sslp", "sites": 3, "clients": 4, "scenarios": 3, "seed": 4}}],
        "methods": [{"name": "Exact-Tra"}, {"name": "RstrMIP-Lbb(0.5)"}],
        "out_dir": "res"
    });
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let status = cli()
        .args(["run", "--clock", "calls", "--jobs", "2", "--config"])
        .arg(&cfg_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let res = dir.path().join("res");
    assert!(res.join("manifest.json").is_file());
    for sub in ["report", "certify"] {
        let status = cli().arg(sub).arg("--results").arg(&res).output().unwrap().status;
        assert_eq!(status.code(), Some(0), "{sub}");
    }
    let status = cli().args(["profile", "--gamma", "0.5", "--results"]).arg(&res).arg("--out").arg(dir.path().join("p")).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    assert_eq!(std::fs::read_dir(dir.path().join("p/profiles")).unwrap().count(), 2);

    let gen = dir.path().join("gen");
    let status = cli().args(["gen", "--family", "smcf", "--nodes", "3", "--edges", "4", "--out"]).arg(&gen).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    assert_eq!(std::fs::read_dir(&gen).unwrap().count(), 1);

    // Bad gamma in the config is a configuration error.
    std::fs::write(&cfg_path, cfg.to_string().replace("\"out_dir\"", "\"gammas\": [1.5], \"out_dir\"")).unwrap();
    let status = cli().args(["run", "--config"]).arg(&cfg_path).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
    let status = cli().args(["run", "--time-limit=-1"]).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn cli_reports_crashes_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.json"), BROKEN).unwrap();
    let cfg = serde_json::json!({
        "instances": [{"path": "broken.json"}],
        "methods": [{"name": "Exact-Tra"}],
        "out_dir": "res"
    });
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let status = cli().args(["run", "--config"]).arg(&cfg_path).output().unwrap().status;
    assert_eq!(status.code(), Some(1));
}
