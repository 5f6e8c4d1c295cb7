//! Summary tables, profile data files and averaged-cut statistics, all
//! derived from a results directory and nothing else.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lagbatch_core::averaged::{quality_stats, stats_csv, QualityStats, StrengthRecord};
use lagbatch_core::benders::SolveStatus;

use crate::config::parse_method_name;
use crate::error::{BenchError, Result};
use crate::experiment::{file_stem, Results};
use crate::profile::{gap_closed_profile, to_dat, LabeledTrajectory, ProfilePoint};

pub const SUMMARY_COLUMNS: [&str; 5] = ["# solved", "Avg soln time", "Avg gap (%)", "Avg B&C time", "Avg # nodes"];

/// One line of the summary table. Averages skip crashed runs; `None`
/// when nothing is left to average.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub runs: usize,
    pub solved: usize,
    pub avg_time: Option<f64>,
    /// Over runs that were not solved within the limit.
    pub avg_gap: Option<f64>,
    pub avg_bc_time: Option<f64>,
    pub avg_nodes: Option<f64>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn summary_rows(results: &Results) -> Vec<SummaryRow> {
    let m = &results.manifest;
    let limit = m.time_limit;
    m.methods
        .iter()
        .map(|spec| {
            let label = spec.label();
            let runs: Vec<_> = m.runs.iter().filter(|r| r.method == label).collect();
            let (mut times, mut gaps, mut bc, mut nodes) = (vec![], vec![], vec![], vec![]);
            let mut solved = 0;
            for r in &runs {
                let (Some(solve), Some(run_s)) = (&r.solve, r.run_seconds) else { continue };
                let total = run_s + solve.seconds;
                if solve.status == SolveStatus::Optimal && total <= limit {
                    solved += 1;
                } else {
                    gaps.push(solve.gap_percent());
                }
                times.push(total.min(limit));
                bc.push(solve.seconds);
                nodes.push(solve.nodes as f64);
            }
            SummaryRow {
                method: label,
                runs: runs.len(),
                solved,
                avg_time: mean(&times),
                avg_gap: mean(&gaps),
                avg_bc_time: mean(&bc),
                avg_nodes: mean(&nodes),
            }
        })
        .collect()
}

fn cell(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

fn summary_cells(rows: &[SummaryRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.method.clone(),
                format!("{}/{}", r.solved, r.runs),
                cell(r.avg_time, 3),
                cell(r.avg_gap, 2),
                cell(r.avg_bc_time, 3),
                cell(r.avg_nodes, 1),
            ]
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("method,{}\n", SUMMARY_COLUMNS.join(","));
    for cells in summary_cells(rows) {
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Same table with padded columns for reading in a terminal.
pub fn summary_text(rows: &[SummaryRow]) -> String {
    let header: Vec<String> = std::iter::once("method".to_string())
        .chain(SUMMARY_COLUMNS.iter().map(|s| s.to_string()))
        .collect();
    let body = summary_cells(rows);
    let widths: Vec<usize> = (0..header.len())
        .map(|j| body.iter().chain([&header]).map(|r| r[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&body) {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (c, w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

pub fn load_trajectories(results: &Results) -> Result<Vec<LabeledTrajectory>> {
    let mut out = Vec::new();
    for r in &results.manifest.runs {
        if let Some(t) = results.trajectory(r)? {
            out.push(LabeledTrajectory::from_trajectory(&r.instance, &r.method, &t));
        }
    }
    Ok(out)
}

/// One profile set per gamma, in the order given.
pub fn profiles(results: &Results, gammas: &[f64]) -> Result<Vec<(f64, BTreeMap<String, Vec<ProfilePoint>>)>> {
    let runs = load_trajectories(results)?;
    gammas.iter().map(|&g| Ok((g, gap_closed_profile(&runs, g)?))).collect()
}

fn profile_files(profiles: &[(f64, BTreeMap<String, Vec<ProfilePoint>>)]) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for (gamma, by_method) in profiles {
        for (method, curve) in by_method {
            files.push((format!("profiles/{}_gamma{gamma}.dat", file_stem(method)), to_dat(curve)));
        }
    }
    files
}

/// Averaged-cut strength grouped by instance family and batch fraction.
pub fn averaged_stats(results: &Results) -> Result<Vec<(String, f64, QualityStats)>> {
    let m = &results.manifest;
    let mut groups: BTreeMap<(String, String), (f64, f64, Vec<StrengthRecord>)> = BTreeMap::new();
    for r in &m.runs {
        let Some(spec) = m.method(&r.method) else { continue };
        if r.strength.is_none() {
            continue;
        }
        let (_, beta) = parse_method_name(&spec.name)?;
        let delta = spec.run_config(m.seed, m.clock, m.time_limit)?.delta;
        let entry = groups
            .entry((r.family.clone(), format!("{beta}")))
            .or_insert_with(|| (beta, delta, Vec::new()));
        entry.2.extend(results.strength(r)?);
    }
    let mut rows = Vec::new();
    for ((family, _), (beta, delta, records)) in groups {
        if !records.is_empty() {
            rows.push((family, beta, quality_stats(&records, delta)?));
        }
    }
    Ok(rows)
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (rel, text) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| BenchError::io(parent, e))?;
        }
        std::fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Writes only the profile data files.
pub fn emit_profiles(results: &Results, gammas: &[f64], dir: &Path) -> Result<Vec<PathBuf>> {
    let files = profile_files(&profiles(results, gammas)?);
    write_all(dir, &files)
}

/// Writes `summary.csv`, `summary.txt`, `averaged_stats.csv` and one
/// profile file per method and gamma. Everything is computed before the
/// first write, so a failure leaves no partial report behind.
pub fn emit_report(results: &Results, dir: &Path) -> Result<Vec<PathBuf>> {
    let m = &results.manifest;
    if m.runs.is_empty() {
        return Err(BenchError::Empty("the manifest lists no runs"));
    }
    if m.runs.iter().all(|r| r.trajectory.is_none()) {
        return Err(BenchError::Empty("every run crashed"));
    }
    let rows = summary_rows(results);
    let mut files = vec![
        ("summary.csv".to_string(), summary_csv(&rows)),
        ("summary.txt".to_string(), summary_text(&rows)),
        ("averaged_stats.csv".to_string(), stats_csv(&averaged_stats(results)?)),
    ];
    files.extend(profile_files(&profiles(results, &m.gammas)?));
    write_all(dir, &files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, gap: Option<f64>) -> SummaryRow {
        SummaryRow {
            method: method.into(),
            runs: 2,
            solved: 1,
            avg_time: Some(1.5),
            avg_gap: gap,
            avg_bc_time: Some(0.25),
            avg_nodes: Some(3.0),
        }
    }

    #[test]
    fn csv_layout() {
        let csv = summary_csv(&[row("Exact-Tra", None), row("Exact-Lbb(0.5)", Some(2.0))]);
        assert_eq!(
            csv,
            "method,# solved,Avg soln time,Avg gap (%),Avg B&C time,Avg # nodes\n\
             Exact-Tra,1/2,1.500,-,0.250,3.0\n\
             Exact-Lbb(0.5),1/2,1.500,2.00,0.250,3.0\n"
        );
    }

    #[test]
    fn text_columns_line_up() {
        let text = summary_text(&[row("Exact-Tra", None), row("RstrMIP-Lbb(0.25)", Some(12.5))]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
    }
}
