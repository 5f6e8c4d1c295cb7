//! Export in the common LP file syntax, for debugging with external solvers.

use std::fmt::Write;

use crate::model::{MilpModel, RowSense};

fn col_name(model: &MilpModel, j: usize) -> String {
    model
        .names
        .get(j)
        .cloned()
        .unwrap_or_else(|| format!("x{j}"))
}

fn write_terms(out: &mut String, model: &MilpModel, coeffs: &[f64]) {
    let mut first = true;
    for (j, &a) in coeffs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { "-" } else { "+" };
        if first {
            if a < 0.0 {
                out.push_str(" -");
            }
            first = false;
        } else {
            let _ = write!(out, " {sign}");
        }
        let _ = write!(out, " {} {}", a.abs(), col_name(model, j));
    }
    if first {
        out.push_str(" 0");
    }
}

pub fn to_lp_string(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, model, &model.objective);
    out.push_str("\nSubject To\n");
    for (i, row) in model.rows.iter().enumerate() {
        let _ = write!(out, " r{i}:");
        write_terms(&mut out, model, &row.coeffs);
        let op = match row.sense {
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", row.rhs);
    }
    out.push_str("Bounds\n");
    for j in 0..model.num_cols() {
        let (lo, hi) = (model.lower[j], model.upper[j]);
        let name = col_name(model, j);
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            (true, true) => {
                let _ = writeln!(out, " {lo} <= {name} <= {hi}");
            }
            (true, false) => {
                let _ = writeln!(out, " {name} >= {lo}");
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {hi}");
            }
        }
    }
    let ints: Vec<String> = (0..model.num_cols())
        .filter(|&j| model.integer[j])
        .map(|j| col_name(model, j))
        .collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for name in ints {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    out
}
