//! JSON persistence.
//!
//! ```text
//! { "name"?, "n1", "p1", "c", "A": {"rows", "cols", "triplets": [[r, c, v], ...]},
//!   "b", "x_ub"?: [number | null, ...],
//!   "scenarios": [{ "p", "d", "T": {"triplets", "rows"?, "cols"?}, "W": {...},
//!                   "h", "senses"?: [">=" | "<=" | "=", ...] }] }
//! ```
//!
//! A `null` upper bound means unbounded. Rows with `<=` or `=` senses are
//! rewritten into `>=` rows when loading. Numbers are written in shortest
//! round-trip form, so a save/load cycle reproduces every value exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::instance::{normalize_senses, InputSense, Scenario, SmipInstance, SparseMatrix};

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    triplets: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    p: f64,
    d: Vec<f64>,
    #[serde(rename = "T")]
    t: MatrixFile,
    #[serde(rename = "W")]
    w: MatrixFile,
    h: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    senses: Option<Vec<InputSense>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
    n1: usize,
    p1: usize,
    c: Vec<f64>,
    #[serde(rename = "A")]
    a: MatrixFile,
    b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_ub: Option<Vec<Option<f64>>>,
    scenarios: Vec<ScenarioFile>,
}

fn matrix_out(m: &SparseMatrix) -> MatrixFile {
    MatrixFile {
        rows: Some(m.rows),
        cols: Some(m.cols),
        triplets: m.triplets.clone(),
    }
}

fn matrix_in(m: MatrixFile, rows: usize, cols: usize) -> SparseMatrix {
    SparseMatrix::new(m.rows.unwrap_or(rows), m.cols.unwrap_or(cols), m.triplets)
}

pub fn to_json_string(inst: &SmipInstance) -> String {
    let file = InstanceFile {
        name: inst.name.clone(),
        n1: inst.n1,
        p1: inst.p1,
        c: inst.c.clone(),
        a: matrix_out(&inst.a),
        b: inst.b.clone(),
        x_ub: inst
            .x_upper
            .iter()
            .any(|u| u.is_finite())
            .then(|| inst.x_upper.iter().map(|&u| u.is_finite().then_some(u)).collect()),
        scenarios: inst
            .scenarios
            .iter()
            .map(|sc| ScenarioFile {
                p: sc.probability,
                d: sc.d.clone(),
                t: matrix_out(&sc.t),
                w: matrix_out(&sc.w),
                h: sc.h.clone(),
                senses: None,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("instance data serializes")
}

/// Parses an instance. `origin` names the source in error messages. The
/// result is not validated; see [`crate::instance::validate_instance`].
pub fn from_json_str(text: &str, origin: &str) -> Result<SmipInstance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| CoreError::Schema {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n1 = file.n1;
    let mut scenarios = Vec::with_capacity(file.scenarios.len());
    for (k, sc) in file.scenarios.into_iter().enumerate() {
        let rows = sc.h.len();
        let n2 = sc.d.len();
        let mut t = matrix_in(sc.t, rows, n1);
        let mut w = matrix_in(sc.w, rows, n2);
        let mut h = sc.h;
        if let Some(senses) = sc.senses {
            (t, w, h) = normalize_senses(&t, &w, &h, &senses).map_err(|e| CoreError::Schema {
                path: origin.to_string(),
                line: 0,
                column: 0,
                message: format!("scenarios[{k}].senses: {e}"),
            })?;
        }
        scenarios.push(Scenario {
            probability: sc.p,
            d: sc.d,
            t,
            w,
            h,
        });
    }
    let x_upper = match file.x_ub {
        Some(v) => v.into_iter().map(|u| u.unwrap_or(f64::INFINITY)).collect(),
        None => vec![f64::INFINITY; n1],
    };
    Ok(SmipInstance {
        name: file.name,
        n1,
        p1: file.p1,
        c: file.c,
        a: matrix_in(file.a, file.b.len(), n1),
        b: file.b,
        x_upper,
        scenarios,
    })
}

pub fn save(inst: &SmipInstance, path: &Path) -> Result<()> {
    fs::write(path, to_json_string(inst)).map_err(|source| CoreError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load(path: &Path) -> Result<SmipInstance> {
    let text = fs::read_to_string(path).map_err(|source| CoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json_str(&text, &path.display().to_string())
}
