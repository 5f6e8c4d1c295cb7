//! Reference bounds computed without any decomposition.

use lagbatch_milp::{LpStatus, MipOptions, MipStatus};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::instance::{extensive_form, second_stage_value, SmipInstance};
use crate::solver;

/// Largest extensive form the oracle will build.
const MAX_EXTENSIVE_COLS: usize = 2000;
const MAX_EXTENSIVE_ROWS: usize = 2000;
const MAX_ENUM_N1: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBounds {
    pub mip_opt: f64,
    pub lp_relax: f64,
    /// Present for pure-binary first stages with `n1 <= 12`.
    pub enum_opt: Option<f64>,
}

/// Every binary point satisfying the first-stage rows, in counting order.
/// Requires a pure-binary first stage with `n1 <= 12`.
pub fn feasible_binary_points(inst: &SmipInstance) -> Result<Vec<Vec<f64>>> {
    if !inst.is_pure_binary() {
        return Err(CoreError::ScaleGuard("enumeration: first stage is not pure binary".into()));
    }
    if inst.n1 > MAX_ENUM_N1 {
        return Err(CoreError::ScaleGuard(format!(
            "enumeration limit: n1={} (max {MAX_ENUM_N1})",
            inst.n1
        )));
    }
    Ok((0u32..1 << inst.n1)
        .map(|mask| (0..inst.n1).map(|j| f64::from((mask >> j) & 1)).collect::<Vec<f64>>())
        .filter(|x| inst.check_first_stage(x).is_ok())
        .collect())
}

pub fn brute_force_bounds(inst: &SmipInstance) -> Result<OracleBounds> {
    let model = extensive_form(inst)?;
    if model.num_cols() > MAX_EXTENSIVE_COLS || model.num_rows() > MAX_EXTENSIVE_ROWS {
        return Err(CoreError::ScaleGuard(format!(
            "oracle limit: extensive form has {} columns and {} rows (max {MAX_EXTENSIVE_COLS} / {MAX_EXTENSIVE_ROWS})",
            model.num_cols(),
            model.num_rows()
        )));
    }
    let lp = solver::lp(&model.relaxed())?;
    if lp.status != LpStatus::Optimal {
        return Err(CoreError::SolverStatus(format!("{:?} on extensive relaxation", lp.status)));
    }
    let mip = solver::milp(&model, &MipOptions::default())?;
    if mip.status != MipStatus::Optimal {
        return Err(CoreError::SolverStatus(format!("{:?} on extensive form", mip.status)));
    }
    let enum_opt = if inst.is_pure_binary() && inst.n1 <= MAX_ENUM_N1 {
        let mut best = f64::INFINITY;
        for x in feasible_binary_points(inst)? {
            let mut v = inst.first_stage_cost(&x);
            for (s, sc) in inst.scenarios.iter().enumerate() {
                v += sc.probability * second_stage_value(inst, s, &x)?;
            }
            best = best.min(v);
        }
        Some(best)
    } else {
        None
    };
    Ok(OracleBounds {
        mip_opt: mip.value,
        lp_relax: lp.objective,
        enum_opt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixture_t1;

    #[test]
    fn t1_bounds() {
        let b = brute_force_bounds(&fixture_t1()).unwrap();
        assert!((b.mip_opt - 1.5).abs() < 1e-12);
        assert!((b.lp_relax - 1.5).abs() < 1e-12);
        assert!((b.enum_opt.unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn free_second_stage_gives_zero() {
        let mut inst = fixture_t1();
        for sc in &mut inst.scenarios {
            sc.h = vec![-1.0];
        }
        let b = brute_force_bounds(&inst).unwrap();
        assert_eq!((b.mip_opt, b.lp_relax, b.enum_opt), (0.0, 0.0, Some(0.0)));
    }
}
