//! Test-only oracles. They use nothing but second-stage LP values and
//! plain enumeration, so they share no code path with the separation,
//! batching or averaging logic under test.

#![allow(dead_code)]

use lagbatch_core::instance::{second_stage_value, Scenario, SmipInstance, SparseMatrix};
use lagbatch_core::lab::{generate, FamilyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every binary x with `A x = b`.
pub fn binary_points(inst: &SmipInstance) -> Vec<Vec<f64>> {
    let a = inst.a.to_dense();
    (0u32..1 << inst.n1)
        .map(|m| (0..inst.n1).map(|j| f64::from((m >> j) & 1)).collect::<Vec<_>>())
        .filter(|x| {
            a.iter().zip(&inst.b).all(|(row, b)| {
                let lhs: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum();
                (lhs - b).abs() <= 1e-9
            })
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// `f_s(x)` for every enumerated point, in `binary_points` order.
pub fn recourse_table(inst: &SmipInstance, s: usize) -> Vec<(Vec<f64>, f64)> {
    binary_points(inst)
        .into_iter()
        .map(|x| {
            let f = second_stage_value(inst, s, &x).unwrap();
            (x, f)
        })
        .collect()
}

/// `Qbar_s(pi, 1)` by enumeration over binary first stages.
pub fn qbar_enum(table: &[(Vec<f64>, f64)], pi: &[f64]) -> f64 {
    table
        .iter()
        .map(|(x, f)| dot(pi, x) + f)
        .fold(f64::INFINITY, f64::min)
}

/// Every point of `{-1, -0.5, 0, 0.5, 1}^n`.
pub fn grid(n: usize) -> Vec<Vec<f64>> {
    const LEVELS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                LEVELS.iter().map(move |&l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    out
}

/// Largest `Qbar(pi, 1) - pi.x - theta` over the grid points of the unit
/// box. Never exceeds the maximum over the whole box.
pub fn grid_max_violation(table: &[(Vec<f64>, f64)], x: &[f64], theta: f64) -> f64 {
    grid(x.len())
        .iter()
        .map(|pi| qbar_enum(table, pi) - dot(pi, x) - theta)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random instance with binary first stage and complete recourse through
/// one expensive slack column per row.
pub fn random_tiny(seed: u64) -> SmipInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n1 = rng.gen_range(1..=4);
    let m2 = rng.gen_range(1..=3);
    let core = rng.gen_range(1..=3);
    let n2 = core + m2;
    let ns = rng.gen_range(1..=3);
    let c: Vec<f64> = (0..n1).map(|_| rng.gen_range(0.0..2.0)).collect();
    let mut d: Vec<f64> = (0..core).map(|_| rng.gen_range(0.1..2.0)).collect();
    d.extend((0..m2).map(|_| 5.0));
    let mut weights: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    // Force an exact sum of one.
    let head: f64 = weights[..ns - 1].iter().sum();
    weights[ns - 1] = 1.0 - head;
    let scenarios = weights
        .into_iter()
        .map(|p| {
            let mut t = Vec::new();
            let mut w = Vec::new();
            for r in 0..m2 {
                for j in 0..n1 {
                    if rng.gen_bool(0.6) {
                        t.push((r, j, rng.gen_range(-2.0..2.0)));
                    }
                }
                for j in 0..core {
                    if rng.gen_bool(0.7) {
                        w.push((r, j, rng.gen_range(0.2..2.0)));
                    }
                }
                w.push((r, core + r, 1.0));
            }
            Scenario {
                probability: p,
                d: d.clone(),
                t: SparseMatrix::new(m2, n1, t),
                w: SparseMatrix::new(m2, n2, w),
                h: (0..m2).map(|_| rng.gen_range(-1.0..3.0)).collect(),
            }
        })
        .collect();
    SmipInstance {
        name: format!("tiny-{seed}"),
        n1,
        p1: n1,
        c,
        a: SparseMatrix::zeros(0, n1),
        b: vec![],
        x_upper: vec![1.0; n1],
        scenarios,
    }
}

/// Small generated instances from all three families.
pub fn small_family_suite() -> Vec<SmipInstance> {
    [
        FamilyParams::sslp(3, 4, 3, 1),
        FamilyParams::sslpv(3, 4, 3, 2),
        FamilyParams::smcf(3, 4, 2, 3, 3),
        FamilyParams::sslp(4, 5, 4, 4),
    ]
    .iter()
    .map(|p| generate(p).unwrap())
    .collect()
}
