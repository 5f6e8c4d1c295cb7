//! Two-scenario problems with closed-form recourse, for checking the
//! bound-improvement triangle inequality by brute force.
//!
//! Scenario `i` has `f_i(x) = p_i sum_r d_r max(0, h_r - t_r.x)`. Its
//! Benders cuts are all `p_i sum_r l_r (h_r - t_r.x)` with `l_r` in
//! `{0, d_r}`, the full convex envelope. Lagrangian cuts
//! `theta_i >= Qbar_i(pi) - pi.x` use the binary first stage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, grid};

/// `a.x + b`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct Recourse {
    pub p: f64,
    pub d: Vec<f64>,
    pub t: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

impl Recourse {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.p
            * self
                .d
                .iter()
                .zip(&self.t)
                .zip(&self.h)
                .map(|((d, t), h)| d * (h - dot(t, x)).max(0.0))
                .sum::<f64>()
    }

    pub fn benders_pieces(&self, n: usize) -> Vec<Affine> {
        let m = self.d.len();
        (0u32..1 << m)
            .map(|mask| {
                let mut a = vec![0.0; n];
                let mut b = 0.0;
                for r in (0..m).filter(|r| (mask >> r) & 1 == 1) {
                    let l = self.p * self.d[r];
                    b += l * self.h[r];
                    for (aj, tj) in a.iter_mut().zip(&self.t[r]) {
                        *aj -= l * tj;
                    }
                }
                Affine { a, b }
            })
            .collect()
    }

    /// `min over binary x of pi.x + f(x)`.
    pub fn qbar(&self, pi: &[f64]) -> f64 {
        let n = pi.len();
        (0u32..1 << n)
            .map(|mask| {
                let x: Vec<f64> = (0..n).map(|j| f64::from((mask >> j) & 1)).collect();
                dot(pi, &x) + self.value(&x)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn lagrangian_piece(&self, pi: &[f64]) -> Affine {
        Affine {
            a: pi.iter().map(|v| -v).collect(),
            b: self.qbar(pi),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoScenario {
    pub c: Vec<f64>,
    pub scen: [Recourse; 2],
}

pub fn random_two_scenario(seed: u64) -> TwoScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let mut recourse = || {
        let m = rng.gen_range(1..=2);
        Recourse {
            p: 0.5,
            d: (0..m).map(|_| rng.gen_range(0.5..2.0)).collect(),
            t: (0..m).map(|_| (0..n).map(|_| rng.gen_range(-0.5..2.0)).collect()).collect(),
            h: (0..m).map(|_| rng.gen_range(0.2..2.0)).collect(),
        }
    };
    let scen = [recourse(), recourse()];
    TwoScenario {
        c: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
        scen,
    }
}

/// Solves the square system `m z = r` by Gaussian elimination; `None` when
/// it is singular.
fn solve_square(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let k = r.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in 0..k {
            if row != col {
                let f = m[row][col] / m[col][col];
                if f != 0.0 {
                    for j in col..k {
                        m[row][j] -= f * m[col][j];
                    }
                    r[row] -= f * r[col];
                }
            }
        }
    }
    Some((0..k).map(|i| r[i] / m[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// `min c.x + max pieces1(x) + max pieces2(x)` over the unit box, by
/// enumerating every vertex of the epigraph polyhedron in `(x, t1, t2)`.
pub fn master_value(c: &[f64], pieces: [&[Affine]; 2]) -> f64 {
    let n = c.len();
    let dim = n + 2;
    // Rows `g.z >= r`.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..n {
        let mut g = vec![0.0; dim];
        g[j] = 1.0;
        rows.push((g.clone(), 0.0));
        g[j] = -1.0;
        rows.push((g, -1.0));
    }
    for (i, ps) in pieces.iter().enumerate() {
        for p in ps.iter() {
            let mut g: Vec<f64> = p.a.iter().map(|v| -v).collect();
            g.extend([0.0, 0.0]);
            g[n + i] = 1.0;
            rows.push((g, p.b));
        }
    }
    let mut best = f64::INFINITY;
    combinations(rows.len(), dim, &mut |idx| {
        let m: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let r: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
        let Some(z) = solve_square(m, r) else { return };
        if rows.iter().all(|(g, r)| dot(g, &z) >= r - 1e-9) {
            best = best.min(dot(c, &z[..n]) + z[n] + z[n + 1]);
        }
    });
    best
}

/// `(d(sce1, sce2), d(sce1) + d(sce2))` with coefficients on the grid.
pub fn bound_improvements(prob: &TwoScenario) -> (f64, f64) {
    let n = prob.c.len();
    let benders: Vec<Vec<Affine>> = prob.scen.iter().map(|s| s.benders_pieces(n)).collect();
    let value = |extra: [Option<&Affine>; 2]| {
        let p: Vec<Vec<Affine>> = (0..2)
            .map(|i| benders[i].iter().cloned().chain(extra[i].cloned()).collect())
            .collect();
        master_value(&prob.c, [&p[0], &p[1]])
    };
    let base = value([None, None]);
    let pts = grid(n);
    let cuts: Vec<[Affine; 2]> = pts
        .iter()
        .map(|pi| [prob.scen[0].lagrangian_piece(pi), prob.scen[1].lagrangian_piece(pi)])
        .collect();
    let argmax = |score: &dyn Fn(usize) -> f64| {
        (0..pts.len()).fold((0, f64::NEG_INFINITY), |acc, k| {
            let v = score(k);
            if v > acc.1 { (k, v) } else { acc }
        })
    };
    // Both coefficients chosen against the Benders-only master.
    let (k1, _) = argmax(&|k| value([Some(&cuts[k][0]), None]));
    let (k2, _) = argmax(&|k| value([None, Some(&cuts[k][1])]));
    let single = value([Some(&cuts[k1][0]), Some(&cuts[k2][1])]) - base;
    // The second batch sees the first batch's cut.
    let (_, after) = argmax(&|k| value([Some(&cuts[k1][0]), Some(&cuts[k][1])]));
    (single, after - base)
}

