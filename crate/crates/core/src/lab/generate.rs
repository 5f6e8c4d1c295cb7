//! Seeded generators for server-location and network-design families.
//!
//! Every second stage has high-cost slack columns, so any first-stage
//! point has a feasible recourse.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::instance::{Scenario, SmipInstance, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Server location with binary client availability.
    Sslp,
    /// Server location with continuous client demand levels.
    Sslpv,
    /// Multi-commodity network design.
    Smcf,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Sslp => "sslp",
            Family::Sslpv => "sslpv",
            Family::Smcf => "smcf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Small enough for exhaustive checks.
    #[default]
    Desk,
    /// Published benchmark dimensions.
    Benchmark,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub family: Family,
    #[serde(default)]
    pub sites: usize,
    #[serde(default)]
    pub clients: usize,
    #[serde(default)]
    pub nodes: usize,
    #[serde(default)]
    pub edges: usize,
    #[serde(default)]
    pub commodities: usize,
    pub scenarios: usize,
    pub seed: u64,
    #[serde(default)]
    pub preset: Preset,
}

/// Limits of the desk preset.
pub const DESK_MAX_N1: usize = 10;
pub const DESK_MAX_SCENARIOS: usize = 20;
pub const DESK_MAX_N2: usize = 60;

const BENCHMARK_SSLP: [(usize, usize); 4] = [(40, 50), (30, 70), (20, 100), (50, 40)];

// Cost ranges. Overflow and unmet-demand penalties dominate every regular
// cost so slack is used only when capacity is missing.
const SITE_COST: (f64, f64) = (1.0, 3.0);
const ASSIGN_COST: (f64, f64) = (0.1, 1.0);
const CLIENT_LOAD: (f64, f64) = (0.5, 1.5);
const OVERFLOW_PENALTY: f64 = 2.0;
const AVAILABILITY: f64 = 0.7;
const EDGE_COST: (f64, f64) = (1.0, 3.0);
const FLOW_COST: (f64, f64) = (0.1, 0.5);
const DEMAND: (f64, f64) = (0.5, 1.5);
const UNMET_PENALTY: f64 = 5.0;

impl FamilyParams {
    pub fn sslp(sites: usize, clients: usize, scenarios: usize, seed: u64) -> Self {
        FamilyParams {
            family: Family::Sslp,
            sites,
            clients,
            nodes: 0,
            edges: 0,
            commodities: 0,
            scenarios,
            seed,
            preset: Preset::Desk,
        }
    }

    pub fn sslpv(sites: usize, clients: usize, scenarios: usize, seed: u64) -> Self {
        FamilyParams {
            family: Family::Sslpv,
            ..Self::sslp(sites, clients, scenarios, seed)
        }
    }

    pub fn smcf(nodes: usize, edges: usize, commodities: usize, scenarios: usize, seed: u64) -> Self {
        FamilyParams {
            family: Family::Smcf,
            sites: 0,
            clients: 0,
            nodes,
            edges,
            commodities,
            scenarios,
            seed,
            preset: Preset::Desk,
        }
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.preset = preset;
        self
    }

    /// `(n1, n2, m2)` of the generated instance.
    pub fn dims(&self) -> (usize, usize, usize) {
        match self.family {
            Family::Sslp | Family::Sslpv => (
                self.sites,
                self.sites * self.clients + self.sites,
                self.sites + self.clients,
            ),
            Family::Smcf => (
                self.edges,
                self.edges * self.commodities + self.commodities,
                self.nodes * self.commodities + self.edges * self.commodities + self.edges,
            ),
        }
    }

    pub fn label(&self) -> String {
        match self.family {
            Family::Sslp | Family::Sslpv => format!(
                "{}-{}-{}-s{}-seed{}",
                self.family.as_str(),
                self.sites,
                self.clients,
                self.scenarios,
                self.seed
            ),
            Family::Smcf => format!(
                "smcf-{}-{}-{}-s{}-seed{}",
                self.nodes, self.edges, self.commodities, self.scenarios, self.seed
            ),
        }
    }

    pub fn check(&self) -> Result<()> {
        let (n1, n2, _) = self.dims();
        if self.scenarios == 0 || n1 == 0 {
            return Err(CoreError::Config(format!("{}: empty dimensions", self.label())));
        }
        match self.family {
            Family::Sslp | Family::Sslpv if self.clients == 0 => {
                return Err(CoreError::Config("at least one client is needed".into()))
            }
            Family::Smcf => {
                if self.nodes < 2 || self.commodities == 0 {
                    return Err(CoreError::Config("need >= 2 nodes and >= 1 commodity".into()));
                }
                if self.edges < self.nodes || self.edges > self.nodes * (self.nodes - 1) {
                    return Err(CoreError::Config(format!(
                        "edges must lie in [{}, {}] for {} nodes",
                        self.nodes,
                        self.nodes * (self.nodes - 1),
                        self.nodes
                    )));
                }
            }
            _ => {}
        }
        match self.preset {
            Preset::Desk => {
                if n1 > DESK_MAX_N1 || self.scenarios > DESK_MAX_SCENARIOS || n2 > DESK_MAX_N2 {
                    return Err(CoreError::ScaleGuard(format!(
                        "desk preset: n1={n1} (max {DESK_MAX_N1}), |S|={} (max {DESK_MAX_SCENARIOS}), n2={n2} (max {DESK_MAX_N2})",
                        self.scenarios
                    )));
                }
            }
            Preset::Benchmark => {
                let ok = match self.family {
                    Family::Sslp | Family::Sslpv => {
                        BENCHMARK_SSLP.contains(&(self.sites, self.clients))
                            && matches!(self.scenarios, 50 | 200)
                    }
                    Family::Smcf => {
                        (self.nodes, self.edges, self.commodities, self.scenarios) == (10, 60, 10, 500)
                    }
                };
                if !ok {
                    return Err(CoreError::ScaleGuard(format!(
                        "benchmark preset: {} is not a benchmark configuration",
                        self.label()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds a seeded instance of the requested family.
pub fn generate(params: &FamilyParams) -> Result<SmipInstance> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut inst = match params.family {
        Family::Sslp | Family::Sslpv => server_location(params, &mut rng),
        Family::Smcf => network_design(params, &mut rng),
    };
    inst.name = params.label();
    Ok(inst)
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.gen_range(lo..hi)
}

fn server_location(p: &FamilyParams, rng: &mut ChaCha8Rng) -> SmipInstance {
    let (sites, clients) = (p.sites, p.clients);
    let (n1, n2, m2) = p.dims();
    let c: Vec<f64> = (0..sites).map(|_| uniform(rng, SITE_COST)).collect();
    let load: Vec<Vec<f64>> = (0..clients)
        .map(|_| (0..sites).map(|_| uniform(rng, CLIENT_LOAD)).collect())
        .collect();
    let capacity = 1.5 * clients as f64 / sites as f64;
    let assign: Vec<Vec<f64>> = (0..clients)
        .map(|_| (0..sites).map(|_| uniform(rng, ASSIGN_COST)).collect())
        .collect();
    // y_ij at column i * sites + j; overflow z_j after them.
    let y = |i: usize, j: usize| i * sites + j;
    let z = |j: usize| clients * sites + j;
    let mut d = vec![0.0; n2];
    for i in 0..clients {
        for j in 0..sites {
            d[y(i, j)] = assign[i][j];
        }
    }
    for j in 0..sites {
        d[z(j)] = OVERFLOW_PENALTY;
    }
    // Rows: clients first (sum_j y_ij >= h_i), then site capacities
    // (u x_j + z_j - sum_i q_ij y_ij >= 0).
    let mut w = Vec::new();
    for i in 0..clients {
        for j in 0..sites {
            w.push((i, y(i, j), 1.0));
        }
    }
    let mut t = Vec::new();
    for j in 0..sites {
        let r = clients + j;
        t.push((r, j, capacity));
        w.push((r, z(j), 1.0));
        for i in 0..clients {
            w.push((r, y(i, j), -load[i][j]));
        }
    }
    let w = SparseMatrix::new(m2, n2, w);
    let t = SparseMatrix::new(m2, n1, t);
    let prob = 1.0 / p.scenarios as f64;
    let scenarios = (0..p.scenarios)
        .map(|_| {
            let mut h = vec![0.0; m2];
            for hi in h.iter_mut().take(clients) {
                let present = rng.gen_bool(AVAILABILITY);
                *hi = match p.family {
                    Family::Sslpv => {
                        let level = uniform(rng, (0.5, 1.5));
                        if present {
                            level
                        } else {
                            0.0
                        }
                    }
                    _ => f64::from(u8::from(present)),
                };
            }
            Scenario {
                probability: prob,
                d: d.clone(),
                t: t.clone(),
                w: w.clone(),
                h,
            }
        })
        .collect();
    SmipInstance {
        name: String::new(),
        n1,
        p1: n1,
        c,
        a: SparseMatrix::zeros(0, n1),
        b: vec![],
        x_upper: vec![1.0; n1],
        scenarios,
    }
}

fn network_design(p: &FamilyParams, rng: &mut ChaCha8Rng) -> SmipInstance {
    let (nodes, edges, k) = (p.nodes, p.edges, p.commodities);
    let (n1, n2, m2) = p.dims();
    // A directed cycle keeps every pair connected; the rest is random.
    let mut arcs: Vec<(usize, usize)> = (0..nodes).map(|v| (v, (v + 1) % nodes)).collect();
    let mut extra: Vec<(usize, usize)> = (0..nodes)
        .flat_map(|u| (0..nodes).map(move |v| (u, v)))
        .filter(|&(u, v)| u != v && v != (u + 1) % nodes)
        .collect();
    extra.shuffle(rng);
    arcs.extend(extra.into_iter().take(edges - nodes));

    let c: Vec<f64> = (0..edges).map(|_| uniform(rng, EDGE_COST)).collect();
    let flow_cost: Vec<f64> = (0..edges).map(|_| uniform(rng, FLOW_COST)).collect();
    let pairs: Vec<(usize, usize)> = (0..k)
        .map(|_| {
            let o = rng.gen_range(0..nodes);
            let dst = (o + rng.gen_range(1..nodes)) % nodes;
            (o, dst)
        })
        .collect();
    let base: Vec<f64> = (0..k).map(|_| uniform(rng, DEMAND)).collect();
    let total: f64 = base.iter().sum();
    let cap: Vec<f64> = (0..edges).map(|_| total * rng.gen_range(0.3..0.8)).collect();

    // y_ek at column e * k + q; unmet demand u_q after them.
    let y = |e: usize, q: usize| e * k + q;
    let u = |q: usize| edges * k + q;
    let mut d = vec![0.0; n2];
    for e in 0..edges {
        for q in 0..k {
            d[y(e, q)] = flow_cost[e];
        }
    }
    for q in 0..k {
        d[u(q)] = UNMET_PENALTY;
    }
    // Rows: conservation (node, commodity) as net inflow >= requirement,
    // then linking y_ek <= D_k x_e, then capacity sum_k y_ek <= cap_e x_e.
    let cons = |v: usize, q: usize| v * k + q;
    let link = |e: usize, q: usize| nodes * k + e * k + q;
    let capr = |e: usize| nodes * k + edges * k + e;
    let mut w = Vec::new();
    for (e, &(from, to)) in arcs.iter().enumerate() {
        for q in 0..k {
            w.push((cons(to, q), y(e, q), 1.0));
            w.push((cons(from, q), y(e, q), -1.0));
            w.push((link(e, q), y(e, q), -1.0));
            w.push((capr(e), y(e, q), -1.0));
        }
    }
    for (q, &(_, dst)) in pairs.iter().enumerate() {
        w.push((cons(dst, q), u(q), 1.0));
    }
    let w = SparseMatrix::new(m2, n2, w);
    let prob = 1.0 / p.scenarios as f64;
    let scenarios = (0..p.scenarios)
        .map(|_| {
            let demand: Vec<f64> = base.iter().map(|b| b * rng.gen_range(0.5..1.5)).collect();
            let mut h = vec![0.0; m2];
            for (q, &(o, dst)) in pairs.iter().enumerate() {
                h[cons(dst, q)] = demand[q];
                h[cons(o, q)] = -demand[q];
            }
            let mut t = Vec::new();
            for e in 0..edges {
                for q in 0..k {
                    t.push((link(e, q), e, demand[q]));
                }
                t.push((capr(e), e, cap[e]));
            }
            Scenario {
                probability: prob,
                d: d.clone(),
                t: SparseMatrix::new(m2, n1, t),
                w: w.clone(),
                h,
            }
        })
        .collect();
    SmipInstance {
        name: String::new(),
        n1,
        p1: n1,
        c,
        a: SparseMatrix::zeros(0, n1),
        b: vec![],
        x_upper: vec![1.0; n1],
        scenarios,
    }
}
