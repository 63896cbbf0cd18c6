//! Numerical embedding search.
//!
//! Minimizes `E(X) = sum_e (|x_u - x_v|^2 - w_e^2)^2` with a
//! Levenberg-Marquardt iteration whose linear systems are solved
//! matrix-free by preconditioned conjugate gradients. A restart starts either
//! from a uniform random cube or from a greedy trilateration build-up that
//! places one vertex at a time from its already placed neighbours.
//!
//! `EmbeddingFound` is a certificate (the embedding can be re-checked);
//! `NoEmbeddingFoundHeuristic` is evidence only.

mod buildup;
mod split;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadgets::RodCertificate;
use crate::graph::{Edge, Embedding, WeightedGraph};
use crate::witness::rng_stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Uniform in a cube of half-width `init_box`.
    UniformCube,
    /// Split off pieces hanging on two vertices, trilaterate what is left
    /// and glue the pieces back; then a global polish.
    Buildup,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Half-width of the initial cube; `None` means 1.5 x the longest edge.
    pub init_box: Option<f64>,
    pub success_residual: f64,
    pub fail_energy_floor: f64,
    pub seed: u64,
    pub init: InitStrategy,
    /// Stop once this many restarts succeeded.
    pub stop_after: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            restarts: 50,
            max_iters: 3000,
            init_box: None,
            success_residual: 1e-9,
            fail_energy_floor: 1e-6,
            seed: 0,
            init: InitStrategy::UniformCube,
            stop_after: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidTolerance("restarts must be at least 1".into()));
        }
        if !(self.success_residual > 0.0 && self.success_residual < self.fail_energy_floor) {
            return Err(Error::InvalidTolerance("need 0 < success_residual < fail_energy_floor".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    EmbeddingFound,
    NoEmbeddingFoundHeuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub best: Embedding,
    pub best_energy: f64,
    pub best_residual: f64,
    pub restarts: Vec<RestartOutcome>,
    pub successes: usize,
    pub verdict: Verdict,
    /// True when the best energy stayed above `fail_energy_floor`.
    pub above_energy_floor: bool,
}

impl SolveReport {
    pub fn energies(&self) -> Vec<f64> {
        self.restarts.iter().map(|r| r.energy).collect()
    }

    pub fn min_energy(&self) -> f64 {
        self.best_energy
    }
}

pub fn energy(g: &WeightedGraph, x: &Embedding) -> f64 {
    energy_flat(g.edges(), x.coords(), x.dim())
}

/// `sum_e 4 (|d|^2 - w^2) d` into `x_u` and its negation into `x_v`,
/// `d = x_u - x_v`.
pub fn energy_gradient(g: &WeightedGraph, x: &Embedding) -> Vec<f64> {
    let dim = x.dim();
    let c = x.coords();
    let mut grad = vec![0.0; c.len()];
    for e in g.edges() {
        let (a, b) = (e.u * dim, e.v * dim);
        let mut sq = 0.0;
        for k in 0..dim {
            let t = c[a + k] - c[b + k];
            sq += t * t;
        }
        let r = sq - e.len * e.len;
        for k in 0..dim {
            let t = 4.0 * r * (c[a + k] - c[b + k]);
            grad[a + k] += t;
            grad[b + k] -= t;
        }
    }
    grad
}

fn energy_flat(edges: &[Edge], c: &[f64], dim: usize) -> f64 {
    edges
        .iter()
        .map(|e| {
            let r = sq_dist(c, e.u, e.v, dim) - e.len * e.len;
            r * r
        })
        .sum()
}

pub(crate) fn max_deviation(edges: &[Edge], c: &[f64], dim: usize) -> f64 {
    edges
        .iter()
        .map(|e| (sq_dist(c, e.u, e.v, dim).sqrt() - e.len).abs())
        .fold(0.0, f64::max)
}

#[inline]
fn sq_dist(c: &[f64], u: usize, v: usize, dim: usize) -> f64 {
    let (a, b) = (u * dim, v * dim);
    (0..dim).map(|k| (c[a + k] - c[b + k]).powi(2)).sum()
}

pub(crate) struct LmOptions {
    pub(crate) max_iters: usize,
    /// Stop once every edge is within this of its length.
    pub(crate) target_deviation: f64,
}

pub(crate) struct LmOutcome {
    energy: f64,
    iterations: usize,
}

/// Levenberg-Marquardt on the squared-distance residuals. Vertices with
/// `free[v] == false` stay fixed. Energy never increases between iterates.
pub(crate) fn levenberg_marquardt(edges: &[Edge], dim: usize, x: &mut [f64], free: Option<&[bool]>, opts: &LmOptions) -> LmOutcome {
    let n = x.len() / dim;
    let is_free = |v: usize| free.is_none_or(|f| f[v]);
    let mut e_cur = energy_flat(edges, x, dim);
    let mut lambda: Option<f64> = None;
    let mut trial = vec![0.0; x.len()];
    let mut iterations = 0;
    let mut stalled = 0;
    while iterations < opts.max_iters {
        if max_deviation(edges, x, dim) <= opts.target_deviation {
            break;
        }
        iterations += 1;
        // gradient J^T r and Jacobi diagonal of J^T J
        let mut g = vec![0.0; x.len()];
        let mut diag = vec![0.0; x.len()];
        let mut deltas = vec![0.0; edges.len() * dim];
        for (i, e) in edges.iter().enumerate() {
            let (a, b) = (e.u * dim, e.v * dim);
            let mut sq = 0.0;
            for k in 0..dim {
                let t = x[a + k] - x[b + k];
                deltas[i * dim + k] = t;
                sq += t * t;
            }
            let r = sq - e.len * e.len;
            for k in 0..dim {
                let t = 2.0 * deltas[i * dim + k];
                if is_free(e.u) {
                    g[a + k] += t * r;
                    diag[a + k] += t * t;
                }
                if is_free(e.v) {
                    g[b + k] -= t * r;
                    diag[b + k] += t * t;
                }
            }
        }
        let lam = *lambda.get_or_insert_with(|| {
            let mean = diag.iter().sum::<f64>() / diag.len().max(1) as f64;
            1e-3 * mean.max(1e-12)
        });
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        let step = pcg_step(edges, dim, n, &deltas, &g, &diag, lam, &is_free);
        for i in 0..x.len() {
            trial[i] = x[i] + step[i];
        }
        let e_new = energy_flat(edges, &trial, dim);
        if e_new < e_cur {
            let rel = (e_cur - e_new) / e_cur.max(1e-300);
            x.copy_from_slice(&trial);
            e_cur = e_new;
            lambda = Some((lam / 3.0).max(1e-20));
            stalled = if rel < 1e-9 { stalled + 1 } else { 0 };
            if stalled > 20 {
                break;
            }
        } else {
            lambda = Some(lam * 4.0);
            if lam > 1e16 {
                break;
            }
        }
    }
    LmOutcome { energy: e_cur, iterations }
}

/// Solve `(J^T J + lambda I) p = -J^T r` by Jacobi-preconditioned CG.
#[allow(clippy::too_many_arguments)]
fn pcg_step(
    edges: &[Edge],
    dim: usize,
    n: usize,
    deltas: &[f64],
    g: &[f64],
    diag: &[f64],
    lambda: f64,
    is_free: &dyn Fn(usize) -> bool,
) -> Vec<f64> {
    let len = n * dim;
    let apply = |p: &[f64], out: &mut [f64]| {
        out.iter_mut().zip(p).for_each(|(o, v)| *o = lambda * v);
        for (i, e) in edges.iter().enumerate() {
            let (a, b) = (e.u * dim, e.v * dim);
            let mut s = 0.0;
            for k in 0..dim {
                s += 2.0 * deltas[i * dim + k] * (p[a + k] - p[b + k]);
            }
            for k in 0..dim {
                let t = 2.0 * deltas[i * dim + k] * s;
                if is_free(e.u) {
                    out[a + k] += t;
                }
                if is_free(e.v) {
                    out[b + k] -= t;
                }
            }
        }
    };
    let precond: Vec<f64> = diag.iter().map(|d| 1.0 / (d + lambda)).collect();
    let mut p = vec![0.0; len];
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
    let mut dir = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let r0 = rz.abs().sqrt();
    // inexact Newton: loose far from a root, tight near one
    let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let forcing = gnorm.sqrt().clamp(1e-6, 0.1);
    let tol = (r0 * forcing).max(1e-300);
    let mut q = vec![0.0; len];
    let cap = (len + 10).min(400);
    for _ in 0..cap {
        apply(&dir, &mut q);
        let dq: f64 = dir.iter().zip(&q).map(|(a, b)| a * b).sum();
        if dq <= 0.0 {
            break;
        }
        let alpha = rz / dq;
        for i in 0..len {
            p[i] += alpha * dir[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..len {
            z[i] = r[i] * precond[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        if rz_new.abs().sqrt() < tol {
            break;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..len {
            dir[i] = z[i] + beta * dir[i];
        }
    }
    p
}

/// Run `cfg.restarts` independent descents and report the best.
pub fn solve(g: &WeightedGraph, d: usize, cfg: &SolveConfig) -> SolveReport {
    solve_with(g, d, cfg, |_, _, _| {})
}

/// [`solve`], calling `on_success(restart, embedding, residual)` for every
/// restart that reaches `success_residual`.
pub fn solve_with(
    g: &WeightedGraph,
    d: usize,
    cfg: &SolveConfig,
    mut on_success: impl FnMut(usize, &Embedding, f64),
) -> SolveReport {
    // restarts run in parallel chunks and are reduced in index order, so the
    // report does not depend on the thread count
    let chunk = rayon::current_num_threads().max(1);
    let mut best: Option<(bool, f64, f64, Vec<f64>)> = None;
    let mut restarts = Vec::new();
    let mut successes = 0;
    let mut next = 0;
    'outer: while next < cfg.restarts {
        let end = (next + chunk).min(cfg.restarts);
        let batch: Vec<(RestartOutcome, Vec<f64>)> =
            (next..end).into_par_iter().map(|r| run_restart(g, d, cfg, r)).collect();
        for (restart, (out, x)) in (next..end).zip(batch) {
            let ok = out.residual <= cfg.success_residual;
            if ok {
                successes += 1;
                let emb = Embedding::new(d, x.clone()).expect("solver keeps whole points");
                on_success(restart, &emb, out.residual);
            }
            let better = match &best {
                None => true,
                Some((bok, be, _, _)) => (ok && !bok) || (ok == *bok && out.energy < *be),
            };
            if better {
                best = Some((ok, out.energy, out.residual, x));
            }
            restarts.push(out);
            if cfg.stop_after.is_some_and(|k| successes >= k) {
                break 'outer;
            }
        }
        next = end;
    }
    let (ok, best_energy, best_residual, x) = best.expect("at least one restart");
    SolveReport {
        best: Embedding::new(d, x).expect("solver keeps whole points"),
        best_energy,
        best_residual,
        restarts,
        successes,
        verdict: if ok { Verdict::EmbeddingFound } else { Verdict::NoEmbeddingFoundHeuristic },
        above_energy_floor: best_energy > cfg.fail_energy_floor,
    }
}

fn run_restart(g: &WeightedGraph, d: usize, cfg: &SolveConfig, restart: usize) -> (RestartOutcome, Vec<f64>) {
    let n = g.vertex_count();
    let half = cfg.init_box.unwrap_or(1.5 * g.max_length().max(1.0));
    let mut rng = rng_stream(cfg.seed, restart as u64);
    let mut x = match cfg.init {
        InitStrategy::UniformCube => None,
        InitStrategy::Buildup => {
            split::split_solve(g, d, &mut rng).or_else(|| buildup::buildup(&g.adjacency(), d, &mut rng))
        }
    }
    .unwrap_or_else(|| (0..n * d).map(|_| rng.random_range(-half..=half)).collect());
    let opts = LmOptions { max_iters: cfg.max_iters, target_deviation: cfg.success_residual * 1e-2 };
    let out = levenberg_marquardt(g.edges(), d, &mut x, None, &opts);
    let residual = max_deviation(g.edges(), &x, d);
    (RestartOutcome { energy: out.energy, residual, iterations: out.iterations }, x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodCheckConfig {
    pub required_successes: usize,
    pub max_attempts: usize,
    pub terminal_tolerance: f64,
    pub solve: SolveConfig,
}

impl Default for RodCheckConfig {
    fn default() -> Self {
        Self {
            required_successes: 20,
            max_attempts: 200,
            terminal_tolerance: 1e-6,
            solve: SolveConfig { init: InitStrategy::Buildup, ..SolveConfig::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodCheckReport {
    pub length: f64,
    pub attempts: usize,
    pub successes: usize,
    pub min_distance: f64,
    pub max_distance: f64,
    pub max_deviation: f64,
    /// Every successful embedding had its terminals within tolerance.
    pub passed: bool,
}

/// Solve the rod's graph from scratch until `required_successes` embeddings
/// are found and compare every terminal distance with the rod length.
pub fn rod_property_check(rod: &RodCertificate, cfg: &RodCheckConfig) -> Result<RodCheckReport> {
    let d = rod_dimension(rod);
    let solve_cfg = SolveConfig {
        restarts: cfg.max_attempts,
        stop_after: Some(cfg.required_successes),
        ..cfg.solve.clone()
    };
    let mut distances = Vec::new();
    let report = solve_with(&rod.graph, d, &solve_cfg, |_, e, _| {
        distances.push(crate::geom::dist(e.point(rod.u), e.point(rod.v)));
    });
    if distances.len() < cfg.required_successes {
        return Err(Error::InsufficientSuccesses { found: distances.len(), required: cfg.required_successes });
    }
    let min_distance = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    let max_deviation = distances.iter().map(|x| (x - rod.length_value).abs()).fold(0.0, f64::max);
    Ok(RodCheckReport {
        length: rod.length_value,
        attempts: report.restarts.len(),
        successes: distances.len(),
        min_distance,
        max_distance,
        max_deviation,
        passed: max_deviation <= cfg.terminal_tolerance,
    })
}

fn rod_dimension(rod: &RodCertificate) -> usize {
    use crate::gadgets::Trace;
    fn walk(rod: &RodCertificate) -> Option<usize> {
        match &rod.trace {
            Trace::UnitEdge => None,
            Trace::Spindle { dim } | Trace::AngularSkeleton { dim, .. } => Some(*dim),
            Trace::Substitute { host, part, .. } => walk(host).or_else(|| walk(part)),
            Trace::Multiply { outer, inner } => walk(outer).or_else(|| walk(inner)),
        }
    }
    walk(rod).unwrap_or(3)
}
