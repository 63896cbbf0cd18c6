//! Greedy trilateration with local repair.

use std::collections::{BinaryHeap, HashMap};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{levenberg_marquardt, max_deviation, LmOptions};
use crate::graph::{Adjacency, Edge};

const BUILD_TOL: f64 = 1e-7;
const MIN_SEP: f64 = 1e-5;
const REPAIR_EPOCHS: usize = 3;
const REPAIR_CAP: usize = 256;
const REPAIR_ATTEMPTS: usize = 6;
const ISOMETRY_SAMPLES: usize = 64;

/// Uniform grid over placed points for collision queries.
struct Grid {
    dim: usize,
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl Grid {
    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|c| (c / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, v: usize, p: &[f64]) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(v);
    }

    fn remove(&mut self, v: usize, p: &[f64]) {
        let k = self.key(p);
        if let Some(list) = self.cells.get_mut(&k) {
            list.retain(|&x| x != v);
        }
    }

    fn collides(&self, p: &[f64], pos: &[f64]) -> bool {
        let base = self.key(p);
        let mut offset = vec![-1i64; self.dim];
        loop {
            let k: Vec<i64> = base.iter().zip(&offset).map(|(a, b)| a + b).collect();
            if let Some(list) = self.cells.get(&k) {
                if list.iter().any(|&x| sq_dist_pt(&pos[x * self.dim..(x + 1) * self.dim], p) < MIN_SEP * MIN_SEP) {
                    return true;
                }
            }
            let mut i = 0;
            loop {
                if i == self.dim {
                    return false;
                }
                offset[i] += 1;
                if offset[i] <= 1 {
                    break;
                }
                offset[i] = -1;
                i += 1;
            }
        }
    }
}

fn sq_dist_pt(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A sphere-intersection placement; `gauge` marks a continuous free choice.
struct Placement {
    point: Vec<f64>,
    gauge: bool,
}

struct Builder<'a> {
    adj: &'a Adjacency,
    dim: usize,
    pos: Vec<f64>,
    placed: Vec<bool>,
    /// Placed vertices in placement order.
    order: Vec<usize>,
    /// Positions in `order` where a gauge placement happened.
    gauges: Vec<usize>,
    grid: Grid,
}

/// Greedy build-up: repeatedly place the unplaced vertex with the most
/// placed neighbours by intersecting its neighbour spheres. Free directions
/// are drawn at random and binary choices at random among non-colliding
/// ones. When a vertex cannot be placed consistently, the vertices placed
/// since the last free choice are re-solved by local least squares with
/// everything older held fixed. Returns `None` if that fails.
pub(super) fn buildup(adj: &Adjacency, dim: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let n = adj.vertex_count();
    let mut b = Builder {
        adj,
        dim,
        pos: vec![0.0; n * dim],
        placed: vec![false; n],
        order: Vec::with_capacity(n),
        gauges: Vec::new(),
        grid: Grid { dim, cell: 1e-3, cells: HashMap::new() },
    };
    let mut count = vec![0usize; n];
    let mut heap: BinaryHeap<(usize, usize, usize)> = BinaryHeap::new();
    while b.order.len() < n {
        let next = loop {
            match heap.pop() {
                Some((c, _, x)) if !b.placed[x] && c == count[x] => break Some(x),
                Some(_) => continue,
                None => break None,
            }
        };
        let v = match next {
            Some(v) => v,
            // new component: start from the highest-degree unplaced vertex
            None => (0..n).filter(|&x| !b.placed[x]).max_by_key(|&x| (adj.degree(x), std::cmp::Reverse(x)))?,
        };
        let nbrs: Vec<(usize, f64)> = adj.neighbors(v).iter().copied().filter(|&(x, _)| b.placed[x]).collect();
        match place_vertex(&nbrs, &b.pos, dim, &b.grid, rng) {
            Some(p) => {
                if p.gauge {
                    b.gauges.push(b.order.len());
                }
                b.commit(v, &p.point);
            }
            None => {
                let starts = repair_starts(&nbrs, &b.pos, dim, &b.grid, rng);
                if !b.repair(v, &starts, rng) {
                    return None;
                }
            }
        }
        for &(x, _) in adj.neighbors(v) {
            if !b.placed[x] {
                count[x] += 1;
                heap.push((count[x], adj.degree(x), x));
            }
        }
    }
    Some(b.pos)
}

impl Builder<'_> {
    fn point(&self, v: usize) -> &[f64] {
        &self.pos[v * self.dim..(v + 1) * self.dim]
    }

    fn commit(&mut self, v: usize, p: &[f64]) {
        self.pos[v * self.dim..(v + 1) * self.dim].copy_from_slice(p);
        self.placed[v] = true;
        self.order.push(v);
        self.grid.insert(v, p);
    }

    fn relocate(&mut self, v: usize, p: &[f64]) {
        let old = self.point(v).to_vec();
        self.grid.remove(v, &old);
        self.pos[v * self.dim..(v + 1) * self.dim].copy_from_slice(p);
        self.grid.insert(v, p);
    }

    /// Place `v` by re-solving the most recent gauge epochs.
    fn repair(&mut self, v: usize, starts: &[Vec<f64>], rng: &mut ChaCha8Rng) -> bool {
        let dim = self.dim;
        for back in 1..=REPAIR_EPOCHS.min(self.gauges.len()) {
            let from = self.gauges[self.gauges.len() - back];
            if self.order.len() - from + 1 > REPAIR_CAP {
                break;
            }
            // local problem: v and the epoch free, their placed neighbours fixed
            let mut verts = vec![v];
            verts.extend_from_slice(&self.order[from..]);
            let free_count = verts.len();
            let mut local_id: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &x)| (x, i)).collect();
            let mut edges = Vec::new();
            for i in 0..free_count {
                let x = verts[i];
                for &(y, w) in self.adj.neighbors(x) {
                    if !self.placed[y] && y != v {
                        continue;
                    }
                    let ly = *local_id.entry(y).or_insert_with(|| {
                        verts.push(y);
                        verts.len() - 1
                    });
                    if ly < free_count && ly < i {
                        continue; // counted from the other side
                    }
                    edges.push(Edge { u: i, v: ly, len: w });
                }
            }
            let free: Vec<bool> = (0..verts.len()).map(|i| i < free_count).collect();
            // anchors of the epoch itself; edges at v are what the move should change
            let mut anchors: Vec<usize> = edges.iter().filter(|e| e.u != 0 && e.v >= free_count).map(|e| e.v).collect();
            anchors.sort_unstable();
            anchors.dedup();
            let mut original: Vec<f64> = Vec::with_capacity(verts.len() * dim);
            for &x in &verts {
                original.extend_from_slice(self.point(x));
            }
            let opts = LmOptions { max_iters: 300, target_deviation: 1e-12 };
            let mut tries: Vec<Vec<f64>> = starts
                .iter()
                .map(|st| {
                    let mut local = original.clone();
                    local[..dim].copy_from_slice(st);
                    local
                })
                .collect();
            // rigid moves of the epoch that keep its anchors, v re-derived from the epoch
            let inner: Vec<(usize, f64)> = edges.iter().filter(|e| e.u == 0 && e.v < free_count).map(|e| (e.v, e.len)).collect();
            let all: Vec<(usize, f64)> = edges.iter().filter(|e| e.u == 0).map(|e| (e.v, e.len)).collect();
            if !inner.is_empty() {
                let mut sampled: Vec<(f64, Vec<f64>)> = Vec::new();
                for _ in 0..ISOMETRY_SAMPLES {
                    let mut local = original.clone();
                    anchored_isometry(&mut local, free_count, &anchors, dim, rng);
                    let Some((cands, _)) = sphere_candidates(&inner, &local, dim, rng) else { continue };
                    for c in cands {
                        let score: f64 = all.iter().map(|&(x, w)| (sq_dist_pt(&local[x * dim..(x + 1) * dim], &c).sqrt() - w).powi(2)).sum();
                        let mut l = local.clone();
                        l[..dim].copy_from_slice(&c);
                        sampled.push((score, l));
                    }
                }
                sampled.sort_by(|x, y| x.0.total_cmp(&y.0));
                tries.extend(sampled.into_iter().take(REPAIR_ATTEMPTS).map(|t| t.1));
            }
            for mut local in tries {
                levenberg_marquardt(&edges, dim, &mut local, Some(&free), &opts);
                if max_deviation(&edges, &local, dim) <= 1e-10 {
                    for (i, &x) in verts.iter().enumerate().take(free_count).skip(1) {
                        self.relocate(x, &local[i * dim..(i + 1) * dim]);
                    }
                    self.commit(v, &local[..dim]);
                    return true;
                }
            }
        }
        false
    }
}

/// Apply a random isometry to the first `free_count` points that fixes the
/// affine hull of the `anchors`.
fn anchored_isometry(local: &mut [f64], free_count: usize, anchors: &[usize], dim: usize, rng: &mut ChaCha8Rng) {
    let pt = |i: usize, local: &[f64]| local[i * dim..(i + 1) * dim].to_vec();
    let (origin, span) = match anchors.split_first() {
        Some((&first, rest)) => {
            let o = pt(first, local);
            let dirs: Vec<Vec<f64>> = rest.iter().map(|&i| crate::geom::sub(&pt(i, local), &o)).collect();
            (o, crate::geom::orthonormal_basis(&dirs, 1e-6))
        }
        None => {
            let o = (0..dim).map(|c| (0..free_count).map(|i| local[i * dim + c]).sum::<f64>() / free_count as f64).collect();
            (o, Vec::new())
        }
    };
    let s = span.len();
    let mut seeds = span.clone();
    seeds.extend(identity_basis(dim));
    let comp: Vec<Vec<f64>> = crate::geom::orthonormal_basis(&seeds, 1e-6).into_iter().skip(s).collect();
    let m = comp.len();
    if m == 0 {
        return;
    }
    let gauss = DMatrix::<f64>::from_fn(m, m, |_, _| rng.sample(StandardNormal));
    let q = gauss.qr().q();
    for i in 0..free_count {
        let y = crate::geom::sub(&pt(i, local), &origin);
        let coef: Vec<f64> = comp.iter().map(|c| crate::geom::dot(c, &y)).collect();
        let mut out = origin.clone();
        for b in &span {
            let t = crate::geom::dot(b, &y);
            out.iter_mut().zip(b).for_each(|(o, bi)| *o += t * bi);
        }
        for (r, c) in comp.iter().enumerate() {
            let t: f64 = (0..m).map(|j| q[(r, j)] * coef[j]).sum();
            out.iter_mut().zip(c).for_each(|(o, ci)| *o += t * ci);
        }
        local[i * dim..(i + 1) * dim].copy_from_slice(&out);
    }
}

/// Exact sphere intersection for a vertex given its placed neighbours, or
/// `None` if the spheres are inconsistent. Prefers points that do not
/// collide with anything already placed.
fn place_vertex(nbrs: &[(usize, f64)], pos: &[f64], dim: usize, grid: &Grid, rng: &mut ChaCha8Rng) -> Option<Placement> {
    let (cands, gauge) = sphere_candidates(nbrs, pos, dim, rng)?;
    let point = cands.iter().find(|c| !grid.collides(c, pos)).or(cands.first())?.clone();
    Some(Placement { point, gauge })
}

/// Points consistent with every neighbour sphere (both branches of a binary
/// choice, shuffled; a few random directions of a continuous one). The flag
/// is set for a continuous choice.
fn sphere_candidates(nbrs: &[(usize, f64)], pos: &[f64], dim: usize, rng: &mut ChaCha8Rng) -> Option<(Vec<Vec<f64>>, bool)> {
    let pt = |x: usize| &pos[x * dim..(x + 1) * dim];
    if nbrs.is_empty() {
        return Some((vec![(0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()], true));
    }
    let (p0, w0) = (pt(nbrs[0].0), nbrs[0].1);
    let k = nbrs.len() - 1;
    // y = x - p0:  2 (p_i - p0) . y = w0^2 - w_i^2 + |p_i - p0|^2
    let (yp, null) = if k == 0 {
        (vec![0.0; dim], identity_basis(dim))
    } else {
        let mut a = DMatrix::<f64>::zeros(k, dim);
        let mut rhs = DVector::<f64>::zeros(k);
        for (i, &(x, w)) in nbrs[1..].iter().enumerate() {
            let p = pt(x);
            let mut sq = 0.0;
            for c in 0..dim {
                let t = p[c] - p0[c];
                a[(i, c)] = 2.0 * t;
                sq += t * t;
            }
            rhs[i] = w0 * w0 - w * w + sq;
        }
        let svd = a.svd(true, true);
        let cut = svd.singular_values.max() * 1e-9;
        let vt = svd.v_t.as_ref()?;
        let u = svd.u.as_ref()?;
        let mut yp = DVector::<f64>::zeros(dim);
        let mut rows = Vec::new();
        for (j, &sv) in svd.singular_values.iter().enumerate() {
            if sv > cut {
                yp += vt.row(j).transpose() * (u.column(j).dot(&rhs) / sv);
                rows.push(vt.row(j).iter().copied().collect::<Vec<f64>>());
            }
        }
        let rank = rows.len();
        rows.extend(identity_basis(dim));
        let null: Vec<Vec<f64>> = crate::geom::orthonormal_basis(&rows, 1e-6).into_iter().skip(rank).collect();
        (yp.iter().copied().collect(), null)
    };
    let rho2 = w0 * w0 - yp.iter().map(|c| c * c).sum::<f64>();
    if rho2 < -BUILD_TOL {
        return None;
    }
    let rho = rho2.max(0.0).sqrt();
    let make = |z: &[f64]| -> Vec<f64> { (0..dim).map(|c| p0[c] + yp[c] + rho * z[c]).collect() };
    let gauge = null.len() >= 2 && rho > 0.0;
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    match null.len() {
        0 => candidates.push(make(&vec![0.0; dim])),
        1 => {
            let z = &null[0];
            candidates.push(make(z));
            candidates.push(make(&z.iter().map(|c| -c).collect::<Vec<_>>()));
            candidates.shuffle(rng);
        }
        m => {
            for _ in 0..4 {
                let coef: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                let mut z = vec![0.0; dim];
                for (b, c) in null.iter().zip(&coef) {
                    z.iter_mut().zip(b).for_each(|(zi, bi)| *zi += c * bi);
                }
                let nz = z.iter().map(|c| c * c).sum::<f64>().sqrt();
                z.iter_mut().for_each(|c| *c /= nz);
                candidates.push(make(&z));
            }
        }
    }
    candidates.retain(|p| nbrs.iter().all(|&(x, w)| (sq_dist_pt(pt(x), p).sqrt() - w).abs() <= BUILD_TOL));
    if candidates.is_empty() {
        None
    } else {
        Some((candidates, gauge))
    }
}

fn identity_basis(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect()
}

/// Starting points for an inconsistent vertex: exact intersections for
/// random subsets of `dim` neighbours, then the least-squares point.
fn repair_starts(nbrs: &[(usize, f64)], pos: &[f64], dim: usize, grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut starts = Vec::new();
    let mut subset = nbrs.to_vec();
    for _ in 0..REPAIR_ATTEMPTS / 2 {
        subset.shuffle(rng);
        let k = dim.min(subset.len());
        if let Some(p) = place_vertex(&subset[..k], pos, dim, grid, rng) {
            starts.push(p.point);
        }
    }
    starts.push(least_squares_point(nbrs, pos, dim, rng));
    starts
}

/// Least-squares position of a single vertex against fixed neighbours.
fn least_squares_point(nbrs: &[(usize, f64)], pos: &[f64], dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let pt = |x: usize| &pos[x * dim..(x + 1) * dim];
    let mut local = Vec::with_capacity((nbrs.len() + 1) * dim);
    let centroid: Vec<f64> = (0..dim)
        .map(|c| nbrs.iter().map(|&(x, _)| pt(x)[c]).sum::<f64>() / nbrs.len().max(1) as f64)
        .collect();
    local.extend(centroid.iter().map(|c| c + rng.random_range(-0.5..0.5)));
    let mut edges = Vec::new();
    let mut free = vec![true];
    for (i, &(x, w)) in nbrs.iter().enumerate() {
        local.extend_from_slice(pt(x));
        edges.push(Edge { u: 0, v: i + 1, len: w });
        free.push(false);
    }
    levenberg_marquardt(&edges, dim, &mut local, Some(&free), &LmOptions { max_iters: 200, target_deviation: 1e-12 });
    local[..dim].to_vec()
}

