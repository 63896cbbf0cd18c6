//! Separation-pair splitting.
//!
//! A connected vertex set `S` whose neighbourhood outside `S` is a pair
//! `{a, b}` can be embedded on its own. When two independent solutions of
//! `S + {a, b}` agree on `|ab|`, the set is replaced by a single edge `ab` of
//! that length; a set attached at one vertex (or none) is split off as is.
//! The reduced core is trilaterated and the pieces are glued back by rigid
//! motions that match their attachment vertices, newest piece first.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::buildup::buildup;
use super::{levenberg_marquardt, max_deviation, LmOptions};
use crate::geom::{dist, AxisMap, Orthogonal};
use crate::graph::{Edge, WeightedGraph};

const PIECE_CAP: usize = 48;
const BOUNDARY_CAP: usize = 24;
const PIECE_ATTEMPTS: usize = 4;
const SOLVED: f64 = 1e-11;
/// Relative agreement of two terminal distances that marks a rigid piece.
const AGREE: f64 = 1e-8;

struct Piece {
    attach: Vec<usize>,
    inner: Vec<usize>,
    /// Local layout: `attach` first, then `inner`.
    coords: Vec<f64>,
}

/// Embed `g` by splitting, or `None` if a piece or the core failed.
pub(super) fn split_solve(g: &WeightedGraph, dim: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let n = g.vertex_count();
    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for e in g.edges() {
        adj[e.u].insert(e.v, e.len);
        adj[e.v].insert(e.u, e.len);
    }
    let mut alive = vec![true; n];
    let mut alive_count = n;
    let mut pieces: Vec<Piece> = Vec::new();
    let mut failed: HashSet<Vec<usize>> = HashSet::new();
    let mut queued = vec![true; n];
    let mut queue: VecDeque<usize> = (0..n).collect();
    while let Some(x) = queue.pop_front() {
        queued[x] = false;
        if !alive[x] {
            continue;
        }
        let Some((inner, attach)) = grow(&adj, x) else { continue };
        if inner.len() == alive_count || failed.contains(&inner) {
            continue;
        }
        let local: Vec<usize> = attach.iter().chain(&inner).copied().collect();
        let edges = local_edges(&adj, &local, attach.len());
        let piece = if attach.len() == 2 {
            let first = solve_small(&edges, local.len(), dim, rng);
            let second = first.as_ref().and_then(|_| solve_small(&edges, local.len(), dim, rng));
            match (first, second) {
                (Some(p), Some(q)) => {
                    let lp = dist(&p[..dim], &p[dim..2 * dim]);
                    let lq = dist(&q[..dim], &q[dim..2 * dim]);
                    if (lp - lq).abs() > AGREE * lp.max(1.0) {
                        failed.insert(inner);
                        continue;
                    }
                    let (a, b) = (attach[0], attach[1]);
                    if let Some(&old) = adj[a].get(&b) {
                        if (old - lp).abs() > AGREE * lp.max(1.0) {
                            return None;
                        }
                    } else {
                        adj[a].insert(b, lp);
                        adj[b].insert(a, lp);
                    }
                    Piece { attach, inner, coords: p }
                }
                _ => return None,
            }
        } else {
            let coords = solve_small(&edges, local.len(), dim, rng)?;
            Piece { attach, inner, coords }
        };
        for &v in &piece.inner {
            alive[v] = false;
            for y in std::mem::take(&mut adj[v]).into_keys() {
                adj[y].remove(&v);
            }
        }
        alive_count -= piece.inner.len();
        for &a in &piece.attach {
            for y in std::iter::once(a).chain(adj[a].keys().copied()) {
                if !queued[y] {
                    queued[y] = true;
                    queue.push_back(y);
                }
            }
        }
        pieces.push(piece);
    }

    let core: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let core_coords = solve_small(&local_edges(&adj, &core, 0), core.len(), dim, rng)?;
    let mut pos = vec![0.0; n * dim];
    for (i, &v) in core.iter().enumerate() {
        pos[v * dim..(v + 1) * dim].copy_from_slice(&core_coords[i * dim..(i + 1) * dim]);
    }
    for piece in pieces.iter().rev() {
        place_piece(piece, &mut pos, dim, rng);
    }
    Some(pos)
}

/// Grow a connected set from `x`, each step absorbing the boundary vertex
/// that adds the fewest new boundary vertices, until at most two boundary
/// vertices remain.
fn grow(adj: &[BTreeMap<usize, f64>], x: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    if adj[x].len() > BOUNDARY_CAP {
        return None;
    }
    let mut inside = BTreeSet::from([x]);
    let mut boundary: BTreeSet<usize> = adj[x].keys().copied().collect();
    loop {
        if boundary.len() <= 2 {
            return Some((inside.into_iter().collect(), boundary.into_iter().collect()));
        }
        if inside.len() >= PIECE_CAP || boundary.len() > BOUNDARY_CAP {
            return None;
        }
        let (_, _, y) = boundary
            .iter()
            .filter(|&&y| adj[y].len() <= 2 * BOUNDARY_CAP)
            .map(|&y| {
                let fresh = adj[y].keys().filter(|z| !inside.contains(z) && !boundary.contains(z)).count();
                (fresh, adj[y].len(), y)
            })
            .min()?;
        inside.insert(y);
        boundary.remove(&y);
        boundary.extend(adj[y].keys().copied().filter(|z| !inside.contains(z)));
    }
}

/// Edges of the subgraph on `verts` (local ids by position), leaving out
/// edges among the first `skip` vertices.
fn local_edges(adj: &[BTreeMap<usize, f64>], verts: &[usize], skip: usize) -> Vec<Edge> {
    let id: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut edges = Vec::new();
    for (i, &v) in verts.iter().enumerate() {
        for (&y, &len) in &adj[v] {
            if let Some(&j) = id.get(&y) {
                if i < j && j >= skip {
                    edges.push(Edge { u: i, v: j, len });
                }
            }
        }
    }
    edges
}

fn solve_small(edges: &[Edge], n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let g = WeightedGraph::from_canonical(n, edges.to_vec());
    let adj = g.adjacency();
    let opts = LmOptions { max_iters: 200, target_deviation: SOLVED * 1e-2 };
    for _ in 0..PIECE_ATTEMPTS {
        let Some(mut x) = buildup(&adj, dim, rng) else { continue };
        levenberg_marquardt(edges, dim, &mut x, None, &opts);
        if max_deviation(edges, &x, dim) <= SOLVED {
            return Some(x);
        }
    }
    None
}

fn place_piece(piece: &Piece, pos: &mut [f64], dim: usize, rng: &mut ChaCha8Rng) {
    let local = |i: usize| &piece.coords[i * dim..(i + 1) * dim];
    let k = piece.attach.len();
    let target = |v: usize, pos: &[f64]| pos[v * dim..(v + 1) * dim].to_vec();
    let map: Box<dyn Fn(&[f64]) -> Vec<f64>> = match k {
        2 => {
            let spin = Orthogonal::random(dim - 1, rng);
            let m = AxisMap::new(
                local(0),
                local(1),
                &target(piece.attach[0], pos),
                &target(piece.attach[1], pos),
                &spin,
            );
            Box::new(move |p| m.apply(p))
        }
        _ => {
            let q = Orthogonal::random(dim, rng);
            let (from, to) = if k == 1 {
                (local(0).to_vec(), target(piece.attach[0], pos))
            } else {
                (vec![0.0; dim], (0..dim).map(|_| rng.random_range(-8.0..8.0)).collect())
            };
            Box::new(move |p| {
                let rel: Vec<f64> = p.iter().zip(&from).map(|(a, b)| a - b).collect();
                q.apply(&rel).iter().zip(&to).map(|(a, b)| a + b).collect()
            })
        }
    };
    for (i, &v) in piece.inner.iter().enumerate() {
        let p = map(local(k + i));
        pos[v * dim..(v + 1) * dim].copy_from_slice(&p);
    }
}
