//! Explicit coordinates from a 3-coloring, and the inverse map from an
//! embedding of the reduction graph back to a coloring.
//!
//! Rod embeddings are laid out from the construction trace: spindles from two
//! simplices and their apexes, angular skeletons on the circle of radius
//! `r0`, and composite rods by gluing part embeddings onto host edges under a
//! random rotation about the edge axis. Every random step is checked for
//! non-criticality and retried with fresh randomness on failure.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gadgets::{dimension_constants, interior_map, RodCertificate, Trace};
use crate::geom::{self, dist, dot, norm, orthonormal_basis, sub, AxisMap, Orthogonal};
use crate::graph::{check_new_points, classify_embedding, Embedding, LocalCheck, SimpleGraph, ToleranceConfig, VertexId};
use crate::oracle::{validate_coloring, Coloring};
use crate::reduction::{ExpandedInstance, ReductionInstance, Role, EPSILON};

pub use crate::geom::simplex_coordinates;

pub const MAX_RETRIES: usize = 64;
/// Seed of the canonical rod layouts; they do not depend on the caller.
const CANONICAL_SEED: u64 = 0xC0FFEE;

/// Seeded random source for one task; `(seed, stream)` fixes the output.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Coordinates of `K ∪ U ∪ V` in the numbering of the reduction graph.
///
/// `K` is a unit simplex centred at the origin in the first `d-2`
/// coordinates, the circle of radius `r0` lies in the last two, `u_k` sits
/// at angle `2 pi k / 3`, and the vertices of color `c` are spread evenly
/// over the central half of the arc of width `epsilon` opposite `u_c`.
pub fn base_witness<R: Rng + ?Sized>(g: &SimpleGraph, c: &[u8], d: usize, rng: &mut R) -> Result<Embedding> {
    let consts = dimension_constants(d)?;
    if !validate_coloring(g, c)? {
        return Err(Error::InvalidColoring("adjacent vertices share a color".into()));
    }
    let circle = |theta: f64| -> Vec<f64> {
        let mut p = vec![0.0; d];
        p[d - 2] = consts.r0 * theta.cos();
        p[d - 1] = consts.r0 * theta.sin();
        p
    };
    let mut emb = Embedding::zeros(d, 0);
    for q in simplex_coordinates(d - 1, 1.0) {
        let mut p = q;
        p.resize(d, 0.0);
        emb.push(&p);
    }
    for k in 0..3 {
        emb.push(&circle(2.0 * PI * k as f64 / 3.0));
    }
    let mut class_size = [0usize; 3];
    let mut rank = vec![0usize; c.len()];
    for (i, &col) in c.iter().enumerate() {
        rank[i] = class_size[col as usize];
        class_size[col as usize] += 1;
    }
    let half = EPSILON / 4.0;
    for (i, &col) in c.iter().enumerate() {
        let centre = 2.0 * PI * col as f64 / 3.0 + PI;
        let m = class_size[col as usize] as f64;
        let offset = -half + (rank[i] as f64 + 0.5) * (2.0 * half / m);
        let jitter = rng.random_range(-1.0..1.0) * EPSILON * 1e-6;
        emb.push(&circle(centre + offset + jitter));
    }
    Ok(emb)
}

/// Point `z` with `|z - p| = a` and `|z - q| = b`, at a uniformly random
/// angle about the axis `pq`.
pub fn place_apex<R: Rng + ?Sized>(p: &[f64], q: &[f64], a: f64, b: f64, rng: &mut R) -> Result<Vec<f64>> {
    let l = dist(p, q);
    if !((a - b).abs() < l && l < a + b) {
        return Err(Error::TriangleInfeasible { a, b, dist: l });
    }
    let e: Vec<f64> = sub(q, p).iter().map(|x| x / l).collect();
    let t = (a * a - b * b + l * l) / (2.0 * l);
    let s = (a * a - t * t).max(0.0).sqrt();
    let n = geom::random_unit_orthogonal(&e, rng);
    Ok((0..p.len()).map(|k| p[k] + t * e[k] + s * n[k]).collect())
}

/// Embedding of a rod with its terminals on `p_u` and `p_v`: the canonical
/// layout moved rigidly onto the terminals and spun about the terminal axis
/// by a random rotation.
pub fn glue_rod_embedding<R: Rng + ?Sized>(
    rod: &RodCertificate,
    p_u: &[f64],
    p_v: &[f64],
    rng: &mut R,
    tol: &ToleranceConfig,
) -> Result<Embedding> {
    let gap = dist(p_u, p_v);
    if (gap - rod.length_value).abs() > 1e-9 {
        return Err(Error::LengthMismatch { expected: rod.length_value, actual: gap });
    }
    let d = p_u.len();
    let canon = canonical_embedding(rod)?;
    if canon.dim() > d {
        return Err(Error::DimensionTooSmall(d));
    }
    let canon = lift_to(&canon, d);
    for _ in 0..MAX_RETRIES {
        let spin = Orthogonal::random(d - 1, rng);
        let map = AxisMap::new(canon.point(rod.u), canon.point(rod.v), p_u, p_v, &spin);
        let mut out = Embedding::zeros(d, 0);
        for x in 0..canon.len() {
            if x == rod.u {
                out.push(p_u);
            } else if x == rod.v {
                out.push(p_v);
            } else {
                out.push(&map.apply(canon.point(x)));
            }
        }
        let report = classify_embedding(&rod.graph, &out, tol)?;
        if report.residual <= tol.eps_len && report.is_non_critical {
            return Ok(out);
        }
    }
    Err(Error::DegeneracyRetryExhausted(MAX_RETRIES))
}

/// Non-critical embedding of `rod` in `R^d` derived from its trace, built
/// once per rod.
pub fn canonical_embedding(rod: &RodCertificate) -> Result<Arc<Embedding>> {
    rod.canonical
        .get_or_init(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(CANONICAL_SEED);
            build_canonical(rod, &mut rng, &ToleranceConfig::default()).map(Arc::new)
        })
        .clone()
}

fn build_canonical(rod: &RodCertificate, rng: &mut ChaCha8Rng, tol: &ToleranceConfig) -> Result<Embedding> {
    match &rod.trace {
        Trace::UnitEdge => {
            let mut e = Embedding::zeros(3, 2);
            e.point_mut(1)[0] = 1.0;
            Ok(e)
        }
        Trace::Spindle { dim } => spindle_layout(rod, *dim, rng, tol),
        Trace::AngularSkeleton { dim, n } => skeleton_layout(rod, *dim, *n, tol),
        Trace::Substitute { .. } | Trace::Multiply { .. } => {
            // place terminals first (ids 0, 1) so that placed vertices always
            // form a prefix, then permute back to the rod's numbering
            let dim = trace_dim(rod).unwrap_or(3);
            let map = interior_map(rod, 0, 1, 2);
            let mut inverse = vec![0; map.len()];
            for (x, &g) in map.iter().enumerate() {
                inverse[g] = x;
            }
            let adj = rod.graph.adjacency();
            let adjacent = |a: usize, b: usize| adj.has_edge(inverse[a], inverse[b]);
            let mut emb = Embedding::zeros(dim, 2);
            emb.point_mut(1)[0] = rod.length_value;
            place_rod(rod, 1.0, &map, &mut emb, &adjacent, rng, tol)?;
            Ok(emb.select(&map))
        }
    }
}

fn trace_dim(rod: &RodCertificate) -> Option<usize> {
    match &rod.trace {
        Trace::UnitEdge => None,
        Trace::Spindle { dim } | Trace::AngularSkeleton { dim, .. } => Some(*dim),
        Trace::Substitute { host, part, .. } => trace_dim(host).or_else(|| trace_dim(part)),
        Trace::Multiply { outer, inner } => trace_dim(outer).or_else(|| trace_dim(inner)),
    }
}

/// Lay out `rod` scaled by `scale` inside `emb`, where `map` sends rod ids
/// to embedding ids, the terminals are already placed and the interior ids
/// are appended in increasing order. Composite rods recurse into their
/// trace so that every rigid block placed is a single spindle or skeleton,
/// each checked against everything placed before it.
fn place_rod(
    rod: &RodCertificate,
    scale: f64,
    map: &[VertexId],
    emb: &mut Embedding,
    adjacent: &(dyn Fn(usize, usize) -> bool + Sync),
    rng: &mut ChaCha8Rng,
    tol: &ToleranceConfig,
) -> Result<()> {
    let parts = |host: &RodCertificate, part: &RodCertificate, edges: &mut dyn Iterator<Item = usize>| {
        let mut next = host.graph.vertex_count();
        edges
            .map(|i| {
                let e = host.graph.edges()[i];
                let local = interior_map(part, e.u, e.v, next);
                next += part.graph.vertex_count() - 2;
                local.iter().map(|&x| map[x]).collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    match &rod.trace {
        Trace::UnitEdge => Ok(()),
        Trace::Spindle { .. } | Trace::AngularSkeleton { .. } => place_block(rod, scale, map, emb, adjacent, rng, tol),
        Trace::Substitute { host, edges, part } => {
            place_rod(host, scale, &map[..host.graph.vertex_count()], emb, adjacent, rng, tol)?;
            for part_map in parts(host, part, &mut edges.iter().copied()) {
                place_rod(part, scale, &part_map, emb, adjacent, rng, tol)?;
            }
            Ok(())
        }
        Trace::Multiply { outer, inner } => {
            let outer_scale = scale * inner.length_value;
            place_rod(outer, outer_scale, &map[..outer.graph.vertex_count()], emb, adjacent, rng, tol)?;
            for part_map in parts(outer, inner, &mut (0..outer.graph.edge_count())) {
                place_rod(inner, scale, &part_map, emb, adjacent, rng, tol)?;
            }
            Ok(())
        }
    }
}

fn place_block(
    rod: &RodCertificate,
    scale: f64,
    map: &[VertexId],
    emb: &mut Embedding,
    adjacent: &(dyn Fn(usize, usize) -> bool + Sync),
    rng: &mut ChaCha8Rng,
    tol: &ToleranceConfig,
) -> Result<()> {
    let dim = emb.dim();
    let canon = lift_to(&*canonical_embedding(rod)?, dim);
    let (pa, pb) = (emb.point(map[rod.u]).to_vec(), emb.point(map[rod.v]).to_vec());
    let want = rod.length_value * scale;
    if (dist(&pa, &pb) - want).abs() > 1e-9 {
        return Err(Error::LengthMismatch { expected: want, actual: dist(&pa, &pb) });
    }
    let lo = emb.len();
    let hi = lo + rod.graph.vertex_count() - 2;
    debug_assert!(map.iter().enumerate().all(|(x, &g)| x == rod.u || x == rod.v || (lo..hi).contains(&g)));
    let scaled = |x: usize| -> Vec<f64> { canon.point(x).iter().map(|c| c * scale).collect() };
    let (cu, cv) = (scaled(rod.u), scaled(rod.v));
    emb.resize(hi);
    for _ in 0..MAX_RETRIES {
        let spin = Orthogonal::random(dim - 1, rng);
        let axis = AxisMap::new(&cu, &cv, &pa, &pb, &spin);
        for x in 0..canon.len() {
            if x != rod.u && x != rod.v {
                emb.point_mut(map[x]).copy_from_slice(&axis.apply(&scaled(x)));
            }
        }
        let check = LocalCheck { embedding: emb, placed: hi, new: lo..hi };
        match check_new_points(&check, adjacent, tol, rng) {
            None => return Ok(()),
            Some(v) => log::trace!("block retry after {v:?}"),
        }
    }
    Err(Error::DegeneracyRetryExhausted(MAX_RETRIES))
}

/// Clique `K` as a unit simplex in the first `d-2` coordinates, path
/// vertices `v_i` at angle `(i-1) alpha` on the circle of radius `r0` in the
/// last two.
fn skeleton_layout(rod: &RodCertificate, dim: usize, n: u64, tol: &ToleranceConfig) -> Result<Embedding> {
    let c = dimension_constants(dim)?;
    let mut e = Embedding::zeros(dim, 0);
    for q in simplex_coordinates(dim - 1, 1.0) {
        let mut p = q;
        p.resize(dim, 0.0);
        e.push(&p);
    }
    for i in 1..=n {
        let mut p = vec![0.0; dim];
        let x = c.step_angle(i);
        p[dim - 2] = c.r0 * x.cos();
        p[dim - 1] = c.r0 * x.sin();
        e.push(&p);
    }
    let report = classify_embedding(&rod.graph, &e, tol)?;
    if !(report.is_embedding && report.is_non_critical) {
        return Err(Error::DegeneracyRetryExhausted(0));
    }
    Ok(e)
}

fn lift_to(e: &Embedding, dim: usize) -> Embedding {
    if e.dim() == dim {
        return e.clone();
    }
    let mut out = Embedding::zeros(dim, 0);
    for p in e.points() {
        let mut q = p.to_vec();
        q.resize(dim, 0.0);
        out.push(&q);
    }
    out
}

/// `A = 0`, `B = D e_0`, `K1` a unit simplex in the hyperplane `x_0 = D/2`;
/// `C` is `B` rotated about `A` until `|BC| = 1`, and `K2` a unit simplex in
/// the bisecting hyperplane of `AC`.
fn spindle_layout(rod: &RodCertificate, d: usize, rng: &mut ChaCha8Rng, tol: &ToleranceConfig) -> Result<Embedding> {
    let c = dimension_constants(d)?;
    let big_d = c.big_d;
    let simplex = simplex_coordinates(d, 1.0);
    for _ in 0..MAX_RETRIES {
        let mut e = Embedding::zeros(d, 2 * d + 3);
        e.point_mut(1)[0] = big_d;
        let spin1 = Orthogonal::random(d - 1, rng);
        for (i, q) in simplex.iter().enumerate() {
            let p = e.point_mut(2 + i);
            p[0] = big_d / 2.0;
            p[1..].copy_from_slice(&spin1.apply(q));
        }
        let theta = 2.0 * (1.0 / (2.0 * big_d)).asin();
        let mut e0 = vec![0.0; d];
        e0[0] = 1.0;
        let w = geom::random_unit_orthogonal(&e0, rng);
        let pc: Vec<f64> = (0..d).map(|k| big_d * (theta.cos() * e0[k] + theta.sin() * w[k])).collect();
        let chat: Vec<f64> = pc.iter().map(|x| x / big_d).collect();
        let refl = Orthogonal::householder_to_e0(&chat);
        let spin2 = Orthogonal::random(d - 1, rng);
        for (i, q) in simplex.iter().enumerate() {
            let mut local = vec![big_d / 2.0];
            local.extend(spin2.apply(q));
            e.point_mut(2 + d + i).copy_from_slice(&refl.apply(&local));
        }
        e.point_mut(2 + 2 * d).copy_from_slice(&pc);
        let report = classify_embedding(&rod.graph, &e, tol)?;
        if report.is_embedding && report.is_non_critical {
            return Ok(e);
        }
    }
    Err(Error::DegeneracyRetryExhausted(MAX_RETRIES))
}

fn glue_jobs<R: Rng + ?Sized>(
    emb: &mut Embedding,
    adjacent: &(dyn Fn(usize, usize) -> bool + Sync),
    jobs: &[(VertexId, VertexId, &RodCertificate)],
    rng: &mut R,
    tol: &ToleranceConfig,
) -> Result<()> {
    let dim = emb.dim();
    for &(a, b, rod) in jobs {
        let canon = lift_to(&*canonical_embedding(rod)?, dim);
        let base = emb.len();
        let map = interior_map(rod, a, b, base);
        let (pa, pb) = (emb.point(a).to_vec(), emb.point(b).to_vec());
        let gap = dist(&pa, &pb);
        if (gap - rod.length_value).abs() > 1e-9 {
            return Err(Error::LengthMismatch { expected: rod.length_value, actual: gap });
        }
        let mut ok = false;
        for _ in 0..MAX_RETRIES {
            let spin = Orthogonal::random(dim - 1, rng);
            let axis = AxisMap::new(canon.point(rod.u), canon.point(rod.v), &pa, &pb, &spin);
            emb.resize(base + rod.graph.vertex_count() - 2);
            for x in 0..canon.len() {
                if x != rod.u && x != rod.v {
                    emb.point_mut(map[x]).copy_from_slice(&axis.apply(canon.point(x)));
                }
            }
            let check = LocalCheck { embedding: emb, placed: emb.len(), new: base..emb.len() };
            match check_new_points(&check, adjacent, tol, rng) {
                None => {
                    ok = true;
                    break;
                }
                Some(v) => log::debug!("glue retry after {v:?}"),
            }
        }
        if !ok {
            return Err(Error::DegeneracyRetryExhausted(MAX_RETRIES));
        }
    }
    Ok(())
}

/// Non-critical embedding of the reduction graph `H` from a proper coloring
/// of its source graph.
pub fn witness_embedding(inst: &ReductionInstance, c: &[u8], seed: u64, tol: &ToleranceConfig) -> Result<Embedding> {
    tol.validate()?;
    let d = inst.d();
    let mut rng = rng_stream(seed, 0);
    let mut emb = base_witness(&inst.source, c, d, &mut rng)?;
    let adj = inst.h.adjacency();
    let adjacent = |a: usize, b: usize| adj.has_edge(a, b);
    let prefix = emb.len();
    let check = LocalCheck { embedding: &emb, placed: prefix, new: 0..prefix };
    if let Some(v) = check_new_points(&check, &adjacent, tol, &mut rng) {
        log::debug!("base witness violates non-criticality: {v:?}");
        return Err(Error::DegeneracyRetryExhausted(0));
    }
    let mut rng = rng_stream(seed, 1);
    for z in inst.aux_start()..inst.h.vertex_count() {
        let Role::Aux { class, p, q } = inst.roles[z] else {
            unreachable!("aux block holds only apex vertices")
        };
        let lens = inst.params.class(class);
        let mut ok = false;
        for _ in 0..MAX_RETRIES {
            let pz = place_apex(emb.point(p), emb.point(q), lens.a, lens.b, &mut rng)?;
            emb.push(&pz);
            let check = LocalCheck { embedding: &emb, placed: z + 1, new: z..z + 1 };
            match check_new_points(&check, &adjacent, tol, &mut rng) {
                None => {
                    ok = true;
                    break;
                }
                Some(_) => emb.resize(z),
            }
        }
        if !ok {
            return Err(Error::DegeneracyRetryExhausted(MAX_RETRIES));
        }
    }
    Ok(emb)
}

/// Witness for the expanded unit-distance graph: the witness of `H` with
/// every substituted edge replaced by a glued rod layout.
pub fn witness_embedding_expanded(
    inst: &ReductionInstance,
    expanded: &ExpandedInstance,
    c: &[u8],
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<Embedding> {
    let mut emb = witness_embedding(inst, c, seed, tol)?;
    let adj = expanded.graph.adjacency();
    let adjacent = |a: usize, b: usize| adj.has_edge(a, b);
    let jobs: Vec<(VertexId, VertexId, &RodCertificate)> = expanded
        .substitutions
        .iter()
        .map(|(i, rod)| {
            let e = inst.h.edges()[*i];
            (e.u, e.v, &**rod)
        })
        .collect();
    let mut rng = rng_stream(seed, 2);
    glue_jobs(&mut emb, &adjacent, &jobs, &mut rng, tol)?;
    Ok(emb)
}

/// Read a coloring off an embedding of `H`: a vertex on the shorter arc
/// between `u_0` and `u_1` gets color 2, on the shorter arc between `u_0`
/// and `u_2` color 1, otherwise color 0.
pub fn extract_coloring(inst: &ReductionInstance, e: &Embedding, tol: &ToleranceConfig) -> Result<Coloring> {
    let d = inst.d();
    if e.dim() != d {
        return Err(Error::Parse(format!("embedding dimension {} differs from instance dimension {d}", e.dim())));
    }
    if e.len() < inst.h.vertex_count() {
        return Err(Error::MissingVertexCoordinates { have: e.len(), need: inst.h.vertex_count(), dim: e.dim() });
    }
    let k: Vec<&[f64]> = inst.k_vertices().map(|x| e.point(x)).collect();
    for i in 0..k.len() {
        for j in (i + 1)..k.len() {
            let dij = dist(k[i], k[j]);
            if (dij - 1.0).abs() > tol.eps_sep {
                return Err(Error::DegenerateK(format!("|K{i} K{j}| = {dij}")));
            }
        }
    }
    let residual = crate::graph::embedding_residual(&inst.h, e)?;
    if residual > tol.eps_len {
        return Err(Error::NotAnEmbedding(residual));
    }
    let origin: Vec<f64> = (0..d).map(|c| k.iter().map(|p| p[c]).sum::<f64>() / k.len() as f64).collect();
    let hull: Vec<Vec<f64>> = k.iter().skip(1).map(|p| sub(p, k[0])).collect();
    let hull = orthonormal_basis(&hull, 1e-6);
    // complement of the clique's hull, seeded by the axes that stick out most
    let mut axes: Vec<(f64, Vec<f64>)> = (0..d)
        .map(|i| {
            let mut w = vec![0.0; d];
            w[i] = 1.0;
            for b in &hull {
                let p = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
            (norm(&w), w)
        })
        .collect();
    axes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut seeds = hull.clone();
    seeds.extend(axes.into_iter().map(|a| a.1));
    let full = orthonormal_basis(&seeds, 1e-6);
    if full.len() < hull.len() + 2 {
        return Err(Error::DegenerateK("clique hull leaves no 2-plane".into()));
    }
    let (b1, b2) = (&full[hull.len()], &full[hull.len() + 1]);
    let angle = |x: VertexId| {
        let rel = sub(e.point(x), &origin);
        dot(&rel, b2).atan2(dot(&rel, b1))
    };
    let u: Vec<f64> = (0..3).map(|i| angle(inst.u_vertex(i))).collect();
    Ok((0..inst.source.vertex_count())
        .map(|i| {
            let t = angle(inst.v_vertex(i));
            if on_short_arc(u[0], u[1], t) {
                2
            } else if on_short_arc(u[0], u[2], t) {
                1
            } else {
                0
            }
        })
        .collect())
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

fn on_short_arc(from: f64, to: f64, t: f64) -> bool {
    let span = wrap(to - from);
    let pos = wrap(t - from);
    pos.signum() == span.signum() && pos.abs() <= span.abs()
}
