use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Embedding, VertexId, WeightedGraph};
use crate::error::{Error, Result};
use crate::geom::{dist, dist_sq, middle_sine};

/// Tolerances that discretize the exact conditions of an embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    /// Max allowed `|distance - length|` on an edge.
    pub eps_len: f64,
    /// Min pair separation, and min `|distance - 1|` for non-adjacent pairs.
    pub eps_sep: f64,
    /// Min sine of the middle angle of any vertex triple.
    pub eps_collinear: f64,
    /// Above this many vertices the triple check is sampled.
    pub triple_exhaustive_limit: usize,
    pub triple_samples: usize,
    /// Above this many vertices the pair check is sampled.
    pub pair_exhaustive_limit: usize,
    pub pair_samples: usize,
    /// Budgets (new points x placed points) for incremental placement checks.
    pub local_pair_budget: usize,
    pub local_triple_budget: usize,
    pub local_samples: usize,
    pub sample_seed: u64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_len: 1e-9,
            eps_sep: 1e-6,
            eps_collinear: 1e-6,
            triple_exhaustive_limit: 2000,
            triple_samples: 1_000_000,
            pair_exhaustive_limit: 50_000,
            pair_samples: 1_000_000,
            local_pair_budget: 5_000_000,
            local_triple_budget: 20_000,
            local_samples: 20_000,
            sample_seed: 0x5eed,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.eps_len, self.eps_sep, self.eps_collinear]
            .iter()
            .all(|&x| x > 0.0 && x.is_finite());
        if !all_positive {
            return Err(Error::InvalidTolerance("tolerances must be strictly positive".into()));
        }
        if self.eps_len >= self.eps_sep {
            return Err(Error::InvalidTolerance(format!(
                "eps_len ({}) must be smaller than eps_sep ({})",
                self.eps_len, self.eps_sep
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    EdgeLength,
    CoincidentPair,
    UnitNonAdjacent,
    CollinearTriple,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub vertices: Vec<VertexId>,
    /// Edge: `|distance - length|`; pairs: the distance; triples: the sine.
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationCounts {
    pub edge_length: usize,
    pub coincident_pair: usize,
    pub unit_non_adjacent: usize,
    pub collinear_triple: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub residual: f64,
    pub is_embedding: bool,
    pub is_strict: bool,
    pub is_injective: bool,
    pub is_non_critical: bool,
    pub pairs_sampled: bool,
    pub triples_sampled: bool,
    pub counts: ViolationCounts,
    /// First violations found of each kind, capped at [`MAX_LISTED`] per kind.
    pub violations: Vec<Violation>,
}

pub const MAX_LISTED: usize = 32;

/// Max over edges of `|distance - length|`.
pub fn embedding_residual(g: &WeightedGraph, e: &Embedding) -> Result<f64> {
    e.ensure_covers(g)?;
    Ok(g.edges()
        .par_iter()
        .map(|edge| (dist(e.point(edge.u), e.point(edge.v)) - edge.len).abs())
        .reduce(|| 0.0, f64::max))
}

pub fn classify_embedding(
    g: &WeightedGraph,
    e: &Embedding,
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    e.ensure_covers(g)?;
    let n = g.vertex_count();
    let adj = g.adjacency();
    let mut counts = ViolationCounts::default();
    let mut violations = Vec::new();

    let mut residual: f64 = 0.0;
    for edge in g.edges() {
        let r = (dist(e.point(edge.u), e.point(edge.v)) - edge.len).abs();
        residual = residual.max(r);
        if r > tol.eps_len {
            counts.edge_length += 1;
            if counts.edge_length <= MAX_LISTED {
                violations.push(Violation {
                    kind: ViolationKind::EdgeLength,
                    vertices: vec![edge.u, edge.v],
                    value: r,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(tol.sample_seed);
    let pairs_sampled = n > tol.pair_exhaustive_limit;
    let pair_hits = if pairs_sampled {
        let samples: Vec<(usize, usize)> = (0..tol.pair_samples)
            .filter_map(|_| {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                (i != j).then_some((i.min(j), i.max(j)))
            })
            .collect();
        samples
            .into_par_iter()
            .filter_map(|(i, j)| pair_violation(e, &|a, b| adj.has_edge(a, b), i, j, tol))
            .collect::<Vec<_>>()
    } else {
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let adj = &adj;
                ((i + 1)..n).filter_map(move |j| pair_violation(e, &|a, b| adj.has_edge(a, b), i, j, tol))
            })
            .collect::<Vec<_>>()
    };
    for v in pair_hits {
        let c = match v.kind {
            ViolationKind::CoincidentPair => &mut counts.coincident_pair,
            _ => &mut counts.unit_non_adjacent,
        };
        *c += 1;
        if *c <= MAX_LISTED {
            violations.push(v);
        }
    }

    let triples_sampled = n > tol.triple_exhaustive_limit;
    let triple_hits: Vec<Violation> = if n < 3 {
        Vec::new()
    } else if triples_sampled {
        let samples: Vec<[usize; 3]> = (0..tol.triple_samples)
            .filter_map(|_| {
                let mut t = [rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)];
                t.sort_unstable();
                (t[0] != t[1] && t[1] != t[2]).then_some(t)
            })
            .collect();
        samples
            .into_par_iter()
            .filter_map(|t| triple_violation(e, t, tol))
            .collect()
    } else {
        (0..n)
            .into_par_iter()
            .flat_map_iter(|z| collinear_through(e, z, (z + 1)..n, tol))
            .collect()
    };
    for v in triple_hits {
        counts.collinear_triple += 1;
        if counts.collinear_triple <= MAX_LISTED {
            violations.push(v);
        }
    }

    let is_embedding = residual <= tol.eps_len;
    let is_injective = counts.coincident_pair == 0;
    let is_strict = is_embedding && counts.unit_non_adjacent == 0;
    let is_non_critical = is_strict && is_injective && counts.collinear_triple == 0;
    Ok(VerificationReport {
        residual,
        is_embedding,
        is_strict,
        is_injective,
        is_non_critical,
        pairs_sampled,
        triples_sampled,
        counts,
        violations,
    })
}

fn pair_violation(
    e: &Embedding,
    adjacent: &dyn Fn(usize, usize) -> bool,
    i: usize,
    j: usize,
    tol: &ToleranceConfig,
) -> Option<Violation> {
    let d2 = dist_sq(e.point(i), e.point(j));
    if d2 <= tol.eps_sep * tol.eps_sep {
        return Some(Violation {
            kind: ViolationKind::CoincidentPair,
            vertices: vec![i, j],
            value: d2.sqrt(),
        });
    }
    let lo = (1.0 - tol.eps_sep).powi(2);
    let hi = (1.0 + tol.eps_sep).powi(2);
    if d2 >= lo && d2 <= hi {
        let d = d2.sqrt();
        if (d - 1.0).abs() <= tol.eps_sep && !adjacent(i, j) {
            return Some(Violation {
                kind: ViolationKind::UnitNonAdjacent,
                vertices: vec![i, j],
                value: d,
            });
        }
    }
    None
}

fn triple_violation(e: &Embedding, t: [usize; 3], tol: &ToleranceConfig) -> Option<Violation> {
    let s = middle_sine(e.point(t[0]), e.point(t[1]), e.point(t[2]));
    (s <= tol.eps_collinear).then(|| Violation {
        kind: ViolationKind::CollinearTriple,
        vertices: t.to_vec(),
        value: s,
    })
}

/// All near-collinear triples `{z, x, y}` with `x, y` drawn from `others`.
///
/// A triple through `z` is near-collinear exactly when the unit directions
/// from `z` to `x` and to `y` are nearly parallel or antiparallel, so the
/// directions (and their negations) are sorted along one coordinate and swept
/// with a window of width `2 * eps_collinear`; every candidate is confirmed
/// with the middle-angle sine. Points coincident with `z` have no direction
/// and are skipped (they are reported by the pair check).
fn collinear_through(
    e: &Embedding,
    z: usize,
    others: impl Iterator<Item = usize>,
    tol: &ToleranceConfig,
) -> Vec<Violation> {
    let dim = e.dim();
    let pz = e.point(z);
    // directions stored flat; entry k uses dirs[k * dim..], sign +/- per entry
    let mut dirs: Vec<f64> = Vec::new();
    let mut ids: Vec<usize> = Vec::new();
    for x in others {
        if x == z {
            continue;
        }
        let px = e.point(x);
        let d = dist(px, pz);
        if d <= tol.eps_sep {
            continue;
        }
        dirs.extend((0..dim).map(|k| (px[k] - pz[k]) / d));
        ids.push(x);
    }
    let mut order: Vec<(f64, u32)> = Vec::with_capacity(2 * ids.len());
    for k in 0..ids.len() {
        let lead = dirs[k * dim];
        order.push((lead, (2 * k) as u32));
        order.push((-lead, (2 * k + 1) as u32));
    }
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let window = 2.0 * tol.eps_collinear;
    let coord = |entry: u32, c: usize| {
        let v = dirs[(entry as usize / 2) * dim + c];
        if entry % 2 == 0 {
            v
        } else {
            -v
        }
    };
    let mut out = Vec::new();
    for i in 0..order.len() {
        let (lead_i, ei) = order[i];
        let xi = ids[ei as usize / 2];
        for &(lead_j, ej) in &order[(i + 1)..] {
            if lead_j - lead_i > window {
                break;
            }
            let xj = ids[ej as usize / 2];
            if xi == xj {
                continue;
            }
            // count each unordered pair once: the smaller id must carry '+'
            let min_entry = if xi < xj { ei } else { ej };
            if min_entry % 2 == 1 {
                continue;
            }
            if (1..dim).all(|c| (coord(ej, c) - coord(ei, c)).abs() <= window) {
                let mut t = [z, xi, xj];
                t.sort_unstable();
                if let Some(v) = triple_violation(e, t, tol) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Incremental non-criticality check for vertices `new` just added to an
/// embedding whose vertices `0..placed` are all placed (`new` lies inside
/// that prefix). Checks every pair and triple that involves a new vertex,
/// exhaustively within the configured budgets and by sampling beyond them.
pub struct LocalCheck<'a> {
    pub embedding: &'a Embedding,
    pub placed: usize,
    pub new: Range<usize>,
}

pub fn check_new_points<R: Rng + ?Sized>(
    check: &LocalCheck<'_>,
    adjacent: &(dyn Fn(usize, usize) -> bool + Sync),
    tol: &ToleranceConfig,
    rng: &mut R,
) -> Option<Violation> {
    let e = check.embedding;
    let placed = check.placed;
    let new = check.new.clone();
    let work = new.len().saturating_mul(placed);
    if work <= tol.local_pair_budget {
        let hit = new.clone().into_par_iter().find_map_any(|i| {
            (0..placed)
                .filter(|&j| j != i && (j < i || !new.contains(&j)))
                .find_map(|j| pair_violation(e, adjacent, i.min(j), i.max(j), tol))
        });
        if hit.is_some() {
            return hit;
        }
    } else {
        for _ in 0..tol.local_samples {
            let i = rng.random_range(new.clone());
            let j = rng.random_range(0..placed);
            if i != j {
                if let Some(v) = pair_violation(e, adjacent, i.min(j), i.max(j), tol) {
                    return Some(v);
                }
            }
        }
    }
    if placed < 3 {
        return None;
    }
    if work <= tol.local_triple_budget {
        new.clone().into_par_iter().find_map_any(|z| {
            let others = (0..placed).filter(|&x| !(new.contains(&x) && x <= z));
            collinear_through(e, z, others, tol).into_iter().next()
        })
    } else {
        for _ in 0..tol.local_samples {
            let z = rng.random_range(new.clone());
            let x = rng.random_range(0..placed);
            let y = rng.random_range(0..placed);
            if x != y && x != z && y != z {
                let mut t = [z, x, y];
                t.sort_unstable();
                if dist(e.point(t[0]), e.point(t[1])) > tol.eps_sep
                    && dist(e.point(t[1]), e.point(t[2])) > tol.eps_sep
                    && dist(e.point(t[0]), e.point(t[2])) > tol.eps_sep
                {
                    if let Some(v) = triple_violation(e, t, tol) {
                        return Some(v);
                    }
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(dim: usize, pts: &[&[f64]]) -> Embedding {
        Embedding::from_points(dim, &pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn unit_edge_residual() {
        let g = WeightedGraph::build(2, &[(0, 1, 1.0)]).unwrap();
        let e = emb(3, &[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        assert_eq!(embedding_residual(&g, &e).unwrap(), 0.0);
        let e = emb(3, &[&[0.0, 0.0, 0.0], &[1.001, 0.0, 0.0]]);
        assert!((embedding_residual(&g, &e).unwrap() - 0.001).abs() < 1e-15);
    }

    #[test]
    fn equilateral_triangle_is_non_critical() {
        let g = WeightedGraph::build(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let e = emb(3, &[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.5, h, 0.0]]);
        assert!(embedding_residual(&g, &e).unwrap() < 1e-15);
        let r = classify_embedding(&g, &e, &ToleranceConfig::default()).unwrap();
        assert!(r.is_embedding && r.is_strict && r.is_injective && r.is_non_critical);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn coincident_pair_reported() {
        let g = WeightedGraph::build(2, &[]).unwrap();
        let e = emb(3, &[&[0.0; 3], &[0.0; 3]]);
        let r = classify_embedding(&g, &e, &ToleranceConfig::default()).unwrap();
        assert!(!r.is_injective);
        assert!(!r.is_non_critical);
        assert_eq!(r.violations[0].kind, ViolationKind::CoincidentPair);
    }

    #[test]
    fn collinear_path() {
        let g = WeightedGraph::build(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let e = emb(3, &[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[2.0, 0.0, 0.0]]);
        let r = classify_embedding(&g, &e, &ToleranceConfig::default()).unwrap();
        assert!(r.is_embedding && r.is_injective && r.is_strict);
        assert!(!r.is_non_critical);
        assert_eq!(r.counts.collinear_triple, 1);
        assert_eq!(r.violations.last().unwrap().vertices, vec![0, 1, 2]);
    }

    #[test]
    fn non_adjacent_unit_pair_breaks_strictness() {
        let g = WeightedGraph::build(3, &[(0, 1, 1.0)]).unwrap();
        let e = emb(2, &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let r = classify_embedding(&g, &e, &ToleranceConfig::default()).unwrap();
        assert!(r.is_embedding && r.is_injective);
        assert!(!r.is_strict && !r.is_non_critical);
        assert_eq!(r.counts.unit_non_adjacent, 1);
    }

    #[test]
    fn missing_coordinates() {
        let g = WeightedGraph::build(3, &[(0, 1, 1.0)]).unwrap();
        let e = emb(3, &[&[0.0; 3]]);
        assert!(matches!(
            embedding_residual(&g, &e),
            Err(Error::MissingVertexCoordinates { have: 1, need: 3, dim: 3 })
        ));
    }

    #[test]
    fn sweep_matches_brute_force() {
        // points on a few lines plus generic points
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for _ in 0..25 {
            pts.push((0..3).map(|_| rng.random_range(-2.0..2.0)).collect());
        }
        let a = [0.1, 0.2, 0.3];
        let dir = [0.3, -0.5, 0.8];
        for t in [0.7, -1.3, 2.2] {
            pts.push((0..3).map(|k| a[k] + t * dir[k]).collect());
        }
        let e = Embedding::from_points(3, &pts).unwrap();
        let tol = ToleranceConfig::default();
        let n = pts.len();
        let mut brute = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    if let Some(v) = triple_violation(&e, [i, j, k], &tol) {
                        brute.push(v.vertices);
                    }
                }
            }
        }
        let mut swept: Vec<Vec<usize>> = (0..n)
            .flat_map(|z| collinear_through(&e, z, (z + 1)..n, &tol))
            .map(|v| v.vertices)
            .collect();
        swept.sort();
        brute.sort();
        assert_eq!(brute, vec![vec![25, 26, 27]]);
        assert_eq!(swept, brute);
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceConfig::default().validate().is_ok());
        let bad = ToleranceConfig { eps_len: 1e-5, eps_sep: 1e-6, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ToleranceConfig { eps_collinear: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
