//! Rod gadgets: the d-dimensional Moser spindle, edge substitution, rod
//! multiplication, `D^k` rods, the angular rod and interval-targeted rods.
//!
//! A rod is a graph with two terminals whose distance is the same in every
//! embedding. Rods carry their length symbolically ([`LengthExpr`]) and a
//! construction [`Trace`] that the witness code replays to lay out a
//! canonical embedding without solving anything.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Embedding, VertexId, WeightedGraph};

/// Guard band for the strict window comparisons of the angular search.
pub const WINDOW_GUARD: f64 = 1e-12;
pub const DEFAULT_SEARCH_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionConstants {
    pub d: usize,
    /// Altitude of the regular unit d-simplex.
    pub h: f64,
    /// Spindle length `2h`.
    #[serde(rename = "D")]
    pub big_d: f64,
    /// Radius of the circle of points at unit distance from a unit
    /// (d-1)-vertex clique.
    pub r0: f64,
    /// Central angle of a unit chord on that circle.
    pub alpha: f64,
}

pub fn dimension_constants(d: usize) -> Result<DimensionConstants> {
    if d < 3 {
        return Err(Error::DimensionTooSmall(d));
    }
    let df = d as f64;
    let h = ((df + 1.0) / (2.0 * df)).sqrt();
    Ok(DimensionConstants {
        d,
        h,
        big_d: 2.0 * h,
        r0: (df / (2.0 * (df - 1.0))).sqrt(),
        alpha: (1.0 / df).acos(),
    })
}

impl DimensionConstants {
    /// Chord of the radius-`r0` circle subtending `theta` (no domain check).
    pub fn chord(&self, theta: f64) -> f64 {
        2.0 * self.r0 * (theta / 2.0).sin()
    }

    /// Angle `x_n = (n - 1) alpha mod 2 pi` reached after `n - 1` unit steps.
    pub fn step_angle(&self, n: u64) -> f64 {
        ((n - 1) as f64 * self.alpha).rem_euclid(2.0 * PI)
    }
}

/// Exact symbolic rod length.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthExpr {
    Unit,
    /// `D^k` for the spindle length `D` of dimension `dim`.
    DPow { dim: usize, k: u32 },
    /// `chord(x_n)` with `x_n = (n - 1) alpha mod 2 pi`.
    Chord { dim: usize, n: u64 },
    Product { factors: Vec<LengthExpr> },
}

impl LengthExpr {
    pub fn value(&self) -> f64 {
        match *self {
            LengthExpr::Unit => 1.0,
            LengthExpr::DPow { dim, k } => {
                let c = dimension_constants(dim).expect("length expressions carry valid dimensions");
                c.big_d.powi(k as i32)
            }
            LengthExpr::Chord { dim, n } => {
                let c = dimension_constants(dim).expect("length expressions carry valid dimensions");
                c.chord(c.step_angle(n))
            }
            LengthExpr::Product { ref factors } => factors.iter().map(LengthExpr::value).product(),
        }
    }

    /// Product in normal form: nested products flattened, unit factors
    /// dropped, powers of the same base merged, factors sorted.
    pub fn product(a: &LengthExpr, b: &LengthExpr) -> LengthExpr {
        let mut flat = Vec::new();
        for x in [a, b] {
            x.collect_factors(&mut flat);
        }
        let mut powers: Vec<(usize, u32)> = Vec::new();
        let mut chords = Vec::new();
        for f in flat {
            match f {
                LengthExpr::DPow { dim, k } => match powers.iter_mut().find(|p| p.0 == dim) {
                    Some(p) => p.1 += k,
                    None => powers.push((dim, k)),
                },
                other => chords.push(other),
            }
        }
        let mut factors: Vec<LengthExpr> = powers
            .into_iter()
            .filter(|p| p.1 > 0)
            .map(|(dim, k)| LengthExpr::DPow { dim, k })
            .chain(chords)
            .collect();
        factors.sort_by_key(|f| match *f {
            LengthExpr::DPow { dim, k } => (0, dim, k as u64),
            LengthExpr::Chord { dim, n } => (1, dim, n),
            _ => (2, 0, 0),
        });
        match factors.len() {
            0 => LengthExpr::Unit,
            1 => factors.pop().unwrap(),
            _ => LengthExpr::Product { factors },
        }
    }

    fn collect_factors(&self, out: &mut Vec<LengthExpr>) {
        match self {
            LengthExpr::Unit | LengthExpr::DPow { k: 0, .. } => {}
            LengthExpr::Product { factors } => factors.iter().for_each(|f| f.collect_factors(out)),
            other => out.push(other.clone()),
        }
    }
}

/// How a rod was built. Replayed by the witness code to lay out a canonical
/// embedding.
#[derive(Clone, Debug)]
pub enum Trace {
    UnitEdge,
    Spindle { dim: usize },
    /// Weighted skeleton of the angular rod: clique, circle path and
    /// length-`D` skip edges.
    AngularSkeleton { dim: usize, n: u64 },
    /// Every listed edge of `host` replaced by `part`.
    Substitute { host: Arc<RodCertificate>, edges: Vec<usize>, part: Arc<RodCertificate> },
    /// Every edge of `outer`, scaled to the length of `inner`, replaced by `inner`.
    Multiply { outer: Arc<RodCertificate>, inner: Arc<RodCertificate> },
}

/// Serializable form of a [`Trace`]; enough to rebuild the rod exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceDescriptor {
    UnitEdge,
    Spindle { dim: usize },
    AngularSkeleton { dim: usize, n: u64 },
    Substitute { host: Box<TraceDescriptor>, edges: Vec<usize>, part: Box<TraceDescriptor> },
    Multiply { outer: Box<TraceDescriptor>, inner: Box<TraceDescriptor> },
}

#[derive(Debug)]
pub struct RodCertificate {
    pub graph: WeightedGraph,
    pub u: VertexId,
    pub v: VertexId,
    pub length: LengthExpr,
    pub length_value: f64,
    pub trace: Trace,
    pub(crate) canonical: OnceLock<Result<Arc<Embedding>>>,
}

impl RodCertificate {
    fn new(graph: WeightedGraph, u: VertexId, v: VertexId, length: LengthExpr, trace: Trace) -> Self {
        let length_value = length.value();
        Self { graph, u, v, length, length_value, trace, canonical: OnceLock::new() }
    }

    pub fn rod_length(&self) -> f64 {
        self.length_value
    }

    pub fn descriptor(&self) -> TraceDescriptor {
        match &self.trace {
            Trace::UnitEdge => TraceDescriptor::UnitEdge,
            Trace::Spindle { dim } => TraceDescriptor::Spindle { dim: *dim },
            Trace::AngularSkeleton { dim, n } => TraceDescriptor::AngularSkeleton { dim: *dim, n: *n },
            Trace::Substitute { host, edges, part } => TraceDescriptor::Substitute {
                host: Box::new(host.descriptor()),
                edges: edges.clone(),
                part: Box::new(part.descriptor()),
            },
            Trace::Multiply { outer, inner } => TraceDescriptor::Multiply {
                outer: Box::new(outer.descriptor()),
                inner: Box::new(inner.descriptor()),
            },
        }
    }

    pub fn from_descriptor(desc: &TraceDescriptor) -> Result<Self> {
        match desc {
            TraceDescriptor::UnitEdge => Ok(unit_edge_rod()),
            TraceDescriptor::Spindle { dim } => moser_spindle(*dim),
            TraceDescriptor::AngularSkeleton { dim, n } => angular_skeleton(*dim, *n),
            TraceDescriptor::Substitute { host, edges, part } => {
                let host = Arc::new(Self::from_descriptor(host)?);
                let part = Arc::new(Self::from_descriptor(part)?);
                substitute_rod_edges(host, edges.clone(), part)
            }
            TraceDescriptor::Multiply { outer, inner } => {
                rod_multiply(&Arc::new(Self::from_descriptor(outer)?), &Arc::new(Self::from_descriptor(inner)?))
            }
        }
    }
}

impl Clone for RodCertificate {
    fn clone(&self) -> Self {
        Self {
            graph: self.graph.clone(),
            u: self.u,
            v: self.v,
            length: self.length.clone(),
            length_value: self.length_value,
            trace: self.trace.clone(),
            canonical: self.canonical.clone(),
        }
    }
}

pub fn unit_edge_rod() -> RodCertificate {
    let g = WeightedGraph::from_canonical(2, vec![Edge { u: 0, v: 1, len: 1.0 }]);
    RodCertificate::new(g, 0, 1, LengthExpr::Unit, Trace::UnitEdge)
}

/// Vertex layout of the spindle: `A = 0`, `B = 1`, clique `K1` at
/// `2..2+d`, clique `K2` at `2+d..2+2d`, apex `C = 2+2d`. `A` and `B` cap the
/// two sides of `K1`, `A` and `C` the two sides of `K2`, and `|BC| = 1`.
pub fn moser_spindle(d: usize) -> Result<RodCertificate> {
    dimension_constants(d)?;
    let (a, b, c) = (0, 1, 2 + 2 * d);
    let k1: Vec<usize> = (2..2 + d).collect();
    let k2: Vec<usize> = (2 + d..2 + 2 * d).collect();
    let mut edges = Vec::new();
    for k in [&k1, &k2] {
        for i in 0..d {
            for j in (i + 1)..d {
                edges.push(unit(k[i], k[j]));
            }
        }
    }
    for (apex, k) in [(a, &k1), (b, &k1), (a, &k2), (c, &k2)] {
        edges.extend(k.iter().map(|&x| unit(apex, x)));
    }
    edges.push(unit(b, c));
    let g = WeightedGraph::from_canonical(2 * d + 3, edges);
    Ok(RodCertificate::new(g, a, b, LengthExpr::DPow { dim: d, k: 1 }, Trace::Spindle { dim: d }))
}

fn unit(a: usize, b: usize) -> Edge {
    Edge { u: a.min(b), v: a.max(b), len: 1.0 }
}

/// Replace the edge `{a, b}` of `g` by `rod`, identifying the rod terminals
/// `u, v` with `a, b`. Interior rod vertices are appended after `g`'s
/// vertices in increasing id order.
pub fn substitute_edge(g: &WeightedGraph, edge: (VertexId, VertexId), rod: &RodCertificate) -> Result<WeightedGraph> {
    let idx = g.find_edge(edge.0, edge.1).ok_or(Error::EdgeNotFound(edge.0, edge.1))?;
    let e = g.edges()[idx];
    // keep the caller's orientation: rod.u lands on edge.0
    let oriented = Edge { u: edge.0, v: edge.1, len: e.len };
    substitute_oriented(g, &[(idx, oriented, rod)])
}

/// Substitute several edges at once. Each entry is (edge index, oriented
/// endpoints, rod). Kept edges come first in their original order, then the
/// rod edges of each substitution in entry order.
pub(crate) fn substitute_oriented(g: &WeightedGraph, subs: &[(usize, Edge, &RodCertificate)]) -> Result<WeightedGraph> {
    let mut replaced = vec![false; g.edge_count()];
    let mut extra = 0;
    for &(idx, e, rod) in subs {
        if idx >= g.edge_count() {
            return Err(Error::EdgeNotFound(e.u, e.v));
        }
        if replaced[idx] {
            return Err(Error::InvalidRod(format!("edge {idx} substituted twice")));
        }
        if (rod.length_value - e.len).abs() > 1e-12 {
            return Err(Error::LengthMismatch { expected: e.len, actual: rod.length_value });
        }
        replaced[idx] = true;
        extra += rod.graph.vertex_count() - 2;
    }
    let mut edges: Vec<Edge> = g
        .edges()
        .iter()
        .zip(&replaced)
        .filter(|(_, &r)| !r)
        .map(|(e, _)| *e)
        .collect();
    let mut next = g.vertex_count();
    for &(_, e, rod) in subs {
        let map = interior_map(rod, e.u, e.v, next);
        next += rod.graph.vertex_count() - 2;
        edges.extend(rod.graph.edges().iter().map(|re| {
            let (x, y) = (map[re.u], map[re.v]);
            Edge { u: x.min(y), v: x.max(y), len: re.len }
        }));
    }
    Ok(WeightedGraph::from_canonical(g.vertex_count() + extra, edges))
}

/// Rod vertex id -> host id when the rod is glued onto `(a, b)` with interior
/// vertices numbered from `base`.
pub(crate) fn interior_map(rod: &RodCertificate, a: VertexId, b: VertexId, base: usize) -> Vec<VertexId> {
    let mut next = base;
    (0..rod.graph.vertex_count())
        .map(|x| {
            if x == rod.u {
                a
            } else if x == rod.v {
                b
            } else {
                next += 1;
                next - 1
            }
        })
        .collect()
}

fn substitute_rod_edges(host: Arc<RodCertificate>, edges: Vec<usize>, part: Arc<RodCertificate>) -> Result<RodCertificate> {
    let subs: Vec<(usize, Edge, &RodCertificate)> = edges
        .iter()
        .map(|&i| {
            host.graph
                .edges()
                .get(i)
                .map(|&e| (i, e, &*part))
                .ok_or(Error::InvalidRod(format!("host has no edge {i}")))
        })
        .collect::<Result<_>>()?;
    let g = substitute_oriented(&host.graph, &subs)?;
    let (u, v, length) = (host.u, host.v, host.length.clone());
    Ok(RodCertificate::new(g, u, v, length, Trace::Substitute { host, edges, part }))
}

/// Product rod: every edge of the unit-distance rod `a`, stretched to `b`'s
/// length, is replaced by a copy of `b`. Terminals are `a`'s.
pub fn rod_multiply(a: &Arc<RodCertificate>, b: &Arc<RodCertificate>) -> Result<RodCertificate> {
    if !a.graph.is_unit() {
        return Err(Error::InvalidRod("outer factor of a product must be a unit-distance rod".into()));
    }
    let scaled = a.graph.scaled(b.length_value);
    let subs: Vec<(usize, Edge, &RodCertificate)> =
        scaled.edges().iter().enumerate().map(|(i, &e)| (i, e, &**b)).collect();
    let g = substitute_oriented(&scaled, &subs)?;
    let length = LengthExpr::product(&a.length, &b.length);
    Ok(RodCertificate::new(g, a.u, a.v, length, Trace::Multiply { outer: a.clone(), inner: b.clone() }))
}

/// Rod of length `D^k`: the unit edge for `k = 0`, otherwise a product of
/// `k` spindles.
pub fn rod_power(d: usize, k: u32) -> Result<RodCertificate> {
    let spindle = Arc::new(moser_spindle(d)?);
    if k == 0 {
        return Ok(unit_edge_rod());
    }
    let mut rod = spindle.clone();
    for _ in 1..k {
        rod = Arc::new(rod_multiply(&rod, &spindle)?);
    }
    Ok(Arc::try_unwrap(rod).unwrap_or_else(|shared| (*shared).clone()))
}

/// Smallest `n >= 2` whose step angle lies strictly inside the window
/// `(2 asin(a / 2r0), 2 asin(b / 2r0))`, with the returned angle.
pub fn angular_index_search(a: f64, b: f64, d: usize) -> Result<(u64, f64)> {
    angular_index_search_capped(a, b, d, DEFAULT_SEARCH_CAP)
}

pub fn angular_index_search_capped(a: f64, b: f64, d: usize, cap: u64) -> Result<(u64, f64)> {
    if !(a > 0.0 && a < b && b < 1.0) {
        return Err(Error::InvalidInterval(a, b));
    }
    let c = dimension_constants(d)?;
    let lo = 2.0 * (a / (2.0 * c.r0)).asin();
    let hi = 2.0 * (b / (2.0 * c.r0)).asin();
    for n in 2..cap.saturating_add(2) {
        let x = c.step_angle(n);
        if x > lo + WINDOW_GUARD && x < hi - WINDOW_GUARD {
            let l = c.chord(x);
            if l > a + WINDOW_GUARD && l < b - WINDOW_GUARD {
                return Ok((n, x));
            }
        }
    }
    Err(Error::IterationCapExceeded(cap))
}

/// Weighted skeleton of the angular rod. Layout: clique `K` at
/// `0..d-1`, circle path `v_1..v_n` at `d-1..d-1+n`. Edges: clique, every
/// `v_i` to every clique vertex, consecutive `v_i v_{i+1}` (unit), and skip
/// edges `v_i v_{i+2}` of length `D`. Terminals `v_1, v_n`.
pub fn angular_skeleton(d: usize, n: u64) -> Result<RodCertificate> {
    let c = dimension_constants(d)?;
    if n < 2 {
        return Err(Error::InvalidRod(format!("angular skeleton needs n >= 2, got {n}")));
    }
    let n = n as usize;
    let m = d - 1;
    let path = |i: usize| m + i;
    let mut edges = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            edges.push(unit(i, j));
        }
    }
    for i in 0..n {
        edges.extend((0..m).map(|k| unit(k, path(i))));
    }
    for i in 0..n - 1 {
        edges.push(unit(path(i), path(i + 1)));
    }
    for i in 0..n.saturating_sub(2) {
        edges.push(Edge { u: path(i), v: path(i + 2), len: c.big_d });
    }
    let g = WeightedGraph::from_canonical(m + n, edges);
    Ok(RodCertificate::new(
        g,
        path(0),
        path(n - 1),
        LengthExpr::Chord { dim: d, n: n as u64 },
        Trace::AngularSkeleton { dim: d, n: n as u64 },
    ))
}

/// Unit-distance rod with length in `(a, b)` for `0 < a < b < 1`: the
/// angular skeleton with every skip edge replaced by a spindle.
pub fn angular_rod(a: f64, b: f64, d: usize) -> Result<RodCertificate> {
    dimension_constants(d)?;
    let (n, _) = angular_index_search(a, b, d)?;
    let skeleton = Arc::new(angular_skeleton(d, n)?);
    let skips: Vec<usize> = skeleton
        .graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.len != 1.0)
        .map(|(i, _)| i)
        .collect();
    substitute_rod_edges(skeleton, skips, Arc::new(moser_spindle(d)?))
}

/// Smallest `k >= 0` with `D^k > b`.
pub fn rod_scale_exponent(b: f64, d: usize) -> Result<u32> {
    let c = dimension_constants(d)?;
    let mut k = 0;
    while c.big_d.powi(k as i32) <= b {
        k += 1;
    }
    Ok(k)
}

/// Unit-distance rod whose length lies in `(a, b)`: an angular rod for
/// `(a / D^k, b / D^k)` multiplied by the `D^k` rod, with minimal `k`.
/// Results are cached per `(a, b, d)`.
pub fn make_rod(a: f64, b: f64, d: usize) -> Result<Arc<RodCertificate>> {
    if !(a > 0.0 && a < b && b.is_finite()) {
        return Err(Error::InvalidInterval(a, b));
    }
    dimension_constants(d)?;
    type Slot = Arc<OnceLock<Result<Arc<RodCertificate>>>>;
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64, usize), Slot>>> = OnceLock::new();
    let slot = {
        let mut map = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|p| p.into_inner());
        map.entry((a.to_bits(), b.to_bits(), d)).or_default().clone()
    };
    slot.get_or_init(|| build_rod(a, b, d).map(Arc::new)).clone()
}

fn build_rod(a: f64, b: f64, d: usize) -> Result<RodCertificate> {
    let k = rod_scale_exponent(b, d)?;
    let scale = dimension_constants(d)?.big_d.powi(k as i32);
    let angular = angular_rod(a / scale, b / scale, d)?;
    let rod = if k == 0 {
        angular
    } else {
        rod_multiply(&Arc::new(angular), &Arc::new(rod_power(d, k)?))?
    };
    if !(rod.length_value > a && rod.length_value < b) {
        return Err(Error::InvalidRod(format!("length {} escaped ({a}, {b})", rod.length_value)));
    }
    log::debug!(
        "rod ({a}, {b}) in d={d}: k={k}, {} vertices, {} edges, length {}",
        rod.graph.vertex_count(),
        rod.graph.edge_count(),
        rod.length_value
    );
    Ok(rod)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom2(n: usize) -> usize {
        n * (n - 1) / 2
    }

    #[test]
    fn constants_d3() {
        let c = dimension_constants(3).unwrap();
        assert!((c.h - 0.816496580927726).abs() < 1e-12);
        assert!((c.big_d - 1.632993161855452).abs() < 1e-12);
        assert!((c.r0 - 0.8660254037844386).abs() < 1e-12);
        assert!((c.alpha - 1.2309594173407747).abs() < 1e-12);
        assert!((c.chord(c.alpha) - 1.0).abs() < 1e-12);
        assert_eq!(dimension_constants(2).unwrap_err(), Error::DimensionTooSmall(2));
    }

    #[test]
    fn spindle_counts() {
        for d in 3..9 {
            let s = moser_spindle(d).unwrap();
            assert_eq!(s.graph.vertex_count(), 2 * d + 3);
            assert_eq!(s.graph.edge_count(), 2 * binom2(d) + 4 * d + 1);
            assert!(s.graph.is_unit());
        }
        let s = moser_spindle(5).unwrap();
        assert_eq!((s.graph.vertex_count(), s.graph.edge_count()), (13, 41));
    }

    #[test]
    fn unit_edge_is_identity_factor() {
        let s = Arc::new(moser_spindle(3).unwrap());
        let one = Arc::new(unit_edge_rod());
        let p = rod_multiply(&s, &one).unwrap();
        assert_eq!(p.length, s.length);
        assert_eq!(p.graph.vertex_count(), s.graph.vertex_count());
        assert_eq!(p.graph.edge_count(), s.graph.edge_count());
        let q = rod_multiply(&one, &s).unwrap();
        assert_eq!(q.length, s.length);
        assert_eq!(q.graph.vertex_count(), 9);
    }

    #[test]
    fn spindle_squared() {
        let p = rod_power(3, 2).unwrap();
        assert_eq!((p.graph.vertex_count(), p.graph.edge_count()), (142, 361));
        assert!((p.length_value - 8.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.length, LengthExpr::DPow { dim: 3, k: 2 });
        assert!(p.graph.is_unit());
        assert_eq!(rod_power(3, 0).unwrap().graph.vertex_count(), 2);
    }

    #[test]
    fn substitution_into_triangle() {
        let c = dimension_constants(3).unwrap();
        let g = WeightedGraph::build(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, c.big_d)]).unwrap();
        let s = moser_spindle(3).unwrap();
        let h = substitute_edge(&g, (0, 2), &s).unwrap();
        assert_eq!((h.vertex_count(), h.edge_count()), (10, 21));
        assert!(h.is_unit());

        let e = unit_edge_rod();
        let same = substitute_edge(&g, (0, 1), &e).unwrap();
        assert_eq!(same.vertex_count(), 3);
        assert_eq!(same.edge_count(), 3);

        let bad = WeightedGraph::build(2, &[(0, 1, 1.0)]).unwrap();
        let mut long = unit_edge_rod();
        long.length_value = 1.5;
        assert!(matches!(substitute_edge(&bad, (0, 1), &long), Err(Error::LengthMismatch { .. })));
        assert_eq!(substitute_edge(&bad, (0, 2), &e).unwrap_err(), Error::EdgeNotFound(0, 2));
    }

    #[test]
    fn angular_search_known_case() {
        let (n, x) = angular_index_search(0.3, 0.4, 3).unwrap();
        assert_eq!(n, 32);
        assert!((x - 0.46063009448649694).abs() < 1e-9);
        let c = dimension_constants(3).unwrap();
        assert!((c.chord(x) - 0.39539994230919523).abs() < 1e-12);
        assert_eq!(angular_index_search(0.4, 0.3, 3).unwrap_err(), Error::InvalidInterval(0.4, 0.3));
        assert!(matches!(angular_index_search(0.3, 0.4, 2), Err(Error::DimensionTooSmall(2))));
        assert_eq!(angular_index_search_capped(0.3, 0.4, 3, 10).unwrap_err(), Error::IterationCapExceeded(10));
    }

    #[test]
    fn angular_rod_counts() {
        let sk = angular_skeleton(3, 32).unwrap();
        assert_eq!((sk.graph.vertex_count(), sk.graph.edge_count()), (34, 1 + 64 + 31 + 30));
        let r = angular_rod(0.3, 0.4, 3).unwrap();
        assert_eq!((r.graph.vertex_count(), r.graph.edge_count()), (244, 666));
        assert!(r.graph.is_unit());
        assert!(r.length_value > 0.3 && r.length_value < 0.4);
        assert!(matches!(angular_rod(0.3, 0.4, 2), Err(Error::DimensionTooSmall(2))));
    }

    #[test]
    fn make_rod_exponents() {
        assert_eq!(rod_scale_exponent(0.4, 3).unwrap(), 0);
        assert_eq!(rod_scale_exponent(1.3, 3).unwrap(), 1);
        let r = make_rod(1.2, 1.3, 3).unwrap();
        assert!(r.length_value > 1.2 && r.length_value < 1.3);
        assert!(matches!(r.length, LengthExpr::Product { .. }));
        let again = make_rod(1.2, 1.3, 3).unwrap();
        assert!(Arc::ptr_eq(&r, &again));
        let small = make_rod(0.0089582, 0.0134374, 3).unwrap();
        assert!(small.length_value > 0.0089582 && small.length_value < 0.0134374);
    }

    #[test]
    fn normal_form_of_products() {
        let a = LengthExpr::DPow { dim: 3, k: 1 };
        let b = LengthExpr::Chord { dim: 3, n: 32 };
        let ab = LengthExpr::product(&a, &b);
        let ba = LengthExpr::product(&b, &a);
        assert_eq!(ab, ba);
        assert_eq!(LengthExpr::product(&a, &a), LengthExpr::DPow { dim: 3, k: 2 });
        assert_eq!(LengthExpr::product(&LengthExpr::Unit, &b), b);
        assert!((ab.value() - a.value() * b.value()).abs() < 1e-12);
    }

    #[test]
    fn descriptor_rebuilds_identically() {
        let r = make_rod(1.2, 1.3, 3).unwrap();
        let back = RodCertificate::from_descriptor(&r.descriptor()).unwrap();
        assert_eq!(back.graph, r.graph);
        assert_eq!(back.length, r.length);
        assert_eq!((back.u, back.v), (r.u, r.v));
    }
}
