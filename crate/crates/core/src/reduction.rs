//! Compiles a 3-coloring instance `G` into the weighted graph `H` whose
//! embeddability in `R^d` is equivalent to the 3-colorability of `G`, and
//! expands `H` into a pure unit-distance graph by substituting rods.
//!
//! Vertex numbering of `H` (all blocks contiguous, in this order):
//!
//! * `K`: `0..d-1`, a unit clique;
//! * `U`: `u_0, u_1, u_2`;
//! * `V`: one vertex per vertex of `G`, in id order;
//! * `Aux`: `aux(u_0,u_1)`, `aux(u_0,u_2)`, `aux(u_1,u_2)`, then
//!   `aux(v_i, u_0..u_2)` for each `i`, then `aux(v_i, v_j)` per edge of `G`
//!   in sorted order.
//!
//! Edges: `E_K`, `E_KU`, `E_KV` (unit), then each apex pair
//! `(p, aux), (aux, q)` of lengths `(a, b)` in the `Aux` order.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadgets::{dimension_constants, make_rod, substitute_oriented, RodCertificate};
use crate::graph::{Edge, SimpleGraph, VertexId, WeightedGraph};

pub const EPSILON: f64 = PI / 24.0;

pub fn chord(theta: f64, d: usize) -> Result<f64> {
    if !(0.0..=2.0 * PI).contains(&theta) {
        return Err(Error::DomainError(theta));
    }
    Ok(dimension_constants(d)?.chord(theta))
}

/// Upper end of an apex window; the `uv` and `vv` windows are unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

/// Distance window `(l, L, R, r)` for an apex vertex `z` joined to `p` by
/// length `a` and to `q` by length `b`: any embedding forces
/// `l < |pq| < r`, and any placement with `|pq|` in `[L, R]` extends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApexWindow {
    pub l: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: Bound,
}

impl ApexWindow {
    pub fn delta(&self) -> f64 {
        let left = self.big_l - self.l;
        match self.r {
            Bound::Finite(r) => left.min(r - self.big_r),
            Bound::Unbounded => left,
        }
    }

    pub fn is_ordered(&self) -> bool {
        let upper = match self.r {
            Bound::Finite(r) => self.big_r < r,
            Bound::Unbounded => true,
        };
        0.0 <= self.l && self.l < self.big_l && self.big_l <= self.big_r && upper
    }

    pub fn a_interval(&self) -> (f64, f64) {
        let mid = (self.big_l + self.big_r) / 2.0;
        (mid - self.delta() / 3.0, mid + self.delta() / 3.0)
    }

    pub fn b_interval(&self) -> (f64, f64) {
        let half = (self.big_r - self.big_l) / 2.0;
        (half + self.delta() / 3.0, half + self.delta() / 2.0)
    }

    /// Smallest gap in the chain `l < a-b < L <= R < a+b < r`; positive
    /// iff the chain holds strictly.
    pub fn chain_margin(&self, a: f64, b: f64) -> f64 {
        let gaps = [
            (a - b) - self.l,
            self.big_l - (a - b),
            (a + b) - self.big_r,
            match self.r {
                Bound::Finite(r) => r - (a + b),
                Bound::Unbounded => f64::INFINITY,
            },
        ];
        gaps.into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self, a: f64, b: f64) -> bool {
        if !self.is_ordered() || !(self.delta() > 0.0) {
            return false;
        }
        let (alo, ahi) = self.a_interval();
        let (blo, bhi) = self.b_interval();
        alo < a && a < ahi && blo < b && b < bhi && self.chain_margin(a, b) > 0.0
    }
}

pub fn apex_window_check(l: f64, big_l: f64, big_r: f64, r: Bound, a: f64, b: f64) -> bool {
    ApexWindow { l, big_l, big_r, r }.check(a, b)
}

/// The three kinds of apex gadget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    Uu,
    Uv,
    Vv,
}

#[derive(Clone, Debug)]
pub struct ApexLengths {
    pub window: ApexWindow,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub rod_a: Arc<RodCertificate>,
    pub rod_b: Arc<RodCertificate>,
}

#[derive(Clone, Debug)]
pub struct ReductionParams {
    pub d: usize,
    pub epsilon: f64,
    pub r0: f64,
    pub uu: ApexLengths,
    pub uv: ApexLengths,
    pub vv: ApexLengths,
}

impl ReductionParams {
    pub fn class(&self, class: PairClass) -> &ApexLengths {
        match class {
            PairClass::Uu => &self.uu,
            PairClass::Uv => &self.uv,
            PairClass::Vv => &self.vv,
        }
    }

    pub fn all(&self) -> [(PairClass, &ApexLengths); 3] {
        [(PairClass::Uu, &self.uu), (PairClass::Uv, &self.uv), (PairClass::Vv, &self.vv)]
    }
}

fn apex_lengths(window: ApexWindow, delta: f64, d: usize) -> Result<ApexLengths> {
    let (alo, ahi) = window.a_interval();
    let (blo, bhi) = window.b_interval();
    let rod_a = make_rod(alo, ahi, d)?;
    let rod_b = make_rod(blo, bhi, d)?;
    Ok(ApexLengths { window, delta, a: rod_a.length_value, b: rod_b.length_value, rod_a, rod_b })
}

pub fn reduction_params(d: usize) -> Result<ReductionParams> {
    let c = dimension_constants(d)?;
    let ch = |t: f64| c.chord(t);
    let e = EPSILON;
    let third = 2.0 * PI / 3.0;

    let delta_uu = (ch(third) - ch(third - e / 2.0)).min(ch(third + e / 2.0) - ch(third));
    let delta_uv = ch(PI / 3.0 - e / 2.0) - ch(PI / 3.0 - e);
    let delta_vv = ch(third - e) - ch(5.0 * e / 2.0);

    let uu = ApexWindow {
        l: ch(third - e / 2.0),
        big_l: ch(third),
        big_r: ch(third),
        r: Bound::Finite(ch(third + e / 2.0)),
    };
    let uv = ApexWindow {
        l: ch(PI / 3.0 - e),
        big_l: ch(PI / 3.0 - e / 2.0),
        big_r: 2.0 * c.r0,
        r: Bound::Unbounded,
    };
    let vv = ApexWindow { l: ch(5.0 * e / 2.0), big_l: ch(third - e), big_r: 2.0 * c.r0, r: Bound::Unbounded };
    for (w, delta) in [(&uu, delta_uu), (&uv, delta_uv), (&vv, delta_vv)] {
        debug_assert!((w.delta() - delta).abs() < 1e-15);
    }
    Ok(ReductionParams {
        d,
        epsilon: e,
        r0: c.r0,
        uu: apex_lengths(uu, delta_uu, d)?,
        uv: apex_lengths(uv, delta_uv, d)?,
        vv: apex_lengths(vv, delta_vv, d)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Role {
    K { index: usize },
    U { index: usize },
    V { index: usize },
    /// Apex joined to `p` by length `a` and to `q` by length `b`.
    Aux { class: PairClass, p: VertexId, q: VertexId },
}

#[derive(Clone, Debug)]
pub struct ReductionInstance {
    pub h: WeightedGraph,
    pub roles: Vec<Role>,
    pub source: SimpleGraph,
    pub params: ReductionParams,
}

impl ReductionInstance {
    pub fn d(&self) -> usize {
        self.params.d
    }

    pub fn k_vertices(&self) -> std::ops::Range<VertexId> {
        0..self.d() - 1
    }

    pub fn u_vertex(&self, i: usize) -> VertexId {
        self.d() - 1 + i
    }

    pub fn v_vertex(&self, i: usize) -> VertexId {
        self.d() + 2 + i
    }

    pub fn aux_start(&self) -> VertexId {
        self.d() + 2 + self.source.vertex_count()
    }
}

pub fn build_reduction(g: &SimpleGraph, d: usize) -> Result<ReductionInstance> {
    let params = reduction_params(d)?;
    build_reduction_with(g, params)
}

pub fn build_reduction_with(g: &SimpleGraph, params: ReductionParams) -> Result<ReductionInstance> {
    let d = params.d;
    let n = g.vertex_count();
    let k = d - 1;
    let u = |i: usize| k + i;
    let v = |i: usize| k + 3 + i;
    let mut roles: Vec<Role> = (0..k).map(|index| Role::K { index }).collect();
    roles.extend((0..3).map(|index| Role::U { index }));
    roles.extend((0..n).map(|index| Role::V { index }));

    let unit = |a: usize, b: usize| Edge { u: a.min(b), v: a.max(b), len: 1.0 };
    let mut edges = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            edges.push(unit(i, j));
        }
    }
    for i in 0..3 {
        edges.extend((0..k).map(|x| unit(x, u(i))));
    }
    for i in 0..n {
        edges.extend((0..k).map(|x| unit(x, v(i))));
    }

    let mut pairs: Vec<(PairClass, VertexId, VertexId)> =
        vec![(PairClass::Uu, u(0), u(1)), (PairClass::Uu, u(0), u(2)), (PairClass::Uu, u(1), u(2))];
    for i in 0..n {
        pairs.extend((0..3).map(|j| (PairClass::Uv, v(i), u(j))));
    }
    for &(i, j) in g.edges() {
        if i == j || i >= n || j >= n {
            return Err(Error::InvalidInputGraph(format!("bad edge ({i}, {j})")));
        }
        pairs.push((PairClass::Vv, v(i), v(j)));
    }
    for (class, p, q) in pairs {
        let z = roles.len();
        roles.push(Role::Aux { class, p, q });
        let lens = params.class(class);
        edges.push(Edge { u: p.min(z), v: p.max(z), len: lens.a });
        edges.push(Edge { u: q.min(z), v: q.max(z), len: lens.b });
    }
    let h = WeightedGraph::from_canonical(roles.len(), edges);
    Ok(ReductionInstance { h, roles, source: g.clone(), params })
}

/// Closed-form `(|V_H|, |E_H|)`.
pub fn reduction_size(n: usize, m: usize, d: usize) -> (usize, usize) {
    let k = d - 1;
    let vertices = k + 3 + n + (3 + 3 * n + m);
    let edges = k * (k - 1) / 2 + 3 * k + n * k + 6 + 6 * n + 2 * m;
    (vertices, edges)
}

/// Origin of a vertex of the expanded graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "snake_case")]
pub enum Provenance {
    Host { vertex: VertexId },
    Rod { edge: usize, rod_vertex: VertexId },
}

#[derive(Clone, Debug)]
pub struct ExpandedInstance {
    pub graph: WeightedGraph,
    pub provenance: Vec<Provenance>,
    /// Substituted `H` edges (index into `H`'s edge list) and their rods, in
    /// the order their interiors are numbered.
    pub substitutions: Vec<(usize, Arc<RodCertificate>)>,
    pub host_vertices: usize,
}

pub fn expand_to_unit(inst: &ReductionInstance) -> Result<ExpandedInstance> {
    let rods: Vec<Arc<RodCertificate>> = inst
        .params
        .all()
        .iter()
        .flat_map(|(_, l)| [l.rod_a.clone(), l.rod_b.clone()])
        .collect();
    let mut substitutions = Vec::new();
    for (i, e) in inst.h.edges().iter().enumerate() {
        if e.len == 1.0 {
            continue;
        }
        let rod = rods
            .iter()
            .find(|r| r.length_value == e.len)
            .ok_or_else(|| Error::RodUnavailable(format!("{}", e.len)))?;
        substitutions.push((i, rod.clone()));
    }
    let subs: Vec<(usize, Edge, &RodCertificate)> =
        substitutions.iter().map(|(i, r)| (*i, inst.h.edges()[*i], &**r)).collect();
    let graph = substitute_oriented(&inst.h, &subs)?;

    let host_vertices = inst.h.vertex_count();
    let mut provenance: Vec<Provenance> = (0..host_vertices).map(|vertex| Provenance::Host { vertex }).collect();
    for (i, rod) in &substitutions {
        provenance.extend(
            (0..rod.graph.vertex_count())
                .filter(|&x| x != rod.u && x != rod.v)
                .map(|rod_vertex| Provenance::Rod { edge: *i, rod_vertex }),
        );
    }
    debug_assert_eq!(provenance.len(), graph.vertex_count());
    Ok(ExpandedInstance { graph, provenance, substitutions, host_vertices })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chord_values() {
        assert_eq!(chord(0.0, 3).unwrap(), 0.0);
        assert!((chord(PI, 3).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        assert!((chord(2.0 * PI / 3.0, 3).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(chord(-0.1, 3).unwrap_err(), Error::DomainError(-0.1));
        assert!(chord(7.0, 3).is_err());
    }

    #[test]
    fn apex_window_examples() {
        let two = Bound::Finite(2.0);
        assert!(apex_window_check(0.0, 1.0, 1.0, two, 1.0, 0.4));
        assert!(!apex_window_check(0.0, 1.0, 1.0, two, 1.4, 0.4));
        assert!(!apex_window_check(0.5, 0.4, 1.0, two, 1.0, 0.4));
        let w = ApexWindow { l: 0.0, big_l: 1.0, big_r: 1.0, r: two };
        assert_eq!(w.delta(), 1.0);
        assert!((w.chain_margin(1.0, 0.4) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn deltas_d3() {
        let p = reduction_params(3).unwrap();
        assert!((p.uu.delta - 0.02753243812673367).abs() < 1e-12);
        assert!((p.uv.delta - 0.05041661563240052).abs() < 1e-12);
        assert!((p.vv.delta - 1.1580043772151927).abs() < 1e-12);
        for (_, l) in p.all() {
            assert!(l.window.check(l.a, l.b));
        }
    }

    #[test]
    fn counts() {
        for (g, want) in [
            (SimpleGraph::complete(3), (23, 43)),
            (SimpleGraph::complete(1), (12, 21)),
            (SimpleGraph::complete(0), (8, 13)),
        ] {
            let inst = build_reduction(&g, 3).unwrap();
            assert_eq!((inst.h.vertex_count(), inst.h.edge_count()), want);
            assert_eq!(reduction_size(g.vertex_count(), g.edge_count(), 3), want);
        }
    }

    #[test]
    fn aux_degrees_and_roles() {
        let inst = build_reduction(&SimpleGraph::complete(3), 4).unwrap();
        let deg = inst.h.degrees();
        for (x, role) in inst.roles.iter().enumerate() {
            match role {
                Role::Aux { .. } => assert_eq!(deg[x], 2),
                Role::V { .. } => assert_eq!(deg[x], 3 + 3 + 2),
                Role::U { .. } => assert_eq!(deg[x], 3 + 2 + 3),
                Role::K { .. } => {}
            }
        }
        assert_eq!(inst.v_vertex(0), 6);
        assert_eq!(inst.aux_start(), 9);
    }
}
