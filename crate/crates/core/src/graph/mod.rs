//! Weighted graphs, embeddings and the predicates that classify an embedding
//! (valid, strict, injective, non-critical).
//!
//! Vertex ids are dense `usize` indices `0..vertex_count`. Edges are stored
//! with canonical endpoint order `u < v` and keep their insertion order, which
//! the gadget and reduction builders rely on for reproducible numbering.

mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use verify::{
    check_new_points, classify_embedding, embedding_residual, LocalCheck, ToleranceConfig,
    VerificationReport, Violation, ViolationKind,
};

pub type VertexId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub len: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn empty(vertex_count: usize) -> Self {
        Self { vertex_count, edges: Vec::new() }
    }

    /// Validated constructor: ids in range, no self-loops, no duplicates
    /// (in either orientation), strictly positive finite lengths.
    pub fn build(vertex_count: usize, edges: &[(VertexId, VertexId, f64)]) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        for &(a, b, len) in edges {
            for x in [a, b] {
                if x >= vertex_count {
                    return Err(Error::VertexOutOfRange { vertex: x, count: vertex_count });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::NonPositiveLength(a, b, len));
            }
            out.push(Edge { u: a.min(b), v: a.max(b), len });
        }
        let mut keys: Vec<(usize, usize)> = out.iter().map(|e| (e.u, e.v)).collect();
        keys.sort_unstable();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        Ok(Self { vertex_count, edges: out })
    }

    /// Constructor for builders that produce canonical, duplicate-free edge
    /// lists by construction.
    pub(crate) fn from_canonical(vertex_count: usize, edges: Vec<Edge>) -> Self {
        debug_assert!(edges.iter().all(|e| e.u < e.v && e.v < vertex_count && e.len > 0.0));
        Self { vertex_count, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn find_edge(&self, a: VertexId, b: VertexId) -> Option<usize> {
        let (u, v) = (a.min(b), a.max(b));
        self.edges.iter().position(|e| e.u == u && e.v == v)
    }

    pub fn is_unit(&self) -> bool {
        self.edges.iter().all(|e| e.len == 1.0)
    }

    pub fn max_length(&self) -> f64 {
        self.edges.iter().map(|e| e.len).fold(0.0, f64::max)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self)
    }

    /// Same graph with every edge length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            vertex_count: self.vertex_count,
            edges: self
                .edges
                .iter()
                .map(|e| Edge { len: e.len * factor, ..*e })
                .collect(),
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &(y, _) in adj.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == self.vertex_count
    }
}

/// Compressed adjacency lists with neighbors sorted by id.
#[derive(Clone, Debug)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<(VertexId, f64)>,
}

impl Adjacency {
    pub fn new(g: &WeightedGraph) -> Self {
        let n = g.vertex_count();
        let mut offsets = vec![0usize; n + 1];
        for e in g.edges() {
            offsets[e.u + 1] += 1;
            offsets[e.v + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![(0usize, 0.0f64); offsets[n]];
        for e in g.edges() {
            targets[fill[e.u]] = (e.v, e.len);
            fill[e.u] += 1;
            targets[fill[e.v]] = (e.u, e.len);
            fill[e.v] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable_by_key(|t| t.0);
        }
        Self { offsets, targets }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.neighbors(a).binary_search_by_key(&b, |t| t.0).is_ok()
    }
}

/// Unweighted simple graph: the input of the 3-coloring problem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimpleGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
}

impl SimpleGraph {
    /// Rejects self-loops and out-of-range ids; duplicate edges (either
    /// orientation) are collapsed. Edges are sorted canonically.
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            for x in [a, b] {
                if x >= vertex_count {
                    return Err(Error::VertexOutOfRange { vertex: x, count: vertex_count });
                }
            }
            if a == b {
                return Err(Error::InvalidInputGraph(format!("self-loop at vertex {a}")));
            }
            out.push((a.min(b), a.max(b)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(Self { vertex_count, edges: out })
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        Self { vertex_count: n, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        self.to_weighted().is_connected()
    }

    pub fn to_weighted(&self) -> WeightedGraph {
        WeightedGraph::from_canonical(
            self.vertex_count,
            self.edges.iter().map(|&(u, v)| Edge { u, v, len: 1.0 }).collect(),
        )
    }
}

/// Assignment of a point of `R^dim` to every vertex, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    dim: usize,
    coords: Vec<f64>,
}

impl Embedding {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::Parse(format!(
                "coordinate buffer of length {} does not split into points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn zeros(dim: usize, count: usize) -> Self {
        Self { dim, coords: vec![0.0; dim * count] }
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::Parse(format!("point of dimension {} in a {dim}-dimensional embedding", p.len())));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, v: VertexId) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    #[inline]
    pub fn point_mut(&mut self, v: VertexId) -> &mut [f64] {
        &mut self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    /// Truncate to, or pad with origin points up to, `count` points.
    pub fn resize(&mut self, count: usize) {
        self.coords.resize(count * self.dim, 0.0);
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Restriction to the listed vertices, in the listed order.
    pub fn select(&self, vertices: &[VertexId]) -> Self {
        let mut coords = Vec::with_capacity(vertices.len() * self.dim);
        for &v in vertices {
            coords.extend_from_slice(self.point(v));
        }
        Self { dim: self.dim, coords }
    }

    pub(crate) fn ensure_covers(&self, g: &WeightedGraph) -> Result<()> {
        if self.len() < g.vertex_count() {
            return Err(Error::MissingVertexCoordinates {
                have: self.len(),
                need: g.vertex_count(),
                dim: self.dim,
            });
        }
        Ok(())
    }
}
