//! JSON interchange and DIMACS `.col` parsing.
//!
//! Graph: `{"dim", "vertices", "edges": [{"u", "v", "len"}]}`.
//! Embedding: `{"dim", "coords": [[x, ...], ...]}`.
//! Rods, reduction instances and expanded instances extend the graph object
//! with a `rod`, `roles`/`params`/`source` or `provenance` block. Floats are
//! written in shortest round-trip form, so a reload reproduces every bit.
//!
//! Vertex order in instance files: clique `K` first, then the `d + 1`
//! vertices of `U`, then one `V` vertex per source vertex in source order,
//! then one apex per gadget in source-edge order. Expanded instances keep
//! those ids and append rod interiors in `H`-edge order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadgets::{LengthExpr, RodCertificate, TraceDescriptor};
use crate::graph::{Edge, Embedding, SimpleGraph, WeightedGraph};
use crate::oracle::Coloring;
use crate::reduction::{
    reduction_params, ApexWindow, ExpandedInstance, PairClass, Provenance, ReductionInstance, ReductionParams, Role,
};
use crate::solver::{SolveReport, Verdict};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub vertices: usize,
    pub edges: Vec<Edge>,
}

impl GraphJson {
    pub fn new(g: &WeightedGraph, dim: Option<usize>) -> Self {
        Self { dim, vertices: g.vertex_count(), edges: g.edges().to_vec() }
    }

    pub fn to_graph(&self) -> Result<WeightedGraph> {
        let triples: Vec<_> = self.edges.iter().map(|e| (e.u, e.v, e.len)).collect();
        WeightedGraph::build(self.vertices, &triples)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingJson {
    pub dim: usize,
    pub coords: Vec<Vec<f64>>,
}

impl EmbeddingJson {
    pub fn new(e: &Embedding) -> Self {
        Self { dim: e.dim(), coords: e.points().map(<[f64]>::to_vec).collect() }
    }

    pub fn to_embedding(&self) -> Result<Embedding> {
        if let Some(p) = self.coords.iter().find(|p| p.len() != self.dim) {
            return Err(Error::Parse(format!("point with {} coordinates in dimension {}", p.len(), self.dim)));
        }
        Embedding::from_points(self.dim, &self.coords)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodBlock {
    pub terminals: [usize; 2],
    pub length: LengthExpr,
    pub length_value: f64,
    pub trace: TraceDescriptor,
}

impl RodBlock {
    pub fn new(rod: &RodCertificate) -> Self {
        Self {
            terminals: [rod.u, rod.v],
            length: rod.length.clone(),
            length_value: rod.length_value,
            trace: rod.descriptor(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodJson {
    #[serde(flatten)]
    pub graph: GraphJson,
    pub rod: RodBlock,
}

impl RodJson {
    pub fn new(rod: &RodCertificate, dim: Option<usize>) -> Self {
        Self { graph: GraphJson::new(&rod.graph, dim), rod: RodBlock::new(rod) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassJson {
    pub class: PairClass,
    pub window: ApexWindow,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub rod_a: RodBlock,
    pub rod_b: RodBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub d: usize,
    pub epsilon: f64,
    pub r0: f64,
    pub classes: Vec<ClassJson>,
}

impl ParamsJson {
    pub fn new(p: &ReductionParams) -> Self {
        Self {
            d: p.d,
            epsilon: p.epsilon,
            r0: p.r0,
            classes: p
                .all()
                .iter()
                .map(|(class, l)| ClassJson {
                    class: *class,
                    window: l.window,
                    delta: l.delta,
                    a: l.a,
                    b: l.b,
                    rod_a: RodBlock::new(&l.rod_a),
                    rod_b: RodBlock::new(&l.rod_b),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceJson {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    #[serde(flatten)]
    pub graph: GraphJson,
    pub roles: Vec<Role>,
    pub params: ParamsJson,
    pub source: SourceJson,
}

impl InstanceJson {
    pub fn new(inst: &ReductionInstance) -> Self {
        Self {
            graph: GraphJson::new(&inst.h, Some(inst.d())),
            roles: inst.roles.clone(),
            params: ParamsJson::new(&inst.params),
            source: SourceJson { vertices: inst.source.vertex_count(), edges: inst.source.edges().to_vec() },
        }
    }

    /// Rebuilds the instance; the parameters are recomputed for `d` and must
    /// agree with the stored ones bit for bit.
    pub fn to_instance(&self) -> Result<ReductionInstance> {
        let params = reduction_params(self.params.d)?;
        if ParamsJson::new(&params) != self.params {
            return Err(Error::Parse("stored reduction parameters do not match this build".into()));
        }
        let h = self.graph.to_graph()?;
        if self.roles.len() != h.vertex_count() {
            return Err(Error::Parse(format!("{} roles for {} vertices", self.roles.len(), h.vertex_count())));
        }
        Ok(ReductionInstance {
            h,
            roles: self.roles.clone(),
            source: SimpleGraph::new(self.source.vertices, &self.source.edges)?,
            params,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandedJson {
    #[serde(flatten)]
    pub graph: GraphJson,
    pub host_vertices: usize,
    pub provenance: Vec<Provenance>,
}

impl ExpandedJson {
    pub fn new(x: &ExpandedInstance, dim: usize) -> Self {
        Self {
            graph: GraphJson::new(&x.graph, Some(dim)),
            host_vertices: x.host_vertices,
            provenance: x.provenance.clone(),
        }
    }
}

/// Any graph-shaped document; extra blocks are ignored.
pub fn read_graph(text: &str) -> Result<(WeightedGraph, Option<usize>)> {
    let g: GraphJson = from_json(text)?;
    Ok((g.to_graph()?, g.dim))
}

pub fn read_embedding(text: &str) -> Result<Embedding> {
    from_json::<EmbeddingJson>(text)?.to_embedding()
}

pub fn read_instance(text: &str) -> Result<ReductionInstance> {
    from_json::<InstanceJson>(text)?.to_instance()
}

pub fn read_rod(text: &str) -> Result<RodCertificate> {
    let r: RodJson = from_json(text)?;
    let rod = RodCertificate::from_descriptor(&r.rod.trace)?;
    if GraphJson::new(&rod.graph, None).edges != r.graph.edges || [rod.u, rod.v] != r.rod.terminals {
        return Err(Error::Parse("rod graph does not match its trace".into()));
    }
    Ok(rod)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Coloring as a map from vertex id (as a string key) to color.
pub fn coloring_to_json(c: &[u8]) -> String {
    let mut s = String::from("{");
    for (i, &x) in c.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(&format!("\"{i}\": {x}"));
    }
    s.push_str("}\n");
    s
}

/// Accepts the map form or a plain array.
pub fn coloring_from_json(text: &str) -> Result<Coloring> {
    let value: serde_json::Value = from_json(text)?;
    match value {
        serde_json::Value::Array(_) => from_json(text),
        serde_json::Value::Object(map) => {
            let mut c = vec![None; map.len()];
            for (k, v) in map {
                let i: usize = k.parse().map_err(|_| Error::Parse(format!("bad vertex key {k:?}")))?;
                let x = v.as_u64().ok_or_else(|| Error::Parse(format!("bad color for vertex {i}")))?;
                let slot = c.get_mut(i).ok_or(Error::PartialColoring { have: i, need: i + 1 })?;
                *slot = Some(u8::try_from(x).map_err(|_| Error::InvalidColoring(format!("vertex {i} has color {x}")))?);
            }
            c.into_iter()
                .enumerate()
                .map(|(i, x)| x.ok_or_else(|| Error::Parse(format!("vertex {i} missing"))))
                .collect()
        }
        _ => Err(Error::Parse("coloring must be an object or an array".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReportJson {
    pub verdict: Verdict,
    pub residual: f64,
    pub energy: f64,
    pub successes: usize,
    pub above_energy_floor: bool,
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    pub embedding: EmbeddingJson,
}

impl SolveReportJson {
    pub fn new(r: &SolveReport) -> Self {
        Self {
            verdict: r.verdict,
            residual: r.best_residual,
            energy: r.best_energy,
            successes: r.successes,
            above_energy_floor: r.above_energy_floor,
            energies: r.restarts.iter().map(|o| o.energy).collect(),
            residuals: r.restarts.iter().map(|o| o.residual).collect(),
            iterations: r.restarts.iter().map(|o| o.iterations).collect(),
            embedding: EmbeddingJson::new(&r.best),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dimacs {
    pub graph: SimpleGraph,
    pub warnings: Vec<String>,
}

/// Parse DIMACS `.col` text: `c` comments, one `p edge n m` header and
/// `e i j` lines with 1-based ids. Duplicate edges collapse with a warning;
/// an edge count that differs from the header is a warning too.
pub fn parse_dimacs(text: &str) -> Result<Dimacs> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut warnings = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            None | Some("c") => {}
            Some("p") => {
                if header.is_some() {
                    return Err(Error::MalformedHeader(format!("second header on line {}", lineno + 1)));
                }
                let fields: Vec<&str> = parts.collect();
                let parsed = match fields.as_slice() {
                    [kind, n, m] if matches!(*kind, "edge" | "col") => n.parse().ok().zip(m.parse().ok()),
                    _ => None,
                };
                header = Some(parsed.ok_or_else(|| Error::MalformedHeader(line.trim().to_string()))?);
            }
            Some("e") => {
                let (n, _) = header.ok_or_else(|| Error::MalformedHeader("edge line before header".into()))?;
                let ids: Vec<usize> = parts
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Parse(format!("line {}: {}", lineno + 1, line.trim())))?;
                let [a, b] = ids[..] else {
                    return Err(Error::Parse(format!("line {}: {}", lineno + 1, line.trim())));
                };
                for x in [a, b] {
                    if x == 0 || x > n {
                        return Err(Error::VertexOutOfRange { vertex: x, count: n });
                    }
                }
                edges.push((a - 1, b - 1));
            }
            Some(_) => return Err(Error::Parse(format!("line {}: {}", lineno + 1, line.trim()))),
        }
    }
    let (n, m) = header.ok_or_else(|| Error::MalformedHeader("missing \"p edge n m\" line".into()))?;
    let graph = SimpleGraph::new(n, &edges)?;
    if graph.edge_count() < edges.len() {
        warnings.push(format!("{} duplicate edge lines collapsed", edges.len() - graph.edge_count()));
    }
    if graph.edge_count() != m {
        warnings.push(format!("header declares {m} edges, found {}", graph.edge_count()));
    }
    Ok(Dimacs { graph, warnings })
}

pub fn to_dimacs(g: &SimpleGraph) -> String {
    let mut s = format!("p edge {} {}\n", g.vertex_count(), g.edge_count());
    for &(a, b) in g.edges() {
        s.push_str(&format!("e {} {}\n", a + 1, b + 1));
    }
    s
}
