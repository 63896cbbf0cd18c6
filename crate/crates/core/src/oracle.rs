//! Exhaustive 3-coloring oracle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{classify_embedding, SimpleGraph, ToleranceConfig};
use crate::reduction::build_reduction;
use crate::solver::{solve, SolveConfig, Verdict};
use crate::witness::{extract_coloring, rng_stream, witness_embedding};

/// Color in `{0, 1, 2}` per vertex of the source graph.
pub type Coloring = Vec<u8>;

pub const ORACLE_VERTEX_LIMIT: usize = 25;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub colorable: bool,
    pub witness: Option<Coloring>,
    /// Partial assignments tried by the backtracking search.
    pub colorings_tried: u64,
}

pub fn validate_coloring(g: &SimpleGraph, c: &[u8]) -> Result<bool> {
    if c.len() != g.vertex_count() {
        return Err(Error::PartialColoring { have: c.len(), need: g.vertex_count() });
    }
    if let Some((i, &x)) = c.iter().enumerate().find(|(_, &x)| x > 2) {
        return Err(Error::InvalidColoring(format!("vertex {i} has color {x}")));
    }
    Ok(g.edges().iter().all(|&(a, b)| c[a] != c[b]))
}

/// Lexicographically smallest proper 3-coloring, if one exists.
pub fn brute_force_3color(g: &SimpleGraph) -> Result<OracleResult> {
    search(g, true)
}

/// Same search with vertex 0 free; used to cross-check the pinning.
pub fn brute_force_3color_unpinned(g: &SimpleGraph) -> Result<OracleResult> {
    search(g, false)
}

fn search(g: &SimpleGraph, pin_first: bool) -> Result<OracleResult> {
    let n = g.vertex_count();
    if n > ORACLE_VERTEX_LIMIT {
        return Err(Error::TooLarge(n));
    }
    // only earlier neighbours matter when colouring in id order
    let earlier: Vec<Vec<usize>> = g
        .neighbor_lists()
        .into_iter()
        .enumerate()
        .map(|(i, nb)| nb.into_iter().filter(|&j| j < i).collect())
        .collect();
    let mut colors: Vec<u8> = vec![0; n];
    let mut next: Vec<u8> = vec![0; n];
    let mut tried = 0u64;
    let mut i = 0usize;
    if n == 0 {
        return Ok(OracleResult { colorable: true, witness: Some(Vec::new()), colorings_tried: 0 });
    }
    loop {
        let limit = if pin_first && i == 0 { 1 } else { 3 };
        let mut placed = false;
        while next[i] < limit {
            let c = next[i];
            next[i] += 1;
            tried += 1;
            if earlier[i].iter().all(|&j| colors[j] != c) {
                colors[i] = c;
                placed = true;
                break;
            }
        }
        if placed {
            if i + 1 == n {
                return Ok(OracleResult { colorable: true, witness: Some(colors), colorings_tried: tried });
            }
            i += 1;
            next[i] = 0;
        } else {
            if i == 0 {
                return Ok(OracleResult { colorable: false, witness: None, colorings_tried: tried });
            }
            i -= 1;
        }
    }
}

/// Above this many vertices the rejected candidates are sampled rather than
/// enumerated.
pub const CANDIDATE_ENUMERATION_LIMIT: usize = 12;
pub const CANDIDATE_SAMPLES: usize = 100_000;

pub const HEURISTIC_NOTE: &str =
    "solver failure is heuristic evidence of non-embeddability, not a proof";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndToEndConfig {
    pub seed: u64,
    pub tolerance: ToleranceConfig,
    /// Solver run on `H` when the oracle finds no coloring.
    pub solve: SolveConfig,
}

impl Default for EndToEndConfig {
    fn default() -> Self {
        Self { seed: 0, tolerance: ToleranceConfig::default(), solve: SolveConfig { restarts: 200, ..Default::default() } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub coloring: Coloring,
    pub residual: f64,
    pub is_embedding: bool,
    pub is_non_critical: bool,
    pub extracted: Option<Coloring>,
    pub extracted_matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejections {
    pub candidates: u64,
    pub rejected: u64,
    pub sampled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverEvidence {
    pub verdict: Verdict,
    pub restarts: usize,
    pub min_energy: f64,
    pub above_energy_floor: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub d: usize,
    pub source_vertices: usize,
    pub source_edges: usize,
    pub h_vertices: usize,
    pub h_edges: usize,
    pub oracle: OracleResult,
    pub round_trip: Option<RoundTrip>,
    pub rejections: Option<Rejections>,
    pub solver: Option<SolverEvidence>,
    pub inconsistencies: Vec<String>,
}

impl EndToEndReport {
    pub fn consistent(&self) -> bool {
        self.inconsistencies.is_empty()
    }
}

/// Run the oracle on `g` and compare with the reduction pipeline: a coloring
/// must survive witness and extraction, and without one every candidate
/// coloring must be refused by the witness path.
pub fn end_to_end_check(g: &SimpleGraph, d: usize, cfg: &EndToEndConfig) -> Result<EndToEndReport> {
    let oracle = brute_force_3color(g)?;
    let inst = build_reduction(g, d)?;
    let mut report = EndToEndReport {
        d,
        source_vertices: g.vertex_count(),
        source_edges: g.edge_count(),
        h_vertices: inst.h.vertex_count(),
        h_edges: inst.h.edge_count(),
        oracle: oracle.clone(),
        round_trip: None,
        rejections: None,
        solver: None,
        inconsistencies: Vec::new(),
    };
    let issues = &mut report.inconsistencies;
    if let Some(c) = oracle.witness {
        if !validate_coloring(g, &c)? {
            issues.push("oracle witness is not a proper coloring".into());
        }
        let emb = witness_embedding(&inst, &c, cfg.seed, &cfg.tolerance)?;
        let v = classify_embedding(&inst.h, &emb, &cfg.tolerance)?;
        let extracted = extract_coloring(&inst, &emb, &cfg.tolerance).ok();
        let extracted_matches = extracted.as_deref() == Some(&c[..]);
        if !v.is_embedding {
            issues.push(format!("witness residual {} exceeds tolerance", v.residual));
        }
        if !v.is_non_critical {
            issues.push("witness embedding is critical".into());
        }
        if !extracted_matches {
            issues.push(format!("extracted coloring {extracted:?} differs from {c:?}"));
        }
        report.round_trip = Some(RoundTrip {
            coloring: c,
            residual: v.residual,
            is_embedding: v.is_embedding,
            is_non_critical: v.is_non_critical,
            extracted,
            extracted_matches,
        });
    } else {
        let rejections = reject_all(&inst, cfg, issues)?;
        report.rejections = Some(rejections);
        let r = solve(&inst.h, d, &SolveConfig { seed: cfg.seed, ..cfg.solve.clone() });
        if r.verdict == Verdict::EmbeddingFound {
            issues.push(format!("solver embedded H (residual {}) although G is not 3-colorable", r.best_residual));
        }
        report.solver = Some(SolverEvidence {
            verdict: r.verdict,
            restarts: r.restarts.len(),
            min_energy: r.min_energy(),
            above_energy_floor: r.above_energy_floor,
            note: HEURISTIC_NOTE.into(),
        });
    }
    Ok(report)
}

fn reject_all(
    inst: &crate::reduction::ReductionInstance,
    cfg: &EndToEndConfig,
    issues: &mut Vec<String>,
) -> Result<Rejections> {
    let n = inst.source.vertex_count();
    let mut out = Rejections { candidates: 0, rejected: 0, sampled: n > CANDIDATE_ENUMERATION_LIMIT };
    let mut try_one = |c: &[u8], out: &mut Rejections| {
        out.candidates += 1;
        match witness_embedding(inst, c, cfg.seed, &cfg.tolerance) {
            Err(Error::InvalidColoring(_)) => out.rejected += 1,
            Ok(_) => issues.push(format!("witness accepted coloring {c:?}")),
            Err(e) => issues.push(format!("coloring {c:?} failed with {e}")),
        }
    };
    if out.sampled {
        let mut rng = rng_stream(cfg.seed, 3);
        for _ in 0..CANDIDATE_SAMPLES {
            let c: Coloring = (0..n).map(|_| rng.random_range(0..3)).collect();
            try_one(&c, &mut out);
        }
    } else {
        let mut c = vec![0u8; n];
        loop {
            try_one(&c, &mut out);
            // odometer over {0, 1, 2}^n
            let Some(i) = c.iter().position(|&x| x < 2) else { break };
            c[i] += 1;
            c[..i].fill(0);
        }
    }
    Ok(out)
}
