use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) has non-positive length {2}")]
    NonPositiveLength(usize, usize, f64),
    #[error("vertex {vertex} out of range for a graph with {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("embedding covers {have} vertices in dimension {dim}, graph needs {need}")]
    MissingVertexCoordinates { have: usize, need: usize, dim: usize },
    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),

    #[error("dimension {0} is too small, constructions need d >= 3")]
    DimensionTooSmall(usize),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: f64, actual: f64 },
    #[error("edge ({0}, {1}) not found")]
    EdgeNotFound(usize, usize),
    #[error("invalid interval ({0}, {1})")]
    InvalidInterval(f64, f64),
    #[error("angular search exceeded {0} iterations")]
    IterationCapExceeded(u64),
    #[error("invalid rod: {0}")]
    InvalidRod(String),

    #[error("argument {0} outside the domain [0, 2pi]")]
    DomainError(f64),
    #[error("invalid input graph: {0}")]
    InvalidInputGraph(String),
    #[error("no rod available for length class {0}")]
    RodUnavailable(String),

    #[error("invalid coloring: {0}")]
    InvalidColoring(String),
    #[error("apex triangle infeasible: |a - b| < {dist} < a + b fails for a = {a}, b = {b}")]
    TriangleInfeasible { a: f64, b: f64, dist: f64 },
    #[error("degenerate placement persisted after {0} retries")]
    DegeneracyRetryExhausted(usize),
    #[error("not an embedding: residual {0}")]
    NotAnEmbedding(f64),
    #[error("clique images are not a regular unit simplex: {0}")]
    DegenerateK(String),

    #[error("only {found} of {required} required solver runs succeeded")]
    InsufficientSuccesses { found: usize, required: usize },

    #[error("coloring covers {have} of {need} vertices")]
    PartialColoring { have: usize, need: usize },
    #[error("graph with {0} vertices exceeds the exhaustive search guard")]
    TooLarge(usize),

    #[error("malformed DIMACS header: {0}")]
    MalformedHeader(String),
    #[error("malformed input: {0}")]
    Parse(String),
}
