//! Unit-distance embeddability toolkit.
//!
//! Builds rod gadgets (Moser spindles, angular rods and their products),
//! compiles graph 3-coloring instances into weighted and pure unit-distance
//! graphs, synthesizes explicit coordinate witnesses from colorings, extracts
//! colorings back from embeddings, and searches for embeddings numerically.

pub mod error;
pub mod geom;
pub mod gadgets;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod reduction;
pub mod solver;
pub mod witness;

pub use error::{Error, Result};
