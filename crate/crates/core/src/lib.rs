//! Kernel mass of sparse random graph adjacency matrices: cavity theory,
//! population dynamics, tree recursions, leaf removal and exact ranks.

pub mod cavity;
pub mod degree;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod rde;
pub mod rng;
pub mod stats;
pub mod tree;

pub use degree::{DegreeModel, OffspringModel};
pub use error::{Error, Result};
pub use graph::Graph;
