//! Force-directed graph embedding.
//!
//! Vertices are embedded by minibatch SGD where neighbors attract and
//! uniformly drawn negative samples repel. Five force models are available
//! (sigmoid, Student-t, Fruchterman-Reingold, ForceAtlas, LinLog). The crate
//! also carries the downstream evaluation harness in [`eval`].

pub mod error;
pub mod eval;
pub mod generators;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod sampling;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{CsrGraph, DegreeHistogram, VertexId};
pub use kernels::{ForceKind, ForceModel};
pub use sampling::{ContextMode, Minibatch, StreamRng};
pub use trainer::{EmbeddingMatrix, TrainConfig, TrainReport};
