pub mod balloon;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod gramian;
pub mod graph;
pub mod linalg;
pub mod selectors;
mod ser;
pub mod structure;

pub use error::{Error, Result};
pub use graph::{Graph, NodeSet};
