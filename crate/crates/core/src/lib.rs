//! Two-spin Gibbs distributions on finite graphs: spectral radii, influence
//! matrices, self-avoiding-walk trees, uniqueness regimes and Glauber dynamics.

pub mod catalog;
pub mod dynamics;
pub mod error;
pub mod extensions;
pub mod gibbs;
pub mod graph;
pub mod regimes;
pub mod spectral;
pub mod tsaw;

pub use error::{Error, Result};
pub use gibbs::{GibbsSpec, ModelKind, Pinning, Spin};
pub use graph::{Graph, SawWalk, Vertex};
pub use spectral::LabeledMatrix;

/// Crate version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
