//! Coarse-structure toolkit for lazily generated, locally finite graphs:
//! windowed graph materialization, fat minor-model verification, ray family
//! constructions, and the constructive half-grid pipeline that emits
//! independently checkable certificates.

pub mod cert;
pub mod contract;
pub mod error;
pub mod family;
pub mod generators;
pub mod graph;
pub mod model;
pub mod ray;
pub mod par;
pub mod pipeline;
pub mod vertex;

pub use error::{Error, Result};
pub use generators::{Automorphism, AutomorphismKind, GeneratorSpec};
pub use graph::{BallResult, Component, DistanceResult, GraphHandle, Window};
pub use vertex::VertexId;
