//! Cohort-scale tractography exploration: TRK/VTP readers, per-cluster
//! statistics and fingerprints, PivotMDS projection and brushing, and a
//! read-only JSON API.

pub mod io;
pub mod json;
pub mod model;
pub mod projection;
pub mod session;
pub mod stats;
pub mod synth;

#[cfg(feature = "server")]
pub mod server;

pub use model::{ClusterGeometry, ClusterKey, Cohort, FiberPolyline, Range, SubjectRecord};
pub use session::{Engine, EngineConfig, EngineError, ProjectionRequest};
