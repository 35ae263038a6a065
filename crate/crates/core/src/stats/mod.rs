//! Aggregation, cohort normalization, fingerprints and colormaps.

pub mod colormap;
pub mod normalize;
pub mod summary;

use thiserror::Error;

pub use colormap::{builtin_colormaps, colormap, map_color, ColormapSpec, Rgb};
pub use normalize::{cohort_ranges, fingerprint, minmax_normalize, Fingerprint, RangeScope, NEUTRAL};
pub use summary::{cluster_summary, fiber_length, ClusterSummary, FieldStats};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("fiber has {0} points, at least 2 are needed")]
    DegenerateFiber(usize),
    #[error("cluster has no fibers")]
    EmptyCluster,
    #[error("fiber scalar arrays do not match the cluster's scalar names")]
    InvalidGeometry,
    #[error("invalid range: min {min} > max {max}")]
    InvalidRange { min: f64, max: f64 },
    #[error("no summaries to compute ranges from")]
    Empty,
    #[error("unknown axis '{0}'")]
    UnknownAxis(String),
    #[error("no axes selected")]
    NoAxes,
}
