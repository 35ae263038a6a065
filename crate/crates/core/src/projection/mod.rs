//! Fingerprint distances, PivotMDS layout with a classical MDS reference,
//! Procrustes comparison and brushing.

pub mod brush;
pub mod distance;
pub mod linalg;
pub mod mds;
pub mod pivot;
pub mod procrustes;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ClusterKey;

pub use brush::{brush_select, BrushSelection, Rect};
pub use distance::{pairwise_distance, DistanceKind, DistanceMetric, FeatureMatrix};
pub use mds::{classical_mds, distance_matrix};
pub use pivot::{default_pivot_count, maxmin_pivots, pivot_mds, pivot_mds_features, select_pivots};
pub use procrustes::{layout_rms, procrustes_error};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("{key} has no value for axis '{axis}'")]
    AxisMissing { key: String, axis: String },
    #[error("no axes selected")]
    NoAxes,
    #[error("distance matrix is {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("distance matrix is not symmetric with zero diagonal at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("negative or NaN distance at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("bad k: pivot count {k} outside 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("target dimension {0} is not supported")]
    BadDim(usize),
    #[error("nothing to project")]
    Empty,
    #[error("eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("layouts have {left} and {right} points")]
    LengthMismatch { left: usize, right: usize },
    #[error("layouts have {left} and {right} dimensions")]
    DimMismatch { left: usize, right: usize },
    #[error("brush rectangle is not well-ordered")]
    BadRect,
}

/// 2D (or 3D) coordinates per cluster plus the pivots that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionLayout {
    pub keys: Vec<ClusterKey>,
    /// `keys.len() x d`.
    pub coords: DMatrix<f64>,
    pub pivots: Vec<usize>,
    pub metric: DistanceMetric,
}

/// One row of the layout export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRecord {
    pub subject_id: String,
    pub cluster_id: u32,
    pub x: f64,
    pub y: f64,
    pub is_pivot: bool,
}

impl ProjectionLayout {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.coords[(i, 0)]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.coords[(i, 1)]
    }

    pub fn records(&self) -> Vec<LayoutRecord> {
        let mut is_pivot = vec![false; self.keys.len()];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        self.keys
            .iter()
            .enumerate()
            .map(|(i, k)| LayoutRecord {
                subject_id: k.subject_id.clone(),
                cluster_id: k.cluster_id,
                x: self.x(i),
                y: self.y(i),
                is_pivot: is_pivot[i],
            })
            .collect()
    }
}
