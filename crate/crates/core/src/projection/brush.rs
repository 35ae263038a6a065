use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::ClusterKey;
use crate::projection::{ProjectionError, ProjectionLayout};

/// Axis-aligned brush rectangle in layout coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, ProjectionError> {
        let r = Self { xmin, ymin, xmax, ymax };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), ProjectionError> {
        let finite = [self.xmin, self.ymin, self.xmax, self.ymax].iter().all(|v| !v.is_nan());
        if !finite || self.xmin > self.xmax || self.ymin > self.ymax {
            return Err(ProjectionError::BadRect);
        }
        Ok(())
    }

    /// Boundary inclusive.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.xmin..=self.xmax).contains(&x) && (self.ymin..=self.ymax).contains(&y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrushSelection {
    pub rect: Rect,
    pub selected: BTreeSet<ClusterKey>,
    /// Every layout key sharing a cluster id with a selected key.
    pub highlighted: BTreeSet<ClusterKey>,
}

pub fn brush_select(layout: &ProjectionLayout, rect: Rect) -> Result<BrushSelection, ProjectionError> {
    rect.validate()?;
    let selected: BTreeSet<ClusterKey> = layout
        .keys
        .iter()
        .enumerate()
        .filter(|&(i, _)| rect.contains(layout.x(i), layout.y(i)))
        .map(|(_, k)| k.clone())
        .collect();
    let clusters: BTreeSet<u32> = selected.iter().map(|k| k.cluster_id).collect();
    let mut by_cluster: BTreeMap<u32, Vec<&ClusterKey>> = BTreeMap::new();
    for k in &layout.keys {
        by_cluster.entry(k.cluster_id).or_default().push(k);
    }
    let highlighted = clusters
        .iter()
        .flat_map(|c| by_cluster[c].iter().map(|k| (*k).clone()))
        .collect();
    Ok(BrushSelection { rect, selected, highlighted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::DistanceMetric;
    use nalgebra::DMatrix;

    fn layout() -> ProjectionLayout {
        ProjectionLayout {
            keys: vec![ClusterKey::new("A", 7), ClusterKey::new("B", 7), ClusterKey::new("B", 3)],
            coords: DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 5.0, 5.0, 1.0, 1.0]),
            pivots: vec![0],
            metric: DistanceMetric::euclidean(&["fa"]).unwrap(),
        }
    }

    #[test]
    fn same_cluster_is_highlighted_in_other_subjects() {
        let sel = brush_select(&layout(), Rect::new(-0.5, -0.5, 0.5, 0.5).unwrap()).unwrap();
        assert_eq!(sel.selected, BTreeSet::from([ClusterKey::new("A", 7)]));
        assert_eq!(sel.highlighted, BTreeSet::from([ClusterKey::new("A", 7), ClusterKey::new("B", 7)]));
    }

    #[test]
    fn empty_region() {
        let sel = brush_select(&layout(), Rect::new(10.0, 10.0, 11.0, 11.0).unwrap()).unwrap();
        assert!(sel.selected.is_empty() && sel.highlighted.is_empty());
    }

    #[test]
    fn everything_inside_and_boundary_inclusive() {
        let l = layout();
        let sel = brush_select(&l, Rect::new(0.0, 0.0, 5.0, 5.0).unwrap()).unwrap();
        assert_eq!(sel.highlighted, l.keys.iter().cloned().collect());
        assert_eq!(sel.selected.len(), 3);
    }

    #[test]
    fn inverted_rect_is_rejected() {
        assert_eq!(Rect::new(1.0, 0.0, 0.0, 1.0), Err(ProjectionError::BadRect));
        let r = Rect { xmin: 0.0, ymin: 1.0, xmax: 1.0, ymax: 0.0 };
        assert_eq!(brush_select(&layout(), r), Err(ProjectionError::BadRect));
    }
}
