use serde::{Deserialize, Serialize};

use crate::projection::ProjectionError;
use crate::stats::Fingerprint;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    #[default]
    Euclidean,
}

/// Distance between fingerprints over a chosen set of normalized axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceMetric {
    pub axes: Vec<String>,
    pub kind: DistanceKind,
}

impl DistanceMetric {
    /// Axes are sorted and deduplicated.
    pub fn euclidean<S: AsRef<str>>(axes: &[S]) -> Result<Self, ProjectionError> {
        let mut axes: Vec<String> = axes.iter().map(|a| a.as_ref().to_string()).collect();
        axes.sort();
        axes.dedup();
        if axes.is_empty() {
            return Err(ProjectionError::NoAxes);
        }
        Ok(Self { axes, kind: DistanceKind::Euclidean })
    }
}

pub fn pairwise_distance(a: &Fingerprint, b: &Fingerprint, m: &DistanceMetric) -> Result<f64, ProjectionError> {
    let mut sum = 0.0;
    for axis in &m.axes {
        let missing = |f: &Fingerprint| ProjectionError::AxisMissing { key: f.key.to_string(), axis: axis.clone() };
        let x = a.value(axis).ok_or_else(|| missing(a))?;
        let y = b.value(axis).ok_or_else(|| missing(b))?;
        sum += (x - y).powi(2);
    }
    Ok(sum.sqrt())
}

/// Fingerprint values restricted to the metric's axes, row-major `n x m`.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub dims: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_fingerprints(items: &[Fingerprint], m: &DistanceMetric) -> Result<Self, ProjectionError> {
        let dims = m.axes.len();
        let mut data = Vec::with_capacity(items.len() * dims);
        for f in items {
            for axis in &m.axes {
                let v = f.value(axis).ok_or_else(|| ProjectionError::AxisMissing {
                    key: f.key.to_string(),
                    axis: axis.clone(),
                })?;
                data.push(v);
            }
        }
        Ok(Self { rows: items.len(), dims, data })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        self.row(i).iter().zip(self.row(j)).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.squared_distance(i, j).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClusterKey;

    fn fp(values: &[f64]) -> Fingerprint {
        Fingerprint {
            key: ClusterKey::new("s", 0),
            axis_names: (0..values.len()).map(|i| format!("a{i}")).collect(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn examples() {
        let m = DistanceMetric::euclidean(&["a0", "a1"]).unwrap();
        assert_eq!(pairwise_distance(&fp(&[0.3, 0.4]), &fp(&[0.3, 0.4]), &m).unwrap(), 0.0);
        assert_eq!(pairwise_distance(&fp(&[0.0, 0.0]), &fp(&[1.0, 1.0]), &m).unwrap(), 2f64.sqrt());
        assert!(matches!(
            pairwise_distance(&fp(&[0.0, 0.0]), &fp(&[1.0]), &m),
            Err(ProjectionError::AxisMissing { axis, .. }) if axis == "a1"
        ));
    }

    #[test]
    fn subset_of_axes() {
        let m = DistanceMetric::euclidean(&["a1"]).unwrap();
        assert_eq!(pairwise_distance(&fp(&[0.0, 0.25]), &fp(&[1.0, 1.0]), &m).unwrap(), 0.75);
        assert!(DistanceMetric::euclidean::<&str>(&[]).is_err());
    }
}
