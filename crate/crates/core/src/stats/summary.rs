use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ClusterGeometry, ClusterKey, FiberPolyline};
use crate::stats::StatsError;

/// Pooled statistics of one field. `std` uses the population convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Finite samples pooled.
    pub count: usize,
    /// NaN samples skipped.
    pub nan_count: usize,
}

/// Streaming mean/variance accumulator (Welford).
#[derive(Debug, Default, Clone, Copy)]
struct Accumulator {
    n: usize,
    nan: usize,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        if x.is_nan() {
            self.nan += 1;
            return;
        }
        if self.n == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn finish(self) -> Option<FieldStats> {
        (self.n > 0).then(|| FieldStats {
            mean: self.mean.clamp(self.min, self.max),
            std: (self.m2.max(0.0) / self.n as f64).sqrt(),
            min: self.min,
            max: self.max,
            count: self.n,
            nan_count: self.nan,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub key: ClusterKey,
    pub fiber_count: usize,
    pub point_count: usize,
    pub mean_fiber_length: f64,
    pub per_scalar: BTreeMap<String, FieldStats>,
    pub per_property: BTreeMap<String, FieldStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ClusterSummary {
    /// Looks a field up in the shared scalar/property namespace.
    pub fn field(&self, name: &str) -> Option<&FieldStats> {
        self.per_scalar.get(name).or_else(|| self.per_property.get(name))
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.per_scalar.keys().chain(self.per_property.keys()).map(String::as_str)
    }
}

/// Sum of Euclidean segment lengths.
pub fn fiber_length(f: &FiberPolyline) -> Result<f64, StatsError> {
    if f.points.len() < 2 {
        return Err(StatsError::DegenerateFiber(f.points.len()));
    }
    Ok(f.points
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt()
        })
        .sum())
}

/// Aggregates a cluster. Per-vertex scalars pool every vertex sample of
/// every fiber; properties pool one value per fiber. Fields whose samples
/// are all NaN are dropped and noted in `warnings`.
pub fn cluster_summary(g: &ClusterGeometry, key: ClusterKey) -> Result<ClusterSummary, StatsError> {
    if g.fibers.is_empty() {
        return Err(StatsError::EmptyCluster);
    }
    let mut total_length = 0.0;
    for f in &g.fibers {
        total_length += fiber_length(f)?;
    }

    let mut warnings = Vec::new();
    let mut finish = |kind: &str, name: &str, acc: Accumulator, out: &mut BTreeMap<String, FieldStats>| {
        match acc.finish() {
            Some(stats) => {
                if stats.nan_count > 0 {
                    warnings.push(format!("{kind} '{name}': skipped {} NaN samples", stats.nan_count));
                }
                out.insert(name.to_string(), stats);
            }
            None => warnings.push(format!("{kind} '{name}': all values are NaN, field dropped")),
        }
    };

    let mut per_scalar = BTreeMap::new();
    for (i, name) in g.scalar_names.iter().enumerate() {
        let mut acc = Accumulator::default();
        for fiber in &g.fibers {
            let column = fiber.scalars.get(i).ok_or(StatsError::InvalidGeometry)?;
            column.iter().for_each(|&x| acc.push(x));
        }
        finish("scalar", name, acc, &mut per_scalar);
    }
    let mut per_property = BTreeMap::new();
    for (name, column) in g.property_names.iter().zip(&g.properties) {
        let mut acc = Accumulator::default();
        column.iter().for_each(|&x| acc.push(x));
        finish("property", name, acc, &mut per_property);
    }
    for w in &warnings {
        log::warn!("{key}: {w}");
    }

    Ok(ClusterSummary {
        key,
        fiber_count: g.fibers.len(),
        point_count: g.point_count(),
        mean_fiber_length: total_length / g.fibers.len() as f64,
        per_scalar,
        per_property,
        warnings,
    })
}
