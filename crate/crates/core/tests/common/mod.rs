#![allow(dead_code)]

use std::collections::BTreeMap;

use fiberscope::model::{ClusterGeometry, ClusterKey, FiberPolyline};
use fiberscope::projection::{DistanceMetric, ProjectionLayout};
use fiberscope::stats::{Fingerprint, FieldStats};
use nalgebra::DMatrix;
use rand::Rng;

pub fn f32r(v: f64) -> f64 {
    f64::from(v as f32)
}

fn random_value<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..20) {
        0 => 0.0,
        1 => -0.0,
        2 => f64::from(f32::MAX),
        3 => f64::from(f32::MIN_POSITIVE),
        _ => f32r(rng.random_range(-1e3..1e3)),
    }
}

/// A random valid cluster whose values are all exactly representable as
/// f32. Field names are short and distinct.
pub fn random_cluster<R: Rng>(rng: &mut R, max_fibers: usize, max_fields: usize) -> ClusterGeometry {
    let n_fibers = rng.random_range(1..=max_fibers);
    let n_scalars = rng.random_range(0..=max_fields);
    let n_props = rng.random_range(0..=max_fields);
    let scalar_names: Vec<String> = (0..n_scalars).map(|i| format!("s{i}_{}", rng.random_range(0..100))).collect();
    let property_names: Vec<String> = (0..n_props).map(|i| format!("p{i}_{}", rng.random_range(0..100))).collect();
    let fibers = (0..n_fibers)
        .map(|_| {
            let n = rng.random_range(2..=12);
            let points = (0..n).map(|_| [random_value(rng), random_value(rng), random_value(rng)]).collect();
            let scalars = (0..n_scalars).map(|_| (0..n).map(|_| random_value(rng)).collect()).collect();
            FiberPolyline::with_scalars(points, scalars)
        })
        .collect();
    let properties = (0..n_props).map(|_| (0..n_fibers).map(|_| random_value(rng)).collect()).collect();
    ClusterGeometry { cluster_id: rng.random_range(0..800), scalar_names, property_names, fibers, properties }
}

/// A random cluster with moderate magnitudes and occasional NaN samples,
/// for aggregation checks.
pub fn random_stats_cluster<R: Rng>(rng: &mut R) -> ClusterGeometry {
    let n_fibers = rng.random_range(1..=10);
    let n_scalars = rng.random_range(1..=4);
    let n_props = rng.random_range(0..=3);
    let magnitude = rng.random_range(1.0..50.0);
    let offset = if rng.random_bool(0.5) { magnitude } else { -magnitude };
    let spread = rng.random_range(0.1..magnitude / 2.0);
    let sample = |rng: &mut R| {
        if rng.random_bool(0.05) {
            f64::NAN
        } else {
            offset + spread * rng.random_range(-1.0..1.0)
        }
    };
    let fibers = (0..n_fibers)
        .map(|_| {
            let n = rng.random_range(2..=30);
            let points = (0..n)
                .map(|_| [rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0)])
                .collect();
            let scalars = (0..n_scalars).map(|_| (0..n).map(|_| sample(rng)).collect()).collect();
            FiberPolyline::with_scalars(points, scalars)
        })
        .collect();
    let properties = (0..n_props).map(|_| (0..n_fibers).map(|_| sample(rng)).collect()).collect();
    ClusterGeometry {
        cluster_id: 0,
        scalar_names: (0..n_scalars).map(|i| format!("scalar{i}")).collect(),
        property_names: (0..n_props).map(|i| format!("prop{i}")).collect(),
        fibers,
        properties,
    }
}

/// Mean, population std, min, max and counts by direct two-pass sums.
pub fn two_pass(samples: &[f64]) -> Option<FieldStats> {
    let finite: Vec<f64> = samples.iter().copied().filter(|x| !x.is_nan()).collect();
    if finite.is_empty() {
        return None;
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let var = finite.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Some(FieldStats {
        mean,
        std: var.sqrt(),
        min: finite.iter().copied().fold(f64::INFINITY, f64::min),
        max: finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        count: finite.len(),
        nan_count: samples.len() - finite.len(),
    })
}

pub struct OracleSummary {
    pub mean_fiber_length: f64,
    pub fields: BTreeMap<String, Option<FieldStats>>,
}

pub fn oracle_summary(g: &ClusterGeometry) -> OracleSummary {
    let lengths: Vec<f64> = g
        .fibers
        .iter()
        .map(|f| {
            let mut total = 0.0;
            for i in 1..f.points.len() {
                let (a, b) = (f.points[i - 1], f.points[i]);
                total += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            }
            total
        })
        .collect();
    let mut fields = BTreeMap::new();
    for (i, name) in g.scalar_names.iter().enumerate() {
        let all: Vec<f64> = g.fibers.iter().flat_map(|f| f.scalars[i].iter().copied()).collect();
        fields.insert(name.clone(), two_pass(&all));
    }
    for (name, column) in g.property_names.iter().zip(&g.properties) {
        fields.insert(name.clone(), two_pass(column));
    }
    OracleSummary { mean_fiber_length: lengths.iter().sum::<f64>() / lengths.len() as f64, fields }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Worst relative deviation between a library statistic and the oracle,
/// with an absolute floor of `floor` for values near zero.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(floor)
    }
}

pub fn random_planar<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let scale = 10f64.powi(rng.random_range(-2..3));
    DMatrix::from_fn(n, 2, |_, _| scale * rng.random_range(-1.0..1.0))
}

/// `n` fingerprints on the given axes with the given values.
pub fn fingerprints(rows: &[Vec<f64>], axes: &[&str]) -> (Vec<Fingerprint>, DistanceMetric) {
    let metric = DistanceMetric::euclidean(axes).unwrap();
    let fps = rows
        .iter()
        .enumerate()
        .map(|(i, v)| Fingerprint {
            key: ClusterKey::new(format!("S{:03}", i / 800), (i % 800) as u32),
            axis_names: metric.axes.clone(),
            values: v.clone(),
        })
        .collect();
    (fps, metric)
}

/// A 10 x 10 grid of radar fingerprints on four axes: two grid axes plus
/// two axes that bend the grid out of the plane.
pub fn grid_fingerprint_rows() -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(100);
    for i in 0..10 {
        for j in 0..10 {
            let (u, v) = (i as f64 / 9.0, j as f64 / 9.0);
            let bend = 0.5 + 0.15 * (std::f64::consts::PI * u).sin() * (std::f64::consts::PI * v).cos();
            rows.push(vec![u, v, bend, 0.5 + 0.1 * (u - v)]);
        }
    }
    rows
}

pub const GRID_AXES: [&str; 4] = ["fa1", "fa2", "md", "similarity"];

/// Random 2D layout over most of a `subjects x clusters` grid of keys.
pub fn random_layout<R: Rng>(rng: &mut R) -> ProjectionLayout {
    let subjects = rng.random_range(1..=6);
    let clusters = rng.random_range(1..=12);
    let mut keys = Vec::new();
    for s in 0..subjects {
        for c in 0..clusters {
            if rng.random_bool(0.85) {
                keys.push(ClusterKey::new(format!("S{s}"), c * 50));
            }
        }
    }
    if keys.is_empty() {
        keys.push(ClusterKey::new("S0", 0));
    }
    let n = keys.len();
    ProjectionLayout {
        keys,
        coords: DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0)),
        pivots: vec![0],
        metric: DistanceMetric::euclidean(&["fa1"]).unwrap(),
    }
}
