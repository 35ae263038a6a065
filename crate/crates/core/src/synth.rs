//! Deterministic synthetic cohorts for tests, demos and benchmarks.

use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::{write_trk, write_vtp, VtpEncoding};
use crate::model::{ClusterGeometry, FiberPolyline, FileFormat};

pub const SCALARS: [&str; 3] = ["fa1", "fa2", "md"];
pub const PROPERTIES: [&str; 1] = ["similarity"];

/// A small bundle whose scalar levels depend on `subject_index` and
/// `cluster_id`.
pub fn synthetic_cluster(subject_index: usize, cluster_id: u32, seed: u64) -> ClusterGeometry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((subject_index as u64) << 32) ^ u64::from(cluster_id));
    let n_fibers = rng.random_range(3..=8);
    let base = [
        (cluster_id % 97) as f64 * 0.7,
        (cluster_id % 13) as f64 * 1.3 - 5.0,
        subject_index as f64 * 2.0,
    ];
    let fa_level = 0.2 + 0.4 * ((cluster_id as f64 * 0.37).sin() * 0.5 + 0.5) + 0.02 * subject_index as f64;
    let md_level = 0.0007 + 0.0003 * ((cluster_id as f64 * 0.11).cos() * 0.5 + 0.5);

    let mut fibers = Vec::with_capacity(n_fibers);
    let mut similarity = Vec::with_capacity(n_fibers);
    for _ in 0..n_fibers {
        let n_points = rng.random_range(5..=20);
        let jitter = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let mut points = Vec::with_capacity(n_points);
        let mut columns = vec![Vec::with_capacity(n_points); SCALARS.len()];
        for p in 0..n_points {
            let t = p as f64;
            points.push([
                round32(base[0] + jitter[0] + t),
                round32(base[1] + jitter[1] + 0.3 * t.sin()),
                round32(base[2] + jitter[2] + 0.1 * t),
            ]);
            columns[0].push(round32(fa_level + rng.random_range(-0.05..0.05)));
            columns[1].push(round32(fa_level * 0.8 + rng.random_range(-0.05..0.05)));
            columns[2].push(round32(md_level + rng.random_range(-0.0001..0.0001)));
        }
        fibers.push(FiberPolyline::with_scalars(points, columns));
        similarity.push(round32(rng.random_range(0.0..1.0)));
    }
    ClusterGeometry {
        cluster_id,
        scalar_names: SCALARS.iter().map(|s| s.to_string()).collect(),
        property_names: PROPERTIES.iter().map(|s| s.to_string()).collect(),
        fibers,
        properties: vec![similarity],
    }
}

fn round32(v: f64) -> f64 {
    f64::from(v as f32)
}

pub fn subject_id(index: usize) -> String {
    format!("S{:02}", index + 1)
}

/// Writes `<root>/<subject>/cluster_<id>.<ext>` for every subject and
/// cluster id plus `metadata.csv`. Cluster ids alternate between TRK and
/// VTP in runs of 50 unless `format` forces one.
pub fn write_cohort(
    root: &Path,
    subjects: usize,
    cluster_ids: &[u32],
    format: Option<FileFormat>,
    seed: u64,
) -> io::Result<()> {
    let mut csv = String::from("subject ID,age,gender,weight,height\n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 0..subjects {
        let id = subject_id(s);
        let dir = root.join(&id);
        fs::create_dir_all(&dir)?;
        for &c in cluster_ids {
            let g = synthetic_cluster(s, c, seed);
            let fmt = format.unwrap_or(if (c / 50) % 2 == 0 { FileFormat::Trk } else { FileFormat::Vtp });
            let path = dir.join(format!("cluster_{c:05}.{}", fmt.as_str()));
            match fmt {
                FileFormat::Trk => fs::write(path, write_trk(&g).map_err(io::Error::other)?)?,
                FileFormat::Vtp => fs::write(path, write_vtp(&g, VtpEncoding::Base64))?,
            }
        }
        csv.push_str(&format!(
            "{id},{},{},{:.1},{:.1}\n",
            rng.random_range(20..40),
            if rng.random_bool(0.5) { "F" } else { "M" },
            rng.random_range(50.0..95.0),
            rng.random_range(155.0..195.0),
        ));
    }
    fs::write(root.join("metadata.csv"), csv)
}

/// The study configuration: 5 subjects, every 50th of 800 clusters.
pub fn write_study_cohort(root: &Path, all_clusters: bool) -> io::Result<()> {
    let ids: Vec<u32> = if all_clusters { (0..800).collect() } else { (0..800).step_by(50).collect() };
    write_cohort(root, 5, &ids, None, 2021)
}
