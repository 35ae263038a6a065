//! PivotMDS: approximate classical MDS from the distances of every item to
//! `k` pivot items.
//!
//! With `D2` the `n x k` squared item-to-pivot distances, the double-centered
//! matrix is
//!
//! ```text
//! C[i][j] = -1/2 (D2[i][j] - mean_j' D2[i][j'] - mean_i' D2[i'][j] + mean D2)
//! ```
//!
//! The top eigenvectors `w` of the `k x k` matrix `C^T C` (eigenvalues
//! `s^2`) give the layout columns `C w / sqrt(s)`. With `k = n` this is
//! exactly the classical MDS layout.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::ClusterKey;
use crate::projection::distance::{DistanceMetric, FeatureMatrix};
use crate::projection::linalg::{fix_sign, symmetric_eigen};
use crate::projection::{ProjectionError, ProjectionLayout};
use crate::stats::Fingerprint;

pub const DEFAULT_MAX_PIVOTS: usize = 50;

/// Rows per block when accumulating `C^T C`.
const BLOCK_ROWS: usize = 1024;

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_EPS: f64 = 1e-12;

pub fn default_pivot_count(n: usize) -> usize {
    n.min(DEFAULT_MAX_PIVOTS)
}

/// Maxmin (farthest-point) pivots starting from `first`. Each next pivot
/// maximizes the distance to its nearest chosen pivot; ties go to the lowest
/// index.
pub fn maxmin_pivots<F>(n: usize, k: usize, first: usize, dist: F) -> Result<Vec<usize>, ProjectionError>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    if k == 0 || k > n {
        return Err(ProjectionError::BadK { k, n });
    }
    assert!(first < n, "first pivot out of range");
    let mut chosen = vec![false; n];
    let mut nearest = vec![f64::INFINITY; n];
    let mut pivots = Vec::with_capacity(k);
    let mut next = first;
    loop {
        pivots.push(next);
        chosen[next] = true;
        if pivots.len() == k {
            break;
        }
        nearest
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, d)| *d = d.min(dist(next, i)));
        let mut best: Option<usize> = None;
        for i in 0..n {
            if !chosen[i] && best.is_none_or(|b| nearest[i] > nearest[b]) {
                best = Some(i);
            }
        }
        next = best.expect("k <= n leaves an unchosen item");
    }
    Ok(pivots)
}

/// Maxmin pivots with a seeded uniform first pick.
pub fn select_pivots<F>(n: usize, k: usize, dist: F, seed: u64) -> Result<Vec<usize>, ProjectionError>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    if k == 0 || k > n {
        return Err(ProjectionError::BadK { k, n });
    }
    let first = ChaCha8Rng::seed_from_u64(seed).random_range(0..n);
    maxmin_pivots(n, k, first, dist)
}

/// Lays out `items` in `dim` (2 or 3) dimensions using `k` pivots.
pub fn pivot_mds(
    items: &[Fingerprint],
    metric: &DistanceMetric,
    k: usize,
    dim: usize,
    seed: u64,
) -> Result<ProjectionLayout, ProjectionError> {
    let features = FeatureMatrix::from_fingerprints(items, metric)?;
    let keys: Vec<ClusterKey> = items.iter().map(|f| f.key.clone()).collect();
    let (coords, pivots) = pivot_mds_features(&features, k, dim, seed)?;
    Ok(ProjectionLayout { keys, coords, pivots, metric: metric.clone() })
}

/// PivotMDS over raw feature rows; returns `(n x dim coordinates, pivots)`.
pub fn pivot_mds_features(
    features: &FeatureMatrix,
    k: usize,
    dim: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, Vec<usize>), ProjectionError> {
    let n = features.rows;
    if !(2..=3).contains(&dim) {
        return Err(ProjectionError::BadDim(dim));
    }
    if n == 0 {
        return Err(ProjectionError::Empty);
    }
    if k == 0 || k > n {
        return Err(ProjectionError::BadK { k, n });
    }
    let pivots = select_pivots(n, k, |i, j| features.distance(i, j), seed)?;
    if n == 1 {
        return Ok((DMatrix::zeros(1, dim), pivots));
    }

    // Squared distances to pivots, then double centering in place.
    let mut c: Vec<f64> = vec![0.0; n * k];
    c.par_chunks_mut(k).enumerate().for_each(|(i, row)| {
        for (slot, &p) in row.iter_mut().zip(&pivots) {
            *slot = features.squared_distance(i, p);
        }
    });
    let row_means: Vec<f64> = c.par_chunks(k).map(|row| row.iter().sum::<f64>() / k as f64).collect();
    let mut col_means = vec![0.0; k];
    for row in c.chunks(k) {
        for (m, v) in col_means.iter_mut().zip(row) {
            *m += v;
        }
    }
    col_means.iter_mut().for_each(|m| *m /= n as f64);
    let grand = col_means.iter().sum::<f64>() / k as f64;
    c.par_chunks_mut(k).zip(row_means.par_iter()).for_each(|(row, rm)| {
        for (v, cm) in row.iter_mut().zip(&col_means) {
            *v = -0.5 * (*v - rm - cm + grand);
        }
    });

    // C^T C, accumulated per fixed block and summed in block order.
    let partials: Vec<Vec<f64>> = c
        .par_chunks(BLOCK_ROWS * k)
        .map(|block| {
            let mut acc = vec![0.0; k * k];
            for row in block.chunks(k) {
                for a in 0..k {
                    let ra = row[a];
                    if ra == 0.0 {
                        continue;
                    }
                    let out = &mut acc[a * k..(a + 1) * k];
                    for (o, rb) in out[a..].iter_mut().zip(&row[a..]) {
                        *o += ra * rb;
                    }
                }
            }
            acc
        })
        .collect();
    let mut ctc = vec![0.0; k * k];
    for p in &partials {
        for (t, v) in ctc.iter_mut().zip(p) {
            *t += v;
        }
    }
    for a in 0..k {
        for b in 0..a {
            ctc[a * k + b] = ctc[b * k + a];
        }
    }

    let (values, vectors) = symmetric_eigen(&ctc, k)?;
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let mut coords = DMatrix::zeros(n, dim);
    for axis in 0..dim.min(k) {
        let lambda = values[axis];
        if top == 0.0 || lambda <= RANK_EPS * top {
            continue;
        }
        // lambda = s^2 with s the singular value of C; scale by s^(-1/2).
        let scale = lambda.powf(-0.25);
        let w = &vectors[axis];
        let mut column: Vec<f64> = c
            .par_chunks(k)
            .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() * scale)
            .collect();
        fix_sign(&mut column);
        coords.set_column(axis, &nalgebra::DVector::from_vec(column));
    }
    Ok((coords, pivots))
}
