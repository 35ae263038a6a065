//! Classical (Torgerson) MDS on a full distance matrix. Used as the
//! reference layout for PivotMDS.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::projection::linalg::fix_sign;
use crate::projection::ProjectionError;

/// Embeds `n` items in `dim` dimensions from their `n x n` distance matrix.
pub fn classical_mds(distances: &DMatrix<f64>, dim: usize) -> Result<DMatrix<f64>, ProjectionError> {
    let n = distances.nrows();
    if distances.ncols() != n {
        return Err(ProjectionError::NotSquare { rows: n, cols: distances.ncols() });
    }
    if dim == 0 {
        return Err(ProjectionError::BadDim(dim));
    }
    let scale = distances.amax().max(1.0);
    for i in 0..n {
        for j in 0..n {
            let d = distances[(i, j)];
            if d.is_nan() || d < 0.0 {
                return Err(ProjectionError::NegativeEntry { row: i, col: j });
            }
            if (d - distances[(j, i)]).abs() > 1e-12 * scale || (i == j && d != 0.0) {
                return Err(ProjectionError::NotSymmetric { row: i, col: j });
            }
        }
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, dim));
    }

    // B = -1/2 J (D o D) J
    let sq = distances.map(|d| d * d);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));

    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut coords = DMatrix::zeros(n, dim);
    for (c, &idx) in order.iter().take(dim).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        let mut column: Vec<f64> = eig.eigenvectors.column(idx).iter().map(|v| v * lambda.sqrt()).collect();
        fix_sign(&mut column);
        for (i, v) in column.into_iter().enumerate() {
            coords[(i, c)] = v;
        }
    }
    Ok(coords)
}

/// Eigenvalues of the double-centered matrix, descending. Exposed for
/// rank diagnostics.
pub fn gram_spectrum(distances: &DMatrix<f64>) -> Vec<f64> {
    let n = distances.nrows();
    if n == 0 {
        return Vec::new();
    }
    let sq = distances.map(|d| d * d);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let mut values: Vec<f64> = SymmetricEigen::new(b).eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Euclidean distance matrix of the rows of `points`.
pub fn distance_matrix(points: &DMatrix<f64>) -> DMatrix<f64> {
    let n = points.nrows();
    DMatrix::from_fn(n, n, |i, j| (points.row(i) - points.row(j)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_points() {
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let x = classical_mds(&d, 2).unwrap();
        assert_abs_diff_eq!((x.row(0) - x.row(1)).norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn unit_square_distances_are_recovered() {
        let square = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        let d = distance_matrix(&square);
        let x = classical_mds(&d, 2).unwrap();
        let recovered = distance_matrix(&x);
        for (a, b) in d.iter().zip(recovered.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn collinear_points_are_rank_one() {
        let line = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 3.0]);
        let spectrum = gram_spectrum(&distance_matrix(&line));
        assert!(spectrum[1].abs() <= 1e-9 * spectrum[0], "{spectrum:?}");
        let x = classical_mds(&distance_matrix(&line), 2).unwrap();
        assert!(x.column(1).amax() < 1e-6);
    }

    #[test]
    fn input_validation() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(classical_mds(&asym, 2), Err(ProjectionError::NotSymmetric { .. })));
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(matches!(classical_mds(&neg, 2), Err(ProjectionError::NegativeEntry { .. })));
    }
}
