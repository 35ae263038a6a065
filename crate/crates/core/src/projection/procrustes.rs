use nalgebra::DMatrix;

use crate::projection::ProjectionError;

fn centered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    out
}

/// Root-mean-square distance of the rows of `a` from their centroid.
pub fn layout_rms(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    (centered(a).norm_squared() / a.nrows() as f64).sqrt()
}

/// RMS residual after optimally translating, uniformly scaling and
/// rotating (reflections allowed) `b` onto `a`.
pub fn procrustes_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, ProjectionError> {
    if a.nrows() != b.nrows() || a.nrows() == 0 {
        return Err(ProjectionError::LengthMismatch { left: a.nrows(), right: b.nrows() });
    }
    if a.ncols() != b.ncols() {
        return Err(ProjectionError::DimMismatch { left: a.ncols(), right: b.ncols() });
    }
    let n = a.nrows() as f64;
    let a0 = centered(a);
    let b0 = centered(b);
    let bb = b0.norm_squared();
    if bb == 0.0 {
        return Ok((a0.norm_squared() / n).sqrt());
    }
    // max over orthogonal R of tr(R^T B^T A) is the nuclear norm of B^T A.
    let svd = (b0.transpose() * &a0).svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let rotation = u * v_t;
    let scale = svd.singular_values.sum() / bb;
    let residual = &a0 - (&b0 * rotation) * scale;
    Ok((residual.norm_squared() / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample() -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.5, 1.0, 3.0, -1.0, 1.0])
    }

    #[test]
    fn identical_layouts() {
        assert_abs_diff_eq!(procrustes_error(&sample(), &sample()).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_scale_translation_reflection_are_free() {
        let a = sample();
        let b = DMatrix::from_fn(4, 2, |i, j| match j {
            0 => -3.0 * a[(i, 1)] + 5.0,
            _ => 3.0 * a[(i, 0)] - 2.0,
        });
        assert_abs_diff_eq!(procrustes_error(&a, &b).unwrap(), 0.0, epsilon = 1e-9);
        let mirrored = DMatrix::from_fn(4, 2, |i, j| if j == 0 { -a[(i, 0)] } else { a[(i, 1)] });
        assert_abs_diff_eq!(procrustes_error(&a, &mirrored).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn non_similar_layouts_have_error() {
        let a = sample();
        let stretched = DMatrix::from_fn(4, 2, |i, j| if j == 0 { 4.0 * a[(i, 0)] } else { a[(i, 1)] });
        let e = procrustes_error(&a, &stretched).unwrap();
        assert!(e > 0.1 && e < layout_rms(&a));
        let zero = DMatrix::zeros(4, 2);
        assert_abs_diff_eq!(procrustes_error(&a, &zero).unwrap(), layout_rms(&a), epsilon = 1e-12);
    }

    #[test]
    fn length_mismatch() {
        let b = DMatrix::zeros(3, 2);
        assert_eq!(
            procrustes_error(&sample(), &b),
            Err(ProjectionError::LengthMismatch { left: 4, right: 3 })
        );
    }
}
