//! Small dense symmetric eigensolver (cyclic Jacobi) used by PivotMDS on
//! its k x k inner-product matrix.

use crate::projection::ProjectionError;

pub const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric `n x n` row-major matrix.
///
/// Returns eigenvalues in descending order and the matching unit
/// eigenvectors, `vectors[i]` belonging to `values[i]`.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), ProjectionError> {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = (f64::EPSILON * frob).powi(2);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q].powi(2))
            .sum();
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r * n + p];
                        let arq = a[r * n + q];
                        let new_rp = c * arp - s * arq;
                        let new_rq = s * arp + c * arq;
                        a[r * n + p] = new_rp;
                        a[p * n + r] = new_rp;
                        a[r * n + q] = new_rq;
                        a[q * n + r] = new_rq;
                    }
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    if !converged {
        return Err(ProjectionError::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps index order for equal eigenvalues.
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|r| v[r * n + i]).collect()).collect();
    Ok((values, vectors))
}

/// Flips `column` so that its largest-magnitude entry (first on ties) is
/// positive.
pub fn fix_sign(column: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in column.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        column.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_matrix() {
        let (vals, vecs) = symmetric_eigen(&[1.0, 0.0, 0.0, 3.0], 2).unwrap();
        assert_eq!(vals, vec![3.0, 1.0]);
        assert_eq!(vecs[0], vec![0.0, 1.0]);
    }

    #[test]
    fn matches_definition_on_random_matrix() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.random_range(-1.0..1.0);
                m[i * n + j] = x;
                m[j * n + i] = x;
            }
        }
        let (vals, vecs) = symmetric_eigen(&m, n).unwrap();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        for (lambda, v) in vals.iter().zip(&vecs) {
            for r in 0..n {
                let mv: f64 = (0..n).map(|c| m[r * n + c] * v[c]).sum();
                assert_abs_diff_eq!(mv, lambda * v[r], epsilon = 1e-12);
            }
            assert_abs_diff_eq!(v.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_matrix_converges_immediately() {
        let (vals, _) = symmetric_eigen(&[0.0; 9], 3).unwrap();
        assert_eq!(vals, vec![0.0; 3]);
    }

    #[test]
    fn sign_convention() {
        let mut c = vec![0.5, -2.0, 1.0];
        fix_sign(&mut c);
        assert_eq!(c, vec![-0.5, 2.0, -1.0]);
        let mut tie = vec![-1.0, 1.0];
        fix_sign(&mut tie);
        assert_eq!(tie, vec![1.0, -1.0]);
    }
}
