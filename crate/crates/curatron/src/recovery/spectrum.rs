//! Thin SVD helpers shared by the solvers: full factorizations with a
//! guaranteed descending order, truncations, and skew-projection.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Full SVD of a square matrix with columns ordered by descending
/// singular value. `v` holds right singular vectors as columns.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

/// Computes the SVD, failing on non-finite input or a failed
/// factorization.
pub fn full_svd(m: &DMatrix<f64>) -> Result<SvdFactors> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("SVD requires finite entries"));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.ok_or_else(|| Error::invalid("SVD did not produce U"))?;
    let v_t = svd.v_t.ok_or_else(|| Error::invalid("SVD did not produce V"))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let u_sorted = DMatrix::from_columns(&order.iter().map(|&k| u.column(k)).collect::<Vec<_>>());
    let v = v_t.transpose();
    let v_sorted = DMatrix::from_columns(&order.iter().map(|&k| v.column(k)).collect::<Vec<_>>());
    Ok(SvdFactors { u: u_sorted, v: v_sorted, singular_values })
}

impl SvdFactors {
    /// Rank-`k` truncation `sum_{i<k} sigma_i u_i v_i^T`.
    pub fn truncate(&self, k: usize) -> DMatrix<f64> {
        let n = self.u.nrows();
        let m = self.v.nrows();
        let k = k.min(self.singular_values.len());
        let mut out = DMatrix::zeros(n, m);
        for i in 0..k {
            let ui = self.u.column(i);
            let vi = self.v.column(i);
            let s = self.singular_values[i];
            for c in 0..m {
                let sv = s * vi[c];
                for r in 0..n {
                    out[(r, c)] += ui[r] * sv;
                }
            }
        }
        out
    }
}

/// Nearest skew-symmetric matrix in Frobenius norm: `(M - M^T) / 2`.
/// The diagonal becomes exactly zero.
pub fn skew_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[(i, j)] - m[(j, i)]) / 2.0;
            out[(i, j)] = v;
            out[(j, i)] = -v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn svd_sorted_descending_on_diagonal_matrix() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 5.0, 1.0]));
        let f = full_svd(&m).unwrap();
        assert_abs_diff_eq!(f.singular_values[0], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.singular_values[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.singular_values[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn svd_reconstructs_input() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, -1.0, 0.0, 0.7, -2.0, -0.7, 0.0]);
        let f = full_svd(&m).unwrap();
        let rec = f.truncate(3);
        assert!((&m - &rec).norm() <= 1e-12 * m.norm().max(1.0));
    }

    #[test]
    fn rank_two_skew_matrix_has_paired_top_singular_values() {
        // 1 w^T - w 1^T is rank 2 with a degenerate top singular pair.
        let n = 7;
        let w: Vec<f64> = (0..n).map(|i| 0.3 * i as f64).collect();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = w[j] - w[i];
            }
        }
        let f = full_svd(&m).unwrap();
        let s = &f.singular_values;
        assert_abs_diff_eq!(s[0], s[1], epsilon = 1e-10 * s[0]);
        assert!(s[2] <= 1e-12 * s[0], "third singular value {}", s[2]);
        let rec = f.truncate(2);
        assert!((&m - &rec).norm() <= 1e-10 * m.norm());
    }

    #[test]
    fn skew_projection_properties() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 0.5, -1.0, 4.0, 1.5, 2.5, 9.0]);
        let s = skew_project(&m);
        assert_eq!(s.transpose(), -s.clone());
        for i in 0..3 {
            assert_eq!(s[(i, i)], 0.0);
        }
        // Idempotent on already-skew input.
        assert_eq!(skew_project(&s), s);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(full_svd(&m).is_err());
    }
}
