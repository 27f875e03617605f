//! Small dense matrix kernels shared by the pointwise operations.
//!
//! Dimensions here are tiny (m <= n <= 3), so robustness and determinism matter
//! more than asymptotics. Decompositions (SVD, LU, symmetric eigenvalues) are
//! delegated to nalgebra; the Cramer inverse is written out explicitly so tests
//! can cross-check it against the elimination route.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, XfgError};

/// Max absolute entry. Zero-sized matrices have norm 0.
pub fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Inverse by the adjugate formula, for square matrices of order <= 3.
/// Returns `None` when the determinant vanishes.
pub fn cramer_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    assert!(a.is_square(), "cramer_inverse needs a square matrix");
    let n = a.nrows();
    match n {
        0 => Some(a.clone()),
        1 => {
            let d = a[(0, 0)];
            if d == 0.0 {
                None
            } else {
                Some(DMatrix::from_element(1, 1, 1.0 / d))
            }
        }
        2 => {
            let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            if det == 0.0 {
                return None;
            }
            let inv = DMatrix::from_row_slice(
                2,
                2,
                &[a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]],
            );
            Some(inv / det)
        }
        3 => {
            let m = |i: usize, j: usize| a[(i, j)];
            let c00 = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
            let c01 = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
            let c02 = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
            let det = m(0, 0) * c00 + m(0, 1) * c01 + m(0, 2) * c02;
            if det == 0.0 {
                return None;
            }
            let c10 = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
            let c11 = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
            let c12 = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
            let c20 = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
            let c21 = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
            let c22 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
            // adjugate transpose laid out row by row
            let inv = DMatrix::from_row_slice(3, 3, &[c00, c10, c20, c01, c11, c21, c02, c12, c22]);
            Some(inv / det)
        }
        _ => panic!("cramer_inverse only supports order <= 3, got {n}"),
    }
}

/// Inverse by LU with partial pivoting (nalgebra). Works for any order.
pub fn elimination_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().try_inverse()
}

/// Singular values in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    DVector::from_vec(sv)
}

/// Orthonormal basis of ker(A) from the trailing right singular vectors,
/// returned as rows. `tol` is the absolute singular value cut-off.
pub fn kernel_basis(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("svd requested v_t");
    let sv = &svd.singular_values;
    let mut rows: Vec<f64> = Vec::new();
    let mut count = 0;
    for i in 0..n {
        let s = if i < sv.len() { sv[i] } else { 0.0 };
        if s <= tol {
            if i < vt.nrows() {
                rows.extend(vt.row(i).iter());
                count += 1;
            }
        }
    }
    // directions not reached by a thin V^t (n > nrows of vt) are recovered by
    // completing the range rows to an orthonormal basis
    if count < n - rank_at(sv, tol) {
        return kernel_by_completion(a, tol);
    }
    DMatrix::from_row_slice(count, n, &rows)
}

fn rank_at(sv: &DVector<f64>, tol: f64) -> usize {
    sv.iter().filter(|&&s| s > tol).count()
}

fn kernel_by_completion(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    // Gram-Schmidt completion of the row space of A to all of R^n; the added
    // vectors span ker(A) since row(A)^perp = ker(A).
    let n = a.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for i in 0..a.nrows() {
        let mut v: DVector<f64> = a.row(i).transpose();
        for b in &basis {
            let c = v.dot(b);
            v -= b * c;
        }
        let norm = v.norm();
        if norm > tol {
            basis.push(v / norm);
        }
    }
    let range_dim = basis.len();
    for k in 0..n {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        for b in &basis {
            let c = v.dot(b);
            v -= b * c;
        }
        let norm = v.norm();
        if norm > 1e-12 {
            basis.push(v / norm);
        }
    }
    let kernel: Vec<&DVector<f64>> = basis[range_dim..].iter().collect();
    let mut out = DMatrix::zeros(kernel.len(), n);
    for (i, v) in kernel.iter().enumerate() {
        out.set_row(i, &v.transpose());
    }
    out
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    let sym = nalgebra::SymmetricEigen::new(a.clone());
    let mut ev: Vec<f64> = sym.eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    DVector::from_vec(ev)
}

/// Deterministic pairwise summation; the reduction tree depends only on the
/// slice length, never on thread scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 64;
    if values.len() <= BASE {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Condition number estimate from extreme singular values.
pub fn condition_2(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    if sv.is_empty() || sv[sv.len() - 1] == 0.0 {
        return f64::INFINITY;
    }
    sv[0] / sv[sv.len() - 1]
}

/// Lexicographic order on coordinate tuples, used to break ties in
/// deterministic "worst witness" reductions.
pub fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    a.len() < b.len()
}

/// Checks two dimension fields agree, with a readable message.
pub fn check_dim(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(XfgError::argument(format!(
            "{what}: dimension mismatch, got {got}, expected {expected}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cramer_matches_elimination_on_fixed_3x3() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 0.0, 4.0, 5.0, 1.0, 0.0, 6.0]);
        let c = cramer_inverse(&a).unwrap();
        let e = elimination_inverse(&a).unwrap();
        // det = 22, hand-checked adjugate entries
        assert_abs_diff_eq!(c[(0, 0)], 24.0 / 22.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c[(2, 1)], 2.0 / 22.0, epsilon = 1e-15);
        assert!(inf_norm(&(c.clone() - e)) < 1e-13);
        assert!(inf_norm(&(&a * &c - DMatrix::identity(3, 3))) < 1e-13);
    }

    #[test]
    fn cramer_rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(cramer_inverse(&a).is_none());
    }

    #[test]
    fn kernel_of_wide_matrix() {
        // ker [[1,0,0],[0,1,0]] = span{e3}
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let k = kernel_basis(&a, 1e-12);
        assert_eq!(k.nrows(), 1);
        assert_abs_diff_eq!(k[(0, 2)].abs(), 1.0, epsilon = 1e-12);
        assert!(inf_norm(&(&a * k.transpose())) < 1e-12);
    }

    #[test]
    fn kernel_of_rank_deficient_square() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let k = kernel_basis(&a, 1e-12);
        assert_eq!(k.nrows(), 1);
        assert_abs_diff_eq!(k[(0, 1)].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sym_eigenvalues_of_saddle() {
        // [[1,2],[2,1]] has eigenvalues -1 and 3
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let ev = sym_eigenvalues(&a);
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_and_large() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64) * 0.001).collect();
        let naive: f64 = v.iter().sum();
        assert_abs_diff_eq!(pairwise_sum(&v), naive, epsilon = 1e-9);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn lex_order() {
        assert!(lex_less(&[0.0, 1.0], &[0.0, 2.0]));
        assert!(!lex_less(&[0.0, 2.0], &[0.0, 2.0]));
        assert!(lex_less(&[0.0], &[0.0, 0.0]));
    }
}
