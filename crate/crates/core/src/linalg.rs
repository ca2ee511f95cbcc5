//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn det(m: &CMatrix) -> Complex64 {
    if m.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Solves `m x = rhs` with partial pivoting. `None` if `m` is singular.
pub fn solve(m: &CMatrix, rhs: &CVector) -> Option<CVector> {
    m.clone().lu().solve(rhs)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn min_singular_value(m: &CMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Right singular vectors belonging to the `k` smallest singular values,
/// returned with the full (descending) list of singular values.
pub fn null_vectors(m: &CMatrix, k: usize) -> (Vec<CVector>, Vec<f64>) {
    let n = m.ncols();
    // Pad to a square matrix so that v_t always carries n rows.
    let sq = if m.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let vecs = order
        .iter()
        .rev()
        .take(k)
        .map(|&i| v_t.row(i).adjoint().into_owned())
        .collect();
    (vecs, sv)
}

/// Condition number of a Hermitian positive semidefinite matrix (ratio of extreme eigenvalues).
pub fn hermitian_condition(m: &CMatrix) -> f64 {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Extreme eigenvalues (min, max) of a Hermitian matrix.
pub fn hermitian_extremes(m: &CMatrix) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::MAX, f64::min);
    (min, max)
}

/// Orthogonal projector onto the row space of `m`.
pub fn row_space_projector(m: &CMatrix) -> CMatrix {
    let a = m.adjoint();
    let qr = a.clone().qr();
    let r = qr.r();
    let rank = (0..r.nrows().min(r.ncols()))
        .filter(|&i| r[(i, i)].norm() > 1e-12 * r.norm().max(1.0))
        .count();
    let q = qr.q();
    let qk = q.columns(0, rank).into_owned();
    &qk * qk.adjoint()
}

pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * top).count()
}
