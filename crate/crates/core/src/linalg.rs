//! Thin wrappers around the dense kernels used by the low-rank containers:
//! economy QR, thin SVD, symmetric eigendecomposition and the shared
//! Frobenius-tail truncation rule.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

/// Economy QR of a tall (or wide) matrix: `a = q * r` with `q` having
/// `min(nrows, ncols)` orthonormal columns.
pub fn thin_qr(a: MatRef<'_, f64>) -> (Mat<f64>, Mat<f64>) {
    if a.ncols() == 0 || a.nrows() == 0 {
        return (
            Mat::zeros(a.nrows(), 0),
            Mat::zeros(0, a.ncols()),
        );
    }
    let qr = a.qr();
    (qr.compute_thin_Q(), qr.thin_R().to_owned())
}

/// Thin SVD `a = u * diag(s) * v^T`, singular values descending.
pub fn thin_svd(a: MatRef<'_, f64>) -> (Mat<f64>, Vec<f64>, Mat<f64>) {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return (Mat::zeros(a.nrows(), 0), Vec::new(), Mat::zeros(a.ncols(), 0));
    }
    let svd = a.thin_svd().expect("svd failed to converge");
    let s = (0..k).map(|i| svd.S()[i]).collect();
    (svd.U().to_owned(), s, svd.V().to_owned())
}

/// Eigendecomposition of a symmetric PSD matrix, eigenvalues descending and
/// clamped at zero (tiny negatives are rounding artifacts of Gramians).
pub fn eigh_desc(a: MatRef<'_, f64>) -> (Mat<f64>, Vec<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (Mat::zeros(0, 0), Vec::new());
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigendecomposition failed");
    // faer returns eigenvalues ascending; flip.
    let mut u = Mat::zeros(n, n);
    let mut s = vec![0.0; n];
    for j in 0..n {
        let src = n - 1 - j;
        s[j] = evd.S()[src].max(0.0);
        for i in 0..n {
            u[(i, j)] = evd.U()[(i, src)];
        }
    }
    (u, s)
}

/// Number of leading singular values kept by the relative Frobenius-tail
/// rule: drop the longest tail with `sqrt(sum of squares) <= rel_tol * norm`.
pub fn truncation_rank(svals: &[f64], rel_tol: f64, max_rank: Option<usize>) -> usize {
    let total: f64 = svals.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0;
    }
    let budget = rel_tol * rel_tol * total;
    let mut tail = 0.0;
    let mut keep = svals.len();
    for (i, s) in svals.iter().enumerate().rev() {
        tail += s * s;
        if tail <= budget {
            keep = i;
        } else {
            break;
        }
    }
    match max_rank {
        Some(cap) => keep.min(cap),
        None => keep,
    }
}

/// Horizontal concatenation `[a_0 | a_1 | ...]`, each scaled by its coefficient.
pub fn hstack_scaled(mats: &[(f64, MatRef<'_, f64>)], nrows: usize) -> Mat<f64> {
    let total: usize = mats.iter().map(|(_, m)| m.ncols()).sum();
    let mut out = Mat::zeros(nrows, total);
    let mut off = 0;
    for (c, m) in mats {
        debug_assert_eq!(m.nrows(), nrows);
        for j in 0..m.ncols() {
            for i in 0..nrows {
                out[(i, off + j)] = c * m[(i, j)];
            }
        }
        off += m.ncols();
    }
    out
}

/// Frobenius norm of the difference, for oracle comparisons in tests.
pub fn frob_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let d = a[(i, j)] - b[(i, j)];
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// Solves `a x = b` for SPD `a` via Cholesky. Panics if `a` is not SPD;
/// intended for small dense systems (coarse-grid solves, test oracles).
pub fn spd_solve(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let llt = a.llt(Side::Lower).expect("matrix is not positive definite");
    llt.solve(b)
}

/// Checks positive definiteness by attempting a Cholesky factorization.
pub fn is_spd(a: MatRef<'_, f64>) -> bool {
    a.llt(Side::Lower).is_ok()
}
