//! Dense helpers shared by the structural modules.
//!
//! Everything here works on `nalgebra` dynamic matrices. Rank decisions use a
//! singular-value cutoff relative to the largest singular value.

use nalgebra::{DMatrix, DVector, SVD};

/// Relative singular-value cutoff used for every rank and nullspace decision.
pub const RANK_RTOL: f64 = 1e-10;

/// Symmetric part `(m + mᵀ) / 2`.
pub fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Smallest and largest eigenvalue of a symmetric matrix. Empty matrices
/// report `(0, 0)`.
pub fn sym_eig_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let v = sym_eigenvalues(m);
    match (v.first(), v.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0.0, 0.0),
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
///
/// Read off the singular values of the positive semidefinite shift
/// `S + ‖S‖₂ I`; implicit QR on `S` itself can diverge on rank-deficient input.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let s = sym(m);
    let r = spectral_norm(&s);
    let shifted = &s + DMatrix::identity(n, n) * r;
    let mut v: Vec<f64> = SVD::new(shifted, false, false).singular_values.iter().map(|x| x - r).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Numerical rank with cutoff `RANK_RTOL · σ_max`.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > RANK_RTOL * smax).count()
}

/// 2-norm condition number; infinite for singular or empty-rank input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Orthonormal basis (columns) of the nullspace of `m`.
///
/// The matrix is padded with zero rows to be at least square so that the SVD
/// yields a complete right singular basis.
pub fn nullspace(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, n) = m.shape();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if r == 0 {
        return DMatrix::identity(n, n);
    }
    let padded = if r < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (r, n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_RTOL * smax;
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax == 0.0 || s <= cutoff)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Symmetric square root and inverse square root of an SPD matrix.
pub fn spd_sqrt_pair(w: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = w.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0));
    }
    let svd = SVD::new(sym(w), true, false);
    let q = svd.u.expect("left singular vectors requested");
    let sqrt = DMatrix::from_diagonal(&svd.singular_values.map(f64::sqrt));
    let inv_sqrt = DMatrix::from_diagonal(&svd.singular_values.map(|l| 1.0 / l.sqrt()));
    (&q * sqrt * q.transpose(), &q * inv_sqrt * q.transpose())
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Vertical concatenation of matrices with equal column counts.
pub fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((r, 0), b.shape()).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Largest absolute entry together with its position.
pub fn worst_entry(m: &DMatrix<f64>) -> (usize, usize, f64) {
    let mut best = (0, 0, 0.0_f64);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.abs() > best.2.abs() {
                best = (i, j, v);
            }
        }
    }
    best
}

/// Largest principal-angle sine between the column spans of two matrices with
/// orthonormal columns. Zero means the subspaces coincide.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    // ‖(I − b bᵀ) a‖₂ = sin of the largest principal angle
    let residual = a - b * (b.transpose() * a);
    spectral_norm(&residual)
}
