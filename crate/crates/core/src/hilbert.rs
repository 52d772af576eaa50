//! Weighted finite-dimensional Hilbert spaces.
//!
//! A space is `Rⁿ` with an SPD Gram matrix `W`, so `⟨x, y⟩ = xᵀ W y`. Dual
//! elements are stored covariantly: they share coordinates with primal
//! vectors, the duality pairing is the plain Euclidean product, the dual space
//! carries the Gram `W⁻¹`, and the Riesz map is multiplication by `W`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Relative symmetry and positivity tolerance for Gram validation.
pub const GRAM_RTOL: f64 = 1e-12;
/// Slack allowed above 1 when classifying a boundary parameter as a contraction.
pub const CONTRACTION_TOL: f64 = 1e-10;
/// Slack allowed below 0 when classifying `D` as accretive.
pub const DISSIPATIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HilbertSpace {
    label: String,
    gram: DMatrix<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
    min_eig: f64,
    max_eig: f64,
}

impl HilbertSpace {
    /// Validates `gram` and builds the space. Zero-dimensional spaces are
    /// allowed so that empty boundary blocks compose uniformly.
    pub fn new(dim: usize, gram: DMatrix<f64>, label: impl Into<String>) -> Result<Arc<Self>> {
        let label = label.into();
        if gram.shape() != (dim, dim) {
            return Err(Error::dims("make_space", format!("{dim}x{dim}"), format!("{:?}", gram.shape())));
        }
        if dim == 0 {
            return Ok(Arc::new(Self { label, gram, chol: None, min_eig: 0.0, max_eig: 0.0 }));
        }
        let scale = gram.norm();
        let asymmetry = (&gram - gram.transpose()).norm() / scale.max(f64::MIN_POSITIVE);
        if !asymmetry.is_finite() || asymmetry > GRAM_RTOL {
            return Err(Error::NonSymmetricGram { label, asymmetry });
        }
        let gram = linalg::sym(&gram);
        let (min_eig, max_eig) = linalg::sym_eig_extremes(&gram);
        if !(min_eig > GRAM_RTOL * scale) {
            return Err(Error::NonPositiveGram { label, min_eigenvalue: min_eig });
        }
        let chol = Cholesky::new(gram.clone()).ok_or(Error::NonPositiveGram {
            label: label.clone(),
            min_eigenvalue: min_eig,
        })?;
        Ok(Arc::new(Self { label, gram, chol: Some(chol), min_eig, max_eig }))
    }

    pub fn euclidean(dim: usize, label: impl Into<String>) -> Arc<Self> {
        Self::new(dim, DMatrix::identity(dim, dim), label).expect("identity gram is SPD")
    }

    pub fn diagonal(weights: &[f64], label: impl Into<String>) -> Result<Arc<Self>> {
        let n = weights.len();
        Self::new(n, DMatrix::from_diagonal(&DVector::from_column_slice(weights)), label)
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.max_eig
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.gram * y))
    }

    pub fn norm_squared(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x)
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.norm_squared(x).max(0.0).sqrt()
    }

    /// `W⁻¹ rhs` via the cached Cholesky factor.
    pub fn solve_gram(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.chol {
            Some(c) => c.solve(rhs),
            None => DMatrix::zeros(0, rhs.ncols()),
        }
    }

    pub fn solve_gram_vec(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.chol {
            Some(c) => c.solve(rhs),
            None => DVector::zeros(0),
        }
    }

    /// Squared norm of a covariant dual element: `ξᵀ W⁻¹ ξ`.
    pub fn dual_norm_squared(&self, xi: &DVector<f64>) -> f64 {
        xi.dot(&self.solve_gram_vec(xi))
    }

    pub fn dual_inner(&self, xi: &DVector<f64>, eta: &DVector<f64>) -> f64 {
        xi.dot(&self.solve_gram_vec(eta))
    }

    pub fn dual_gram(&self) -> DMatrix<f64> {
        let n = self.dim();
        linalg::sym(&self.solve_gram(&DMatrix::identity(n, n)))
    }

    /// The dual space, carrying the inverse Gram.
    pub fn dual(&self) -> Arc<HilbertSpace> {
        let n = self.dim();
        Self::new(n, self.dual_gram(), format!("{}*", self.label)).expect("inverse of an SPD gram is SPD")
    }

    /// Direct sum with block-diagonal Gram.
    pub fn direct_sum(parts: &[&HilbertSpace], label: impl Into<String>) -> Result<Arc<Self>> {
        let grams: Vec<&DMatrix<f64>> = parts.iter().map(|p| p.gram()).collect();
        let gram = linalg::block_diag(&grams);
        Self::new(gram.nrows(), gram, label)
    }
}

/// Shorthand for [`HilbertSpace::new`].
pub fn make_space(dim: usize, gram: DMatrix<f64>, label: &str) -> Result<Arc<HilbertSpace>> {
    HilbertSpace::new(dim, gram, label)
}

/// A matrix tagged with the spaces it maps between.
#[derive(Debug, Clone)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    domain: Arc<HilbertSpace>,
    codomain: Arc<HilbertSpace>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>, domain: Arc<HilbertSpace>, codomain: Arc<HilbertSpace>) -> Result<Self> {
        if matrix.shape() != (codomain.dim(), domain.dim()) {
            return Err(Error::dims(
                "LinearMap",
                format!("{}x{}", codomain.dim(), domain.dim()),
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        Ok(Self { matrix, domain, codomain })
    }

    pub fn identity(space: Arc<HilbertSpace>) -> Self {
        let n = space.dim();
        Self { matrix: DMatrix::identity(n, n), domain: space.clone(), codomain: space }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn domain(&self) -> &Arc<HilbertSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<HilbertSpace> {
        &self.codomain
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// Hilbert adjoint: `W_dom⁻¹ Aᵀ W_cod`, so that `⟨Ax, y⟩_cod = ⟨x, A*y⟩_dom`.
    pub fn adjoint(&self) -> LinearMap {
        let m = self.domain.solve_gram(&(self.matrix.transpose() * self.codomain.gram()));
        LinearMap { matrix: m, domain: self.codomain.clone(), codomain: self.domain.clone() }
    }

    pub fn compose(&self, inner: &LinearMap) -> Result<LinearMap> {
        if inner.codomain.dim() != self.domain.dim() {
            return Err(Error::dims("compose", self.domain.dim(), inner.codomain.dim()));
        }
        Ok(LinearMap {
            matrix: &self.matrix * &inner.matrix,
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
        })
    }

    fn require_square(&self, context: &'static str) -> Result<()> {
        if self.domain.dim() != self.codomain.dim() {
            return Err(Error::dims(context, self.domain.dim(), self.codomain.dim()));
        }
        Ok(())
    }
}

/// Riesz map of `space` into its (covariant) dual: multiplication by the Gram.
pub fn riesz(space: &Arc<HilbertSpace>) -> LinearMap {
    LinearMap { matrix: space.gram().clone(), domain: space.clone(), codomain: space.dual() }
}

pub fn adjoint(f: &LinearMap) -> LinearMap {
    f.adjoint()
}

/// Operator norm of `P` on `G*` (Gram `W⁻¹`), i.e. `‖W^{-1/2} P W^{1/2}‖₂`.
pub fn contraction_norm(p: &DMatrix<f64>, boundary_space: &HilbertSpace) -> Result<f64> {
    let m = boundary_space.dim();
    if p.shape() != (m, m) {
        return Err(Error::dims("contraction_norm", format!("{m}x{m}"), format!("{:?}", p.shape())));
    }
    let (half, inv_half) = linalg::spd_sqrt_pair(boundary_space.gram());
    Ok(linalg::spectral_norm(&(inv_half * p * half)))
}

/// Boundary parameter acting on dual boundary coordinates.
#[derive(Debug, Clone)]
pub struct ContractionParam {
    matrix: DMatrix<f64>,
    boundary_space: Arc<HilbertSpace>,
    norm: f64,
    is_contraction: bool,
    is_unitary: bool,
}

impl ContractionParam {
    /// Wraps `p` without rejecting non-contractions; the flag records the verdict.
    pub fn new(p: DMatrix<f64>, boundary_space: Arc<HilbertSpace>) -> Result<Self> {
        let norm = contraction_norm(&p, &boundary_space)?;
        let (half, inv_half) = linalg::spd_sqrt_pair(boundary_space.gram());
        let q = inv_half * &p * half;
        let m = q.nrows();
        let is_unitary = (q.transpose() * &q - DMatrix::identity(m, m)).norm() <= CONTRACTION_TOL;
        Ok(Self { matrix: p, boundary_space, norm, is_contraction: norm <= 1.0 + CONTRACTION_TOL, is_unitary })
    }

    /// Scalar multiple of the identity.
    pub fn scalar(value: f64, boundary_space: Arc<HilbertSpace>) -> Result<Self> {
        let m = boundary_space.dim();
        Self::new(DMatrix::identity(m, m) * value, boundary_space)
    }

    /// Random parameter with dual operator norm exactly `target_norm`.
    pub fn random_with_norm<R: Rng + ?Sized>(rng: &mut R, boundary_space: Arc<HilbertSpace>, target_norm: f64) -> Self {
        let m = boundary_space.dim();
        loop {
            let raw = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
            let n = contraction_norm(&raw, &boundary_space).expect("square by construction");
            if n > 1e-8 {
                return Self::new(raw * (target_norm / n), boundary_space).expect("square by construction");
            }
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn boundary_space(&self) -> &Arc<HilbertSpace> {
        &self.boundary_space
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_contraction(&self) -> bool {
        self.is_contraction
    }

    /// Isometric on `G*`, to `CONTRACTION_TOL`.
    pub fn is_unitary(&self) -> bool {
        self.is_unitary
    }
}

/// Whether `−D` is dissipative, i.e. `⟨Dx, x⟩_W ≥ 0` for all `x`, together with
/// the smallest eigenvalue of `sym(W D)`.
pub fn check_dissipative(d: &LinearMap) -> Result<(bool, f64)> {
    d.require_square("check_dissipative")?;
    let wd = d.domain().gram() * d.matrix();
    let (min, _) = linalg::sym_eig_extremes(&wd);
    Ok((min >= -DISSIPATIVE_TOL, min))
}

/// W_Y-orthogonal splitting `Y = ran A ⊕ ker A*`.
#[derive(Debug, Clone)]
pub struct HelmholtzProjectors {
    pub range: DMatrix<f64>,
    pub kernel: DMatrix<f64>,
}

/// Projectors onto `ran A` and `ker A*`. `A` must be injective.
pub fn helmholtz_projectors(a: &LinearMap) -> Result<HelmholtzProjectors> {
    let n = a.domain().dim();
    let r = linalg::rank(a.matrix());
    if r < n {
        return Err(Error::RankDeficient { rank: r, expected: n });
    }
    let wy = a.codomain().gram();
    let at_w = a.matrix().transpose() * wy;
    let normal = linalg::sym(&(&at_w * a.matrix()));
    let chol = Cholesky::new(normal).ok_or(Error::RankDeficient { rank: r, expected: n })?;
    let range = a.matrix() * chol.solve(&at_w);
    let m = a.codomain().dim();
    let kernel = DMatrix::identity(m, m) - &range;
    Ok(HelmholtzProjectors { range, kernel })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn identity_space_is_valid() {
        let x = make_space(2, DMatrix::identity(2, 2), "X").unwrap();
        assert_eq!(x.dim(), 2);
        assert_eq!(x.min_eigenvalue(), 1.0);
    }

    #[test]
    fn diagonal_space_caches_min_eigenvalue() {
        let y = make_space(2, diag(&[2.0, 3.0]), "Y").unwrap();
        assert!((y.min_eigenvalue() - 2.0).abs() < 1e-15);
        assert!((y.max_eigenvalue() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_gram_is_rejected() {
        // eigenvalues of [[1,2],[2,1]] are 3 and -1
        let err = make_space(2, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]), "bad").unwrap_err();
        match err {
            Error::NonPositiveGram { min_eigenvalue, .. } => assert!((min_eigenvalue + 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asymmetric_gram_is_rejected() {
        let err = make_space(2, DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]), "skew").unwrap_err();
        assert_eq!(err.kind(), "NonSymmetricGram");
    }

    #[test]
    fn wrong_shape_is_rejected() {
        assert_eq!(make_space(3, DMatrix::identity(2, 2), "X").unwrap_err().kind(), "DimensionMismatch");
    }

    #[test]
    fn euclidean_adjoint_is_transpose() {
        let x = HilbertSpace::euclidean(2, "X");
        let a = LinearMap::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), x.clone(), x).unwrap();
        assert_eq!(a.adjoint().matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn weighted_adjoint_matches_basis_pairings() {
        let dom = make_space(2, diag(&[2.0, 1.0]), "dom").unwrap();
        let cod = HilbertSpace::euclidean(2, "cod");
        let a = LinearMap::new(DMatrix::identity(2, 2), dom.clone(), cod.clone()).unwrap();
        let adj = a.adjoint();
        // oracle: ⟨A e_i, e_j⟩_cod = ⟨e_i, A* e_j⟩_dom for every basis pair
        for i in 0..2 {
            for j in 0..2 {
                let ei = DVector::from_fn(2, |k, _| f64::from(u8::from(k == i)));
                let ej = DVector::from_fn(2, |k, _| f64::from(u8::from(k == j)));
                let lhs = cod.inner(&a.apply(&ei), &ej);
                let rhs = dom.inner(&ei, &adj.apply(&ej));
                assert!((lhs - rhs).abs() < 1e-15);
            }
        }
        assert!((adj.matrix() - diag(&[0.5, 1.0])).norm() < 1e-15);
        assert!((adj.adjoint().matrix() - a.matrix()).norm() < 1e-15);
    }

    #[test]
    fn riesz_is_gram_and_dual_carries_inverse() {
        let y = make_space(2, diag(&[2.0, 3.0]), "Y").unwrap();
        let r = riesz(&y);
        assert_eq!(r.matrix(), &diag(&[2.0, 3.0]));
        assert!((r.codomain().gram() - diag(&[0.5, 1.0 / 3.0])).norm() < 1e-15);
        let e = HilbertSpace::euclidean(3, "E");
        assert_eq!(riesz(&e).matrix(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn contraction_norm_examples() {
        let id = HilbertSpace::euclidean(2, "G");
        let half = DMatrix::identity(2, 2) * 0.5;
        assert!((contraction_norm(&half, &id).unwrap() - 0.5).abs() < 1e-15);

        // sup over the dual unit sphere of ‖Pv‖: v = (0, 1) gives (1, 0), dual norms 1 and 1/2
        let g = make_space(2, diag(&[4.0, 1.0]), "G").unwrap();
        let nil = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!((contraction_norm(&nil, &g).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn jordan_block_is_not_a_contraction() {
        let id = HilbertSpace::euclidean(2, "G");
        let j = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        // power iteration on JᵀJ, independent of the SVD path
        let jtj = j.transpose() * &j;
        let mut v = DVector::<f64>::from_column_slice(&[1.0, 0.3]);
        for _ in 0..200 {
            v = &jtj * &v;
            v /= v.norm();
        }
        let oracle = (v.dot(&(&jtj * &v))).sqrt();
        let norm = contraction_norm(&j, &id).unwrap();
        assert!((norm - oracle).abs() < 1e-12);
        assert!(norm > 1.0);
        assert!(!ContractionParam::new(j, id).unwrap().is_contraction());
    }

    #[test]
    fn unitary_flag() {
        let id = HilbertSpace::euclidean(2, "G");
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(ContractionParam::new(rot, id.clone()).unwrap().is_unitary());
        assert!(!ContractionParam::scalar(0.5, id).unwrap().is_unitary());
    }

    #[test]
    fn dissipativity_examples() {
        let x = HilbertSpace::euclidean(2, "X");
        let zero = LinearMap::new(DMatrix::zeros(2, 2), x.clone(), x.clone()).unwrap();
        assert_eq!(check_dissipative(&zero).unwrap(), (true, 0.0));
        let damp = LinearMap::new(DMatrix::identity(2, 2) * 0.3, x.clone(), x.clone()).unwrap();
        let (ok, min) = check_dissipative(&damp).unwrap();
        assert!(ok && (min - 0.3).abs() < 1e-15);
        // sym part of [[0,1],[-1,-0.1]] is diag(0, -0.1)
        let mixed = LinearMap::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.1]), x.clone(), x).unwrap();
        let (ok, min) = check_dissipative(&mixed).unwrap();
        assert!(!ok);
        assert!((min + 0.1).abs() < 1e-15);
    }

    #[test]
    fn helmholtz_trivial_cases() {
        let x = HilbertSpace::euclidean(2, "X");
        let p = helmholtz_projectors(&LinearMap::identity(x)).unwrap();
        assert!((p.range - DMatrix::identity(2, 2)).norm() < 1e-15);
        assert!(p.kernel.norm() < 1e-15);

        let line = HilbertSpace::euclidean(1, "L");
        let plane = HilbertSpace::euclidean(2, "R2");
        let a = LinearMap::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), line, plane).unwrap();
        let p = helmholtz_projectors(&a).unwrap();
        assert!((p.range - diag(&[1.0, 0.0])).norm() < 1e-15);
        assert!((p.kernel - diag(&[0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn helmholtz_rejects_non_injective() {
        let x = HilbertSpace::euclidean(2, "X");
        let a = LinearMap::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]), x.clone(), x).unwrap();
        assert_eq!(helmholtz_projectors(&a).unwrap_err().kind(), "RankDeficient");
    }
}
