//! Dual pairs with boundary maps and second-order boundary triplets.
//!
//! A [`DualPairTriplet`] packages `A: X → Y`, an extension `B_ext` of `−A*`
//! acting on `Ỹ = Y ⊕ Rᵏ` (the extra coordinates are boundary tractions), and
//! trace maps satisfying
//!
//! ```text
//! −⟨B_ext ỹ, x⟩_X − ⟨ι_Y ỹ, A x⟩_Y = Π1 ỹ · Λ1 x − Π2 ỹ · Λ2 x.
//! ```
//!
//! [`lift_second_order`] turns it into a [`BoundaryOperator`] for the
//! position-momentum operator `(z1, z2) ↦ (z2, B A z1)`.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, LinearMap};
use crate::linalg;

/// Acceptance threshold for normalized Green residuals.
pub const GREEN_TOL: f64 = 1e-12;

/// One boundary block: traces `Λ: X → G`, `Π: Ỹ → G*` and the space `G`.
#[derive(Debug, Clone)]
pub struct BoundaryBlock {
    pub lambda: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    pub space: Arc<HilbertSpace>,
}

impl BoundaryBlock {
    /// Block with `G = {0}`.
    pub fn empty(x_dim: usize, ytilde_dim: usize) -> Self {
        Self {
            lambda: DMatrix::zeros(0, x_dim),
            pi: DMatrix::zeros(0, ytilde_dim),
            space: HilbertSpace::euclidean(0, "G0"),
        }
    }

    fn dim(&self) -> usize {
        self.space.dim()
    }
}

#[derive(Debug, Clone)]
pub struct DualPairTriplet {
    a: LinearMap,
    b_ext: LinearMap,
    iota_y: DMatrix<f64>,
    first: BoundaryBlock,
    second: BoundaryBlock,
    residual: f64,
}

impl DualPairTriplet {
    /// Validates dimensions, the Green identity and surjectivity of the traces.
    /// `b_ext` maps `Y ⊕ Rᵏ → X`; `k` is read off its column count.
    pub fn assemble(
        a: LinearMap,
        b_ext: DMatrix<f64>,
        first: BoundaryBlock,
        second: Option<BoundaryBlock>,
    ) -> Result<Self> {
        let trip = Self::assemble_unchecked(a, b_ext, first, second)?;
        let r = trip.green_residual_matrix();
        if trip.residual > GREEN_TOL {
            let (row, col, worst) = linalg::worst_entry(&r);
            return Err(Error::GreenIdentityViolated { residual: trip.residual, worst, row, col });
        }
        let m = trip.first.dim() + trip.second.dim();
        let lambdas = linalg::vstack(&[&trip.first.lambda, &trip.second.lambda]);
        let pis = linalg::vstack(&[&trip.first.pi, &trip.second.pi]);
        for traces in [&lambdas, &pis] {
            let r = if m == 0 { 0 } else { linalg::rank(traces) };
            if r != m {
                return Err(Error::TraceNotSurjective { rank: r, expected: m });
            }
        }
        Ok(trip)
    }

    /// Dimension checks only; the stored residual is computed but not gated.
    pub fn assemble_unchecked(
        a: LinearMap,
        b_ext: DMatrix<f64>,
        first: BoundaryBlock,
        second: Option<BoundaryBlock>,
    ) -> Result<Self> {
        let x = a.domain().clone();
        let y = a.codomain().clone();
        let (n, p) = (x.dim(), y.dim());
        if b_ext.nrows() != n || b_ext.ncols() < p {
            return Err(Error::dims("B_ext", format!("{n}x(>={p})"), format!("{}x{}", b_ext.nrows(), b_ext.ncols())));
        }
        let yt_dim = b_ext.ncols();
        let second = second.unwrap_or_else(|| BoundaryBlock::empty(n, yt_dim));
        for blk in [&first, &second] {
            let m = blk.dim();
            if blk.lambda.shape() != (m, n) {
                return Err(Error::dims("Lambda", format!("{m}x{n}"), format!("{:?}", blk.lambda.shape())));
            }
            if blk.pi.shape() != (m, yt_dim) {
                return Err(Error::dims("Pi", format!("{m}x{yt_dim}"), format!("{:?}", blk.pi.shape())));
            }
        }
        let tau = HilbertSpace::euclidean(yt_dim - p, "tau");
        let ytilde = HilbertSpace::direct_sum(&[&y, &tau], "Y~")?;
        let mut iota_y = DMatrix::zeros(p, yt_dim);
        iota_y.view_mut((0, 0), (p, p)).fill_with_identity();
        let b_ext = LinearMap::new(b_ext, ytilde, x)?;
        let mut trip = Self { a, b_ext, iota_y, first, second, residual: 0.0 };
        trip.residual = trip.green_residual_matrix().norm() / (1.0 + (trip.x().gram() * trip.b_ext.matrix()).norm());
        Ok(trip)
    }

    /// `R = −B_extᵀW_X − ι_YᵀW_Y A − Π1ᵀΛ1 + Π2ᵀΛ2`; rows index `Ỹ`, columns `X`.
    pub fn green_residual_matrix(&self) -> DMatrix<f64> {
        let wx = self.x().gram();
        let wy = self.y().gram();
        -(self.b_ext.matrix().transpose() * wx)
            - self.iota_y.transpose() * wy * self.a.matrix()
            - self.first.pi.transpose() * &self.first.lambda
            + self.second.pi.transpose() * &self.second.lambda
    }

    /// Frobenius norm of the Green defect, normalized by `1 + ‖W_X B_ext‖_F`.
    pub fn green_residual(&self) -> f64 {
        self.residual
    }

    pub fn a(&self) -> &LinearMap {
        &self.a
    }

    pub fn b_ext(&self) -> &LinearMap {
        &self.b_ext
    }

    pub fn iota_y(&self) -> &DMatrix<f64> {
        &self.iota_y
    }

    pub fn x(&self) -> &Arc<HilbertSpace> {
        self.a.domain()
    }

    pub fn y(&self) -> &Arc<HilbertSpace> {
        self.a.codomain()
    }

    pub fn first(&self) -> &BoundaryBlock {
        &self.first
    }

    pub fn second(&self) -> &BoundaryBlock {
        &self.second
    }

    /// Number of traction coordinates appended to `Y`.
    pub fn n_tau(&self) -> usize {
        self.b_ext.matrix().ncols() - self.y().dim()
    }

    /// `B_ext` restricted to the `Y` coordinates.
    pub fn b_y(&self) -> DMatrix<f64> {
        self.b_ext.matrix().columns(0, self.y().dim()).into_owned()
    }

    /// `B_ext` restricted to the traction coordinates.
    pub fn b_tau(&self) -> DMatrix<f64> {
        self.b_ext.matrix().columns(self.y().dim(), self.n_tau()).into_owned()
    }

    /// `G = G1 ⊕ G2`.
    pub fn boundary_space(&self) -> Result<Arc<HilbertSpace>> {
        HilbertSpace::direct_sum(&[&self.first.space, &self.second.space], "G")
    }
}

/// Shorthand for [`DualPairTriplet::assemble`].
pub fn assemble_dual_pair(
    a: LinearMap,
    b_ext: DMatrix<f64>,
    first: BoundaryBlock,
    second: Option<BoundaryBlock>,
) -> Result<DualPairTriplet> {
    DualPairTriplet::assemble(a, b_ext, first, second)
}

/// `W_X⁻¹ [−AᵀW_Y | E_τ]`, the extension of `−A*` that makes the Green
/// identity hold once the traces satisfy `Π1ᵀΛ1 − Π2ᵀΛ2 = [0; −E_τᵀ]`.
pub fn adjoint_with_injection(a: &LinearMap, e_tau: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.domain().dim();
    let p = a.codomain().dim();
    let mut rhs = DMatrix::zeros(n, p + e_tau.ncols());
    rhs.view_mut((0, 0), (n, p)).copy_from(&-(a.matrix().transpose() * a.codomain().gram()));
    rhs.view_mut((0, p), e_tau.shape()).copy_from(e_tau);
    a.domain().solve_gram(&rhs)
}

/// A maximal operator with traces on an extended coordinate space
/// `ext = core ⊕ Rᵏ`, satisfying
/// `ιᵀW_Z L + LᵀW_Z ι = Γ1ᵀΓ0 + Γ0ᵀΓ1`.
#[derive(Debug, Clone)]
pub struct BoundaryOperator {
    core: Arc<HilbertSpace>,
    ext_dim: usize,
    iota: DMatrix<f64>,
    l: DMatrix<f64>,
    gamma0: DMatrix<f64>,
    gamma1: DMatrix<f64>,
    bspace: Arc<HilbertSpace>,
    momentum: Range<usize>,
    momentum_space: Arc<HilbertSpace>,
}

impl BoundaryOperator {
    /// Builds and validates. `momentum` is the core block on which mass and
    /// damping act; its Gram block must equal `momentum_space`'s Gram and be
    /// decoupled from the rest of the core.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        core: Arc<HilbertSpace>,
        ext_dim: usize,
        l: DMatrix<f64>,
        gamma0: DMatrix<f64>,
        gamma1: DMatrix<f64>,
        bspace: Arc<HilbertSpace>,
        momentum: Range<usize>,
        momentum_space: Arc<HilbertSpace>,
    ) -> Result<Self> {
        let op = Self::new_unchecked(core, ext_dim, l, gamma0, gamma1, bspace, momentum, momentum_space)?;
        op.validate()?;
        Ok(op)
    }

    /// Dimension and momentum-block checks only.
    #[allow(clippy::too_many_arguments)]
    pub fn new_unchecked(
        core: Arc<HilbertSpace>,
        ext_dim: usize,
        l: DMatrix<f64>,
        gamma0: DMatrix<f64>,
        gamma1: DMatrix<f64>,
        bspace: Arc<HilbertSpace>,
        momentum: Range<usize>,
        momentum_space: Arc<HilbertSpace>,
    ) -> Result<Self> {
        let c = core.dim();
        let m = bspace.dim();
        if ext_dim < c {
            return Err(Error::dims("ext_dim", format!(">={c}"), ext_dim));
        }
        if l.shape() != (c, ext_dim) {
            return Err(Error::dims("L", format!("{c}x{ext_dim}"), format!("{:?}", l.shape())));
        }
        for g in [&gamma0, &gamma1] {
            if g.shape() != (m, ext_dim) {
                return Err(Error::dims("Gamma", format!("{m}x{ext_dim}"), format!("{:?}", g.shape())));
            }
        }
        if momentum.end > c || momentum.len() != momentum_space.dim() {
            return Err(Error::dims("momentum block", momentum_space.dim(), format!("{momentum:?} in core of {c}")));
        }
        let w = core.gram();
        let k = momentum.len();
        let block = w.view((momentum.start, momentum.start), (k, k));
        let mut rows = w.rows(momentum.start, k).into_owned();
        rows.columns_mut(momentum.start, k).fill(0.0);
        let scale = 1.0 + w.norm();
        if (block - momentum_space.gram()).norm() > 1e-12 * scale || rows.norm() > 1e-12 * scale {
            return Err(Error::dims("momentum gram", "decoupled block equal to W_X", "mismatch"));
        }
        let mut iota = DMatrix::zeros(c, ext_dim);
        iota.view_mut((0, 0), (c, c)).fill_with_identity();
        Ok(Self { core, ext_dim, iota, l, gamma0, gamma1, bspace, momentum, momentum_space })
    }

    fn validate(&self) -> Result<()> {
        let residual = self.green_residual();
        if residual > GREEN_TOL {
            let (row, col, worst) = linalg::worst_entry(&self.green_residual_matrix());
            return Err(Error::GreenIdentityViolated { residual, worst, row, col });
        }
        let rank = self.trace_rank();
        if rank != 2 * self.m() {
            return Err(Error::TraceNotSurjective { rank, expected: 2 * self.m() });
        }
        Ok(())
    }

    pub fn core(&self) -> &Arc<HilbertSpace> {
        &self.core
    }

    pub fn ext_dim(&self) -> usize {
        self.ext_dim
    }

    pub fn core_dim(&self) -> usize {
        self.core.dim()
    }

    /// Number of boundary (traction) coordinates in `ext`.
    pub fn n_boundary_coords(&self) -> usize {
        self.ext_dim - self.core.dim()
    }

    pub fn iota(&self) -> &DMatrix<f64> {
        &self.iota
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn gamma0(&self) -> &DMatrix<f64> {
        &self.gamma0
    }

    pub fn gamma1(&self) -> &DMatrix<f64> {
        &self.gamma1
    }

    pub fn bspace(&self) -> &Arc<HilbertSpace> {
        &self.bspace
    }

    /// Boundary dimension `m = dim G`.
    pub fn m(&self) -> usize {
        self.bspace.dim()
    }

    pub fn momentum(&self) -> Range<usize> {
        self.momentum.clone()
    }

    pub fn momentum_space(&self) -> &Arc<HilbertSpace> {
        &self.momentum_space
    }

    /// Copy with `Γ1` scaled; not revalidated.
    pub fn with_scaled_gamma1(&self, factor: f64) -> Self {
        Self { gamma1: &self.gamma1 * factor, ..self.clone() }
    }

    /// Copy with a different action; not revalidated.
    pub fn with_action(&self, l: DMatrix<f64>) -> Result<Self> {
        if l.shape() != self.l.shape() {
            return Err(Error::dims("L", format!("{:?}", self.l.shape()), format!("{:?}", l.shape())));
        }
        Ok(Self { l, ..self.clone() })
    }

    /// `[Γ0; Γ1]`.
    pub fn traces(&self) -> DMatrix<f64> {
        linalg::vstack(&[&self.gamma0, &self.gamma1])
    }

    pub fn trace_rank(&self) -> usize {
        if self.m() == 0 {
            0
        } else {
            linalg::rank(&self.traces())
        }
    }

    pub fn green_residual_matrix(&self) -> DMatrix<f64> {
        let wl = self.core.gram() * &self.l;
        let lhs = self.iota.transpose() * &wl;
        let cross = self.gamma1.transpose() * &self.gamma0;
        &lhs + lhs.transpose() - &cross - cross.transpose()
    }

    /// `‖ιᵀW_Z L + LᵀW_Z ι − Γ1ᵀΓ0 − Γ0ᵀΓ1‖_F / (1 + ‖W_Z L‖_F)`.
    pub fn green_residual(&self) -> f64 {
        let scale = 1.0 + (self.core.gram() * &self.l).norm();
        self.green_residual_matrix().norm() / scale
    }

    /// Orthonormal basis of `ker Γ0 ∩ ker Γ1`.
    pub fn minimal_domain(&self) -> DMatrix<f64> {
        linalg::nullspace(&self.traces())
    }

    /// `‖Vᵀ sym(ιᵀW_Z L) V‖_F` over the minimal domain `V`.
    pub fn skew_on_minimal(&self) -> Result<f64> {
        let v = self.minimal_domain();
        let iv = &self.iota * &v;
        if linalg::rank(&iv) < v.ncols() {
            return Err(Error::DegenerateCoreProjection);
        }
        let form = linalg::sym(&(self.iota.transpose() * self.core.gram() * &self.l));
        Ok((v.transpose() * form * &v).norm())
    }

    /// Smallest and largest eigenvalue of `Vᵀ sym(ιᵀW_Z L) V`.
    pub fn minimal_form_extremes(&self) -> (f64, f64) {
        let v = self.minimal_domain();
        let form = linalg::sym(&(self.iota.transpose() * self.core.gram() * &self.l));
        linalg::sym_eig_extremes(&(v.transpose() * form * &v))
    }

    /// `⟨ι z, L z⟩_{W_Z}`.
    pub fn power(&self, z: &DVector<f64>) -> f64 {
        self.core.inner(&(&self.iota * z), &(&self.l * z))
    }
}

/// Free functions mirroring the methods, for call sites that prefer them.
pub fn green_residual(op: &BoundaryOperator) -> f64 {
    op.green_residual()
}

pub fn minimal_domain(op: &BoundaryOperator) -> DMatrix<f64> {
    op.minimal_domain()
}

pub fn skew_on_minimal(op: &BoundaryOperator) -> Result<f64> {
    op.skew_on_minimal()
}

/// The position-momentum boundary triplet built from a dual pair.
///
/// Core `Z = X_h ⊕ X` with `W_Z = diag(AᵀW_Y A, W_X)`, ext coordinates
/// `(z1, z2, τ)`, `L(z1, z2, τ) = (z2, B_ext(A z1, τ))`, and with
/// `Ã = diag(A, I)` acting on `(z1, τ)`:
/// `Γ0 = [0 Λ1 0; Π2Ã 0]`, `Γ1 = [−Π1Ã 0; 0 Λ2 0]`.
pub fn lift_second_order(dp: &DualPairTriplet) -> Result<BoundaryOperator> {
    let op = lift_second_order_unchecked(dp)?;
    op.validate()?;
    Ok(op)
}

/// [`lift_second_order`] without the Green and surjectivity checks; used to
/// measure how a defect of the dual pair propagates to the lift.
pub fn lift_second_order_unchecked(dp: &DualPairTriplet) -> Result<BoundaryOperator> {
    let x = dp.x().clone();
    let a = dp.a().matrix();
    let n = x.dim();
    let k = dp.n_tau();
    let ext = 2 * n + k;
    let s = linalg::sym(&(a.transpose() * dp.y().gram() * a));
    let xh = HilbertSpace::new(n, s, "X_h")?;
    let core = HilbertSpace::direct_sum(&[&xh, &x], "Z")?;

    let mut l = DMatrix::zeros(2 * n, ext);
    l.view_mut((0, n), (n, n)).fill_with_identity();
    l.view_mut((n, 0), (n, n)).copy_from(&(dp.b_y() * a));
    l.view_mut((n, 2 * n), (n, k)).copy_from(&dp.b_tau());

    // Π Ã evaluated on the (z1, τ) columns of ext
    let pi_tilde = |pi: &DMatrix<f64>| -> DMatrix<f64> {
        let p = dp.y().dim();
        let mut out = DMatrix::zeros(pi.nrows(), ext);
        out.view_mut((0, 0), (pi.nrows(), n)).copy_from(&(pi.columns(0, p) * a));
        out.view_mut((0, 2 * n), (pi.nrows(), k)).copy_from(&pi.columns(p, k));
        out
    };
    let lambda_z2 = |lambda: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(lambda.nrows(), ext);
        out.view_mut((0, n), lambda.shape()).copy_from(lambda);
        out
    };
    let (b1, b2) = (dp.first(), dp.second());
    let gamma0 = linalg::vstack(&[&lambda_z2(&b1.lambda), &pi_tilde(&b2.pi)]);
    let gamma1 = linalg::vstack(&[&-pi_tilde(&b1.pi), &lambda_z2(&b2.lambda)]);
    BoundaryOperator::new_unchecked(core, ext, l, gamma0, gamma1, dp.boundary_space()?, n..2 * n, x)
}
