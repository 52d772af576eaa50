//! Equivalence between the position-momentum and strain-momentum forms.
//!
//! The state map `(z1, z2) ↦ (A z1, z2)` carries the second-order operator to
//! `(w1, w2, τ) ↦ (A w2, B_ext(w1, τ))`, which is defined on all of `Y`. Its
//! traces `Ξ0`, `Ξ1` apply the dual-pair traces to `(w1, τ)` directly, so the
//! Green identity holds on the whole extended space, not only on `ran A`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::hilbert::{helmholtz_projectors, HilbertSpace, LinearMap};
use crate::linalg;
use crate::node::BoundaryNode;
use crate::triplet::{lift_second_order, BoundaryOperator, DualPairTriplet};

#[derive(Debug, Clone)]
pub struct JetTransform {
    a_iso: LinearMap,
    p_ran: DMatrix<f64>,
    p_ker: DMatrix<f64>,
    source: Arc<BoundaryOperator>,
    target: Arc<BoundaryOperator>,
    b_y: DMatrix<f64>,
    stiffness: Cholesky<f64, Dyn>,
    n_tau: usize,
}

/// Builds both operators from one dual pair.
pub fn build_jet(dp: &DualPairTriplet) -> Result<JetTransform> {
    let source = Arc::new(lift_second_order(dp)?);
    let x = dp.x().clone();
    let y = dp.y().clone();
    let (n, p, k) = (x.dim(), y.dim(), dp.n_tau());
    let proj = helmholtz_projectors(dp.a())?;
    let a = dp.a().matrix();
    let s = linalg::sym(&(a.transpose() * y.gram() * a));
    let xh = HilbertSpace::new(n, s.clone(), "X_h")?;
    let stiffness = Cholesky::new(s).ok_or(Error::RankDeficient { rank: linalg::rank(a), expected: n })?;
    let a_iso = LinearMap::new(a.clone(), xh, y.clone())?;

    let ext = p + n + k;
    let core = HilbertSpace::direct_sum(&[&y, &x], "W")?;
    let mut l = DMatrix::zeros(p + n, ext);
    l.view_mut((0, p), (p, n)).copy_from(a);
    l.view_mut((p, 0), (n, p)).copy_from(&dp.b_y());
    l.view_mut((p, p + n), (n, k)).copy_from(&dp.b_tau());

    // dual-pair Π acting on the (w1, τ) columns
    let on_w1_tau = |pi: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(pi.nrows(), ext);
        out.view_mut((0, 0), (pi.nrows(), p)).copy_from(&pi.columns(0, p));
        out.view_mut((0, p + n), (pi.nrows(), k)).copy_from(&pi.columns(p, k));
        out
    };
    let on_w2 = |lambda: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(lambda.nrows(), ext);
        out.view_mut((0, p), lambda.shape()).copy_from(lambda);
        out
    };
    let (b1, b2) = (dp.first(), dp.second());
    let xi0 = linalg::vstack(&[&on_w2(&b1.lambda), &on_w1_tau(&b2.pi)]);
    let xi1 = linalg::vstack(&[&-on_w1_tau(&b1.pi), &on_w2(&b2.lambda)]);
    let target = BoundaryOperator::new(core, ext, l, xi0, xi1, dp.boundary_space()?, p..p + n, x)?;

    Ok(JetTransform {
        a_iso,
        p_ran: proj.range,
        p_ker: proj.kernel,
        source,
        target: Arc::new(target),
        b_y: dp.b_y(),
        stiffness,
        n_tau: k,
    })
}

impl JetTransform {
    pub fn a_iso(&self) -> &LinearMap {
        &self.a_iso
    }

    pub fn p_ran(&self) -> &DMatrix<f64> {
        &self.p_ran
    }

    pub fn p_ker(&self) -> &DMatrix<f64> {
        &self.p_ker
    }

    /// Position-momentum operator.
    pub fn source(&self) -> &Arc<BoundaryOperator> {
        &self.source
    }

    /// Strain-momentum operator.
    pub fn target(&self) -> &Arc<BoundaryOperator> {
        &self.target
    }

    fn dims(&self) -> (usize, usize) {
        (self.a_iso.domain().dim(), self.a_iso.codomain().dim())
    }

    /// `(z1, z2) ↦ (A z1, z2)` on core vectors.
    pub fn push_state(&self, z: &DVector<f64>) -> DVector<f64> {
        let (n, p) = self.dims();
        let mut w = DVector::zeros(p + n);
        w.rows_mut(0, p).copy_from(&(self.a_iso.matrix() * z.rows(0, n)));
        w.rows_mut(p, n).copy_from(&z.rows(n, n));
        w
    }

    /// `(z1, z2, τ) ↦ (A z1, z2, τ)` on extended vectors.
    pub fn push_ext(&self, z: &DVector<f64>) -> DVector<f64> {
        let (n, p) = self.dims();
        let k = self.n_tau;
        let mut w = DVector::zeros(p + n + k);
        w.rows_mut(0, p + n).copy_from(&self.push_state(&z.rows(0, 2 * n).into_owned()));
        w.rows_mut(p + n, k).copy_from(&z.rows(2 * n, k));
        w
    }

    /// Matrix of [`Self::push_ext`].
    pub fn push_ext_matrix(&self) -> DMatrix<f64> {
        let (n, _) = self.dims();
        let k = self.n_tau;
        let id_n = DMatrix::identity(n, n);
        let id_k = DMatrix::identity(k, k);
        linalg::block_diag(&[self.a_iso.matrix(), &id_n, &id_k])
    }

    /// Inverse of [`Self::push_state`] on `ran A ⊕ X`, via `A⁺ = S⁻¹AᵀW_Y`.
    pub fn pull_state(&self, w: &DVector<f64>) -> DVector<f64> {
        let (n, p) = self.dims();
        let rhs = self.a_iso.matrix().transpose() * (self.a_iso.codomain().gram() * w.rows(0, p));
        let mut z = DVector::zeros(2 * n);
        z.rows_mut(0, n).copy_from(&self.stiffness.solve(&rhs));
        z.rows_mut(n, n).copy_from(&w.rows(p, n));
        z
    }

    /// `‖P_ker w1‖_Y`: distance of a strain field from `ran A`.
    pub fn ran_a_defect(&self, w1: &DVector<f64>) -> f64 {
        self.a_iso.codomain().norm(&(&self.p_ker * w1))
    }

    /// `‖B_ext P_ker‖_F` on the `Y` coordinates; zero when `ker A* ⊂ ker B`.
    pub fn kernel_inclusion_residual(&self) -> f64 {
        (&self.b_y * &self.p_ker).norm()
    }

    /// `|‖A z1‖_Y − ‖z1‖_{X_h}|`.
    pub fn isometry_defect(&self, z1: &DVector<f64>) -> f64 {
        (self.a_iso.codomain().norm(&self.a_iso.apply(z1)) - self.a_iso.domain().norm(z1)).abs()
    }

    /// `max(‖Ξ0 E − Γ0‖, ‖Ξ1 E − Γ1‖, ‖L_B E − E_core L_A‖)` with `E` the
    /// extended push matrix, all Frobenius.
    pub fn transport_residual(&self) -> f64 {
        let e = self.push_ext_matrix();
        let (n, p) = self.dims();
        let e_core = e.view((0, 0), (p + n, 2 * n)).into_owned();
        let r0 = (self.target.gamma0() * &e - self.source.gamma0()).norm();
        let r1 = (self.target.gamma1() * &e - self.source.gamma1()).norm();
        let rl = (self.target.l() * &e - e_core * self.source.l()).norm();
        r0.max(r1).max(rl)
    }

    /// Rebuilds `node` on the strain-momentum operator with the same flavor,
    /// `P`, mass and damping, then replays its Cayley transforms.
    pub fn transform_node(&self, node: &BoundaryNode) -> Result<BoundaryNode> {
        if node.ext_dim() != self.source.ext_dim() || node.m() != self.source.m() {
            return Err(Error::dims("transform_node", self.source.ext_dim(), node.ext_dim()));
        }
        let mut out = BoundaryNode::new(
            self.target.clone(),
            node.base_flavor(),
            node.p().matrix(),
            node.mass().matrix(),
            node.damping().matrix(),
        )?;
        for &beta in node.cayley_history() {
            out = out.external_cayley(beta)?;
        }
        Ok(out)
    }
}

pub fn push_state(jt: &JetTransform, z: &DVector<f64>) -> DVector<f64> {
    jt.push_state(z)
}

pub fn transform_node(jt: &JetTransform, node: &BoundaryNode) -> Result<BoundaryNode> {
    jt.transform_node(node)
}

pub fn ran_a_defect(jt: &JetTransform, w1: &DVector<f64>) -> f64 {
    jt.ran_a_defect(w1)
}
