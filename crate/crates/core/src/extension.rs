//! Restrictions of a maximal operator parameterized by boundary contractions.
//!
//! For `P` on `G*` the constraint `(P − I) W_G Γ0 z − (P + I) Γ1 z = 0` cuts
//! the extended space down to a subspace on which `ι` is invertible; the
//! restricted operator is then a square matrix on the core. It is dissipative
//! exactly when `‖P‖ ≤ 1`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{ContractionParam, HilbertSpace};
use crate::linalg;
use crate::triplet::BoundaryOperator;

/// Largest admissible condition number of `ι N`.
pub const MAX_CORE_CONDITION: f64 = 1e12;
/// Largest symmetric eigenvalue still counted as dissipative.
pub const DISSIPATIVITY_TOL: f64 = 1e-10;

/// A square generator on the core obtained by restricting an extended action.
#[derive(Debug, Clone)]
pub struct GeneratorRealization {
    pub a_main: DMatrix<f64>,
    /// Columns span the restricted domain in ext coordinates.
    pub domain_basis: DMatrix<f64>,
    pub p: Option<ContractionParam>,
    /// Space whose Gram defines dissipativity.
    pub core: Arc<HilbertSpace>,
    /// Condition number of `ι N` on its range.
    pub condition: f64,
    /// `dim ι(domain)`; smaller than the core dimension when the restricted
    /// operator is a relation and `a_main` is its operator part.
    pub core_rank: usize,
}

impl GeneratorRealization {
    /// Largest eigenvalue of `sym(W_Z A_main)`.
    pub fn dissipativity_residual(&self) -> f64 {
        let (_, max) = linalg::sym_eig_extremes(&(self.core.gram() * &self.a_main));
        max
    }

    pub fn is_dissipative(&self) -> bool {
        self.dissipativity_residual() <= DISSIPATIVITY_TOL
    }
}

pub fn dissipativity_residual(g: &GeneratorRealization) -> f64 {
    g.dissipativity_residual()
}

/// `C = (P − I) W_G Γ0 − (P + I) Γ1`.
pub fn constraint_matrix(op: &BoundaryOperator, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = op.m();
    if p.shape() != (m, m) {
        return Err(Error::dims("constraint_matrix", format!("{m}x{m}"), format!("{:?}", p.shape())));
    }
    let id = DMatrix::<f64>::identity(m, m);
    Ok((p - &id) * op.bspace().gram() * op.gamma0() - (p + id) * op.gamma1())
}

/// Restricts `action` (core × ext) to `ker constraint` and expresses it on the
/// core: `(action N)(ι N)⁻¹`.
pub fn restrict(
    core: &Arc<HilbertSpace>,
    iota: &DMatrix<f64>,
    action: &DMatrix<f64>,
    constraint: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let n = linalg::nullspace(constraint);
    let c = core.dim();
    if n.ncols() != c {
        return Err(Error::IllPosedRestriction { kernel_dim: n.ncols(), core_dim: c });
    }
    let iota_n = iota * &n;
    let condition = linalg::condition_number(&iota_n);
    if !(condition <= MAX_CORE_CONDITION) {
        return Err(Error::SingularCoreProjection { condition });
    }
    // A_main (ι N) = L N, solved as (ι N)ᵀ A_mainᵀ = (L N)ᵀ
    let ln = action * &n;
    let a_main = iota_n
        .transpose()
        .lu()
        .solve(&ln.transpose())
        .ok_or(Error::SingularCoreProjection { condition })?
        .transpose();
    Ok((a_main, n, condition))
}

/// Restriction when `ι` is not injective on `ker constraint`.
///
/// The restricted operator is then a linear relation on the core with domain
/// `V = ι(ker C)` and multivalued part `L(ker C ∩ ker ι)`. When the latter is
/// `W_Z`-orthogonal to `V` the operator part on `V` is well defined; it is
/// returned as a core matrix that vanishes on `V^⊥`. Returns the matrix, the
/// domain basis, the condition of `ι N` on its range, and `dim V`.
pub fn restrict_compressed(
    core: &Arc<HilbertSpace>,
    iota: &DMatrix<f64>,
    action: &DMatrix<f64>,
    constraint: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, f64, usize)> {
    let n = linalg::nullspace(constraint);
    let c = core.dim();
    if n.ncols() != c {
        return Err(Error::IllPosedRestriction { kernel_dim: n.ncols(), core_dim: c });
    }
    let iota_n = iota * &n;
    let svd = iota_n.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left vectors requested");
    let v_t = svd.v_t.as_ref().expect("right vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > linalg::RANK_RTOL * smax)
        .collect();
    let r = keep.len();
    if r == 0 {
        return Err(Error::SingularCoreProjection { condition: f64::INFINITY });
    }
    let smin = keep.iter().map(|&i| svd.singular_values[i]).fold(f64::INFINITY, f64::min);
    let condition = smax / smin;
    if condition > MAX_CORE_CONDITION {
        return Err(Error::SingularCoreProjection { condition });
    }
    // ι N = U Σ Vᵀ: coefficients c_i = V_i / σ_i give ι N c_i = U_i
    let range = DMatrix::from_columns(&keep.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>());
    let lifts = DMatrix::from_columns(
        &keep.iter().map(|&i| &n * (v_t.row(i).transpose() / svd.singular_values[i])).collect::<Vec<_>>(),
    );
    let fibre: Vec<_> = (0..svd.singular_values.len()).filter(|i| !keep.contains(i)).map(|i| &n * v_t.row(i).transpose()).collect();

    // W_Z-orthonormal basis Q of V and matching lifts Z with ι Z = Q
    let gram_v = linalg::sym(&(range.transpose() * core.gram() * &range));
    let (_, inv_half) = linalg::spd_sqrt_pair(&gram_v);
    let q = &range * &inv_half;
    let z = &lifts * &inv_half;
    let wq = core.gram() * &q;
    if !fibre.is_empty() {
        let lf = action * DMatrix::from_columns(&fibre);
        let leak = (wq.transpose() * &lf).norm();
        if leak > 1e-10 * (1.0 + (core.gram() * action).norm()) {
            return Err(Error::SingularCoreProjection { condition: f64::INFINITY });
        }
    }
    let reduced = wq.transpose() * action * &z;
    let a_main = &q * reduced * wq.transpose();
    Ok((a_main, n, condition, r))
}

/// Generator of the restriction selected by `p`.
pub fn generator_from_contraction(op: &BoundaryOperator, p: &DMatrix<f64>) -> Result<GeneratorRealization> {
    let c = constraint_matrix(op, p)?;
    let param = ContractionParam::new(p.clone(), op.bspace().clone())?;
    let (a_main, domain_basis, condition) = restrict(op.core(), op.iota(), op.l(), &c)?;
    let core_rank = op.core_dim();
    Ok(GeneratorRealization { a_main, domain_basis, p: Some(param), core: op.core().clone(), condition, core_rank })
}
