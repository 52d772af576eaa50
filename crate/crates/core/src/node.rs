//! Scattering and impedance boundary nodes with mass and damping.
//!
//! A node is a colligation `(G, L_eff, K)` on extended coordinates. Mass enters
//! through the weighting `Wt = diag(I, M⁻¹, I)` on the momentum block, so that
//! the state energy is `½‖ιz‖²` in the weighted core Gram
//! `W_Z(M) = W_Z` with the momentum block replaced by `W_X M⁻¹`.
//!
//! With `a = W_G Γ0 Wt z` and `b = Γ1 Wt z` (both in `G*` coordinates):
//!
//! ```text
//! scattering  u = (a + b)/√2                  y = −P (a − b)/√2
//! impedance   u = ((I − P) a + (I + P) b)/2   y = ((I + P) a + (I − P) b)/2
//! ```

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::extension::{self, GeneratorRealization};
use crate::hilbert::{self, ContractionParam, HilbertSpace, LinearMap};
use crate::linalg;
use crate::triplet::BoundaryOperator;

/// Relative tolerance for `G z = u`.
pub const CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Scattering,
    Impedance,
}

impl Flavor {
    pub fn toggled(self) -> Self {
        match self {
            Flavor::Scattering => Flavor::Impedance,
            Flavor::Impedance => Flavor::Scattering,
        }
    }
}

/// Verdict of the internal well-posedness check.
#[derive(Debug, Clone)]
pub struct WellPosedness {
    pub surjective: bool,
    pub dissipative: bool,
    /// Largest eigenvalue of `sym(W_Z(M) A_main)`, or NaN when `G` is not surjective.
    pub residual: f64,
    pub generator: Option<GeneratorRealization>,
}

impl WellPosedness {
    pub fn holds(&self) -> bool {
        self.surjective && self.dissipative
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryNode {
    op: Arc<BoundaryOperator>,
    flavor: Flavor,
    base_flavor: Flavor,
    cayley: Vec<f64>,
    p: ContractionParam,
    mass: LinearMap,
    damping: LinearMap,
    minv: DMatrix<f64>,
    weight: DMatrix<f64>,
    weighted_core: Arc<HilbertSpace>,
    kinetic_gram: DMatrix<f64>,
    g_map: DMatrix<f64>,
    k_map: DMatrix<f64>,
    l_eff: DMatrix<f64>,
}

impl BoundaryNode {
    pub fn scattering(op: Arc<BoundaryOperator>, p: &DMatrix<f64>, mass: &DMatrix<f64>, damping: &DMatrix<f64>) -> Result<Self> {
        Self::build(op, Flavor::Scattering, p, mass, damping)
    }

    pub fn impedance(op: Arc<BoundaryOperator>, p: &DMatrix<f64>, mass: &DMatrix<f64>, damping: &DMatrix<f64>) -> Result<Self> {
        Self::build(op, Flavor::Impedance, p, mass, damping)
    }

    pub fn new(
        op: Arc<BoundaryOperator>,
        flavor: Flavor,
        p: &DMatrix<f64>,
        mass: &DMatrix<f64>,
        damping: &DMatrix<f64>,
    ) -> Result<Self> {
        Self::build(op, flavor, p, mass, damping)
    }

    fn build(op: Arc<BoundaryOperator>, flavor: Flavor, p: &DMatrix<f64>, mass: &DMatrix<f64>, damping: &DMatrix<f64>) -> Result<Self> {
        let param = ContractionParam::new(p.clone(), op.bspace().clone())?;
        if !param.is_contraction() {
            return Err(Error::NotAContraction { norm: param.norm() });
        }
        let x = op.momentum_space().clone();
        let mass = LinearMap::new(mass.clone(), x.clone(), x.clone())?;
        let damping = LinearMap::new(damping.clone(), x.clone(), x.clone())?;
        let minv = mass_inverse(&mass)?;
        let (ok, min_eig) = hilbert::check_dissipative(&damping)?;
        if !ok {
            return Err(Error::DampingNotDissipative { min_eigenvalue: min_eig });
        }

        let ext = op.ext_dim();
        let mom = op.momentum();
        let mut weight = DMatrix::identity(ext, ext);
        weight.view_mut((mom.start, mom.start), (mom.len(), mom.len())).copy_from(&minv);
        let kinetic_gram = linalg::sym(&(x.gram() * &minv));
        let mut wz = op.core().gram().clone();
        wz.view_mut((mom.start, mom.start), (mom.len(), mom.len())).copy_from(&kinetic_gram);
        let weighted_core = HilbertSpace::new(wz.nrows(), wz, "Z_M")?;

        let mut d_core = DMatrix::zeros(op.core_dim(), op.core_dim());
        d_core.view_mut((mom.start, mom.start), (mom.len(), mom.len())).copy_from(damping.matrix());
        let l_eff = (op.l() - d_core * op.iota()) * &weight;

        let (g_map, k_map) = base_maps(&op, flavor, param.matrix(), &weight);
        let node = Self {
            op,
            flavor,
            base_flavor: flavor,
            cayley: Vec::new(),
            p: param,
            mass,
            damping,
            minv,
            weight,
            weighted_core,
            kinetic_gram,
            g_map,
            k_map,
            l_eff,
        };
        let wp = node.internal_wellposedness()?;
        if !wp.surjective {
            return Err(Error::NotInternallyWellPosed { reason: "input map is not surjective".into() });
        }
        if !wp.dissipative {
            return Err(Error::NotInternallyWellPosed {
                reason: format!("restricted generator not dissipative (residual {:.3e})", wp.residual),
            });
        }
        Ok(node)
    }

    /// External Cayley transform with real `β > 0`; toggles the flavor.
    pub fn external_cayley(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::NonPositiveBeta { beta });
        }
        let s = 1.0 / (2.0 * beta).sqrt();
        let bg = &self.g_map * beta;
        let mut out = self.clone();
        out.g_map = (&bg + &self.k_map) * s;
        out.k_map = (&bg - &self.k_map) * s;
        out.flavor = self.flavor.toggled();
        out.cayley.push(beta);
        Ok(out)
    }

    /// Checks that `G` is onto and that `L_eff` restricted to `ker G` is a
    /// dissipative square generator on the weighted core.
    pub fn internal_wellposedness(&self) -> Result<WellPosedness> {
        let m = self.op.m();
        let rank = if m == 0 { 0 } else { linalg::rank(&self.g_map) };
        if rank < m {
            return Ok(WellPosedness { surjective: false, dissipative: false, residual: f64::NAN, generator: None });
        }
        let (core, iota) = (&self.weighted_core, self.op.iota());
        let (a_main, domain_basis, condition, core_rank) = match extension::restrict(core, iota, &self.l_eff, &self.g_map) {
            Ok((a, n, cond)) => (a, n, cond, core.dim()),
            Err(Error::SingularCoreProjection { .. }) => extension::restrict_compressed(core, iota, &self.l_eff, &self.g_map)?,
            Err(e) => return Err(e),
        };
        let generator = GeneratorRealization {
            a_main,
            domain_basis,
            p: Some(self.p.clone()),
            core: core.clone(),
            condition,
            core_rank,
        };
        let residual = generator.dissipativity_residual();
        Ok(WellPosedness {
            surjective: true,
            dissipative: residual <= extension::DISSIPATIVITY_TOL,
            residual,
            generator: Some(generator),
        })
    }

    /// Pointwise passivity defect; nonpositive for passive nodes.
    ///
    /// Scattering: `2⟨ιz, L_eff z⟩ + ‖y‖² − ‖u‖²`. Impedance:
    /// `2⟨ιz, L_eff z⟩ − 2⟨u, y⟩`. Norms and pairings are taken in `G*`.
    pub fn passivity_residual(&self, z: &DVector<f64>, u: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        self.check_ext(z)?;
        let gz = &self.g_map * z;
        let residual = (&gz - u).norm();
        if residual > CONSISTENCY_TOL * 1f64.max(gz.norm()).max(u.norm()) {
            return Err(Error::InconsistentBoundaryData { residual });
        }
        Ok(2.0 * self.power(z) - 2.0 * self.supply(u, y))
    }

    fn check_ext(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.op.ext_dim() {
            return Err(Error::dims("extended state", self.op.ext_dim(), z.len()));
        }
        Ok(())
    }

    /// Supply rate of the current flavor: `⟨u, y⟩` or `½(‖u‖² − ‖y‖²)`.
    pub fn supply(&self, u: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let g = self.op.bspace();
        match self.flavor {
            Flavor::Impedance => g.dual_inner(u, y),
            Flavor::Scattering => 0.5 * (g.dual_norm_squared(u) - g.dual_norm_squared(y)),
        }
    }

    /// `⟨ιz, L_eff z⟩` in the weighted core Gram.
    pub fn power(&self, z: &DVector<f64>) -> f64 {
        self.weighted_core.inner(&(self.op.iota() * z), &(&self.l_eff * z))
    }

    /// Momentum block of `M⁻¹`-weighted state: the velocity `M⁻¹ z2`.
    pub fn velocity(&self, z: &DVector<f64>) -> DVector<f64> {
        let mom = self.op.momentum();
        &self.minv * z.rows(mom.start, mom.len())
    }

    /// `⟨D v, v⟩_X` with `v = M⁻¹ z2`.
    pub fn dissipation(&self, z: &DVector<f64>) -> f64 {
        let v = self.velocity(z);
        self.op.momentum_space().inner(&(self.damping.matrix() * &v), &v)
    }

    /// `¼(‖v‖² − ‖P v‖²)` in `G*` with `v = (W_G Γ0 − Γ1) Wt z`.
    pub fn p_slack(&self, z: &DVector<f64>) -> f64 {
        let g = self.op.bspace();
        let wz = &self.weight * z;
        let v = g.gram() * (self.op.gamma0() * &wz) - self.op.gamma1() * &wz;
        let pv = self.p.matrix() * &v;
        0.25 * (g.dual_norm_squared(&v) - g.dual_norm_squared(&pv))
    }

    /// `(H, H_p, H_k)` of the core part of `z`.
    pub fn energy(&self, z: &DVector<f64>) -> (f64, f64, f64) {
        let mom = self.op.momentum();
        let mut core = self.op.iota() * z;
        let z2 = core.rows(mom.start, mom.len()).into_owned();
        let h_k = 0.5 * z2.dot(&(&self.kinetic_gram * &z2));
        core.rows_mut(mom.start, mom.len()).fill(0.0);
        let h_p = 0.5 * self.weighted_core.norm_squared(&core);
        (h_p + h_k, h_p, h_k)
    }

    pub fn input(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.g_map * z
    }

    pub fn output(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.k_map * z
    }

    /// The operator `(L Wt, Γ0 Wt, Γ1 Wt)` on the weighted core; it satisfies
    /// the Green identity whenever the unweighted one does.
    pub fn weighted_operator(&self) -> Result<BoundaryOperator> {
        let mom = self.op.momentum();
        let xm = HilbertSpace::new(mom.len(), self.kinetic_gram.clone(), "X_M")?;
        BoundaryOperator::new_unchecked(
            self.weighted_core.clone(),
            self.op.ext_dim(),
            self.op.l() * &self.weight,
            self.op.gamma0() * &self.weight,
            self.op.gamma1() * &self.weight,
            self.op.bspace().clone(),
            mom,
            xm,
        )
    }

    /// Copy with `G` replaced; used to probe the well-posedness check.
    pub fn with_input_map(&self, g_map: DMatrix<f64>) -> Result<Self> {
        if g_map.shape() != self.g_map.shape() {
            return Err(Error::dims("G_map", format!("{:?}", self.g_map.shape()), format!("{:?}", g_map.shape())));
        }
        Ok(Self { g_map, ..self.clone() })
    }

    /// True when `P` is unitary and `D = 0`.
    pub fn is_energy_preserving(&self) -> bool {
        self.p.is_unitary() && self.damping.matrix().iter().all(|&v| v == 0.0)
    }

    pub fn op(&self) -> &Arc<BoundaryOperator> {
        &self.op
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Flavor before any Cayley transform.
    pub fn base_flavor(&self) -> Flavor {
        self.base_flavor
    }

    /// The `β` values applied so far, in order.
    pub fn cayley_history(&self) -> &[f64] {
        &self.cayley
    }

    pub fn p(&self) -> &ContractionParam {
        &self.p
    }

    pub fn mass(&self) -> &LinearMap {
        &self.mass
    }

    pub fn damping(&self) -> &LinearMap {
        &self.damping
    }

    pub fn g_map(&self) -> &DMatrix<f64> {
        &self.g_map
    }

    pub fn k_map(&self) -> &DMatrix<f64> {
        &self.k_map
    }

    pub fn l_eff(&self) -> &DMatrix<f64> {
        &self.l_eff
    }

    /// `diag(I, M⁻¹, I)` on ext coordinates.
    pub fn weight(&self) -> &DMatrix<f64> {
        &self.weight
    }

    pub fn weighted_core(&self) -> &Arc<HilbertSpace> {
        &self.weighted_core
    }

    pub fn m(&self) -> usize {
        self.op.m()
    }

    pub fn ext_dim(&self) -> usize {
        self.op.ext_dim()
    }
}

pub fn scattering_node(op: Arc<BoundaryOperator>, p: &DMatrix<f64>, mass: &DMatrix<f64>, damping: &DMatrix<f64>) -> Result<BoundaryNode> {
    BoundaryNode::scattering(op, p, mass, damping)
}

pub fn impedance_node(op: Arc<BoundaryOperator>, p: &DMatrix<f64>, mass: &DMatrix<f64>, damping: &DMatrix<f64>) -> Result<BoundaryNode> {
    BoundaryNode::impedance(op, p, mass, damping)
}

pub fn external_cayley(node: &BoundaryNode, beta: f64) -> Result<BoundaryNode> {
    node.external_cayley(beta)
}

/// `M⁻¹ = (W_X M)⁻¹ W_X`, after checking that `W_X M` is SPD.
fn mass_inverse(mass: &LinearMap) -> Result<DMatrix<f64>> {
    let x = mass.domain();
    let wm = x.gram() * mass.matrix();
    let scale = wm.norm();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::MassNotSpd { reason: "mass operator is zero or not finite".into() });
    }
    let asym = (&wm - wm.transpose()).norm() / scale;
    if asym > 1e-12 {
        return Err(Error::MassNotSpd { reason: format!("not self-adjoint (relative asymmetry {asym:.3e})") });
    }
    let wm = linalg::sym(&wm);
    let (min, _) = linalg::sym_eig_extremes(&wm);
    if !(min > 1e-12 * scale) {
        return Err(Error::MassNotSpd { reason: format!("smallest eigenvalue {min:.6e}") });
    }
    let chol = Cholesky::new(wm).ok_or(Error::MassNotSpd { reason: "Cholesky factorization failed".into() })?;
    Ok(chol.solve(x.gram()))
}

fn base_maps(op: &BoundaryOperator, flavor: Flavor, p: &DMatrix<f64>, weight: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = op.m();
    let id = DMatrix::<f64>::identity(m, m);
    let a = op.bspace().gram() * op.gamma0() * weight;
    let b = op.gamma1() * weight;
    match flavor {
        Flavor::Scattering => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            ((&a + &b) * r, -(p * (&a - &b)) * r)
        }
        Flavor::Impedance => {
            let g = ((&id - p) * &a + (&id + p) * &b) * 0.5;
            let k = ((&id + p) * &a + (&id - p) * &b) * 0.5;
            (g, k)
        }
    }
}
