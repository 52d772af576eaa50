//! Staggered-grid discretization of the damped 1-D wave / Klein–Gordon system
//!
//! ```text
//! ρ ẍ − (T x')' + a x + b ẋ = 0   on (0, ℓ)
//! ```
//!
//! Positions and momenta live on the `N + 1` nodes, strains on the `N` cells.
//! Nodes carry trapezoid weights, cells carry the width `h`. With
//! `A x = (T^{1/2} Δx / h, a^{1/2} x)` the discrete integration by parts
//!
//! ```text
//! ⟨B_ext ỹ, x⟩_X + ⟨ι_Y ỹ, A x⟩_Y = τ_R x_N − τ_L x_0
//! ```
//!
//! holds exactly, where `τ_L`, `τ_R` are the two traction coordinates.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, LinearMap};
use crate::jet::{build_jet, JetTransform};
use crate::node::{BoundaryNode, Flavor};
use crate::triplet::{adjoint_with_injection, lift_second_order, BoundaryBlock, BoundaryOperator, DualPairTriplet};

/// Per-node `ρ`, `a`, `b` and per-cell `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveCoefficients {
    pub n: usize,
    pub length: f64,
    pub rho: Vec<f64>,
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl WaveCoefficients {
    pub fn from_arrays(n: usize, length: f64, rho: Vec<f64>, t: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let c = Self { n, length, rho, t, a, b };
        c.validate()?;
        Ok(c)
    }

    pub fn constant(n: usize, length: f64, rho: f64, t: f64, a: f64, b: f64) -> Result<Self> {
        Self::from_arrays(n, length, vec![rho; n + 1], vec![t; n], vec![a; n + 1], vec![b; n + 1])
    }

    /// `ρ`, `T`, `a` drawn log-uniformly from `[lo, hi]`; constant damping `b`.
    pub fn random_log_uniform<R: Rng + ?Sized>(n: usize, length: f64, lo: f64, hi: f64, b: f64, rng: &mut R) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidCoefficients { reason: format!("log-uniform range [{lo}, {hi}]") });
        }
        let (llo, lhi) = (lo.ln(), hi.ln());
        let mut draw = |k: usize| -> Vec<f64> {
            (0..k).map(|_| if lhi > llo { rng.random_range(llo..lhi).exp() } else { lo }).collect()
        };
        let rho = draw(n + 1);
        let t = draw(n);
        let a = draw(n + 1);
        Self::from_arrays(n, length, rho, t, a, vec![b; n + 1])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidCoefficients { reason });
        if self.n == 0 {
            return bad("N must be at least 1".into());
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad(format!("length must be positive, got {}", self.length));
        }
        for (name, v, len) in [("rho", &self.rho, self.n + 1), ("T", &self.t, self.n), ("a", &self.a, self.n + 1), ("b", &self.b, self.n + 1)] {
            if v.len() != len {
                return bad(format!("{name} has {} entries, expected {len}", v.len()));
            }
        }
        for (name, v) in [("rho", &self.rho), ("T", &self.t), ("a", &self.a)] {
            if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0 && x.is_finite())) {
                return bad(format!("{name}[{i}] = {x} is not positive"));
            }
        }
        if let Some((i, x)) = self.b.iter().enumerate().find(|(_, x)| !(**x >= 0.0 && x.is_finite())) {
            return bad(format!("b[{i}] = {x} is negative"));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Node positions `ζ_j = j h`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..=self.n).map(|j| j as f64 * h).collect()
    }

    fn constant_value(v: &[f64], name: &str) -> Result<f64> {
        let first = v[0];
        if v.iter().any(|&x| x != first) {
            return Err(Error::NonConstantCoefficients { reason: format!("{name} varies") });
        }
        Ok(first)
    }
}

#[derive(Debug, Clone)]
pub struct WaveSystem {
    coeffs: WaveCoefficients,
    h: f64,
    x: Arc<HilbertSpace>,
    y: Arc<HilbertSpace>,
    dual_pair: DualPairTriplet,
    op: Arc<BoundaryOperator>,
    jet: JetTransform,
}

impl WaveSystem {
    /// Assembles with the identity boundary Gram.
    pub fn assemble(coeffs: WaveCoefficients) -> Result<Self> {
        Self::assemble_with_boundary_gram(coeffs, DMatrix::identity(2, 2))
    }

    pub fn assemble_with_boundary_gram(coeffs: WaveCoefficients, boundary_gram: DMatrix<f64>) -> Result<Self> {
        coeffs.validate()?;
        let n = coeffs.n;
        let h = coeffs.h();
        let mut trap = vec![h; n + 1];
        trap[0] = h / 2.0;
        trap[n] = h / 2.0;
        let x = HilbertSpace::diagonal(&trap, "X")?;
        let mut yw = vec![h; n];
        yw.extend_from_slice(&trap);
        let y = HilbertSpace::diagonal(&yw, "Y")?;

        let p = 2 * n + 1;
        let mut a = DMatrix::zeros(p, n + 1);
        for j in 0..n {
            let s = coeffs.t[j].sqrt() / h;
            a[(j, j)] = -s;
            a[(j, j + 1)] = s;
        }
        for j in 0..=n {
            a[(n + j, j)] = coeffs.a[j].sqrt();
        }
        let a = LinearMap::new(a, x.clone(), y.clone())?;

        let mut e_tau = DMatrix::zeros(n + 1, 2);
        e_tau[(0, 0)] = -1.0;
        e_tau[(n, 1)] = 1.0;
        let b_ext = adjoint_with_injection(&a, &e_tau);
        let mut lambda = DMatrix::zeros(2, n + 1);
        lambda[(0, 0)] = 1.0;
        lambda[(1, n)] = 1.0;
        let mut pi = DMatrix::zeros(2, p + 2);
        pi[(0, p)] = 1.0;
        pi[(1, p + 1)] = -1.0;
        let g = HilbertSpace::new(2, boundary_gram, "G")?;
        let dual_pair = DualPairTriplet::assemble(a, b_ext, BoundaryBlock { lambda, pi, space: g }, None)?;
        let op = Arc::new(lift_second_order(&dual_pair)?);
        let jet = build_jet(&dual_pair)?;
        Ok(Self { coeffs, h, x, y, dual_pair, op, jet })
    }

    /// The same strain map with the two endpoints split into separate
    /// boundary blocks: `Λ1 = x_0`, `Π1 = τ_L`, `Λ2 = x_N`, `Π2 = τ_R`.
    pub fn split_dual_pair(&self) -> Result<DualPairTriplet> {
        let n = self.coeffs.n;
        let cols = self.dual_pair.b_ext().matrix().ncols();
        let block = |node: usize, tau: usize, label: &str| {
            let mut lambda = DMatrix::zeros(1, n + 1);
            lambda[(0, node)] = 1.0;
            let mut pi = DMatrix::zeros(1, cols);
            pi[(0, cols - 2 + tau)] = 1.0;
            BoundaryBlock { lambda, pi, space: HilbertSpace::euclidean(1, label) }
        };
        DualPairTriplet::assemble(
            self.dual_pair.a().clone(),
            self.dual_pair.b_ext().matrix().clone(),
            block(0, 0, "G1"),
            Some(block(n, 1, "G2")),
        )
    }

    pub fn coeffs(&self) -> &WaveCoefficients {
        &self.coeffs
    }

    pub fn n(&self) -> usize {
        self.coeffs.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x(&self) -> &Arc<HilbertSpace> {
        &self.x
    }

    pub fn y(&self) -> &Arc<HilbertSpace> {
        &self.y
    }

    pub fn a_map(&self) -> &LinearMap {
        self.dual_pair.a()
    }

    pub fn dual_pair(&self) -> &DualPairTriplet {
        &self.dual_pair
    }

    pub fn op(&self) -> &Arc<BoundaryOperator> {
        &self.op
    }

    pub fn jet(&self) -> &JetTransform {
        &self.jet
    }

    /// `diag(ρ)`.
    pub fn mass(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.coeffs.rho))
    }

    /// `diag(b)`.
    pub fn damping(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.coeffs.b))
    }

    /// Node on the position-momentum operator with this system's mass and damping.
    pub fn node(&self, flavor: Flavor, p: &DMatrix<f64>) -> Result<BoundaryNode> {
        BoundaryNode::new(self.op.clone(), flavor, p, &self.mass(), &self.damping())
    }

    /// Node on the strain-momentum operator.
    pub fn strain_node(&self, flavor: Flavor, p: &DMatrix<f64>) -> Result<BoundaryNode> {
        BoundaryNode::new(self.jet.target().clone(), flavor, p, &self.mass(), &self.damping())
    }

    /// Discrete `L²` norm (trapezoid rule) of a nodal field.
    pub fn l2_norm(&self, v: &DVector<f64>) -> f64 {
        self.x.norm(v)
    }

    /// Standing-wave oracle; needs constant `ρ`, `T`, `a` and `b = 0`.
    pub fn standing_wave(&self, k: usize) -> Result<StandingWave> {
        let c = &self.coeffs;
        let rho = WaveCoefficients::constant_value(&c.rho, "rho")?;
        let t = WaveCoefficients::constant_value(&c.t, "T")?;
        let a = WaveCoefficients::constant_value(&c.a, "a")?;
        if c.b.iter().any(|&b| b != 0.0) {
            return Err(Error::NonConstantCoefficients { reason: "damping must vanish".into() });
        }
        if k == 0 {
            return Err(Error::NonConstantCoefficients { reason: "mode number must be positive".into() });
        }
        let kappa = k as f64 * PI / c.length;
        let omega = ((t * kappa * kappa + a) / rho).sqrt();
        let theta = kappa * self.h;
        let omega_h = ((2.0 * t * (1.0 - theta.cos()) / (self.h * self.h) + a) / rho).sqrt();
        Ok(StandingWave { kappa, omega, omega_h, rho, nodes: c.nodes() })
    }

    /// Core vector `(z1, z2)` for the requested initial condition.
    pub fn initial_state(&self, kind: &InitialKind) -> Result<DVector<f64>> {
        let n1 = self.coeffs.n + 1;
        let mut z = DVector::zeros(2 * n1);
        match *kind {
            InitialKind::Zero => {}
            InitialKind::StandingWave { k } => z = self.standing_wave(k)?.state(0.0),
            InitialKind::Gauss { center, width } => {
                for (j, zeta) in self.coeffs.nodes().into_iter().enumerate() {
                    z[j] = (-((zeta - center) / width).powi(2)).exp();
                }
            }
        }
        Ok(z)
    }
}

pub fn assemble(coeffs: WaveCoefficients) -> Result<WaveSystem> {
    WaveSystem::assemble(coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialKind {
    Zero,
    StandingWave { k: usize },
    Gauss { center: f64, width: f64 },
}

/// `x(t, ζ) = cos(κζ) cos(ωt)` with `κ = kπ/ℓ`, sampled at the nodes.
#[derive(Debug, Clone)]
pub struct StandingWave {
    pub kappa: f64,
    /// Frequency of the continuous problem.
    pub omega: f64,
    /// Frequency of the semi-discrete problem; the nodal cosine is an exact
    /// eigenvector of the discrete operator.
    pub omega_h: f64,
    rho: f64,
    nodes: Vec<f64>,
}

impl StandingWave {
    fn sample(&self, omega: f64, t: f64) -> DVector<f64> {
        let n1 = self.nodes.len();
        let mut z = DVector::zeros(2 * n1);
        for (j, zeta) in self.nodes.iter().enumerate() {
            let shape = (self.kappa * zeta).cos();
            z[j] = shape * (omega * t).cos();
            z[n1 + j] = -self.rho * omega * shape * (omega * t).sin();
        }
        z
    }

    /// Nodal `(x, ρ ẋ)` of the continuous solution.
    pub fn state(&self, t: f64) -> DVector<f64> {
        self.sample(self.omega, t)
    }

    /// Exact solution of the semi-discrete system from the same initial data.
    pub fn semi_discrete_state(&self, t: f64) -> DVector<f64> {
        self.sample(self.omega_h, t)
    }
}
