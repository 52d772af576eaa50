//! Implicit-midpoint integration of boundary nodes with energy ledgers.
//!
//! Each step solves for the extended midpoint state `z̄`:
//!
//! ```text
//! (ι − dt/2 L_eff) z̄ = ι z_n,     G z̄ = u(t_n + dt/2)
//! ```
//!
//! and sets `z_{n+1} = 2 z̄ − z_n`. Midpoint is exact on quadratic forms, so
//! `H(z_{n+1}) − H(z_n) = dt ⟨ι z̄, L_eff z̄⟩` and the per-step ledger closes to
//! roundoff.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::node::BoundaryNode;

/// Pivot ratio below which the step matrix is treated as singular.
pub const PIVOT_RTOL: f64 = 1e-13;
/// Relative residual tolerance for consistent initialization.
pub const INIT_TOL: f64 = 1e-10;

/// Boundary input `u(t)` in `G*` coordinates. All kinds are smooth in `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    Zero,
    /// `amplitude · sin(2π f t) · weights`
    Sine { amplitude: f64, frequency: f64, weights: Vec<f64> },
    /// `amplitude · exp(−(t − center)² / width²) · weights`
    GaussPulse { amplitude: f64, center: f64, width: f64, weights: Vec<f64> },
}

impl InputSignal {
    pub fn eval(&self, t: f64, m: usize) -> Result<DVector<f64>> {
        let (scale, weights) = match self {
            InputSignal::Zero => return Ok(DVector::zeros(m)),
            InputSignal::Sine { amplitude, frequency, weights } => (amplitude * (2.0 * PI * frequency * t).sin(), weights),
            InputSignal::GaussPulse { amplitude, center, width, weights } => {
                (amplitude * (-((t - center) / width).powi(2)).exp(), weights)
            }
        };
        if weights.len() != m {
            return Err(Error::dims("input weights", m, weights.len()));
        }
        Ok(DVector::from_column_slice(weights) * scale)
    }
}

/// Factored midpoint step for a fixed node and step size.
#[derive(Debug, Clone)]
pub struct MidpointStepper<'a> {
    node: &'a BoundaryNode,
    dt: f64,
    lu: LU<f64, Dyn, Dyn>,
}

impl<'a> MidpointStepper<'a> {
    /// `dt` may be negative (backward stepping) but not zero or non-finite.
    pub fn new(node: &'a BoundaryNode, dt: f64) -> Result<Self> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTimeGrid { reason: format!("step size {dt}") });
        }
        check_square(node)?;
        let op = node.op();
        let c = op.core_dim();
        let ext = op.ext_dim();
        let mut mat = DMatrix::zeros(ext, ext);
        mat.view_mut((0, 0), (c, ext)).copy_from(&(op.iota() - node.l_eff() * (0.5 * dt)));
        mat.view_mut((c, 0), (node.m(), ext)).copy_from(node.g_map());
        let lu = mat.lu();
        let diag = lu.u().diagonal().map(f64::abs);
        let max = diag.max();
        let pivot_ratio = if max > 0.0 { diag.min() / max } else { 0.0 };
        if !(pivot_ratio > PIVOT_RTOL) {
            return Err(Error::SingularStepMatrix { pivot_ratio });
        }
        Ok(Self { node, dt, lu })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Returns `(z_{n+1}, z̄)`.
    pub fn step(&self, z: &DVector<f64>, u_mid: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let op = self.node.op();
        if z.len() != op.ext_dim() {
            return Err(Error::dims("step state", op.ext_dim(), z.len()));
        }
        if u_mid.len() != self.node.m() {
            return Err(Error::dims("step input", self.node.m(), u_mid.len()));
        }
        let c = op.core_dim();
        let mut rhs = DVector::zeros(op.ext_dim());
        rhs.rows_mut(0, c).copy_from(&(op.iota() * z));
        rhs.rows_mut(c, self.node.m()).copy_from(u_mid);
        let mid = self.lu.solve(&rhs).ok_or(Error::SingularStepMatrix { pivot_ratio: 0.0 })?;
        let next = &mid * 2.0 - z;
        Ok((next, mid))
    }
}

fn check_square(node: &BoundaryNode) -> Result<()> {
    let k = node.op().n_boundary_coords();
    if k != node.m() {
        return Err(Error::SingularBoundaryBlock {
            reason: format!("{k} boundary coordinates for {} input channels", node.m()),
        });
    }
    Ok(())
}

/// One midpoint step.
pub fn step_midpoint(node: &BoundaryNode, z: &DVector<f64>, u_mid: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    Ok(MidpointStepper::new(node, dt)?.step(z, u_mid)?.0)
}

/// Solves `G (z_core, τ) = u0` for the boundary coordinates `τ` in the least
/// squares sense and rejects the result if the residual is not negligible.
pub fn consistent_initialization(node: &BoundaryNode, z_core: &DVector<f64>, u0: &DVector<f64>) -> Result<DVector<f64>> {
    check_square(node)?;
    let op = node.op();
    let (c, k, m) = (op.core_dim(), op.n_boundary_coords(), node.m());
    if z_core.len() != c {
        return Err(Error::dims("core state", c, z_core.len()));
    }
    if u0.len() != m {
        return Err(Error::dims("initial input", m, u0.len()));
    }
    let g = node.g_map();
    let g_core = g.columns(0, c);
    let g_tau = g.columns(c, k).into_owned();
    let rhs = u0 - g_core * z_core;
    let tau = if m == 0 {
        DVector::zeros(0)
    } else {
        let svd = g_tau.svd(true, true);
        let eps = 1e-12 * svd.singular_values.max();
        svd.solve(&rhs, eps).map_err(|e| Error::SingularBoundaryBlock { reason: e.to_string() })?
    };
    let mut z = DVector::zeros(op.ext_dim());
    z.rows_mut(0, c).copy_from(z_core);
    z.rows_mut(c, k).copy_from(&tau);
    let gz = g * &z;
    let residual = (&gz - u0).norm();
    if residual > INIT_TOL * 1f64.max(u0.norm()).max((g_core * z_core).norm()) {
        return Err(Error::IncompatibleInitialData { residual });
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub h: f64,
    pub h_p: f64,
    pub h_k: f64,
    /// Supply rate at the step midpoint (at `t_0` for the first row).
    pub supplied: f64,
    /// `⟨D v, v⟩` at the step midpoint.
    pub dissipated: f64,
    /// `ΔH − dt (supplied − dissipated)`; never positive for passive nodes.
    pub balance_residual: f64,
    /// `dt · ¼(‖v‖² − ‖P v‖²)`, computed independently of `ΔH`.
    pub scattering_slack: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn max_abs_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.balance_residual.abs()).fold(0.0, f64::max)
    }

    /// Largest `balance_residual / (1 + H)`.
    pub fn max_relative_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.balance_residual / (1.0 + r.h)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_slack(&self) -> f64 {
        self.rows.iter().map(|r| r.scattering_slack).fold(f64::INFINITY, f64::min)
    }

    /// Largest `|balance_residual + scattering_slack|`.
    pub fn max_closure_defect(&self) -> f64 {
        self.rows.iter().map(|r| (r.balance_residual + r.scattering_slack).abs()).fold(0.0, f64::max)
    }
}

/// Simulation output. `inputs[0]`, `outputs[0]` are `u(0)` and `K z_0`; later
/// entries are the midpoint samples of each step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub midpoints: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    pub ledger: EnergyLedger,
}

/// Number of uniform steps of size `dt` that land on `t_final`.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeGrid { reason: format!("step size {dt} must be positive") });
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidTimeGrid { reason: format!("final time {t_final}") });
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidTimeGrid { reason: format!("t_final {t_final} is not a multiple of dt {dt}") });
    }
    Ok(n as usize)
}

pub fn simulate(node: &BoundaryNode, z_core0: &DVector<f64>, signal: &InputSignal, t_final: f64, dt: f64) -> Result<Trajectory> {
    let steps = step_count(t_final, dt)?;
    let m = node.m();
    let u0 = signal.eval(0.0, m)?;
    let z0 = consistent_initialization(node, z_core0, &u0)?;
    let stepper = MidpointStepper::new(node, dt)?;

    let mut traj = Trajectory {
        dt,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        midpoints: Vec::with_capacity(steps),
        inputs: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
        ledger: EnergyLedger::default(),
    };
    traj.times.push(0.0);
    traj.outputs.push(node.output(&z0));
    traj.inputs.push(u0);
    traj.states.push(z0);
    for n in 0..steps {
        let t_mid = (n as f64 + 0.5) * dt;
        let u_mid = signal.eval(t_mid, m)?;
        let (next, mid) = stepper.step(&traj.states[n], &u_mid)?;
        traj.times.push((n + 1) as f64 * dt);
        traj.outputs.push(node.output(&mid));
        traj.inputs.push(u_mid);
        traj.midpoints.push(mid);
        traj.states.push(next);
    }
    traj.ledger = balance_ledger(node, &traj);
    Ok(traj)
}

/// Per-step energy bookkeeping for a trajectory produced by [`simulate`].
pub fn balance_ledger(node: &BoundaryNode, traj: &Trajectory) -> EnergyLedger {
    let mut rows = Vec::with_capacity(traj.times.len());
    for (n, z) in traj.states.iter().enumerate() {
        let (h, h_p, h_k) = node.energy(z);
        let (u, y) = (&traj.inputs[n], &traj.outputs[n]);
        let row = if n == 0 {
            LedgerRow {
                t: traj.times[0],
                h,
                h_p,
                h_k,
                supplied: node.supply(u, y),
                dissipated: node.dissipation(z),
                balance_residual: 0.0,
                scattering_slack: 0.0,
            }
        } else {
            let mid = &traj.midpoints[n - 1];
            let prev_h = rows.last().map_or(h, |r: &LedgerRow| r.h);
            let supplied = node.supply(u, y);
            let dissipated = node.dissipation(mid);
            LedgerRow {
                t: traj.times[n],
                h,
                h_p,
                h_k,
                supplied,
                dissipated,
                balance_residual: (h - prev_h) - traj.dt * (supplied - dissipated),
                scattering_slack: traj.dt * node.p_slack(mid),
            }
        };
        rows.push(row);
    }
    EnergyLedger { rows }
}
