//! Subcommand implementations.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use phtrip::extension::{constraint_matrix, generator_from_contraction};
use phtrip::linalg::{nullspace, subspace_distance};
use phtrip::sim::{simulate, step_count, Trajectory};
use phtrip::{BoundaryNode, ContractionParam, Flavor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::output::{emit, Table};
use crate::scenario::Setup;
use crate::CliError;

pub const LEDGER_HEADER: [&str; 10] =
    ["t", "H", "H_p", "H_k", "u_1", "u_2", "y_1", "y_2", "balance_residual", "scattering_slack"];
pub const JET_HEADER: [&str; 3] = ["t", "deviation", "ran_a_defect"];

pub fn ledger_table(traj: &Trajectory) -> Table {
    let mut table = Table::new(&LEDGER_HEADER);
    for (k, row) in traj.ledger.rows.iter().enumerate() {
        let (u, y) = (&traj.inputs[k], &traj.outputs[k]);
        table.push(&[row.t, row.h, row.h_p, row.h_k, u[0], u[1], y[0], y[1], row.balance_residual, row.scattering_slack]);
    }
    table
}

pub fn simulate_cmd(setup: &Setup, out: Option<&Path>) -> Result<(), CliError> {
    let (node, z0) = setup.formulation()?;
    let s = &setup.scenario;
    let traj = simulate(&node, &z0, &setup.signal(), s.t_final, s.dt)?;
    emit(&ledger_table(&traj), out)
}

/// Per-step `(t, ‖push(z_n) − w_n‖_W, ‖P_ker w1‖_Y)` for the two formulations.
pub fn jet_rows(setup: &Setup, t_final: f64) -> Result<Vec<[f64; 3]>, CliError> {
    let jet = setup.system.jet();
    let flavor = setup.flavor();
    let position = setup.position_node(flavor)?;
    let strain = jet.transform_node(&position)?;
    let signal = setup.signal();
    let dt = setup.scenario.dt;
    let a = simulate(&position, &setup.z_core0, &signal, t_final, dt)?;
    let b = simulate(&strain, &jet.push_state(&setup.z_core0), &signal, t_final, dt)?;
    let w = strain.op().core();
    let p = setup.system.y().dim();
    let rows = a
        .states
        .iter()
        .zip(&b.states)
        .zip(&a.times)
        .map(|((z, wn), &t)| {
            let d = jet.push_ext(z) - wn;
            let dev = w.norm(&d.rows(0, w.dim()).into_owned()) + d.rows(w.dim(), d.len() - w.dim()).norm();
            [t, dev, jet.ran_a_defect(&wn.rows(0, p).into_owned())]
        })
        .collect();
    Ok(rows)
}

pub fn jet_compare_cmd(setup: &Setup, out: Option<&Path>) -> Result<(), CliError> {
    let rows = jet_rows(setup, setup.scenario.t_final)?;
    let mut table = Table::new(&JET_HEADER);
    for r in &rows {
        table.push(r);
    }
    emit(&table, out)?;
    let max = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    eprintln!("max deviation {:.3e}, max ran-A defect {:.3e}", max(1), max(2));
    Ok(())
}

fn max_entry(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn print_matrix(name: &str, m: &DMatrix<f64>) {
    println!("{name} ({}x{}):", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:.16e}")).collect();
        println!("  {}", row.join(" "));
    }
}

pub fn cayley_cmd(setup: &Setup) -> Result<(), CliError> {
    let (node, _) = setup.formulation()?;
    let beta = setup.scenario.beta;
    let transformed = node.external_cayley(beta)?;
    println!("flavor: {:?} -> {:?} at beta = {beta}", node.flavor(), transformed.flavor());
    print_matrix("G", node.g_map());
    print_matrix("K", node.k_map());
    print_matrix("G'", transformed.g_map());
    print_matrix("K'", transformed.k_map());
    let twice = node.external_cayley(1.0)?.external_cayley(1.0)?;
    let involution = max_entry(&(twice.g_map() - node.g_map())).max(max_entry(&(twice.k_map() - node.k_map())));
    println!("involution residual (beta = 1): {involution:.3e}");
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    All,
    Green,
    Extension,
    Cayley,
    Jet,
}

pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tol: f64) -> Self {
        Self { name, value, bound: format!("<= {tol:.0e}"), pass: value <= tol }
    }

    fn above(name: &'static str, value: f64, tol: f64) -> Self {
        Self { name, value, bound: format!("> {tol:.0e}"), pass: value > tol }
    }
}

fn green_checks(setup: &Setup, corrupt_gamma1: bool) -> Result<Vec<Check>, CliError> {
    let sys = &setup.system;
    let op = if corrupt_gamma1 { sys.op().with_scaled_gamma1(2.0) } else { (**sys.op()).clone() };
    let minimal = op.minimal_domain().ncols() as f64;
    let expected = (op.ext_dim() - 2 * op.m()) as f64;
    Ok(vec![
        Check::at_most("green_identity", op.green_residual(), 1e-12),
        Check::at_most("dual_pair_green_identity", sys.dual_pair().green_residual(), 1e-12),
        Check::at_most("strain_green_identity", sys.jet().target().green_residual(), 1e-12),
        Check::at_most("trace_rank_deficit", (2 * op.m() - op.trace_rank().min(2 * op.m())) as f64, 0.0),
        Check::at_most("minimal_domain_dimension", (minimal - expected).abs(), 0.0),
        Check::at_most("skew_on_minimal", op.skew_on_minimal().unwrap_or(f64::INFINITY), 1e-12),
    ])
}

fn extension_checks(setup: &Setup) -> Result<Vec<Check>, CliError> {
    let op = setup.system.op();
    let node = setup.position_node(setup.flavor())?;
    let wp = node.internal_wellposedness()?;
    let mut rng = ChaCha8Rng::seed_from_u64(setup.scenario.seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let norm = rng.random_range(0.0..1.0);
        let p = ContractionParam::random_with_norm(&mut rng, op.bspace().clone(), norm);
        worst = worst.max(generator_from_contraction(op, p.matrix())?.dissipativity_residual());
    }
    let mut least = f64::INFINITY;
    for _ in 0..50 {
        let norm = rng.random_range(1.1..3.0);
        let p = ContractionParam::random_with_norm(&mut rng, op.bspace().clone(), norm);
        if let Ok(g) = generator_from_contraction(op, p.matrix()) {
            least = least.min(g.dissipativity_residual());
        }
    }
    let id = DMatrix::identity(2, 2);
    let neumann = generator_from_contraction(op, &id)?;
    let dirichlet = nullspace(&constraint_matrix(op, &-&id)?);
    Ok(vec![
        Check::at_most("scenario_generator_dissipative", wp.residual, 1e-10),
        Check::at_most("random_contractions_dissipative", worst, 1e-10),
        Check::above("expanding_parameters_not_dissipative", least, 1e-12),
        Check::at_most("unit_parameter_domain", subspace_distance(&neumann.domain_basis, &nullspace(op.gamma1())), 1e-10),
        Check::at_most("minus_unit_parameter_domain", subspace_distance(&dirichlet, &nullspace(op.gamma0())), 1e-10),
    ])
}

fn worst_passivity(node: &BoundaryNode, rng: &mut ChaCha8Rng) -> Result<f64, CliError> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let z = DVector::from_fn(node.ext_dim(), |_, _| rng.random_range(-1.0..1.0)).normalize();
        worst = worst.max(node.passivity_residual(&z, &node.input(&z), &node.output(&z))?);
    }
    Ok(worst)
}

fn cayley_checks(setup: &Setup) -> Result<Vec<Check>, CliError> {
    let scat = setup.position_node(Flavor::Scattering)?;
    let imp = setup.position_node(Flavor::Impedance)?;
    let twice = scat.external_cayley(1.0)?.external_cayley(1.0)?;
    let involution = max_entry(&(twice.g_map() - scat.g_map())).max(max_entry(&(twice.k_map() - scat.k_map())));
    let via = scat.external_cayley(1.0)?;
    let agreement = max_entry(&(imp.g_map() - via.g_map())).max(max_entry(&(imp.k_map() - via.k_map())));
    let mut rng = ChaCha8Rng::seed_from_u64(setup.scenario.seed);
    Ok(vec![
        Check::at_most("cayley_involution", involution, 1e-14),
        Check::at_most("impedance_equals_transform", agreement, 1e-14),
        Check::at_most("scattering_passivity", worst_passivity(&scat, &mut rng)?, 1e-10),
        Check::at_most("impedance_passivity", worst_passivity(&imp, &mut rng)?, 1e-10),
    ])
}

fn jet_checks(setup: &Setup) -> Result<Vec<Check>, CliError> {
    let jet = setup.system.jet();
    let scale = 1.0 + setup.system.op().l().norm();
    let s = &setup.scenario;
    let steps = step_count(s.t_final, s.dt)?.min(500);
    let rows = jet_rows(setup, steps as f64 * s.dt)?;
    let max = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    let state_scale = 1.0 + setup.z_core0.norm();
    Ok(vec![
        Check::at_most("transport", jet.transport_residual() / scale, 1e-12),
        Check::at_most("kernel_inclusion", jet.kernel_inclusion_residual() / scale, 1e-12),
        Check::at_most("formulation_deviation", max(1) / state_scale, 1e-9),
        Check::at_most("ran_a_defect", max(2) / state_scale, 1e-9),
    ])
}

/// Runs the selected suites, prints one line per check and returns the
/// name of the first failing check, if any.
pub fn verify_cmd(setup: &Setup, suite: Suite, corrupt_gamma1: bool) -> Result<Option<&'static str>, CliError> {
    let mut checks = Vec::new();
    let wants = |s: Suite| suite == Suite::All || suite == s;
    if wants(Suite::Green) {
        checks.extend(green_checks(setup, corrupt_gamma1)?);
    }
    if wants(Suite::Extension) {
        checks.extend(extension_checks(setup)?);
    }
    if wants(Suite::Cayley) {
        checks.extend(cayley_checks(setup)?);
    }
    if wants(Suite::Jet) {
        checks.extend(jet_checks(setup)?);
    }
    for c in &checks {
        println!("{:<38} {:>10.3e}  {:<9} {}", c.name, c.value, c.bound, if c.pass { "PASS" } else { "FAIL" });
    }
    Ok(checks.iter().find(|c| !c.pass).map(|c| c.name))
}
