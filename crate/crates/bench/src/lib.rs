//! Benchmark fixtures shared by the criterion targets.

use nalgebra::DMatrix;
use phtrip::{WaveCoefficients, WaveSystem};

/// Unit-coefficient wave system on `[0, 1]` with `n` cells.
pub fn unit_system(n: usize, b: f64) -> WaveSystem {
    WaveSystem::assemble(WaveCoefficients::constant(n, 1.0, 1.0, 1.0, 1.0, b).expect("valid coefficients"))
        .expect("assembly succeeds")
}

/// A fixed non-normal contraction on the two-dimensional boundary space.
pub fn sample_contraction() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.3, -0.4, 0.2, 0.5])
}
