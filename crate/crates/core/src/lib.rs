//! Boundary triplets, passive boundary nodes and structure-preserving
//! simulation for damped second-order systems on weighted finite-dimensional
//! Hilbert spaces.
//!
//! The layers build on each other: [`hilbert`] spaces and maps, [`triplet`]
//! dual pairs and boundary operators, [`extension`] contraction-parameterized
//! restrictions, [`node`] scattering and impedance colligations, [`jet`] the
//! strain-momentum equivalence, [`wave1d`] a concrete instance and [`sim`] the
//! midpoint integrator with energy ledgers.

pub mod error;
pub mod extension;
pub mod hilbert;
pub mod jet;
pub mod linalg;
pub mod node;
pub mod sim;
pub mod triplet;
pub mod wave1d;

pub use error::{Error, Result};
pub use extension::{constraint_matrix, generator_from_contraction, GeneratorRealization};
pub use hilbert::{make_space, ContractionParam, HilbertSpace, LinearMap};
pub use jet::{build_jet, JetTransform};
pub use node::{BoundaryNode, Flavor, WellPosedness};
pub use sim::{simulate, EnergyLedger, InputSignal, LedgerRow, MidpointStepper, Trajectory};
pub use triplet::{lift_second_order, BoundaryBlock, BoundaryOperator, DualPairTriplet};
pub use wave1d::{InitialKind, StandingWave, WaveCoefficients, WaveSystem};
