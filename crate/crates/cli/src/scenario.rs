//! JSON scenario files and their translation into library objects.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use phtrip::{BoundaryNode, Flavor, InitialKind, InputSignal, WaveCoefficients, WaveSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    #[default]
    PositionMomentum,
    StrainMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlavorName {
    Impedance,
    Scattering,
}

impl From<FlavorName> for Flavor {
    fn from(f: FlavorName) -> Self {
        match f {
            FlavorName::Impedance => Flavor::Impedance,
            FlavorName::Scattering => Flavor::Scattering,
        }
    }
}

/// One coefficient field: a constant, explicit values, or seeded random draws.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Field {
    Constant(f64),
    Values(Vec<f64>),
    Random(RandomField),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomField {
    /// Bounds `[lo, hi]` of a log-uniform distribution.
    pub log_uniform: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub rho: Field,
    #[serde(rename = "T")]
    pub tension: Field,
    pub a: Field,
    #[serde(default = "zero_field")]
    pub b: Field,
}

fn zero_field() -> Field {
    Field::Constant(0.0)
}

/// Boundary parameter: `p·I`, or a 2×2 matrix given row-major (flat or nested).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Parameter {
    Scalar(f64),
    Flat([f64; 4]),
    Nested([[f64; 2]; 2]),
}

impl Parameter {
    pub fn matrix(&self) -> DMatrix<f64> {
        match self {
            Parameter::Scalar(p) => DMatrix::identity(2, 2) * *p,
            Parameter::Flat(v) => DMatrix::from_row_slice(2, 2, v),
            Parameter::Nested(rows) => DMatrix::from_row_slice(2, 2, &[rows[0][0], rows[0][1], rows[1][0], rows[1][1]]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    #[default]
    Zero,
    Sine { amplitude: f64, frequency: f64, weights: [f64; 2] },
    Gauss { amplitude: f64, center: f64, width: f64, weights: [f64; 2] },
}

impl InputSpec {
    pub fn signal(&self) -> InputSignal {
        match *self {
            InputSpec::Zero => InputSignal::Zero,
            InputSpec::Sine { amplitude, frequency, weights } => {
                InputSignal::Sine { amplitude, frequency, weights: weights.to_vec() }
            }
            InputSpec::Gauss { amplitude, center, width, weights } => {
                InputSignal::GaussPulse { amplitude, center, width, weights: weights.to_vec() }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    #[default]
    Zero,
    StandingWave { k: usize },
    Gauss { center: f64, width: f64 },
}

impl InitialSpec {
    fn kind(&self) -> InitialKind {
        match *self {
            InitialSpec::Zero => InitialKind::Zero,
            InitialSpec::StandingWave { k } => InitialKind::StandingWave { k },
            InitialSpec::Gauss { center, width } => InitialKind::Gauss { center, width },
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub formulation: Formulation,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "one")]
    pub length: f64,
    pub coefficients: Coefficients,
    #[serde(rename = "P")]
    pub p: Parameter,
    pub flavor: FlavorName,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub input: InputSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                s.schema_version
            )));
        }
        if s.n == 0 {
            return Err(CliError::Schema("N must be at least 1".into()));
        }
        Ok(s)
    }

    /// Expands every coefficient field to nodal or cell values. Random fields
    /// draw from one generator seeded with `seed`, in the order ρ, T, a, b.
    pub fn coefficients(&self) -> Result<WaveCoefficients, CliError> {
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let c = &self.coefficients;
        let rho = expand(&c.rho, "rho", n + 1, &mut rng)?;
        let t = expand(&c.tension, "T", n, &mut rng)?;
        let a = expand(&c.a, "a", n + 1, &mut rng)?;
        let b = expand(&c.b, "b", n + 1, &mut rng)?;
        Ok(WaveCoefficients::from_arrays(n, self.length, rho, t, a, b)?)
    }

    pub fn setup(&self) -> Result<Setup, CliError> {
        let system = WaveSystem::assemble(self.coefficients()?)?;
        let z_core0 = system.initial_state(&self.initial.kind())?;
        Ok(Setup { scenario: self.clone(), system, z_core0 })
    }
}

fn expand(field: &Field, name: &str, len: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, CliError> {
    match field {
        Field::Constant(v) => Ok(vec![*v; len]),
        Field::Values(v) if v.len() == len => Ok(v.clone()),
        Field::Values(v) => Err(CliError::Schema(format!("{name} needs {len} values, got {}", v.len()))),
        Field::Random(RandomField { log_uniform: [lo, hi] }) => {
            if !(*lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(CliError::Schema(format!("{name}: log_uniform bounds must satisfy 0 < lo <= hi")));
            }
            let (l, h) = (lo.ln(), hi.ln());
            Ok((0..len).map(|_| if h > l { rng.random_range(l..h).exp() } else { *lo }).collect())
        }
    }
}

/// A loaded scenario together with its assembled system.
pub struct Setup {
    pub scenario: Scenario,
    pub system: WaveSystem,
    /// Position-momentum core state at `t = 0`.
    pub z_core0: DVector<f64>,
}

impl Setup {
    pub fn p(&self) -> DMatrix<f64> {
        self.scenario.p.matrix()
    }

    pub fn flavor(&self) -> Flavor {
        self.scenario.flavor.into()
    }

    pub fn signal(&self) -> InputSignal {
        self.scenario.input.signal()
    }

    pub fn position_node(&self, flavor: Flavor) -> Result<BoundaryNode, CliError> {
        Ok(self.system.node(flavor, &self.p())?)
    }

    pub fn strain_node(&self, flavor: Flavor) -> Result<BoundaryNode, CliError> {
        Ok(self.system.strain_node(flavor, &self.p())?)
    }

    /// Node and initial core state of the requested formulation.
    pub fn formulation(&self) -> Result<(BoundaryNode, DVector<f64>), CliError> {
        match self.scenario.formulation {
            Formulation::PositionMomentum => Ok((self.position_node(self.flavor())?, self.z_core0.clone())),
            Formulation::StrainMomentum => {
                Ok((self.strain_node(self.flavor())?, self.system.jet().push_state(&self.z_core0)))
            }
        }
    }
}
