//! TOML run configuration. Command-line flags override file values.

use std::path::{Path, PathBuf};

use ancientflow::tensor::sweep::{Check, EntryDistribution};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub verify_tensor: TensorSection,
    #[serde(default)]
    pub scan_functions: ScanSection,
    #[serde(default)]
    pub simulate: FlowSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub functionals: FlowSection,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TensorSection {
    /// Total number of random samples, split evenly over cells and distributions.
    pub samples: u64,
    pub dims: Vec<usize>,
    pub codims: Vec<usize>,
    pub distributions: Vec<EntryDistribution>,
    /// Subset of checks to run; empty runs all of them.
    pub checks: Vec<Check>,
}

impl Default for TensorSection {
    fn default() -> Self {
        Self {
            samples: 100_000,
            dims: (2..=6).collect(),
            codims: (2..=4).collect(),
            distributions: vec![
                EntryDistribution::Gaussian,
                EntryDistribution::HeavyTail { clip: 1e3 },
                EntryDistribution::NearExtremal { noise: 1e-3 },
            ],
            checks: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// Random admissible `(b, ξ)` pairs.
    pub samples: u64,
    /// Random `(n, ε, x)` points of the `φ` identity.
    pub identity_samples: u64,
    /// Points of the log-spaced `x` grid.
    pub grid: usize,
    pub dims: Vec<usize>,
    pub eps: Vec<f64>,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { samples: 1000, identity_samples: 10_000, grid: 400, dims: (2..=10).collect(), eps: vec![1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub fixture: String,
    /// Hypersurface dimension; implied by the fixture id when it names the ambient.
    pub n: Option<usize>,
    pub radius: Option<f64>,
    pub amplitude: f64,
    pub mode: u32,
    pub equatorial: f64,
    pub polar: f64,
    pub cap_constant: f64,
    pub t0: f64,
    pub t1: f64,
    /// Grid intervals for profile fixtures.
    pub grid: usize,
    /// Grid intervals for the single-state integrals of `functionals`.
    pub quadrature_grid: usize,
    /// Fixed time step; when absent the step follows `cfl`.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub emit_every: usize,
    pub monitors: Vec<String>,
    /// Relative margin of `a` over the measured pinching.
    pub pinching_margin: f64,
    pub hyperbolic_eps: f64,
    pub high_codim_b: f64,
    /// Orders `r` of `J_r`; the critical order is always added for `n >= 3`.
    pub j_orders: Vec<f64>,
    /// Allowed increase of monitored maxima between records.
    pub monotone_slack: f64,
    /// Fraction of the guaranteed decay exponent the fitted one must reach.
    pub decay_fraction: f64,
    pub sobolev_constant: f64,
    pub sobolev_sweep: Vec<f64>,
    pub max_steps: usize,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            fixture: "perturbed-sphere-S3".into(),
            n: None,
            radius: None,
            amplitude: 0.05,
            mode: 2,
            equatorial: 1.0,
            polar: 1.2,
            cap_constant: 0.5,
            t0: -1.0,
            t1: -0.7,
            grid: 64,
            quadrature_grid: 256,
            dt: None,
            cfl: ancientflow::flow::DEFAULT_CFL,
            emit_every: 20,
            monitors: Vec::new(),
            pinching_margin: 0.1,
            hyperbolic_eps: 1.0,
            high_codim_b: 0.1,
            j_orders: Vec::new(),
            monotone_slack: 1e-8,
            decay_fraction: 0.8,
            sobolev_constant: 1.0,
            sobolev_sweep: vec![0.01, 0.03, 0.1, 0.3, 1.0],
            max_steps: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// `hyperbolic`, `sphere`, `euclidean` or `all`.
    pub family: String,
    pub n: usize,
    pub times: Vec<f64>,
    pub cap_constant: f64,
    /// `k`, `ε` of the hyperbolic pinching witness.
    pub witness_k: f64,
    pub witness_eps: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            family: "all".into(),
            n: 2,
            times: vec![-40.0, -10.0, -5.0, -2.0, -1.0, -0.5, -0.1],
            cap_constant: 0.5,
            witness_k: 0.1,
            witness_eps: 1.0,
        }
    }
}
