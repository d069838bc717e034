//! Simulation configuration: TOML file, per-key command-line overrides,
//! defaults. The TOML schema and the `--key value` flags use the field
//! names below verbatim.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use convect_core::basis::random_field;
use convect_core::dynamics::{Scheme, SimParams};
use convect_core::{Parity, SpectralField};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Darcy-Rayleigh number.
    pub r: f64,
    /// Compressibility number, in [0, 2 pi).
    pub beta_hat: f64,
    /// Spectral truncation.
    pub trunc: usize,
    /// Time step.
    pub dt: f64,
    /// Number of time steps.
    pub steps: usize,
    /// "euler" or "cnab2".
    pub scheme: String,
    /// Diagnostic sampling cadence, in steps.
    pub sample_every: usize,
    /// Seed of the random initial condition.
    pub seed: u64,
    /// Scale applied to the random initial condition; 0 starts from rest.
    pub amplitude: f64,
    /// Coefficient snapshot cadence, in steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Also solve the initial pressure problem on the finite-difference
    /// grid and record the gap against the spectral solution.
    pub oracle: bool,
    /// Stepping aborts once |theta| exceeds this.
    pub overflow_guard: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            r: 20.0,
            beta_hat: 0.0,
            trunc: 16,
            dt: 1e-3,
            steps: 2000,
            scheme: "euler".into(),
            sample_every: 1,
            seed: 0,
            amplitude: 1e-3,
            snapshot_every: 0,
            oracle: false,
            overflow_guard: 1e6,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Validation(msg.into()));
        if !(self.r.is_finite() && self.r >= 0.0) {
            return bad("r must be finite and non-negative");
        }
        if !(self.beta_hat.is_finite() && (0.0..2.0 * PI).contains(&self.beta_hat)) {
            return bad("beta_hat must lie in [0, 2 pi)");
        }
        if self.trunc < 1 {
            return bad("trunc must be at least 1");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return bad("amplitude must be finite and non-negative");
        }
        if !(self.overflow_guard.is_finite() && self.overflow_guard > 0.0) {
            return bad("overflow_guard must be positive");
        }
        self.scheme_enum().map(|_| ())
    }

    pub fn scheme_enum(&self) -> Result<Scheme, CliError> {
        match self.scheme.as_str() {
            "euler" => Ok(Scheme::Euler),
            "cnab2" => Ok(Scheme::Cnab2),
            other => Err(CliError::Validation(format!(
                "unknown scheme {other:?}; expected \"euler\" or \"cnab2\""
            ))),
        }
    }

    pub fn sim_params(&self) -> Result<SimParams, CliError> {
        let mut p = SimParams::new(self.r, self.beta_hat, self.trunc, self.dt, self.scheme_enum()?);
        p.overflow_guard = self.overflow_guard;
        Ok(p)
    }

    /// Seeded random parity-D field scaled by `amplitude`; exactly zero at
    /// amplitude 0.
    pub fn initial_state(&self) -> SpectralField {
        random_field(Parity::D, self.trunc, self.seed).scaled(self.amplitude)
    }
}

/// Optional per-key overrides, applied on top of the config file. Flag
/// names match the TOML keys.
#[derive(Clone, Debug, clap::Args)]
pub struct Overrides {
    /// Darcy-Rayleigh number.
    #[arg(long = "r", value_name = "NUM")]
    pub r: Option<f64>,
    /// Compressibility number.
    #[arg(long = "beta_hat", value_name = "NUM")]
    pub beta_hat: Option<f64>,
    /// Spectral truncation.
    #[arg(long = "trunc", value_name = "N")]
    pub trunc: Option<usize>,
    /// Time step.
    #[arg(long = "dt", value_name = "NUM")]
    pub dt: Option<f64>,
    /// Number of time steps.
    #[arg(long = "steps", value_name = "N")]
    pub steps: Option<usize>,
    /// Splitting scheme: euler or cnab2.
    #[arg(long = "scheme", value_name = "NAME")]
    pub scheme: Option<String>,
    /// Diagnostic sampling cadence.
    #[arg(long = "sample_every", value_name = "N")]
    pub sample_every: Option<usize>,
    /// Seed of the random initial condition.
    #[arg(long = "seed", value_name = "N")]
    pub seed: Option<u64>,
    /// Scale of the random initial condition.
    #[arg(long = "amplitude", value_name = "NUM")]
    pub amplitude: Option<f64>,
    /// Coefficient snapshot cadence; 0 disables.
    #[arg(long = "snapshot_every", value_name = "N")]
    pub snapshot_every: Option<usize>,
    /// Record the finite-difference gap of the initial pressure solve.
    #[arg(
        long = "oracle",
        value_name = "BOOL",
        num_args = 0..=1,
        default_missing_value = "true"
    )]
    pub oracle: Option<bool>,
    /// Abort threshold on |theta|.
    #[arg(long = "overflow_guard", value_name = "NUM")]
    pub overflow_guard: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(v) = self.r {
            config.r = v;
        }
        if let Some(v) = self.beta_hat {
            config.beta_hat = v;
        }
        if let Some(v) = self.trunc {
            config.trunc = v;
        }
        if let Some(v) = self.dt {
            config.dt = v;
        }
        if let Some(v) = self.steps {
            config.steps = v;
        }
        if let Some(v) = &self.scheme {
            config.scheme = v.clone();
        }
        if let Some(v) = self.sample_every {
            config.sample_every = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.amplitude {
            config.amplitude = v;
        }
        if let Some(v) = self.snapshot_every {
            config.snapshot_every = v;
        }
        if let Some(v) = self.oracle {
            config.oracle = v;
        }
        if let Some(v) = self.overflow_guard {
            config.overflow_guard = v;
        }
    }
}
