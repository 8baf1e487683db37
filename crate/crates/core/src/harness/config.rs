use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::diagnostics::Protocol;
use crate::integrators::{Method, SolverConfig, Stepper, TrackRequest};
use crate::stochastics::TruncationPolicy;
use crate::systems::{Builtin, PoissonSystem};

/// Largest step count a single trajectory may take.
pub const MAX_STEPS: usize = 1 << 31;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSizes {
    One(f64),
    Many(Vec<f64>),
}

impl StepSizes {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(h) => vec![*h],
            Self::Many(hs) => hs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tracked {
    Hamiltonian,
    Casimirs,
    /// Per-step, cumulative and fixed-increment random-Hamiltonian residuals.
    RandomHamiltonian,
}

/// One experiment: a system, a stepper, and the grid of step sizes and
/// trajectories to integrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub system: String,
    pub sigma: Vec<f64>,
    pub stepper: String,
    #[serde(default)]
    pub solver: SolverConfig,
    pub y0: Vec<f64>,
    pub h: StepSizes,
    pub t_end: f64,
    #[serde(default = "one")]
    pub n_paths: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub truncation: TruncationPolicy,
    #[serde(default)]
    pub track: Vec<Tracked>,
    /// Write only this many equidistant grid points per series (every
    /// `⌊N/points⌋`-th step); all points when absent.
    #[serde(default)]
    pub plot_points: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_name() -> String {
    "experiment".into()
}

fn one() -> usize {
    1
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { path: path.into(), message: message.into() }
}

/// Steps of size `h` covering `[0, t_end]`; errors unless `t_end/h` is whole.
pub fn step_count(t_end: f64, h: f64) -> Option<usize> {
    let n = (t_end / h).round();
    (n >= 1.0 && (n * h - t_end).abs() <= 1e-9 * t_end && n <= MAX_STEPS as f64).then_some(n as usize)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build_system(&self) -> Result<Builtin, HarnessError> {
        for (i, s) in self.sigma.iter().enumerate() {
            if !(s.is_finite() && *s >= 0.0) {
                return Err(invalid(format!("sigma[{i}]"), format!("must be finite and >= 0, got {s}")));
            }
        }
        Builtin::from_label(&self.system, &self.sigma).map_err(|e| invalid("system", e.to_string()))
    }

    pub fn build_stepper(&self) -> Result<Method, HarnessError> {
        Method::from_label(&self.stepper, self.solver).map_err(|e| invalid("stepper", e.to_string()))
    }

    pub fn step_sizes(&self) -> Vec<f64> {
        self.h.values()
    }

    pub fn track_request(&self) -> TrackRequest {
        TrackRequest {
            hamiltonian: self.track.contains(&Tracked::Hamiltonian),
            casimirs: self.track.contains(&Tracked::Casimirs),
            random_hamiltonian: self.track.contains(&Tracked::RandomHamiltonian),
        }
    }

    pub fn protocol(&self) -> Protocol {
        Protocol {
            t_end: self.t_end,
            hs: self.step_sizes(),
            n_paths: self.n_paths,
            master_seed: self.master_seed,
            truncation: self.truncation,
        }
    }

    /// Checks every field and the system/stepper pairing; errors name the key.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let sys = self.build_system()?;
        let stepper = self.build_stepper()?;
        stepper.supports(&sys).map_err(|e| invalid("stepper", e.to_string()))?;
        self.solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        if self.y0.len() != sys.dim() {
            return Err(invalid("y0", format!("`{}` has dimension {}, got {} entries", self.system, sys.dim(), self.y0.len())));
        }
        if let Some(i) = self.y0.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("y0[{i}]"), "must be finite"));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        let hs = self.step_sizes();
        if hs.is_empty() {
            return Err(invalid("h", "needs at least one step size"));
        }
        for (i, h) in hs.iter().enumerate() {
            let key = if matches!(self.h, StepSizes::One(_)) { "h".to_string() } else { format!("h[{i}]") };
            if !(h.is_finite() && *h > 0.0) {
                return Err(invalid(key, format!("must be positive, got {h}")));
            }
            if hs[..i].contains(h) {
                return Err(invalid(key, format!("duplicate step size {h}")));
            }
            if step_count(self.t_end, *h).is_none() {
                return Err(invalid(key, format!("t_end = {} must be a whole number (<= 2^31) of steps of {h}", self.t_end)));
            }
            if self.truncation.enabled {
                self.truncation.threshold(*h).map_err(|e| invalid("truncation", e.to_string()))?;
            }
        }
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be at least 1"));
        }
        if self.plot_points == Some(0) {
            return Err(invalid("plot_points", "must be at least 1"));
        }
        Ok(())
    }
}
