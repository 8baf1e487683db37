use serde::Serialize;

use super::{fit_slope, DiagnosticsError};
use crate::integrators::{Functional, Trajectory};

/// Deviation of a tracked functional from its initial value along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftSeries {
    pub label: String,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl DriftSeries {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Drift series of `functional`. The random-Hamiltonian functionals are
/// already deviations (per-step, cumulative or fixed-increment residuals) and
/// are returned as tracked.
pub fn functional_drift(trajectory: &Trajectory, functional: Functional) -> Result<DriftSeries, DiagnosticsError> {
    let track = trajectory
        .track(functional)
        .ok_or_else(|| DiagnosticsError::Untracked(functional.name()))?;
    let values = match functional {
        Functional::Hamiltonian | Functional::Casimir(_) => track.iter().map(|v| v - track[0]).collect(),
        Functional::RandomHamiltonianStep
        | Functional::RandomHamiltonianCumulative
        | Functional::RandomHamiltonianFixed => track.to_vec(),
    };
    Ok(DriftSeries { label: functional.name(), t: trajectory.times(), values })
}

/// Least-squares slope of `|deviation|` against `t`, per unit time.
pub fn envelope_slope(series: &DriftSeries) -> Result<f64, DiagnosticsError> {
    let abs: Vec<f64> = series.values.iter().map(|v| v.abs()).collect();
    fit_slope(&series.t, &abs).ok_or_else(|| DiagnosticsError::DegenerateFit("need two distinct times".into()))
}
