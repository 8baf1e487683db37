//! One-step methods for stochastic Poisson systems and the trajectory driver.
//!
//! Every stepper is generic over [`Scalar`], so the same code advances `f64`
//! states and extracts Taylor expansions when fed [`Jet`](crate::algebra::Jet)s.

mod heun;
mod midpoint;
mod solver;
mod splitting;
mod trajectory;
mod wz_flow;

pub use heun::Heun;
pub use midpoint::Midpoint;
pub use solver::{implicit_solve, Solution, SolverConfig, SolverMode, StageMap};
pub use splitting::{shear_flow, rotation_flow, MbSplitting};
pub use trajectory::{integrate, Functional, TrackRequest, Trajectory};
pub use wz_flow::WongZakaiFlow;


use thiserror::Error;

use crate::algebra::{AlgebraError, Scalar};
use crate::stochastics::StochasticsError;
use crate::systems::{PoissonSystem, SystemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Stochastics(#[from] StochasticsError),
    #[error("{stepper} cannot integrate `{system}`: {reason}")]
    Unsupported { stepper: &'static str, system: String, reason: &'static str },
    #[error("stage solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, trace: Vec<f64> },
    #[error("singular Newton matrix")]
    Singular,
    #[error("solver configuration: {0}")]
    Solver(String),
    #[error("increments: {0}")]
    Increments(String),
    #[error("unknown stepper `{0}`")]
    UnknownStepper(String),
    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<IntegratorError> },
}

/// A stochastic one-step method `y_{n+1} = Φ_h(y_n, ΔW_n)`.
pub trait Stepper: Send + Sync {
    fn label(&self) -> &'static str;

    /// Reject systems the method is not defined for.
    fn supports<P: PoissonSystem>(&self, sys: &P) -> Result<(), IntegratorError>;

    fn step<P: PoissonSystem, S: Scalar>(&self, sys: &P, y: &[S], h: &S, dw: &[S]) -> Result<Vec<S>, IntegratorError>;

    /// True when `step` may be run on jets to extract expansion coefficients.
    fn algebra_generic(&self) -> bool {
        true
    }
}

/// `B(y)(h∇𝓗(y) + Σ_r ΔW_r ∇H_r(y))`, the Wong-Zakai field scaled by `h`.
pub(crate) fn step_field<P: PoissonSystem, S: Scalar>(
    sys: &P,
    y: &[S],
    h: &S,
    dw: &[S],
) -> Result<Vec<S>, IntegratorError> {
    if dw.len() != sys.noise_count() {
        return Err(IntegratorError::Increments(format!(
            "{} increments for {} noises",
            dw.len(),
            sys.noise_count()
        )));
    }
    let mut grad: Vec<S> = sys.hamiltonian_gradient(0, y)?.into_iter().map(|g| g * h.clone()).collect();
    for (r, w) in dw.iter().enumerate() {
        let gr = sys.hamiltonian_gradient(r + 1, y)?;
        for (a, b) in grad.iter_mut().zip(gr) {
            *a = a.clone() + b * w.clone();
        }
    }
    Ok(sys.apply_structure(y, &grad)?)
}

/// The steppers selectable by label.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Midpoint(Midpoint),
    MbSplitting(MbSplitting),
    Heun(Heun),
    WongZakaiFlow(WongZakaiFlow),
}

pub const STEPPER_LABELS: [&str; 5] = ["midpoint", "mb-splitting", "mb-splitting-frozen", "heun", "wz-flow"];

impl Method {
    pub fn from_label(label: &str, solver: SolverConfig) -> Result<Self, IntegratorError> {
        match label {
            "midpoint" => Ok(Self::Midpoint(Midpoint::new(solver))),
            "mb-splitting" => Ok(Self::MbSplitting(MbSplitting::default())),
            "mb-splitting-frozen" => Ok(Self::MbSplitting(MbSplitting { frozen: true })),
            "heun" => Ok(Self::Heun(Heun)),
            "wz-flow" => Ok(Self::WongZakaiFlow(WongZakaiFlow::default())),
            other => Err(IntegratorError::UnknownStepper(other.to_string())),
        }
    }
}

macro_rules! delegate {
    ($self:ident, $s:ident => $e:expr) => {
        match $self {
            Method::Midpoint($s) => $e,
            Method::MbSplitting($s) => $e,
            Method::Heun($s) => $e,
            Method::WongZakaiFlow($s) => $e,
        }
    };
}

impl Stepper for Method {
    fn label(&self) -> &'static str {
        delegate!(self, s => s.label())
    }

    fn supports<P: PoissonSystem>(&self, sys: &P) -> Result<(), IntegratorError> {
        delegate!(self, s => s.supports(sys))
    }

    fn step<P: PoissonSystem, S: Scalar>(&self, sys: &P, y: &[S], h: &S, dw: &[S]) -> Result<Vec<S>, IntegratorError> {
        delegate!(self, s => s.step(sys, y, h, dw))
    }
}
