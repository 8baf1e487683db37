//! Stochastic Poisson systems
//! `dy = B(y)∇𝓗(y) dt + Σ_r B(y)∇H_r(y) ∘ dW_r`, their structure checks, the
//! random Hamiltonian of the Wong-Zakai system, and the builtin catalog.

mod catalog;
mod structure;

pub use catalog::{LABELS, 
    Builtin, Canonical, CanonicalHamiltonian, HamiltonianForm, LotkaVolterra, MaxwellBloch,
};
pub use structure::{poisson_bracket, structure_check, StructureReport, STRUCTURE_TOLERANCE};

use rand::RngCore;
use thiserror::Error;

use crate::algebra::{AlgebraError, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("{system}: state outside the domain ({reason})")]
    Domain { system: String, reason: String },
    #[error("noise index {r} outside 1..={m}")]
    NoiseIndex { r: usize, m: usize },
    #[error("Hamiltonian index {k} outside 0..={m}")]
    HamiltonianIndex { k: usize, m: usize },
    #[error("Casimir index {i} outside 0..{count}")]
    CasimirIndex { i: usize, count: usize },
    #[error("state has dimension {got}, system expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("step size must be positive, got {0}")]
    StepSize(f64),
    #[error("unknown system label `{0}`")]
    UnknownLabel(String),
    #[error("invalid parameters: {0}")]
    Parameters(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A stochastic Poisson system, evaluable over any [`Scalar`].
///
/// Hamiltonian index `0` is the drift Hamiltonian `𝓗`; index `r ∈ 1..=m` is
/// the `r`-th noise Hamiltonian `H_r` (with its intensity already folded in).
/// Gradients are supplied in closed form.
pub trait PoissonSystem: Send + Sync {
    fn label(&self) -> String;
    fn dim(&self) -> usize;
    fn noise_count(&self) -> usize;

    fn structure_matrix<S: Scalar>(&self, y: &[S]) -> Result<Vec<Vec<S>>, SystemError>;
    fn hamiltonian<S: Scalar>(&self, k: usize, y: &[S]) -> Result<S, SystemError>;
    fn hamiltonian_gradient<S: Scalar>(&self, k: usize, y: &[S]) -> Result<Vec<S>, SystemError>;

    fn casimir_count(&self) -> usize {
        0
    }

    fn casimir<S: Scalar>(&self, i: usize, _y: &[S]) -> Result<S, SystemError> {
        Err(SystemError::CasimirIndex { i, count: self.casimir_count() })
    }

    fn casimir_gradient<S: Scalar>(&self, i: usize, _y: &[S]) -> Result<Vec<S>, SystemError> {
        Err(SystemError::CasimirIndex { i, count: self.casimir_count() })
    }

    /// True when `B ≡ J⁻¹` (canonical stochastic Hamiltonian system).
    fn is_canonical(&self) -> bool {
        false
    }

    /// A random point of the domain, used by the structure checks.
    fn sample_point(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Parameters of the stochastic Maxwell-Bloch system, when this is one.
    fn as_maxwell_bloch(&self) -> Option<&MaxwellBloch> {
        None
    }

    /// `B(y) v`.
    fn apply_structure<S: Scalar>(&self, y: &[S], v: &[S]) -> Result<Vec<S>, SystemError> {
        let b = self.structure_matrix(y)?;
        Ok(b.iter().map(|row| dot(row, v)).collect())
    }
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

fn check_dim<P: PoissonSystem + ?Sized, S>(sys: &P, y: &[S]) -> Result<(), SystemError> {
    if y.len() != sys.dim() {
        return Err(SystemError::Dimension { expected: sys.dim(), got: y.len() });
    }
    Ok(())
}

/// `f(y) = B(y)∇𝓗(y)`.
pub fn drift<P: PoissonSystem, S: Scalar>(sys: &P, y: &[S]) -> Result<Vec<S>, SystemError> {
    check_dim(sys, y)?;
    let grad = sys.hamiltonian_gradient(0, y)?;
    sys.apply_structure(y, &grad)
}

/// `g_r(y) = B(y)∇H_r(y)` for `r ∈ 1..=m`.
pub fn diffusion<P: PoissonSystem, S: Scalar>(sys: &P, r: usize, y: &[S]) -> Result<Vec<S>, SystemError> {
    check_dim(sys, y)?;
    if r == 0 || r > sys.noise_count() {
        return Err(SystemError::NoiseIndex { r, m: sys.noise_count() });
    }
    let grad = sys.hamiltonian_gradient(r, y)?;
    sys.apply_structure(y, &grad)
}

/// Normalization of the random Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HamiltonianScaling {
    /// `H̄ = 𝓗 + Σ_r (ΔW_r / h) H_r`
    #[default]
    PerUnitTime,
    /// `h·H̄ = h𝓗 + Σ_r ΔW_r H_r`
    PerStep,
}

/// The random Hamiltonian conserved by the Wong-Zakai flow of one step.
pub fn random_hamiltonian<P: PoissonSystem, S: Scalar>(
    sys: &P,
    dw: &[f64],
    h: f64,
    y: &[S],
    scaling: HamiltonianScaling,
) -> Result<S, SystemError> {
    if !(h > 0.0) {
        return Err(SystemError::StepSize(h));
    }
    check_dim(sys, y)?;
    if dw.len() != sys.noise_count() {
        return Err(SystemError::Dimension { expected: sys.noise_count(), got: dw.len() });
    }
    let (c0, cr) = match scaling {
        HamiltonianScaling::PerUnitTime => (1.0, 1.0 / h),
        HamiltonianScaling::PerStep => (h, 1.0),
    };
    let mut acc = sys.hamiltonian(0, y)? * c0;
    for (r, w) in dw.iter().enumerate() {
        if *w != 0.0 {
            acc = acc + sys.hamiltonian(r + 1, y)? * (w * cr);
        }
    }
    Ok(acc)
}

/// The frozen-increment Wong-Zakai vector field `y ↦ B(y)∇H̄(y)`.
#[derive(Debug, Clone)]
pub struct WongZakaiField<'a, P> {
    sys: &'a P,
    rates: Vec<f64>,
}

impl<P: PoissonSystem> WongZakaiField<'_, P> {
    pub fn eval<S: Scalar>(&self, y: &[S]) -> Result<Vec<S>, SystemError> {
        check_dim(self.sys, y)?;
        let mut grad = self.sys.hamiltonian_gradient(0, y)?;
        for (r, rate) in self.rates.iter().enumerate() {
            if *rate == 0.0 {
                continue;
            }
            let gr = self.sys.hamiltonian_gradient(r + 1, y)?;
            for (a, b) in grad.iter_mut().zip(gr) {
                *a = a.clone() + b * *rate;
            }
        }
        self.sys.apply_structure(y, &grad)
    }

    /// `ΔW_r / h` per noise.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
}

pub fn wz_vector_field<'a, P: PoissonSystem>(
    sys: &'a P,
    dw: &[f64],
    h: f64,
) -> Result<WongZakaiField<'a, P>, SystemError> {
    if !(h > 0.0) {
        return Err(SystemError::StepSize(h));
    }
    if dw.len() != sys.noise_count() {
        return Err(SystemError::Dimension { expected: sys.noise_count(), got: dw.len() });
    }
    Ok(WongZakaiField { sys, rates: dw.iter().map(|w| w / h).collect() })
}
