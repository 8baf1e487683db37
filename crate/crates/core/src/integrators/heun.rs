use super::{step_field, IntegratorError, Stepper};
use crate::algebra::Scalar;
use crate::systems::PoissonSystem;

/// Explicit stochastic Heun (trapezoidal predictor-corrector), consistent
/// with the Stratonovich interpretation but not a Poisson integrator.
///
/// `ỹ = y + F(y)`, `y_{n+1} = y + ½(F(y) + F(ỹ))` with `F = hf + Σ_r ΔW_r g_r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Heun;

impl Stepper for Heun {
    fn label(&self) -> &'static str {
        "heun"
    }

    fn supports<P: PoissonSystem>(&self, _sys: &P) -> Result<(), IntegratorError> {
        Ok(())
    }

    fn step<P: PoissonSystem, S: Scalar>(&self, sys: &P, y: &[S], h: &S, dw: &[S]) -> Result<Vec<S>, IntegratorError> {
        let f0 = step_field(sys, y, h, dw)?;
        let pred: Vec<S> = y.iter().zip(&f0).map(|(a, b)| a.clone() + b.clone()).collect();
        let f1 = step_field(sys, &pred, h, dw)?;
        Ok(y.iter()
            .zip(f0.into_iter().zip(f1))
            .map(|(a, (b, c))| a.clone() + (b + c) * 0.5)
            .collect())
    }
}
