use super::{IntegratorError, Stepper};
use crate::algebra::Scalar;
use crate::systems::PoissonSystem;

/// `e^{A₂t}y = (y₁ + t y₂, y₂, y₃)`.
pub fn shear_flow<S: Scalar>(y: &[S], t: &S) -> Vec<S> {
    vec![y[0].clone() + t.clone() * y[1].clone(), y[1].clone(), y[2].clone()]
}

/// `e^{A₁t}y`: fixes `y₁` and rotates `(y₂, y₃)` by the angle `ω t`, where
/// `ω` is `y₁` for the exact subflow.
pub fn rotation_flow<S: Scalar>(y: &[S], omega: &S, t: &S) -> Vec<S> {
    let theta = omega.clone() * t.clone();
    let (c, s) = (theta.cos(), theta.sin());
    vec![
        y[0].clone(),
        y[1].clone() * c.clone() + y[2].clone() * s.clone(),
        -(y[1].clone() * s) + y[2].clone() * c,
    ]
}

/// Explicit splitting for the stochastic Maxwell-Bloch system,
/// `e^{A₂h} e^{A₁h} e^{A₂σ₂ΔW₂} e^{A₁σ₁ΔW₁} y` (rightmost factor first).
///
/// By default each factor is the exact subflow from the current intermediate
/// state; `frozen` evaluates every rotation rate at the step's initial `y₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MbSplitting {
    pub frozen: bool,
}

impl Stepper for MbSplitting {
    fn label(&self) -> &'static str {
        if self.frozen {
            "mb-splitting-frozen"
        } else {
            "mb-splitting"
        }
    }

    fn supports<P: PoissonSystem>(&self, sys: &P) -> Result<(), IntegratorError> {
        sys.as_maxwell_bloch().map(|_| ()).ok_or_else(|| IntegratorError::Unsupported {
            stepper: self.label(),
            system: sys.label(),
            reason: "the splitting is specific to the Maxwell-Bloch system",
        })
    }

    fn step<P: PoissonSystem, S: Scalar>(&self, sys: &P, y: &[S], h: &S, dw: &[S]) -> Result<Vec<S>, IntegratorError> {
        self.supports(sys)?;
        let mb = sys.as_maxwell_bloch().expect("checked above");
        if y.len() != 3 || dw.len() != 2 {
            return Err(IntegratorError::Increments(format!("need a 3-state and 2 increments, got {} and {}", y.len(), dw.len())));
        }
        let w1 = dw[0].clone() * mb.sigma1;
        let w2 = dw[1].clone() * mb.sigma2;
        let y1 = y[0].clone();
        let rate = |state: &[S]| if self.frozen { y1.clone() } else { state[0].clone() };
        let y = rotation_flow(y, &rate(y), &w1);
        let y = shear_flow(&y, &w2);
        let y = rotation_flow(&y, &rate(&y), h);
        Ok(shear_flow(&y, h))
    }
}
