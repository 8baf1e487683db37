//! Conservation and convergence diagnostics: Poisson-map residuals, drift of
//! tracked functionals, the step-size scaling of the random-Hamiltonian drift
//! and Monte Carlo strong-order estimates.

mod convergence;
mod drift;

pub use convergence::{
    drift_scaling_exponent, strong_order_estimate, DriftScaling, OrderEstimate, Protocol, ROUNDING_FLOOR,
};
pub use drift::{envelope_slope, functional_drift, DriftSeries};

use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{Jet, JetShape};
use crate::integrators::{IntegratorError, Stepper};
use crate::stochastics::StochasticsError;
use crate::systems::{PoissonSystem, SystemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Stochastics(#[from] StochasticsError),
    #[error("functional `{0}` was not tracked")]
    Untracked(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("unstable estimate at h = {h}: half-width {half_width:e} exceeds half the error {error:e}")]
    Unstable { h: f64, error: f64, half_width: f64 },
    #[error("invalid protocol: {0}")]
    Protocol(String),
}

/// `max_ij |Φ'BΦ'ᵀ − B(Φ)|_ij` for one step from `y`, with the Jacobian `Φ'`
/// taken exactly by forward-mode jets.
pub fn poisson_map_residual<P: PoissonSystem, M: Stepper>(
    stepper: &M,
    sys: &P,
    y: &[f64],
    h: f64,
    dw: &[f64],
) -> Result<f64, DiagnosticsError> {
    let d = sys.dim();
    if y.len() != d {
        return Err(SystemError::Dimension { expected: d, got: y.len() }.into());
    }
    let shape: Arc<JetShape> = JetShape::new(vec![1; d], 1);
    let start: Vec<Jet> = (0..d).map(|i| Jet::variable(&shape, i, y[i])).collect();
    let dw: Vec<Jet> = dw.iter().map(|w| Jet::from(*w)).collect();
    let next = stepper.step(sys, &start, &Jet::from(h), &dw)?;
    let mut e = vec![0u32; d];
    let jac: Vec<Vec<f64>> = next
        .iter()
        .map(|c| {
            (0..d)
                .map(|j| {
                    e.iter_mut().for_each(|x| *x = 0);
                    e[j] = 1;
                    c.coefficient(&e)
                })
                .collect()
        })
        .collect();
    let end: Vec<f64> = next.iter().map(|c| c.coefficients()[0]).collect();
    let b0 = sys.structure_matrix::<f64>(y)?;
    let b1 = sys.structure_matrix::<f64>(&end)?;
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                for l in 0..d {
                    s += jac[i][k] * b0[k][l] * jac[j][l];
                }
            }
            worst = worst.max((s - b1[i][j]).abs());
        }
    }
    Ok(worst)
}

/// Least-squares line `y ≈ a + b x`; returns `b`.
pub(crate) fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{Heun, MbSplitting, Midpoint, WongZakaiFlow};
    use crate::systems::Builtin;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_step_is_poisson() {
        let sys = Builtin::maxwell_bloch(0.5, 0.5);
        for stepper in [Heun] {
            assert_eq!(poisson_map_residual(&stepper, &sys, &[0.5, -0.8, 0.6], 0.0, &[0.0, 0.0]).unwrap(), 0.0);
        }
    }

    #[test]
    fn poisson_steppers_and_heun() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mb = Builtin::maxwell_bloch(0.5, 0.5);
        let pend = Builtin::pendulum_m_noises(&[0.3, 0.2]);
        let mut heun_worst: f64 = 0.0;
        for _ in 0..50 {
            let y = mb.sample_point(&mut rng);
            let dw = [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)];
            assert!(poisson_map_residual(&MbSplitting::default(), &mb, &y, 0.1, &dw).unwrap() < 1e-12);
            heun_worst = heun_worst.max(poisson_map_residual(&Heun, &mb, &y, 0.1, &dw).unwrap());
            let q = pend.sample_point(&mut rng);
            assert!(poisson_map_residual(&Midpoint::default(), &pend, &q, 0.1, &dw).unwrap() < 1e-12);
        }
        assert!(heun_worst > 1e-6);
    }

    #[test]
    fn composition_stays_poisson() {
        // two splitting steps as one map: residual within the sum of the parts
        struct Twice(MbSplitting);
        impl Stepper for Twice {
            fn label(&self) -> &'static str {
                "twice"
            }
            fn supports<P: PoissonSystem>(&self, sys: &P) -> Result<(), IntegratorError> {
                self.0.supports(sys)
            }
            fn step<P: PoissonSystem, S: crate::algebra::Scalar>(
                &self,
                sys: &P,
                y: &[S],
                h: &S,
                dw: &[S],
            ) -> Result<Vec<S>, IntegratorError> {
                let mid = self.0.step(sys, y, h, dw)?;
                self.0.step(sys, &mid, h, dw)
            }
        }
        let mb = Builtin::maxwell_bloch(0.7, 0.4);
        let (y, dw) = ([0.5, -0.8, 0.6], [0.2, -0.1]);
        let one = poisson_map_residual(&MbSplitting::default(), &mb, &y, 0.1, &dw).unwrap();
        let mid = MbSplitting::default().step(&mb, &y, &0.1, &dw).unwrap();
        let two = poisson_map_residual(&MbSplitting::default(), &mb, &mid, 0.1, &dw).unwrap();
        let both = poisson_map_residual(&Twice(MbSplitting::default()), &mb, &y, 0.1, &dw).unwrap();
        assert!(both <= one + two + 1e-14);
        let exact = poisson_map_residual(&WongZakaiFlow { order: 20, substeps: 4 }, &mb, &y, 0.1, &dw).unwrap();
        assert!(exact < 1e-13);
    }

    #[test]
    fn slope_of_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        assert!((fit_slope(&x, &y).unwrap() + 0.5).abs() < 1e-15);
        assert!(fit_slope(&[1.0], &[1.0]).is_none());
        assert!(fit_slope(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }
}
