use std::sync::Arc;

use super::{implicit_solve, step_field, IntegratorError, SolverConfig, StageMap, Stepper};
use crate::algebra::{Jet, JetShape, Scalar};
use crate::systems::PoissonSystem;

/// Stochastic implicit midpoint rule for canonical systems:
/// `Y = y_n + ½J⁻¹(h∇𝓗(Y) + Σ_r ΔW_r∇H_r(Y))`, `y_{n+1} = 2Y − y_n`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Midpoint {
    pub solver: SolverConfig,
}

impl Midpoint {
    pub fn new(solver: SolverConfig) -> Self {
        Self { solver }
    }
}

struct Stage<'a, P, S> {
    sys: &'a P,
    y: &'a [S],
    h: &'a S,
    dw: &'a [S],
}

fn stage_map<P: PoissonSystem, S: Scalar>(sys: &P, y: &[S], h: &S, dw: &[S], stage: &[S]) -> Result<Vec<S>, IntegratorError> {
    let f = step_field(sys, stage, h, dw)?;
    Ok(y.iter().zip(f).map(|(a, b)| a.clone() + b * 0.5).collect())
}

impl<P: PoissonSystem, S: Scalar> StageMap<S> for Stage<'_, P, S> {
    fn apply(&self, stage: &[S]) -> Result<Vec<S>, IntegratorError> {
        stage_map(self.sys, self.y, self.h, self.dw, stage)
    }

    fn jacobian(&self, at: &[f64]) -> Result<Vec<Vec<f64>>, IntegratorError> {
        let d = at.len();
        let shape: Arc<JetShape> = JetShape::new(vec![1; d], 1);
        let lift = |s: &S| Jet::constant_in(&shape, s.value());
        let y: Vec<Jet> = self.y.iter().map(lift).collect();
        let dw: Vec<Jet> = self.dw.iter().map(lift).collect();
        let stage: Vec<Jet> = (0..d).map(|i| Jet::variable(&shape, i, at[i])).collect();
        let g = stage_map(self.sys, &y, &lift(self.h), &dw, &stage)?;
        let mut unit = vec![0u32; d];
        Ok(g.iter()
            .map(|gi| {
                (0..d)
                    .map(|j| {
                        unit.iter_mut().for_each(|u| *u = 0);
                        unit[j] = 1;
                        gi.coefficient(&unit)
                    })
                    .collect()
            })
            .collect())
    }
}

impl Midpoint {
    /// The stage solution together with solver statistics.
    pub fn solve_stage<P: PoissonSystem, S: Scalar>(
        &self,
        sys: &P,
        y: &[S],
        h: &S,
        dw: &[S],
    ) -> Result<super::Solution<S>, IntegratorError> {
        self.supports(sys)?;
        let map = Stage { sys, y, h, dw };
        implicit_solve(&map, y.to_vec(), &self.solver)
    }
}

impl Stepper for Midpoint {
    fn label(&self) -> &'static str {
        "midpoint"
    }

    fn supports<P: PoissonSystem>(&self, sys: &P) -> Result<(), IntegratorError> {
        if sys.is_canonical() {
            Ok(())
        } else {
            Err(IntegratorError::Unsupported {
                stepper: "midpoint",
                system: sys.label(),
                reason: "the midpoint rule is only a Poisson integrator for constant canonical structure",
            })
        }
    }

    fn step<P: PoissonSystem, S: Scalar>(&self, sys: &P, y: &[S], h: &S, dw: &[S]) -> Result<Vec<S>, IntegratorError> {
        let stage = self.solve_stage(sys, y, h, dw)?.value;
        Ok(stage.into_iter().zip(y).map(|(s, a)| s * 2.0 - a.clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::Builtin;

    #[test]
    fn identity_step() {
        let sys = Builtin::pendulum_m_noises(&[0.1]);
        let y = [0.4, -0.3];
        assert_eq!(Midpoint::default().step(&sys, &y, &0.0, &[0.0]).unwrap(), y.to_vec());
    }

    #[test]
    fn cayley_rotation_on_the_oscillator() {
        let sys = Builtin::harmonic(1, &[]);
        let h = 0.1;
        let mut y = vec![1.0, 0.0];
        for _ in 0..100 {
            let next = Midpoint::default().step(&sys, &y, &h, &[]).unwrap();
            // (1 − hJ⁻¹/2)⁻¹(1 + hJ⁻¹/2) with J⁻¹ = [[0, −1], [1, 0]]
            let a = h / 2.0;
            let det = 1.0 + a * a;
            let (p, q) = (y[0] - a * y[1], y[1] + a * y[0]);
            let exact = [(p - a * q) / det, (q + a * p) / det];
            for i in 0..2 {
                assert!((next[i] - exact[i]).abs() < 1e-12);
            }
            let n0 = y[0].hypot(y[1]);
            let n1 = next[0].hypot(next[1]);
            assert!(n1 <= (1.0 + 1e-14) * n0);
            assert!((n1 - n0).abs() < 1e-12);
            y = next;
        }
    }

    #[test]
    fn pendulum_matches_long_fixed_point_oracle() {
        let sys = Builtin::pendulum_m_noises(&[0.01, 0.02, 0.03]);
        let (y, h) = ([1.0, 2.0], 0.1);
        let got = Midpoint::default().step(&sys, &y, &h, &[0.0; 3]).unwrap();
        // 200 plain sweeps of Y = y + h/2·(−Y₂, sin Y₁)
        let mut s = y;
        for _ in 0..200 {
            s = [y[0] - 0.5 * h * s[1], y[1] + 0.5 * h * s[0].sin()];
        }
        let oracle = [2.0 * s[0] - y[0], 2.0 * s[1] - y[1]];
        for i in 0..2 {
            assert!((got[i] - oracle[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_stage_is_stationary_after_max_weight_sweeps() {
        let sys = Builtin::pendulum_m_noises(&[0.5]);
        let w = 4;
        let shape = JetShape::new(vec![2, 1], w);
        let y: Vec<Jet> = [1.0, 2.0].iter().map(|v| Jet::constant_in(&shape, *v)).collect();
        let h = Jet::variable(&shape, 0, 0.0);
        let dw = [Jet::variable(&shape, 1, 0.0)];
        let sol = Midpoint::default().solve_stage(&sys, &y, &h, &dw).unwrap();
        // w sweeps fix every weight class; one more confirms stationarity
        assert!(sol.iterations <= w as usize + 1, "{}", sol.iterations);
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn large_steps() {
        let sys = Builtin::pendulum_m_noises(&[0.01, 0.02, 0.03]);
        let y = [1.0, 2.0];
        let sol = Midpoint::default().solve_stage(&sys, &y, &0.8, &[0.0; 3]).unwrap();
        assert!(sol.residual <= 1e-12);
        // h = 10 leaves the contraction regime; success or a traced failure
        match Midpoint::default().solve_stage(&sys, &y, &10.0, &[0.0; 3]) {
            Ok(sol) => assert!(sol.residual <= 1e-12),
            Err(IntegratorError::NonConvergence { trace, .. }) => assert!(!trace.is_empty()),
            Err(e) => panic!("{e:?}"),
        }
    }

    #[test]
    fn time_reversible() {
        let sys = Builtin::two_noise_doublewell(0.3, 0.2);
        let y = [0.3, 0.9];
        let dw = [0.2, -0.1];
        let m = Midpoint::default();
        let fwd = m.step(&sys, &y, &0.1, &dw).unwrap();
        let back = m.step(&sys, &fwd, &-0.1, &[-0.2, 0.1]).unwrap();
        for i in 0..2 {
            assert!((back[i] - y[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_canonical_systems() {
        let sys = Builtin::maxwell_bloch(0.1, 0.1);
        let err = Midpoint::default().step(&sys, &[1.0, 2.0, 3.0], &0.1, &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, IntegratorError::Unsupported { .. }));
        let lv = Builtin::lotka_volterra(&[0.1]);
        assert!(Midpoint::default().step(&lv, &[1.0, 1.0], &0.1, &[0.0]).is_err());
    }
}
