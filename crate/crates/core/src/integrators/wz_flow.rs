use super::{step_field, IntegratorError, Stepper};
use crate::algebra::{Scalar, Series};
use crate::systems::PoissonSystem;

/// Time-`1` flow of `dy/dτ = F(y) = B(y)(h∇𝓗 + Σ_r ΔW_r∇H_r)` by a Taylor
/// method in `τ`: on each of `substeps` subintervals the series of `y(τ)` is
/// built to degree `order` by Picard iteration (`c_{k+1} = [F(y(τ))]_k/(k+1)`)
/// and summed.
///
/// On jets whose `h` and `ΔW` are formal variables the τ-degree `k` term has
/// weight at least `k`, so `order ≥` the jet's max weight gives the exact flow
/// expansion. On floats it is a high-order deterministic reference solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WongZakaiFlow {
    pub order: usize,
    pub substeps: usize,
}

impl Default for WongZakaiFlow {
    fn default() -> Self {
        Self { order: 12, substeps: 1 }
    }
}

impl WongZakaiFlow {
    fn substep<P: PoissonSystem, S: Scalar>(
        &self,
        sys: &P,
        y: &[S],
        h: &Series<S>,
        dw: &[Series<S>],
    ) -> Result<Vec<S>, IntegratorError> {
        let k = self.order;
        let mut ys: Vec<Series<S>> = y.iter().map(|c| Series::lift(c.clone())).collect();
        // each sweep fixes one more τ-coefficient
        for _ in 0..k {
            let padded: Vec<Series<S>> = ys
                .iter()
                .map(|s| Series::new((0..=k).map(|j| s.coefficient(j)).collect()))
                .collect();
            let f = step_field(sys, &padded, h, dw)?;
            ys = y
                .iter()
                .zip(&f)
                .map(|(c0, fi)| {
                    let mut coeffs = vec![c0.clone()];
                    coeffs.extend((0..k).map(|j| fi.coefficient(j) * (1.0 / (j + 1) as f64)));
                    Series::new(coeffs)
                })
                .collect();
        }
        Ok(ys.iter().map(|s| s.eval(1.0)).collect())
    }
}

impl Stepper for WongZakaiFlow {
    fn label(&self) -> &'static str {
        "wz-flow"
    }

    fn supports<P: PoissonSystem>(&self, _sys: &P) -> Result<(), IntegratorError> {
        Ok(())
    }

    fn step<P: PoissonSystem, S: Scalar>(&self, sys: &P, y: &[S], h: &S, dw: &[S]) -> Result<Vec<S>, IntegratorError> {
        if self.order == 0 || self.substeps == 0 {
            return Err(IntegratorError::Solver("wz-flow needs order and substeps >= 1".into()));
        }
        let frac = 1.0 / self.substeps as f64;
        let h = Series::lift(h.clone() * frac);
        let dw: Vec<Series<S>> = dw.iter().map(|w| Series::lift(w.clone() * frac)).collect();
        let mut y = y.to_vec();
        for _ in 0..self.substeps {
            y = self.substep(sys, &y, &h, &dw)?;
        }
        Ok(y)
    }
}
