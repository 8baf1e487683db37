use std::sync::Arc;

use super::{ModifiedError, ModifiedField};
use crate::algebra::{Jet, JetShape, MultiIndex};
use crate::systems::PoissonSystem;

/// A candidate Hamiltonian `H_α` for one modified coefficient.
pub struct Candidate<'a> {
    pub alpha: MultiIndex,
    pub hamiltonian: &'a dyn Fn(&[Jet]) -> Jet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateResidual {
    pub alpha: MultiIndex,
    /// `min_± ‖f_α − B∇(±H_α)‖_∞`
    pub residual: f64,
    /// The sign achieving the minimum.
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonCertificate {
    /// `max |∇C_i(y)ᵀ f_α(y)|` over Casimirs and stored `α`; 0 without Casimirs.
    pub casimir_tangency: f64,
    pub candidates: Vec<CandidateResidual>,
    /// `max |N − Nᵀ|` with `N = J ∂f_α/∂y`, over `α` whose Jacobian is
    /// available; present for canonical systems only.
    pub canonical_asymmetry: Option<f64>,
}

impl PoissonCertificate {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.casimir_tangency <= tolerance
            && self.candidates.iter().all(|c| c.residual <= tolerance)
            && self.canonical_asymmetry.is_none_or(|a| a <= tolerance)
    }
}

fn gradient(h: &dyn Fn(&[Jet]) -> Jet, y: &[f64]) -> Vec<f64> {
    let d = y.len();
    let shape: Arc<JetShape> = JetShape::new(vec![1; d], 1);
    let vars: Vec<Jet> = (0..d).map(|i| Jet::variable(&shape, i, y[i])).collect();
    let v = h(&vars);
    (0..d)
        .map(|i| {
            let mut e = vec![0; d];
            e[i] = 1;
            v.coefficient(&e)
        })
        .collect()
}

/// Checks at the field's base point that the modified coefficients are
/// tangent to the Casimir leaves, are generated by the supplied Hamiltonians
/// (up to sign), and for canonical structure are locally Hamiltonian.
pub fn poisson_certificate<P: PoissonSystem>(
    field: &ModifiedField,
    sys: &P,
    candidates: &[Candidate<'_>],
) -> Result<PoissonCertificate, ModifiedError> {
    let table = field.table();
    let y = &table.base;
    let mut tangency: f64 = 0.0;
    for i in 0..sys.casimir_count() {
        let grad = sys.casimir_gradient(i, y)?;
        for (_, f) in table.entries() {
            let s: f64 = grad.iter().zip(f).map(|(a, b)| a * b).sum();
            tangency = tangency.max(s.abs());
        }
    }

    let b = sys.structure_matrix::<f64>(y)?;
    let mut residuals = Vec::with_capacity(candidates.len());
    for c in candidates {
        let f = table
            .get(&c.alpha)
            .ok_or(ModifiedError::Weight { got: table.max_weight, need: c.alpha.weight() })?;
        let g = gradient(c.hamiltonian, y);
        let bg: Vec<f64> = b.iter().map(|row| row.iter().zip(&g).map(|(x, z)| x * z).sum()).collect();
        let res = |sign: f64| f.iter().zip(&bg).map(|(fi, v)| (fi - sign * v).abs()).fold(0.0, f64::max);
        let (plus, minus) = (res(1.0), res(-1.0));
        let (residual, sign) = if plus <= minus { (plus, 1.0) } else { (minus, -1.0) };
        residuals.push(CandidateResidual { alpha: c.alpha.clone(), residual, sign });
    }

    let canonical_asymmetry = sys.is_canonical().then(|| {
        // J = B⁻¹ = −B for the canonical structure
        let mut worst: f64 = 0.0;
        for (alpha, _) in table.entries() {
            let Some(jac) = table.jacobian(alpha) else { continue };
            let d = jac.len();
            let n: Vec<Vec<f64>> = (0..d)
                .map(|i| (0..d).map(|j| -(0..d).map(|k| b[i][k] * jac[k][j]).sum::<f64>()).collect())
                .collect();
            for i in 0..d {
                for j in 0..i {
                    worst = worst.max((n[i][j] - n[j][i]).abs());
                }
            }
        }
        worst
    });

    Ok(PoissonCertificate { casimir_tangency: tangency, candidates: residuals, canonical_asymmetry })
}
