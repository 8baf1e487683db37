use super::{CoefficientTable, ModifiedError};
use crate::algebra::moment_constant;

/// `𝒞_k(y) = Σ K_{α¹,α²} ⟨φ_{α¹} − d_{α¹}, φ_{α²} − d_{α²}⟩` over pairs with
/// `weight(α¹) + weight(α²) = 2k`, both weights `≥ 1`, and every increment
/// exponent of `α¹ + α²` even.
///
/// A method has mean-square order `p` when `𝒞_k = 0` for `k = 1..=2p`.
pub fn order_condition_residual(flow: &CoefficientTable, method: &CoefficientTable, k: u32) -> Result<f64, ModifiedError> {
    if k == 0 {
        return Err(ModifiedError::Mismatch("k must be at least 1".into()));
    }
    let need = 2 * k - 1;
    for t in [flow, method] {
        if t.max_weight < need {
            return Err(ModifiedError::Weight { got: t.max_weight, need });
        }
    }
    if flow.m != method.m || flow.dim() != method.dim() {
        return Err(ModifiedError::Mismatch("noise count or dimension differ".into()));
    }
    if flow.base.iter().zip(&method.base).any(|(a, b)| a != b) {
        return Err(ModifiedError::Mismatch("base points differ".into()));
    }
    let diffs: Vec<_> = flow
        .entries()
        .filter(|(a, _)| a.weight() <= need)
        .map(|(a, phi)| {
            let d = method.get(a).expect("same truncation");
            (a.clone(), phi.iter().zip(d).map(|(x, y)| x - y).collect::<Vec<f64>>())
        })
        .collect();
    let mut total = 0.0;
    for (a1, e1) in &diffs {
        for (a2, e2) in &diffs {
            if a1.weight() + a2.weight() != 2 * k {
                continue;
            }
            let Ok(kc) = moment_constant(a1, a2) else { continue };
            total += kc * e1.iter().zip(e2).map(|(x, y)| x * y).sum::<f64>();
        }
    }
    Ok(total)
}
