//! Backward error analysis of stochastic one-step methods.
//!
//! A step `Φ_h(y)` and the exact Wong-Zakai flow are expanded as
//! `y + Σ_α c_α(y) h^{α₀} Π_r ΔW_r^{α_r}` by running them on jets whose
//! variables are `h` (weight 2), the increments `w_r` (weight 1) and a
//! displacement `δ` of the base point (weight 1). The modified field
//! `Σ_α f_α h^{α₀−1} Π_r ΔW_r^{α_r}` is the one whose time-`h` flow reproduces
//! the method expansion.

mod certificate;
mod matching;
mod order;

pub use certificate::{poisson_certificate, Candidate, CandidateResidual, PoissonCertificate};
pub use matching::{
    effective_order, modified_coefficients_direct, modified_coefficients_matching, regroup_modified_field,
    EffectiveOrder, ModifiedField, RegroupedField, RegroupedTerm,
};
pub use order::order_condition_residual;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{enumerate_multiindices, Jet, JetShape, MultiIndex};
use crate::integrators::{IntegratorError, Stepper, WongZakaiFlow};
use crate::systems::{diffusion, drift, PoissonSystem, SystemError};

/// Default truncation weight of the expansions.
pub const DEFAULT_MAX_WEIGHT: u32 = 6;

/// Relative tolerance of the weight-1 consistency check.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModifiedError {
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("truncation weight {got} is below the minimum {need}")]
    Weight { got: u32, need: u32 },
    #[error("{stepper} cannot be run on jets")]
    NotAlgebraGeneric { stepper: &'static str },
    #[error("inconsistent method: coefficient {alpha} component {component} is {got}, expected {expected}")]
    Inconsistent { alpha: String, component: usize, expected: f64, got: f64 },
    #[error("expected a {expected} table, got a {got} table")]
    Kind { expected: TableKind, got: TableKind },
    #[error("tables are not comparable: {0}")]
    Mismatch(String),
    #[error("the direct formula covers |α| <= 2, got {0}")]
    OrderTooHigh(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// `d_α` of a numerical method.
    Method,
    /// `φ_α` of the exact Wong-Zakai flow.
    Flow,
    /// `f_α` of the modified field.
    Modified,
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Method => "method",
            Self::Flow => "flow",
            Self::Modified => "modified",
        })
    }
}

/// Jet variables `(h, w_1..w_m, δ_1..δ_d)` truncated at a max weight.
#[derive(Debug, Clone)]
pub(crate) struct ExpansionShape {
    pub m: usize,
    pub d: usize,
    pub max_weight: u32,
    pub shape: Arc<JetShape>,
}

impl ExpansionShape {
    pub fn new(m: usize, d: usize, max_weight: u32) -> Self {
        let mut weights = vec![2];
        weights.extend(std::iter::repeat_n(1, m + d));
        Self { m, d, max_weight, shape: JetShape::new(weights, max_weight) }
    }

    pub fn h(&self) -> Jet {
        Jet::variable(&self.shape, 0, 0.0)
    }

    pub fn w(&self) -> Vec<Jet> {
        (0..self.m).map(|r| Jet::variable(&self.shape, 1 + r, 0.0)).collect()
    }

    /// `y + δ`.
    pub fn displaced(&self, y: &[f64]) -> Vec<Jet> {
        y.iter().enumerate().map(|(i, v)| Jet::variable(&self.shape, 1 + self.m + i, *v)).collect()
    }

    pub fn delta_var(&self, i: usize) -> usize {
        1 + self.m + i
    }

    /// `2α₀ + Σ_r α_r` of a monomial, ignoring `δ`.
    pub fn noise_weight(&self, e: &[u32]) -> u32 {
        2 * e[0] + e[1..=self.m].iter().sum::<u32>()
    }

    /// Exponent vector of `h^{α₀} w^α δ^{extra}`.
    pub fn exponents(&self, alpha: &MultiIndex, delta: Option<usize>) -> Vec<u32> {
        let mut e = alpha.entries().to_vec();
        e.resize(1 + self.m + self.d, 0);
        if let Some(j) = delta {
            e[self.delta_var(j)] += 1;
        }
        e
    }
}

/// Expansion coefficients `c_α(y)` at one base point, stored for every
/// multi-index with `1 ≤ weight(α) ≤ max_weight`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub kind: TableKind,
    pub base: Vec<f64>,
    pub m: usize,
    pub max_weight: u32,
    entries: BTreeMap<MultiIndex, Vec<f64>>,
    /// Full expansion in `(h, w, δ)`; the displacement `Φ(y+δ) − (y+δ)` for
    /// method and flow tables, the time-`1` field for modified ones.
    jets: Vec<Jet>,
    layout: ExpansionShape,
}

impl CoefficientTable {
    pub(crate) fn from_jets(kind: TableKind, base: &[f64], layout: ExpansionShape, jets: Vec<Jet>) -> Self {
        let entries = enumerate_multiindices(layout.m, layout.max_weight)
            .into_iter()
            .filter(|a| !a.is_zero())
            .map(|a| {
                let e = layout.exponents(&a, None);
                let v = jets.iter().map(|j| j.coefficient(&e)).collect();
                (a, v)
            })
            .collect();
        Self { kind, base: base.to_vec(), m: layout.m, max_weight: layout.max_weight, entries, jets, layout }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&[f64]> {
        self.entries.get(alpha).map(Vec::as_slice)
    }

    /// Entries in multi-index order (by weight).
    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &[f64])> {
        self.entries.iter().map(|(a, v)| (a, v.as_slice()))
    }

    /// `∂c_α/∂y` at the base point; available while `weight(α) < max_weight`.
    pub fn jacobian(&self, alpha: &MultiIndex) -> Option<Vec<Vec<f64>>> {
        if alpha.noise_count() != self.m || alpha.weight() >= self.max_weight {
            return None;
        }
        let d = self.dim();
        Some(
            self.jets
                .iter()
                .map(|ji| (0..d).map(|j| ji.coefficient(&self.layout.exponents(alpha, Some(j)))).collect())
                .collect(),
        )
    }

    pub(crate) fn jets(&self) -> &[Jet] {
        &self.jets
    }

    pub(crate) fn layout(&self) -> &ExpansionShape {
        &self.layout
    }

    /// Weight-1 entries must be the drift and diffusion fields.
    pub fn check_consistency<P: PoissonSystem>(&self, sys: &P) -> Result<(), ModifiedError> {
        let y = &self.base;
        let mut expected = vec![(MultiIndex::drift(self.m), drift(sys, y)?)];
        for r in 1..=self.m {
            expected.push((MultiIndex::noise(self.m, r), diffusion(sys, r, y)?));
        }
        for (alpha, want) in expected {
            let got = self.get(&alpha).expect("weight <= 2 entries exist");
            for (i, (g, e)) in got.iter().zip(&want).enumerate() {
                if (g - e).abs() > CONSISTENCY_TOLERANCE * (1.0 + e.abs()) {
                    return Err(ModifiedError::Inconsistent {
                        alpha: alpha.to_string(),
                        component: i,
                        expected: *e,
                        got: *g,
                    });
                }
            }
        }
        Ok(())
    }
}

fn check_inputs<P: PoissonSystem>(sys: &P, y: &[f64], max_weight: u32) -> Result<(), ModifiedError> {
    if max_weight < 2 {
        return Err(ModifiedError::Weight { got: max_weight, need: 2 });
    }
    if y.len() != sys.dim() {
        return Err(SystemError::Dimension { expected: sys.dim(), got: y.len() }.into());
    }
    Ok(())
}

fn expand<P: PoissonSystem, M: Stepper>(
    stepper: &M,
    sys: &P,
    y: &[f64],
    max_weight: u32,
    kind: TableKind,
) -> Result<CoefficientTable, ModifiedError> {
    check_inputs(sys, y, max_weight)?;
    if !stepper.algebra_generic() {
        return Err(ModifiedError::NotAlgebraGeneric { stepper: stepper.label() });
    }
    stepper.supports(sys)?;
    let layout = ExpansionShape::new(sys.noise_count(), sys.dim(), max_weight);
    let start = layout.displaced(y);
    let next = stepper.step(sys, &start, &layout.h(), &layout.w())?;
    let jets = next.into_iter().zip(start).map(|(a, b)| a - b).collect();
    let table = CoefficientTable::from_jets(kind, y, layout, jets);
    table.check_consistency(sys)?;
    Ok(table)
}

/// `d_α(y)` of one step of `stepper`.
pub fn method_coefficients<P: PoissonSystem, M: Stepper>(
    stepper: &M,
    sys: &P,
    y: &[f64],
    max_weight: u32,
) -> Result<CoefficientTable, ModifiedError> {
    expand(stepper, sys, y, max_weight, TableKind::Method)
}

/// `φ_α(y)` of the exact time-`h` Wong-Zakai flow.
pub fn flow_coefficients<P: PoissonSystem>(sys: &P, y: &[f64], max_weight: u32) -> Result<CoefficientTable, ModifiedError> {
    let exact = WongZakaiFlow { order: max_weight as usize, substeps: 1 };
    expand(&exact, sys, y, max_weight, TableKind::Flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{Heun, MbSplitting, Midpoint};
    use crate::systems::Builtin;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn splitting_low_order_coefficients() {
        let sys = Builtin::maxwell_bloch(1.0, 1.0);
        let y = [1.0, 2.0, 3.0];
        for frozen in [false, true] {
            let t = method_coefficients(&MbSplitting { frozen }, &sys, &y, 6).unwrap();
            assert!(close(t.get(&mi(&[1, 0, 0])).unwrap(), &[2.0, 3.0, -2.0], 1e-14));
            assert!(close(t.get(&mi(&[0, 1, 0])).unwrap(), &[0.0, 3.0, -2.0], 1e-14));
            assert!(close(t.get(&mi(&[0, 0, 1])).unwrap(), &[2.0, 0.0, 0.0], 1e-14));
            assert!(close(t.get(&mi(&[0, 2, 0])).unwrap(), &[0.0, -1.0, -1.5], 1e-14));
            assert!(close(t.get(&mi(&[2, 0, 0])).unwrap(), &[3.0, -1.0, -1.5], 1e-14));
        }
    }

    #[test]
    fn frozen_rate_drops_the_mixed_shear_term() {
        let sys = Builtin::maxwell_bloch(1.0, 1.0);
        let y = [1.0, 2.0, 3.0];
        let a = mi(&[1, 0, 1]);
        let frozen = method_coefficients(&MbSplitting { frozen: true }, &sys, &y, 4).unwrap();
        assert!(close(frozen.get(&a).unwrap(), &[0.0; 3], 1e-14));
        // the exact subflow sees y₁ + σ₂ΔW₂y₂: extra σ₂y₂(0, y₃, −y₂)
        let exact = method_coefficients(&MbSplitting { frozen: false }, &sys, &y, 4).unwrap();
        assert!(close(exact.get(&a).unwrap(), &[0.0, 6.0, -4.0], 1e-14));
    }

    #[test]
    fn flow_of_a_linear_field_is_the_exponential_series() {
        // harmonic oscillator, m = 0: φ at h^k is A^k y / k!, A = [[0,−1],[1,0]]
        let sys = Builtin::harmonic(1, &[]);
        let y = [0.3, -0.7];
        let t = flow_coefficients(&sys, &y, 6).unwrap();
        let mut v = y.to_vec();
        let mut fact = 1.0;
        for k in 1..=3u32 {
            v = vec![-v[1], v[0]];
            fact *= f64::from(k);
            let want: Vec<f64> = v.iter().map(|c| c / fact).collect();
            assert!(close(t.get(&mi(&[k])).unwrap(), &want, 1e-15), "{k}");
        }
    }

    #[test]
    fn flow_second_noise_term_matches_a_reference_solve() {
        let (s1, s2) = (0.7, 0.4);
        let sys = Builtin::maxwell_bloch(s1, s2);
        let y = [0.5, -0.8, 0.6];
        let t = flow_coefficients(&sys, &y, 4).unwrap();
        let got = t.get(&mi(&[0, 2, 0])).unwrap();
        let want = [0.0, -0.5 * s1 * s1 * y[0] * y[0] * y[1], -0.5 * s1 * s1 * y[0] * y[0] * y[2]];
        assert!(close(got, &want, 1e-14));
        // reference: frozen-increment flow at h = 0, ΔW = (±ε, 0); the even part is φ_(0,2,0)ε² + O(ε⁴)
        let oracle = WongZakaiFlow { order: 24, substeps: 8 };
        let eps: f64 = 1e-3;
        let p = oracle.step(&sys, &y, &0.0, &[eps, 0.0]).unwrap();
        let n = oracle.step(&sys, &y, &0.0, &[-eps, 0.0]).unwrap();
        for i in 0..3 {
            let even = (p[i] + n[i] - 2.0 * y[i]) / (2.0 * eps * eps);
            assert!((even - want[i]).abs() < 1e-5, "{i}");
        }
    }

    #[test]
    fn weight_one_entries_are_the_fields() {
        let sys = Builtin::pendulum_m_noises(&[0.3, 0.2]);
        let y = [0.4, 1.1];
        for t in [
            method_coefficients(&Midpoint::default(), &sys, &y, 3).unwrap(),
            method_coefficients(&Heun, &sys, &y, 3).unwrap(),
            flow_coefficients(&sys, &y, 3).unwrap(),
        ] {
            assert!(close(t.get(&MultiIndex::drift(2)).unwrap(), &drift(&sys, &y).unwrap(), 1e-15));
            for r in 1..=2 {
                assert!(close(t.get(&MultiIndex::noise(2, r)).unwrap(), &diffusion(&sys, r, &y).unwrap(), 1e-15));
            }
        }
    }

    #[test]
    fn inconsistent_tables_are_rejected() {
        struct Lazy;
        impl Stepper for Lazy {
            fn label(&self) -> &'static str {
                "lazy"
            }
            fn supports<P: PoissonSystem>(&self, _: &P) -> Result<(), IntegratorError> {
                Ok(())
            }
            fn step<P: PoissonSystem, S: crate::algebra::Scalar>(
                &self,
                sys: &P,
                y: &[S],
                h: &S,
                dw: &[S],
            ) -> Result<Vec<S>, IntegratorError> {
                // half the drift
                let f = crate::integrators::Heun.step(sys, y, &(h.clone() * 0.5), dw)?;
                Ok(f)
            }
        }
        let sys = Builtin::pendulum_m_noises(&[0.3]);
        let err = method_coefficients(&Lazy, &sys, &[0.4, 1.1], 3).unwrap_err();
        assert!(matches!(err, ModifiedError::Inconsistent { .. }), "{err:?}");
    }

    #[test]
    fn low_truncation_is_rejected() {
        let sys = Builtin::pendulum_m_noises(&[0.3]);
        assert!(matches!(flow_coefficients(&sys, &[0.4, 1.1], 1), Err(ModifiedError::Weight { .. })));
    }

    #[test]
    fn stored_indices_respect_the_truncation() {
        let sys = Builtin::maxwell_bloch(0.5, 0.5);
        let t = flow_coefficients(&sys, &[0.5, 0.8, 0.6], 5).unwrap();
        assert!(t.entries().all(|(a, v)| a.order() >= 1 && a.weight() <= 5 && v.len() == 3));
        assert_eq!(t.entries().count(), enumerate_multiindices(2, 5).len() - 1);
    }

    #[test]
    fn jacobian_of_the_drift_coefficient() {
        let sys = Builtin::maxwell_bloch(1.0, 1.0);
        let y = [1.0, 2.0, 3.0];
        let t = flow_coefficients(&sys, &y, 4).unwrap();
        // f = (y₂, y₁y₃, −y₁y₂)
        let j = t.jacobian(&MultiIndex::drift(2)).unwrap();
        let want = [[0.0, 1.0, 0.0], [3.0, 0.0, 1.0], [-2.0, -1.0, 0.0]];
        for i in 0..3 {
            assert!(close(&j[i], &want[i], 1e-15));
        }
        assert!(t.jacobian(&mi(&[2, 0, 0])).is_none());
    }
}
