use super::{CoefficientTable, ExpansionShape, ModifiedError, TableKind};
use crate::algebra::{Jet, MultiIndex};
use crate::systems::PoissonSystem;

/// Time-`1` flow of the autonomous field `g(δ)` minus the identity, by the
/// Lie series `Σ_{k≥1} L^k(id)/k!` with `L u = Σ_j ∂_{δ_j}u · g_j`.
///
/// Every component of `g` must have `(h, w)`-weight at least 1, so `L^k(id)`
/// has weight at least `k` and the series terminates at the truncation.
pub(crate) fn lie_flow(g: &[Jet], layout: &ExpansionShape) -> Vec<Jet> {
    let mut term = g.to_vec();
    let mut sum = term.clone();
    for k in 2..=layout.max_weight {
        term = term
            .iter()
            .map(|u| {
                let mut acc = Jet::constant_in(&layout.shape, 0.0);
                for (j, gj) in g.iter().enumerate() {
                    acc = acc + u.derivative(layout.delta_var(j)) * gj.clone();
                }
                acc * (1.0 / f64::from(k))
            })
            .collect();
        if term.iter().all(|t| t.coefficients().iter().all(|c| *c == 0.0)) {
            break;
        }
        sum = sum.into_iter().zip(&term).map(|(a, b)| a + b.clone()).collect();
    }
    sum
}

/// Modified field `ẏ = Σ_α f_α(y) h^{α₀−1} Π_r ΔW_r^{α_r}` of a method,
/// expanded around a base point.
#[derive(Debug, Clone)]
pub struct ModifiedField {
    table: CoefficientTable,
}

impl ModifiedField {
    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&[f64]> {
        self.table.get(alpha)
    }

    pub fn max_weight(&self) -> u32 {
        self.table.max_weight
    }

    /// The truncated field at the base point for a step `h` with increments `dw`.
    pub fn eval(&self, h: f64, dw: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.table.dim()];
        for (alpha, f) in self.table.entries() {
            let c = h.powi(alpha.h_power() as i32 - 1)
                * alpha.noise_powers().iter().zip(dw).map(|(p, w)| w.powi(*p as i32)).product::<f64>();
            for (o, v) in out.iter_mut().zip(f) {
                *o += c * v;
            }
        }
        out
    }

    /// Expansion of the time-`h` flow of the truncated field; reproduces the
    /// method table it was matched to.
    pub fn flow_table(&self) -> CoefficientTable {
        let layout = self.table.layout().clone();
        let jets = lie_flow(self.table.jets(), &layout);
        CoefficientTable::from_jets(TableKind::Flow, &self.table.base, layout, jets)
    }
}

/// Solves for `f_α` weight by weight so that the flow of the modified field
/// matches `method` through its truncation weight.
pub fn modified_coefficients_matching<P: PoissonSystem>(
    method: &CoefficientTable,
    sys: &P,
) -> Result<ModifiedField, ModifiedError> {
    if method.kind == TableKind::Modified {
        return Err(ModifiedError::Kind { expected: TableKind::Method, got: method.kind });
    }
    method.check_consistency(sys)?;
    let layout = method.layout().clone();
    let target = method.jets();
    let mut g: Vec<Jet> = (0..layout.d).map(|_| Jet::constant_in(&layout.shape, 0.0)).collect();
    for w in 1..=layout.max_weight {
        let flow = lie_flow(&g, &layout);
        // a new weight-w term enters the flow linearly at weight w and only
        // touches higher weights through products
        g = g
            .into_iter()
            .zip(target.iter().zip(flow))
            .map(|(gi, (di, fi))| gi + (di.clone() - fi).filter(|e| layout.noise_weight(e) == w))
            .collect();
    }
    Ok(ModifiedField { table: CoefficientTable::from_jets(TableKind::Modified, &method.base, layout, g) })
}

fn first_order_indices(m: usize) -> Vec<MultiIndex> {
    std::iter::once(MultiIndex::drift(m)).chain((1..=m).map(|r| MultiIndex::noise(m, r))).collect()
}

/// `f_α = d_α − ½ Σ_{k¹+k²=α, |k¹|=|k²|=1} d'_{k²} d_{k¹}` for `|α| ≤ 2`.
pub fn modified_coefficients_direct<P: PoissonSystem>(
    method: &CoefficientTable,
    sys: &P,
    alpha: &MultiIndex,
) -> Result<Vec<f64>, ModifiedError> {
    if alpha.order() > 2 || alpha.is_zero() {
        return Err(ModifiedError::OrderTooHigh(alpha.to_string()));
    }
    if method.kind == TableKind::Modified {
        return Err(ModifiedError::Kind { expected: TableKind::Method, got: method.kind });
    }
    method.check_consistency(sys)?;
    let d_alpha = method
        .get(alpha)
        .ok_or(ModifiedError::Weight { got: method.max_weight, need: alpha.weight() })?;
    let mut f = d_alpha.to_vec();
    if alpha.order() == 1 {
        return Ok(f);
    }
    for k1 in first_order_indices(method.m) {
        let Some(k2) = alpha.checked_sub(&k1) else { continue };
        if k2.order() != 1 {
            continue;
        }
        let jac = method
            .jacobian(&k2)
            .ok_or(ModifiedError::Weight { got: method.max_weight, need: k2.weight() + 1 })?;
        let d1 = method.get(&k1).expect("first-order entries exist");
        for (fi, row) in f.iter_mut().zip(&jac) {
            *fi -= 0.5 * row.iter().zip(d1).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(f)
}

/// One `f_α` term of a regrouped field, scaled as `h^{h_exponent} Π ξ^{xi_powers}`
/// with `ξ_r = ΔW_r/√h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegroupedTerm {
    pub alpha: MultiIndex,
    pub h_exponent: f64,
    pub xi_powers: Vec<u32>,
    pub coefficient: Vec<f64>,
}

/// `ẏ = f_h(y) + Σ_r g_{r,h}(y) ΔW_r/h`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegroupedField {
    pub drift: Vec<RegroupedTerm>,
    /// `diffusion[r]` holds the terms of `g_{r+1,h}`.
    pub diffusion: Vec<Vec<RegroupedTerm>>,
}

impl RegroupedField {
    /// Evaluates the regrouped field for a step `h` with normalized samples `xi`.
    pub fn reassemble(&self, h: f64, xi: &[f64]) -> Vec<f64> {
        let eval = |terms: &[RegroupedTerm], out: &mut Vec<f64>, scale: f64| {
            for t in terms {
                let c = scale
                    * h.powf(t.h_exponent)
                    * t.xi_powers.iter().zip(xi).map(|(p, x)| x.powi(*p as i32)).product::<f64>();
                for (o, v) in out.iter_mut().zip(&t.coefficient) {
                    *o += c * v;
                }
            }
        };
        let d = self.drift.first().map_or(0, |t| t.coefficient.len());
        let mut out = vec![0.0; d];
        eval(&self.drift, &mut out, 1.0);
        for (r, terms) in self.diffusion.iter().enumerate() {
            eval(terms, &mut out, xi[r] / h.sqrt());
        }
        out
    }
}

/// Splits the modified field into a drift part (pure `h` terms) and one
/// diffusion series per noise. A term with increments goes to the channel
/// whose nonzero exponent is smallest, ties to the lowest channel.
pub fn regroup_modified_field(field: &ModifiedField) -> RegroupedField {
    let m = field.table.m;
    let mut out = RegroupedField { drift: Vec::new(), diffusion: vec![Vec::new(); m] };
    for (alpha, f) in field.table.entries() {
        let powers = alpha.noise_powers();
        let channel = powers
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0)
            .min_by_key(|(r, p)| (**p, *r))
            .map(|(r, _)| r);
        match channel {
            None => out.drift.push(RegroupedTerm {
                alpha: alpha.clone(),
                h_exponent: f64::from(alpha.h_power()) - 1.0,
                xi_powers: vec![0; m],
                coefficient: f.to_vec(),
            }),
            Some(r) => {
                let mut xi_powers = powers.to_vec();
                xi_powers[r] -= 1;
                let noise: u32 = powers.iter().sum();
                out.diffusion[r].push(RegroupedTerm {
                    alpha: alpha.clone(),
                    h_exponent: f64::from(alpha.h_power()) + (f64::from(noise) - 1.0) / 2.0,
                    xi_powers,
                    coefficient: f.to_vec(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EffectiveOrder {
    pub p: u32,
    /// No weight class `2..=max_weight` had a nonzero entry; `p` is the max weight.
    pub all_vanish: bool,
}

/// Smallest weight class `j ≥ 2` holding an `f_α` with `|α| ≥ 2` above `tolerance`.
pub fn effective_order(field: &ModifiedField, tolerance: f64) -> Result<EffectiveOrder, ModifiedError> {
    let w = field.max_weight();
    if w < 4 {
        return Err(ModifiedError::Weight { got: w, need: 4 });
    }
    for j in 2..=w {
        let nonzero = field
            .table
            .entries()
            .filter(|(a, _)| a.weight() == j && a.order() >= 2)
            .any(|(_, f)| f.iter().any(|v| v.abs() > tolerance));
        if nonzero {
            return Ok(EffectiveOrder { p: j, all_vanish: false });
        }
    }
    Ok(EffectiveOrder { p: w, all_vanish: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{Heun, MbSplitting, Midpoint, WongZakaiFlow};
    use crate::modified::{flow_coefficients, method_coefficients};
    use crate::systems::Builtin;
    use proptest::prelude::*;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    fn max_gap(a: &CoefficientTable, b: &CoefficientTable) -> f64 {
        a.entries()
            .flat_map(|(alpha, v)| v.iter().zip(b.get(alpha).unwrap()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn splitting_modified_coefficients() {
        let sys = Builtin::maxwell_bloch(1.0, 1.0);
        let y = [1.0, 2.0, 3.0];
        for frozen in [false, true] {
            let t = method_coefficients(&MbSplitting { frozen }, &sys, &y, 6).unwrap();
            let f = modified_coefficients_matching(&t, &sys).unwrap();
            let f200 = f.get(&mi(&[2, 0, 0])).unwrap();
            assert!(f200.iter().zip([1.5, -3.0, 2.0]).all(|(a, b)| (a - b).abs() < 1e-12), "{f200:?}");
            assert!(f.get(&mi(&[0, 2, 0])).unwrap().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn direct_formula_agrees_on_second_order_indices() {
        let sys = Builtin::maxwell_bloch(0.8, 1.3);
        let y = [0.5, -0.8, 0.6];
        let t = method_coefficients(&MbSplitting::default(), &sys, &y, 5).unwrap();
        let f = modified_coefficients_matching(&t, &sys).unwrap();
        for (alpha, fm) in f.table().entries().filter(|(a, _)| a.order() <= 2) {
            let fd = modified_coefficients_direct(&t, &sys, alpha).unwrap();
            for (a, b) in fd.iter().zip(fm) {
                assert!((a - b).abs() < 1e-12, "{alpha}");
            }
        }
        assert!(matches!(
            modified_coefficients_direct(&t, &sys, &mi(&[0, 3, 0])),
            Err(ModifiedError::OrderTooHigh(_))
        ));
    }

    #[test]
    fn direct_formula_at_the_worked_point() {
        let sys = Builtin::maxwell_bloch(1.0, 1.0);
        let t = method_coefficients(&MbSplitting::default(), &sys, &[1.0, 2.0, 3.0], 4).unwrap();
        let f = modified_coefficients_direct(&t, &sys, &mi(&[2, 0, 0])).unwrap();
        assert!(f.iter().zip([1.5, -3.0, 2.0]).all(|(a, b)| (a - b).abs() < 1e-13));
        let e1 = modified_coefficients_direct(&t, &sys, &mi(&[0, 1, 0])).unwrap();
        assert_eq!(e1, t.get(&mi(&[0, 1, 0])).unwrap());
    }

    #[test]
    fn round_trip_reproduces_the_method() {
        let sys = Builtin::two_noise_doublewell(0.3, 0.2);
        let y = [0.7, -0.4];
        for t in [
            method_coefficients(&Midpoint::default(), &sys, &y, 6).unwrap(),
            method_coefficients(&Heun, &sys, &y, 6).unwrap(),
        ] {
            let f = modified_coefficients_matching(&t, &sys).unwrap();
            assert!(max_gap(&f.flow_table(), &t) < 1e-12);
        }
    }

    #[test]
    fn exact_flow_has_a_trivial_modified_field() {
        let sys = Builtin::maxwell_bloch(0.6, 0.9);
        let y = [0.5, -0.8, 0.6];
        let t = flow_coefficients(&sys, &y, 6).unwrap();
        let f = modified_coefficients_matching(&t, &sys).unwrap();
        assert!(f.table().entries().filter(|(a, _)| a.order() >= 2).all(|(_, v)| v.iter().all(|c| c.abs() < 1e-12)));
        let e = effective_order(&f, 1e-10).unwrap();
        assert!(e.all_vanish && e.p == 6);
    }

    #[test]
    fn lie_flow_of_a_linear_field() {
        // g = hA(y+δ); the flow is e^{hA}(y+δ) − (y+δ), h^k coefficient A^k y/k!
        let layout = ExpansionShape::new(0, 2, 6);
        let h = layout.h();
        let y = layout.displaced(&[0.3, -0.7]);
        let g = vec![-(h.clone() * y[1].clone()), h * y[0].clone()];
        let phi = lie_flow(&g, &layout);
        let a = |v: [f64; 2]| [-v[1], v[0]];
        let mut v = [0.3, -0.7];
        let mut fact = 1.0;
        for k in 1..=3u32 {
            v = a(v);
            fact *= f64::from(k);
            let e = [k, 0, 0];
            assert!((phi[0].coefficient(&e) - v[0] / fact).abs() < 1e-15);
            assert!((phi[1].coefficient(&e) - v[1] / fact).abs() < 1e-15);
        }
    }

    #[test]
    fn splitting_has_effective_order_two() {
        let sys = Builtin::maxwell_bloch(1.0, 1.0);
        let t = method_coefficients(&MbSplitting::default(), &sys, &[1.0, 2.0, 3.0], 6).unwrap();
        let f = modified_coefficients_matching(&t, &sys).unwrap();
        assert!(f.get(&mi(&[0, 1, 1])).unwrap().iter().any(|v| v.abs() > 1e-3));
        assert_eq!(effective_order(&f, 1e-10).unwrap(), EffectiveOrder { p: 2, all_vanish: false });
        let low = modified_coefficients_matching(&method_coefficients(&MbSplitting::default(), &sys, &[1.0, 2.0, 3.0], 3).unwrap(), &sys).unwrap();
        assert!(matches!(effective_order(&low, 1e-10), Err(ModifiedError::Weight { .. })));
    }

    #[test]
    fn regrouping_with_two_noises() {
        let sys = Builtin::maxwell_bloch(0.8, 1.3);
        let t = method_coefficients(&MbSplitting::default(), &sys, &[0.5, -0.8, 0.6], 4).unwrap();
        let f = modified_coefficients_matching(&t, &sys).unwrap();
        let g = regroup_modified_field(&f);
        let find = |terms: &[RegroupedTerm], a: &[u32]| terms.iter().find(|t| t.alpha == mi(a)).cloned().unwrap();
        // f_h = f + h f₂⁰
        assert_eq!(find(&g.drift, &[1, 0, 0]).h_exponent, 0.0);
        assert_eq!(find(&g.drift, &[2, 0, 0]).h_exponent, 1.0);
        // g_{1,h} = g₁ + √h ξ₁ f₂¹ + √h ξ₂ f₂^{1,2} + h f₂^{0,1}
        let t = find(&g.diffusion[0], &[0, 1, 0]);
        assert_eq!((t.h_exponent, t.xi_powers.clone()), (0.0, vec![0, 0]));
        let t = find(&g.diffusion[0], &[0, 2, 0]);
        assert_eq!((t.h_exponent, t.xi_powers.clone()), (0.5, vec![1, 0]));
        let t = find(&g.diffusion[0], &[0, 1, 1]);
        assert_eq!((t.h_exponent, t.xi_powers.clone()), (0.5, vec![0, 1]));
        let t = find(&g.diffusion[0], &[1, 1, 0]);
        assert_eq!((t.h_exponent, t.xi_powers.clone()), (1.0, vec![0, 0]));
        // g_{2,h} = g₂ + √h ξ₂ f₂² + h f₂^{0,2}
        let t = find(&g.diffusion[1], &[0, 0, 2]);
        assert_eq!((t.h_exponent, t.xi_powers.clone()), (0.5, vec![0, 1]));
        let t = find(&g.diffusion[1], &[1, 0, 1]);
        assert_eq!((t.h_exponent, t.xi_powers.clone()), (1.0, vec![0, 0]));
        // minimal nonzero exponent wins over the lower channel
        let t = find(&g.diffusion[1], &[0, 2, 1]);
        assert_eq!(t.xi_powers, vec![2, 0]);
        assert_eq!(g.drift.len() + g.diffusion.iter().map(Vec::len).sum::<usize>(), f.table().entries().count());
    }

    #[test]
    fn weight_one_field_regroups_to_itself() {
        let sys = Builtin::pendulum_m_noises(&[0.3, 0.2]);
        let t = flow_coefficients(&sys, &[0.4, 1.1], 2).unwrap();
        let f = modified_coefficients_matching(&t, &sys).unwrap();
        let g = regroup_modified_field(&f);
        assert_eq!(g.drift.len(), 1);
        assert_eq!(g.drift[0].coefficient, crate::systems::drift(&sys, &[0.4, 1.1]).unwrap());
        for r in 0..2 {
            let nonzero: Vec<_> = g.diffusion[r].iter().filter(|t| t.coefficient.iter().any(|c| c.abs() > 1e-14)).collect();
            assert_eq!(nonzero.len(), 1);
            assert_eq!(nonzero[0].alpha, MultiIndex::noise(2, r + 1));
        }
    }

    #[test]
    fn rejects_modified_input() {
        let sys = Builtin::maxwell_bloch(0.5, 0.5);
        let t = flow_coefficients(&sys, &[0.5, -0.8, 0.6], 3).unwrap();
        let f = modified_coefficients_matching(&t, &sys).unwrap();
        assert!(matches!(modified_coefficients_matching(f.table(), &sys), Err(ModifiedError::Kind { .. })));
    }

    #[test]
    fn coefficients_stay_finite_with_geometric_envelope() {
        let sys = Builtin::maxwell_bloch(0.5, 0.5);
        let t = method_coefficients(&MbSplitting::default(), &sys, &[0.5, -0.8, 0.6], 6).unwrap();
        let f = modified_coefficients_matching(&t, &sys).unwrap();
        for table in [&t, f.table()] {
            let mut envelope = vec![0.0f64; 7];
            for (a, v) in table.entries() {
                assert!(v.iter().all(|c| c.is_finite()));
                envelope[a.weight() as usize] = v.iter().fold(envelope[a.weight() as usize], |m, c| m.max(c.abs()));
            }
            // bounded by C·R^w for a modest radius
            assert!((1..=6).all(|w| envelope[w] <= 10.0 * 4f64.powi(w as i32)), "{envelope:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn regrouped_field_reassembles(h in 0.01f64..0.5, x1 in -2.0f64..2.0, x2 in -2.0f64..2.0) {
            let sys = Builtin::maxwell_bloch(0.8, 1.3);
            let t = method_coefficients(&MbSplitting::default(), &sys, &[0.5, -0.8, 0.6], 5).unwrap();
            let f = modified_coefficients_matching(&t, &sys).unwrap();
            let g = regroup_modified_field(&f);
            let direct = f.eval(h, &[h.sqrt() * x1, h.sqrt() * x2]);
            let back = g.reassemble(h, &[x1, x2]);
            for (a, b) in direct.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn modified_flow_matches_method(y1 in -1.5f64..1.5, y2 in -1.5f64..1.5) {
            let sys = Builtin::pendulum_m_noises(&[0.4]);
            let t = method_coefficients(&Midpoint::default(), &sys, &[y1, y2], 5).unwrap();
            let f = modified_coefficients_matching(&t, &sys).unwrap();
            prop_assert!(max_gap(&f.flow_table(), &t) < 1e-11);
        }
    }

    #[test]
    fn wz_flow_as_a_method_is_exact() {
        let sys = Builtin::lotka_volterra(&[0.3]);
        let t = method_coefficients(&WongZakaiFlow { order: 6, substeps: 1 }, &sys, &[1.2, 0.8], 6).unwrap();
        let f = modified_coefficients_matching(&t, &sys).unwrap();
        assert!(f.table().entries().filter(|(a, _)| a.order() >= 2).all(|(_, v)| v.iter().all(|c| c.abs() < 1e-12)));
    }
}
