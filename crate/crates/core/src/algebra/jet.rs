use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::{AlgebraError, Scalar};

/// Variables, weights and truncation shared by a family of jets.
///
/// The admissible monomials (weighted degree `≤ max_weight`) are enumerated
/// once, sorted by weight; a jet stores one coefficient per admissible
/// monomial. The product table maps every admissible pair to the index of
/// its product, or is absent when the product overflows the truncation.
pub struct JetShape {
    weights: Vec<u32>,
    max_weight: u32,
    monomials: Vec<Vec<u32>>,
    monomial_weight: Vec<u32>,
    index: HashMap<Vec<u32>, usize>,
    /// `product[i][j]` for every `j` of weight `≤ max_weight − weight(i)`.
    product: Vec<Vec<u32>>,
    /// `lowered[v][i]`: index of monomial `i` with exponent `v` decreased by one.
    lowered: Vec<Vec<Option<u32>>>,
}

impl JetShape {
    /// Builds a shape. Every weight must be at least 1.
    pub fn new(weights: Vec<u32>, max_weight: u32) -> Arc<Self> {
        assert!(weights.iter().all(|&w| w >= 1), "jet variable weights must be >= 1");
        let nvars = weights.len();
        let mut monomials = Vec::new();
        let mut current = vec![0u32; nvars];
        enumerate(&weights, 0, max_weight, &mut current, &mut monomials);
        let weight_of = |e: &[u32]| e.iter().zip(&weights).map(|(a, w)| a * w).sum::<u32>();
        monomials.sort_by(|a, b| weight_of(a).cmp(&weight_of(b)).then_with(|| b.cmp(a)));
        let monomial_weight: Vec<u32> = monomials.iter().map(|e| weight_of(e)).collect();
        let index: HashMap<Vec<u32>, usize> =
            monomials.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut weight_end = vec![0usize; max_weight as usize + 1];
        for (w, end) in weight_end.iter_mut().enumerate() {
            *end = monomial_weight.iter().take_while(|&&mw| mw as usize <= w).count();
        }
        let mut product = Vec::with_capacity(monomials.len());
        let mut scratch = vec![0u32; nvars];
        for (i, a) in monomials.iter().enumerate() {
            let lim = weight_end[(max_weight - monomial_weight[i]) as usize];
            let row = (0..lim)
                .map(|j| {
                    for v in 0..nvars {
                        scratch[v] = a[v] + monomials[j][v];
                    }
                    index[&scratch] as u32
                })
                .collect();
            product.push(row);
        }
        let lowered = (0..nvars)
            .map(|v| {
                monomials
                    .iter()
                    .map(|e| {
                        if e[v] == 0 {
                            return None;
                        }
                        let mut low = e.clone();
                        low[v] -= 1;
                        Some(index[&low] as u32)
                    })
                    .collect()
            })
            .collect();
        Arc::new(Self {
            weights,
            max_weight,
            monomials,
            monomial_weight,
            index,
            product,
            lowered,
        })
    }

    pub fn nvars(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn max_weight(&self) -> u32 {
        self.max_weight
    }

    /// Number of admissible monomials (including the constant one).
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Vec<u32>] {
        &self.monomials
    }

    pub fn monomial_weight(&self, i: usize) -> u32 {
        self.monomial_weight[i]
    }

    pub fn index_of(&self, exponents: &[u32]) -> Option<usize> {
        self.index.get(exponents).copied()
    }

    fn same(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
            || (self.weights == other.weights && self.max_weight == other.max_weight)
    }
}

impl fmt::Debug for JetShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetShape")
            .field("weights", &self.weights)
            .field("max_weight", &self.max_weight)
            .field("monomials", &self.monomials.len())
            .finish()
    }
}

fn enumerate(weights: &[u32], pos: usize, budget: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos == weights.len() {
        out.push(cur.clone());
        return;
    }
    let mut e = 0;
    while e * weights[pos] <= budget {
        cur[pos] = e;
        enumerate(weights, pos + 1, budget - e * weights[pos], cur, out);
        e += 1;
    }
    cur[pos] = 0;
}

/// Elementary functions available for jet composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Cos,
    Sin,
    Exp,
    Ln,
    Sqrt,
    Recip,
}

/// Truncated multivariate Taylor polynomial over a [`JetShape`].
///
/// A jet without a shape is a plain constant and combines with jets of any
/// shape.
#[derive(Clone)]
pub struct Jet {
    shape: Option<Arc<JetShape>>,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant_in(shape: &Arc<JetShape>, value: f64) -> Self {
        let mut coeffs = vec![0.0; shape.len()];
        coeffs[0] = value;
        Self { shape: Some(shape.clone()), coeffs }
    }

    /// `value + x_var`.
    pub fn variable(shape: &Arc<JetShape>, var: usize, value: f64) -> Self {
        Self::variable_scaled(shape, var, value, 1.0)
    }

    /// `value + scale · x_var`.
    pub fn variable_scaled(shape: &Arc<JetShape>, var: usize, value: f64, scale: f64) -> Self {
        assert!(var < shape.nvars());
        let mut j = Self::constant_in(shape, value);
        let mut e = vec![0; shape.nvars()];
        e[var] = 1;
        if let Some(i) = shape.index_of(&e) {
            j.coeffs[i] = scale;
        }
        j
    }

    /// Builds a jet from `(exponents, coefficient)` pairs; pairs outside the
    /// truncation are dropped.
    pub fn from_terms<'a>(shape: &Arc<JetShape>, terms: impl IntoIterator<Item = (&'a [u32], f64)>) -> Self {
        let mut j = Self::constant_in(shape, 0.0);
        for (e, c) in terms {
            if let Some(i) = shape.index_of(e) {
                j.coeffs[i] += c;
            }
        }
        j
    }

    pub fn shape(&self) -> Option<&Arc<JetShape>> {
        self.shape.as_ref()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        match &self.shape {
            None => {
                if exponents.iter().all(|&e| e == 0) {
                    self.coeffs[0]
                } else {
                    0.0
                }
            }
            Some(s) => s.index_of(exponents).map_or(0.0, |i| self.coeffs[i]),
        }
    }

    /// Nonzero terms as `(exponents, coefficient)`, constant term included.
    pub fn terms(&self) -> Vec<(Vec<u32>, f64)> {
        match &self.shape {
            None => vec![(Vec::new(), self.coeffs[0])],
            Some(s) => s
                .monomials
                .iter()
                .zip(&self.coeffs)
                .filter(|(_, c)| **c != 0.0)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// Raw coefficient slice, aligned with [`JetShape::monomials`].
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Keeps only the monomials for which `keep` returns true.
    pub fn filter(&self, keep: impl Fn(&[u32]) -> bool) -> Self {
        match &self.shape {
            None => {
                if keep(&[]) {
                    self.clone()
                } else {
                    Self::from(0.0)
                }
            }
            Some(s) => {
                let coeffs = s
                    .monomials
                    .iter()
                    .zip(&self.coeffs)
                    .map(|(e, c)| if keep(e) { *c } else { 0.0 })
                    .collect();
                Self { shape: self.shape.clone(), coeffs }
            }
        }
    }

    /// Partial derivative with respect to variable `var`. Terms of the top
    /// weight lose exactness after differentiation; callers multiply by a
    /// factor of positive weight before relying on them.
    pub fn derivative(&self, var: usize) -> Self {
        match &self.shape {
            None => Self::from(0.0),
            Some(s) => {
                let mut out = vec![0.0; s.len()];
                for (i, c) in self.coeffs.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    if let Some(lo) = s.lowered[var][i] {
                        out[lo as usize] += c * f64::from(s.monomials[i][var]);
                    }
                }
                Self { shape: self.shape.clone(), coeffs: out }
            }
        }
    }

    /// Composes an elementary function with this jet by Taylor expansion of
    /// the function around the constant term.
    pub fn compose(&self, f: Elementary) -> Result<Self, AlgebraError> {
        let c = self.coeffs[0];
        let max_k = match &self.shape {
            None => 0,
            Some(s) => s.max_weight / s.weights.iter().copied().min().unwrap_or(1),
        } as usize;
        let a = taylor_coefficients(f, c, max_k)?;
        if max_k == 0 {
            return Ok(Self { shape: self.shape.clone(), coeffs: self.constant_like(a[0]) });
        }
        let mut u = self.clone();
        u.coeffs[0] = 0.0;
        let mut acc = Self { shape: self.shape.clone(), coeffs: self.constant_like(a[max_k]) };
        for k in (0..max_k).rev() {
            acc = acc * u.clone() + a[k];
        }
        Ok(acc)
    }

    fn constant_like(&self, v: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.coeffs.len()];
        out[0] = v;
        out
    }

    fn merged_shape(&self, other: &Self) -> Option<Arc<JetShape>> {
        match (&self.shape, &other.shape) {
            (Some(a), Some(b)) => {
                assert!(a.same(b), "jets with different shapes combined");
                Some(a.clone())
            }
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        }
    }
}

fn taylor_coefficients(f: Elementary, c: f64, k_max: usize) -> Result<Vec<f64>, AlgebraError> {
    let mut a = Vec::with_capacity(k_max + 1);
    let mut fact = 1.0;
    match f {
        Elementary::Cos | Elementary::Sin => {
            let (s, co) = c.sin_cos();
            let cycle = if f == Elementary::Cos { [co, -s, -co, s] } else { [s, co, -s, -co] };
            for k in 0..=k_max {
                if k > 0 {
                    fact *= k as f64;
                }
                a.push(cycle[k % 4] / fact);
            }
        }
        Elementary::Exp => {
            let e = c.exp();
            for k in 0..=k_max {
                if k > 0 {
                    fact *= k as f64;
                }
                a.push(e / fact);
            }
        }
        Elementary::Ln => {
            if c <= 0.0 {
                return Err(AlgebraError::Domain { function: "ln", at: c });
            }
            a.push(c.ln());
            for k in 1..=k_max {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                a.push(sign / (k as f64 * c.powi(k as i32)));
            }
        }
        Elementary::Sqrt => {
            if c < 0.0 || (c == 0.0 && k_max > 0) {
                return Err(AlgebraError::Domain { function: "sqrt", at: c });
            }
            // binom(1/2, k) c^{1/2 - k}
            let mut binom = 1.0;
            for k in 0..=k_max {
                if k > 0 {
                    binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
                }
                a.push(binom * c.sqrt() / c.powi(k as i32));
            }
        }
        Elementary::Recip => {
            if c == 0.0 {
                return Err(AlgebraError::Domain { function: "recip", at: c });
            }
            for k in 0..=k_max {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                a.push(sign / c.powi(k as i32 + 1));
            }
        }
    }
    Ok(a)
}

impl From<f64> for Jet {
    fn from(x: f64) -> Self {
        Self { shape: None, coeffs: vec![x] }
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if e.iter().all(|&x| x == 0) {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}·x^{e:?}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).coeffs.iter().all(|c| *c == 0.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        match (self.shape.is_some(), rhs.shape.is_some()) {
            (_, false) => self + rhs.coeffs[0],
            (false, true) => rhs + self.coeffs[0],
            (true, true) => {
                let shape = self.merged_shape(&rhs);
                let mut coeffs = self.coeffs;
                for (a, b) in coeffs.iter_mut().zip(&rhs.coeffs) {
                    *a += b;
                }
                Jet { shape, coeffs }
            }
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for c in &mut self.coeffs {
            *c = -*c;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        match (self.shape.is_some(), rhs.shape.is_some()) {
            (_, false) => self * rhs.coeffs[0],
            (false, true) => rhs * self.coeffs[0],
            (true, true) => {
                let shape = self.merged_shape(&rhs).expect("both shaped");
                let mut out = vec![0.0; shape.len()];
                for (i, &a) in self.coeffs.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let row = &shape.product[i];
                    for (j, &b) in rhs.coeffs[..row.len()].iter().enumerate() {
                        if b != 0.0 {
                            out[row[j] as usize] += a * b;
                        }
                    }
                }
                Jet { shape: Some(shape), coeffs: out }
            }
        }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for c in &mut self.coeffs {
            *c *= rhs;
        }
        self
    }
}

impl Scalar for Jet {
    fn constant(x: f64) -> Self {
        Jet::from(x)
    }

    fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn magnitude(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn cos(&self) -> Self {
        self.compose(Elementary::Cos).expect("cos is entire")
    }

    fn sin(&self) -> Self {
        self.compose(Elementary::Sin).expect("sin is entire")
    }

    fn exp(&self) -> Self {
        self.compose(Elementary::Exp).expect("exp is entire")
    }

    fn try_ln(&self) -> Result<Self, AlgebraError> {
        self.compose(Elementary::Ln)
    }

    fn try_sqrt(&self) -> Result<Self, AlgebraError> {
        self.compose(Elementary::Sqrt)
    }

    fn try_recip(&self) -> Result<Self, AlgebraError> {
        self.compose(Elementary::Recip)
    }
}
