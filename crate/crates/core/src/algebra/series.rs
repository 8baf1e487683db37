use std::ops::{Add, Mul, Neg, Sub};

use super::{AlgebraError, Scalar};

/// Truncated univariate Taylor series `Σ_k c_k τ^k` with coefficients in any
/// [`Scalar`], so it nests over [`Jet`](super::Jet)s.
///
/// A series of length 1 is a constant; binary operations extend to the
/// longer operand, so all series in one computation should share a length.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Series<S> {
    pub fn new(coeffs: Vec<S>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        Self { coeffs }
    }

    pub fn lift(c: S) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `c + τ` truncated after degree `degree`.
    pub fn variable(c: S, degree: usize) -> Self {
        let mut coeffs = vec![S::zero(); degree + 1];
        coeffs[0] = c;
        if degree > 0 {
            coeffs[1] = S::constant(1.0);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficient(&self, k: usize) -> S {
        self.coeffs.get(k).cloned().unwrap_or_else(S::zero)
    }

    /// `Σ_k c_k τ^k` at `τ`.
    pub fn eval(&self, tau: f64) -> S {
        self.coeffs
            .iter()
            .rev()
            .fold(S::zero(), |acc, c| acc * tau + c.clone())
    }

    pub fn scale(&self, s: &S) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect() }
    }

    fn zip(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self { coeffs: (0..n).map(|k| f(self.coefficient(k), other.coefficient(k))).collect() }
    }

    fn map_first(mut self, f: impl FnOnce(S) -> S) -> Self {
        let c = self.coeffs[0].clone();
        self.coeffs[0] = f(c);
        self
    }

    /// `Σ_{j=1}^{k} j u_j v_{k−j}`, the convolution behind the ODE-based
    /// recurrences for elementary functions.
    fn weighted_conv(&self, v: &[S], k: usize) -> S {
        (1..=k).fold(S::zero(), |acc, j| acc + self.coeffs[j].clone() * v[k - j].clone() * j as f64)
    }

    fn sin_cos(&self) -> (Self, Self) {
        let n = self.coeffs.len();
        let mut s = vec![self.coeffs[0].sin()];
        let mut c = vec![self.coeffs[0].cos()];
        for k in 1..n {
            let sk = self.weighted_conv(&c, k) * (1.0 / k as f64);
            let ck = -self.weighted_conv(&s, k) * (1.0 / k as f64);
            s.push(sk);
            c.push(ck);
        }
        (Self { coeffs: s }, Self { coeffs: c })
    }
}

impl<S: Scalar> Add for Series<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl<S: Scalar> Sub for Series<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl<S: Scalar> Neg for Series<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { coeffs: self.coeffs.into_iter().map(|c| -c).collect() }
    }
}

impl<S: Scalar> Mul for Series<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if rhs.coeffs.len() == 1 {
            return self.scale(&rhs.coeffs[0]);
        }
        if self.coeffs.len() == 1 {
            return rhs.scale(&self.coeffs[0]);
        }
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                (0..=k).fold(S::zero(), |acc, j| {
                    match (self.coeffs.get(j), rhs.coeffs.get(k - j)) {
                        (Some(a), Some(b)) => acc + a.clone() * b.clone(),
                        _ => acc,
                    }
                })
            })
            .collect();
        Self { coeffs }
    }
}

impl<S: Scalar> Add<f64> for Series<S> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        self.map_first(|c| c + rhs)
    }
}

impl<S: Scalar> Sub<f64> for Series<S> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self.map_first(|c| c - rhs)
    }
}

impl<S: Scalar> Mul<f64> for Series<S> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self { coeffs: self.coeffs.into_iter().map(|c| c * rhs).collect() }
    }
}

impl<S: Scalar> Scalar for Series<S> {
    fn constant(x: f64) -> Self {
        Self::lift(S::constant(x))
    }

    fn value(&self) -> f64 {
        self.coeffs[0].value()
    }

    fn magnitude(&self) -> f64 {
        self.coeffs.iter().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    fn cos(&self) -> Self {
        self.sin_cos().1
    }

    fn sin(&self) -> Self {
        self.sin_cos().0
    }

    fn exp(&self) -> Self {
        let mut e = vec![self.coeffs[0].exp()];
        for k in 1..self.coeffs.len() {
            let ek = self.weighted_conv(&e, k) * (1.0 / k as f64);
            e.push(ek);
        }
        Self { coeffs: e }
    }

    fn try_ln(&self) -> Result<Self, AlgebraError> {
        let u0 = &self.coeffs[0];
        let inv = u0.try_recip()?;
        let mut l = vec![u0.try_ln()?];
        for k in 1..self.coeffs.len() {
            // k u_0 l_k = k u_k − Σ_{j=1}^{k−1} j l_j u_{k−j}
            let mut acc = self.coeffs[k].clone() * k as f64;
            for j in 1..k {
                acc = acc - l[j].clone() * self.coeffs[k - j].clone() * j as f64;
            }
            l.push(acc * inv.clone() * (1.0 / k as f64));
        }
        Ok(Self { coeffs: l })
    }

    fn try_sqrt(&self) -> Result<Self, AlgebraError> {
        let s0 = self.coeffs[0].try_sqrt()?;
        if self.coeffs.len() == 1 {
            return Ok(Self::lift(s0));
        }
        let inv = (s0.clone() * 2.0).try_recip()?;
        let mut s = vec![s0];
        for k in 1..self.coeffs.len() {
            let mut acc = self.coeffs[k].clone();
            for j in 1..k {
                acc = acc - s[j].clone() * s[k - j].clone();
            }
            s.push(acc * inv.clone());
        }
        Ok(Self { coeffs: s })
    }

    fn try_recip(&self) -> Result<Self, AlgebraError> {
        let inv = self.coeffs[0].try_recip()?;
        let mut r = vec![inv.clone()];
        for k in 1..self.coeffs.len() {
            let acc = (1..=k).fold(S::zero(), |acc, j| acc + self.coeffs[j].clone() * r[k - j].clone());
            r.push(-(acc * inv.clone()));
        }
        Ok(Self { coeffs: r })
    }
}
