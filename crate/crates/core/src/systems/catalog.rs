use std::f64::consts::PI;

use rand::{Rng, RngCore};

use super::{PoissonSystem, SystemError};
use crate::algebra::Scalar;

/// Closed-form Hamiltonians on canonical coordinates `y = (q, p)`, summed
/// over the `k` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianForm {
    /// `½|p|² − Σ cos q_i`
    Pendulum,
    /// `½(|q|² + |p|²)`
    Harmonic,
    /// `½|p|² + ¼Σ q_i⁴ − ½|q|²`
    DoubleWell,
    Zero,
}

/// `scale · form(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalHamiltonian {
    pub form: HamiltonianForm,
    pub scale: f64,
}

impl CanonicalHamiltonian {
    pub fn new(form: HamiltonianForm, scale: f64) -> Self {
        Self { form, scale }
    }

    fn eval<S: Scalar>(&self, y: &[S]) -> S {
        let k = y.len() / 2;
        let (q, p) = y.split_at(k);
        let half_p2 = p.iter().fold(S::zero(), |a, x| a + x.square()) * 0.5;
        let v = match self.form {
            HamiltonianForm::Zero => return S::zero(),
            HamiltonianForm::Pendulum => q.iter().fold(half_p2, |a, x| a - x.cos()),
            HamiltonianForm::Harmonic => q.iter().fold(half_p2, |a, x| a + x.square() * 0.5),
            HamiltonianForm::DoubleWell => q.iter().fold(half_p2, |a, x| {
                let x2 = x.square();
                a + x2.square() * 0.25 - x2 * 0.5
            }),
        };
        v * self.scale
    }

    fn gradient<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let k = y.len() / 2;
        let (q, p) = y.split_at(k);
        let dq = q.iter().map(|x| match self.form {
            HamiltonianForm::Zero => S::zero(),
            HamiltonianForm::Pendulum => x.sin() * self.scale,
            HamiltonianForm::Harmonic => x.clone() * self.scale,
            HamiltonianForm::DoubleWell => (x.square() * x.clone() - x.clone()) * self.scale,
        });
        let dp = p.iter().map(|x| match self.form {
            HamiltonianForm::Zero => S::zero(),
            _ => x.clone() * self.scale,
        });
        dq.chain(dp).collect()
    }
}

/// Canonical stochastic Hamiltonian system: `d = 2k`, `B ≡ J⁻¹ = [[0, −I], [I, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Canonical {
    label: String,
    k: usize,
    /// `[𝓗, H_1, …, H_m]`
    hamiltonians: Vec<CanonicalHamiltonian>,
}

impl Canonical {
    pub fn new(
        label: impl Into<String>,
        k: usize,
        drift: CanonicalHamiltonian,
        noises: Vec<CanonicalHamiltonian>,
    ) -> Result<Self, SystemError> {
        if k == 0 {
            return Err(SystemError::Parameters("canonical systems need k >= 1".into()));
        }
        let mut hamiltonians = vec![drift];
        hamiltonians.extend(noises);
        Ok(Self { label: label.into(), k, hamiltonians })
    }

    pub fn hamiltonians(&self) -> &[CanonicalHamiltonian] {
        &self.hamiltonians
    }

    fn get(&self, k: usize) -> Result<&CanonicalHamiltonian, SystemError> {
        self.hamiltonians
            .get(k)
            .ok_or(SystemError::HamiltonianIndex { k, m: self.hamiltonians.len() - 1 })
    }
}

impl PoissonSystem for Canonical {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn dim(&self) -> usize {
        2 * self.k
    }

    fn noise_count(&self) -> usize {
        self.hamiltonians.len() - 1
    }

    fn structure_matrix<S: Scalar>(&self, _y: &[S]) -> Result<Vec<Vec<S>>, SystemError> {
        let d = 2 * self.k;
        let mut b = vec![vec![S::zero(); d]; d];
        for i in 0..self.k {
            b[i][self.k + i] = S::constant(-1.0);
            b[self.k + i][i] = S::constant(1.0);
        }
        Ok(b)
    }

    fn hamiltonian<S: Scalar>(&self, k: usize, y: &[S]) -> Result<S, SystemError> {
        Ok(self.get(k)?.eval(y))
    }

    fn hamiltonian_gradient<S: Scalar>(&self, k: usize, y: &[S]) -> Result<Vec<S>, SystemError> {
        Ok(self.get(k)?.gradient(y))
    }

    fn is_canonical(&self) -> bool {
        true
    }

    fn apply_structure<S: Scalar>(&self, _y: &[S], v: &[S]) -> Result<Vec<S>, SystemError> {
        let (q, p) = v.split_at(self.k);
        Ok(p.iter().map(|x| -x.clone()).chain(q.iter().cloned()).collect())
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut y: Vec<f64> = (0..self.k).map(|_| rng.random_range(-PI..PI)).collect();
        y.extend((0..self.k).map(|_| rng.random_range(-2.0..2.0)));
        y
    }
}

/// Two-dimensional Lotka-Volterra system with `B = [[0, y₁y₂], [−y₁y₂, 0]]`,
/// `𝓗 = y₁ − ln y₁ + y₂ − ln y₂` and `H_r = σ_r(ln y₂ − ln y₁)`.
///
/// Defined on the open positive quadrant only.
#[derive(Debug, Clone, PartialEq)]
pub struct LotkaVolterra {
    pub sigma: Vec<f64>,
}

impl LotkaVolterra {
    fn guard<S: Scalar>(&self, y: &[S]) -> Result<(), SystemError> {
        if y.iter().all(|v| v.value() > 0.0) {
            Ok(())
        } else {
            let at: Vec<f64> = y.iter().map(Scalar::value).collect();
            Err(SystemError::Domain {
                system: "lotka-volterra".into(),
                reason: format!("coordinates must be positive, got {at:?}"),
            })
        }
    }
}

impl PoissonSystem for LotkaVolterra {
    fn label(&self) -> String {
        "lotka-volterra".into()
    }

    fn dim(&self) -> usize {
        2
    }

    fn noise_count(&self) -> usize {
        self.sigma.len()
    }

    fn structure_matrix<S: Scalar>(&self, y: &[S]) -> Result<Vec<Vec<S>>, SystemError> {
        self.guard(y)?;
        let c = y[0].clone() * y[1].clone();
        Ok(vec![vec![S::zero(), c.clone()], vec![-c, S::zero()]])
    }

    fn hamiltonian<S: Scalar>(&self, k: usize, y: &[S]) -> Result<S, SystemError> {
        self.guard(y)?;
        let l1 = y[0].try_ln()?;
        let l2 = y[1].try_ln()?;
        match k {
            0 => Ok(y[0].clone() - l1 + y[1].clone() - l2),
            r if r <= self.sigma.len() => Ok((l2 - l1) * self.sigma[r - 1]),
            _ => Err(SystemError::HamiltonianIndex { k, m: self.sigma.len() }),
        }
    }

    fn hamiltonian_gradient<S: Scalar>(&self, k: usize, y: &[S]) -> Result<Vec<S>, SystemError> {
        self.guard(y)?;
        let i1 = y[0].try_recip()?;
        let i2 = y[1].try_recip()?;
        match k {
            0 => Ok(vec![-i1 + 1.0, -i2 + 1.0]),
            r if r <= self.sigma.len() => {
                let s = self.sigma[r - 1];
                Ok(vec![-i1 * s, i2 * s])
            }
            _ => Err(SystemError::HamiltonianIndex { k, m: self.sigma.len() }),
        }
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..2).map(|_| rng.random_range(0.2..3.0)).collect()
    }
}

/// Stochastic Maxwell-Bloch system on `R³`:
/// `B = [[0, −y₃, y₂], [y₃, 0, 0], [−y₂, 0, 0]]`, `𝓗 = ½y₁² + y₃`,
/// `H₁ = σ₁·½y₁²`, `H₂ = σ₂·y₃`, Casimir `C = ½(y₂² + y₃²)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellBloch {
    pub sigma1: f64,
    pub sigma2: f64,
}

impl PoissonSystem for MaxwellBloch {
    fn label(&self) -> String {
        "maxwell-bloch".into()
    }

    fn dim(&self) -> usize {
        3
    }

    fn noise_count(&self) -> usize {
        2
    }

    fn structure_matrix<S: Scalar>(&self, y: &[S]) -> Result<Vec<Vec<S>>, SystemError> {
        let z = S::zero;
        Ok(vec![
            vec![z(), -y[2].clone(), y[1].clone()],
            vec![y[2].clone(), z(), z()],
            vec![-y[1].clone(), z(), z()],
        ])
    }

    fn hamiltonian<S: Scalar>(&self, k: usize, y: &[S]) -> Result<S, SystemError> {
        match k {
            0 => Ok(y[0].square() * 0.5 + y[2].clone()),
            1 => Ok(y[0].square() * (0.5 * self.sigma1)),
            2 => Ok(y[2].clone() * self.sigma2),
            _ => Err(SystemError::HamiltonianIndex { k, m: 2 }),
        }
    }

    fn hamiltonian_gradient<S: Scalar>(&self, k: usize, y: &[S]) -> Result<Vec<S>, SystemError> {
        let z = S::zero;
        match k {
            0 => Ok(vec![y[0].clone(), z(), S::constant(1.0)]),
            1 => Ok(vec![y[0].clone() * self.sigma1, z(), z()]),
            2 => Ok(vec![z(), z(), S::constant(self.sigma2)]),
            _ => Err(SystemError::HamiltonianIndex { k, m: 2 }),
        }
    }

    fn casimir_count(&self) -> usize {
        1
    }

    fn casimir<S: Scalar>(&self, i: usize, y: &[S]) -> Result<S, SystemError> {
        if i != 0 {
            return Err(SystemError::CasimirIndex { i, count: 1 });
        }
        Ok((y[1].square() + y[2].square()).square() * 0.5)
    }

    fn casimir_gradient<S: Scalar>(&self, i: usize, y: &[S]) -> Result<Vec<S>, SystemError> {
        if i != 0 {
            return Err(SystemError::CasimirIndex { i, count: 1 });
        }
        let r2 = y[1].square() + y[2].square();
        let r2 = r2 * 2.0;
        Ok(vec![S::zero(), r2.clone() * y[1].clone(), r2 * y[2].clone()])
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    fn as_maxwell_bloch(&self) -> Option<&MaxwellBloch> {
        Some(self)
    }
}

/// The builtin systems, selectable by label.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Canonical(Canonical),
    LotkaVolterra(LotkaVolterra),
    MaxwellBloch(MaxwellBloch),
}

pub const LABELS: [&str; 5] = ["harmonic", "pendulum", "double-well", "lotka-volterra", "maxwell-bloch"];

impl Builtin {
    /// Canonical system with arbitrary closed-form Hamiltonians.
    pub fn canonical(
        k: usize,
        drift: CanonicalHamiltonian,
        noises: Vec<CanonicalHamiltonian>,
    ) -> Result<Self, SystemError> {
        Ok(Self::Canonical(Canonical::new("canonical", k, drift, noises)?))
    }

    /// `𝓗 = H_r/σ_r = ½(|q|² + |p|²)` with `k` degrees of freedom.
    pub fn harmonic(k: usize, sigma: &[f64]) -> Self {
        let h = |s| CanonicalHamiltonian::new(HamiltonianForm::Harmonic, s);
        let noises = sigma.iter().map(|s| h(*s)).collect();
        Self::Canonical(Canonical::new("harmonic", k.max(1), h(1.0), noises).expect("k >= 1"))
    }

    /// Pendulum `𝓗 = ½y₂² − cos y₁` with `m = sigma.len()` proportional
    /// noises `H_r = σ_r 𝓗`.
    pub fn pendulum_m_noises(sigma: &[f64]) -> Self {
        let h = |s| CanonicalHamiltonian::new(HamiltonianForm::Pendulum, s);
        let noises = sigma.iter().map(|s| h(*s)).collect();
        Self::Canonical(Canonical::new("pendulum", 1, h(1.0), noises).expect("k = 1"))
    }

    /// Pendulum drift with `H₁ = σ₁·½(y₁² + y₂²)` and
    /// `H₂ = σ₂(½y₂² + ¼y₁⁴ − ½y₁²)`.
    pub fn two_noise_doublewell(sigma1: f64, sigma2: f64) -> Self {
        let drift = CanonicalHamiltonian::new(HamiltonianForm::Pendulum, 1.0);
        let noises = vec![
            CanonicalHamiltonian::new(HamiltonianForm::Harmonic, sigma1),
            CanonicalHamiltonian::new(HamiltonianForm::DoubleWell, sigma2),
        ];
        Self::Canonical(Canonical::new("double-well", 1, drift, noises).expect("k = 1"))
    }

    pub fn lotka_volterra(sigma: &[f64]) -> Self {
        Self::LotkaVolterra(LotkaVolterra { sigma: sigma.to_vec() })
    }

    pub fn maxwell_bloch(sigma1: f64, sigma2: f64) -> Self {
        Self::MaxwellBloch(MaxwellBloch { sigma1, sigma2 })
    }

    /// Resolve a label from [`LABELS`] with the given noise intensities.
    pub fn from_label(label: &str, sigma: &[f64]) -> Result<Self, SystemError> {
        let need = |n: usize| {
            if sigma.len() == n {
                Ok(())
            } else {
                Err(SystemError::Parameters(format!("`{label}` takes {n} noise intensities, got {}", sigma.len())))
            }
        };
        if sigma.iter().any(|s| !s.is_finite()) {
            return Err(SystemError::Parameters("noise intensities must be finite".into()));
        }
        match label {
            "harmonic" => Ok(Self::harmonic(1, sigma)),
            "pendulum" => {
                if sigma.is_empty() || sigma.iter().any(|s| *s <= 0.0) {
                    return Err(SystemError::Parameters(
                        "pendulum needs at least one strictly positive noise intensity".into(),
                    ));
                }
                Ok(Self::pendulum_m_noises(sigma))
            }
            "double-well" => {
                need(2)?;
                Ok(Self::two_noise_doublewell(sigma[0], sigma[1]))
            }
            "lotka-volterra" => Ok(Self::lotka_volterra(sigma)),
            "maxwell-bloch" => {
                need(2)?;
                Ok(Self::maxwell_bloch(sigma[0], sigma[1]))
            }
            other => Err(SystemError::UnknownLabel(other.to_string())),
        }
    }

    /// One instance of every builtin, with representative intensities.
    pub fn catalog() -> Vec<Self> {
        vec![
            Self::harmonic(2, &[0.5]),
            Self::pendulum_m_noises(&[0.01, 0.02, 0.03]),
            Self::two_noise_doublewell(0.01, 0.01),
            Self::lotka_volterra(&[0.5]),
            Self::maxwell_bloch(0.5, 0.5),
        ]
    }
}

macro_rules! delegate {
    ($self:ident, $s:ident => $e:expr) => {
        match $self {
            Builtin::Canonical($s) => $e,
            Builtin::LotkaVolterra($s) => $e,
            Builtin::MaxwellBloch($s) => $e,
        }
    };
}

impl PoissonSystem for Builtin {
    fn label(&self) -> String {
        delegate!(self, s => s.label())
    }

    fn dim(&self) -> usize {
        delegate!(self, s => s.dim())
    }

    fn noise_count(&self) -> usize {
        delegate!(self, s => s.noise_count())
    }

    fn structure_matrix<S: Scalar>(&self, y: &[S]) -> Result<Vec<Vec<S>>, SystemError> {
        delegate!(self, s => s.structure_matrix(y))
    }

    fn hamiltonian<S: Scalar>(&self, k: usize, y: &[S]) -> Result<S, SystemError> {
        delegate!(self, s => s.hamiltonian(k, y))
    }

    fn hamiltonian_gradient<S: Scalar>(&self, k: usize, y: &[S]) -> Result<Vec<S>, SystemError> {
        delegate!(self, s => s.hamiltonian_gradient(k, y))
    }

    fn casimir_count(&self) -> usize {
        delegate!(self, s => s.casimir_count())
    }

    fn casimir<S: Scalar>(&self, i: usize, y: &[S]) -> Result<S, SystemError> {
        delegate!(self, s => s.casimir(i, y))
    }

    fn casimir_gradient<S: Scalar>(&self, i: usize, y: &[S]) -> Result<Vec<S>, SystemError> {
        delegate!(self, s => s.casimir_gradient(i, y))
    }

    fn is_canonical(&self) -> bool {
        delegate!(self, s => s.is_canonical())
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        delegate!(self, s => s.sample_point(rng))
    }

    fn as_maxwell_bloch(&self) -> Option<&MaxwellBloch> {
        delegate!(self, s => s.as_maxwell_bloch())
    }

    fn apply_structure<S: Scalar>(&self, y: &[S], v: &[S]) -> Result<Vec<S>, SystemError> {
        delegate!(self, s => s.apply_structure(y, v))
    }
}
