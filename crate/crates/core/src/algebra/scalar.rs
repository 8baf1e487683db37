use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use super::AlgebraError;

/// Arithmetic contract shared by plain floats and [`Jet`](super::Jet)s.
///
/// Every system, stepper and solver in this crate is written once against
/// this trait; running it on jets instead of `f64` extracts Taylor
/// coefficients (Jacobians, expansion coefficients) mechanically.
pub trait Scalar:
    Clone
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn constant(x: f64) -> Self;

    /// Constant term (the value itself for `f64`).
    fn value(&self) -> f64;

    /// Largest absolute coefficient; used as a convergence norm.
    fn magnitude(&self) -> f64;

    fn cos(&self) -> Self;
    fn sin(&self) -> Self;
    fn exp(&self) -> Self;
    fn try_ln(&self) -> Result<Self, AlgebraError>;
    fn try_sqrt(&self) -> Result<Self, AlgebraError>;
    fn try_recip(&self) -> Result<Self, AlgebraError>;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(1.0);
        for _ in 0..n {
            out = out * self.clone();
        }
        out
    }

    fn try_div(&self, other: &Self) -> Result<Self, AlgebraError> {
        Ok(self.clone() * other.try_recip()?)
    }
}

impl Scalar for f64 {
    fn constant(x: f64) -> Self {
        x
    }

    fn value(&self) -> f64 {
        *self
    }

    fn magnitude(&self) -> f64 {
        self.abs()
    }

    fn cos(&self) -> Self {
        f64::cos(*self)
    }

    fn sin(&self) -> Self {
        f64::sin(*self)
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn try_ln(&self) -> Result<Self, AlgebraError> {
        if *self > 0.0 {
            Ok(self.ln())
        } else {
            Err(AlgebraError::Domain { function: "ln", at: *self })
        }
    }

    fn try_sqrt(&self) -> Result<Self, AlgebraError> {
        if *self >= 0.0 {
            Ok(self.sqrt())
        } else {
            Err(AlgebraError::Domain { function: "sqrt", at: *self })
        }
    }

    fn try_recip(&self) -> Result<Self, AlgebraError> {
        if *self != 0.0 {
            Ok(1.0 / *self)
        } else {
            Err(AlgebraError::Domain { function: "recip", at: *self })
        }
    }

    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
}
