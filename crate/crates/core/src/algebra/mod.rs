//! Multi-index bookkeeping, the weighted truncated Taylor algebra, and the
//! Gaussian moment constants that weight the order conditions.

mod jet;
mod moments;
mod multiindex;
mod scalar;
mod series;

pub use jet::{Elementary, Jet, JetShape};
pub use moments::{gaussian_even_moment, moment_constant};
pub use multiindex::{enumerate_multiindices, MultiIndex};
pub use scalar::Scalar;
pub use series::Series;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("{function} is undefined at constant term {at}")]
    Domain { function: &'static str, at: f64 },
    #[error("odd increment moment in component {component}; the pair does not contribute")]
    OddMoment { component: usize },
    #[error("operands have different shapes")]
    ShapeMismatch,
}
