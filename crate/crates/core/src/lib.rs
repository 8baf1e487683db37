//! Structure-preserving integration of stochastic Poisson systems with
//! jet-based backward error analysis.

pub mod algebra;
pub mod diagnostics;
pub mod harness;
pub mod integrators;
pub mod modified;
pub mod stochastics;
pub mod systems;
