use serde::{Deserialize, Serialize};

use super::IntegratorError;
use crate::algebra::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    /// Fixed-point sweeps, Newton as fallback.
    #[default]
    FixedPoint,
    /// Newton first, fixed-point sweeps as fallback.
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub mode: SolverMode,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_tolerance() -> f64 {
    1e-12
}

fn default_max_iterations() -> usize {
    50
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { mode: SolverMode::default(), tolerance: default_tolerance(), max_iterations: default_max_iterations() }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(IntegratorError::Solver(format!(
                "tolerance must be positive and max_iterations nonzero, got {} and {}",
                self.tolerance, self.max_iterations
            )));
        }
        Ok(())
    }
}

/// The map `G` of a stage equation `Y = G(Y)`.
pub trait StageMap<S: Scalar> {
    fn apply(&self, y: &[S]) -> Result<Vec<S>, IntegratorError>;

    /// `∂G/∂Y` at the constant part `y`; drives the Newton iteration, which
    /// for jet-valued stages becomes a chord iteration.
    fn jacobian(&self, y: &[f64]) -> Result<Vec<Vec<f64>>, IntegratorError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<S> {
    pub value: Vec<S>,
    /// Evaluations of `G`.
    pub iterations: usize,
    /// `max_i |Y_i − G(Y)_i|` at the last iteration.
    pub residual: f64,
    pub mode: SolverMode,
}

fn distance<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.clone() - y.clone()).magnitude())
        .fold(0.0, f64::max)
}

const DIVERGED: f64 = 1e8;

fn fixed_point<S: Scalar, M: StageMap<S>>(
    map: &M,
    mut y: Vec<S>,
    cfg: &SolverConfig,
    trace: &mut Vec<f64>,
) -> Result<Option<Solution<S>>, IntegratorError> {
    for it in 1..=cfg.max_iterations {
        let next = map.apply(&y)?;
        let r = distance(&next, &y);
        trace.push(r);
        y = next;
        if r <= cfg.tolerance {
            return Ok(Some(Solution { value: y, iterations: it, residual: r, mode: SolverMode::FixedPoint }));
        }
        if !(r < DIVERGED) {
            break;
        }
    }
    Ok(None)
}

fn newton<S: Scalar, M: StageMap<S>>(
    map: &M,
    mut y: Vec<S>,
    cfg: &SolverConfig,
    trace: &mut Vec<f64>,
) -> Result<Option<Solution<S>>, IntegratorError> {
    let d = y.len();
    for it in 1..=cfg.max_iterations {
        let g = map.apply(&y)?;
        let res: Vec<S> = y.iter().zip(&g).map(|(a, b)| a.clone() - b.clone()).collect();
        let r = res.iter().map(Scalar::magnitude).fold(0.0, f64::max);
        trace.push(r);
        if r <= cfg.tolerance {
            return Ok(Some(Solution { value: y, iterations: it, residual: r, mode: SolverMode::Newton }));
        }
        if !(r < DIVERGED) {
            break;
        }
        let values: Vec<f64> = y.iter().map(Scalar::value).collect();
        let jac = map.jacobian(&values)?;
        // (I − ∂G) Δ = Y − G(Y)
        let mut a: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 } - jac[i][j]).collect())
            .collect();
        let Some(inv) = invert(&mut a) else {
            return Err(IntegratorError::Singular);
        };
        y = (0..d)
            .map(|i| {
                (0..d).fold(y[i].clone(), |acc, j| acc - res[j].clone() * inv[i][j])
            })
            .collect();
    }
    Ok(None)
}

/// Solve `Y = G(Y)` starting from `guess`.
pub fn implicit_solve<S: Scalar, M: StageMap<S>>(
    map: &M,
    guess: Vec<S>,
    cfg: &SolverConfig,
) -> Result<Solution<S>, IntegratorError> {
    cfg.validate()?;
    let mut trace = Vec::new();
    let first = match cfg.mode {
        SolverMode::FixedPoint => fixed_point(map, guess.clone(), cfg, &mut trace)?,
        SolverMode::Newton => match newton(map, guess.clone(), cfg, &mut trace) {
            Err(IntegratorError::Singular) => None,
            other => other?,
        },
    };
    if let Some(sol) = first {
        return Ok(sol);
    }
    let second = match cfg.mode {
        SolverMode::FixedPoint => match newton(map, guess, cfg, &mut trace) {
            Err(IntegratorError::Singular) => None,
            other => other?,
        },
        SolverMode::Newton => fixed_point(map, guess, cfg, &mut trace)?,
    };
    second.ok_or_else(|| IntegratorError::NonConvergence {
        iterations: trace.len(),
        residual: trace.last().copied().unwrap_or(f64::NAN),
        trace,
    })
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
pub(crate) fn invert(a: &mut [Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let scale = a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[piv][col].abs() > 1e-14 * scale) {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}
