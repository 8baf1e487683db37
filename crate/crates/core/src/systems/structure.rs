use super::{dot, PoissonSystem, SystemError};
use crate::algebra::{Jet, JetShape, Scalar};

/// Residual threshold for exact-formula structure matrices.
pub const STRUCTURE_TOLERANCE: f64 = 1e-12;

/// Largest absolute residuals over the sampled points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureReport {
    pub points: usize,
    pub skew: f64,
    pub jacobi: f64,
    /// Largest `|∇C(y)ᵀB(y)|` entry; zero when there are no Casimirs.
    pub casimir: f64,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.skew <= STRUCTURE_TOLERANCE
            && self.jacobi <= STRUCTURE_TOLERANCE
            && self.casimir <= STRUCTURE_TOLERANCE
    }
}

/// `{F, G}(y) = ∇F(y)ᵀ B(y) ∇G(y)`.
pub fn poisson_bracket<P: PoissonSystem, S: Scalar>(
    sys: &P,
    y: &[S],
    grad_f: &[S],
    grad_g: &[S],
) -> Result<S, SystemError> {
    let bg = sys.apply_structure(y, grad_g)?;
    Ok(dot(grad_f, &bg))
}

/// Skew-symmetry, Jacobi identity and Casimir residuals of `sys` at `points`.
///
/// Partial derivatives of `B` come from first-order jets, so the Jacobi
/// triple sum `Σ_l (b_lj ∂_l b_ik + b_li ∂_l b_kj + b_lk ∂_l b_ji)` is exact
/// up to rounding.
pub fn structure_check<P: PoissonSystem>(sys: &P, points: &[Vec<f64>]) -> Result<StructureReport, SystemError> {
    let d = sys.dim();
    let shape = JetShape::new(vec![1; d], 1);
    let mut report = StructureReport { points: points.len(), skew: 0.0, jacobi: 0.0, casimir: 0.0 };
    let mut unit = vec![0u32; d];
    for y in points {
        if y.len() != d {
            return Err(SystemError::Dimension { expected: d, got: y.len() });
        }
        let yj: Vec<Jet> = (0..d).map(|i| Jet::variable(&shape, i, y[i])).collect();
        let bj = sys.structure_matrix(&yj)?;
        let b: Vec<Vec<f64>> = bj.iter().map(|row| row.iter().map(Scalar::value).collect()).collect();
        // db[l][i][j] = ∂_l b_ij
        let db: Vec<Vec<Vec<f64>>> = (0..d)
            .map(|l| {
                unit.iter_mut().for_each(|u| *u = 0);
                unit[l] = 1;
                bj.iter()
                    .map(|row| row.iter().map(|e| e.coefficient(&unit)).collect())
                    .collect()
            })
            .collect();
        for i in 0..d {
            for j in 0..d {
                report.skew = report.skew.max((b[i][j] + b[j][i]).abs());
            }
        }
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let s: f64 = (0..d)
                        .map(|l| b[l][j] * db[l][i][k] + b[l][i] * db[l][k][j] + b[l][k] * db[l][j][i])
                        .sum();
                    report.jacobi = report.jacobi.max(s.abs());
                }
            }
        }
        for c in 0..sys.casimir_count() {
            let gc = sys.casimir_gradient(c, y)?;
            for j in 0..d {
                let s: f64 = (0..d).map(|i| gc[i] * b[i][j]).sum();
                report.casimir = report.casimir.max(s.abs());
            }
        }
    }
    Ok(report)
}
