use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_slope, DiagnosticsError};
use crate::integrators::{integrate, Functional, Stepper, TrackRequest};
use crate::stochastics::{aggregate_increments, sample_increments, truncate_increments, IncrementBatch, SeedSpec, TruncationPolicy};
use crate::systems::PoissonSystem;

/// Drifts below this are indistinguishable from rounding.
pub const ROUNDING_FLOOR: f64 = 1e-11;

/// Monte Carlo settings shared by the scaling and order studies. Path `p`
/// draws its Brownian increments from `SeedSpec::new(master_seed, p)` on the
/// finest grid; coarser steps sum them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Protocol {
    pub t_end: f64,
    pub hs: Vec<f64>,
    pub n_paths: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub truncation: TruncationPolicy,
}

fn whole_steps(span: f64, h: f64) -> Result<usize, DiagnosticsError> {
    let n = (span / h).round();
    if !(h > 0.0) || n < 1.0 || (n * h - span).abs() > 1e-9 * span {
        return Err(DiagnosticsError::Protocol(format!("{span} is not a whole number of steps of {h}")));
    }
    Ok(n as usize)
}

impl Protocol {
    /// Step sizes in strictly decreasing order.
    fn sorted_hs(&self, min_count: usize) -> Result<Vec<f64>, DiagnosticsError> {
        let mut hs = self.hs.clone();
        hs.sort_by(|a, b| b.total_cmp(a));
        hs.dedup();
        if hs.len() < min_count {
            return Err(DiagnosticsError::Protocol(format!("need at least {min_count} distinct step sizes")));
        }
        if self.n_paths == 0 {
            return Err(DiagnosticsError::Protocol("need at least one path".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(DiagnosticsError::Protocol(format!("horizon must be positive, got {}", self.t_end)));
        }
        for &h in &hs {
            whole_steps(self.t_end, h)?;
        }
        Ok(hs)
    }

    /// Per-level increments of path `p`, all sums of one fine sample.
    fn coupled_path(&self, m: usize, h_fine: f64, hs: &[f64], p: usize) -> Result<Vec<IncrementBatch>, DiagnosticsError> {
        let fine = sample_increments(SeedSpec::new(self.master_seed, p as u64), h_fine, m, whole_steps(self.t_end, h_fine)?)?;
        hs.iter()
            .map(|&h| {
                let factor = whole_steps(h, h_fine)?;
                let batch = if factor == 1 { fine.clone() } else { aggregate_increments(&fine, factor)? };
                let batch = if self.truncation.enabled { truncate_increments(&batch, self.truncation)? } else { batch };
                Ok(batch)
            })
            .collect()
    }
}

/// Mean over paths of `max_n |Σ_{k<n} r_k|` per step size, with the fitted
/// log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftScaling {
    pub hs: Vec<f64>,
    pub drifts: Vec<f64>,
    pub slope: f64,
    pub n_paths: usize,
}

impl DriftScaling {
    /// Whether the slope lies within `tolerance` of `p/2`.
    pub fn agrees_with(&self, p: u32, tolerance: f64) -> bool {
        (self.slope - f64::from(p) / 2.0).abs() <= tolerance
    }
}

pub fn drift_scaling_exponent<P: PoissonSystem, M: Stepper>(
    sys: &P,
    stepper: &M,
    y0: &[f64],
    protocol: &Protocol,
) -> Result<DriftScaling, DiagnosticsError> {
    let hs = protocol.sorted_hs(3)?;
    let h_fine = *hs.last().expect("nonempty");
    let track = TrackRequest { random_hamiltonian: true, ..TrackRequest::default() };
    let per_path: Vec<Vec<f64>> = (0..protocol.n_paths)
        .into_par_iter()
        .map(|p| {
            let levels = protocol.coupled_path(sys.noise_count(), h_fine, &hs, p)?;
            levels
                .iter()
                .map(|inc| {
                    let tr = integrate(sys, stepper, y0, inc.h, inc.n_steps, inc, track)?;
                    let cum = tr.track(Functional::RandomHamiltonianCumulative).expect("tracked");
                    Ok(cum.iter().fold(0.0f64, |m, v| m.max(v.abs())))
                })
                .collect::<Result<Vec<f64>, DiagnosticsError>>()
        })
        .collect::<Result<_, _>>()?;
    let n = protocol.n_paths as f64;
    let drifts: Vec<f64> = (0..hs.len()).map(|i| per_path.iter().map(|v| v[i]).sum::<f64>() / n).collect();
    if drifts.iter().all(|d| *d <= ROUNDING_FLOOR) {
        return Err(DiagnosticsError::DegenerateFit(format!("every drift is at the rounding floor ({drifts:?})")));
    }
    if drifts.iter().any(|d| *d <= 0.0) {
        return Err(DiagnosticsError::DegenerateFit(format!("zero drift in {drifts:?}")));
    }
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = drifts.iter().map(|d| d.ln()).collect();
    let slope = fit_slope(&lx, &ly).expect("distinct step sizes");
    Ok(DriftScaling { hs, drifts, slope, n_paths: protocol.n_paths })
}

/// Mean terminal errors against a 4×-refined solution of the same method on
/// the same Brownian path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEstimate {
    /// Strictly decreasing.
    pub hs: Vec<f64>,
    pub errors: Vec<f64>,
    /// 95% normal-approximation half-widths.
    pub half_widths: Vec<f64>,
    pub slope: f64,
    pub n_paths: usize,
}

pub fn strong_order_estimate<P: PoissonSystem, M: Stepper>(
    sys: &P,
    stepper: &M,
    y0: &[f64],
    protocol: &Protocol,
) -> Result<OrderEstimate, DiagnosticsError> {
    let hs = protocol.sorted_hs(2)?;
    let h_ref = hs.last().expect("nonempty") / 4.0;
    let mut levels_h = hs.clone();
    levels_h.push(h_ref);
    let per_path: Vec<Vec<f64>> = (0..protocol.n_paths)
        .into_par_iter()
        .map(|p| {
            let levels = protocol.coupled_path(sys.noise_count(), h_ref, &levels_h, p)?;
            let ends = levels
                .iter()
                .map(|inc| Ok(integrate(sys, stepper, y0, inc.h, inc.n_steps, inc, TrackRequest::default())?.last().to_vec()))
                .collect::<Result<Vec<Vec<f64>>, DiagnosticsError>>()?;
            let reference = ends.last().expect("reference level");
            Ok(ends[..hs.len()]
                .iter()
                .map(|e| e.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .collect())
        })
        .collect::<Result<_, DiagnosticsError>>()?;
    let n = protocol.n_paths as f64;
    let mut errors = Vec::with_capacity(hs.len());
    let mut half_widths = Vec::with_capacity(hs.len());
    for (i, &h) in hs.iter().enumerate() {
        let mean = per_path.iter().map(|v| v[i]).sum::<f64>() / n;
        let var = if protocol.n_paths > 1 {
            per_path.iter().map(|v| (v[i] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            f64::INFINITY
        };
        let half_width = 1.96 * (var / n).sqrt();
        if !(mean > 0.0) {
            return Err(DiagnosticsError::DegenerateFit(format!("zero error at h = {h}")));
        }
        if half_width > 0.5 * mean {
            return Err(DiagnosticsError::Unstable { h, error: mean, half_width });
        }
        errors.push(mean);
        half_widths.push(half_width);
    }
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let slope = fit_slope(&lx, &ly).expect("distinct step sizes");
    Ok(OrderEstimate { hs, errors, half_widths, slope, n_paths: protocol.n_paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{MbSplitting, Midpoint, WongZakaiFlow};
    use crate::systems::Builtin;

    fn protocol(t_end: f64, hs: &[f64], n_paths: usize) -> Protocol {
        Protocol { t_end, hs: hs.to_vec(), n_paths, master_seed: 17, truncation: TruncationPolicy::default() }
    }

    #[test]
    fn single_step_size_is_rejected() {
        let sys = Builtin::pendulum_m_noises(&[0.1]);
        let err = strong_order_estimate(&sys, &Midpoint::default(), &[1.0, 2.0], &protocol(1.0, &[0.1], 10)).unwrap_err();
        assert!(matches!(err, DiagnosticsError::Protocol(_)));
    }

    #[test]
    fn horizon_must_be_a_whole_number_of_steps() {
        let sys = Builtin::pendulum_m_noises(&[0.1]);
        let err = strong_order_estimate(&sys, &Midpoint::default(), &[1.0, 2.0], &protocol(1.0, &[0.3, 0.1], 10)).unwrap_err();
        assert!(matches!(err, DiagnosticsError::Protocol(_)));
    }

    #[test]
    fn exact_flow_drift_is_at_the_rounding_floor() {
        // linear oscillator with noise proportional to the energy: the
        // Taylor flow is exact to rounding and H̄ is conserved step by step
        let sys = Builtin::harmonic(1, &[0.2]);
        let flow = WongZakaiFlow { order: 30, substeps: 1 };
        let err = drift_scaling_exponent(&sys, &flow, &[0.3, 0.4], &protocol(2.0, &[0.2, 0.1, 0.05], 4)).unwrap_err();
        assert!(matches!(err, DiagnosticsError::DegenerateFit(_)), "{err:?}");
    }

    #[test]
    fn midpoint_strong_order_on_a_short_run() {
        let sys = Builtin::pendulum_m_noises(&[0.5]);
        let est = strong_order_estimate(&sys, &Midpoint::default(), &[1.0, 2.0], &protocol(0.5, &[0.05, 0.025, 0.0125], 40)).unwrap();
        assert!(est.hs.windows(2).all(|w| w[0] > w[1]));
        assert!(est.errors.iter().all(|e| *e > 0.0));
        assert!(est.slope > 0.8 && est.slope < 1.2, "{est:?}");
    }

    #[test]
    fn repeatable() {
        let sys = Builtin::maxwell_bloch(0.3, 0.3);
        let p = protocol(1.0, &[0.1, 0.05, 0.025], 8);
        let a = drift_scaling_exponent(&sys, &MbSplitting::default(), &[0.5, 0.8, 0.6], &p).unwrap();
        let b = drift_scaling_exponent(&sys, &MbSplitting::default(), &[0.5, 0.8, 0.6], &p).unwrap();
        assert_eq!(a, b);
    }
}
