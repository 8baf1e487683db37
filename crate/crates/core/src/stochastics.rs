//! Seeded Brownian increments, truncated increments, Wong-Zakai paths and
//! level coupling for strong-order studies.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StochasticsError {
    #[error("step size must be positive, got {0}")]
    StepSize(f64),
    #[error("need at least one step and one noise (n_steps = {n_steps}, m = {m})")]
    Empty { n_steps: usize, m: usize },
    #[error("truncation needs h < 1 so that |ln h| > 0, got h = {0}")]
    TruncationStep(f64),
    #[error("rho must be at least 1, got {0}")]
    Rho(f64),
    #[error("{n_steps} steps are not divisible by {factor}")]
    Indivisible { n_steps: usize, factor: usize },
    #[error("t = {t} lies outside [{t_n}, {t_n} + {h}]")]
    OutsideStep { t: f64, t_n: f64, h: f64 },
}

/// Identifies one reproducible increment stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub trajectory: u64,
}

impl SeedSpec {
    pub fn new(master: u64, trajectory: u64) -> Self {
        Self { master, trajectory }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.trajectory);
        rng
    }

    /// The standard normal used for step `step`, noise `r` (0-based).
    ///
    /// Every normal consumes exactly two 64-bit words, so any sample can be
    /// addressed directly without generating its predecessors.
    pub fn standard_normal(&self, m: usize, step: usize, r: usize) -> f64 {
        let mut rng = self.rng();
        rng.set_word_pos(4 * (step as u128 * m as u128 + r as u128));
        box_muller(&mut rng)
    }
}

fn unit_open(word: u64) -> f64 {
    // (0, 1]: never 0, so the logarithm below stays finite
    ((word >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// `n_steps × m` Brownian increments stored row-major (one row per step).
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBatch {
    pub h: f64,
    pub m: usize,
    pub n_steps: usize,
    data: Vec<f64>,
}

impl IncrementBatch {
    pub fn from_rows(h: f64, m: usize, data: Vec<f64>) -> Result<Self, StochasticsError> {
        if !(h > 0.0) {
            return Err(StochasticsError::StepSize(h));
        }
        if m == 0 || data.is_empty() || data.len() % m != 0 {
            return Err(StochasticsError::Empty { n_steps: data.len() / m.max(1), m });
        }
        Ok(Self { h, m, n_steps: data.len() / m, data })
    }

    /// Increments of step `n`.
    pub fn step(&self, n: usize) -> &[f64] {
        &self.data[n * self.m..(n + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.m)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `W_r(T)` at the end of the batch.
    pub fn terminal(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.m];
        for row in self.rows() {
            for (a, b) in w.iter_mut().zip(row) {
                *a += b;
            }
        }
        w
    }
}

/// `ΔW_n^r = √h ξ_n^r` with `ξ` standard normal, reproducible from `seed`.
pub fn sample_increments(seed: SeedSpec, h: f64, m: usize, n_steps: usize) -> Result<IncrementBatch, StochasticsError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(StochasticsError::StepSize(h));
    }
    if n_steps == 0 || m == 0 {
        return Err(StochasticsError::Empty { n_steps, m });
    }
    let mut rng = seed.rng();
    let sqrt_h = h.sqrt();
    let data = (0..n_steps * m).map(|_| sqrt_h * box_muller(&mut rng)).collect();
    Ok(IncrementBatch { h, m, n_steps, data })
}

/// Clamping of the normalized increments to `[−A_h, A_h]`,
/// `A_h = sqrt(ρ |ln h|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationPolicy {
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub enabled: bool,
}

fn default_rho() -> f64 {
    1.0
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { rho: 1.0, enabled: false }
    }
}

impl TruncationPolicy {
    pub fn enabled(rho: f64) -> Self {
        Self { rho, enabled: true }
    }

    pub fn threshold(&self, h: f64) -> Result<f64, StochasticsError> {
        if !(self.rho >= 1.0) {
            return Err(StochasticsError::Rho(self.rho));
        }
        if !(h > 0.0) {
            return Err(StochasticsError::StepSize(h));
        }
        if h >= 1.0 {
            return Err(StochasticsError::TruncationStep(h));
        }
        Ok((self.rho * h.ln().abs()).sqrt())
    }

    /// `√h · clamp(ΔW/√h, −A_h, A_h)`; identity when disabled.
    pub fn apply(&self, dw: f64, h: f64) -> Result<f64, StochasticsError> {
        if !self.enabled {
            return Ok(dw);
        }
        let a = self.threshold(h)?;
        let s = h.sqrt();
        Ok(s * (dw / s).clamp(-a, a))
    }
}

pub fn truncate_increments(batch: &IncrementBatch, policy: TruncationPolicy) -> Result<IncrementBatch, StochasticsError> {
    if !policy.enabled {
        return Ok(batch.clone());
    }
    let a = policy.threshold(batch.h)?;
    let s = batch.h.sqrt();
    let data = batch.data.iter().map(|w| s * (w / s).clamp(-a, a)).collect();
    Ok(IncrementBatch { data, ..*batch })
}

/// Piecewise-linear interpolation `W(t_n) + (t − t_n)/h · ΔW` on one step.
pub fn wong_zakai_value(t: f64, t_n: f64, h: f64, w_at_tn: f64, dw: f64) -> Result<f64, StochasticsError> {
    if !(h > 0.0) {
        return Err(StochasticsError::StepSize(h));
    }
    if !(t >= t_n && t <= t_n + h) {
        return Err(StochasticsError::OutsideStep { t, t_n, h });
    }
    if t == t_n + h {
        return Ok(w_at_tn + dw);
    }
    Ok(w_at_tn + (t - t_n) / h * dw)
}

/// Coarse increments over `factor` consecutive fine steps of the same path.
pub fn aggregate_increments(fine: &IncrementBatch, factor: usize) -> Result<IncrementBatch, StochasticsError> {
    if factor == 0 || fine.n_steps % factor != 0 {
        return Err(StochasticsError::Indivisible { n_steps: fine.n_steps, factor });
    }
    let m = fine.m;
    let n_steps = fine.n_steps / factor;
    let mut data = vec![0.0; n_steps * m];
    for (n, row) in fine.rows().enumerate() {
        let dst = &mut data[(n / factor) * m..(n / factor + 1) * m];
        for (a, b) in dst.iter_mut().zip(row) {
            *a += b;
        }
    }
    Ok(IncrementBatch { h: fine.h * factor as f64, m, n_steps, data })
}
