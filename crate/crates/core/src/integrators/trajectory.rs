use serde::{Deserialize, Serialize};

use super::{IntegratorError, Stepper};
use crate::stochastics::IncrementBatch;
use crate::systems::{random_hamiltonian, HamiltonianScaling, PoissonSystem};

/// A scalar quantity tracked along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    /// `𝓗(y_n)`
    Hamiltonian,
    /// `C_i(y_n)`
    Casimir(usize),
    /// `r_n = H̄_n(y_{n+1}) − H̄_n(y_n)` at index `n + 1`; index 0 holds 0.
    RandomHamiltonianStep,
    /// `Σ_{k<n} r_k`
    RandomHamiltonianCumulative,
    /// `H̄_{n−1}(y_n) − H̄_{n−1}(y_0)`: the deviation from the start under the
    /// increments of the step that produced `y_n`; index 0 holds 0.
    RandomHamiltonianFixed,
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Self::Hamiltonian => "hamiltonian".into(),
            Self::Casimir(i) => format!("casimir-{i}"),
            Self::RandomHamiltonianStep => "random-hamiltonian-step".into(),
            Self::RandomHamiltonianCumulative => "random-hamiltonian-cumulative".into(),
            Self::RandomHamiltonianFixed => "random-hamiltonian-fixed".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackRequest {
    #[serde(default)]
    pub hamiltonian: bool,
    #[serde(default)]
    pub casimirs: bool,
    /// Per-step, cumulative and fixed-increment random-Hamiltonian residuals.
    #[serde(default)]
    pub random_hamiltonian: bool,
}

impl TrackRequest {
    pub fn all() -> Self {
        Self { hamiltonian: true, casimirs: true, random_hamiltonian: true }
    }

    pub fn is_empty(&self) -> bool {
        !(self.hamiltonian || self.casimirs || self.random_hamiltonian)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub dim: usize,
    states: Vec<f64>,
    tracks: Vec<(Functional, Vec<f64>)>,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.states.len() / self.dim - 1
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.h
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|n| self.time(n)).collect()
    }

    pub fn state(&self, n: usize) -> &[f64] {
        &self.states[n * self.dim..(n + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.n_steps())
    }

    pub fn track(&self, f: Functional) -> Option<&[f64]> {
        self.tracks.iter().find(|(g, _)| *g == f).map(|(_, v)| v.as_slice())
    }

    pub fn tracks(&self) -> impl Iterator<Item = (Functional, &[f64])> {
        self.tracks.iter().map(|(f, v)| (*f, v.as_slice()))
    }
}

/// Advance `y0` over `n_steps` steps of size `h` driven by `increments`,
/// recording the requested functionals at every grid point.
pub fn integrate<P: PoissonSystem, M: Stepper>(
    sys: &P,
    stepper: &M,
    y0: &[f64],
    h: f64,
    n_steps: usize,
    increments: &IncrementBatch,
    tracks: TrackRequest,
) -> Result<Trajectory, IntegratorError> {
    stepper.supports(sys)?;
    let d = sys.dim();
    if y0.len() != d {
        return Err(crate::systems::SystemError::Dimension { expected: d, got: y0.len() }.into());
    }
    if n_steps > 0 {
        if increments.h != h {
            return Err(IntegratorError::Increments(format!("batch has h = {}, step uses {h}", increments.h)));
        }
        if increments.n_steps < n_steps || increments.m != sys.noise_count() {
            return Err(IntegratorError::Increments(format!(
                "batch is {}×{}, need at least {n_steps}×{}",
                increments.n_steps,
                increments.m,
                sys.noise_count()
            )));
        }
    }
    let at = |step: usize| move |e: IntegratorError| IntegratorError::AtStep { step, source: Box::new(e) };

    let mut states = Vec::with_capacity((n_steps + 1) * d);
    states.extend_from_slice(y0);
    let mut ham = tracks.hamiltonian.then(|| Vec::with_capacity(n_steps + 1));
    let n_cas = if tracks.casimirs { sys.casimir_count() } else { 0 };
    let mut cas: Vec<Vec<f64>> = (0..n_cas).map(|_| Vec::with_capacity(n_steps + 1)).collect();
    let mut rh_step = tracks.random_hamiltonian.then(|| Vec::with_capacity(n_steps + 1));
    let mut rh_cum = tracks.random_hamiltonian.then(|| Vec::with_capacity(n_steps + 1));
    let mut rh_fixed = tracks.random_hamiltonian.then(|| Vec::with_capacity(n_steps + 1));

    let record = |y: &[f64], ham: &mut Option<Vec<f64>>, cas: &mut Vec<Vec<f64>>, step: usize| -> Result<(), IntegratorError> {
        if let Some(v) = ham {
            v.push(sys.hamiltonian(0, y).map_err(|e| at(step)(e.into()))?);
        }
        for (i, v) in cas.iter_mut().enumerate() {
            v.push(sys.casimir(i, y).map_err(|e| at(step)(e.into()))?);
        }
        Ok(())
    };
    record(y0, &mut ham, &mut cas, 0)?;
    if let (Some(s), Some(c), Some(f)) = (rh_step.as_mut(), rh_cum.as_mut(), rh_fixed.as_mut()) {
        s.push(0.0);
        c.push(0.0);
        f.push(0.0);
    }

    let mut y = y0.to_vec();
    let mut cumulative = 0.0;
    for n in 0..n_steps {
        let dw = increments.step(n);
        let next = stepper.step(sys, &y, &h, dw).map_err(at(n))?;
        if let (Some(s), Some(c), Some(f)) = (rh_step.as_mut(), rh_cum.as_mut(), rh_fixed.as_mut()) {
            let hbar = |y: &[f64]| {
                random_hamiltonian(sys, dw, h, y, HamiltonianScaling::PerUnitTime).map_err(|e| at(n)(e.into()))
            };
            let after = hbar(&next)?;
            let r = after - hbar(&y)?;
            cumulative += r;
            s.push(r);
            c.push(cumulative);
            f.push(after - hbar(y0)?);
        }
        record(&next, &mut ham, &mut cas, n + 1)?;
        states.extend_from_slice(&next);
        y = next;
    }

    let mut out = Vec::new();
    if let Some(v) = ham {
        out.push((Functional::Hamiltonian, v));
    }
    for (i, v) in cas.into_iter().enumerate() {
        out.push((Functional::Casimir(i), v));
    }
    if let (Some(s), Some(c), Some(f)) = (rh_step, rh_cum, rh_fixed) {
        out.push((Functional::RandomHamiltonianStep, s));
        out.push((Functional::RandomHamiltonianCumulative, c));
        out.push((Functional::RandomHamiltonianFixed, f));
    }
    Ok(Trajectory { h, dim: d, states, tracks: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{Heun, MbSplitting, Midpoint};
    use crate::stochastics::{sample_increments, SeedSpec};
    use crate::systems::Builtin;

    #[test]
    fn zero_steps() {
        let sys = Builtin::maxwell_bloch(0.1, 0.1);
        let inc = sample_increments(SeedSpec::new(0, 0), 0.1, 2, 1).unwrap();
        let tr = integrate(&sys, &MbSplitting::default(), &[1.0, 2.0, 3.0], 0.1, 0, &inc, TrackRequest::all()).unwrap();
        assert_eq!(tr.n_steps(), 0);
        assert_eq!(tr.state(0), &[1.0, 2.0, 3.0]);
        assert_eq!(tr.track(Functional::RandomHamiltonianCumulative).unwrap(), &[0.0]);
        assert_eq!(tr.track(Functional::RandomHamiltonianFixed).unwrap(), &[0.0]);
    }

    #[test]
    fn splitting_keeps_the_casimir() {
        let sys = Builtin::maxwell_bloch(0.5, 0.5);
        let n = 10_000;
        let inc = sample_increments(SeedSpec::new(1, 0), 0.1, 2, n).unwrap();
        let tr = integrate(&sys, &MbSplitting::default(), &[0.5, 0.8, 0.6], 0.1, n, &inc, TrackRequest::all()).unwrap();
        let c = tr.track(Functional::Casimir(0)).unwrap();
        assert!(c.iter().all(|v| (v - c[0]).abs() <= 1e-12 * c[0]));
        let heun = integrate(&sys, &Heun, &[0.5, 0.8, 0.6], 0.1, 100, &inc, TrackRequest::all()).unwrap();
        let ch = heun.track(Functional::Casimir(0)).unwrap();
        assert!((ch[100] - ch[0]).abs() > 1e-8);
    }

    #[test]
    fn proportional_noise_factorization() {
        let sigma = [0.01, 0.02, 0.03];
        let sys = Builtin::pendulum_m_noises(&sigma);
        let h = 0.1;
        let inc = sample_increments(SeedSpec::new(2, 0), h, 3, 200).unwrap();
        let tr = integrate(&sys, &Midpoint::default(), &[1.0, 2.0], h, 200, &inc, TrackRequest::all()).unwrap();
        let ham = tr.track(Functional::Hamiltonian).unwrap();
        let step = tr.track(Functional::RandomHamiltonianStep).unwrap();
        for n in 0..200 {
            let factor = 1.0 + inc.step(n).iter().zip(&sigma).map(|(w, s)| s * w).sum::<f64>() / h;
            let expected = factor * (ham[n + 1] - ham[n]);
            assert!((step[n + 1] - expected).abs() <= 1e-14, "{n}");
        }
    }

    #[test]
    fn errors_carry_step_index() {
        let sys = Builtin::lotka_volterra(&[5.0]);
        let inc = crate::stochastics::IncrementBatch::from_rows(0.5, 1, vec![0.0, -40.0, 0.0]).unwrap();
        let err = integrate(&sys, &Heun, &[1.0, 1.0], 0.5, 3, &inc, TrackRequest::default()).unwrap_err();
        assert!(matches!(err, IntegratorError::AtStep { step: 1, .. }), "{err:?}");
    }

    #[test]
    fn increments_must_match() {
        let sys = Builtin::maxwell_bloch(0.1, 0.1);
        let inc = sample_increments(SeedSpec::new(0, 0), 0.1, 2, 5).unwrap();
        let m = MbSplitting::default();
        assert!(integrate(&sys, &m, &[1.0, 2.0, 3.0], 0.2, 5, &inc, TrackRequest::default()).is_err());
        assert!(integrate(&sys, &m, &[1.0, 2.0, 3.0], 0.1, 6, &inc, TrackRequest::default()).is_err());
    }
}
