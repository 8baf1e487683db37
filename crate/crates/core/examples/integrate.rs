//! Energy drift of the stochastic midpoint rule against Heun on the pendulum
//! with three noises proportional to the energy, on one Brownian path.

use stochastic_poisson::diagnostics::{envelope_slope, functional_drift};
use stochastic_poisson::integrators::{integrate, Functional, Heun, Midpoint, TrackRequest};
use stochastic_poisson::stochastics::{sample_increments, SeedSpec};
use stochastic_poisson::systems::Builtin;

fn main() {
    let sys = Builtin::pendulum_m_noises(&[0.01, 0.02, 0.03]);
    let (h, n) = (0.1, 20_000);
    let inc = sample_increments(SeedSpec::new(0, 0), h, 3, n).unwrap();
    let track = TrackRequest { hamiltonian: true, ..TrackRequest::default() };
    let midpoint = integrate(&sys, &Midpoint::default(), &[1.0, 2.0], h, n, &inc, track).unwrap();
    let heun = integrate(&sys, &Heun, &[1.0, 2.0], h, n, &inc, track).unwrap();
    for (name, tr) in [("midpoint", &midpoint), ("heun", &heun)] {
        let s = functional_drift(tr, Functional::Hamiltonian).unwrap();
        println!(
            "{name:<9} final state {:?}  max |ΔH| {:.3e}  envelope slope {:.3e}",
            tr.last(),
            s.max_abs(),
            envelope_slope(&s).unwrap()
        );
    }
}
