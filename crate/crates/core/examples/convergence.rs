//! Monte Carlo strong order of the midpoint rule and the step-size scaling of
//! the Maxwell-Bloch splitting's random-Hamiltonian drift.

use stochastic_poisson::diagnostics::{drift_scaling_exponent, strong_order_estimate, Protocol};
use stochastic_poisson::integrators::{MbSplitting, Midpoint};
use stochastic_poisson::stochastics::TruncationPolicy;
use stochastic_poisson::systems::Builtin;

fn main() {
    let order = Protocol { t_end: 1.0, hs: vec![0.02, 0.01, 0.005], n_paths: 100, master_seed: 0, truncation: TruncationPolicy::default() };
    let pendulum = Builtin::pendulum_m_noises(&[1.0, 1.0, 1.0]);
    let est = strong_order_estimate(&pendulum, &Midpoint::default(), &[1.0, 2.0], &order).unwrap();
    for i in 0..est.hs.len() {
        println!("h = {:<6} error {:.3e} ± {:.1e}", est.hs[i], est.errors[i], est.half_widths[i]);
    }
    println!("midpoint strong-order slope {:.3}", est.slope);

    let scaling = Protocol { t_end: 20.0, hs: vec![0.4, 0.2, 0.1, 0.05], n_paths: 50, master_seed: 0, truncation: TruncationPolicy::default() };
    let mb = Builtin::maxwell_bloch(0.01, 0.01);
    let res = drift_scaling_exponent(&mb, &MbSplitting::default(), &[0.5, 0.8, 0.6], &scaling).unwrap();
    println!("splitting drift {:?}", res.drifts);
    println!("splitting drift exponent {:.3}", res.slope);
}
