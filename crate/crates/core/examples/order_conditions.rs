//! Mean-square order conditions C_k for each stepper on the pendulum.

use stochastic_poisson::integrators::{Heun, Midpoint};
use stochastic_poisson::modified::{flow_coefficients, method_coefficients, order_condition_residual};
use stochastic_poisson::systems::Builtin;

fn main() {
    let sys = Builtin::pendulum_m_noises(&[0.5, 0.3, 0.4]);
    let y = [1.0, 2.0];
    let flow = flow_coefficients(&sys, &y, 5).unwrap();
    let tables = [
        ("midpoint", method_coefficients(&Midpoint::default(), &sys, &y, 5).unwrap()),
        ("heun", method_coefficients(&Heun, &sys, &y, 5).unwrap()),
    ];
    for (name, t) in &tables {
        let c: Vec<String> = (1..=3).map(|k| format!("C{k} = {:.3e}", order_condition_residual(&flow, t, k).unwrap())).collect();
        println!("{name:<9} {}", c.join("  "));
    }
}
