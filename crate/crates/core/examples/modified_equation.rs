//! Backward error analysis of the Maxwell-Bloch splitting at one point:
//! method coefficients, the modified field, its Poisson certificate and the
//! effective order.

use stochastic_poisson::algebra::{Jet, MultiIndex};
use stochastic_poisson::integrators::MbSplitting;
use stochastic_poisson::modified::{
    effective_order, method_coefficients, modified_coefficients_matching, poisson_certificate, Candidate,
};
use stochastic_poisson::systems::Builtin;

fn main() {
    let sys = Builtin::maxwell_bloch(0.5, 0.5);
    let y = [1.0, 2.0, 3.0];
    let d = method_coefficients(&MbSplitting::default(), &sys, &y, 6).unwrap();
    let f = modified_coefficients_matching(&d, &sys).unwrap();
    println!("alpha         d_alpha                        f_alpha");
    for (alpha, dv) in d.entries().filter(|(a, _)| a.weight() <= 4) {
        println!("{:<12}  {:<30}  {:?}", format!("{:?}", alpha.entries()), format!("{dv:?}"), f.get(alpha).unwrap());
    }
    let half_y1y2 = |y: &[Jet]| y[0].clone() * y[1].clone() * 0.5;
    let cert = poisson_certificate(&f, &sys, &[Candidate { alpha: MultiIndex::new(vec![2, 0, 0]), hamiltonian: &half_y1y2 }]).unwrap();
    println!("Casimir tangency {:.1e}", cert.casimir_tangency);
    for c in &cert.candidates {
        println!("candidate ½y1y2 for {:?}: residual {:.1e} with sign {}", c.alpha.entries(), c.residual, c.sign);
    }
    let p = effective_order(&f, 1e-10).unwrap();
    println!("effective order p = {} (all classes vanish: {})", p.p, p.all_vanish);
}
