//! Skew-symmetry, Jacobi and Casimir residuals of every builtin system.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stochastic_poisson::systems::{structure_check, Builtin, PoissonSystem};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for sys in Builtin::catalog() {
        let points: Vec<Vec<f64>> = (0..100).map(|_| sys.sample_point(&mut rng)).collect();
        let r = structure_check(&sys, &points).expect("sample points lie in the domain");
        println!(
            "{:<16} skew {:.1e}  jacobi {:.1e}  casimir {:.1e}  {}",
            sys.label(),
            r.skew,
            r.jacobi,
            r.casimir,
            if r.passed() { "ok" } else { "FAILED" }
        );
    }
}
