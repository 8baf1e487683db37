use super::{AlgebraError, MultiIndex};

/// `E[ξ^n]` for a standard normal `ξ` and even `n`: `2^{-n/2} n! / (n/2)!`.
pub fn gaussian_even_moment(n: u32) -> f64 {
    debug_assert!(n % 2 == 0);
    // (n-1)!! evaluated as a product keeps large n exact longer than factorials
    (1..n).step_by(2).map(f64::from).product()
}

/// The constant `K_{α¹,α²} = Π_i E[ξ_i^{α¹_i+α²_i}]` weighting the pair
/// `(α¹, α²)` in the mean-square order conditions.
///
/// Only the increment entries `i = 1..m` enter. Pairs with an odd component
/// sum have a vanishing moment and are rejected.
pub fn moment_constant(a: &MultiIndex, b: &MultiIndex) -> Result<f64, AlgebraError> {
    if a.noise_count() != b.noise_count() {
        return Err(AlgebraError::ShapeMismatch);
    }
    let mut k = 1.0;
    for (i, (x, y)) in a.noise_powers().iter().zip(b.noise_powers()).enumerate() {
        let s = x + y;
        if s % 2 == 1 {
            return Err(AlgebraError::OddMoment { component: i + 1 });
        }
        k *= gaussian_even_moment(s);
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn closed_form(s: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        2f64.powf(-(s as f64) / 2.0) * fact(s) / fact(s / 2)
    }

    #[test]
    fn second_and_fourth_moments() {
        assert_eq!(moment_constant(&mi(&[0, 1]), &mi(&[0, 1])).unwrap(), 1.0);
        assert_eq!(moment_constant(&mi(&[0, 2]), &mi(&[0, 2])).unwrap(), 3.0);
    }

    #[test]
    fn odd_sum_is_rejected() {
        assert!(matches!(
            moment_constant(&mi(&[0, 1]), &mi(&[0, 2])),
            Err(AlgebraError::OddMoment { component: 1 })
        ));
    }

    #[test]
    fn double_factorial_matches_factorial_formula() {
        for s in (0..=16).step_by(2) {
            let a = gaussian_even_moment(s);
            let b = closed_form(s);
            assert!((a - b).abs() <= 1e-12 * b, "s={s}: {a} vs {b}");
        }
    }

    #[test]
    fn h_entry_does_not_contribute() {
        let k = moment_constant(&mi(&[3, 1, 1]), &mi(&[0, 1, 3])).unwrap();
        assert_eq!(k, 1.0 * 3.0);
    }
}
