use std::cmp::Ordering;
use std::fmt;

/// Exponent vector `(α₀, α₁, …, α_m)` of the monomial `h^α₀ ΔW₁^α₁ ⋯ ΔW_m^α_m`.
///
/// Entry 0 pairs with the step size, entry `r` with the `r`-th Brownian
/// increment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        assert!(!entries.is_empty(), "a multi-index has at least the h entry");
        Self(entries)
    }

    pub fn zero(m: usize) -> Self {
        Self(vec![0; m + 1])
    }

    /// `(1, 0, …, 0)`, the drift slot.
    pub fn drift(m: usize) -> Self {
        let mut e = vec![0; m + 1];
        e[0] = 1;
        Self(e)
    }

    /// `e_r` for `r ∈ 1..=m`, the slot of the `r`-th diffusion field.
    pub fn noise(m: usize, r: usize) -> Self {
        assert!((1..=m).contains(&r), "noise index {r} out of 1..={m}");
        let mut e = vec![0; m + 1];
        e[r] = 1;
        Self(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn noise_count(&self) -> usize {
        self.0.len() - 1
    }

    pub fn h_power(&self) -> u32 {
        self.0[0]
    }

    /// Exponents of the increments only, `(α₁, …, α_m)`.
    pub fn noise_powers(&self) -> &[u32] {
        &self.0[1..]
    }

    /// `|α| = α₀ + α₁ + ⋯ + α_m`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α₀ + |α|`: the power of `h^{1/2}` carried by the monomial.
    pub fn weight(&self) -> u32 {
        self.0[0] + self.order()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.0.len(), other.0.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when every entry stays nonnegative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        if self.0.len() != other.0.len() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Enumeration order: by weight, then reverse-lexicographic within a weight
/// (so `h` comes before the squared increments).
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight()
            .cmp(&other.weight())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Every multi-index over `m` noises with `weight ≤ max_weight`, each exactly
/// once, in the [`Ord`] order above. The zero index is included.
pub fn enumerate_multiindices(m: usize, max_weight: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; m + 1];
    fill(&mut current, 0, max_weight, &mut out);
    out.sort();
    out
}

fn fill(current: &mut Vec<u32>, pos: usize, budget: u32, out: &mut Vec<MultiIndex>) {
    if pos == current.len() {
        out.push(MultiIndex(current.clone()));
        return;
    }
    let cost = if pos == 0 { 2 } else { 1 };
    let mut e = 0;
    while e * cost <= budget {
        current[pos] = e;
        fill(current, pos + 1, budget - e * cost, out);
        e += 1;
    }
    current[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn single_noise_weight_one() {
        assert_eq!(enumerate_multiindices(1, 1), vec![mi(&[0, 0]), mi(&[0, 1])]);
    }

    #[test]
    fn single_noise_weight_two() {
        assert_eq!(
            enumerate_multiindices(1, 2),
            vec![mi(&[0, 0]), mi(&[0, 1]), mi(&[1, 0]), mi(&[0, 2])]
        );
    }

    #[test]
    fn two_noises_weight_two_has_seven() {
        let all = enumerate_multiindices(2, 2);
        assert_eq!(all.len(), 7);
        assert_eq!(all[0], mi(&[0, 0, 0]));
        assert_eq!(all[3], mi(&[1, 0, 0]));
    }

    #[test]
    fn weight_zero_is_only_the_zero_index() {
        assert_eq!(enumerate_multiindices(3, 0), vec![MultiIndex::zero(3)]);
    }

    #[test]
    fn count_matches_brute_force_box() {
        for m in 0..4usize {
            for w in 0..7u32 {
                let mut count = 0;
                let side = w as usize + 1;
                let total = side.pow(m as u32 + 1);
                for code in 0..total {
                    let mut c = code;
                    let mut e = Vec::with_capacity(m + 1);
                    for _ in 0..=m {
                        e.push((c % side) as u32);
                        c /= side;
                    }
                    if 2 * e[0] + e[1..].iter().sum::<u32>() <= w {
                        count += 1;
                    }
                }
                assert_eq!(enumerate_multiindices(m, w).len(), count, "m={m} w={w}");
            }
        }
    }

    #[test]
    fn weight_counts_h_twice() {
        assert_eq!(mi(&[1, 0, 0]).weight(), 2);
        assert_eq!(mi(&[0, 1, 1]).weight(), 2);
        assert_eq!(mi(&[2, 1, 0]).weight(), 5);
        assert_eq!(mi(&[2, 1, 0]).order(), 3);
    }
}
