//! Normalized geometric ranking selection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::optimizer::Individual;

/// P_rep(r) = P₀(1−P₀)^r / (1 − (1−P₀)^n_pop)
/// for the individual of rank `r` (0 = fittest) in a population of
/// `n_pop`.
pub fn selection_probability(rank: usize, p0: f64, n_pop: usize) -> f64 {
    debug_assert!(rank < n_pop);
    let q = 1.0 - p0;
    p0 * q.powi(rank as i32) / (1.0 - q.powi(n_pop as i32))
}

/// Samples a rank from the geometric ranking distribution with a single
/// uniform draw, by inverting the closed-form CDF:
///   u < CDF(r) = (1 − q^{r+1}) / (1 − q^N)  ⇔  r = ⌊ln(1 − u(1 − q^N)) / ln q⌋.
pub fn select_rank<R: Rng + ?Sized>(n_pop: usize, p0: f64, rng: &mut R) -> usize {
    debug_assert!(n_pop >= 1);
    if n_pop == 1 {
        return 0;
    }
    let q = 1.0 - p0;
    let u: f64 = rng.random();
    let x = 1.0 - u * (1.0 - q.powi(n_pop as i32));
    let rank = (x.ln() / q.ln()).floor() as isize;
    rank.clamp(0, n_pop as isize - 1) as usize
}

/// Picks a parent from a population sorted ascending by F* (rank 0 first).
pub fn select_parent<'a, R: Rng + ?Sized>(
    sorted_population: &'a [Individual],
    p0: f64,
    rng: &mut R,
) -> Result<&'a Individual> {
    if sorted_population.is_empty() {
        return Err(Error::Config("cannot select a parent from an empty population".into()));
    }
    let rank = select_rank(sorted_population.len(), p0, rng);
    Ok(&sorted_population[rank])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probabilities_sum_to_one() {
        for &(p0, n) in &[(0.05, 300), (0.2, 10), (0.5, 2), (0.9, 7)] {
            let sum: f64 = (0..n).map(|r| selection_probability(r, p0, n)).sum();
            assert!((sum - 1.0).abs() < 1e-12, "p0={p0}, n={n}: sum {sum}");
        }
    }

    #[test]
    fn hand_evaluated_cases() {
        // p0 = 0.5, n = 2, r = 0: 0.5/(1 − 0.25) = 2/3.
        assert!((selection_probability(0, 0.5, 2) - 2.0 / 3.0).abs() < 1e-15);
        // p0 = 0.05, n = 300, r = 0: denominator 1 − 0.95³⁰⁰ ≈ 1.
        let p = selection_probability(0, 0.05, 300);
        assert!((p - 0.05).abs() < 1e-6, "got {p}");
        assert!(p > 0.05, "denominator is below one");
    }

    #[test]
    fn strong_pressure_concentrates_on_rank_zero() {
        assert!(selection_probability(0, 0.999, 50) > 0.998);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let hits = (0..10_000).filter(|_| select_rank(50, 0.999, &mut rng) == 0).count();
        assert!(hits >= 9_970, "rank 0 drawn {hits}/10000 times");
    }

    #[test]
    fn singleton_population_always_selected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(select_rank(1, 0.2, &mut rng), 0);
        }
    }

    /// Kolmogorov–Smirnov distance between the empirical and analytic
    /// distributions over 10⁶ draws stays below 0.005.
    #[test]
    fn ks_distance_below_five_thousandths() {
        let (n, p0, draws) = (10usize, 0.2f64, 1_000_000usize);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            counts[select_rank(n, p0, &mut rng)] += 1;
        }
        let mut empirical_cdf = 0.0;
        let mut analytic_cdf = 0.0;
        let mut ks: f64 = 0.0;
        for r in 0..n {
            empirical_cdf += counts[r] as f64 / draws as f64;
            analytic_cdf += selection_probability(r, p0, n);
            ks = ks.max((empirical_cdf - analytic_cdf).abs());
        }
        assert!(ks < 0.005, "KS distance {ks}");
    }

    #[test]
    fn empirical_frequencies_follow_the_law() {
        let (n, p0, draws) = (10, 0.2, 200_000);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            counts[select_rank(n, p0, &mut rng)] += 1;
        }
        for r in 0..n {
            let expected = selection_probability(r, p0, n) * draws as f64;
            let relative = (counts[r] as f64 - expected).abs() / expected;
            assert!(
                relative < 0.03,
                "rank {r}: observed {} vs expected {expected:.1} ({:.2}% off)",
                counts[r],
                relative * 100.0
            );
        }
    }
}
