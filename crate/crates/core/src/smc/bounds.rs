/// Number of samples needed so that `|p̂ - p| ≤ ε` with probability at least `1 - δ`.
///
/// Without an estimate this is the Okamoto–Hoeffding bound
/// `⌈ln(2/δ) / (2ε²)⌉`. With a current estimate `p̂` it is the variance-adaptive
/// refinement
///
/// ```text
/// ⌈(2/ε²) · ln(2/δ) · (1/4 - (|p̂ - 1/2| - 2ε/3)²)⌉
/// ```
///
/// clamped to the worst case. The factor `1/4 - (·)²` bounds the Bernoulli
/// variance with a margin of `2ε/3` for the error in `p̂`; it reaches `1/4`, and the
/// adaptive bound the worst case, at `|p̂ - 1/2| = 2ε/3`.
pub fn required_samples(epsilon: f64, delta: f64, p_hat: Option<f64>) -> u64 {
    let log_term = (2.0 / delta).ln();
    let worst = (log_term / (2.0 * epsilon * epsilon)).ceil();
    let Some(p) = p_hat else {
        return worst as u64;
    };
    let shift = (p - 0.5).abs() - 2.0 * epsilon / 3.0;
    let adaptive = (2.0 / (epsilon * epsilon) * log_term * (0.25 - shift * shift)).ceil();
    adaptive.clamp(1.0, worst) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(required_samples(0.05, 0.05, None), 738);
        assert_eq!(required_samples(0.05, 0.05, Some(0.9)), 342);
        assert_eq!(required_samples(0.05, 0.05, Some(0.1)), 342);
    }

    #[test]
    fn peak_sits_at_the_shift() {
        let eps = 0.05;
        let peak = required_samples(eps, 0.05, Some(0.5 + 2.0 * eps / 3.0));
        assert_eq!(peak, required_samples(eps, 0.05, None));
        for i in 0..=1000 {
            let p = i as f64 / 1000.0;
            assert!(required_samples(eps, 0.05, Some(p)) <= peak);
        }
        assert!(required_samples(eps, 0.05, Some(0.5)) < peak);
    }

    proptest! {
        #[test]
        fn adaptive_never_exceeds_worst_case(eps in 0.001f64..0.499, delta in 0.001f64..0.999, p in 0.0f64..=1.0) {
            prop_assert!(required_samples(eps, delta, Some(p)) <= required_samples(eps, delta, None));
        }

        #[test]
        fn non_increasing_in_precision_and_confidence(
            eps in 0.01f64..0.4, de in 0.0f64..0.09,
            delta in 0.01f64..0.9, dd in 0.0f64..0.09,
            p in proptest::option::of(0.0f64..=1.0),
        ) {
            prop_assert!(required_samples(eps + de, delta, p) <= required_samples(eps, delta, p));
            prop_assert!(required_samples(eps, delta + dd, p) <= required_samples(eps, delta, p));
        }
    }
}
