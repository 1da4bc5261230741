//! Exact path-probability enumeration over a finite Markov chain.

use tpsmc_core::kernel::Rational;

/// Probability that a walk from `start` visits `goal` within `depth` steps, summed
/// over every individual path.
pub fn reach_within(p: &[Vec<Rational>], start: usize, goal: usize, depth: usize) -> Rational {
    fn walk(p: &[Vec<Rational>], s: usize, goal: usize, left: usize, mass: Rational, acc: &mut Rational) {
        if s == goal {
            *acc = acc.checked_add(&mass).unwrap();
            return;
        }
        if left == 0 {
            return;
        }
        for (t, w) in p[s].iter().enumerate() {
            if !w.is_zero() {
                walk(p, t, goal, left - 1, mass.checked_mul(w).unwrap(), acc);
            }
        }
    }
    let mut acc = Rational::ZERO;
    walk(p, start, goal, depth, Rational::ONE, &mut acc);
    acc
}
