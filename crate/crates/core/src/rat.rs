//! Exact rational arithmetic used by the weight machinery.
//!
//! Every weight that the entropy and merging code manipulates is of the form
//! `p/q` with `q <= 2n` (balance targets `|A∩K|/|K|`, the lifts `1/2` and
//! `1/2 + 1/(2n)`, and copies of existing weights), so a fixed-width rational
//! is exact here. `i128` leaves ample headroom for the cross-multiplications
//! done by comparisons. The adversary oracle, whose denominators double on
//! every query, uses `BigRational` instead.

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational weight.
pub type Rat = Ratio<i128>;

/// `p/q` as a [`Rat`].
pub fn rat(p: i128, q: i128) -> Rat {
    Ratio::new(p, q)
}

/// Base-2 logarithm of a positive rational, in double precision.
pub fn log2(x: &Rat) -> f64 {
    debug_assert!(x.is_positive());
    let n = x.numer().to_f64().expect("numerator out of f64 range");
    let d = x.denom().to_f64().expect("denominator out of f64 range");
    n.log2() - d.log2()
}

/// The binary entropy function `h(p) = -p log p - (1-p) log (1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Shannon entropy (base 2) of a distribution given as non-negative weights
/// summing to 1.
pub fn shannon_entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    let mut h = 0.0;
    for p in probs {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h
}

/// True when `x` is one, avoiding an allocation-free comparison helper at call
/// sites.
pub fn is_one(x: &Rat) -> bool {
    x.is_one()
}

/// True when `x` is zero.
pub fn is_zero(x: &Rat) -> bool {
    x.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_of_small_rationals() {
        assert_eq!(log2(&rat(1, 1)), 0.0);
        assert_eq!(log2(&rat(1, 2)), -1.0);
        assert!((log2(&rat(3, 4)) - (3.0f64.log2() - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_endpoints_and_midpoint() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-12);
        assert!((binary_entropy(1.0 / 3.0) - 0.9182958340544896).abs() < 1e-12);
    }

    #[test]
    fn shannon_entropy_uniform() {
        let h = shannon_entropy((0..8).map(|_| 0.125));
        assert!((h - 3.0).abs() < 1e-12);
    }
}
