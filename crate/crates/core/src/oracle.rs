//! Comparison sources answering "is u ≤ v?" queries.
//!
//! Two sources are provided: a hidden linear order for correctness testing,
//! and the interval-halving adversary for lower-bound testing. Both count
//! every query.
//!
//! The adversary keeps one open interval per element, consistent with the
//! initial poset: whenever `u <_P v`, the interval of `u` lies entirely to the
//! left of the interval of `v`. Queries are answered by comparing interval
//! midpoints, and the two queried intervals are halved so that the answer
//! stays consistent forever. Midpoint halving doubles denominators, so the
//! endpoints are arbitrary-precision rationals.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::poset::{Chain, Poset};

/// A source of comparison answers. `answer(u, v)` means "u ≤ v in the hidden
/// total order" and increments the query count by exactly one.
pub trait ComparisonSource {
    fn answer(&mut self, u: usize, v: usize) -> bool;
    fn query_count(&self) -> u64;
}

/// Error returned when a claimed hidden order contradicts the poset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotAnExtensionError;

impl fmt::Display for NotAnExtensionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "order is not a linear extension of the poset")
    }
}

impl std::error::Error for NotAnExtensionError {}

/// Oracle backed by a concrete hidden linear order.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenOrderOracle {
    rank: Vec<usize>,
    count: u64,
}

impl HiddenOrderOracle {
    /// `order` lists the elements from smallest to largest and must extend
    /// `p`.
    pub fn new(order: &[usize], p: &Poset) -> Result<Self, NotAnExtensionError> {
        let n = order.len();
        assert_eq!(n, p.len(), "order length must match the poset");
        let mut rank = vec![usize::MAX; n];
        for (r, &v) in order.iter().enumerate() {
            assert!(
                v < n && rank[v] == usize::MAX,
                "order must be a permutation"
            );
            rank[v] = r;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if p.less(order[j], order[i]) {
                    return Err(NotAnExtensionError);
                }
            }
        }
        Ok(HiddenOrderOracle { rank, count: 0 })
    }

    /// The hidden order as a permutation, smallest first.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.rank.len()];
        for (v, &r) in self.rank.iter().enumerate() {
            order[r] = v;
        }
        order
    }
}

impl ComparisonSource for HiddenOrderOracle {
    fn answer(&mut self, u: usize, v: usize) -> bool {
        self.count += 1;
        self.rank[u] <= self.rank[v]
    }

    fn query_count(&self) -> u64 {
        self.count
    }
}

/// Per-element open intervals `(lo_v, hi_v) ⊆ (0, 1)` with exact endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCollection {
    pub intervals: Vec<(BigRational, BigRational)>,
}

impl IntervalCollection {
    /// All elements get the full interval `(0, 1)`.
    pub fn full(n: usize) -> Self {
        let zero = BigRational::zero();
        let one = BigRational::one();
        IntervalCollection {
            intervals: (0..n).map(|_| (zero.clone(), one.clone())).collect(),
        }
    }

    /// Consistency with `p`: `u <_P v` implies `hi_u ≤ lo_v`.
    pub fn is_consistent_with(&self, p: &Poset) -> bool {
        for (u, v) in p.pairs() {
            if self.intervals[u].1 > self.intervals[v].0 {
                return false;
            }
        }
        self.intervals
            .iter()
            .all(|(lo, hi)| !lo.is_negative() && *hi <= BigRational::one() && lo < hi)
    }

    fn midpoint(&self, v: usize) -> BigRational {
        let (lo, hi) = &self.intervals[v];
        (lo + hi) / BigRational::from_integer(BigInt::from(2))
    }
}

/// The interval collection induced by the level decomposition: an element in
/// level `L_i` gets `(Σ_{j<i} |L_j| / n, Σ_{j≤i} |L_j| / n)`. Feasible, not
/// necessarily optimal.
pub fn level_intervals(p: &Poset) -> IntervalCollection {
    let ld = crate::poset::levels(p);
    let n = p.len();
    let mut intervals = vec![(BigRational::zero(), BigRational::one()); n];
    let mut below = 0usize;
    for level in &ld.levels {
        let lo = BigRational::new(BigInt::from(below), BigInt::from(n));
        let hi = BigRational::new(BigInt::from(below + level.len()), BigInt::from(n));
        for &v in level {
            intervals[v] = (lo.clone(), hi.clone());
        }
        below += level.len();
    }
    IntervalCollection { intervals }
}

/// The interval-halving adversary.
///
/// On a query `(a, b)` it answers "yes" iff `m_a ≤ m_b` where `m` is the
/// interval midpoint; a "yes" shrinks `a` to its lower half and `b` to its
/// upper half, a "no" does the opposite. A query `(v, v)` is answered "yes"
/// without shrinking, as forced by reflexivity.
#[derive(Debug, Clone)]
pub struct AdversaryOracle {
    base: Poset,
    intervals: IntervalCollection,
    count: u64,
}

impl AdversaryOracle {
    /// `ivs` must be consistent with `p`.
    pub fn new(p: &Poset, ivs: IntervalCollection) -> Self {
        debug_assert!(ivs.is_consistent_with(p));
        AdversaryOracle {
            base: p.clone(),
            intervals: ivs,
            count: 0,
        }
    }

    /// Adversary over the all-`(0,1)` collection; optimal when `p` is an
    /// antichain.
    pub fn full(p: &Poset) -> Self {
        AdversaryOracle::new(p, IntervalCollection::full(p.len()))
    }

    pub fn base_poset(&self) -> &Poset {
        &self.base
    }

    pub fn intervals(&self) -> &IntervalCollection {
        &self.intervals
    }
}

impl ComparisonSource for AdversaryOracle {
    fn answer(&mut self, a: usize, b: usize) -> bool {
        self.count += 1;
        if a == b {
            return true;
        }
        let ma = self.intervals.midpoint(a);
        let mb = self.intervals.midpoint(b);
        let yes = ma <= mb;
        if yes {
            self.intervals.intervals[a].1 = ma;
            self.intervals.intervals[b].0 = mb;
        } else {
            self.intervals.intervals[a].0 = ma;
            self.intervals.intervals[b].1 = mb;
        }
        yes
    }

    fn query_count(&self) -> u64 {
        self.count
    }
}

/// Convenience: the oracle for a hidden order stored in a [`Chain`].
pub fn hidden_order_oracle(
    order: &Chain,
    p: &Poset,
) -> Result<HiddenOrderOracle, NotAnExtensionError> {
    HiddenOrderOracle::new(&order.elems, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{self, add_chain_relations, transitive_closure};

    fn br(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn hidden_oracle_answers_and_counts() {
        let p = Poset::antichain(3);
        let mut src = HiddenOrderOracle::new(&[2, 0, 1], &p).unwrap();
        assert!(src.answer(2, 0));
        assert!(src.answer(2, 2));
        assert!(!src.answer(1, 0));
        assert_eq!(src.query_count(), 3);
        assert_eq!(src.order(), vec![2, 0, 1]);
    }

    #[test]
    fn hidden_oracle_rejects_contradicting_order() {
        let p = Poset::chain(3);
        assert_eq!(
            HiddenOrderOracle::new(&[1, 0, 2], &p),
            Err(NotAnExtensionError)
        );
    }

    #[test]
    fn level_intervals_cases() {
        let ivs = level_intervals(&Poset::antichain(3));
        for v in 0..3 {
            assert_eq!(ivs.intervals[v], (br(0, 1), br(1, 1)));
        }

        let ivs = level_intervals(&Poset::chain(3));
        assert_eq!(ivs.intervals[0], (br(0, 1), br(1, 3)));
        assert_eq!(ivs.intervals[1], (br(1, 3), br(2, 3)));
        assert_eq!(ivs.intervals[2], (br(2, 3), br(1, 1)));

        // Fence a<c, b<c, b<d: levels {a,b}, {c,d}.
        let p = transitive_closure(&[(0, 2), (1, 2), (1, 3)], 4).unwrap();
        let ivs = level_intervals(&p);
        assert_eq!(ivs.intervals[0], (br(0, 1), br(1, 2)));
        assert_eq!(ivs.intervals[1], (br(0, 1), br(1, 2)));
        assert_eq!(ivs.intervals[2], (br(1, 2), br(1, 1)));
        assert_eq!(ivs.intervals[3], (br(1, 2), br(1, 1)));
        assert!(ivs.is_consistent_with(&p));
    }

    #[test]
    fn adversary_halves_intervals() {
        let p = Poset::antichain(2);
        let mut adv = AdversaryOracle::full(&p);
        assert!(adv.answer(0, 1));
        assert_eq!(adv.intervals().intervals[0], (br(0, 1), br(1, 2)));
        assert_eq!(adv.intervals().intervals[1], (br(1, 2), br(1, 1)));

        // Now m_1 = 3/4 > m_0 = 1/4.
        assert!(!adv.answer(1, 0));
        assert_eq!(adv.intervals().intervals[1], (br(3, 4), br(1, 1)));
        assert_eq!(adv.intervals().intervals[0], (br(0, 1), br(1, 4)));
        assert_eq!(adv.query_count(), 2);
    }

    #[test]
    fn adversary_self_query_is_yes_without_change() {
        let p = Poset::antichain(2);
        let mut adv = AdversaryOracle::full(&p);
        let before = adv.intervals().clone();
        assert!(adv.answer(1, 1));
        assert_eq!(adv.intervals(), &before);
        assert_eq!(adv.query_count(), 1);
    }

    #[test]
    fn adversary_agrees_with_known_relations() {
        let p = Poset::chain(4);
        let mut adv = AdversaryOracle::new(&p, level_intervals(&p));
        assert!(adv.answer(0, 3));
        assert!(!adv.answer(3, 1));
        assert!(adv.intervals().is_consistent_with(&p));
    }

    #[test]
    fn adversary_stays_consistent_with_accumulated_answers() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for seed in 0..20u64 {
            let n = 2 + (seed as usize % 6);
            let p = poset::random_poset(n, 0.3, seed);
            let mut adv = AdversaryOracle::new(&p, level_intervals(&p));
            let mut known = p.clone();
            for _ in 0..40 {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a == b {
                    continue;
                }
                let yes = adv.answer(a, b);
                let (lo, hi) = if yes { (a, b) } else { (b, a) };
                known = add_chain_relations(&known, &Chain::new(vec![lo, hi]))
                    .expect("adversary answers must stay acyclic");
                assert!(adv.intervals().is_consistent_with(&known));
            }
        }
    }
}
