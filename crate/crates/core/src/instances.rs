//! Instance generators used by the tests, the verification sweeps, and the
//! CLI.
//!
//! Width-2 instances are produced from two labelled chains with staircase
//! cross-relations: for each position of chain A a prefix of chain B lies
//! below and a suffix lies above, with the prefix sizes non-decreasing and the
//! suffix sizes non-increasing along A. Every poset covered by two chains has
//! such a representation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::poset::{random_poset, transitive_closure, Chain, Poset};

/// Poset on `k + m` elements: chain A = `0..k`, chain B = `k..k+m`,
/// `below[i]` elements of B below `a_i` and `above[i]` above it.
pub fn two_chain_poset(
    k: usize,
    m: usize,
    below: &[usize],
    above: &[usize],
) -> (Poset, Chain, Chain) {
    assert_eq!(below.len(), k);
    assert_eq!(above.len(), k);
    let mut pairs = Vec::new();
    for i in 1..k {
        pairs.push((i - 1, i));
    }
    for j in 1..m {
        pairs.push((k + j - 1, k + j));
    }
    for i in 0..k {
        debug_assert!(below[i] + above[i] <= m);
        for j in 0..below[i] {
            pairs.push((k + j, i));
        }
        for j in (m - above[i])..m {
            pairs.push((i, k + j));
        }
    }
    let p = transitive_closure(&pairs, k + m).expect("staircase relations are acyclic");
    (
        p,
        Chain::new((0..k).collect()),
        Chain::new((k..k + m).collect()),
    )
}

/// All two-chain staircase posets on `n` elements, for every split of the
/// ground set. Intended for exhaustive sweeps at small `n`.
pub fn enumerate_two_chain_posets(n: usize) -> Vec<(Poset, Chain, Chain)> {
    fn rec(
        i: usize,
        k: usize,
        m: usize,
        below_min: usize,
        above_max: usize,
        below: &mut Vec<usize>,
        above: &mut Vec<usize>,
        out: &mut Vec<(Poset, Chain, Chain)>,
    ) {
        if i == k {
            out.push(two_chain_poset(k, m, below, above));
            return;
        }
        for b in below_min..=m {
            for a in 0..=above_max.min(m - b) {
                below[i] = b;
                above[i] = a;
                rec(i + 1, k, m, b, a, below, above, out);
            }
        }
    }
    let mut out = Vec::new();
    for k in 0..=n {
        let m = n - k;
        let mut below = vec![0usize; k];
        let mut above = vec![0usize; k];
        rec(0, k, m, 0, m, &mut below, &mut above, &mut out);
    }
    out
}

/// Deterministic random two-chain poset together with its cover chains.
pub fn random_two_chain_poset(n: usize, seed: u64) -> (Poset, Chain, Chain) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(7));
    let k = rng.gen_range(0..=n);
    let m = n - k;
    let mut below = vec![0usize; k];
    let mut above = vec![0usize; k];
    let mut below_min = 0usize;
    let mut above_max = m;
    for i in 0..k {
        below[i] = rng.gen_range(below_min..=m);
        above[i] = rng.gen_range(0..=above_max.min(m - below[i]));
        below_min = below[i];
        above_max = above[i];
    }
    two_chain_poset(k, m, &below, &above)
}

/// A deterministic corpus of small posets: structured families plus random
/// transitive closures at a range of densities.
pub fn small_corpus(n: usize, random_count: usize, seed: u64) -> Vec<Poset> {
    let mut out = Vec::new();
    out.push(Poset::chain(n));
    out.push(Poset::antichain(n));
    if n >= 2 {
        // Union of two chains of balanced sizes.
        let k = n / 2;
        let mut pairs = Vec::new();
        for i in 1..k {
            pairs.push((i - 1, i));
        }
        for j in (k + 1)..n {
            pairs.push((j - 1, j));
        }
        out.push(transitive_closure(&pairs, n).unwrap());
        // Fence: alternating up-down zigzag.
        let mut pairs = Vec::new();
        for v in 0..n - 1 {
            if v % 2 == 0 {
                pairs.push((v, v + 1));
            } else {
                pairs.push((v + 1, v));
            }
        }
        out.push(transitive_closure(&pairs, n).unwrap());
        // Bipartite crown: lower half below upper half except the diagonal.
        let half = n / 2;
        let mut pairs = Vec::new();
        for u in 0..half {
            for w in half..n {
                if w - half != u {
                    pairs.push((u, w));
                }
            }
        }
        out.push(transitive_closure(&pairs, n).unwrap());
    }
    for s in 0..random_count {
        let density = 0.1 + 0.8 * (s as f64 / random_count.max(1) as f64);
        out.push(random_poset(n, density, seed.wrapping_add(s as u64)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_poset_shape() {
        let (p, a, b) = two_chain_poset(2, 2, &[0, 1], &[1, 0]);
        // a0 < b3 (one above), b2 < a1 (one below).
        assert!(p.less(0, 3));
        assert!(p.less(2, 1));
        assert!(p.incomparable(0, 2));
        assert!(p.incomparable(1, 3));
        assert!(a.is_chain_of(&p) && b.is_chain_of(&p));
        assert!(p.validate());
    }

    #[test]
    fn enumeration_is_valid_and_sized() {
        for n in 0..=5 {
            let all = enumerate_two_chain_posets(n);
            assert!(!all.is_empty());
            for (p, a, b) in &all {
                assert!(p.validate());
                assert_eq!(a.len() + b.len(), n);
                assert!(a.is_chain_of(p) && b.is_chain_of(p));
            }
        }
        let n2 = enumerate_two_chain_posets(2);
        assert!(n2.iter().any(|(p, _, _)| p.incomparable(0, 1)));
    }

    #[test]
    fn random_two_chain_poset_is_deterministic() {
        let (p1, a1, b1) = random_two_chain_poset(9, 3);
        let (p2, a2, b2) = random_two_chain_poset(9, 3);
        assert_eq!(p1, p2);
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        assert!(p1.validate());
    }

    #[test]
    fn corpus_contains_families_and_is_deterministic() {
        let c1 = small_corpus(6, 10, 42);
        let c2 = small_corpus(6, 10, 42);
        assert_eq!(c1.len(), c2.len());
        assert!(c1.iter().zip(&c2).all(|(p, q)| p == q));
        assert!(c1.iter().all(|p| p.validate()));
    }
}
