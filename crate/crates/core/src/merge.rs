//! Oracle-driven chain merging primitives.
//!
//! All merges consume a [`ComparisonSource`]; the returned report carries the
//! merged chain and the number of comparisons this call performed.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::oracle::ComparisonSource;
use crate::poset::Chain;
use crate::rat::shannon_entropy;

/// Result of a merge: the merged chain (a permutation of the inputs, sorted
/// per the oracle) and the comparisons spent producing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeReport {
    pub merged: Chain,
    pub comparisons: u64,
}

/// Merges two disjoint chains by iteratively choosing the minimum.
/// Performs at most `|x| + |y| - 1` comparisons (none if either is empty).
pub fn linear_merge(x: &Chain, y: &Chain, src: &mut dyn ComparisonSource) -> MergeReport {
    let before = src.query_count();
    let mut merged = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        if src.answer(x.elems[i], y.elems[j]) {
            merged.push(x.elems[i]);
            i += 1;
        } else {
            merged.push(y.elems[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&x.elems[i..]);
    merged.extend_from_slice(&y.elems[j..]);
    MergeReport {
        merged: Chain::new(merged),
        comparisons: src.query_count() - before,
    }
}

/// Inserts `v` into the chain `c` by binary search over the `|c| + 1`
/// insertion positions; at most `⌈log2(|c| + 1)⌉` comparisons.
pub fn binary_insert(c: &Chain, v: usize, src: &mut dyn ComparisonSource) -> MergeReport {
    let before = src.query_count();
    let (mut lo, mut hi) = (0usize, c.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if src.answer(v, c.elems[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut merged = c.elems.clone();
    merged.insert(lo, v);
    MergeReport {
        merged: Chain::new(merged),
        comparisons: src.query_count() - before,
    }
}

/// One pairing step of the Huffman merge schedule: merge the chains produced
/// at steps (or initial indices) `left` and `right`; the result is referred to
/// by the next fresh index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanStep {
    pub left: usize,
    pub right: usize,
}

/// The Huffman pairing order for the given chain sizes: repeatedly merge the
/// two smallest, ties broken by smaller index. Merged chains get fresh
/// indices `k, k+1, ...` in creation order. Needs no oracle, so it can be
/// computed in a preprocessing phase and replayed later.
pub fn huffman_plan(sizes: &[usize]) -> Vec<HuffmanStep> {
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| Reverse((s, i)))
        .collect();
    let mut steps = Vec::new();
    let mut next = sizes.len();
    while heap.len() > 1 {
        let Reverse((sa, ia)) = heap.pop().unwrap();
        let Reverse((sb, ib)) = heap.pop().unwrap();
        steps.push(HuffmanStep {
            left: ia,
            right: ib,
        });
        heap.push(Reverse((sa + sb, next)));
        next += 1;
    }
    steps
}

/// Executes a Huffman plan over the given chains with `linear_merge`.
pub fn huffman_execute(
    chains: &[Chain],
    plan: &[HuffmanStep],
    src: &mut dyn ComparisonSource,
) -> MergeReport {
    let before = src.query_count();
    let mut pool: Vec<Chain> = chains.to_vec();
    for step in plan {
        let merged = linear_merge(&pool[step.left], &pool[step.right], src).merged;
        pool.push(merged);
    }
    let merged = pool.pop().expect("huffman plan over at least one chain");
    MergeReport {
        merged,
        comparisons: src.query_count() - before,
    }
}

/// Multiway merge by repeatedly merging the two smallest chains.
///
/// With `g̃` the entropy of the chain-size distribution and `n` the total
/// size, at most `(g̃ + 1) n` comparisons are performed.
pub fn huffman_merge(chains: &[Chain], src: &mut dyn ComparisonSource) -> MergeReport {
    assert!(!chains.is_empty(), "huffman_merge needs at least one chain");
    let sizes: Vec<usize> = chains.iter().map(Chain::len).collect();
    huffman_execute(chains, &huffman_plan(&sizes), src)
}

/// The `(g̃ + 1) n` comparison bound for a multiway merge of these sizes.
pub fn huffman_bound(sizes: &[usize]) -> f64 {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let g = shannon_entropy(sizes.iter().map(|&s| s as f64 / n as f64));
    (g + 1.0) * n as f64
}

/// Hwang-Lin merge of two disjoint nonempty chains.
///
/// The longer chain is split once into blocks of size `2^⌊log2(|X|/|Y|)⌋`
/// (the last block may be partial). Each element of the shorter chain, in
/// increasing order, is located by a linear search over the not-yet-discarded
/// blocks followed by a bisection inside the block it hits; discarded blocks
/// are never revisited. At most `|Y| log2(4|X|/|Y|)` comparisons.
pub fn hwang_lin_merge(x: &Chain, y: &Chain, src: &mut dyn ComparisonSource) -> MergeReport {
    assert!(
        !x.is_empty() && !y.is_empty(),
        "hwang_lin_merge needs nonempty chains"
    );
    let (long, short) = if x.len() >= y.len() { (x, y) } else { (y, x) };
    let before = src.query_count();

    let ratio = long.len() / short.len();
    let block = 1usize << ratio.ilog2();
    let num_blocks = long.len().div_ceil(block);

    let mut merged = Vec::with_capacity(long.len() + short.len());
    // First not-yet-emitted element of the long chain, and current block.
    let mut front = 0usize;
    let mut cur = 0usize;
    for &v in &short.elems {
        let mut placed = false;
        while cur < num_blocks {
            let top = (cur * block + block - 1).min(long.len() - 1);
            if src.answer(v, long.elems[top]) {
                // v lies within this block: bisect for the least element ≥ v
                // among the unemitted part.
                let (mut lo, mut hi) = (front.max(cur * block), top);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if src.answer(v, long.elems[mid]) {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                merged.extend_from_slice(&long.elems[front..lo]);
                merged.push(v);
                front = lo;
                placed = true;
                break;
            } else {
                // v is above the whole block; emit and discard it.
                merged.extend_from_slice(&long.elems[front..=top]);
                front = top + 1;
                cur += 1;
            }
        }
        if !placed {
            // Above every block.
            merged.push(v);
        }
    }
    merged.extend_from_slice(&long.elems[front..]);
    MergeReport {
        merged: Chain::new(merged),
        comparisons: src.query_count() - before,
    }
}

/// The Hwang-Lin comparison bound `|Y| log2(4 |X| / |Y|)` with `|X| ≥ |Y|`.
pub fn hwang_lin_bound(x_len: usize, y_len: usize) -> f64 {
    let (long, short) = if x_len >= y_len {
        (x_len, y_len)
    } else {
        (y_len, x_len)
    };
    short as f64 * (4.0 * long as f64 / short as f64).log2()
}
