//! End-to-end sorters for a hidden linear order given partial information.
//!
//! Four algorithms, all driven by a [`ComparisonSource`]:
//!
//! * insertion sort: find a maximum chain, binary-insert the rest;
//! * merge sort: greedy chain decomposition, then a Huffman multiway merge;
//! * cautious merge sort: split off a maximum chain A, merge-sort the rest
//!   into a chain B, and finish with merging under partial information;
//! * preprocessed sort: the same query behaviour with every computation that
//!   does not need the oracle hoisted into a reusable preprocessing phase.

use num_traits::One;

use crate::entropy::{
    chain_size_entropy, convex_bipartite_entropy, BipartiteConvexGraph, StabPoint,
};
use crate::merge::{binary_insert, huffman_execute, huffman_plan, HuffmanStep};
use crate::mupi::{
    build_tight_components, build_two_chain_cover, mupi, mupi_core, rebalance, red_contribution,
    MupiError, OutputChain,
};
use crate::oracle::ComparisonSource;
use crate::poset::{
    add_chain_relations, greedy_chain_decomposition, log2_extensions, maximum_chain, Chain,
    ChainDecomposition, Poset,
};
use crate::rat::Rat;
use crate::LinearOrder;

/// The factor in the query bound of the cautious and preprocessed sorters.
pub const CAUTIOUS_FACTOR: f64 = 15.09;

/// One note in the phase breakdown of a sort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseNote {
    pub phase: &'static str,
    pub note: String,
}

/// Outcome of a sorter run: the recovered order, the number of comparisons,
/// the algorithm's proven bound instantiated for this input (infinite when it
/// needs `e(P)` beyond the counting guard), and per-phase notes.
#[derive(Debug, Clone)]
pub struct SortResult {
    pub order: LinearOrder,
    pub comparisons: u64,
    pub bound_value: f64,
    pub phase_breakdown: Vec<PhaseNote>,
}

fn trivial_result(n: usize) -> SortResult {
    SortResult {
        order: (0..n).collect(),
        comparisons: 0,
        bound_value: 0.0,
        phase_breakdown: vec![PhaseNote {
            phase: "preprocessing",
            note: "trivial input".into(),
        }],
    }
}

/// The `15.09 log2 e(P)` bound, when the extension count is within the
/// guard.
fn cautious_bound(p: &Poset) -> f64 {
    log2_extensions(p)
        .map(|l| CAUTIOUS_FACTOR * l)
        .unwrap_or(f64::INFINITY)
}

/// Insertion sort: find a maximum chain, then binary-insert every remaining
/// element. At most `⌈log2 n⌉ (n - |C|)` comparisons.
pub fn insertion_sort_supi(p: &Poset, src: &mut dyn ComparisonSource) -> SortResult {
    let n = p.len();
    if n <= 1 {
        return trivial_result(n);
    }
    let before = src.query_count();
    let chain = maximum_chain(p);
    let chain_len = chain.len();
    let in_chain: Vec<bool> = {
        let mut mark = vec![false; n];
        for &v in &chain.elems {
            mark[v] = true;
        }
        mark
    };
    let mut current = chain;
    for v in (0..n).filter(|&v| !in_chain[v]) {
        current = binary_insert(&current, v, src).merged;
    }
    let comparisons = src.query_count() - before;
    let bound_value = (n as f64).log2().ceil() * (n - chain_len) as f64;
    SortResult {
        order: current.elems,
        comparisons,
        bound_value,
        phase_breakdown: vec![
            PhaseNote {
                phase: "preprocessing",
                note: format!("maximum chain of size {chain_len}"),
            },
            PhaseNote {
                phase: "sorting",
                note: format!("{} binary insertions", n - chain_len),
            },
        ],
    }
}

/// Merge sort: greedy chain decomposition, then a Huffman multiway merge.
/// At most `(g̃ + 1) n` comparisons with `g̃` the entropy of the chain-size
/// distribution.
pub fn merge_sort_supi(p: &Poset, src: &mut dyn ComparisonSource) -> SortResult {
    let n = p.len();
    if n <= 1 {
        return trivial_result(n);
    }
    let before = src.query_count();
    let decomposition = greedy_chain_decomposition(p);
    let g = chain_size_entropy(&decomposition);
    let report = crate::merge::huffman_merge(&decomposition.chains, src);
    let comparisons = src.query_count() - before;
    SortResult {
        order: report.merged.elems,
        comparisons,
        bound_value: (g + 1.0) * n as f64,
        phase_breakdown: vec![
            PhaseNote {
                phase: "preprocessing",
                note: format!("greedy decomposition sizes {:?}", decomposition.sizes()),
            },
            PhaseNote {
                phase: "sorting",
                note: format!("huffman merge, {} comparisons", comparisons),
            },
        ],
    }
}

/// The query bound of the merge sorter for a given `eps > 0`:
/// `(1+eps) log2 e(P) + ((1+eps)(log2 e + log2(1 + 1/eps)) + 1) n`.
pub fn merge_sort_eps_bound(log2_extensions: f64, n: usize, eps: f64) -> f64 {
    (1.0 + eps) * log2_extensions
        + ((1.0 + eps) * (std::f64::consts::LOG2_E + (1.0 + 1.0 / eps).log2()) + 1.0) * n as f64
}

/// Splits off a maximum chain and returns the remaining elements in id
/// order, together with the greedy decomposition of the induced sub-poset
/// mapped back to global ids.
fn chain_and_rest(p: &Poset) -> (Chain, Vec<usize>, ChainDecomposition) {
    let chain = maximum_chain(p);
    let mut in_chain = vec![false; p.len()];
    for &v in &chain.elems {
        in_chain[v] = true;
    }
    let rest: Vec<usize> = (0..p.len()).filter(|&v| !in_chain[v]).collect();
    let sub = p.induced(&rest);
    let decomposition = greedy_chain_decomposition(&sub);
    let global = ChainDecomposition {
        chains: decomposition
            .chains
            .into_iter()
            .map(|c| Chain::new(c.elems.into_iter().map(|i| rest[i]).collect()))
            .collect(),
    };
    (chain, rest, global)
}

/// Cautious merge sort: maximum chain A, merge sort on `P - A` yielding a
/// chain B, then merging under the partial information accumulated so far.
/// At most `15.09 log2 e(P)` comparisons.
pub fn cautious_merge_sort(p: &Poset, src: &mut dyn ComparisonSource) -> SortResult {
    let n = p.len();
    if n <= 1 {
        return trivial_result(n);
    }
    let before = src.query_count();
    let (chain_a, rest, decomposition) = chain_and_rest(p);
    let chain_b = if rest.is_empty() {
        Chain::new(Vec::new())
    } else {
        crate::merge::huffman_merge(&decomposition.chains, src).merged
    };
    let merge_comparisons = src.query_count() - before;
    // The merge discovered exactly the relations internal to P - A, so the
    // current partial information is the closure of P plus the B chain.
    let known = add_chain_relations(p, &chain_b).expect("oracle answers extend the poset");
    let report = mupi(&known, &chain_a, &chain_b, src).expect("cover by construction");
    let comparisons = src.query_count() - before;
    SortResult {
        order: report.order,
        comparisons,
        bound_value: cautious_bound(p),
        phase_breakdown: vec![
            PhaseNote {
                phase: "preprocessing",
                note: format!("maximum chain of size {}", chain_a.len()),
            },
            PhaseNote {
                phase: "sorting",
                note: format!(
                    "merge sort on the rest: {merge_comparisons}, merging under partial information: {}",
                    report.comparisons
                ),
            },
        ],
    }
}

/// Interval-maximum table over a weighted chain: for every interval `[c, d]`
/// of chain positions, the maximum weight `M` and the largest subinterval
/// whose endpoints attain `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionF {
    len: usize,
    /// `table[c][d - c] = (M, first position attaining M, last position)`.
    table: Vec<Vec<(Rat, usize, usize)>>,
}

impl FunctionF {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Maximum weight over `[c, d]` and the largest `[c', d'] ⊆ [c, d]` with
    /// the endpoint weights equal to the maximum.
    pub fn query(&self, c: usize, d: usize) -> (&Rat, (usize, usize)) {
        assert!(c <= d && d < self.len);
        let (m, lo, hi) = &self.table[c][d - c];
        (m, (*lo, *hi))
    }
}

/// Builds the interval-maximum table for the chain `a` under weights `x`
/// by the quadratic forward scan.
pub fn function_f(a: &Chain, x: &StabPoint) -> FunctionF {
    let len = a.len();
    let mut table = Vec::with_capacity(len);
    for c in 0..len {
        let mut row = Vec::with_capacity(len - c);
        let mut best = x.x[a.elems[c]].clone();
        let mut first = c;
        let mut last = c;
        row.push((best.clone(), first, last));
        for d in (c + 1)..len {
            let w = &x.x[a.elems[d]];
            if *w > best {
                best = w.clone();
                first = d;
                last = d;
            } else if *w == best {
                last = d;
            }
            row.push((best.clone(), first, last));
        }
        table.push(row);
    }
    FunctionF { len, table }
}

/// Everything the preprocessed sorter computes before the first comparison.
/// Reusable across any number of hidden orders with the same partial
/// information.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedArtifacts {
    pub chain_a: Chain,
    /// Elements outside the chain, in id order; the B side of `graph`.
    pub rest: Vec<usize>,
    /// Bipartite spanning subgraph of the incomparability graph keeping the
    /// edges between the chain and the rest.
    pub graph: BipartiteConvexGraph,
    /// Minimum-entropy point of `graph` over the whole ground set.
    pub x: StabPoint,
    pub f: FunctionF,
    /// Greedy chain decomposition of `P - A` in global ids, and its Huffman
    /// pairing order.
    pub decomposition: ChainDecomposition,
    pub plan: Vec<HuffmanStep>,
}

/// Phase 1 of the preprocessed sorter: no oracle access by construction.
pub fn preprocess(p: &Poset) -> PreprocessedArtifacts {
    let n = p.len();
    let (chain_a, rest, decomposition) = chain_and_rest(p);
    // Neighborhoods in the A-vs-rest bipartite graph are intervals of the
    // chain.
    let b_nbr: Vec<Option<(usize, usize)>> = rest
        .iter()
        .map(|&r| {
            let mut lo = None;
            let mut hi = None;
            for (i, &u) in chain_a.elems.iter().enumerate() {
                if p.incomparable(u, r) {
                    if lo.is_none() {
                        lo = Some(i);
                    }
                    hi = Some(i);
                }
            }
            debug_assert!(
                lo.iter()
                    .zip(hi.iter())
                    .all(|(&l, &h)| { (l..=h).all(|i| p.incomparable(chain_a.elems[i], r)) }),
                "chain neighborhoods must be intervals"
            );
            lo.map(|l| (l, hi.unwrap()))
        })
        .collect();
    let graph = BipartiteConvexGraph::new(chain_a.elems.clone(), rest.clone(), b_nbr);
    let (_, x0) = convex_bipartite_entropy(&graph);
    let mut xs = x0.x;
    xs.resize(n, Rat::one());
    let x = StabPoint { x: xs };
    let f = function_f(&chain_a, &x);
    let plan = huffman_plan(&decomposition.sizes());
    PreprocessedArtifacts {
        chain_a,
        rest,
        graph,
        x,
        f,
        decomposition,
        plan,
    }
}

/// Phase 2 of the preprocessed sorter: replay the Huffman plan to sort
/// `P - A` into a chain B, update the graph to the new partial information,
/// fix the weights up (inlay elimination and loose vertices), rebalance, and
/// run the core merge.
pub fn preprocessed_sort_with(
    pre: &PreprocessedArtifacts,
    p: &Poset,
    src: &mut dyn ComparisonSource,
) -> SortResult {
    let n = p.len();
    if n <= 1 {
        return trivial_result(n);
    }
    let before = src.query_count();
    let chain_b = if pre.rest.is_empty() {
        Chain::new(Vec::new())
    } else {
        huffman_execute(&pre.decomposition.chains, &pre.plan, src).merged
    };
    let merge_comparisons = src.query_count() - before;

    // Update the graph: the partial information is now P plus the B chain,
    // and the incomparability intervals are recovered by monotone scans.
    let known = add_chain_relations(p, &chain_b).expect("oracle answers extend the poset");
    let cover = build_two_chain_cover(&known, &pre.chain_a, &chain_b).expect("two-chain cover");
    let mut x = pre.x.x.clone();
    let mut out: OutputChain = vec![None; n];

    // Cut-points of the updated graph: empty incomparability interval; rank
    // is the predecessor count in the current closure.
    for (i, &v) in cover.chain_a.elems.iter().enumerate() {
        if cover.inc_a[i].is_none() {
            let rank = i + cover.below_a[i];
            assert!(out[rank].is_none());
            out[rank] = Some(v);
            x[v] = Rat::one();
        }
    }
    for (j, &v) in cover.chain_b.elems.iter().enumerate() {
        if cover.inc_b[j].is_none() {
            let rank = j + cover.below_b[j];
            assert!(out[rank].is_none());
            out[rank] = Some(v);
            x[v] = Rat::one();
        }
    }

    // Components of the tight-edge graph via the interval-maximum table,
    // eliminating inlays: scan B bottom-up, save the tight intervals, union
    // them, and raise every weight inside a union to its boundary value.
    let mut tight: Vec<(usize, usize, usize)> = Vec::new(); // (j, c', d')
    for (j, nbr) in cover.inc_b.iter().enumerate() {
        let Some((c, d)) = *nbr else { continue };
        let (m, (c1, d1)) = pre.f.query(c, d);
        if x[cover.chain_b.elems[j]].clone() + m.clone() == Rat::one() {
            tight.push((j, c1, d1));
        }
    }
    let mut unions: Vec<(usize, usize, usize, usize)> = Vec::new(); // (u, u', v, v')
    for &(j, c1, d1) in &tight {
        match unions.last_mut() {
            Some((ulo, uhi, _, vhi)) if c1 <= *uhi => {
                *uhi = (*uhi).max(d1);
                *ulo = (*ulo).min(c1);
                *vhi = j;
            }
            _ => unions.push((c1, d1, j, j)),
        }
    }
    for w in unions.windows(2) {
        assert!(w[0].1 < w[1].0, "tight interval unions must be disjoint");
    }
    for &(ulo, uhi, vlo, vhi) in &unions {
        let wa = x[cover.chain_a.elems[ulo]].clone();
        let wb = x[cover.chain_b.elems[vlo]].clone();
        // The boundary weights must agree pairwise; the update below relies
        // on it.
        assert_eq!(
            wa,
            x[cover.chain_a.elems[uhi]].clone(),
            "union boundary weights differ"
        );
        assert_eq!(
            wb,
            x[cover.chain_b.elems[vhi]].clone(),
            "union boundary weights differ"
        );
        assert_eq!(
            wa.clone() + wb.clone(),
            Rat::one(),
            "union boundary not tight"
        );
        for i in ulo..=uhi {
            let e = cover.chain_a.elems[i];
            assert!(x[e] <= wa, "inlay elimination may only increase weights");
            x[e] = wa.clone();
        }
        for j in vlo..=vhi {
            let e = cover.chain_b.elems[j];
            assert!(x[e] <= wb, "inlay elimination may only increase weights");
            x[e] = wb.clone();
        }
    }

    // Loose vertices of B, bottom-up: raise each to the complement of the
    // largest weight among its remaining A neighbors (the touching
    // components' weights or the gap maximum).
    let in_union_b: Vec<bool> = {
        let mut mark = vec![false; cover.chain_b.len()];
        for &(_, _, vlo, vhi) in &unions {
            for m in mark.iter_mut().take(vhi + 1).skip(vlo) {
                *m = true;
            }
        }
        mark
    };
    for (j, nbr) in cover.inc_b.iter().enumerate() {
        let Some((c, d)) = *nbr else { continue };
        if in_union_b[j] {
            continue;
        }
        let max_a = (c..=d)
            .map(|i| x[cover.chain_a.elems[i]].clone())
            .max()
            .expect("nonempty interval");
        let e = cover.chain_b.elems[j];
        let target = Rat::one() - max_a;
        debug_assert!(x[e] <= target);
        x[e] = target;
    }
    // Loose vertices of A, bottom-up; no new component can arise here.
    for (i, nbr) in cover.inc_a.iter().enumerate() {
        let Some((c, d)) = *nbr else { continue };
        let e = cover.chain_a.elems[i];
        let has_tight =
            (c..=d).any(|j| x[e].clone() + x[cover.chain_b.elems[j]].clone() == Rat::one());
        if has_tight {
            continue;
        }
        let max_b = (c..=d)
            .map(|j| x[cover.chain_b.elems[j]].clone())
            .max()
            .expect("nonempty interval");
        let target = Rat::one() - max_b;
        debug_assert!(x[e] <= target);
        x[e] = target;
    }

    // Rebalance to local optimality, orient the chains so the red
    // contribution does not exceed the blue one, and run the core.
    let x = StabPoint { x };
    let tc = build_tight_components(&cover, &x).expect("loose vertices were eliminated");
    let (x, tc) = rebalance(&cover, &x, &tc);
    let (red, blue) = red_contribution(&x, &tc, n);
    let (cover, final_x) = if red > blue {
        let swapped =
            build_two_chain_cover(&known, &chain_b, &pre.chain_a).expect("two-chain cover");
        (swapped, x)
    } else {
        (cover, x)
    };
    let report = mupi_core(&cover, final_x, src, out).expect("locally optimal point");
    let comparisons = src.query_count() - before;
    SortResult {
        order: report.order,
        comparisons,
        bound_value: cautious_bound(p),
        phase_breakdown: vec![
            PhaseNote {
                phase: "preprocessing",
                note: format!(
                    "chain of size {}, entropy point and interval table reused",
                    pre.chain_a.len()
                ),
            },
            PhaseNote {
                phase: "sorting",
                note: format!(
                    "huffman replay: {merge_comparisons}, core merge: {}",
                    report.core_comparisons
                ),
            },
        ],
    }
}

/// Preprocessed sort: phase 1 then phase 2. At most `15.09 log2 e(P)`
/// comparisons, with every oracle access confined to phase 2.
pub fn preprocessed_sort(p: &Poset, src: &mut dyn ComparisonSource) -> SortResult {
    let n = p.len();
    if n <= 1 {
        return trivial_result(n);
    }
    let pre = preprocess(p);
    preprocessed_sort_with(&pre, p, src)
}

/// Convenience used by the CLI and tests: run a sorter by name.
pub fn run_sorter(
    name: &str,
    p: &Poset,
    src: &mut dyn ComparisonSource,
) -> Result<SortResult, MupiError> {
    Ok(match name {
        "insertion" => insertion_sort_supi(p, src),
        "merge" => merge_sort_supi(p, src),
        "cautious" => cautious_merge_sort(p, src),
        "preprocessed" => preprocessed_sort(p, src),
        other => panic!("unknown sorter {other}"),
    })
}

/// Sorter names in CLI order.
pub const SORTER_NAMES: [&str; 4] = ["insertion", "merge", "cautious", "preprocessed"];
