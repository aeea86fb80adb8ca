//! Graph entropy machinery for convex bipartite graphs.
//!
//! The entropy of a graph is the minimum of `-(1/n) Σ log2 x_v` over points
//! `x` of its stable set polytope. For bipartite graphs the minimum is
//! attained by a block partition `(A_i, B_i)` built by repeatedly extracting
//! a subset of the A-side maximizing `|A_i| / |N(A_i)|`; the optimal point
//! assigns `|A_i|/(|A_i|+|B_i|)` on the A-side of a block and the complement
//! on the B-side.
//!
//! Two routes compute that partition here: a subset-enumeration brute force
//! (the test oracle), and the fast route which finds the maximum ratio by
//! bisection over candidate fractions, decides each guess with a greedy
//! b-matching on the convex graph, and extracts the maximizer from the final
//! flow by a breadth-first search from the sink in the reversed residual
//! network.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed};

use crate::poset::ChainDecomposition;
use crate::rat::{binary_entropy, log2, rat, shannon_entropy, Rat};

/// Guard for the brute-force partition oracle.
pub const BRUTEFORCE_GUARD: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TooLargeError {
    pub size: usize,
    pub guard: usize,
}

impl fmt::Display for TooLargeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "A-side of size {} exceeds the brute-force guard {}",
            self.size, self.guard
        )
    }
}

impl std::error::Error for TooLargeError {}

/// A bipartite graph whose B-side neighborhoods are intervals of the ordered
/// A-side (an "A-convex" graph).
///
/// Vertices carry external element ids so weight vectors over a larger
/// universe can be shared with the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteConvexGraph {
    pub a_ids: Vec<usize>,
    pub b_ids: Vec<usize>,
    /// Inclusive interval of A-side positions adjacent to each B vertex;
    /// `None` encodes an empty neighborhood.
    pub b_nbr: Vec<Option<(usize, usize)>>,
}

impl BipartiteConvexGraph {
    pub fn new(a_ids: Vec<usize>, b_ids: Vec<usize>, b_nbr: Vec<Option<(usize, usize)>>) -> Self {
        assert_eq!(b_ids.len(), b_nbr.len());
        for nbr in b_nbr.iter().flatten() {
            assert!(
                nbr.0 <= nbr.1 && nbr.1 < a_ids.len(),
                "interval out of range"
            );
        }
        BipartiteConvexGraph {
            a_ids,
            b_ids,
            b_nbr,
        }
    }

    /// Total number of vertices.
    pub fn order(&self) -> usize {
        self.a_ids.len() + self.b_ids.len()
    }

    /// Iterates over the edges as `(a_id, b_id)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.b_nbr.iter().enumerate().flat_map(move |(bj, nbr)| {
            let (lo, hi) = match nbr {
                Some(iv) => (iv.0, iv.1 + 1),
                None => (0, 0),
            };
            (lo..hi).map(move |ai| (self.a_ids[ai], self.b_ids[bj]))
        })
    }

    /// Largest element id mentioned, plus one. Weight vectors over the graph
    /// use this universe size.
    pub fn universe(&self) -> usize {
        self.a_ids
            .iter()
            .chain(self.b_ids.iter())
            .map(|&v| v + 1)
            .max()
            .unwrap_or(0)
    }
}

/// A point of the stable set polytope: one exact rational weight per element
/// of the universe. Elements outside a particular graph keep weight 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabPoint {
    pub x: Vec<Rat>,
}

impl StabPoint {
    pub fn ones(n: usize) -> Self {
        StabPoint {
            x: vec![Rat::one(); n],
        }
    }

    /// Membership in `STAB*(G)`: all weights in `(0, 1]` and `x_u + x_v ≤ 1`
    /// on every edge. Exact check.
    pub fn is_feasible(&self, g: &BipartiteConvexGraph) -> bool {
        if !self.x.iter().all(|w| w.is_positive() && *w <= Rat::one()) {
            return false;
        }
        g.edges()
            .all(|(u, v)| self.x[u].clone() + self.x[v].clone() <= Rat::one())
    }
}

/// Entropy of a point: `-(1/n) Σ log2 x_v` over the whole weight vector.
pub fn point_entropy(x: &StabPoint) -> f64 {
    let n = x.x.len();
    if n == 0 {
        return 0.0;
    }
    -x.x.iter().map(log2).sum::<f64>() / n as f64
}

/// The greedy point of a chain decomposition: every element of chain `C_i`
/// gets weight `|C_i| / n`.
pub fn greedy_point(d: &ChainDecomposition) -> StabPoint {
    assert!(
        !d.chains.is_empty(),
        "greedy_point needs a nonempty decomposition"
    );
    let n = d.total_len();
    let mut x = vec![Rat::one(); n];
    for chain in &d.chains {
        let w = rat(chain.len() as i128, n as i128);
        for &v in &chain.elems {
            x[v] = w.clone();
        }
    }
    StabPoint { x }
}

/// Shannon entropy (base 2) of the chain-size distribution `{|C_i|/n}`.
pub fn chain_size_entropy(d: &ChainDecomposition) -> f64 {
    assert!(
        !d.chains.is_empty(),
        "chain_size_entropy needs a nonempty decomposition"
    );
    let n = d.total_len() as f64;
    shannon_entropy(d.chains.iter().map(|c| c.len() as f64 / n))
}

/// One block of the partition: element ids on each side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KMBlock {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl KMBlock {
    /// `(|A_i|, |B_i|)`; the ratio is the quotient, with an empty B counting
    /// as infinite and an empty A as zero.
    pub fn ratio(&self) -> (usize, usize) {
        (self.a.len(), self.b.len())
    }
}

/// The block partition realizing the entropy of a bipartite graph, together
/// with the entropy value.
#[derive(Debug, Clone, PartialEq)]
pub struct KMPartition {
    pub blocks: Vec<KMBlock>,
    pub entropy: f64,
}

impl KMPartition {
    fn from_blocks(blocks: Vec<KMBlock>, n: usize) -> Self {
        let entropy = blocks
            .iter()
            .map(|blk| {
                let (a, b) = (blk.a.len() as f64, blk.b.len() as f64);
                if a + b == 0.0 {
                    0.0
                } else {
                    (a + b) / n as f64 * binary_entropy(a / (a + b))
                }
            })
            .sum();
        KMPartition { blocks, entropy }
    }

    /// Block ratios `|A_i|/|B_i|` are non-increasing (isolated-A blocks count
    /// as infinite, B-only blocks as zero).
    pub fn ratios_non_increasing(&self) -> bool {
        self.blocks.windows(2).all(|w| {
            let (a1, b1) = w[0].ratio();
            let (a2, b2) = w[1].ratio();
            a1 as u128 * b2 as u128 >= a2 as u128 * b1 as u128
        })
    }
}

/// The optimal stable-set-polytope point induced by a partition:
/// `|A_i|/(|A_i|+|B_i|)` on the A-side of each block, the complement on the
/// B-side; vertices in blocks with an empty opposite side get weight 1.
pub fn km_to_point(part: &KMPartition, universe: usize) -> StabPoint {
    let mut x = vec![Rat::one(); universe];
    for blk in &part.blocks {
        let total = (blk.a.len() + blk.b.len()) as i128;
        if total == 0 {
            continue;
        }
        let wa = rat(blk.a.len() as i128, total);
        let wb = rat(blk.b.len() as i128, total);
        for &v in &blk.a {
            x[v] = wa.clone();
        }
        for &v in &blk.b {
            x[v] = wb.clone();
        }
    }
    StabPoint { x }
}

/// Residual-graph view shared by both partition routes.
struct Residual {
    /// Alive A positions, ascending.
    apos: Vec<usize>,
    /// Alive B indices with neighborhoods clipped to alive A positions, as an
    /// inclusive index range into `apos` (`(1, 0)` after clipping to empty).
    bs: Vec<(usize, (usize, usize))>,
}

impl Residual {
    fn build(g: &BipartiteConvexGraph, a_alive: &[bool], b_alive: &[bool]) -> Self {
        let apos: Vec<usize> = (0..g.a_ids.len()).filter(|&i| a_alive[i]).collect();
        let mut bs = Vec::new();
        for (bj, nbr) in g.b_nbr.iter().enumerate() {
            if !b_alive[bj] {
                continue;
            }
            if let Some((lo, hi)) = nbr {
                let li = apos.partition_point(|&p| p < *lo);
                let ri = apos.partition_point(|&p| p <= *hi);
                if li < ri {
                    bs.push((bj, (li, ri - 1)));
                    continue;
                }
            }
            bs.push((bj, (1, 0)));
        }
        Residual { apos, bs }
    }

    /// A positions not covered by any live B interval, ascending.
    fn isolated_a(&self) -> Vec<usize> {
        let mut covered = vec![false; self.apos.len()];
        for &(_, (li, ri)) in &self.bs {
            if li <= ri {
                for c in covered.iter_mut().take(ri + 1).skip(li) {
                    *c = true;
                }
            }
        }
        (0..self.apos.len()).filter(|&i| !covered[i]).collect()
    }
}

/// Exhaustive partition oracle: at each iteration enumerate all subsets of
/// the residual A-side and pick the maximum-ratio one (ties: largest subset,
/// then lexicographically smallest). Isolated A vertices become their own
/// blocks first; leftover B vertices get singleton blocks at the end.
pub fn km_partition_bruteforce(g: &BipartiteConvexGraph) -> Result<KMPartition, TooLargeError> {
    if g.a_ids.len() > BRUTEFORCE_GUARD {
        return Err(TooLargeError {
            size: g.a_ids.len(),
            guard: BRUTEFORCE_GUARD,
        });
    }
    let mut a_alive = vec![true; g.a_ids.len()];
    let mut b_alive = vec![true; g.b_ids.len()];
    let mut blocks = Vec::new();
    loop {
        let res = Residual::build(g, &a_alive, &b_alive);
        if res.apos.is_empty() {
            for &(bj, _) in &res.bs {
                blocks.push(KMBlock {
                    a: Vec::new(),
                    b: vec![g.b_ids[bj]],
                });
                b_alive[bj] = false;
            }
            break;
        }
        let isolated = res.isolated_a();
        if !isolated.is_empty() {
            for &i in &isolated {
                blocks.push(KMBlock {
                    a: vec![g.a_ids[res.apos[i]]],
                    b: Vec::new(),
                });
                a_alive[res.apos[i]] = false;
            }
            continue;
        }
        let m = res.apos.len();
        let live_bs: Vec<(usize, (usize, usize))> = res
            .bs
            .iter()
            .copied()
            .filter(|&(_, (li, ri))| li <= ri)
            .collect();
        let mut best: Option<(Vec<usize>, usize)> = None;
        for mask in 1u32..(1 << m) {
            let subset: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
            let nbrs = live_bs
                .iter()
                .filter(|&&(_, (li, ri))| subset.iter().any(|&i| li <= i && i <= ri))
                .count();
            debug_assert!(nbrs > 0);
            let better = match &best {
                None => true,
                Some((best_sub, best_n)) => {
                    let lhs = subset.len() as u128 * *best_n as u128;
                    let rhs = best_sub.len() as u128 * nbrs as u128;
                    lhs > rhs
                        || (lhs == rhs
                            && (subset.len() > best_sub.len()
                                || (subset.len() == best_sub.len() && subset < *best_sub)))
                }
            };
            if better {
                best = Some((subset, nbrs));
            }
        }
        let (subset, _) = best.expect("nonempty A side");
        let b_block: Vec<usize> = live_bs
            .iter()
            .filter(|&&(_, (li, ri))| subset.iter().any(|&i| li <= i && i <= ri))
            .map(|&(bj, _)| bj)
            .collect();
        let block = KMBlock {
            a: subset.iter().map(|&i| g.a_ids[res.apos[i]]).collect(),
            b: b_block.iter().map(|&bj| g.b_ids[bj]).collect(),
        };
        for &i in &subset {
            a_alive[res.apos[i]] = false;
        }
        for &bj in &b_block {
            b_alive[bj] = false;
        }
        blocks.push(block);
    }
    Ok(KMPartition::from_blocks(blocks, g.order()))
}

/// Greedy b-matching on the clipped convex graph: A positions supply `alpha`
/// units left to right, each B vertex demands `beta` within its interval;
/// earliest interval end first. Returns the maximum flow value, its support
/// per A position, and per-B assigned amounts.
fn convex_b_matching(
    res: &Residual,
    alpha: u64,
    beta: u64,
) -> (u64, Vec<Vec<(usize, u64)>>, Vec<u64>) {
    let m = res.apos.len();
    // Live B entries as slots into res.bs, so the support and assignment
    // vectors can be indexed uniformly by the caller.
    let live: Vec<usize> = (0..res.bs.len())
        .filter(|&k| res.bs[k].1 .0 <= res.bs[k].1 .1)
        .collect();
    let mut by_start = live.clone();
    by_start.sort_by_key(|&k| res.bs[k].1 .0);
    let mut next = 0usize;
    // Active set ordered by interval end: earliest deadline first.
    let mut active: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut is_live = vec![false; res.bs.len()];
    let mut remaining: Vec<u64> = vec![0; res.bs.len()];
    for &k in &live {
        is_live[k] = true;
        remaining[k] = beta;
    }
    let mut support: Vec<Vec<(usize, u64)>> = vec![Vec::new(); m];
    let mut flow = 0u64;
    for i in 0..m {
        while next < by_start.len() && res.bs[by_start[next]].1 .0 <= i {
            let k = by_start[next];
            active.insert((res.bs[k].1 .1, k));
            next += 1;
        }
        let mut cap = alpha;
        while cap > 0 {
            let Some(&(ri, k)) = active.iter().next() else {
                break;
            };
            if ri < i {
                active.remove(&(ri, k));
                continue;
            }
            let take = cap.min(remaining[k]);
            debug_assert!(take > 0);
            remaining[k] -= take;
            support[i].push((k, take));
            flow += take;
            cap -= take;
            if remaining[k] == 0 {
                active.remove(&(ri, k));
            }
        }
    }
    let assigned: Vec<u64> = (0..res.bs.len())
        .map(|k| if is_live[k] { beta - remaining[k] } else { 0 })
        .collect();
    (flow, support, assigned)
}

/// From a saturating flow, finds the inclusion-maximal maximum-ratio subset:
/// BFS from the sink in the reversed residual network; the maximizer is the
/// set of A positions the search does not reach.
fn extract_maximizer(
    res: &Residual,
    beta: u64,
    support: &[Vec<(usize, u64)>],
    assigned_b: &[u64],
) -> Vec<usize> {
    let m = res.apos.len();
    let mut unvisited_a: BTreeSet<usize> = (0..m).collect();
    let mut visited_b = vec![false; res.bs.len()];
    let mut queue: Vec<(bool, usize)> = Vec::new();
    for (k, &(_, (li, ri))) in res.bs.iter().enumerate() {
        if li <= ri && assigned_b[k] < beta {
            visited_b[k] = true;
            queue.push((true, k));
        }
    }
    while let Some((is_b, idx)) = queue.pop() {
        if is_b {
            let (li, ri) = res.bs[idx].1;
            // Every interval A vertex is one reversed infinite edge away.
            let hits: Vec<usize> = unvisited_a.range(li..=ri).copied().collect();
            for i in hits {
                unvisited_a.remove(&i);
                queue.push((false, i));
            }
        } else {
            for &(k, _) in &support[idx] {
                if !visited_b[k] {
                    visited_b[k] = true;
                    queue.push((true, k));
                }
            }
        }
    }
    unvisited_a.into_iter().collect()
}

/// Exact entropy of an A-convex bipartite graph, with the realizing partition
/// and point.
///
/// Per iteration the maximum ratio is found by bisection over the sorted
/// distinct candidate fractions; each guess is decided by the greedy
/// b-matching feasibility test, comparing the flow value to `alpha |A'|`
/// exactly as integers.
pub fn convex_bipartite_entropy(g: &BipartiteConvexGraph) -> (KMPartition, StabPoint) {
    let mut a_alive = vec![true; g.a_ids.len()];
    let mut b_alive = vec![true; g.b_ids.len()];
    let mut blocks = Vec::new();
    let candidates = candidate_ratios(g.a_ids.len() as u64, g.b_ids.len() as u64);

    loop {
        let res = Residual::build(g, &a_alive, &b_alive);
        if res.apos.is_empty() {
            for &(bj, _) in &res.bs {
                blocks.push(KMBlock {
                    a: Vec::new(),
                    b: vec![g.b_ids[bj]],
                });
                b_alive[bj] = false;
            }
            break;
        }
        let isolated = res.isolated_a();
        if !isolated.is_empty() {
            for &i in &isolated {
                blocks.push(KMBlock {
                    a: vec![g.a_ids[res.apos[i]]],
                    b: Vec::new(),
                });
                a_alive[res.apos[i]] = false;
            }
            continue;
        }

        let a_count = res.apos.len() as u64;
        let saturates = |ratio: (u64, u64)| -> bool {
            let (p, q) = ratio;
            let (flow, _, _) = convex_b_matching(&res, q, p);
            flow == q * a_count
        };
        // The guess p/q saturates iff no subset has ratio above p/q; the
        // first saturating candidate is the maximum achievable ratio.
        let mut lo = 0usize;
        let mut hi = candidates.len() - 1;
        debug_assert!(saturates(candidates[hi]));
        while lo < hi {
            let mid = (lo + hi) / 2;
            if saturates(candidates[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let (p, q) = candidates[lo];
        let (flow, support, assigned_b) = convex_b_matching(&res, q, p);
        debug_assert_eq!(flow, q * a_count);
        let max_a = extract_maximizer(&res, p, &support, &assigned_b);
        debug_assert!(!max_a.is_empty());
        let mut in_subset = vec![false; res.apos.len()];
        for &i in &max_a {
            in_subset[i] = true;
        }
        let b_block: Vec<usize> = res
            .bs
            .iter()
            .filter(|&&(_, (li, ri))| li <= ri && (li..=ri).any(|i| in_subset[i]))
            .map(|&(bj, _)| bj)
            .collect();
        debug_assert_eq!(max_a.len() as u64 * q, b_block.len() as u64 * p);
        let block = KMBlock {
            a: max_a.iter().map(|&i| g.a_ids[res.apos[i]]).collect(),
            b: b_block.iter().map(|&bj| g.b_ids[bj]).collect(),
        };
        for &i in &max_a {
            a_alive[res.apos[i]] = false;
        }
        for &bj in &b_block {
            b_alive[bj] = false;
        }
        blocks.push(block);
    }
    let part = KMPartition::from_blocks(blocks, g.order());
    let point = km_to_point(&part, g.universe().max(1));
    (part, point)
}

/// Sorted distinct fractions `p/q` with `p ≤ a_max`, `q ≤ b_max`, ascending.
fn candidate_ratios(a_max: u64, b_max: u64) -> Vec<(u64, u64)> {
    let a_max = a_max.max(1);
    let b_max = b_max.max(1);
    let mut cands = Vec::with_capacity((a_max * b_max) as usize);
    for p in 1..=a_max {
        for q in 1..=b_max {
            let g = gcd(p, q);
            cands.push((p / g, q / g));
        }
    }
    cands.sort_by(|&(p1, q1), &(p2, q2)| (p1 as u128 * q2 as u128).cmp(&(p2 as u128 * q1 as u128)));
    cands.dedup();
    cands
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Checks the greedy-point guarantee: with `H_exact` the exact entropy and
/// any `eps > 0`, the greedy point's entropy is at most
/// `(1+eps) H_exact + (1+eps) log2(1 + 1/eps)` (tolerance 1e-9).
pub fn greedy_entropy_bound_check(d: &ChainDecomposition, h_exact: f64, eps: f64) -> bool {
    assert!(eps > 0.0);
    let h_greedy = point_entropy(&greedy_point(d));
    h_greedy <= (1.0 + eps) * h_exact + (1.0 + eps) * (1.0 + 1.0 / eps).log2() + 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::Chain;

    /// Graph over ids 0..|A|+|B| with A first.
    fn graph(na: usize, nb: usize, nbr: Vec<Option<(usize, usize)>>) -> BipartiteConvexGraph {
        BipartiteConvexGraph::new((0..na).collect(), (na..na + nb).collect(), nbr)
    }

    #[test]
    fn point_entropy_cases() {
        assert_eq!(point_entropy(&StabPoint::ones(5)), 0.0);
        let half = StabPoint {
            x: vec![rat(1, 2), rat(1, 2)],
        };
        assert!((point_entropy(&half) - 1.0).abs() < 1e-12);
        let mixed = StabPoint {
            x: vec![rat(2, 3), rat(2, 3), rat(1, 3)],
        };
        assert!((point_entropy(&mixed) - binary_entropy(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn greedy_point_cases() {
        let single = ChainDecomposition {
            chains: vec![Chain::new(vec![0, 1, 2])],
        };
        assert_eq!(greedy_point(&single).x, vec![Rat::one(); 3]);

        let singletons = ChainDecomposition {
            chains: (0..4).map(|v| Chain::new(vec![v])).collect(),
        };
        assert_eq!(greedy_point(&singletons).x, vec![rat(1, 4); 4]);

        let sizes_2_1_1 = ChainDecomposition {
            chains: vec![
                Chain::new(vec![0, 1]),
                Chain::new(vec![2]),
                Chain::new(vec![3]),
            ],
        };
        assert_eq!(
            greedy_point(&sizes_2_1_1).x,
            vec![rat(1, 2), rat(1, 2), rat(1, 4), rat(1, 4)]
        );
    }

    #[test]
    fn chain_size_entropy_cases() {
        let one = ChainDecomposition {
            chains: vec![Chain::new(vec![0, 1])],
        };
        assert_eq!(chain_size_entropy(&one), 0.0);

        let d = ChainDecomposition {
            chains: vec![
                Chain::new(vec![0]),
                Chain::new(vec![1]),
                Chain::new(vec![2, 3]),
            ],
        };
        assert!((chain_size_entropy(&d) - 1.5).abs() < 1e-12);

        let eq = ChainDecomposition {
            chains: (0..8).map(|v| Chain::new(vec![v])).collect(),
        };
        assert!((chain_size_entropy(&eq) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bruteforce_single_edge() {
        let g = graph(1, 1, vec![Some((0, 0))]);
        let part = km_partition_bruteforce(&g).unwrap();
        assert_eq!(
            part.blocks,
            vec![KMBlock {
                a: vec![0],
                b: vec![1]
            }]
        );
        assert!((part.entropy - 1.0).abs() < 1e-12);
        let x = km_to_point(&part, 2);
        assert_eq!(x.x, vec![rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn bruteforce_star_two_one() {
        let g = graph(2, 1, vec![Some((0, 1))]);
        let part = km_partition_bruteforce(&g).unwrap();
        assert_eq!(
            part.blocks,
            vec![KMBlock {
                a: vec![0, 1],
                b: vec![2]
            }]
        );
        assert!((part.entropy - binary_entropy(1.0 / 3.0)).abs() < 1e-12);
        let x = km_to_point(&part, 3);
        assert_eq!(x.x, vec![rat(2, 3), rat(2, 3), rat(1, 3)]);
    }

    #[test]
    fn bruteforce_edgeless() {
        let g = graph(3, 2, vec![None, None]);
        let part = km_partition_bruteforce(&g).unwrap();
        assert_eq!(part.entropy, 0.0);
        assert_eq!(part.blocks.len(), 5);
        assert!(part.blocks[..3]
            .iter()
            .all(|b| b.b.is_empty() && b.a.len() == 1));
        assert!(part.blocks[3..]
            .iter()
            .all(|b| b.a.is_empty() && b.b.len() == 1));
        let x = km_to_point(&part, 5);
        assert_eq!(x.x, vec![Rat::one(); 5]);
    }

    #[test]
    fn bruteforce_guard() {
        let g = graph(16, 1, vec![Some((0, 15))]);
        assert!(km_partition_bruteforce(&g).is_err());
    }

    #[test]
    fn fast_route_matches_examples() {
        let g = graph(1, 1, vec![Some((0, 0))]);
        let (part, x) = convex_bipartite_entropy(&g);
        assert!((part.entropy - 1.0).abs() < 1e-12);
        assert_eq!(x.x, vec![rat(1, 2), rat(1, 2)]);

        let g = graph(2, 1, vec![Some((0, 1))]);
        let (part, _) = convex_bipartite_entropy(&g);
        assert!((part.entropy - binary_entropy(1.0 / 3.0)).abs() < 1e-12);

        let g = graph(2, 2, vec![None, None]);
        let (part, x) = convex_bipartite_entropy(&g);
        assert_eq!(part.entropy, 0.0);
        assert!(x.x.iter().all(|w| w.is_one()));
    }

    /// Unit-augmentation max-flow used as an independent check of the greedy
    /// b-matching. Slow but obviously correct at test sizes.
    fn flow_oracle(res: &Residual, alpha: u64, beta: u64) -> u64 {
        let m = res.apos.len();
        let live: Vec<(usize, usize)> = res
            .bs
            .iter()
            .filter(|&&(_, (li, ri))| li <= ri)
            .map(|&(_, (li, ri))| (li, ri))
            .collect();
        let nb = live.len();
        let mut cap_a = vec![alpha; m];
        let mut cap_b = vec![beta; nb];
        let mut flow_edge = vec![vec![0u64; nb]; m];
        let mut total = 0;
        'outer: loop {
            // Find an augmenting path s -> a (-> b -> a')* -> b -> t by BFS.
            let mut prev_b: Vec<Option<usize>> = vec![None; nb]; // b reached from a
            let mut prev_a: Vec<Option<usize>> = vec![None; m]; // a reached from b
            let mut seen_a = vec![false; m];
            let mut seen_b = vec![false; nb];
            let mut queue: std::collections::VecDeque<usize> = Default::default();
            for i in 0..m {
                if cap_a[i] > 0 {
                    seen_a[i] = true;
                    queue.push_back(i);
                }
            }
            while let Some(i) = queue.pop_front() {
                for (k, &(li, ri)) in live.iter().enumerate() {
                    if !seen_b[k] && li <= i && i <= ri {
                        seen_b[k] = true;
                        prev_b[k] = Some(i);
                        if cap_b[k] > 0 {
                            // Augment one unit along the alternating path.
                            cap_b[k] -= 1;
                            let mut kk = k;
                            loop {
                                let i2 = prev_b[kk].unwrap();
                                flow_edge[i2][kk] += 1;
                                match prev_a[i2] {
                                    None => {
                                        cap_a[i2] -= 1;
                                        break;
                                    }
                                    Some(k2) => {
                                        flow_edge[i2][k2] -= 1;
                                        kk = k2;
                                    }
                                }
                            }
                            total += 1;
                            continue 'outer;
                        }
                        for i2 in 0..m {
                            if !seen_a[i2] && flow_edge[i2][k] > 0 {
                                seen_a[i2] = true;
                                prev_a[i2] = Some(k);
                                queue.push_back(i2);
                            }
                        }
                    }
                }
            }
            break;
        }
        total
    }

    #[test]
    fn greedy_matching_agrees_with_flow_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let na = rng.gen_range(1..6usize);
            let nb = rng.gen_range(0..6usize);
            let nbr: Vec<Option<(usize, usize)>> = (0..nb)
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        None
                    } else {
                        let lo = rng.gen_range(0..na);
                        let hi = rng.gen_range(lo..na);
                        Some((lo, hi))
                    }
                })
                .collect();
            let g = graph(na, nb, nbr.clone());
            let res = Residual::build(&g, &vec![true; na], &vec![true; nb]);
            for _ in 0..4 {
                let alpha = rng.gen_range(1..5u64);
                let beta = rng.gen_range(1..5u64);
                let (flow, _, _) = convex_b_matching(&res, alpha, beta);
                let want = flow_oracle(&res, alpha, beta);
                assert_eq!(flow, want, "alpha={alpha} beta={beta} graph={nbr:?}");
            }
        }
    }

    #[test]
    fn fast_route_matches_bruteforce_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..400 {
            let na = rng.gen_range(1..7usize);
            let nb = rng.gen_range(0..7usize);
            let nbr: Vec<Option<(usize, usize)>> = (0..nb)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        None
                    } else {
                        let lo = rng.gen_range(0..na);
                        let hi = rng.gen_range(lo..na);
                        Some((lo, hi))
                    }
                })
                .collect();
            let g = graph(na, nb, nbr.clone());
            let brute = km_partition_bruteforce(&g).unwrap();
            let (fast, x) = convex_bipartite_entropy(&g);
            assert_eq!(brute.blocks, fast.blocks, "graph {nbr:?}");
            assert!((brute.entropy - fast.entropy).abs() <= 1e-12);
            assert!(fast.ratios_non_increasing());
            assert!(x.is_feasible(&g), "infeasible point for {nbr:?}");
        }
    }

    #[test]
    fn entropy_monotone_under_edge_addition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let na = rng.gen_range(2..7usize);
            let nb = rng.gen_range(1..7usize);
            let mut nbr: Vec<Option<(usize, usize)>> = (0..nb)
                .map(|_| {
                    if rng.gen_bool(0.25) {
                        None
                    } else {
                        let lo = rng.gen_range(0..na);
                        let hi = rng.gen_range(lo..na);
                        Some((lo, hi))
                    }
                })
                .collect();
            let g_small = graph(na, nb, nbr.clone());
            // Extend one interval by one position (adds edges).
            let k = rng.gen_range(0..nb);
            nbr[k] = match nbr[k] {
                None => {
                    let p = rng.gen_range(0..na);
                    Some((p, p))
                }
                Some((lo, hi)) => {
                    if lo > 0 {
                        Some((lo - 1, hi))
                    } else if hi + 1 < na {
                        Some((lo, hi + 1))
                    } else {
                        Some((lo, hi))
                    }
                }
            };
            let g_big = graph(na, nb, nbr);
            let (small, _) = convex_bipartite_entropy(&g_small);
            let (big, _) = convex_bipartite_entropy(&g_big);
            assert!(big.entropy >= small.entropy - 1e-12);
        }
    }

    #[test]
    fn greedy_bound_check_cases() {
        let single = ChainDecomposition {
            chains: vec![Chain::new(vec![0, 1, 2])],
        };
        assert!(greedy_entropy_bound_check(&single, 0.0, 1.0));

        let anti = ChainDecomposition {
            chains: (0..4).map(|v| Chain::new(vec![v])).collect(),
        };
        assert!(greedy_entropy_bound_check(&anti, 2.0, 1.0));
    }
}
