//! Posets, chains, level decompositions, and greedy chain decompositions.
//!
//! The strict order relation is kept as a dense bit matrix: instances are
//! desk-scale and constant-time comparability tests dominate everything done
//! here. All operations are pure; a `Poset` is immutable after construction.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest `n` accepted by the linear-extension counting oracle.
pub const EXTENSION_GUARD: usize = 24;

/// Errors raised by poset construction and the counting oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PosetError {
    /// The relation (or an added chain) would violate antisymmetry.
    Cycle,
    /// The instance exceeds a brute-force guard.
    TooLarge { n: usize, guard: usize },
    /// A supplied sequence is not a chain of the poset.
    NotAChain,
    /// Malformed poset text input.
    Parse(String),
}

impl fmt::Display for PosetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosetError::Cycle => write!(f, "relation closure violates antisymmetry"),
            PosetError::TooLarge { n, guard } => {
                write!(f, "instance of order {n} exceeds the guard {guard}")
            }
            PosetError::NotAChain => write!(f, "sequence is not a chain of the poset"),
            PosetError::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for PosetError {}

/// A partially ordered set on elements `0..n` with a strict, transitively
/// closed order relation.
#[derive(Clone, PartialEq, Eq)]
pub struct Poset {
    n: usize,
    words: usize,
    /// Row-major bit matrix; bit `v` of row `u` set means `u <_P v`.
    rel: Vec<u64>,
}

impl fmt::Debug for Poset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Poset(n={}, pairs={:?})",
            self.n,
            self.pairs().collect::<Vec<_>>()
        )
    }
}

impl Poset {
    /// The antichain on `n` elements.
    pub fn antichain(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Poset {
            n,
            words,
            rel: vec![0; n * words],
        }
    }

    /// The chain `0 < 1 < ... < n-1`.
    pub fn chain(n: usize) -> Self {
        let mut p = Poset::antichain(n);
        for u in 0..n {
            for v in (u + 1)..n {
                p.set(u, v);
            }
        }
        p
    }

    /// Number of elements.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True when the poset has no elements.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn set(&mut self, u: usize, v: usize) {
        self.rel[u * self.words + v / 64] |= 1 << (v % 64);
    }

    /// True when `u <_P v`.
    pub fn less(&self, u: usize, v: usize) -> bool {
        self.rel[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    /// True when `u` and `v` are comparable (`u != v` required for a
    /// meaningful answer; an element is never less than itself).
    pub fn comparable(&self, u: usize, v: usize) -> bool {
        self.less(u, v) || self.less(v, u)
    }

    /// True when `u != v` and neither `u <_P v` nor `v <_P u`.
    pub fn incomparable(&self, u: usize, v: usize) -> bool {
        u != v && !self.comparable(u, v)
    }

    fn or_row_into(&mut self, src: usize, dst: usize) {
        let (a, b) = (src * self.words, dst * self.words);
        for w in 0..self.words {
            self.rel[b + w] |= self.rel[a + w];
        }
    }

    /// Number of strict predecessors of `v`.
    pub fn pred_count(&self, v: usize) -> usize {
        (0..self.n).filter(|&u| self.less(u, v)).count()
    }

    /// Iterator over all related pairs `(u, v)` with `u <_P v`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            (0..self.n)
                .filter(move |&v| self.less(u, v))
                .map(move |v| (u, v))
        })
    }

    /// Checks irreflexivity, antisymmetry, and transitivity. Used by tests.
    pub fn validate(&self) -> bool {
        for u in 0..self.n {
            if self.less(u, u) {
                return false;
            }
            for v in 0..self.n {
                if self.less(u, v) {
                    if self.less(v, u) {
                        return false;
                    }
                    for w in 0..self.n {
                        if self.less(v, w) && !self.less(u, w) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Induced sub-poset on `keep` (in the listed order); element `i` of the
    /// result corresponds to `keep[i]`.
    pub fn induced(&self, keep: &[usize]) -> Poset {
        let mut q = Poset::antichain(keep.len());
        for (i, &u) in keep.iter().enumerate() {
            for (j, &v) in keep.iter().enumerate() {
                if self.less(u, v) {
                    q.set(i, j);
                }
            }
        }
        q
    }

    /// Width-by-scan helper: the set of elements comparable to every other
    /// element. For each cut-point, its final rank equals its number of
    /// predecessors.
    pub fn cut_points(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&v| (0..self.n).all(|u| u == v || self.comparable(u, v)))
            .collect()
    }
}

/// Transitive closure of the given relation pairs on `0..n`.
///
/// Fails with [`PosetError::Cycle`] when the closure would violate
/// antisymmetry.
pub fn transitive_closure(pairs: &[(usize, usize)], n: usize) -> Result<Poset, PosetError> {
    for &(u, v) in pairs {
        assert!(u < n && v < n, "pair ({u},{v}) out of range for n={n}");
        if u == v {
            return Err(PosetError::Cycle);
        }
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(u, v) in pairs {
        succ[u].push(v);
        indeg[v] += 1;
    }
    // Kahn's algorithm both detects cycles and yields an order in which rows
    // can be OR-combined in one pass.
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut topo = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        topo.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    if topo.len() != n {
        return Err(PosetError::Cycle);
    }
    let mut p = Poset::antichain(n);
    for &u in topo.iter().rev() {
        for i in 0..succ[u].len() {
            let v = succ[u][i];
            p.set(u, v);
            p.or_row_into(v, u);
        }
    }
    Ok(p)
}

/// A chain: elements listed in strictly increasing `<_P` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub elems: Vec<usize>,
}

impl Chain {
    pub fn new(elems: Vec<usize>) -> Self {
        Chain { elems }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// True when consecutive elements are related in the listed direction.
    pub fn is_chain_of(&self, p: &Poset) -> bool {
        self.elems.windows(2).all(|w| p.less(w[0], w[1]))
    }
}

/// An ordered partition of the ground set into chains, with greedy
/// provenance: chain `i` is a maximum-size chain of the poset minus chains
/// `0..i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainDecomposition {
    pub chains: Vec<Chain>,
}

impl ChainDecomposition {
    pub fn total_len(&self) -> usize {
        self.chains.iter().map(Chain::len).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.chains.iter().map(Chain::len).collect()
    }
}

/// The canonical decomposition of a poset into levels of minimal elements.
///
/// `levels[0]` is the set of minimal elements; `levels[i]` the minimal
/// elements of the residual poset. `pred[v]` records, for every element not
/// in the first level, one predecessor one level down (the smallest id).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelDecomposition {
    pub levels: Vec<Vec<usize>>,
    pub pred: Vec<Option<usize>>,
}

impl LevelDecomposition {
    /// The height of the poset, equal to the maximum chain size.
    pub fn height(&self) -> usize {
        self.levels.len()
    }
}

/// Decomposes `p` into levels by iteratively peeling minimal elements.
pub fn levels(p: &Poset) -> LevelDecomposition {
    let n = p.len();
    let mut remaining_preds: Vec<usize> = (0..n).map(|v| p.pred_count(v)).collect();
    let mut level_of = vec![usize::MAX; n];
    let mut pred = vec![None; n];
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut placed = 0;
    while placed < n {
        let cur: Vec<usize> = (0..n)
            .filter(|&v| level_of[v] == usize::MAX && remaining_preds[v] == 0)
            .collect();
        debug_assert!(!cur.is_empty());
        let li = levels.len();
        for &v in &cur {
            level_of[v] = li;
        }
        for &v in &cur {
            for w in 0..n {
                if p.less(v, w) && level_of[w] == usize::MAX {
                    remaining_preds[w] -= 1;
                }
            }
        }
        placed += cur.len();
        levels.push(cur);
    }
    // Record the smallest-id predecessor one level down for every non-minimal
    // element; the level construction guarantees one exists.
    for v in 0..n {
        if level_of[v] == 0 {
            continue;
        }
        pred[v] = (0..n).find(|&u| p.less(u, v) && level_of[u] == level_of[v] - 1);
        debug_assert!(pred[v].is_some());
    }
    LevelDecomposition { levels, pred }
}

/// A maximum chain of `p`, tie-broken by smallest element id at each level.
pub fn maximum_chain(p: &Poset) -> Chain {
    assert!(p.len() >= 1, "maximum_chain requires a nonempty poset");
    let ld = levels(p);
    let top = *ld.levels.last().unwrap().iter().min().unwrap();
    let mut elems = vec![top];
    let mut cur = top;
    while let Some(u) = ld.pred[cur] {
        elems.push(u);
        cur = u;
    }
    elems.reverse();
    Chain::new(elems)
}

/// Greedy chain decomposition: repeatedly extract a maximum chain.
///
/// Two-phase scheme: while the height of the residual exceeds `⌈√n⌉` the
/// levels are rebuilt from scratch after every extraction; once it drops to
/// `⌈√n⌉` or below, per-element predecessor tables are maintained and levels
/// are updated in place, marking elements whose closest predecessors
/// disappeared.
pub fn greedy_chain_decomposition(p: &Poset) -> ChainDecomposition {
    let n = p.len();
    let mut chains = Vec::new();
    if n == 0 {
        return ChainDecomposition { chains };
    }
    let threshold = (n as f64).sqrt().ceil() as usize;
    let mut alive = vec![true; n];
    let mut alive_count = n;

    // Phase 1: rebuild levels from scratch while the height is large.
    loop {
        if alive_count == 0 {
            return ChainDecomposition { chains };
        }
        let keep: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
        let sub = p.induced(&keep);
        let ld = levels(&sub);
        if ld.height() <= threshold {
            break;
        }
        let chain = extract_chain_from_levels(&ld);
        let chain: Vec<usize> = chain.into_iter().map(|i| keep[i]).collect();
        for &v in &chain {
            alive[v] = false;
        }
        alive_count -= chain.len();
        chains.push(Chain::new(chain));
    }

    // Phase 2: maintain levels and per-element predecessor tables.
    let keep: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    if keep.is_empty() {
        return ChainDecomposition { chains };
    }
    let sub = p.induced(&keep);
    let mut tables = PredTables::new(&sub);
    while let Some(chain) = tables.extract_and_remove() {
        chains.push(Chain::new(chain.into_iter().map(|i| keep[i]).collect()));
    }
    ChainDecomposition { chains }
}

/// Follows recorded predecessors from the top level down, smallest id first.
fn extract_chain_from_levels(ld: &LevelDecomposition) -> Vec<usize> {
    let top = *ld.levels.last().unwrap().iter().min().unwrap();
    let mut elems = vec![top];
    let mut cur = top;
    while let Some(u) = ld.pred[cur] {
        elems.push(u);
        cur = u;
    }
    elems.reverse();
    elems
}

/// Level bookkeeping for the second phase of the greedy decomposition.
///
/// For an element `v` in level `i` (1-based), entry `j` of its table holds the
/// alive predecessors of `v` lying exactly `j` levels down, in level `i-j`.
struct PredTables {
    p: Poset,
    alive: Vec<bool>,
    level: Vec<usize>, // 1-based
    levels: Vec<Vec<usize>>,
    tables: Vec<VecDeque<Vec<usize>>>,
}

impl PredTables {
    fn new(p: &Poset) -> Self {
        let ld = levels(p);
        let n = p.len();
        let mut level = vec![0usize; n];
        for (i, lvl) in ld.levels.iter().enumerate() {
            for &v in lvl {
                level[v] = i + 1;
            }
        }
        let mut tables: Vec<VecDeque<Vec<usize>>> = Vec::with_capacity(n);
        for v in 0..n {
            let mut t: VecDeque<Vec<usize>> = VecDeque::new();
            t.resize(level[v] - 1, Vec::new());
            for u in 0..n {
                if p.less(u, v) {
                    let j = level[v] - level[u];
                    t[j - 1].push(u);
                }
            }
            for bucket in t.iter_mut() {
                bucket.sort_unstable();
            }
            tables.push(t);
        }
        let levels: Vec<Vec<usize>> = ld.levels;
        PredTables {
            p: p.clone(),
            alive: vec![true; n],
            level,
            levels,
            tables,
        }
    }

    fn height(&self) -> usize {
        self.levels
            .iter()
            .rposition(|l| !l.is_empty())
            .map_or(0, |i| i + 1)
    }

    /// Extracts a maximum chain, removes it, and updates levels and tables.
    fn extract_and_remove(&mut self) -> Option<Vec<usize>> {
        let h = self.height();
        if h == 0 {
            return None;
        }
        // Maximum chain: smallest id in the top level, then follow the first
        // predecessor bucket downwards, smallest id each time.
        let mut chain = Vec::with_capacity(h);
        let mut cur = *self.levels[h - 1]
            .iter()
            .filter(|&&v| self.alive[v])
            .min()
            .unwrap();
        chain.push(cur);
        while self.level[cur] > 1 {
            let next = *self.tables[cur][0].iter().min().expect("level invariant");
            chain.push(next);
            cur = next;
        }
        chain.reverse();

        // Delete the chain and mark elements whose first bucket empties.
        let mut marked = vec![false; self.alive.len()];
        for &u in &chain {
            self.alive[u] = false;
            let lvl = self.level[u];
            self.levels[lvl - 1].retain(|&w| w != u);
            for w in 0..self.alive.len() {
                if self.alive[w] && self.p.less(u, w) {
                    let j = self.level[w] - lvl;
                    self.tables[w][j - 1].retain(|&x| x != u);
                    if j == 1 && self.tables[w][0].is_empty() {
                        marked[w] = true;
                    }
                }
            }
        }

        // Process levels bottom-up, moving marked elements down to the level
        // just above their closest remaining predecessors.
        let h = self.height();
        for i in 1..=h {
            let in_level: Vec<usize> = self.levels.get(i - 1).map_or(Vec::new(), |l| {
                l.iter().copied().filter(|&v| marked[v]).collect()
            });
            for v in in_level {
                marked[v] = false;
                let jmin = self.tables[v].iter().position(|b| !b.is_empty());
                let new_level = match jmin {
                    None => 1,
                    Some(idx) => i - (idx + 1) + 1,
                };
                debug_assert!(new_level < i, "marked element must move down");
                // Shift the table so bucket 1 holds predecessors one level
                // down again.
                let shift = i - new_level;
                for _ in 0..shift {
                    let front = self.tables[v].pop_front();
                    debug_assert!(front.map_or(true, |b| b.is_empty()));
                }
                self.levels[i - 1].retain(|&w| w != v);
                self.levels[new_level - 1].push(v);
                self.levels[new_level - 1].sort_unstable();
                self.level[v] = new_level;
                // Re-bucket v inside every successor's table.
                for w in 0..self.alive.len() {
                    if self.alive[w] && self.p.less(v, w) {
                        let old_j = self.level[w] - i;
                        let new_j = self.level[w] - new_level;
                        self.tables[w][old_j - 1].retain(|&x| x != v);
                        while self.tables[w].len() < new_j {
                            self.tables[w].push_back(Vec::new());
                        }
                        self.tables[w][new_j - 1].push(v);
                        self.tables[w][new_j - 1].sort_unstable();
                        if old_j == 1 && self.tables[w][0].is_empty() {
                            marked[w] = true;
                        }
                    }
                }
            }
        }
        Some(chain)
    }
}

/// Exact number of linear extensions of `p`, by dynamic programming over
/// down-sets, layered by cardinality.
///
/// Guarded at [`EXTENSION_GUARD`] elements.
pub fn count_linear_extensions(p: &Poset) -> Result<BigUint, PosetError> {
    let n = p.len();
    if n > EXTENSION_GUARD {
        return Err(PosetError::TooLarge {
            n,
            guard: EXTENSION_GUARD,
        });
    }
    if n == 0 {
        return Ok(BigUint::one());
    }
    let pred_masks = pred_masks(p);
    let mut cur: HashMap<u32, BigUint> = HashMap::new();
    cur.insert(0, BigUint::one());
    for _ in 0..n {
        let mut next: HashMap<u32, BigUint> = HashMap::new();
        for (set, count) in cur {
            for v in 0..n {
                let bit = 1u32 << v;
                if set & bit == 0 && pred_masks[v] & !set == 0 {
                    *next.entry(set | bit).or_insert_with(BigUint::zero) += &count;
                }
            }
        }
        cur = next;
    }
    Ok(cur.remove(&((1u32 << n) - 1)).unwrap_or_else(BigUint::zero))
}

/// `log2 e(P)` as a double, when within the counting guard.
pub fn log2_extensions(p: &Poset) -> Result<f64, PosetError> {
    let e = count_linear_extensions(p)?;
    let bits = e.bits();
    if bits <= 53 {
        Ok(e.to_f64().unwrap().log2())
    } else {
        // Scale down to keep the mantissa exact.
        let shift = bits - 53;
        let top: BigUint = e >> shift;
        Ok(top.to_f64().unwrap().log2() + shift as f64)
    }
}

fn pred_masks(p: &Poset) -> Vec<u32> {
    let n = p.len();
    (0..n)
        .map(|v| {
            (0..n)
                .filter(|&u| p.less(u, v))
                .fold(0u32, |m, u| m | (1 << u))
        })
        .collect()
}

/// All linear extensions of `p`, by backtracking over minimal elements.
/// Intended for small `n` only (the caller bounds the workload via `e(P)`).
pub fn linear_extensions(p: &Poset) -> Vec<Vec<usize>> {
    let n = p.len();
    let pred_masks = pred_masks(p);
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(n);
    fn rec(
        n: usize,
        used: u32,
        pred_masks: &[u32],
        prefix: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for v in 0..n {
            let bit = 1u32 << v;
            if used & bit == 0 && pred_masks[v] & !used == 0 {
                prefix.push(v);
                rec(n, used | bit, pred_masks, prefix, out);
                prefix.pop();
            }
        }
    }
    rec(n, 0, &pred_masks, &mut prefix, &mut out);
    out
}

/// Samples a linear extension uniformly at random via the down-set counts.
/// Requires `n` within [`EXTENSION_GUARD`].
pub fn sample_linear_extension<R: Rng>(p: &Poset, rng: &mut R) -> Result<Vec<usize>, PosetError> {
    let n = p.len();
    if n > EXTENSION_GUARD {
        return Err(PosetError::TooLarge {
            n,
            guard: EXTENSION_GUARD,
        });
    }
    let pred_masks = pred_masks(p);
    let mut memo: HashMap<u32, BigUint> = HashMap::new();
    fn count(set: u32, n: usize, pred_masks: &[u32], memo: &mut HashMap<u32, BigUint>) -> BigUint {
        if set == (1u32 << n) - 1 {
            return BigUint::one();
        }
        if let Some(c) = memo.get(&set) {
            return c.clone();
        }
        let mut total = BigUint::zero();
        for v in 0..n {
            let bit = 1u32 << v;
            if set & bit == 0 && pred_masks[v] & !set == 0 {
                total += count(set | bit, n, pred_masks, memo);
            }
        }
        memo.insert(set, total.clone());
        total
    }
    let mut order = Vec::with_capacity(n);
    let mut set = 0u32;
    for _ in 0..n {
        let total = count(set, n, &pred_masks, &mut memo);
        debug_assert!(!total.is_zero());
        // Pick the next minimal element proportionally to the number of
        // extensions it leads to.
        let mut target = random_biguint_below(rng, &total);
        for v in 0..n {
            let bit = 1u32 << v;
            if set & bit == 0 && pred_masks[v] & !set == 0 {
                let c = count(set | bit, n, &pred_masks, &mut memo);
                if target < c {
                    order.push(v);
                    set |= bit;
                    break;
                }
                target -= c;
            }
        }
    }
    debug_assert_eq!(order.len(), n);
    Ok(order)
}

fn random_biguint_below<R: Rng>(rng: &mut R, bound: &BigUint) -> BigUint {
    debug_assert!(!bound.is_zero());
    let bits = bound.bits();
    loop {
        let mut value = BigUint::zero();
        let mut remaining = bits;
        while remaining > 0 {
            let take = remaining.min(32);
            let word: u32 = rng.gen::<u32>() & ((1u64 << take) - 1) as u32;
            value = (value << take) | BigUint::from(word);
            remaining -= take;
        }
        if &value < bound {
            return value;
        }
    }
}

/// A topological shuffle: a random (not uniformly distributed) linear
/// extension, used beyond the counting guard.
pub fn random_topological_order<R: Rng>(p: &Poset, rng: &mut R) -> Vec<usize> {
    let n = p.len();
    let mut indeg: Vec<usize> = (0..n).map(|v| p.pred_count(v)).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while !ready.is_empty() {
        let i = rng.gen_range(0..ready.len());
        let v = ready.swap_remove(i);
        order.push(v);
        for w in 0..n {
            if p.less(v, w) {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(w);
                }
            }
        }
    }
    debug_assert_eq!(order.len(), n);
    order
}

/// Adds the consecutive relations of `c` to `p` and closes transitively.
pub fn add_chain_relations(p: &Poset, c: &Chain) -> Result<Poset, PosetError> {
    let mut pairs: Vec<(usize, usize)> = p.pairs().collect();
    for w in c.elems.windows(2) {
        pairs.push((w[0], w[1]));
    }
    transitive_closure(&pairs, p.len())
}

/// Deterministic random poset: sample a permutation, keep each forward pair
/// independently with probability `density`, and close transitively.
pub fn random_poset(n: usize, density: f64, seed: u64) -> Poset {
    assert!((0.0..=1.0).contains(&density), "density must lie in [0,1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < density {
                pairs.push((perm[i], perm[j]));
            }
        }
    }
    transitive_closure(&pairs, n).expect("forward pairs of a permutation are acyclic")
}

/// Parses the poset text format: `n <count>` on the first non-comment line,
/// then `<u> <v>` relation lines; `#` starts a comment. The closure is applied
/// on load.
pub fn parse_poset_text(text: &str) -> Result<Poset, PosetError> {
    let mut n: Option<usize> = None;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        match n {
            None => {
                let tag = it.next().unwrap();
                if tag != "n" {
                    return Err(PosetError::Parse(format!(
                        "line {}: expected `n <count>`, found `{line}`",
                        lineno + 1
                    )));
                }
                let count = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| PosetError::Parse(format!("line {}: bad count", lineno + 1)))?;
                n = Some(count);
            }
            Some(count) => {
                let parse = |t: Option<&str>| -> Result<usize, PosetError> {
                    t.and_then(|t| t.parse().ok())
                        .ok_or_else(|| PosetError::Parse(format!("line {}: bad pair", lineno + 1)))
                };
                let u = parse(it.next())?;
                let v = parse(it.next())?;
                if u >= count || v >= count {
                    return Err(PosetError::Parse(format!(
                        "line {}: element out of range",
                        lineno + 1
                    )));
                }
                pairs.push((u, v));
            }
        }
    }
    let n = n.ok_or_else(|| PosetError::Parse("missing `n <count>` line".into()))?;
    transitive_closure(&pairs, n)
}

/// Writes the poset text format, one relation pair per line.
pub fn poset_to_text(p: &Poset) -> String {
    let mut out = format!("n {}\n", p.len());
    for (u, v) in p.pairs() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The running example: a<c, b<c, b<d on elements a=0, b=1, c=2, d=3.
    fn fence() -> Poset {
        transitive_closure(&[(0, 2), (1, 2), (1, 3)], 4).unwrap()
    }

    #[test]
    fn closure_adds_forced_pair() {
        let p = transitive_closure(&[(0, 1), (1, 2)], 3).unwrap();
        assert!(p.less(0, 1) && p.less(1, 2) && p.less(0, 2));
        assert!(p.validate());
    }

    #[test]
    fn closure_of_empty_relation_is_antichain() {
        let p = transitive_closure(&[], 4).unwrap();
        assert_eq!(p.pairs().count(), 0);
    }

    #[test]
    fn closure_detects_two_cycle() {
        assert_eq!(
            transitive_closure(&[(0, 1), (1, 0)], 2),
            Err(PosetError::Cycle)
        );
    }

    #[test]
    fn closure_detects_long_cycle() {
        assert_eq!(
            transitive_closure(&[(0, 1), (1, 2), (2, 0)], 3),
            Err(PosetError::Cycle)
        );
    }

    #[test]
    fn levels_of_chain_and_antichain() {
        let ld = levels(&Poset::chain(3));
        assert_eq!(ld.levels, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(ld.height(), 3);

        let ld = levels(&Poset::antichain(4));
        assert_eq!(ld.levels, vec![vec![0, 1, 2, 3]]);
        assert_eq!(ld.height(), 1);
    }

    #[test]
    fn levels_of_fence() {
        let ld = levels(&fence());
        assert_eq!(ld.levels, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(ld.height(), 2);
        assert_eq!(ld.pred[2], Some(0));
        assert_eq!(ld.pred[3], Some(1));
    }

    #[test]
    fn maximum_chain_cases() {
        assert_eq!(maximum_chain(&Poset::chain(5)).elems, vec![0, 1, 2, 3, 4]);
        assert_eq!(maximum_chain(&Poset::antichain(3)).elems, vec![0]);
        assert_eq!(maximum_chain(&fence()).elems, vec![0, 2]);
    }

    /// Independent longest-chain oracle by memoized recursion on direct
    /// relation scans.
    fn brute_longest_chain(p: &Poset, alive: &[bool]) -> usize {
        fn ending_at(p: &Poset, alive: &[bool], v: usize, memo: &mut [usize]) -> usize {
            if memo[v] != 0 {
                return memo[v];
            }
            let mut best = 1;
            for u in 0..p.len() {
                if alive[u] && p.less(u, v) {
                    best = best.max(1 + ending_at(p, alive, u, memo));
                }
            }
            memo[v] = best;
            best
        }
        let mut memo = vec![0usize; p.len()];
        (0..p.len())
            .filter(|&v| alive[v])
            .map(|v| ending_at(p, alive, v, &mut memo))
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn greedy_decomposition_basic_shapes() {
        let d = greedy_chain_decomposition(&Poset::chain(6));
        assert_eq!(d.sizes(), vec![6]);

        let d = greedy_chain_decomposition(&Poset::antichain(5));
        assert_eq!(d.sizes(), vec![1; 5]);

        // Fence labelled b=0, a=1, c=2, d=3: the first extracted chain is
        // {b,c} and the remaining two elements are incomparable.
        let p = transitive_closure(&[(1, 2), (0, 2), (0, 3)], 4).unwrap();
        let d = greedy_chain_decomposition(&p);
        assert_eq!(d.sizes(), vec![2, 1, 1]);
        assert_eq!(d.chains[0].elems, vec![0, 2]);
    }

    #[test]
    fn greedy_decomposition_matches_residual_longest_chain() {
        for seed in 0..60 {
            let n = 4 + (seed as usize % 9);
            let p = random_poset(n, 0.25 + 0.05 * (seed % 10) as f64, seed);
            let d = greedy_chain_decomposition(&p);
            let mut alive = vec![true; n];
            for chain in &d.chains {
                assert!(chain.is_chain_of(&p));
                assert!(chain.elems.iter().all(|&v| alive[v]));
                assert_eq!(chain.len(), brute_longest_chain(&p, &alive), "poset {p:?}");
                for &v in &chain.elems {
                    alive[v] = false;
                }
            }
            assert!(alive.iter().all(|a| !a));
        }
    }

    #[test]
    fn greedy_decomposition_exercises_phase_two() {
        // Tall chain plus wide antichain keeps the residual height below the
        // threshold after one extraction.
        let mut pairs = Vec::new();
        for i in 0..9 {
            pairs.push((i, i + 1));
        }
        let p = transitive_closure(&pairs, 16).unwrap();
        let d = greedy_chain_decomposition(&p);
        assert_eq!(d.sizes(), vec![10, 1, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn count_extensions_small_cases() {
        assert_eq!(
            count_linear_extensions(&Poset::chain(5)).unwrap(),
            BigUint::from(1u32)
        );
        assert_eq!(
            count_linear_extensions(&Poset::antichain(4)).unwrap(),
            BigUint::from(24u32)
        );
        assert_eq!(
            count_linear_extensions(&fence()).unwrap(),
            BigUint::from(5u32)
        );
        assert!(matches!(
            count_linear_extensions(&Poset::antichain(25)),
            Err(PosetError::TooLarge { .. })
        ));
    }

    #[test]
    fn count_extensions_agrees_with_permutation_enumeration() {
        fn brute(p: &Poset) -> u64 {
            let n = p.len();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut count = 0;
            // Heap's algorithm over all permutations.
            fn heap(perm: &mut Vec<usize>, k: usize, p: &Poset, count: &mut u64) {
                if k == 1 {
                    let ok = (0..perm.len())
                        .all(|i| (i + 1..perm.len()).all(|j| !p.less(perm[j], perm[i])));
                    if ok {
                        *count += 1;
                    }
                    return;
                }
                for i in 0..k {
                    heap(perm, k - 1, p, count);
                    if k % 2 == 0 {
                        perm.swap(i, k - 1);
                    } else {
                        perm.swap(0, k - 1);
                    }
                }
            }
            heap(&mut perm, n, p, &mut count);
            count
        }
        for seed in 0..30 {
            let n = 2 + (seed as usize % 7);
            let p = random_poset(n, 0.4, seed);
            let exact = count_linear_extensions(&p).unwrap();
            assert_eq!(exact, BigUint::from(brute(&p)), "poset {p:?}");
        }
    }

    #[test]
    fn extension_enumeration_matches_count() {
        for seed in 0..20 {
            let p = random_poset(6, 0.35, seed);
            let all = linear_extensions(&p);
            assert_eq!(
                BigUint::from(all.len()),
                count_linear_extensions(&p).unwrap()
            );
            for ext in &all {
                for i in 0..ext.len() {
                    for j in i + 1..ext.len() {
                        assert!(!p.less(ext[j], ext[i]));
                    }
                }
            }
        }
    }

    #[test]
    fn cut_points_cases() {
        let chain = Poset::chain(4);
        assert_eq!(chain.cut_points(), vec![0, 1, 2, 3]);
        assert!(Poset::antichain(3).cut_points().is_empty());
        assert!(fence().cut_points().is_empty());
        // Cut-point rank is its predecessor count.
        for &v in &chain.cut_points() {
            assert_eq!(chain.pred_count(v), v);
        }
    }

    #[test]
    fn add_chain_relations_cases() {
        let p = add_chain_relations(&Poset::antichain(3), &Chain::new(vec![0, 1, 2])).unwrap();
        assert_eq!(p, Poset::chain(3));

        let chain = Poset::chain(3);
        let again = add_chain_relations(&chain, &Chain::new(vec![0, 1, 2])).unwrap();
        assert_eq!(again, chain);

        let sparse = transitive_closure(&[(0, 2)], 3).unwrap();
        let q = add_chain_relations(&sparse, &Chain::new(vec![1, 2])).unwrap();
        assert!(q.less(0, 2) && q.less(1, 2));
        assert!(q.incomparable(0, 1));
        assert_eq!(q.pairs().count(), 2);

        let contradicted = add_chain_relations(&Poset::chain(2), &Chain::new(vec![1, 0]));
        assert_eq!(contradicted, Err(PosetError::Cycle));
    }

    #[test]
    fn random_poset_extremes_and_determinism() {
        assert_eq!(random_poset(5, 0.0, 3).pairs().count(), 0);
        assert_eq!(random_poset(5, 1.0, 3).pairs().count(), 10);
        assert_eq!(random_poset(6, 0.3, 7), random_poset(6, 0.3, 7));
        assert!(random_poset(12, 0.2, 11).validate());
    }

    #[test]
    fn sampled_extensions_are_extensions() {
        use rand::SeedableRng;
        let p = fence();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let ext = sample_linear_extension(&p, &mut rng).unwrap();
            for i in 0..ext.len() {
                for j in i + 1..ext.len() {
                    assert!(!p.less(ext[j], ext[i]));
                }
            }
        }
    }

    #[test]
    fn text_format_round_trip() {
        let p = fence();
        let text = poset_to_text(&p);
        assert_eq!(parse_poset_text(&text).unwrap(), p);

        let commented = "# example instance\nn 3\n0 1 # cover pair\n\n1 2\n";
        let q = parse_poset_text(commented).unwrap();
        assert_eq!(q, Poset::chain(3));

        assert!(parse_poset_text("0 1\n").is_err());
        assert!(parse_poset_text("n 2\n0 5\n").is_err());
        assert!(parse_poset_text("n 2\n0 1\n1 0\n").is_err());
    }
}
