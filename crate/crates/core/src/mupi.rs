//! Merging under partial information.
//!
//! The poset is covered by two disjoint chains A and B; its incomparability
//! graph is biconvex, so every vertex's incomparable set is an interval of
//! the opposite chain with endpoints monotone along each chain. Starting
//! from a minimum-entropy weight vector, the engine repeatedly picks a good
//! tight component, merges its two chains with the Hwang-Lin algorithm,
//! lifts the surviving weights, absorbs the loose vertices into the touching
//! components, and rebalances until every component is balanced again.
//! Elements whose rank becomes determined are copied to the output as soon
//! as possible.
//!
//! Components of the tight-edge graph are kept as pairs of position
//! intervals, listed in poset order inside each component of the current
//! incomparability graph; the components tile their graph component exactly
//! whenever the point is loose-free.

use std::fmt;

use num_traits::{One, Zero};

use crate::entropy::{convex_bipartite_entropy, point_entropy, BipartiteConvexGraph, StabPoint};
use crate::merge::hwang_lin_merge;
use crate::oracle::ComparisonSource;
use crate::poset::{add_chain_relations, Chain, Poset};
use crate::rat::{log2, rat, Rat};
use crate::LinearOrder;

/// Errors from cover construction and component building.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MupiError {
    /// The two chains do not partition the poset or are not chains.
    InvalidCover(String),
    /// The weight vector is not in `STAB*` of the cover's graph.
    Infeasible,
    /// Loose components present; the caller must eliminate them first.
    Loose,
    /// A component nests inside another's chain interval.
    Inlay,
}

impl fmt::Display for MupiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MupiError::InvalidCover(msg) => write!(f, "invalid two-chain cover: {msg}"),
            MupiError::Infeasible => write!(f, "weight vector infeasible for the cover"),
            MupiError::Loose => write!(f, "tight-edge graph has loose components"),
            MupiError::Inlay => write!(f, "tight-edge graph has inlaid components"),
        }
    }
}

impl std::error::Error for MupiError {}

/// A poset covered by two disjoint chains, with per-position incomparability
/// intervals into the opposite chain and, for the rank bookkeeping, the
/// counts of opposite-chain elements strictly below each position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoChainCover {
    pub chain_a: Chain,
    pub chain_b: Chain,
    /// For each A position, the inclusive interval of incomparable B
    /// positions.
    pub inc_a: Vec<Option<(usize, usize)>>,
    pub inc_b: Vec<Option<(usize, usize)>>,
    /// Number of B elements strictly below each A position, and vice versa.
    pub below_a: Vec<usize>,
    pub below_b: Vec<usize>,
}

impl TwoChainCover {
    pub fn len(&self) -> usize {
        self.chain_a.len() + self.chain_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The incomparability graph as an A-convex bipartite graph.
    pub fn graph(&self) -> BipartiteConvexGraph {
        BipartiteConvexGraph::new(
            self.chain_a.elems.clone(),
            self.chain_b.elems.clone(),
            self.inc_b.clone(),
        )
    }

    /// Element lookup: side (true = B) and position.
    fn locate(&self) -> Vec<(bool, usize)> {
        let mut loc = vec![(false, 0); self.len()];
        for (i, &v) in self.chain_a.elems.iter().enumerate() {
            loc[v] = (false, i);
        }
        for (j, &v) in self.chain_b.elems.iter().enumerate() {
            loc[v] = (true, j);
        }
        loc
    }

    /// Reconstructs the partial order the cover encodes.
    pub fn to_poset(&self) -> Poset {
        let mut pairs = Vec::new();
        for w in self.chain_a.elems.windows(2) {
            pairs.push((w[0], w[1]));
        }
        for w in self.chain_b.elems.windows(2) {
            pairs.push((w[0], w[1]));
        }
        for (i, &u) in self.chain_a.elems.iter().enumerate() {
            for j in 0..self.below_a[i] {
                pairs.push((self.chain_b.elems[j], u));
            }
            let first_above = self.below_a[i] + self.inc_a[i].map_or(0, |(lo, hi)| hi - lo + 1);
            for j in first_above..self.chain_b.len() {
                pairs.push((u, self.chain_b.elems[j]));
            }
        }
        crate::poset::transitive_closure(&pairs, self.len()).expect("cover relations are acyclic")
    }
}

/// Builds the cover and the incomparability intervals with two monotone
/// scans per side.
pub fn build_two_chain_cover(p: &Poset, a: &Chain, b: &Chain) -> Result<TwoChainCover, MupiError> {
    let n = p.len();
    let mut seen = vec![false; n];
    for &v in a.elems.iter().chain(b.elems.iter()) {
        if v >= n || seen[v] {
            return Err(MupiError::InvalidCover(
                "chains must be disjoint subsets".into(),
            ));
        }
        seen[v] = true;
    }
    if !seen.iter().all(|&s| s) {
        return Err(MupiError::InvalidCover(
            "chains must cover the ground set".into(),
        ));
    }
    if !a.is_chain_of(p) || !b.is_chain_of(p) {
        return Err(MupiError::InvalidCover(
            "sequences must be chains of the poset".into(),
        ));
    }

    // The opposite-chain elements below a position form a prefix and those
    // above form a suffix; both boundaries move monotonically along the
    // chain, so two forward scans per side suffice.
    let scan = |xs: &Chain, ys: &Chain| -> (Vec<usize>, Vec<Option<(usize, usize)>>) {
        let m = ys.len();
        let mut below = vec![0usize; xs.len()];
        let mut lo = 0usize;
        for (i, &u) in xs.elems.iter().enumerate() {
            while lo < m && p.less(ys.elems[lo], u) {
                lo += 1;
            }
            below[i] = lo;
        }
        let mut first_above = vec![m; xs.len()];
        let mut fa = 0usize;
        for (i, &u) in xs.elems.iter().enumerate() {
            if fa < below[i] {
                fa = below[i];
            }
            while fa < m && !p.less(u, ys.elems[fa]) {
                fa += 1;
            }
            first_above[i] = fa;
        }
        let intervals = below
            .iter()
            .zip(&first_above)
            .map(|(&lo, &fa)| (lo < fa).then(|| (lo, fa - 1)))
            .collect();
        (below, intervals)
    };
    let (below_a, inc_a) = scan(a, b);
    let (below_b, inc_b) = scan(b, a);
    Ok(TwoChainCover {
        chain_a: a.clone(),
        chain_b: b.clone(),
        inc_a,
        inc_b,
        below_a,
        below_b,
    })
}

/// Component color: red when the A side is at least as large as the B side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    Red,
    Blue,
}

fn color_of(a_count: usize, b_count: usize) -> Color {
    if a_count >= b_count {
        Color::Red
    } else {
        Color::Blue
    }
}

/// A non-trivial component of the tight-edge graph: a pair of position
/// intervals, the uniform side weights, and the color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TightComponent {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub xa: Rat,
    pub xb: Rat,
    pub color: Color,
}

impl TightComponent {
    pub fn a_count(&self) -> usize {
        self.a.1 - self.a.0 + 1
    }

    pub fn b_count(&self) -> usize {
        self.b.1 - self.b.0 + 1
    }

    pub fn is_balanced(&self) -> bool {
        let total = (self.a_count() + self.b_count()) as i128;
        self.xa == rat(self.a_count() as i128, total)
    }
}

/// A component of the current incomparability graph with its tight
/// components in poset order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphComponent {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub comps: Vec<TightComponent>,
}

/// The component structure of the tight-edge graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TightComponents {
    pub gcomps: Vec<GraphComponent>,
}

impl TightComponents {
    /// All non-trivial components in poset order.
    pub fn components(&self) -> impl Iterator<Item = &TightComponent> {
        self.gcomps.iter().flat_map(|gc| gc.comps.iter())
    }

    /// Indices `(gcomp, comp)` of unbalanced components, in poset order.
    pub fn unbalanced(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (gi, gc) in self.gcomps.iter().enumerate() {
            for (ci, c) in gc.comps.iter().enumerate() {
                if !c.is_balanced() {
                    out.push((gi, ci));
                }
            }
        }
        out
    }

    /// Indices of good components, red ones listed before blue ones.
    pub fn good(&self, cover: &TwoChainCover) -> Vec<(usize, usize)> {
        let mut reds = Vec::new();
        let mut blues = Vec::new();
        for (gi, gc) in self.gcomps.iter().enumerate() {
            for ci in 0..gc.comps.len() {
                if is_good(cover, gc, ci) {
                    match gc.comps[ci].color {
                        Color::Red => reds.push((gi, ci)),
                        Color::Blue => blues.push((gi, ci)),
                    }
                }
            }
        }
        reds.extend(blues);
        reds
    }
}

/// A component is good when every edge leaving its small chain ends in the
/// component's other chain or in a component of the opposite color. The test
/// scans the small chain's incomparability span against the component
/// partition of the graph component.
fn is_good(cover: &TwoChainCover, gc: &GraphComponent, ci: usize) -> bool {
    let k = &gc.comps[ci];
    let (span, others): ((usize, usize), Vec<((usize, usize), Color)>) = if k.color == Color::Red {
        // Small chain is the B side; its edges land in A intervals.
        let lo = cover.inc_b[k.b.0]
            .expect("component member has edges")
            .0
            .max(gc.a.0);
        let hi = cover.inc_b[k.b.1]
            .expect("component member has edges")
            .1
            .min(gc.a.1);
        (
            (lo, hi),
            gc.comps
                .iter()
                .enumerate()
                .filter(|&(cj, _)| cj != ci)
                .map(|(_, c)| (c.a, c.color))
                .collect(),
        )
    } else {
        let lo = cover.inc_a[k.a.0]
            .expect("component member has edges")
            .0
            .max(gc.b.0);
        let hi = cover.inc_a[k.a.1]
            .expect("component member has edges")
            .1
            .min(gc.b.1);
        (
            (lo, hi),
            gc.comps
                .iter()
                .enumerate()
                .filter(|&(cj, _)| cj != ci)
                .map(|(_, c)| (c.b, c.color))
                .collect(),
        )
    };
    others
        .into_iter()
        .filter(|&((lo, hi), _)| lo <= span.1 && hi >= span.0)
        .all(|(_, color)| color != k.color)
}

/// Contribution of red and blue components to the entropy of `x`:
/// per component, `-(1/n)(|A∩K| log xa + |B∩K| log xb)`. Balanced trivial
/// components contribute nothing.
pub fn red_contribution(_x: &StabPoint, tc: &TightComponents, n: usize) -> (f64, f64) {
    let mut red = 0.0;
    let mut blue = 0.0;
    for c in tc.components() {
        let share =
            -(c.a_count() as f64 * log2(&c.xa) + c.b_count() as f64 * log2(&c.xb)) / n as f64;
        match c.color {
            Color::Red => red += share,
            Color::Blue => blue += share,
        }
    }
    (red, blue)
}

/// Internal component representation; weights live in the engine's vector.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Comp {
    a: (usize, usize),
    b: (usize, usize),
}

impl Comp {
    fn a_count(&self) -> usize {
        self.a.1 - self.a.0 + 1
    }

    fn b_count(&self) -> usize {
        self.b.1 - self.b.0 + 1
    }

    fn color(&self) -> Color {
        color_of(self.a_count(), self.b_count())
    }
}

#[derive(Debug, Clone)]
struct GComp {
    a: (usize, usize),
    b: (usize, usize),
    comps: Vec<Comp>,
}

/// Output under construction: element at each rank.
pub type OutputChain = Vec<Option<usize>>;

/// Result of a merging-under-partial-information run.
#[derive(Debug, Clone)]
pub struct MupiReport {
    pub order: LinearOrder,
    /// Oracle queries across the whole call.
    pub comparisons: u64,
    /// Queries spent inside the core loop.
    pub core_comparisons: u64,
    /// Entropy `H(x)` of the point handed to the core loop.
    pub core_entropy: f64,
    pub n: usize,
}

struct Engine {
    /// The partial information accumulated so far; grows at every merge.
    poset: Poset,
    /// Incomparability intervals of `poset`, rebuilt after each merge.
    cur: TwoChainCover,
    loc: Vec<(bool, usize)>,
    x: Vec<Rat>,
    gcomps: Vec<GComp>,
    out: OutputChain,
    emitted: Vec<bool>,
    eps: Rat,
}

impl Engine {
    /// Builds the component structure from scratch, validating that the
    /// point is feasible, loose-free, and inlay-free.
    fn build(cover: &TwoChainCover, x: Vec<Rat>, out: OutputChain) -> Result<Self, MupiError> {
        let n = cover.len();
        assert_eq!(x.len(), n);
        assert_eq!(out.len(), n);
        let loc = cover.locate();
        for w in &x {
            if !(*w > Rat::zero() && *w <= Rat::one()) {
                return Err(MupiError::Infeasible);
            }
        }
        for (i, nbr) in cover.inc_a.iter().enumerate() {
            if let Some((lo, hi)) = nbr {
                let xu = &x[cover.chain_a.elems[i]];
                for j in *lo..=*hi {
                    if xu.clone() + x[cover.chain_b.elems[j]].clone() > Rat::one() {
                        return Err(MupiError::Infeasible);
                    }
                }
            }
        }
        let mut emitted = vec![false; n];
        for v in out.iter().flatten() {
            emitted[*v] = true;
        }
        #[cfg(debug_assertions)]
        for v in 0..n {
            debug_assert_eq!(
                emitted[v],
                x[v] == Rat::one(),
                "weight-1 vertices must be exactly the emitted cut-points"
            );
        }

        // Graph components: sweep the B intervals in order, merging
        // overlapping spans; positions covered by nothing are cut-points.
        let mut gcomps: Vec<GComp> = Vec::new();
        let mut open: Option<(usize, usize, usize, usize)> = None;
        for (j, nbr) in cover.inc_b.iter().enumerate() {
            let Some((lo, hi)) = *nbr else { continue };
            open = match open {
                None => Some((lo, hi, j, j)),
                Some((alo, ahi, blo, _)) if lo <= ahi => Some((alo, ahi.max(hi), blo, j)),
                Some((alo, ahi, blo, bhi)) => {
                    gcomps.push(GComp {
                        a: (alo, ahi),
                        b: (blo, bhi),
                        comps: Vec::new(),
                    });
                    Some((lo, hi, j, j))
                }
            };
        }
        if let Some((alo, ahi, blo, bhi)) = open {
            gcomps.push(GComp {
                a: (alo, ahi),
                b: (blo, bhi),
                comps: Vec::new(),
            });
        }

        // Tight components inside each graph component via union-find over
        // positions; sides must come out as contiguous intervals that tile
        // the graph component, otherwise the structure is inlaid.
        for gc in &mut gcomps {
            let na = gc.a.1 - gc.a.0 + 1;
            let nb = gc.b.1 - gc.b.0 + 1;
            let mut parent: Vec<usize> = (0..na + nb).collect();
            fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
                while parent[v] != v {
                    parent[v] = parent[parent[v]];
                    v = parent[v];
                }
                v
            }
            let mut has_tight = vec![false; na + nb];
            for i in gc.a.0..=gc.a.1 {
                let Some((lo, hi)) = cover.inc_a[i] else {
                    continue;
                };
                let xu = &x[cover.chain_a.elems[i]];
                for j in lo.max(gc.b.0)..=hi.min(gc.b.1) {
                    if xu.clone() + x[cover.chain_b.elems[j]].clone() == Rat::one() {
                        let (ai, bj) = (i - gc.a.0, na + j - gc.b.0);
                        has_tight[ai] = true;
                        has_tight[bj] = true;
                        let (ra, rb) = (find(&mut parent, ai), find(&mut parent, bj));
                        if ra != rb {
                            parent[ra] = rb;
                        }
                    }
                }
            }
            if !has_tight.iter().all(|&t| t) {
                return Err(MupiError::Loose);
            }
            let mut groups: std::collections::HashMap<usize, (Vec<usize>, Vec<usize>)> =
                Default::default();
            for v in 0..na + nb {
                let r = find(&mut parent, v);
                let entry = groups.entry(r).or_default();
                if v < na {
                    entry.0.push(gc.a.0 + v);
                } else {
                    entry.1.push(gc.b.0 + v - na);
                }
            }
            let mut list: Vec<(Vec<usize>, Vec<usize>)> = groups.into_values().collect();
            list.sort_by_key(|(a, _)| a.first().copied());
            let mut comps: Vec<Comp> = Vec::new();
            let mut next_a = gc.a.0;
            let mut next_b = gc.b.0;
            for (avs, bvs) in list {
                if avs.is_empty() || bvs.is_empty() {
                    return Err(MupiError::Loose);
                }
                let (alo, ahi) = (avs[0], *avs.last().unwrap());
                let (blo, bhi) = (bvs[0], *bvs.last().unwrap());
                if avs.len() != ahi - alo + 1
                    || bvs.len() != bhi - blo + 1
                    || alo != next_a
                    || blo != next_b
                {
                    return Err(MupiError::Inlay);
                }
                next_a = ahi + 1;
                next_b = bhi + 1;
                comps.push(Comp {
                    a: (alo, ahi),
                    b: (blo, bhi),
                });
            }
            if next_a != gc.a.1 + 1 || next_b != gc.b.1 + 1 {
                return Err(MupiError::Inlay);
            }
            gc.comps = comps;
        }

        let eps = rat(1, 2 * n.max(1) as i128);
        let poset = cover.to_poset();
        Ok(Engine {
            poset,
            cur: cover.clone(),
            loc,
            x,
            gcomps,
            out,
            emitted,
            eps,
        })
    }

    fn a_elem(&self, i: usize) -> usize {
        self.cur.chain_a.elems[i]
    }

    fn b_elem(&self, j: usize) -> usize {
        self.cur.chain_b.elems[j]
    }

    fn comp_xa(&self, c: &Comp) -> Rat {
        self.x[self.a_elem(c.a.0)].clone()
    }

    fn comp_xb(&self, c: &Comp) -> Rat {
        self.x[self.b_elem(c.b.0)].clone()
    }

    fn emit(&mut self, v: usize, rank: usize) {
        debug_assert!(!self.emitted[v], "element {v} emitted twice");
        debug_assert!(self.out[rank].is_none(), "rank {rank} written twice");
        self.out[rank] = Some(v);
        self.emitted[v] = true;
        self.x[v] = Rat::one();
    }

    fn snapshot(&self) -> TightComponents {
        TightComponents {
            gcomps: self
                .gcomps
                .iter()
                .map(|gc| GraphComponent {
                    a: gc.a,
                    b: gc.b,
                    comps: gc
                        .comps
                        .iter()
                        .map(|c| TightComponent {
                            a: c.a,
                            b: c.b,
                            xa: self.comp_xa(c),
                            xb: self.comp_xb(c),
                            color: c.color(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    #[cfg(debug_assertions)]
    fn total_entropy(&self) -> f64 {
        point_entropy(&StabPoint { x: self.x.clone() })
    }

    /// First good component, red before blue, each color in poset order.
    fn pick_good(&self) -> Option<(usize, usize)> {
        let snapshot = self.snapshot();
        let good = snapshot.good(&self.cur);
        if let Some(&(gi, ci)) = good.first() {
            return Some((gi, ci));
        }
        debug_assert!(
            self.gcomps.iter().all(|gc| gc.comps.is_empty()),
            "non-trivial components exist but none is good"
        );
        None
    }

    /// One iteration of the core loop: merge a good component, fold the
    /// revealed order into the partial information, emit every vertex whose
    /// rank became determined, absorb the surviving loose vertices into the
    /// touching components, and rebalance.
    fn step(&mut self, src: &mut dyn ComparisonSource) -> bool {
        let Some((gi, ci)) = self.pick_good() else {
            return false;
        };
        #[cfg(debug_assertions)]
        let entropy_before = self.total_entropy();
        let k = self.gcomps[gi].comps[ci].clone();

        let x_chain = Chain::new(self.cur.chain_a.elems[k.a.0..=k.a.1].to_vec());
        let y_chain = Chain::new(self.cur.chain_b.elems[k.b.0..=k.b.1].to_vec());
        let merged = hwang_lin_merge(&x_chain, &y_chain, src).merged;

        // Fold the revealed total order on K into the partial information
        // and refresh the incomparability intervals by the monotone scans.
        self.poset =
            add_chain_relations(&self.poset, &merged).expect("oracle answers extend the poset");
        self.cur = build_two_chain_cover(&self.poset, &self.cur.chain_a, &self.cur.chain_b)
            .expect("chains stay a cover");
        self.gcomps[gi].comps.remove(ci);

        // Classify K's vertices by their updated intervals: an empty
        // interval is a cut-point emitted at its predecessor count; the rest
        // survive as loose vertices reaching exactly one side of K.
        let mut bottom: Vec<usize> = Vec::new();
        let mut top: Vec<usize> = Vec::new();
        let mut bottom_on_b = false;
        let mut top_on_b = false;
        for &v in &merged.elems {
            let (on_b, pos) = self.loc[v];
            let interval = if on_b {
                self.cur.inc_b[pos]
            } else {
                self.cur.inc_a[pos]
            };
            match interval {
                None => {
                    let below = if on_b {
                        self.cur.below_b[pos]
                    } else {
                        self.cur.below_a[pos]
                    };
                    self.emit(v, pos + below);
                }
                Some((lo, hi)) => {
                    let down = if on_b { hi < k.a.0 } else { hi < k.b.0 };
                    let up = if on_b { lo > k.a.1 } else { lo > k.b.1 };
                    debug_assert!(
                        down != up,
                        "a surviving vertex reaches exactly one side of the merged component"
                    );
                    if down {
                        debug_assert!(bottom.is_empty() || bottom_on_b == on_b);
                        bottom_on_b = on_b;
                        bottom.push(pos);
                    } else {
                        debug_assert!(top.is_empty() || top_on_b == on_b);
                        top_on_b = on_b;
                        top.push(pos);
                    }
                }
            }
        }
        bottom.sort_unstable();
        top.sort_unstable();

        // Lift surviving weights to keep the point color consistent.
        let half = rat(1, 2);
        let half_eps = half.clone() + self.eps.clone();
        for (&pos, on_b) in bottom
            .iter()
            .map(|p| (p, bottom_on_b))
            .chain(top.iter().map(|p| (p, top_on_b)))
        {
            let (elem, lift) = if on_b {
                (self.b_elem(pos), &half_eps)
            } else {
                (self.a_elem(pos), &half)
            };
            if self.x[elem] < *lift {
                self.x[elem] = lift.clone();
            }
        }

        // Absorb the loose vertices into the touching components in one
        // pass: the bottom group joins the component directly below, the top
        // group the one directly above.
        if !bottom.is_empty() {
            assert!(ci > 0, "bottom survivors need a component below");
            let j = &mut self.gcomps[gi].comps[ci - 1];
            if bottom_on_b {
                let w = Rat::one() - self.x[self.cur.chain_a.elems[j.a.0]].clone();
                for &pos in &bottom {
                    let e = self.cur.chain_b.elems[pos];
                    debug_assert!(self.x[e] <= w);
                    self.x[e] = w.clone();
                }
                j.b.1 = *bottom.last().unwrap();
            } else {
                let w = Rat::one() - self.x[self.cur.chain_b.elems[j.b.0]].clone();
                for &pos in &bottom {
                    let e = self.cur.chain_a.elems[pos];
                    debug_assert!(self.x[e] <= w);
                    self.x[e] = w.clone();
                }
                j.a.1 = *bottom.last().unwrap();
            }
        }
        if !top.is_empty() {
            assert!(
                ci < self.gcomps[gi].comps.len(),
                "top survivors need a component above"
            );
            let l = &mut self.gcomps[gi].comps[ci];
            if top_on_b {
                let w = Rat::one() - self.x[self.cur.chain_a.elems[l.a.0]].clone();
                for &pos in &top {
                    let e = self.cur.chain_b.elems[pos];
                    debug_assert!(self.x[e] <= w);
                    self.x[e] = w.clone();
                }
                l.b.0 = top[0];
            } else {
                let w = Rat::one() - self.x[self.cur.chain_b.elems[l.b.0]].clone();
                for &pos in &top {
                    let e = self.cur.chain_a.elems[pos];
                    debug_assert!(self.x[e] <= w);
                    self.x[e] = w.clone();
                }
                l.a.0 = top[0];
            }
        }

        self.rebuild_gcomps();
        self.rebalance_all();

        #[cfg(debug_assertions)]
        {
            let entropy_after = self.total_entropy();
            debug_assert!(
                entropy_after <= entropy_before + 1e-9,
                "entropy increased across an iteration: {entropy_before} -> {entropy_after}"
            );
            self.validate();
        }
        true
    }

    /// Regroups the surviving components into the components of the updated
    /// incomparability graph.
    fn rebuild_gcomps(&mut self) {
        let flat: Vec<Comp> = self.gcomps.drain(..).flat_map(|gc| gc.comps).collect();
        let mut gcs: Vec<GComp> = Vec::new();
        let mut open: Option<(usize, usize, usize, usize)> = None;
        for (j, nbr) in self.cur.inc_b.iter().enumerate() {
            let Some((lo, hi)) = *nbr else { continue };
            open = match open {
                None => Some((lo, hi, j, j)),
                Some((alo, ahi, blo, _)) if lo <= ahi => Some((alo, ahi.max(hi), blo, j)),
                Some((alo, ahi, blo, bhi)) => {
                    gcs.push(GComp {
                        a: (alo, ahi),
                        b: (blo, bhi),
                        comps: Vec::new(),
                    });
                    Some((lo, hi, j, j))
                }
            };
        }
        if let Some((alo, ahi, blo, bhi)) = open {
            gcs.push(GComp {
                a: (alo, ahi),
                b: (blo, bhi),
                comps: Vec::new(),
            });
        }
        let mut it = flat.into_iter().peekable();
        for gc in &mut gcs {
            while let Some(c) = it.peek() {
                if c.a.0 >= gc.a.0 && c.a.1 <= gc.a.1 {
                    debug_assert!(c.b.0 >= gc.b.0 && c.b.1 <= gc.b.1);
                    gc.comps.push(it.next().unwrap());
                } else {
                    break;
                }
            }
        }
        debug_assert!(
            it.peek().is_none(),
            "every component lands in a graph component"
        );
        self.gcomps = gcs;
    }

    /// Signed slack of a component plus which touching components bind: how
    /// far the A-side weight can move toward balance before an outside edge
    /// tightens.
    fn slack_of(&self, gi: usize, ci: usize) -> (Rat, bool, bool) {
        let gc = &self.gcomps[gi];
        let k = &gc.comps[ci];
        let total = (k.a_count() + k.b_count()) as i128;
        let target = rat(k.a_count() as i128, total);
        let xa = self.comp_xa(k);
        let xb = self.comp_xb(k);
        let delta = target - xa.clone();
        if delta == Rat::zero() {
            return (delta, false, false);
        }
        let mut caps: Vec<(Rat, bool)> = Vec::new(); // (cap, binds_prev)
        if delta > Rat::zero() {
            // The A side rises against edges into the touching components'
            // B sides.
            if ci > 0 && self.cur.inc_a[k.a.0].unwrap().0 < k.b.0 {
                caps.push((
                    Rat::one() - self.comp_xb(&gc.comps[ci - 1]) - xa.clone(),
                    true,
                ));
            }
            if ci + 1 < gc.comps.len() && self.cur.inc_a[k.a.1].unwrap().1 > k.b.1 {
                caps.push((
                    Rat::one() - self.comp_xb(&gc.comps[ci + 1]) - xa.clone(),
                    false,
                ));
            }
        } else {
            // The B side rises against edges into the touching components'
            // A sides.
            if ci > 0 && self.cur.inc_b[k.b.0].unwrap().0 < k.a.0 {
                caps.push((
                    Rat::one() - self.comp_xa(&gc.comps[ci - 1]) - xb.clone(),
                    true,
                ));
            }
            if ci + 1 < gc.comps.len() && self.cur.inc_b[k.b.1].unwrap().1 > k.a.1 {
                caps.push((
                    Rat::one() - self.comp_xa(&gc.comps[ci + 1]) - xb.clone(),
                    false,
                ));
            }
        }
        let mut magnitude = if delta > Rat::zero() {
            delta.clone()
        } else {
            -delta.clone()
        };
        for (cap, _) in &caps {
            debug_assert!(
                *cap > Rat::zero(),
                "edge to a touching component already tight"
            );
            if *cap < magnitude {
                magnitude = cap.clone();
            }
        }
        let bind_prev = caps.iter().any(|(cap, p)| *p && *cap == magnitude);
        let bind_next = caps.iter().any(|(cap, p)| !*p && *cap == magnitude);
        let sigma = if delta > Rat::zero() {
            magnitude
        } else {
            -magnitude
        };
        (sigma, bind_prev, bind_next)
    }

    fn apply_shift(&mut self, gi: usize, ci: usize, sigma: &Rat) {
        let k = self.gcomps[gi].comps[ci].clone();
        for i in k.a.0..=k.a.1 {
            let e = self.a_elem(i);
            self.x[e] += sigma.clone();
        }
        for j in k.b.0..=k.b.1 {
            let e = self.b_elem(j);
            self.x[e] -= sigma.clone();
        }
    }

    /// Rebalancing: while an unbalanced component exists, shift it by its
    /// slack; a slack capped by a touching edge merges the components and
    /// the loop continues.
    fn rebalance_all(&mut self) {
        // Color consistency is preserved and vertex statuses are frozen by
        // rebalancing, provided the input point was color consistent; the
        // checks are skipped for inconsistent inputs, which the rebalancing
        // still drives to balance.
        #[cfg(debug_assertions)]
        let consistent_entry = self.is_color_consistent();
        #[cfg(debug_assertions)]
        let statuses = self.statuses();
        loop {
            let mut found = None;
            'scan: for (gi, gc) in self.gcomps.iter().enumerate() {
                for (ci, c) in gc.comps.iter().enumerate() {
                    let total = (c.a_count() + c.b_count()) as i128;
                    if self.comp_xa(c) != rat(c.a_count() as i128, total) {
                        found = Some((gi, ci));
                        break 'scan;
                    }
                }
            }
            let Some((gi, ci)) = found else { break };
            #[cfg(debug_assertions)]
            let entropy_before = self.total_entropy();
            let (sigma, bind_prev, bind_next) = self.slack_of(gi, ci);
            self.apply_shift(gi, ci, &sigma);
            if bind_prev || bind_next {
                let lo = if bind_prev { ci - 1 } else { ci };
                let hi = if bind_next { ci + 1 } else { ci };
                #[cfg(debug_assertions)]
                if consistent_entry {
                    let gc = &self.gcomps[gi];
                    let color = gc.comps[ci].color();
                    for cj in lo..=hi {
                        debug_assert_eq!(gc.comps[cj].color(), color, "merge across colors");
                    }
                }
                let gc = &mut self.gcomps[gi];
                let merged = Comp {
                    a: (gc.comps[lo].a.0, gc.comps[hi].a.1),
                    b: (gc.comps[lo].b.0, gc.comps[hi].b.1),
                };
                gc.comps.splice(lo..=hi, [merged]);
                #[cfg(debug_assertions)]
                {
                    let c = self.gcomps[gi].comps[lo].clone();
                    let xa = self.comp_xa(&c);
                    for i in c.a.0..=c.a.1 {
                        debug_assert_eq!(self.x[self.a_elem(i)], xa, "merged weights not uniform");
                    }
                }
            }
            #[cfg(debug_assertions)]
            {
                debug_assert!(self.total_entropy() <= entropy_before + 1e-9);
                if consistent_entry {
                    debug_assert!(self.is_color_consistent(), "color consistency lost");
                }
            }
        }
        #[cfg(debug_assertions)]
        if consistent_entry {
            debug_assert_eq!(
                statuses,
                self.statuses(),
                "vertex status changed during rebalancing"
            );
        }
    }

    /// Big/small status per vertex: A vertices are big at weight ≥ 1/2,
    /// B vertices above 1/2.
    #[cfg(debug_assertions)]
    fn statuses(&self) -> Vec<bool> {
        let half = rat(1, 2);
        (0..self.cur.len())
            .map(|v| {
                if self.loc[v].0 {
                    self.x[v] > half
                } else {
                    self.x[v] >= half
                }
            })
            .collect()
    }

    #[cfg(debug_assertions)]
    fn is_color_consistent(&self) -> bool {
        let half = rat(1, 2);
        self.gcomps.iter().all(|gc| {
            gc.comps.iter().all(|c| {
                let xa = self.comp_xa(c);
                let xb = self.comp_xb(c);
                xa.clone() + xb.clone() == Rat::one()
                    && match c.color() {
                        Color::Red => xa >= half && xb <= half,
                        Color::Blue => xa < half && xb > half,
                    }
            })
        })
    }

    /// Structure sanity: components tile their graph component with uniform
    /// side weights and no emitted members.
    #[cfg(debug_assertions)]
    fn validate(&self) {
        for gc in &self.gcomps {
            let mut next_a = gc.a.0;
            let mut next_b = gc.b.0;
            for c in &gc.comps {
                debug_assert_eq!(c.a.0, next_a);
                debug_assert_eq!(c.b.0, next_b);
                next_a = c.a.1 + 1;
                next_b = c.b.1 + 1;
                let xa = self.comp_xa(c);
                let xb = self.comp_xb(c);
                for i in c.a.0..=c.a.1 {
                    debug_assert_eq!(self.x[self.a_elem(i)], xa);
                    debug_assert!(!self.emitted[self.a_elem(i)]);
                }
                for j in c.b.0..=c.b.1 {
                    debug_assert_eq!(self.x[self.b_elem(j)], xb);
                    debug_assert!(!self.emitted[self.b_elem(j)]);
                }
            }
            debug_assert_eq!(next_a, gc.a.1 + 1);
            debug_assert_eq!(next_b, gc.b.1 + 1);
        }
    }

    fn run(&mut self, src: &mut dyn ComparisonSource) {
        while self.step(src) {}
        debug_assert!(self.gcomps.is_empty());
    }
}

/// Builds the component structure for a feasible point over the cover's
/// graph, failing on loose or inlaid components.
pub fn build_tight_components(
    g: &TwoChainCover,
    x: &StabPoint,
) -> Result<TightComponents, MupiError> {
    let engine = Engine::build(g, x.x.clone(), initial_out(g, x))?;
    Ok(engine.snapshot())
}

/// Signed slack of component `(gi, ci)` of `tc`: the shift toward balance
/// allowed before an edge to a touching component tightens.
pub fn slack(tc: &TightComponents, gi: usize, ci: usize, g: &TwoChainCover, x: &StabPoint) -> Rat {
    let engine = Engine::build(g, x.x.clone(), initial_out(g, x)).expect("valid structure");
    debug_assert_eq!(&engine.snapshot(), tc, "structure must match the point");
    engine.slack_of(gi, ci).0
}

/// Runs the rebalancing loop to local optimality, returning the updated
/// point and structure.
pub fn rebalance(
    g: &TwoChainCover,
    x: &StabPoint,
    tc: &TightComponents,
) -> (StabPoint, TightComponents) {
    let mut engine = Engine::build(g, x.x.clone(), initial_out(g, x)).expect("valid structure");
    debug_assert_eq!(&engine.snapshot(), tc, "structure must match the point");
    engine.rebalance_all();
    (
        StabPoint {
            x: engine.x.clone(),
        },
        engine.snapshot(),
    )
}

/// Output vector with the already-determined elements (weight 1) in place:
/// a weight-1 element is a cut-point whose rank is its predecessor count.
fn initial_out(g: &TwoChainCover, x: &StabPoint) -> OutputChain {
    let n = g.len();
    let mut out = vec![None; n];
    for (i, &v) in g.chain_a.elems.iter().enumerate() {
        if x.x[v] == Rat::one() {
            let rank = i + g.below_a[i];
            assert!(out[rank].is_none());
            out[rank] = Some(v);
        }
    }
    for (j, &v) in g.chain_b.elems.iter().enumerate() {
        if x.x[v] == Rat::one() {
            let rank = j + g.below_b[j];
            assert!(out[rank].is_none());
            out[rank] = Some(v);
        }
    }
    out
}

/// Core loop: merges the two chains given a locally optimal point whose
/// cut-points already sit in `out`. Comparisons are bounded by `3 n H(x)`.
pub fn mupi_core(
    g: &TwoChainCover,
    x: StabPoint,
    src: &mut dyn ComparisonSource,
    out: OutputChain,
) -> Result<MupiReport, MupiError> {
    let n = g.len();
    let core_entropy = point_entropy(&x);
    let before = src.query_count();
    let mut engine = Engine::build(g, x.x, out)?;
    engine.run(src);
    let core_comparisons = src.query_count() - before;
    let order: LinearOrder = engine
        .out
        .iter()
        .map(|slot| slot.expect("every rank must be filled"))
        .collect();
    Ok(MupiReport {
        order,
        comparisons: core_comparisons,
        core_comparisons,
        core_entropy,
        n,
    })
}

/// Full merging under partial information: computes the minimum-entropy
/// point of the cover's incomparability graph, swaps the chains when the red
/// contribution exceeds the blue one, emits the initial cut-points, and runs
/// the core. Comparisons are bounded by `6 log2 e(P)`.
pub fn mupi(
    p: &Poset,
    a: &Chain,
    b: &Chain,
    src: &mut dyn ComparisonSource,
) -> Result<MupiReport, MupiError> {
    let before = src.query_count();
    let mut cover = build_two_chain_cover(p, a, b)?;
    let n = cover.len();
    if n == 0 {
        return Ok(MupiReport {
            order: Vec::new(),
            comparisons: 0,
            core_comparisons: 0,
            core_entropy: 0.0,
            n: 0,
        });
    }
    let (_, x0) = convex_bipartite_entropy(&cover.graph());
    let mut xs = x0.x;
    while xs.len() < n {
        xs.push(Rat::one());
    }
    let x = StabPoint { x: xs };
    let tc = build_tight_components(&cover, &x)?;
    let (red, blue) = red_contribution(&x, &tc, n);
    if red > blue {
        cover = build_two_chain_cover(p, b, a)?;
    }
    let out = initial_out(&cover, &x);
    let report = mupi_core(&cover, x, src, out)?;
    Ok(MupiReport {
        comparisons: src.query_count() - before,
        ..report
    })
}

/// Test helper: whenever two tight edges cross, both induced edges must
/// exist and be tight.
pub fn crossing_property_holds(g: &TwoChainCover, x: &StabPoint) -> bool {
    let mut tight_edges: Vec<(usize, usize)> = Vec::new();
    for (i, nbr) in g.inc_a.iter().enumerate() {
        if let Some((lo, hi)) = nbr {
            for j in *lo..=*hi {
                if x.x[g.chain_a.elems[i]].clone() + x.x[g.chain_b.elems[j]].clone() == Rat::one() {
                    tight_edges.push((i, j));
                }
            }
        }
    }
    for &(u, v) in &tight_edges {
        for &(u2, v2) in &tight_edges {
            if u < u2 && v2 < v {
                for (i, j) in [(u, v2), (u2, v)] {
                    let within = g.inc_a[i].is_some_and(|(lo, hi)| lo <= j && j <= hi);
                    if !within {
                        return false;
                    }
                    if x.x[g.chain_a.elems[i]].clone() + x.x[g.chain_b.elems[j]].clone()
                        != Rat::one()
                    {
                        return false;
                    }
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::HiddenOrderOracle;
    use crate::poset::{count_linear_extensions, linear_extensions, transitive_closure};
    use num_traits::ToPrimitive;

    fn antichain2() -> (Poset, Chain, Chain) {
        (
            Poset::antichain(2),
            Chain::new(vec![0]),
            Chain::new(vec![1]),
        )
    }

    /// A = 0<1<2, B = 3<4 with a0<b4, b3<a2; two tight components sharing a
    /// graph component, the second one capping the first.
    fn capped_instance() -> (Poset, TwoChainCover, StabPoint) {
        let p = transitive_closure(&[(0, 1), (1, 2), (3, 4), (0, 4), (3, 2)], 5).unwrap();
        let a = Chain::new(vec![0, 1, 2]);
        let b = Chain::new(vec![3, 4]);
        let cover = build_two_chain_cover(&p, &a, &b).unwrap();
        assert_eq!(cover.inc_a, vec![Some((0, 0)), Some((0, 1)), Some((1, 1))]);
        assert_eq!(cover.inc_b, vec![Some((0, 1)), Some((1, 2))]);
        // comp1 = ({a0,a1},{b3}) at (11/20, 9/20); comp2 = ({a2},{b4}) at
        // (3/5, 2/5); the edge a1~b4 is slack by 1/20.
        let x = StabPoint {
            x: vec![rat(11, 20), rat(11, 20), rat(3, 5), rat(9, 20), rat(2, 5)],
        };
        (p, cover, x)
    }

    #[test]
    fn cover_construction_cases() {
        let p = Poset::chain(2);
        let cover =
            build_two_chain_cover(&p, &Chain::new(vec![0, 1]), &Chain::new(vec![])).unwrap();
        assert_eq!(cover.inc_a, vec![None, None]);

        let (p, a, b) = antichain2();
        let cover = build_two_chain_cover(&p, &a, &b).unwrap();
        assert_eq!(cover.inc_a, vec![Some((0, 0))]);
        assert_eq!(cover.inc_b, vec![Some((0, 0))]);

        // A = (a1, a2), B = (b1) with a1 < b1 the only cross relation.
        let p = transitive_closure(&[(0, 1), (0, 2)], 3).unwrap();
        let cover =
            build_two_chain_cover(&p, &Chain::new(vec![0, 1]), &Chain::new(vec![2])).unwrap();
        assert_eq!(cover.inc_a, vec![None, Some((0, 0))]);
        assert_eq!(cover.inc_b, vec![Some((1, 1))]);
        assert_eq!(cover.below_a, vec![0, 0]);
        assert_eq!(cover.below_b, vec![1]);
    }

    #[test]
    fn cover_rejects_bad_inputs() {
        let p = Poset::antichain(3);
        let not_chain = build_two_chain_cover(&p, &Chain::new(vec![0, 1]), &Chain::new(vec![2]));
        assert!(matches!(not_chain, Err(MupiError::InvalidCover(_))));
        let missing = build_two_chain_cover(&p, &Chain::new(vec![0]), &Chain::new(vec![1]));
        assert!(matches!(missing, Err(MupiError::InvalidCover(_))));
    }

    #[test]
    fn tight_components_of_antichain_pair() {
        let (p, a, b) = antichain2();
        let cover = build_two_chain_cover(&p, &a, &b).unwrap();
        let x = StabPoint {
            x: vec![rat(1, 2), rat(1, 2)],
        };
        let tc = build_tight_components(&cover, &x).unwrap();
        assert_eq!(tc.gcomps.len(), 1);
        let c = &tc.gcomps[0].comps[0];
        assert_eq!((c.a, c.b), ((0, 0), (0, 0)));
        assert_eq!(c.color, Color::Red);
        assert!(c.is_balanced());
    }

    #[test]
    fn tight_components_empty_when_all_cut() {
        let p = Poset::chain(3);
        let cover =
            build_two_chain_cover(&p, &Chain::new(vec![0, 1, 2]), &Chain::new(vec![])).unwrap();
        let tc = build_tight_components(&cover, &StabPoint::ones(3)).unwrap();
        assert!(tc.gcomps.is_empty());
    }

    #[test]
    fn tight_components_two_pairs_in_order() {
        // Two stacked incomparable pairs: a0~b2 and a1~b3, everything else
        // comparable.
        let p = transitive_closure(&[(0, 1), (2, 3), (0, 3), (2, 1)], 4).unwrap();
        let a = Chain::new(vec![0, 1]);
        let b = Chain::new(vec![2, 3]);
        let cover = build_two_chain_cover(&p, &a, &b).unwrap();
        let x = StabPoint {
            x: vec![rat(1, 2); 4],
        };
        let tc = build_tight_components(&cover, &x).unwrap();
        let comps: Vec<_> = tc.components().collect();
        assert_eq!(comps.len(), 2);
        assert_eq!((comps[0].a, comps[0].b), ((0, 0), (0, 0)));
        assert_eq!((comps[1].a, comps[1].b), ((1, 1), (1, 1)));
        assert!(crossing_property_holds(&cover, &x));
    }

    #[test]
    fn loose_vertex_is_rejected() {
        let (p, a, b) = antichain2();
        let cover = build_two_chain_cover(&p, &a, &b).unwrap();
        let x = StabPoint {
            x: vec![rat(1, 3), rat(1, 3)],
        };
        assert_eq!(build_tight_components(&cover, &x), Err(MupiError::Loose));
    }

    #[test]
    fn slack_of_lone_unbalanced_pair() {
        let (p, a, b) = antichain2();
        let cover = build_two_chain_cover(&p, &a, &b).unwrap();
        let x = StabPoint {
            x: vec![rat(2, 5), rat(3, 5)],
        };
        let tc = build_tight_components(&cover, &x).unwrap();
        assert_eq!(slack(&tc, 0, 0, &cover, &x), rat(1, 10));

        let balanced = StabPoint {
            x: vec![rat(1, 2), rat(1, 2)],
        };
        let tc = build_tight_components(&cover, &balanced).unwrap();
        assert_eq!(slack(&tc, 0, 0, &cover, &balanced), rat(0, 1));
    }

    #[test]
    fn slack_capped_by_neighbour_edge() {
        let (_, cover, x) = capped_instance();
        let tc = build_tight_components(&cover, &x).unwrap();
        assert_eq!(tc.components().count(), 2);
        // comp1 target 2/3, delta 7/60, capped at 1/20 by the a1~b4 edge.
        assert_eq!(slack(&tc, 0, 0, &cover, &x), rat(1, 20));
        // comp2 target 1/2, delta -1/10, capped at 1/20 by the b4~a1 edge.
        assert_eq!(slack(&tc, 0, 1, &cover, &x), rat(-1, 20));
    }

    #[test]
    fn rebalance_balances_lone_pair() {
        let (p, a, b) = antichain2();
        let cover = build_two_chain_cover(&p, &a, &b).unwrap();
        let x = StabPoint {
            x: vec![rat(2, 5), rat(3, 5)],
        };
        let tc = build_tight_components(&cover, &x).unwrap();
        let (x2, tc2) = rebalance(&cover, &x, &tc);
        assert_eq!(x2.x, vec![rat(1, 2), rat(1, 2)]);
        assert!(tc2.components().all(|c| c.is_balanced()));
        // Rebalancing a locally optimal point is the identity.
        let (x3, tc3) = rebalance(&cover, &x2, &tc2);
        assert_eq!(x3, x2);
        assert_eq!(tc3, tc2);
    }

    #[test]
    fn rebalance_merges_capped_components() {
        let (_, cover, x) = capped_instance();
        let tc = build_tight_components(&cover, &x).unwrap();
        let (x2, tc2) = rebalance(&cover, &x, &tc);
        // The capped shift tightens a1~b4 and merges both components into a
        // single balanced (3,2) component at weights (3/5, 2/5).
        assert_eq!(tc2.components().count(), 1);
        let c = tc2.components().next().unwrap();
        assert_eq!((c.a, c.b), ((0, 2), (0, 1)));
        assert!(c.is_balanced());
        assert_eq!(
            x2.x,
            vec![rat(3, 5), rat(3, 5), rat(3, 5), rat(2, 5), rat(2, 5)]
        );
        assert!(crossing_property_holds(&cover, &x2));
    }

    #[test]
    fn red_contribution_cases() {
        let (p, a, b) = antichain2();
        let cover = build_two_chain_cover(&p, &a, &b).unwrap();
        let x = StabPoint {
            x: vec![rat(1, 2), rat(1, 2)],
        };
        let tc = build_tight_components(&cover, &x).unwrap();
        let (red, blue) = red_contribution(&x, &tc, 2);
        assert!((red - 1.0).abs() < 1e-12);
        assert_eq!(blue, 0.0);

        let empty = TightComponents { gcomps: vec![] };
        assert_eq!(red_contribution(&x, &empty, 2), (0.0, 0.0));

        // Mirrored red and blue components contribute equally: a (2,1)
        // component at (2/3, 1/3) against a (1,2) component at (1/3, 2/3).
        let p = transitive_closure(
            &[(0, 1), (1, 2), (3, 4), (4, 5), (3, 2), (0, 4), (0, 5), (1, 4), (1, 5)],
            6,
        )
        .unwrap();
        let a = Chain::new(vec![0, 1, 2]);
        let b = Chain::new(vec![3, 4, 5]);
        let cover = build_two_chain_cover(&p, &a, &b).unwrap();
        assert_eq!(cover.inc_a, vec![Some((0, 0)), Some((0, 0)), Some((1, 2))]);
        let x = StabPoint {
            x: vec![rat(2, 3), rat(2, 3), rat(1, 3), rat(1, 3), rat(2, 3), rat(2, 3)],
        };
        let tc = build_tight_components(&cover, &x).unwrap();
        let colors: Vec<Color> = tc.components().map(|c| c.color).collect();
        assert_eq!(colors, vec![Color::Red, Color::Blue]);
        let (red, blue) = red_contribution(&x, &tc, 6);
        assert!((red - blue).abs() < 1e-12);
    }

    #[test]
    fn mupi_on_total_order_is_free() {
        let p = Poset::chain(4);
        let a = Chain::new(vec![0, 1, 2, 3]);
        let b = Chain::new(vec![]);
        let mut src = HiddenOrderOracle::new(&[0, 1, 2, 3], &p).unwrap();
        let report = mupi(&p, &a, &b, &mut src).unwrap();
        assert_eq!(report.comparisons, 0);
        assert_eq!(report.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn mupi_on_antichain_pair_uses_one_comparison() {
        let (p, a, b) = antichain2();
        for order in [[0usize, 1], [1, 0]] {
            let mut src = HiddenOrderOracle::new(&order, &p).unwrap();
            let report = mupi(&p, &a, &b, &mut src).unwrap();
            assert_eq!(report.comparisons, 1);
            assert_eq!(report.order, order.to_vec());
            // 6 log2 e(P) = 6 here.
            assert!((report.comparisons as f64) <= 6.0);
        }
    }

    #[test]
    fn mupi_exhaustive_small_width2() {
        for n in 1..=6usize {
            for (p, a, b) in crate::instances::enumerate_two_chain_posets(n) {
                let e = count_linear_extensions(&p).unwrap().to_f64().unwrap();
                let log_e = e.log2();
                for order in linear_extensions(&p) {
                    let mut src = HiddenOrderOracle::new(&order, &p).unwrap();
                    let report = mupi(&p, &a, &b, &mut src).unwrap();
                    assert_eq!(report.order, order, "poset {p:?}");
                    assert!(
                        report.comparisons as f64 <= 6.0 * log_e + 1e-9,
                        "poset {p:?} order {order:?}: {} > 6 log2 {e}",
                        report.comparisons
                    );
                    assert!(
                        report.core_comparisons as f64
                            <= 3.0 * report.n as f64 * report.core_entropy + 1e-9,
                        "core bound violated on {p:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn mupi_random_width2_instances() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for trial in 0..200u64 {
            let n = 2 + (trial as usize % 30);
            let (p, a, b) = crate::instances::random_two_chain_poset(n, trial);
            let order = crate::poset::random_topological_order(&p, &mut rng);
            let mut src = HiddenOrderOracle::new(&order, &p).unwrap();
            let report = mupi(&p, &a, &b, &mut src).unwrap();
            assert_eq!(report.order, order);
            assert!(
                report.core_comparisons as f64
                    <= 3.0 * report.n as f64 * report.core_entropy + 1e-9
            );
        }
    }

    /// Stacked incomparable pairs: every tight component ties and is red, so
    /// exchanging the chains cannot push the red contribution below the blue
    /// one; the query bound must hold regardless.
    #[test]
    fn mupi_all_tied_components() {
        use rand::SeedableRng;
        let k = 6usize;
        let below: Vec<usize> = (0..k).collect();
        let above: Vec<usize> = (0..k).map(|i| k - 1 - i).collect();
        let (p, a, b) = crate::instances::two_chain_poset(k, k, &below, &above);
        // a_i is incomparable to b_i only.
        for i in 0..k {
            assert!(p.incomparable(i, k + i));
        }
        let log_e = (count_linear_extensions(&p).unwrap().to_f64().unwrap()).log2();
        assert_eq!(log_e, k as f64); // 2^k extensions
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let order = crate::poset::random_topological_order(&p, &mut rng);
            let mut src = HiddenOrderOracle::new(&order, &p).unwrap();
            let report = mupi(&p, &a, &b, &mut src).unwrap();
            assert_eq!(report.order, order);
            assert_eq!(report.comparisons, k as u64); // one comparison per pair
            assert!(report.comparisons as f64 <= 6.0 * log_e);
        }
    }

    /// A cross edge can survive a merge between components positioned on
    /// opposite sides of the merged one, so the graph component must not
    /// split; this instance also drives the chain exchange on entry.
    #[test]
    fn mupi_keeps_surviving_cross_edges() {
        let p = transitive_closure(
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (1, 2),
                (1, 3),
                (2, 3),
                (4, 1),
                (4, 2),
                (4, 3),
                (4, 5),
                (4, 6),
                (4, 7),
                (5, 1),
                (5, 2),
                (5, 3),
                (5, 6),
                (5, 7),
                (6, 2),
                (6, 3),
                (6, 7),
            ],
            8,
        )
        .unwrap();
        let a = Chain::new(vec![0, 1, 2, 3]);
        let b = Chain::new(vec![4, 5, 6, 7]);
        // Elements 0 and 7 are incomparable and stay so while the component
        // between them merges first.
        assert!(p.incomparable(0, 7));
        let log_e = count_linear_extensions(&p).unwrap().to_f64().unwrap().log2();
        for order in linear_extensions(&p) {
            let mut src = HiddenOrderOracle::new(&order, &p).unwrap();
            let report = mupi(&p, &a, &b, &mut src).unwrap();
            assert_eq!(report.order, order);
            assert!(report.comparisons as f64 <= 6.0 * log_e + 1e-9);
        }
    }
}
