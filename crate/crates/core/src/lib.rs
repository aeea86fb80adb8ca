//! Sorting under partial information.
//!
//! A poset `P` records the known outcomes of comparisons between elements of a
//! hidden linear order. The library provides the machinery to finish the sort
//! with few additional comparisons, together with exact brute-force oracles
//! that let every claimed query bound be checked on small instances:
//!
//! * [`poset`] — poset representation, transitive closure, level and greedy
//!   chain decompositions, exact linear-extension counting.
//! * [`oracle`] — comparison sources: a hidden linear order, and an
//!   interval-halving adversary that forces a query lower bound.
//! * [`merge`] — oracle-driven chain merging: linear merge, binary insertion,
//!   Huffman multiway merge, and the Hwang-Lin unbalanced merge.
//! * [`entropy`] — stable-set-polytope points, greedy points, and the exact
//!   entropy of convex bipartite graphs.
//! * [`mupi`] — merging under partial information for posets covered by two
//!   chains, driven by tight-edge components of the weight vector.
//! * [`sort`] — the four end-to-end sorters and their preprocessing artifacts.
//! * [`instances`] — instance generators used by tests and the CLI.

pub mod entropy;
pub mod instances;
pub mod merge;
pub mod mupi;
pub mod oracle;
pub mod poset;
pub mod rat;
pub mod sort;

pub use poset::{Chain, ChainDecomposition, LevelDecomposition, Poset};
pub use rat::Rat;

/// A total order on `0..n`, listed from smallest to largest element.
pub type LinearOrder = Vec<usize>;
