//! Entropy-annotated Monte Carlo search trees.
//!
//! The crate builds search trees whose back-propagation step also maintains the
//! Shannon entropy (in bits) of the random action process spanned below every
//! node, and reduces finished trees by removing subtrees so as to maximize the
//! trade-off `H(root) - beta * log2|A| * size`.
//!
//! Modules:
//!
//! - [`tree`]: arena-backed tree model, tree policy, invariant checks.
//! - [`entropy`]: recursive and incremental subtree entropy, per-step bounds,
//!   closed-form entropy changes under subtree removal.
//! - [`engine`]: UCT / PUCT search with the entropy-carrying back-propagation.
//! - [`reduction`]: trade-off criterion, local greedy and two-stage reductions.
//! - [`env`]: a small seeded lane/speed driving MDP with seven actions.
//! - [`analytics`]: original-vs-reduced comparison rows and aggregation.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod engine;
pub mod entropy;
pub mod env;
pub mod reduction;
pub mod tree;

pub use engine::{run_search, Environment, Evaluator, Search, SearchConfig, SelectionMode};
pub use entropy::EntropyReport;
pub use reduction::{Algorithm, ReductionOutcome, SizeMeasure, TradeOff};
pub use tree::{ActionAlphabet, ActionId, Node, NodeId, Tree, TreePolicy, Violation};
