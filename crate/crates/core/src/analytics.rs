//! Original-versus-reduced comparison and per-batch aggregation.
//!
//! Every column is `(original - reduced) / original`, so negative values mean
//! the quantity grew. Columns whose original value is zero, or which do not
//! exist for a tree, are `None` and left out of averages.

use alloc::vec::Vec;

use thiserror::Error;

use crate::reduction::{tradeoff_value, TradeOff};
use crate::tree::{most_visited, ActionId, NodeId, Tree};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("nothing to aggregate")]
    Empty,
}

/// A greedy path from the root and the size of the subtree it enters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreePath {
    pub actions: Vec<ActionId>,
    /// Visits of the root child the path starts with.
    pub subtree_visits: u64,
}

impl TreePath {
    pub fn depth(&self) -> usize {
        self.actions.len()
    }
}

fn ranked_children(tree: &Tree, id: NodeId) -> Vec<(ActionId, u64)> {
    let n = tree.node(id);
    let mut v: Vec<(ActionId, u64)> = n
        .children
        .iter()
        .map(|&(a, _)| (a, n.child_visits[a.index()]))
        .filter(|&(_, c)| c > 0)
        .collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

fn follow(tree: &Tree, first: ActionId) -> TreePath {
    let root = tree.root_node();
    let mut actions = alloc::vec![first];
    let mut cur = root.child(first).expect("ranked child exists");
    while let Some(a) = most_visited(&tree.node(cur).child_visits) {
        match tree.node(cur).child(a) {
            Some(c) => {
                actions.push(a);
                cur = c;
            }
            None => break,
        }
    }
    TreePath {
        actions,
        subtree_visits: root.child_visits[first.index()],
    }
}

/// Most visited child at every step, ties to the lowest action.
pub fn main_path(tree: &Tree) -> TreePath {
    match ranked_children(tree, tree.root()).first() {
        Some(&(a, _)) => follow(tree, a),
        None => TreePath {
            actions: Vec::new(),
            subtree_visits: 0,
        },
    }
}

/// Starts at the second most visited root child, then follows the most
/// visited child. `None` with fewer than two visited root children.
pub fn secondary_path(tree: &Tree) -> Option<TreePath> {
    ranked_children(tree, tree.root())
        .get(1)
        .map(|&(a, _)| follow(tree, a))
}

/// One row of a reduction table. Fractions; negative means an increase.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ReductionRow {
    pub total_tree_reduction: Option<f64>,
    pub main_path_reduction: Option<f64>,
    pub main_subtree_reduction: Option<f64>,
    pub second_path_reduction: Option<f64>,
    pub second_subtree_reduction: Option<f64>,
    pub entropy_reduction: Option<f64>,
    pub tradeoff_reduction: Option<f64>,
    pub number_of_trees: usize,
}

pub const COLUMNS: [&str; 8] = [
    "total_tree_reduction",
    "main_path_reduction",
    "main_subtree_reduction",
    "second_path_reduction",
    "second_subtree_reduction",
    "entropy_reduction",
    "tradeoff_reduction",
    "number_of_trees",
];

impl ReductionRow {
    pub fn values(&self) -> [Option<f64>; 7] {
        [
            self.total_tree_reduction,
            self.main_path_reduction,
            self.main_subtree_reduction,
            self.second_path_reduction,
            self.second_subtree_reduction,
            self.entropy_reduction,
            self.tradeoff_reduction,
        ]
    }

    fn from_values(v: [Option<f64>; 7], number_of_trees: usize) -> Self {
        ReductionRow {
            total_tree_reduction: v[0],
            main_path_reduction: v[1],
            main_subtree_reduction: v[2],
            second_path_reduction: v[3],
            second_subtree_reduction: v[4],
            entropy_reduction: v[5],
            tradeoff_reduction: v[6],
            number_of_trees,
        }
    }
}

/// `(original - reduced) / original`, absent for a zero original.
pub fn relative_reduction(original: f64, reduced: f64) -> Option<f64> {
    if original == 0.0 {
        None
    } else {
        Some((original - reduced) / original)
    }
}

/// Compares an original tree with a reduced one (a materialized summarized
/// view). The trade-off column is absent when the original trade-off is zero
/// up to rounding, which is the case at `beta = beta_ub`.
pub fn compare(original: &Tree, reduced: &Tree, params: &TradeOff) -> ReductionRow {
    let int = |o: u64, r: u64| relative_reduction(o as f64, r as f64);
    let (om, rm) = (main_path(original), main_path(reduced));
    let second = secondary_path(original).map(|os| match secondary_path(reduced) {
        Some(rs) => (int(os.depth() as u64, rs.depth() as u64), int(os.subtree_visits, rs.subtree_visits)),
        None => (int(os.depth() as u64, 0), int(os.subtree_visits, 0)),
    });

    let ot = tradeoff_value(original, params);
    let rt = tradeoff_value(reduced, params);
    let h = original.root_node().entropy;
    let scale = libm::fabs(h) + params.beta * params.log_alphabet * original.root_node().visits as f64;
    let tradeoff = if libm::fabs(ot) <= 1e-12 * scale.max(1.0) {
        None
    } else {
        relative_reduction(ot, rt)
    };

    ReductionRow {
        total_tree_reduction: int(original.root_node().visits, reduced.root_node().visits),
        main_path_reduction: int(om.depth() as u64, rm.depth() as u64),
        main_subtree_reduction: int(om.subtree_visits, rm.subtree_visits),
        second_path_reduction: second.and_then(|s| s.0),
        second_subtree_reduction: second.and_then(|s| s.1),
        entropy_reduction: relative_reduction(h, reduced.root_node().entropy),
        tradeoff_reduction: tradeoff,
        number_of_trees: 1,
    }
}

/// Column-wise mean over the rows where each column is present.
pub fn aggregate(rows: &[ReductionRow]) -> Result<ReductionRow, AnalyticsError> {
    if rows.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    let mut sums = [(0.0f64, 0usize); 7];
    let mut trees = 0;
    for r in rows {
        for (s, v) in sums.iter_mut().zip(r.values()) {
            if let Some(v) = v {
                s.0 += v;
                s.1 += 1;
            }
        }
        trees += r.number_of_trees;
    }
    let means = sums.map(|(s, n)| if n == 0 { None } else { Some(s / n as f64) });
    Ok(ReductionRow::from_values(means, trees))
}
