//! Tree reduction by subtree removal under the entropy/size trade-off.
//!
//! The objective is `H(root) - beta * log2|A| * size`, where size is either
//! the root visit count or the exact node count. Candidates are sets of
//! children removed at one node; a node's originally most visited child may
//! only go if all of its children go. Every gain is measured on the whole
//! tree: the trade-off after the removal minus the trade-off before it.
//!
//! Reductions write only the summarized mirror of the tree (see
//! [`Tree::reset_summary`]); [`Tree::summarized_view`] materializes the result.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::entropy::{propagate_removal_exact, EntropyError, RemovalPrediction};
use crate::tree::{ActionAlphabet, ActionId, NodeId, Tree};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ReductionError {
    #[error("beta factor {0} outside [0, 1]")]
    BetaFactor(f64),
    #[error("candidate node was removed by an earlier reduction")]
    Skipped,
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error("unknown reduction algorithm {0:?}")]
    UnknownAlgorithm(alloc::string::String),
    #[error("unknown size measure {0:?}")]
    UnknownSizeMeasure(alloc::string::String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum SizeMeasure {
    /// Root visit count, the usual stand-in for the node count.
    #[default]
    Visits,
    /// Exact node count.
    Nodes,
}

impl fmt::Display for SizeMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeMeasure::Visits => "visits",
            SizeMeasure::Nodes => "nodes",
        })
    }
}

impl FromStr for SizeMeasure {
    type Err = ReductionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "visits" => Ok(SizeMeasure::Visits),
            "nodes" => Ok(SizeMeasure::Nodes),
            other => Err(ReductionError::UnknownSizeMeasure(other.into())),
        }
    }
}

/// Trade-off criterion with a resolved `beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct TradeOff {
    pub beta: f64,
    pub log_alphabet: f64,
    pub size: SizeMeasure,
}

impl TradeOff {
    pub fn new(beta: f64, alphabet: &ActionAlphabet, size: SizeMeasure) -> Self {
        TradeOff {
            beta,
            log_alphabet: alphabet.log2_size(),
            size,
        }
    }

    /// `beta = factor * beta_ub(tree)`.
    pub fn resolve(tree: &Tree, beta_factor: f64, size: SizeMeasure) -> Result<Self, ReductionError> {
        if !(0.0..=1.0).contains(&beta_factor) {
            return Err(ReductionError::BetaFactor(beta_factor));
        }
        Ok(Self::new(
            beta_factor * beta_ub(tree, size),
            tree.alphabet(),
            size,
        ))
    }

    pub fn value(&self, entropy: f64, size: u64) -> f64 {
        entropy - self.beta * self.log_alphabet * size as f64
    }
}

fn original_size(tree: &Tree, size: SizeMeasure) -> u64 {
    match size {
        SizeMeasure::Visits => tree.root_node().visits,
        SizeMeasure::Nodes => tree.node_count() as u64,
    }
}

fn summarized_size(tree: &Tree, size: SizeMeasure) -> u64 {
    let s = &tree.root_node().summarized;
    match size {
        SizeMeasure::Visits => s.visits,
        SizeMeasure::Nodes => s.nodes,
    }
}

/// Trade-off of the tree's original statistics.
pub fn tradeoff_value(tree: &Tree, params: &TradeOff) -> f64 {
    params.value(tree.root_node().entropy, original_size(tree, params.size))
}

/// Trade-off of the tree's summarized (reduced) statistics.
pub fn summarized_tradeoff_value(tree: &Tree, params: &TradeOff) -> f64 {
    params.value(
        tree.root_node().summarized.entropy,
        summarized_size(tree, params.size),
    )
}

/// The `beta` at which the trade-off of the original tree is exactly zero:
/// `H(root) / (log2|A| * size)`. Zero for zero-entropy trees.
pub fn beta_ub(tree: &Tree, size: SizeMeasure) -> f64 {
    let h = tree.root_node().entropy;
    if h <= 0.0 {
        return 0.0;
    }
    h / (tree.alphabet().log2_size() * original_size(tree, size) as f64)
}

/// A proposed removal of some children of one node.
#[derive(Clone, Debug, PartialEq)]
pub struct RemovalCandidate {
    pub node: NodeId,
    pub node_path: Vec<ActionId>,
    pub removed_children: Vec<ActionId>,
    pub removed_visits: u64,
    pub predicted_root_entropy: f64,
    pub predicted_gain: f64,
    /// Root visits left before this candidate, assuming all earlier list
    /// entries were applied. Filled by [`build_plist`].
    pub remaining_visits: u64,
}

/// Exact prediction of removing `removed` at `node` and its trade-off gain
/// against the current summarized tree.
pub fn evaluate_removal(
    tree: &Tree,
    node: NodeId,
    removed: &[ActionId],
    params: &TradeOff,
) -> Result<(RemovalPrediction, f64), ReductionError> {
    let pred = propagate_removal_exact(tree, node, removed)?;
    let size_after = match params.size {
        SizeMeasure::Visits => pred.root_visits,
        SizeMeasure::Nodes => pred.root_nodes,
    };
    let gain = params.value(pred.root_entropy, size_after) - summarized_tradeoff_value(tree, params);
    Ok((pred, gain))
}

fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * libm::log2(x)
    } else {
        0.0
    }
}

/// Per-ancestor sums that let the root entropy be re-derived in `O(depth)`
/// when only one node's visit count and entropy change.
struct PathContext {
    /// (sum of other slots, sum of c log2 c over them, sum of c H over them).
    levels: Vec<(f64, f64, f64)>,
}

impl PathContext {
    fn new(tree: &Tree, node: NodeId) -> Self {
        let mut levels = Vec::new();
        let mut cur = node;
        while let Some(parent) = tree.node(cur).parent() {
            let action = tree.node(cur).action.expect("non-root");
            let (mut s, mut k, mut w) = (0.0, 0.0, 0.0);
            for (a, c) in tree.surviving_children(parent) {
                if a == action {
                    continue;
                }
                let n = tree.node(parent).summarized.child_visits[a.index()] as f64;
                s += n;
                k += xlog2x(n);
                w += n * tree.node(c).summarized.entropy;
            }
            levels.push((s, k, w));
            cur = parent;
        }
        PathContext { levels }
    }

    /// Root (visits, entropy) when the node takes `visits` and `entropy`.
    fn root(&self, mut visits: u64, mut entropy: f64) -> (u64, f64) {
        for &(s, k, w) in &self.levels {
            let c = visits as f64;
            let total = s + c;
            entropy = libm::log2(total) - (k + xlog2x(c)) / total + (w + c * entropy) / total;
            visits = s as u64 + visits + 1;
        }
        (visits, entropy)
    }
}

fn better(a: &(f64, u64, Vec<ActionId>), b: &(f64, u64, Vec<ActionId>)) -> bool {
    match a.0.partial_cmp(&b.0) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Less) => false,
        _ => match a.1.cmp(&b.1) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a.2 < b.2,
        },
    }
}

/// The best legal set of children to remove at `node`, if any improves the
/// trade-off of the current summarized tree.
///
/// Legal sets are the non-empty subsets of the surviving children that keep
/// the originally most visited child, plus the set of all children. Ties go
/// to fewer removed visits, then to the lexicographically smallest set.
pub fn best_subset(tree: &Tree, node: NodeId, params: &TradeOff) -> Option<RemovalCandidate> {
    if tree.is_removed(node) {
        return None;
    }
    let n = tree.node(node);
    let kids: Vec<(ActionId, NodeId)> = tree.surviving_children(node).collect();
    if kids.is_empty() {
        return None;
    }
    let main = n.most_visited();
    let counts = &n.summarized.child_visits;
    let others: Vec<(ActionId, NodeId)> = kids.iter().copied().filter(|&(a, _)| Some(a) != main).collect();

    let ctx = PathContext::new(tree, node);
    let before = summarized_tradeoff_value(tree, params);
    let root = &tree.root_node().summarized;
    let size_unit = |visits: u64, nodes: u64| match params.size {
        SizeMeasure::Visits => visits,
        SizeMeasure::Nodes => nodes,
    };

    let score = |removed: &[(ActionId, NodeId)]| -> (f64, u64, Vec<ActionId>) {
        let (mut s, mut k, mut w) = (0.0, 0.0, 0.0);
        let mut kept = 0;
        let mut removed_visits = 0;
        let mut removed_nodes = 0;
        for &(a, c) in &kids {
            let cnt = counts[a.index()];
            if removed.iter().any(|&(r, _)| r == a) {
                removed_visits += cnt;
                removed_nodes += tree.node(c).summarized.nodes;
                continue;
            }
            let x = cnt as f64;
            s += x;
            k += xlog2x(x);
            w += x * tree.node(c).summarized.entropy;
            kept += 1;
        }
        let (visits, entropy) = if kept == 0 {
            (1, 0.0)
        } else {
            (s as u64 + 1, libm::log2(s) - k / s + w / s)
        };
        let (root_visits, root_entropy) = ctx.root(visits, entropy);
        let size = size_unit(root_visits, root.nodes - removed_nodes);
        debug_assert_eq!(root_visits, root.visits - removed_visits);
        let gain = params.value(root_entropy, size) - before;
        (gain, removed_visits, removed.iter().map(|&(a, _)| a).collect())
    };

    let mut best: Option<(f64, u64, Vec<ActionId>)> = None;
    let mut consider = |cand: (f64, u64, Vec<ActionId>)| {
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    };
    let m = others.len();
    let mut subset = Vec::with_capacity(m);
    for mask in 1u64..(1u64 << m) {
        subset.clear();
        subset.extend((0..m).filter(|i| mask & (1 << i) != 0).map(|i| others[i]));
        consider(score(&subset));
    }
    if others.len() < kids.len() || m == 0 {
        consider(score(&kids));
    }

    let (gain, _, set) = best?;
    if !(gain > 0.0) {
        return None;
    }
    // Confirm on the exact path so the gate matches what application stores.
    let (pred, gain) = evaluate_removal(tree, node, &set, params).ok()?;
    if !(gain > 0.0) {
        return None;
    }
    Some(RemovalCandidate {
        node,
        node_path: tree.path(node),
        removed_children: set,
        removed_visits: pred.removed_visits,
        predicted_root_entropy: pred.root_entropy,
        predicted_gain: gain,
        remaining_visits: 0,
    })
}

/// Writes a prediction into the summarized mirror and marks the removed
/// subtrees.
pub fn apply_prediction(tree: &mut Tree, pred: &RemovalPrediction) {
    for u in &pred.updates {
        let s = &mut tree.node_mut(u.node).summarized;
        s.visits = u.visits;
        s.child_visits.clone_from(&u.child_visits);
        s.entropy = u.entropy;
        s.depth = u.depth;
        s.nodes = u.nodes;
    }
    for &(_, child) in &pred.removed {
        let mut stack = alloc::vec![child];
        while let Some(id) = stack.pop() {
            if tree.is_removed(id) {
                continue;
            }
            tree.node_mut(id).summarized.removed = true;
            stack.extend(tree.node(id).children.iter().map(|&(_, c)| c));
        }
    }
}

/// Removes the candidate's children from the current summarized tree,
/// recomputing the removal against the current state first. Fails with
/// [`ReductionError::Skipped`] when the node is already gone.
pub fn apply_removal(tree: &mut Tree, candidate: &RemovalCandidate) -> Result<RemovalPrediction, ReductionError> {
    if tree.is_removed(candidate.node) {
        return Err(ReductionError::Skipped);
    }
    let pred = propagate_removal_exact(tree, candidate.node, &candidate.removed_children)?;
    apply_prediction(tree, &pred);
    Ok(pred)
}

/// Removal candidates sorted by decreasing predicted gain.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PriorityList {
    pub entries: Vec<RemovalCandidate>,
    pub root_visits: u64,
}

impl PriorityList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Root visits remaining before each entry if every earlier entry is
    /// applied as predicted.
    pub fn calculate_remaining_visits(&mut self) {
        let mut remaining = self.root_visits;
        for e in &mut self.entries {
            e.remaining_visits = remaining;
            remaining = remaining.saturating_sub(e.removed_visits);
        }
    }
}

/// First stage of the two-stage reduction: the best candidate of every node,
/// each evaluated as if it were the only removal on the current tree.
pub fn build_plist(tree: &Tree, params: &TradeOff) -> PriorityList {
    let mut entries: Vec<RemovalCandidate> = tree
        .surviving_preorder()
        .into_iter()
        .filter_map(|id| best_subset(tree, id, params))
        .collect();
    // Stable: equal gains keep pre-order.
    entries.sort_by(|a, b| {
        b.predicted_gain
            .partial_cmp(&a.predicted_gain)
            .unwrap_or(Ordering::Equal)
    });
    let mut list = PriorityList {
        entries,
        root_visits: tree.root_node().summarized.visits,
    };
    list.calculate_remaining_visits();
    list
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// One pass down the tree, applying each node's best set immediately.
    Local,
    /// Apply every list entry whose node still exists.
    TwoStageAll,
    /// Apply entries while each still improves the current tree.
    TwoStageStop,
    /// Apply every entry that still improves the current tree.
    TwoStageV2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Local,
        Algorithm::TwoStageAll,
        Algorithm::TwoStageStop,
        Algorithm::TwoStageV2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Local => "local",
            Algorithm::TwoStageAll => "two-stage-all",
            Algorithm::TwoStageStop => "two-stage-stop",
            Algorithm::TwoStageV2 => "two-stage-v2",
        }
    }

    /// Whether every applied step is gated on a strict trade-off improvement.
    pub fn is_gated(self) -> bool {
        !matches!(self, Algorithm::TwoStageAll)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ReductionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ReductionError::UnknownAlgorithm(s.into()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionOutcome {
    pub algorithm: Algorithm,
    pub params: TradeOff,
    /// Applied candidates in order, with gains measured when applied.
    pub applied: Vec<RemovalCandidate>,
    /// List entries whose node had already been removed.
    pub skipped: usize,
    /// List entries rejected by the criterion gate.
    pub rejected: usize,
    /// The tree has zero entropy; nothing was reduced.
    pub degenerate: bool,
    pub initial_tradeoff: f64,
    pub final_tradeoff: f64,
}

fn outcome(tree: &Tree, algorithm: Algorithm, params: TradeOff) -> ReductionOutcome {
    let t = summarized_tradeoff_value(tree, &params);
    ReductionOutcome {
        algorithm,
        params,
        applied: Vec::new(),
        skipped: 0,
        rejected: 0,
        degenerate: false,
        initial_tradeoff: t,
        final_tradeoff: t,
    }
}

/// One-stage greedy: walk the surviving tree in pre-order and apply each
/// node's best improving set as soon as it is found.
pub fn reduce_local(tree: &mut Tree, params: &TradeOff) -> ReductionOutcome {
    let mut out = outcome(tree, Algorithm::Local, params.clone());
    let mut stack = alloc::vec![tree.root()];
    while let Some(id) = stack.pop() {
        if let Some(mut cand) = best_subset(tree, id, params) {
            cand.remaining_visits = tree.root_node().summarized.visits;
            let pred = propagate_removal_exact(tree, id, &cand.removed_children)
                .expect("candidate built from surviving children");
            apply_prediction(tree, &pred);
            out.applied.push(cand);
        }
        let kids: Vec<_> = tree.surviving_children(id).collect();
        for &(_, c) in kids.iter().rev() {
            stack.push(c);
        }
    }
    out.final_tradeoff = summarized_tradeoff_value(tree, params);
    out
}

/// Two-stage reduction: build the priority list on the current tree, then
/// walk it applying entries according to `variant`.
pub fn reduce_two_stage(tree: &mut Tree, params: &TradeOff, variant: Algorithm) -> ReductionOutcome {
    let mut out = outcome(tree, variant, params.clone());
    let list = build_plist(tree, params);
    for cand in list.entries {
        if tree.is_removed(cand.node) {
            out.skipped += 1;
            continue;
        }
        let (pred, gain) = evaluate_removal(tree, cand.node, &cand.removed_children, params)
            .expect("node survives and its children are untouched");
        if variant.is_gated() && !(gain > 0.0) {
            out.rejected += 1;
            if variant == Algorithm::TwoStageStop {
                break;
            }
            continue;
        }
        apply_prediction(tree, &pred);
        out.applied.push(RemovalCandidate {
            predicted_gain: gain,
            predicted_root_entropy: pred.root_entropy,
            removed_visits: pred.removed_visits,
            ..cand
        });
    }
    out.final_tradeoff = summarized_tradeoff_value(tree, params);
    out
}

/// Resets the summary, resolves `beta = beta_factor * beta_ub` and runs
/// `algorithm`. Zero-entropy trees are returned untouched and flagged
/// degenerate.
pub fn reduce(
    tree: &mut Tree,
    algorithm: Algorithm,
    beta_factor: f64,
    size: SizeMeasure,
) -> Result<ReductionOutcome, ReductionError> {
    let params = TradeOff::resolve(tree, beta_factor, size)?;
    reduce_with(tree, algorithm, &params)
}

/// [`reduce`] with an explicit criterion.
pub fn reduce_with(
    tree: &mut Tree,
    algorithm: Algorithm,
    params: &TradeOff,
) -> Result<ReductionOutcome, ReductionError> {
    tree.reset_summary();
    if tree.root_node().entropy <= 0.0 {
        let mut out = outcome(tree, algorithm, params.clone());
        out.degenerate = true;
        return Ok(out);
    }
    Ok(match algorithm {
        Algorithm::Local => reduce_local(tree, params),
        v => reduce_two_stage(tree, params, v),
    })
}
