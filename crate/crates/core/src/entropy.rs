//! Entropy of the random action process spanned by a search tree.
//!
//! A node's subtree entropy is its local entropy (of the tree policy) plus the
//! policy-weighted entropies of its children. Everything is in bits.
//!
//! Besides the recursive definition and the incremental update used during
//! back-propagation, this module predicts the effect of removing child
//! subtrees: closed forms for a single removal at one node, and an exact
//! recomputation along the path to the root for arbitrary removal sets.
//!
//! Two printed closed forms are known to disagree with brute force and are
//! kept only as diagnostics: [`paper_formula_theorem1`] drops the `p_k`
//! weight on the removed child's entropy, and [`paper_formula_theorem2`]
//! relies on a decomposition that only holds for a full child removal.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::tree::{ActionId, NodeId, Tree, TreePolicy};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EntropyError {
    #[error("probability {0} outside [0, 1]")]
    Domain(f64),
    #[error("node count must be at least 1")]
    EmptyTree,
    #[error("removing the only child with probability 1 leaves a leaf")]
    SoleChild,
    #[error("node has no child for action {0}")]
    NoSuchChild(usize),
    #[error("cannot remove {removed} visits from a child whose children hold {available}")]
    TooManyVisits { removed: u64, available: u64 },
    #[error("node is no longer part of the summarized tree")]
    NodeRemoved,
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * libm::log2(p)
    } else {
        0.0
    }
}

/// `H_b(p) = -p log2 p - (1-p) log2 (1-p)`, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64, EntropyError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EntropyError::Domain(p));
    }
    Ok(-plogp(p) - plogp(1.0 - p))
}

/// Shannon entropy of a probability vector; zero entries are skipped.
pub fn shannon(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| plogp(p)).sum::<f64>()
}

/// Entropy of the node-local action distribution.
pub fn local_entropy(policy: &TreePolicy) -> f64 {
    shannon(policy.probs())
}

/// Local entropy plus policy-weighted child entropies for a node with the
/// given child slots. `child_entropy(i)` is only queried for visited slots.
///
/// This is the single arithmetic path for every stored entropy, so a
/// prediction made with it matches a later application bit for bit.
pub fn entropy_from_counts(
    counts: &[u64],
    visits: u64,
    mut child_entropy: impl FnMut(usize) -> f64,
) -> f64 {
    let policy = TreePolicy::from_counts(counts, visits);
    let mut local = 0.0;
    let mut children = 0.0;
    for (i, &p) in policy.probs().iter().enumerate() {
        if p > 0.0 {
            local += -p * libm::log2(p);
            children += p * child_entropy(i);
        }
    }
    local + children
}

/// Recomputes `node.entropy` from its child slots and the stored entropies
/// of its children (the back-propagation step).
pub fn update_entropy(tree: &mut Tree, id: NodeId) {
    let node = tree.node(id);
    let h = entropy_from_counts(&node.child_visits, node.visits, |i| {
        node.child(ActionId(i))
            .map(|c| tree.node(c).entropy)
            .unwrap_or(0.0)
    });
    tree.node_mut(id).entropy = h;
}

/// Subtree entropy by plain recursion over the finished tree. Probabilities
/// are the child visit counts divided by their sum. This is the reference
/// every incremental or closed-form computation is checked against.
pub fn subtree_entropy_recursive(tree: &Tree, id: NodeId) -> f64 {
    let node = tree.node(id);
    let total: u64 = node.children.iter().map(|&(a, _)| slot(node, a)).sum();
    if total == 0 {
        return 0.0;
    }
    let mut local = 0.0;
    let mut below = 0.0;
    for &(a, c) in &node.children {
        let count = slot(node, a);
        if count == 0 {
            continue;
        }
        let p = count as f64 / total as f64;
        local -= p * libm::log2(p);
        below += p * subtree_entropy_recursive(tree, c);
    }
    local + below
}

fn slot(node: &crate::tree::Node, a: ActionId) -> u64 {
    node.child_visits.get(a.0).copied().unwrap_or(0)
}

/// The recursive reference entropy of every node at once, indexed by
/// `NodeId::index`.
pub fn all_subtree_entropies(tree: &Tree) -> Vec<f64> {
    let mut out = vec![0.0; tree.len()];
    for id in tree.postorder(tree.root()) {
        let node = tree.node(id);
        let total: u64 = node.children.iter().map(|&(a, _)| slot(node, a)).sum();
        if total == 0 {
            continue;
        }
        let mut h = 0.0;
        for &(a, c) in &node.children {
            let count = slot(node, a);
            if count == 0 {
                continue;
            }
            let p = count as f64 / total as f64;
            h += -p * libm::log2(p) + p * out[c.index()];
        }
        out[id.index()] = h;
    }
    out
}

/// Lower bound on the edge depth of a tree with `nodes` nodes whose nodes
/// have at most `branching` children.
///
/// A complete `b`-ary tree of edge depth `l` holds `(b^(l+1) - 1)/(b - 1)`
/// nodes, so `l >= log_b(N (b - 1) + 1) - 1`. A single node gives 0 and a
/// complete tree gives its depth exactly. With `branching == 1` the tree is a
/// chain and the bound is `N - 1`.
pub fn depth_lower_bound(nodes: u64, branching: u32) -> Result<f64, EntropyError> {
    if nodes < 1 {
        return Err(EntropyError::EmptyTree);
    }
    if branching <= 1 {
        return Ok((nodes - 1) as f64);
    }
    let b = branching as f64;
    let x = nodes as f64 * (b - 1.0) + 1.0;
    Ok(libm::log2(x) / libm::log2(b) - 1.0)
}

/// Entropy, depth and per-step entropy bounds of one subtree.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    pub entropy: f64,
    pub depth: u32,
    pub depth_lb: f64,
    pub per_step_lower: f64,
    pub per_step_upper: f64,
    pub alphabet_used: u32,
    pub nodes: u64,
}

fn report(entropy: f64, depth: u32, nodes: u64, branching: u32) -> EntropyReport {
    if depth == 0 {
        return EntropyReport {
            entropy,
            depth,
            depth_lb: 0.0,
            per_step_lower: 0.0,
            per_step_upper: 0.0,
            alphabet_used: branching,
            nodes,
        };
    }
    // depth >= depth_lb holds exactly; clamp away rounding in the log ratio.
    let depth_lb = depth_lower_bound(nodes, branching)
        .unwrap_or(0.0)
        .min(depth as f64);
    let lower = entropy / depth as f64;
    let upper = if depth_lb > 0.0 { entropy / depth_lb } else { lower };
    EntropyReport {
        entropy,
        depth,
        depth_lb,
        per_step_lower: lower,
        per_step_upper: upper.max(lower),
        alphabet_used: branching,
        nodes,
    }
}

/// Per-step entropy bounds of the subtree at `id`, using its stored entropy,
/// depth and max branching and its exact node count.
pub fn per_step_bounds(tree: &Tree, id: NodeId) -> EntropyReport {
    let node = tree.node(id);
    report(
        node.entropy,
        node.depth,
        tree.subtree_size(id) as u64,
        node.max_branching,
    )
}

/// [`per_step_bounds`] for every node, indexed by `NodeId::index`.
pub fn all_per_step_bounds(tree: &Tree) -> Vec<EntropyReport> {
    let mut sizes = vec![1u64; tree.len()];
    for id in tree.postorder(tree.root()) {
        let s: u64 = tree
            .node(id)
            .children
            .iter()
            .map(|&(_, c)| sizes[c.index()])
            .sum();
        sizes[id.index()] += s;
    }
    tree.ids()
        .map(|id| {
            let n = tree.node(id);
            report(n.entropy, n.depth, sizes[id.index()], n.max_branching)
        })
        .collect()
}

/// Local entropy after deleting entry `k` and renormalizing the rest:
/// `(H(p) - H_b(p_k)) / (1 - p_k)`.
///
/// `p_k == 0` leaves the distribution unchanged. `p_k == 1` is rejected with
/// [`EntropyError::SoleChild`]: the node becomes a leaf.
pub fn local_entropy_after_full_removal(
    policy: &TreePolicy,
    k: ActionId,
) -> Result<f64, EntropyError> {
    let pk = policy.get(k);
    let h = local_entropy(policy);
    if pk <= 0.0 {
        return Ok(h);
    }
    if pk >= 1.0 {
        return Err(EntropyError::SoleChild);
    }
    Ok((h - binary_entropy(pk)?) / (1.0 - pk))
}

/// Subtree entropy of a node after removing child `k`, from the node's
/// entropy `h`, the removal probability `p_k` and the child's entropy `h_k`:
/// `(h - H_b(p_k) - p_k h_k) / (1 - p_k)`. Returns 0 when `p_k == 1`.
pub fn entropy_after_child_removal(h: f64, p_k: f64, h_k: f64) -> Result<f64, EntropyError> {
    if p_k >= 1.0 {
        return Ok(0.0);
    }
    Ok((h - binary_entropy(p_k)? - p_k * h_k) / (1.0 - p_k))
}

/// [`entropy_after_child_removal`] applied to a node of `tree`.
pub fn node_entropy_after_child_removal(
    tree: &Tree,
    id: NodeId,
    k: ActionId,
) -> Result<f64, EntropyError> {
    let node = tree.node(id);
    let child = node.child(k).ok_or(EntropyError::NoSuchChild(k.0))?;
    let p_k = node.tree_policy().get(k);
    entropy_after_child_removal(node.entropy, p_k, tree.node(child).entropy)
}

/// The single-child removal formula exactly as printed:
/// `h + (p_k h - H_b(p_k) - h_k) / (1 - p_k)`. Diagnostic only.
pub fn paper_formula_theorem1(h: f64, p_k: f64, h_k: f64) -> f64 {
    let hb = binary_entropy(p_k.clamp(0.0, 1.0)).unwrap_or(0.0);
    h + (p_k * h - hb - h_k) / (1.0 - p_k)
}

/// The path-propagation formula exactly as printed:
/// `h + (p_hat h - H_b(p_hat) + (p_l - p_hat)(h_l_new - h_l)) / (1 - p_hat)`.
/// Diagnostic only; see [`propagate_removal_exact`] for the normative route.
pub fn paper_formula_theorem2(h: f64, p_l: f64, p_hat: f64, h_l: f64, h_l_new: f64) -> f64 {
    let hb = binary_entropy(p_hat.clamp(0.0, 1.0)).unwrap_or(0.0);
    h + (p_hat * h - hb + (p_l - p_hat) * (h_l_new - h_l)) / (1.0 - p_hat)
}

/// How a descendant change rescales a parent's distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct RenormParameter {
    /// Effective probability mass removed from the parent's slot `l`.
    pub p_hat: f64,
    /// Original probability of slot `l` at the parent.
    pub p_ell: f64,
    /// Fraction of the child's own child-visits that was removed.
    pub p_tilde: f64,
    pub removed_visits: u64,
}

impl RenormParameter {
    /// New probability of slot `l` after the change: `(p_l - p_hat)/(1 - p_hat)`.
    pub fn new_ell_probability(&self) -> f64 {
        (self.p_ell - self.p_hat) / (1.0 - self.p_hat)
    }

    /// Factor applied to every sibling probability: `1/(1 - p_hat)`.
    pub fn sibling_scale(&self) -> f64 {
        1.0 / (1.0 - self.p_hat)
    }
}

/// `p_hat = p_tilde (p_l - 1/N_p)` for removing `removed_visits` of the
/// `N` child-visits held below child `ell` of `parent`.
pub fn renorm_parameter(
    tree: &Tree,
    parent: NodeId,
    ell: ActionId,
    removed_visits: u64,
) -> Result<RenormParameter, EntropyError> {
    let p = tree.node(parent);
    let child = p.child(ell).ok_or(EntropyError::NoSuchChild(ell.0))?;
    let available = tree.node(child).child_visit_sum();
    if removed_visits > available {
        return Err(EntropyError::TooManyVisits {
            removed: removed_visits,
            available,
        });
    }
    let n_p = p.child_visit_sum() as f64;
    let p_ell = p.child_visits[ell.0] as f64 / n_p;
    let p_tilde = if available == 0 {
        0.0
    } else {
        removed_visits as f64 / available as f64
    };
    Ok(RenormParameter {
        p_hat: p_tilde * (p_ell - 1.0 / n_p),
        p_ell,
        p_tilde,
        removed_visits,
    })
}

/// New summarized statistics of one node on a removal path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathUpdate {
    pub node: NodeId,
    pub visits: u64,
    pub child_visits: Vec<u64>,
    pub entropy: f64,
    pub depth: u32,
    pub nodes: u64,
}

/// Effect of removing a set of children at one node, computed exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct RemovalPrediction {
    /// The modified node first, then each ancestor up to the root.
    pub updates: Vec<PathUpdate>,
    pub removed: Vec<(ActionId, NodeId)>,
    pub removed_visits: u64,
    pub removed_nodes: u64,
    pub root_entropy: f64,
    pub root_visits: u64,
    pub root_nodes: u64,
}

/// Predicts the summarized tree after removing the children `removed` of
/// `node`, without mutating anything.
///
/// The modified node's entropy is recomputed over its surviving counts; each
/// ancestor then gets its path slot replaced by the child's new visit count
/// and its entropy recomputed from the stored sibling entropies and the new
/// path-child entropy. Cost is `O(|A| * depth)`. Reads the summarized fields,
/// so it also works on partially reduced trees. A node left without children
/// becomes a leaf with one visit and zero entropy.
pub fn propagate_removal_exact(
    tree: &Tree,
    node: NodeId,
    removed: &[ActionId],
) -> Result<RemovalPrediction, EntropyError> {
    if tree.is_removed(node) {
        return Err(EntropyError::NodeRemoved);
    }
    let n = tree.node(node);
    let mut gone = Vec::with_capacity(removed.len());
    for &a in removed {
        match n.child(a) {
            Some(c) if !tree.is_removed(c) => {
                if !gone.iter().any(|&(b, _)| b == a) {
                    gone.push((a, c));
                }
            }
            _ => return Err(EntropyError::NoSuchChild(a.0)),
        }
    }
    gone.sort();
    let root = tree.root_node();
    if gone.is_empty() {
        return Ok(RemovalPrediction {
            updates: Vec::new(),
            removed: gone,
            removed_visits: 0,
            removed_nodes: 0,
            root_entropy: root.summarized.entropy,
            root_visits: root.summarized.visits,
            root_nodes: root.summarized.nodes,
        });
    }

    let removed_visits: u64 = gone
        .iter()
        .map(|&(a, _)| n.summarized.child_visits[a.0])
        .sum();
    let removed_nodes: u64 = gone.iter().map(|&(_, c)| tree.node(c).summarized.nodes).sum();

    let mut counts = n.summarized.child_visits.clone();
    for &(a, _) in &gone {
        counts[a.0] = 0;
    }
    let kept: Vec<(ActionId, NodeId)> = tree
        .surviving_children(node)
        .filter(|&(a, _)| counts[a.0] > 0)
        .collect();
    let (visits, entropy, depth) = if kept.is_empty() {
        (1, 0.0, 0)
    } else {
        let visits = counts.iter().sum::<u64>() + 1;
        let h = entropy_from_counts(&counts, visits, |i| {
            n.child(ActionId(i))
                .map(|c| tree.node(c).summarized.entropy)
                .unwrap_or(0.0)
        });
        let d = kept
            .iter()
            .map(|&(_, c)| tree.node(c).summarized.depth + 1)
            .max()
            .unwrap_or(0);
        (visits, h, d)
    };
    let mut updates = vec![PathUpdate {
        node,
        visits,
        child_visits: counts,
        entropy,
        depth,
        nodes: n.summarized.nodes - removed_nodes,
    }];

    let mut cur = node;
    while let Some(parent) = tree.node(cur).parent() {
        let below = updates.last().expect("non-empty");
        let action = tree.node(cur).action.expect("non-root has an action");
        let p = tree.node(parent);
        let mut counts = p.summarized.child_visits.clone();
        counts[action.0] = below.visits;
        let visits = counts.iter().sum::<u64>() + 1;
        let below_entropy = below.entropy;
        let h = entropy_from_counts(&counts, visits, |i| {
            if i == action.0 {
                below_entropy
            } else {
                p.child(ActionId(i))
                    .map(|c| tree.node(c).summarized.entropy)
                    .unwrap_or(0.0)
            }
        });
        let mut depth = below.depth + 1;
        for (a, c) in tree.surviving_children(parent) {
            if a != action {
                depth = depth.max(tree.node(c).summarized.depth + 1);
            }
        }
        let nodes = p.summarized.nodes - removed_nodes;
        updates.push(PathUpdate {
            node: parent,
            visits,
            child_visits: counts,
            entropy: h,
            depth,
            nodes,
        });
        cur = parent;
    }
    let top = updates.last().expect("non-empty");
    Ok(RemovalPrediction {
        root_entropy: top.entropy,
        root_visits: top.visits,
        root_nodes: top.nodes,
        removed: gone,
        removed_visits,
        removed_nodes,
        updates,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::tree::{ActionAlphabet, Tree};

    const HB_QUARTER: f64 = 0.811_278_124_459_132_9;
    const H_FIVE_THREE: f64 = 0.954_434_002_924_965;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Leaves are listed as (path, visits); internal counts are derived.
    pub(crate) fn build(alphabet: usize, leaves: &[(&[usize], u64)]) -> Tree {
        let mut t = Tree::new(ActionAlphabet::new(alphabet).unwrap());
        for (path, visits) in leaves {
            let mut cur = t.root();
            for &a in path.iter() {
                cur = match t.node(cur).child(ActionId(a)) {
                    Some(c) => c,
                    None => t.add_child(cur, ActionId(a)).unwrap(),
                };
            }
            t.node_mut(cur).visits = *visits;
            if *visits > 1 {
                t.node_mut(cur).terminal = true;
            }
        }
        t.rebuild_statistics();
        t
    }

    /// Root counts (5, 3); left child over leaves (2, 2), right over (1, 1).
    pub(crate) fn worked_tree() -> Tree {
        build(
            2,
            &[
                (&[0, 0], 2),
                (&[0, 1], 2),
                (&[1, 0], 1),
                (&[1, 1], 1),
            ],
        )
    }

    #[test]
    fn binary_entropy_examples() {
        close(binary_entropy(0.5).unwrap(), 1.0, 0.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        close(binary_entropy(0.25).unwrap(), HB_QUARTER, 1e-15);
        assert_eq!(binary_entropy(1.5), Err(EntropyError::Domain(1.5)));
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn local_entropy_examples() {
        close(local_entropy(&TreePolicy::from_probs(vec![0.5, 0.5])), 1.0, 0.0);
        assert_eq!(local_entropy(&TreePolicy::from_probs(vec![1.0, 0.0, 0.0])), 0.0);
        close(
            local_entropy(&TreePolicy::from_probs(vec![0.625, 0.375])),
            H_FIVE_THREE,
            1e-15,
        );
    }

    #[test]
    fn recursive_entropy_examples() {
        let leaf = build(2, &[(&[], 1)]);
        assert_eq!(subtree_entropy_recursive(&leaf, leaf.root()), 0.0);
        let pair = build(2, &[(&[0], 1), (&[1], 1)]);
        close(subtree_entropy_recursive(&pair, pair.root()), 1.0, 1e-15);
        let t = worked_tree();
        assert_eq!(t.root_node().child_visits, vec![5, 3]);
        close(
            subtree_entropy_recursive(&t, t.root()),
            H_FIVE_THREE + 1.0,
            1e-12,
        );
        let all = all_subtree_entropies(&t);
        close(all[0], H_FIVE_THREE + 1.0, 1e-12);
    }

    #[test]
    fn update_entropy_examples() {
        let t = build(2, &[(&[0], 3), (&[1], 1)]);
        close(t.root_node().entropy, HB_QUARTER, 1e-15);

        let t = worked_tree();
        for id in t.ids() {
            close(t.node(id).entropy, subtree_entropy_recursive(&t, id), 1e-12);
        }

        // A single visited child passes its entropy through unchanged.
        let t = build(3, &[(&[1, 0], 1), (&[1, 2], 1)]);
        let child = t.find(&[ActionId(1)]).unwrap();
        close(t.root_node().entropy, t.node(child).entropy, 0.0);
    }

    #[test]
    fn depth_lower_bound_examples() {
        assert_eq!(depth_lower_bound(1, 2).unwrap(), 0.0);
        close(depth_lower_bound(3, 2).unwrap(), 1.0, 1e-15);
        assert_eq!(depth_lower_bound(4, 1).unwrap(), 3.0);
        close(depth_lower_bound(7, 2).unwrap(), 2.0, 1e-15);
        close(depth_lower_bound(13, 3).unwrap(), 2.0, 1e-12);
        assert_eq!(depth_lower_bound(0, 2), Err(EntropyError::EmptyTree));
    }

    #[test]
    fn per_step_bounds_examples() {
        let leaf = build(2, &[(&[], 1)]);
        let r = per_step_bounds(&leaf, leaf.root());
        assert_eq!((r.per_step_lower, r.per_step_upper), (0.0, 0.0));

        let full = build(
            2,
            &[(&[0, 0], 1), (&[0, 1], 1), (&[1, 0], 1), (&[1, 1], 1)],
        );
        let r = per_step_bounds(&full, full.root());
        close(r.entropy, 2.0, 1e-15);
        assert_eq!(r.depth, 2);
        close(r.depth_lb, 2.0, 1e-15);
        close(r.per_step_lower, 1.0, 1e-12);
        close(r.per_step_upper, 1.0, 1e-12);

        let chain = build(3, &[(&[2, 0, 1, 1], 1)]);
        let r = per_step_bounds(&chain, chain.root());
        assert_eq!(r.depth, 4);
        assert_eq!(r.depth_lb, 4.0);
        assert_eq!((r.per_step_lower, r.per_step_upper), (0.0, 0.0));

        for rep in all_per_step_bounds(&worked_tree()) {
            assert!(rep.per_step_lower <= rep.per_step_upper);
        }
    }

    #[test]
    fn corollary_examples() {
        let p = TreePolicy::from_probs(vec![0.5, 0.25, 0.25]);
        let got = local_entropy_after_full_removal(&p, ActionId(1)).unwrap();
        close(got, 0.918_295_834_054_489_5, 1e-15);
        close(got, shannon(&[2.0 / 3.0, 1.0 / 3.0]), 1e-15);

        let p = TreePolicy::from_probs(vec![0.5, 0.5]);
        close(local_entropy_after_full_removal(&p, ActionId(0)).unwrap(), 0.0, 1e-15);

        let p = TreePolicy::from_probs(vec![0.25; 4]);
        for k in 0..4 {
            let got = local_entropy_after_full_removal(&p, ActionId(k)).unwrap();
            close(got, libm::log2(3.0), 1e-15);
        }

        let p = TreePolicy::from_probs(vec![1.0, 0.0]);
        assert_eq!(
            local_entropy_after_full_removal(&p, ActionId(0)),
            Err(EntropyError::SoleChild)
        );
        close(local_entropy_after_full_removal(&p, ActionId(1)).unwrap(), 0.0, 0.0);
    }

    #[test]
    fn single_child_removal_examples() {
        // Counts (2,1,1), child entropies (1,0,0): H = 1.5 + 0.5 = 2.
        let h = 2.0;
        close(entropy_after_child_removal(h, 0.5, 1.0).unwrap(), 1.0, 1e-15);
        // Direct rebuild: counts (1,1) over two leaves.
        close(shannon(&[0.5, 0.5]), 1.0, 0.0);
        close(paper_formula_theorem1(h, 0.5, 1.0), 0.0, 1e-15);

        let t = build(2, &[(&[0], 3), (&[1], 1)]);
        close(
            node_entropy_after_child_removal(&t, t.root(), ActionId(1)).unwrap(),
            0.0,
            1e-15,
        );
        assert_eq!(entropy_after_child_removal(1.0, 1.0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn renorm_parameter_examples() {
        let t = worked_tree();
        let r = renorm_parameter(&t, t.root(), ActionId(0), 2).unwrap();
        close(r.p_hat, 0.25, 1e-15);
        close(r.new_ell_probability(), 0.5, 1e-15);
        close(r.sibling_scale() * 0.375, 0.5, 1e-15);

        let r = renorm_parameter(&t, t.root(), ActionId(0), 0).unwrap();
        assert_eq!(r.p_hat, 0.0);

        let r = renorm_parameter(&t, t.root(), ActionId(0), 4).unwrap();
        assert_eq!(r.p_tilde, 1.0);
        close(r.p_hat, 0.625 - 1.0 / 8.0, 1e-15);

        assert!(matches!(
            renorm_parameter(&t, t.root(), ActionId(0), 5),
            Err(EntropyError::TooManyVisits { .. })
        ));
    }

    #[test]
    fn propagation_on_worked_tree() {
        let mut t = worked_tree();
        t.reset_summary();
        let left = t.find(&[ActionId(0)]).unwrap();
        let pred = propagate_removal_exact(&t, left, &[ActionId(0)]).unwrap();
        close(pred.root_entropy, 1.5, 1e-12);
        assert_eq!(pred.root_visits, 7);
        assert_eq!(pred.removed_visits, 2);

        let printed = paper_formula_theorem2(H_FIVE_THREE + 1.0, 0.625, 0.25, 1.0, 0.0);
        close(printed, 1.024_207_6, 1e-6);
        assert!((printed - 1.5).abs() > 0.4);

        let none = propagate_removal_exact(&t, left, &[]).unwrap();
        assert_eq!(none.root_entropy, t.root_node().entropy);
        assert!(none.updates.is_empty());

        assert_eq!(
            propagate_removal_exact(&t, left, &[ActionId(1), ActionId(0), ActionId(1)])
                .unwrap()
                .removed
                .len(),
            2
        );
        assert!(propagate_removal_exact(&t, t.root(), &[ActionId(5)]).is_err());
    }

    #[test]
    fn removing_every_child_leaves_single_visit_leaf() {
        let mut t = worked_tree();
        t.reset_summary();
        let left = t.find(&[ActionId(0)]).unwrap();
        let pred = propagate_removal_exact(&t, left, &[ActionId(0), ActionId(1)]).unwrap();
        assert_eq!(pred.updates[0].visits, 1);
        assert_eq!(pred.updates[0].entropy, 0.0);
        assert_eq!(pred.root_visits, 5);
        // Root counts (1, 3), right child entropy 1.
        close(
            pred.root_entropy,
            shannon(&[0.25, 0.75]) + 0.75,
            1e-12,
        );
    }
}
