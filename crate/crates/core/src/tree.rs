//! Arena-backed search tree.
//!
//! Nodes live in a flat `Vec` and refer to each other through [`NodeId`]. The
//! root is always `NodeId(0)`. Nodes are never deleted from the arena: subtree
//! removal only touches the [`Summarized`] mirror carried by every node, so the
//! original tree and its reduced form coexist in one instance. A reduced tree
//! can be materialized as a standalone [`Tree`] with [`Tree::summarized_view`].

use alloc::borrow::Cow;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Index of an action in the tree's alphabet.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Handle of a node inside a [`Tree`] arena.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("action alphabet needs at least 2 actions, got {0}")]
    AlphabetTooSmall(usize),
    #[error("{names} action names given for an alphabet of size {size}")]
    NameCountMismatch { names: usize, size: usize },
    #[error("action {action} is outside the alphabet of size {size}")]
    ActionOutOfRange { action: usize, size: usize },
    #[error("node already has a child for action {0}")]
    DuplicateChild(usize),
}

/// The finite action set `A` shared by every node of a tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionAlphabet {
    size: usize,
    names: Option<Vec<String>>,
}

impl ActionAlphabet {
    pub fn new(size: usize) -> Result<Self, TreeError> {
        if size < 2 {
            return Err(TreeError::AlphabetTooSmall(size));
        }
        Ok(ActionAlphabet { size, names: None })
    }

    pub fn with_names(names: Vec<String>) -> Result<Self, TreeError> {
        let mut alphabet = Self::new(names.len())?;
        alphabet.names = Some(names);
        Ok(alphabet)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Label of `action`: its configured name, or its index.
    pub fn label(&self, action: ActionId) -> Cow<'_, str> {
        match self.names.as_ref().and_then(|n| n.get(action.0)) {
            Some(name) => Cow::Borrowed(name.as_str()),
            None => Cow::Owned(format!("{}", action.0)),
        }
    }

    /// `log2 |A|`, the per-node description cost of a uniform tree.
    pub fn log2_size(&self) -> f64 {
        libm::log2(self.size as f64)
    }

    pub fn contains(&self, action: ActionId) -> bool {
        action.0 < self.size
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> {
        (0..self.size).map(ActionId)
    }
}

/// Reduced-state mirror of a node's statistics.
///
/// Populated from the original fields by [`Tree::reset_summary`] and updated by
/// subtree removals. `removed` is set on every node of a removed subtree.
#[derive(Clone, Debug, PartialEq)]
pub struct Summarized {
    pub visits: u64,
    pub child_visits: Vec<u64>,
    pub entropy: f64,
    pub depth: u32,
    /// Surviving nodes in the subtree rooted here, this node included.
    pub nodes: u64,
    pub removed: bool,
}

impl Summarized {
    fn empty(alphabet: usize) -> Self {
        Summarized {
            visits: 0,
            child_visits: vec![0; alphabet],
            entropy: 0.0,
            depth: 0,
            nodes: 1,
            removed: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    parent: Option<NodeId>,
    /// Edge from the parent; `None` only at the root.
    pub action: Option<ActionId>,
    /// Immediate reward of the transition into this node.
    pub reward: f64,
    /// Last back-propagated value (overwritten on every pass).
    pub value: f64,
    /// Running sum of `reward + gamma * value` over all passes; drives mean-Q.
    pub value_sum: f64,
    pub visits: u64,
    /// Visit count of each child slot, indexed by action.
    pub child_visits: Vec<u64>,
    /// Materialized children, sorted by action.
    pub children: Vec<(ActionId, NodeId)>,
    pub terminal: bool,
    /// Subtree entropy in bits.
    pub entropy: f64,
    /// Longest edge count from this node down to a leaf.
    pub depth: u32,
    /// Largest number of used children at any node of this subtree (at least 1).
    pub max_branching: u32,
    pub summarized: Summarized,
}

impl Node {
    fn new(parent: Option<NodeId>, action: Option<ActionId>, alphabet: usize) -> Self {
        Node {
            parent,
            action,
            reward: 0.0,
            value: 0.0,
            value_sum: 0.0,
            visits: 0,
            child_visits: vec![0; alphabet],
            children: Vec::new(),
            terminal: false,
            entropy: 0.0,
            depth: 0,
            max_branching: 1,
            summarized: Summarized::empty(alphabet),
        }
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn child(&self, action: ActionId) -> Option<NodeId> {
        self.children
            .binary_search_by_key(&action, |&(a, _)| a)
            .ok()
            .map(|i| self.children[i].1)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Number of child slots with at least one visit.
    pub fn used_children(&self) -> u32 {
        self.child_visits.iter().filter(|&&c| c > 0).count() as u32
    }

    pub fn child_visit_sum(&self) -> u64 {
        self.child_visits.iter().sum()
    }

    /// Most visited child slot; ties go to the lowest action.
    pub fn most_visited(&self) -> Option<ActionId> {
        most_visited(&self.child_visits)
    }

    pub fn tree_policy(&self) -> TreePolicy {
        TreePolicy::from_counts(&self.child_visits, self.visits)
    }
}

/// Argmax over `counts` among non-zero entries, lowest index on ties.
pub fn most_visited(counts: &[u64]) -> Option<ActionId> {
    let mut best: Option<(usize, u64)> = None;
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        match best {
            Some((_, b)) if b >= c => {}
            _ => best = Some((i, c)),
        }
    }
    best.map(|(i, _)| ActionId(i))
}

/// Probability vector over the alphabet, proportional to child visit counts.
#[derive(Clone, Debug, PartialEq)]
pub struct TreePolicy(Vec<f64>);

impl TreePolicy {
    /// Normalizes `counts` the way the entropy back-propagation does: divide
    /// by the node's visits, rescale by the max, then renormalize to sum 1.
    /// All-zero counts give the all-zero vector.
    pub fn from_counts(counts: &[u64], visits: u64) -> Self {
        let denom = if visits > 0 { visits as f64 } else { 1.0 };
        let mut probs: Vec<f64> = counts.iter().map(|&c| c as f64 / denom).collect();
        let sum: f64 = probs.iter().sum();
        if sum > 0.0 {
            let max = probs.iter().cloned().fold(0.0, f64::max);
            probs.iter_mut().for_each(|p| *p /= max);
            let sum: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        TreePolicy(probs)
    }

    pub fn from_probs(probs: Vec<f64>) -> Self {
        TreePolicy(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, action: ActionId) -> f64 {
        self.0.get(action.0).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&p| p == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    /// `visits != sum(child_visits) + 1` at a node with children.
    CountRelation { visits: u64, child_sum: u64 },
    /// `parent.child_visits[action] != node.visits`.
    ParentSlotMismatch { slot: u64, visits: u64 },
    ActionOutOfAlphabet { action: usize, size: usize },
    ChildVisitsLength { len: usize, size: usize },
    /// A slot has visits but no child node, or a child node has a zero slot.
    SlotChildMismatch { action: usize, slot: u64 },
    UnvisitedNode,
    NegativeEntropy(f64),
    LeafEntropyNonZero(f64),
    DepthMismatch { stored: u32, actual: u32 },
    MaxBranchingMismatch { stored: u32, actual: u32 },
}

/// A broken invariant at the node reached by `path` from the root.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub path: Vec<ActionId>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for a in &self.path {
            write!(f, "/{}", a.0)?;
        }
        f.write_str(": ")?;
        match &self.kind {
            ViolationKind::CountRelation { visits, child_sum } => write!(
                f,
                "visits {visits} != child visit sum {child_sum} + 1"
            ),
            ViolationKind::ParentSlotMismatch { slot, visits } => write!(
                f,
                "parent records {slot} visits for this child, node has {visits}"
            ),
            ViolationKind::ActionOutOfAlphabet { action, size } => {
                write!(f, "action {action} outside alphabet of size {size}")
            }
            ViolationKind::ChildVisitsLength { len, size } => {
                write!(f, "child visit vector has length {len}, alphabet size {size}")
            }
            ViolationKind::SlotChildMismatch { action, slot } => write!(
                f,
                "child slot {action} has {slot} visits but child presence disagrees"
            ),
            ViolationKind::UnvisitedNode => f.write_str("non-root node with zero visits"),
            ViolationKind::NegativeEntropy(h) => write!(f, "entropy {h} is negative or not finite"),
            ViolationKind::LeafEntropyNonZero(h) => write!(f, "leaf entropy {h} != 0"),
            ViolationKind::DepthMismatch { stored, actual } => {
                write!(f, "depth {stored} != actual subtree depth {actual}")
            }
            ViolationKind::MaxBranchingMismatch { stored, actual } => {
                write!(f, "max branching {stored} != actual {actual}")
            }
        }
    }
}

/// Equality is structural: two trees are equal when their alphabets match
/// and nodes reached by the same action paths carry the same statistics,
/// whatever order the nodes were allocated in.
#[derive(Clone, Debug)]
pub struct Tree {
    alphabet: ActionAlphabet,
    nodes: Vec<Node>,
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        fn same(a: &Tree, x: NodeId, b: &Tree, y: NodeId) -> bool {
            let (m, n) = (&a.nodes[x.0], &b.nodes[y.0]);
            m.action == n.action
                && m.reward == n.reward
                && m.value == n.value
                && m.value_sum == n.value_sum
                && m.visits == n.visits
                && m.child_visits == n.child_visits
                && m.terminal == n.terminal
                && m.entropy == n.entropy
                && m.depth == n.depth
                && m.max_branching == n.max_branching
                && m.summarized == n.summarized
                && m.children.len() == n.children.len()
                && m.children
                    .iter()
                    .zip(&n.children)
                    .all(|(&(p, c), &(q, d))| p == q && same(a, c, b, d))
        }
        self.alphabet == other.alphabet
            && self.nodes.len() == other.nodes.len()
            && same(self, self.root(), other, other.root())
    }
}

impl Tree {
    /// A tree holding only an unvisited root.
    pub fn new(alphabet: ActionAlphabet) -> Self {
        let root = Node::new(None, None, alphabet.size());
        Tree {
            alphabet,
            nodes: vec![root],
        }
    }

    pub fn alphabet(&self) -> &ActionAlphabet {
        &self.alphabet
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn root_node(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.0]
    }

    /// Number of nodes in the arena. Every materialized node is reachable.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Creates a zero-visit child under `parent`.
    pub fn add_child(&mut self, parent: NodeId, action: ActionId) -> Result<NodeId, TreeError> {
        if !self.alphabet.contains(action) {
            return Err(TreeError::ActionOutOfRange {
                action: action.0,
                size: self.alphabet.size(),
            });
        }
        let pos = match self.nodes[parent.0]
            .children
            .binary_search_by_key(&action, |&(a, _)| a)
        {
            Ok(_) => return Err(TreeError::DuplicateChild(action.0)),
            Err(pos) => pos,
        };
        let id = NodeId(self.nodes.len());
        self.nodes
            .push(Node::new(Some(parent), Some(action), self.alphabet.size()));
        self.nodes[parent.0].children.insert(pos, (action, id));
        Ok(id)
    }

    /// Actions from the root down to `id`.
    pub fn path(&self, id: NodeId) -> Vec<ActionId> {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some(parent) = self.nodes[cur.0].parent {
            if let Some(a) = self.nodes[cur.0].action {
                path.push(a);
            }
            cur = parent;
        }
        path.reverse();
        path
    }

    pub fn find(&self, path: &[ActionId]) -> Option<NodeId> {
        let mut cur = self.root();
        for &a in path {
            cur = self.nodes[cur.0].child(a)?;
        }
        Some(cur)
    }

    /// Nodes from `id` up to the root, `id` first.
    pub fn ancestry(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur.0].parent {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Pre-order, children in action order.
    pub fn preorder(&self, from: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            out.push(id);
            for &(_, c) in self.nodes[id.0].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Post-order (children before parents).
    pub fn postorder(&self, from: NodeId) -> Vec<NodeId> {
        let mut out = self.preorder(from);
        out.reverse();
        out
    }

    /// Number of nodes in the subtree rooted at `id`.
    pub fn subtree_size(&self, id: NodeId) -> usize {
        self.preorder(id).len()
    }

    pub fn node_count(&self) -> usize {
        self.subtree_size(self.root())
    }

    pub fn tree_policy(&self, id: NodeId) -> TreePolicy {
        self.nodes[id.0].tree_policy()
    }

    /// Recomputes every derived field bottom-up from the leaves' visit counts:
    /// child slots, internal visit counts (`sum + 1`), entropy, depth and max
    /// branching. Leaf visits are left untouched. Handy for hand-built trees.
    pub fn rebuild_statistics(&mut self) {
        for id in self.postorder(self.root()) {
            let children = self.nodes[id.0].children.clone();
            let mut slots = vec![0u64; self.alphabet.size()];
            for &(a, c) in &children {
                if a.0 < slots.len() {
                    slots[a.0] = self.nodes[c.0].visits;
                }
            }
            let node = &mut self.nodes[id.0];
            node.child_visits = slots;
            if !children.is_empty() {
                node.visits = node.child_visit_sum() + 1;
            }
            crate::entropy::update_entropy(self, id);
            self.refresh_shape(id);
        }
        self.reset_summary();
    }

    /// Recomputes `depth` and `max_branching` of `id` from its children.
    pub(crate) fn refresh_shape(&mut self, id: NodeId) {
        let node = &self.nodes[id.0];
        let mut depth = 0;
        let mut branching = node.used_children().max(1);
        for &(_, c) in &node.children {
            let child = &self.nodes[c.0];
            depth = depth.max(child.depth + 1);
            branching = branching.max(child.max_branching);
        }
        let node = &mut self.nodes[id.0];
        node.depth = depth;
        node.max_branching = branching;
    }

    /// Checks every structural and count invariant; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let size = self.alphabet.size();
        let mut out = Vec::new();
        let order = self.postorder(self.root());
        let mut depth = vec![0u32; self.nodes.len()];
        let mut branching = vec![1u32; self.nodes.len()];
        for &id in &order {
            let node = &self.nodes[id.0];
            let mut push = |kind| {
                out.push(Violation {
                    path: self.path(id),
                    kind,
                })
            };
            if node.child_visits.len() != size {
                push(ViolationKind::ChildVisitsLength {
                    len: node.child_visits.len(),
                    size,
                });
            }
            if let Some(a) = node.action {
                if a.0 >= size {
                    push(ViolationKind::ActionOutOfAlphabet { action: a.0, size });
                } else if let Some(p) = node.parent {
                    let slot = self.nodes[p.0].child_visits.get(a.0).copied().unwrap_or(0);
                    if slot != node.visits {
                        push(ViolationKind::ParentSlotMismatch {
                            slot,
                            visits: node.visits,
                        });
                    }
                }
            }
            if node.parent.is_some() && node.visits == 0 {
                push(ViolationKind::UnvisitedNode);
            }
            if !node.children.is_empty() && node.visits > 0 {
                let child_sum = node.child_visit_sum();
                if node.visits != child_sum + 1 {
                    push(ViolationKind::CountRelation {
                        visits: node.visits,
                        child_sum,
                    });
                }
            }
            for (i, &slot) in node.child_visits.iter().enumerate() {
                let present = node.child(ActionId(i)).is_some();
                if (slot > 0) != present {
                    push(ViolationKind::SlotChildMismatch { action: i, slot });
                }
            }
            if !(node.entropy >= 0.0) || !node.entropy.is_finite() {
                push(ViolationKind::NegativeEntropy(node.entropy));
            } else if node.children.is_empty() && node.entropy != 0.0 {
                push(ViolationKind::LeafEntropyNonZero(node.entropy));
            }
            let mut d = 0;
            let mut b = node.used_children().clamp(1, size as u32);
            for &(_, c) in &node.children {
                d = d.max(depth[c.0] + 1);
                b = b.max(branching[c.0]);
            }
            depth[id.0] = d;
            branching[id.0] = b;
            if node.depth != d {
                push(ViolationKind::DepthMismatch {
                    stored: node.depth,
                    actual: d,
                });
            }
            if node.max_branching != b {
                push(ViolationKind::MaxBranchingMismatch {
                    stored: node.max_branching,
                    actual: b,
                });
            }
        }
        out
    }

    /// Copies the original statistics into the summarized mirror of every
    /// node, clearing all removal marks.
    pub fn reset_summary(&mut self) {
        for id in self.postorder(self.root()) {
            let nodes: u64 = 1 + self.nodes[id.0]
                .children
                .iter()
                .map(|&(_, c)| self.nodes[c.0].summarized.nodes)
                .sum::<u64>();
            let node = &mut self.nodes[id.0];
            node.summarized = Summarized {
                visits: node.visits,
                child_visits: node.child_visits.clone(),
                entropy: node.entropy,
                depth: node.depth,
                nodes,
                removed: false,
            };
        }
    }

    /// Children of `id` that survive in the summarized tree.
    pub fn surviving_children(&self, id: NodeId) -> impl Iterator<Item = (ActionId, NodeId)> + '_ {
        self.nodes[id.0]
            .children
            .iter()
            .copied()
            .filter(move |&(_, c)| !self.nodes[c.0].summarized.removed)
    }

    pub fn is_removed(&self, id: NodeId) -> bool {
        self.nodes[id.0].summarized.removed
    }

    /// Pre-order over the surviving nodes of the summarized tree.
    pub fn surviving_preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            out.push(id);
            let kids: Vec<_> = self.surviving_children(id).collect();
            for &(_, c) in kids.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Materializes the summarized (reduced) tree as a standalone tree whose
    /// original fields hold the summarized values.
    pub fn summarized_view(&self) -> Tree {
        let mut out = Tree::new(self.alphabet.clone());
        let mut stack = vec![(self.root(), out.root())];
        while let Some((src, dst)) = stack.pop() {
            let s = &self.nodes[src.0];
            {
                let d = &mut out.nodes[dst.0];
                d.reward = s.reward;
                d.value = s.value;
                d.value_sum = s.value_sum;
                d.terminal = s.terminal;
                d.visits = s.summarized.visits;
                d.child_visits = s.summarized.child_visits.clone();
                d.entropy = s.summarized.entropy;
                d.depth = s.summarized.depth;
            }
            for (a, c) in self.surviving_children(src) {
                let nc = out
                    .add_child(dst, a)
                    .expect("source tree has unique in-range children");
                stack.push((c, nc));
            }
        }
        for id in out.postorder(out.root()) {
            let node = &out.nodes[id.0];
            let mut b = node.used_children().max(1);
            for &(_, c) in &node.children {
                b = b.max(out.nodes[c.0].max_branching);
            }
            out.nodes[id.0].max_branching = b;
        }
        out.reset_summary();
        out
    }
}
