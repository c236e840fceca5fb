#![allow(dead_code)]

use std::collections::HashSet;

use mcts_xray::pipeline;
use mcts_xray_core::engine::SearchConfig;
use mcts_xray_core::tree::{ActionAlphabet, ActionId, NodeId, Tree};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random tree of exactly `nodes` nodes over `alphabet` actions. Leaves get
/// 1 to 3 visits; leaves visited more than once are terminal.
pub fn random_tree(rng: &mut ChaCha8Rng, nodes: usize, alphabet: usize) -> Tree {
    let mut t = Tree::new(ActionAlphabet::new(alphabet).unwrap());
    while t.len() < nodes {
        let ids: Vec<NodeId> = t
            .ids()
            .filter(|&id| t.node(id).children.len() < alphabet)
            .collect();
        let parent = *ids.choose(rng).unwrap();
        let free: Vec<usize> = (0..alphabet)
            .filter(|&a| t.node(parent).child(ActionId(a)).is_none())
            .collect();
        let a = *free.choose(rng).unwrap();
        t.add_child(parent, ActionId(a)).unwrap();
    }
    let leaves: Vec<NodeId> = t.ids().filter(|&id| t.node(id).is_leaf()).collect();
    for id in leaves {
        let v = rng.gen_range(1..=3);
        let n = t.node_mut(id);
        n.visits = v;
        n.terminal = v > 1;
    }
    t.rebuild_statistics();
    t
}

/// Subtree entropy straight from the definition, over the surviving
/// children given by `kept`. Returns (visits, entropy, nodes) of the
/// reduced subtree at `id`.
pub fn reduced_stats(tree: &Tree, id: NodeId, kept: &dyn Fn(NodeId) -> bool) -> (u64, f64, u64) {
    let node = tree.node(id);
    let kids: Vec<(u64, f64, u64)> = node
        .children
        .iter()
        .filter(|&&(_, c)| kept(c))
        .map(|&(_, c)| reduced_stats(tree, c, kept))
        .collect();
    if kids.is_empty() {
        let visits = if node.is_leaf() { node.visits } else { 1 };
        return (visits, 0.0, 1);
    }
    let total: u64 = kids.iter().map(|k| k.0).sum();
    let mut h = 0.0;
    for &(v, hc, _) in &kids {
        let p = v as f64 / total as f64;
        h += -p * p.log2() + p * hc;
    }
    (total + 1, h, 1 + kids.iter().map(|k| k.2).sum::<u64>())
}

pub fn oracle_entropy(tree: &Tree, id: NodeId) -> f64 {
    reduced_stats(tree, id, &|_| true).1
}

/// Surviving nodes of a (possibly) reduced tree.
pub fn surviving(tree: &Tree) -> HashSet<NodeId> {
    tree.surviving_preorder().into_iter().collect()
}

/// Every surviving node that keeps any child keeps its originally most
/// visited child.
pub fn main_child_protected(tree: &Tree) -> bool {
    tree.surviving_preorder().into_iter().all(|id| {
        let kept: Vec<_> = tree.surviving_children(id).collect();
        kept.is_empty()
            || match tree.node(id).most_visited() {
                Some(m) => kept.iter().any(|&(a, _)| a == m),
                None => false,
            }
    })
}

/// Trees from episodes of `scenario` with seeds `seeds`, `steps` decisions
/// each, budget `budget`.
pub fn generated_trees(scenario: &str, seeds: std::ops::Range<u64>, steps: u32, budget: u32) -> Vec<Tree> {
    let mut out = Vec::new();
    for seed in seeds {
        let env = pipeline::scenario_env(scenario, seed, None).unwrap();
        let search = SearchConfig {
            budget,
            seed,
            ..SearchConfig::default()
        };
        out.extend(pipeline::generate_episode(&env, &search, steps).unwrap());
    }
    out
}
