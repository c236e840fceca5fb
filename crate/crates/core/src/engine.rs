//! Monte Carlo tree search with entropy-carrying back-propagation.
//!
//! Children are materialized the first time selection takes their action, so
//! every node in the tree has been visited at least once once an iteration
//! completes. Expansion records the valid actions (and the prior, for PUCT)
//! of a node on the search side; the [`Tree`] itself only holds statistics.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::entropy::update_entropy;
use crate::tree::{most_visited, ActionAlphabet, ActionId, NodeId, Tree};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("node has no children to select from")]
    Unexpanded,
    #[error("back-propagation must start at a leaf")]
    NotALeaf,
    #[error("node {0} is not part of the tree")]
    UnknownNode(usize),
}

/// Result of taking an action in an [`Environment`].
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<S> {
    pub state: S,
    pub reward: f64,
    pub terminal: bool,
}

/// A deterministic sequential decision process over a fixed action alphabet.
pub trait Environment {
    type State: Clone;

    fn alphabet(&self) -> ActionAlphabet;

    /// Actions allowed in `state`; empty for terminal states.
    fn valid_actions(&self, state: &Self::State) -> Vec<ActionId>;

    /// Applies `action`, which must be one of `valid_actions(state)`.
    fn step(&self, state: &Self::State, action: ActionId) -> Transition<Self::State>;

    fn is_terminal(&self, state: &Self::State) -> bool;
}

/// Value estimate and action prior for a state.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// One entry per alphabet action; sums to 1 over the valid actions.
    pub prior: Vec<f64>,
}

/// Leaf evaluator: a rollout policy or a learned value/prior model.
pub trait Evaluator<E: Environment> {
    fn evaluate(&mut self, env: &E, state: &E::State) -> Evaluation;
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SelectionMode {
    /// `Q + c sqrt(ln N / n)`; unvisited actions first.
    UctMean,
    /// `Q + c prior sqrt(N) / (1 + n)`.
    PuctPrior,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Iterations after the root has been initialized.
    pub budget: u32,
    pub gamma: f64,
    pub exploration_weight: f64,
    pub selection: SelectionMode,
    pub rollout_depth_cap: u32,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: 100,
            gamma: 0.9,
            exploration_weight: 1.0,
            selection: SelectionMode::UctMean,
            rollout_depth_cap: 10,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.budget < 1 {
            return Err(EngineError::InvalidConfig("budget must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(EngineError::InvalidConfig("gamma must lie in (0, 1]"));
        }
        if !(self.exploration_weight > 0.0) || !self.exploration_weight.is_finite() {
            return Err(EngineError::InvalidConfig("exploration weight must be positive"));
        }
        if self.rollout_depth_cap < 1 {
            return Err(EngineError::InvalidConfig("rollout depth cap must be at least 1"));
        }
        Ok(())
    }
}

/// Mean action-value of a visited node as seen from its parent.
pub fn mean_q(tree: &Tree, id: NodeId) -> f64 {
    let node = tree.node(id);
    if node.visits == 0 {
        0.0
    } else {
        node.value_sum / node.visits as f64
    }
}

/// Picks the child action of `id` to descend into among `candidates`.
///
/// Ties go to the lowest action. Candidates without a materialized child
/// count as unvisited: infinite score under UCT, zero mean-Q under PUCT.
pub fn select(
    tree: &Tree,
    id: NodeId,
    candidates: &[ActionId],
    prior: Option<&[f64]>,
    config: &SearchConfig,
) -> Result<ActionId, EngineError> {
    if candidates.is_empty() {
        return Err(EngineError::Unexpanded);
    }
    let node = tree.node(id);
    let parent_visits = node.visits as f64;
    let c = config.exploration_weight;
    let mut best: Option<(ActionId, f64)> = None;
    let mut sorted = candidates.to_vec();
    sorted.sort();
    for a in sorted {
        let child = node.child(a);
        let visits = child.map(|ch| tree.node(ch).visits).unwrap_or(0);
        let q = child.map(|ch| mean_q(tree, ch)).unwrap_or(0.0);
        let score = match config.selection {
            SelectionMode::UctMean => {
                if visits == 0 {
                    f64::INFINITY
                } else {
                    q + c * libm::sqrt(libm::log(parent_visits) / visits as f64)
                }
            }
            SelectionMode::PuctPrior => {
                let p = prior.and_then(|p| p.get(a.0)).copied().unwrap_or(0.0);
                q + c * p * libm::sqrt(parent_visits) / (1.0 + visits as f64)
            }
        };
        match best {
            Some((_, s)) if s >= score => {}
            _ => best = Some((a, score)),
        }
    }
    Ok(best.expect("candidates non-empty").0)
}

/// Back-propagates `value` from `leaf` to the root.
///
/// The leaf takes `value` and one visit. Walking up, `value` becomes
/// `reward + gamma * value`; each ancestor overwrites its `value`, gains one
/// visit (and one in the path child's slot), raises its depth to the
/// trajectory length, refreshes its entropy from its children and its max
/// branching from the path child.
pub fn backpropagate(tree: &mut Tree, leaf: NodeId, value: f64, gamma: f64) -> Result<(), EngineError> {
    if leaf.index() >= tree.len() {
        return Err(EngineError::UnknownNode(leaf.index()));
    }
    if !tree.node(leaf).is_leaf() {
        return Err(EngineError::NotALeaf);
    }
    let mut value = value;
    let mut cur = leaf;
    {
        let n = tree.node_mut(cur);
        n.value = value;
        n.visits += 1;
        n.value_sum += n.reward + gamma * value;
    }
    let mut trajectory_depth = 0;
    while let Some(parent) = tree.node(cur).parent() {
        let (reward, action, child_branching) = {
            let n = tree.node(cur);
            (n.reward, n.action.expect("non-root"), n.max_branching)
        };
        value = reward + gamma * value;
        cur = parent;
        trajectory_depth += 1;
        {
            let n = tree.node_mut(cur);
            n.child_visits[action.index()] += 1;
            n.value = value;
            n.visits += 1;
            n.value_sum += n.reward + gamma * value;
            n.depth = n.depth.max(trajectory_depth);
        }
        update_entropy(tree, cur);
        let n = tree.node_mut(cur);
        n.max_branching = n.max_branching.max(n.used_children()).max(child_branching);
    }
    Ok(())
}

/// Most visited root action; ties go to the lowest action.
pub fn best_action(tree: &Tree) -> Result<ActionId, EngineError> {
    most_visited(&tree.root_node().child_visits).ok_or(EngineError::Unexpanded)
}

#[derive(Clone, Debug)]
struct Expansion {
    valid: Vec<ActionId>,
    prior: Vec<f64>,
}

/// An in-progress search. Each [`Search::iterate`] call runs one
/// select / expand / evaluate / back-propagate cycle.
pub struct Search<'e, E: Environment, V: Evaluator<E>> {
    env: &'e E,
    evaluator: V,
    config: SearchConfig,
    tree: Tree,
    states: Vec<E::State>,
    expansions: Vec<Option<Expansion>>,
    iterations: u32,
}

impl<'e, E: Environment, V: Evaluator<E>> Search<'e, E, V> {
    /// Creates the root from `root_state`, expands and evaluates it, and
    /// gives it its first visit.
    pub fn new(env: &'e E, evaluator: V, root_state: E::State, config: SearchConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let mut tree = Tree::new(env.alphabet());
        let terminal = env.is_terminal(&root_state);
        tree.node_mut(NodeId::ROOT).terminal = terminal;
        let mut search = Search {
            env,
            evaluator,
            config,
            tree,
            states: vec![root_state],
            expansions: vec![None],
            iterations: 0,
        };
        let value = search.expand_and_evaluate(NodeId::ROOT);
        backpropagate(&mut search.tree, NodeId::ROOT, value, search.config.gamma)?;
        Ok(search)
    }

    /// Records the valid actions and prior of a leaf and returns its value.
    /// Terminal leaves are not expanded and are worth 0 beyond the reward
    /// that led into them.
    pub fn expand_and_evaluate(&mut self, id: NodeId) -> f64 {
        let state = &self.states[id.index()];
        if self.tree.node(id).terminal || self.env.is_terminal(state) {
            return 0.0;
        }
        let valid = self.env.valid_actions(state);
        let eval = self.evaluator.evaluate(self.env, state);
        self.expansions[id.index()] = Some(Expansion {
            valid,
            prior: eval.prior,
        });
        eval.value
    }

    /// Valid actions recorded when `id` was expanded; empty otherwise.
    pub fn expanded_actions(&self, id: NodeId) -> &[ActionId] {
        self.expansions[id.index()]
            .as_ref()
            .map(|e| e.valid.as_slice())
            .unwrap_or(&[])
    }

    pub fn prior(&self, id: NodeId) -> Option<&[f64]> {
        self.expansions[id.index()].as_ref().map(|e| e.prior.as_slice())
    }

    pub fn state(&self, id: NodeId) -> &E::State {
        &self.states[id.index()]
    }

    pub fn iterate(&mut self) -> Result<(), EngineError> {
        let mut id = NodeId::ROOT;
        let value = loop {
            let node = self.tree.node(id);
            let expansion = match &self.expansions[id.index()] {
                Some(e) if !node.terminal && !e.valid.is_empty() => e,
                // Terminal or dead-end leaf: revisit with its stored value.
                _ => break node.value,
            };
            let action = select(
                &self.tree,
                id,
                &expansion.valid,
                Some(&expansion.prior),
                &self.config,
            )?;
            if let Some(child) = node.child(action) {
                id = child;
                continue;
            }
            let transition = self.env.step(&self.states[id.index()], action);
            let child = self
                .tree
                .add_child(id, action)
                .expect("valid actions are in the alphabet and unmaterialized");
            {
                let n = self.tree.node_mut(child);
                n.reward = transition.reward;
                n.terminal = transition.terminal;
            }
            self.states.push(transition.state);
            self.expansions.push(None);
            id = child;
            break self.expand_and_evaluate(child);
        };
        backpropagate(&mut self.tree, id, value, self.config.gamma)?;
        self.iterations += 1;
        Ok(())
    }

    pub fn run(&mut self) -> Result<(), EngineError> {
        while self.iterations < self.config.budget {
            self.iterate()?;
        }
        Ok(())
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    /// The finished tree, with its summarized mirror synchronized.
    pub fn into_tree(self) -> Tree {
        let mut tree = self.tree;
        tree.reset_summary();
        tree
    }
}

/// Runs `config.budget` iterations from `root_state` and returns the tree.
pub fn run_search<E: Environment, V: Evaluator<E>>(
    env: &E,
    evaluator: V,
    root_state: E::State,
    config: SearchConfig,
) -> Result<Tree, EngineError> {
    let mut search = Search::new(env, evaluator, root_state, config)?;
    search.run()?;
    Ok(search.into_tree())
}

/// Uniform-random rollout evaluator with a uniform prior over valid actions.
#[derive(Clone, Debug)]
pub struct RolloutEvaluator {
    rng: ChaCha8Rng,
    gamma: f64,
    depth_cap: u32,
}

impl RolloutEvaluator {
    pub fn new(seed: u64, gamma: f64, depth_cap: u32) -> Self {
        RolloutEvaluator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            gamma,
            depth_cap,
        }
    }

    pub fn from_config(config: &SearchConfig) -> Self {
        Self::new(config.seed, config.gamma, config.rollout_depth_cap)
    }
}

impl<E: Environment> Evaluator<E> for RolloutEvaluator {
    fn evaluate(&mut self, env: &E, state: &E::State) -> Evaluation {
        let size = env.alphabet().size();
        let valid = env.valid_actions(state);
        let mut prior = vec![0.0; size];
        if valid.is_empty() {
            return Evaluation { value: 0.0, prior };
        }
        let share = 1.0 / valid.len() as f64;
        for a in &valid {
            prior[a.index()] = share;
        }
        let mut value = 0.0;
        let mut discount = 1.0;
        let mut cur = state.clone();
        for _ in 0..self.depth_cap {
            let actions = env.valid_actions(&cur);
            if actions.is_empty() {
                break;
            }
            let a = actions[self.rng.gen_range(0..actions.len())];
            let t = env.step(&cur, a);
            value += discount * t.reward;
            discount *= self.gamma;
            if t.terminal {
                break;
            }
            cur = t.state;
        }
        Evaluation { value, prior }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{all_subtree_entropies, tests::build};

    fn config() -> SearchConfig {
        SearchConfig::default()
    }

    fn two_children(visits: [u64; 2], q: [f64; 2], parent_visits: u64) -> Tree {
        let mut t = build(2, &[(&[0], 1), (&[1], 1)]);
        for a in 0..2 {
            let c = t.find(&[ActionId(a)]).unwrap();
            let n = t.node_mut(c);
            n.visits = visits[a];
            n.value_sum = q[a] * visits[a] as f64;
        }
        t.node_mut(NodeId::ROOT).visits = parent_visits;
        t
    }

    const BOTH: [ActionId; 2] = [ActionId(0), ActionId(1)];

    #[test]
    fn select_prefers_unvisited() {
        let mut t = build(2, &[(&[0], 1)]);
        t.node_mut(NodeId::ROOT).visits = 2;
        assert_eq!(select(&t, t.root(), &BOTH, None, &config()).unwrap(), ActionId(1));
    }

    #[test]
    fn select_equal_bonus_higher_q() {
        let t = two_children([10, 10], [0.5, 0.1], 21);
        assert_eq!(select(&t, t.root(), &BOTH, None, &config()).unwrap(), ActionId(0));
    }

    #[test]
    fn select_hand_evaluated_scores() {
        let t = two_children([1, 9], [0.0, 0.1], 10);
        let s0 = libm::sqrt(libm::log(10.0));
        let s1 = 0.1 + libm::sqrt(libm::log(10.0) / 9.0);
        assert!((s0 - 1.517).abs() < 1e-3 && (s1 - 0.606).abs() < 1e-3);
        assert_eq!(select(&t, t.root(), &BOTH, None, &config()).unwrap(), ActionId(0));
    }

    #[test]
    fn select_ties_go_low_and_empty_is_error() {
        let t = two_children([4, 4], [0.2, 0.2], 9);
        assert_eq!(select(&t, t.root(), &BOTH, None, &config()).unwrap(), ActionId(0));
        assert_eq!(
            select(&t, t.root(), &[], None, &config()),
            Err(EngineError::Unexpanded)
        );
    }

    #[test]
    fn puct_follows_prior() {
        let t = two_children([1, 1], [0.0, 0.0], 3);
        let cfg = SearchConfig {
            selection: SelectionMode::PuctPrior,
            ..config()
        };
        let prior = [0.2, 0.8];
        assert_eq!(select(&t, t.root(), &BOTH, Some(&prior), &cfg).unwrap(), ActionId(1));
    }

    #[test]
    fn backprop_discounts_reward() {
        let mut t = Tree::new(ActionAlphabet::new(2).unwrap());
        let r = t.root();
        backpropagate(&mut t, r, 0.0, 0.9).unwrap();
        let c = t.add_child(r, ActionId(0)).unwrap();
        t.node_mut(c).reward = 0.1;
        backpropagate(&mut t, c, 1.0, 0.9).unwrap();
        assert_eq!(t.node(c).value, 1.0);
        assert!((t.root_node().value - 1.0).abs() < 1e-15);
        assert_eq!(t.root_node().depth, 1);
        assert_eq!(t.root_node().visits, 2);
        assert!(t.validate().is_empty());
    }

    #[test]
    fn backprop_touches_only_the_path() {
        let mut t = build(2, &[(&[0, 0], 1), (&[0, 1], 1), (&[1], 1)]);
        let before = t.clone();
        let leaf = t.find(&[ActionId(0), ActionId(1)]).unwrap();
        backpropagate(&mut t, leaf, 0.5, 0.9).unwrap();
        let path = t.ancestry(leaf);
        for id in t.ids() {
            let delta = t.node(id).visits - before.node(id).visits;
            assert_eq!(delta, u64::from(path.contains(&id)));
        }
        assert_eq!(backpropagate(&mut t, NodeId::ROOT, 0.0, 0.9), Err(EngineError::NotALeaf));
    }

    #[test]
    fn best_action_examples() {
        let mut t = build(3, &[(&[0], 3), (&[1], 7), (&[2], 1)]);
        assert_eq!(best_action(&t).unwrap(), ActionId(1));
        t = build(2, &[(&[0], 5), (&[1], 5)]);
        assert_eq!(best_action(&t).unwrap(), ActionId(0));
        let bare = Tree::new(ActionAlphabet::new(2).unwrap());
        assert_eq!(best_action(&bare), Err(EngineError::Unexpanded));
    }

    #[test]
    fn config_validation() {
        assert!(config().validate().is_ok());
        assert!(SearchConfig { budget: 0, ..config() }.validate().is_err());
        assert!(SearchConfig { gamma: 0.0, ..config() }.validate().is_err());
        assert!(SearchConfig { gamma: 1.5, ..config() }.validate().is_err());
    }

    /// Binary counter: the state counts steps; terminal after `horizon`.
    struct Counter {
        horizon: u32,
    }

    impl Environment for Counter {
        type State = u32;
        fn alphabet(&self) -> ActionAlphabet {
            ActionAlphabet::new(3).unwrap()
        }
        fn valid_actions(&self, s: &u32) -> Vec<ActionId> {
            if *s >= self.horizon {
                Vec::new()
            } else {
                vec![ActionId(0), ActionId(1), ActionId(2)]
            }
        }
        fn step(&self, s: &u32, a: ActionId) -> Transition<u32> {
            Transition {
                state: s + 1,
                reward: a.index() as f64 * 0.1,
                terminal: s + 1 >= self.horizon,
            }
        }
        fn is_terminal(&self, s: &u32) -> bool {
            *s >= self.horizon
        }
    }

    #[test]
    fn search_keeps_entropy_and_counts_exact_every_iteration() {
        let env = Counter { horizon: 4 };
        let cfg = SearchConfig { budget: 80, ..config() };
        let mut s = Search::new(&env, RolloutEvaluator::from_config(&cfg), 0, cfg).unwrap();
        for i in 0..80 {
            s.iterate().unwrap();
            let t = s.tree();
            assert_eq!(t.root_node().visits, i + 2);
            assert!(t.validate().is_empty(), "{:?}", t.validate());
            let oracle = all_subtree_entropies(t);
            for id in t.ids() {
                assert!((t.node(id).entropy - oracle[id.index()]).abs() < 1e-9);
            }
        }
        // 1 + 3 + 9 + 27 + 81 nodes would be needed to avoid terminal revisits.
        let t = s.into_tree();
        assert!(t.node_count() as u64 <= t.root_node().visits);
    }

    #[test]
    fn budget_one_materializes_one_child() {
        let env = Counter { horizon: 5 };
        let cfg = SearchConfig { budget: 1, ..config() };
        let t = run_search(&env, RolloutEvaluator::from_config(&cfg), 0, cfg).unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.root_node().visits, 2);
    }

    #[test]
    fn terminal_root_only_accumulates_visits() {
        let env = Counter { horizon: 0 };
        let cfg = SearchConfig { budget: 5, ..config() };
        let t = run_search(&env, RolloutEvaluator::from_config(&cfg), 0, cfg).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.root_node().visits, 6);
    }
}
