mod common;

use mcts_xray_core::env::SCENARIOS;

#[test]
fn batches_have_branching_variety() {
    for scenario in SCENARIOS {
        let trees = common::generated_trees(scenario, 0..15, 5, 100);
        assert!(trees.len() >= 50, "{scenario}: {}", trees.len());
        let trees = &trees[..50];
        assert!(trees.iter().any(|t| t.root_node().max_branching >= 4), "{scenario}");
        assert!(trees.iter().any(|t| t.root_node().depth >= 5), "{scenario}");
        for t in trees {
            assert!(t.validate().is_empty());
            assert!(t.len() as u64 <= t.root_node().visits);
        }
    }
}
