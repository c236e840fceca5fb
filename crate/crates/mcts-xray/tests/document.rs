mod common;

use mcts_xray::document::{self, DocumentError};
use mcts_xray::dot::export_dot;
use mcts_xray_core::reduction::{reduce, Algorithm, SizeMeasure};
use mcts_xray_core::tree::ViolationKind;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn generated_tree_round_trips() {
    let trees = common::generated_trees("highway", 0..1, 1, 100);
    let t = &trees[0];
    assert!(t.len() >= 50);
    let text = document::to_string(t);
    let back = document::parse(&text).unwrap();
    assert_eq!(&back, t);
    assert_eq!(document::to_string(&back), text);
}

#[test]
fn reduced_tree_round_trips() {
    let mut t = common::generated_trees("curve", 3..4, 1, 100).remove(0);
    reduce(&mut t, Algorithm::TwoStageV2, 1.0, SizeMeasure::Visits).unwrap();
    let view = t.summarized_view();
    let back = document::parse(&document::to_string(&view)).unwrap();
    assert_eq!(back, view);
}

#[test]
fn parse_errors() {
    let t = common::generated_trees("merge", 1..2, 1, 30).remove(0);
    let text = document::to_string(&t);

    assert!(matches!(document::parse("{"), Err(DocumentError::Syntax(_))));
    assert!(document::parse(&text.replacen("mcts-xray-tree", "other", 1)).is_err());

    // Drop the first child's visit count.
    let first_child = text.find("\"children\": [").unwrap();
    let at = first_child + text[first_child..].find("\"visits\"").unwrap();
    let end = at + text[at..].find('\n').unwrap();
    let broken = format!("{}{}", &text[..at], &text[end + 1..]);
    let err = document::parse(&broken).unwrap_err();
    match &err {
        DocumentError::Field { path, message } => {
            assert!(path.starts_with("root/"), "{path}");
            assert!(message.contains("visits"));
        }
        other => panic!("{other:?}"),
    }

    let root_visits = format!("\"visits\": {},", t.root_node().visits);
    let inflated = text.replacen(&root_visits, &format!("\"visits\": {},", t.root_node().visits + 3), 1);
    match document::parse(&inflated) {
        Err(DocumentError::Invalid(v)) => {
            assert!(v.iter().any(|x| matches!(x.kind, ViolationKind::CountRelation { .. })));
            assert!(v.iter().all(|x| x.path.is_empty()));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn dot_of_generated_tree() {
    let t = common::generated_trees("highway", 2..3, 1, 40).remove(0);
    let dot = export_dot(&t, false);
    assert_eq!(dot.matches("->").count(), t.len() - 1);
    assert_eq!(dot.matches("[label=\"N=").count(), t.len());
    assert!(dot.contains("label=\"accelerate\"") || dot.contains("label=\"none\""));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_trees_round_trip(seed in any::<u64>(), nodes in 2usize..60, alphabet in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_tree(&mut rng, nodes, alphabet);
        let text = document::to_string(&t);
        let back = document::parse(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(document::to_string(&back), text);
    }
}
