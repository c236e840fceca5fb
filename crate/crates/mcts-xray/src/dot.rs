//! Graphviz output.

use std::fmt::Write as _;

use mcts_xray_core::tree::{NodeId, Tree};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders `tree` as a DOT digraph. Nodes show visits and entropy, edges the
/// action label. With `show_summarized`, removed subtrees are left out and
/// the summarized statistics are shown instead of the original ones.
pub fn export_dot(tree: &Tree, show_summarized: bool) -> String {
    let mut out = String::from("digraph mcts {\n  node [shape=box, fontname=\"monospace\"];\n");
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        let n = tree.node(id);
        let (visits, entropy) = if show_summarized {
            (n.summarized.visits, n.summarized.entropy)
        } else {
            (n.visits, n.entropy)
        };
        let shape = if n.terminal { ", style=bold" } else { "" };
        let _ = writeln!(
            out,
            "  n{} [label=\"N={visits}\\nH={entropy:.3}\"{shape}];",
            id.index()
        );
        let kids: Vec<(_, NodeId)> = if show_summarized {
            tree.surviving_children(id).collect()
        } else {
            n.children.clone()
        };
        for &(a, c) in &kids {
            let _ = writeln!(
                out,
                "  n{} -> n{} [label=\"{}\"];",
                id.index(),
                c.index(),
                escape(&tree.alphabet().label(a))
            );
        }
        stack.extend(kids.iter().rev().map(|&(_, c)| c));
    }
    out.push_str("}\n");
    out
}
