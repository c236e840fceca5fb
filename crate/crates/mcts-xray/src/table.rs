//! CSV tables of reduction rows.
//!
//! Columns are fractions (`0.25` is a 25% reduction); absent values are empty
//! fields.

use std::io;

use mcts_xray_core::analytics::ReductionRow;
use mcts_xray_core::reduction::Algorithm;
use serde::Serialize;

#[derive(Serialize)]
struct Record<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    tree: Option<&'a str>,
    algorithm: &'a str,
    beta_factor: f64,
    total_tree_reduction: Option<f64>,
    main_path_reduction: Option<f64>,
    main_subtree_reduction: Option<f64>,
    second_path_reduction: Option<f64>,
    second_subtree_reduction: Option<f64>,
    entropy_reduction: Option<f64>,
    tradeoff_reduction: Option<f64>,
    number_of_trees: usize,
}

/// A row tagged with its reduction settings and, for per-tree tables, the
/// tree it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub tree: Option<String>,
    /// Empty when the rows do not come from a named algorithm.
    pub algorithm: Option<Algorithm>,
    pub beta_factor: f64,
    pub row: ReductionRow,
}

impl TableRow {
    fn record(&self) -> Record<'_> {
        let r = &self.row;
        Record {
            tree: self.tree.as_deref(),
            algorithm: self.algorithm.map_or("", Algorithm::name),
            beta_factor: self.beta_factor,
            total_tree_reduction: r.total_tree_reduction,
            main_path_reduction: r.main_path_reduction,
            main_subtree_reduction: r.main_subtree_reduction,
            second_path_reduction: r.second_path_reduction,
            second_subtree_reduction: r.second_subtree_reduction,
            entropy_reduction: r.entropy_reduction,
            tradeoff_reduction: r.tradeoff_reduction,
            number_of_trees: r.number_of_trees,
        }
    }
}

/// Writes `rows` with a header. Either every row names its tree or none do.
pub fn write_rows<W: io::Write>(out: W, rows: &[TableRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_string(rows: &[TableRow]) -> String {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}
