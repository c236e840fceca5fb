//! File formats and batch pipelines around `mcts-xray-core`.
//!
//! - [`document`]: JSON tree documents.
//! - [`dot`]: Graphviz rendering.
//! - [`table`]: CSV reduction tables.
//! - [`config`]: `key = value` environment configuration files.
//! - [`pipeline`]: episode generation, single-tree reduction and batches.

pub mod config;
pub mod document;
pub mod dot;
pub mod pipeline;
pub mod table;
