//! Episode generation, single-tree reduction and batch tables.

use std::path::{Path, PathBuf};

use mcts_xray_core::analytics::{aggregate, compare, ReductionRow};
use mcts_xray_core::engine::{best_action, run_search, EngineError, RolloutEvaluator, SearchConfig};
use mcts_xray_core::env::{EnvConfig, EnvError, LaneEnv};
use mcts_xray_core::reduction::{reduce, Algorithm, ReductionError, ReductionOutcome, SizeMeasure, TradeOff};
use mcts_xray_core::tree::Tree;
use rayon::prelude::*;
use thiserror::Error;

use crate::document::{self, DocumentError};
use crate::table::{self, TableRow};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("{0}")]
    Usage(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Search seed of decision step `step` of an episode seeded with `seed`.
pub fn step_seed(seed: u64, step: u32) -> u64 {
    seed ^ (u64::from(step) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Plays up to `steps` decisions, searching from each visited state and
/// moving along the most visited root action. Stops early when the episode
/// ends. Returns one tree per decision.
pub fn generate_episode(env: &LaneEnv, search: &SearchConfig, steps: u32) -> Result<Vec<Tree>, PipelineError> {
    let mut state = env.initial_state();
    let mut trees = Vec::new();
    for step in 0..steps {
        if state.terminal {
            break;
        }
        let config = SearchConfig {
            seed: step_seed(search.seed, step),
            ..search.clone()
        };
        let evaluator = RolloutEvaluator::from_config(&config);
        let tree = run_search(env, evaluator, state.clone(), config)?;
        let action = best_action(&tree)?;
        state = env.step(&state, action)?.state;
        trees.push(tree);
    }
    Ok(trees)
}

/// Zero-padded file name of the `index`-th tree of an episode.
pub fn tree_file_name(index: usize) -> String {
    format!("tree_{index:03}.tree")
}

pub fn write_episode(dir: &Path, trees: &[Tree]) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut paths = Vec::with_capacity(trees.len());
    for (i, t) in trees.iter().enumerate() {
        let p = dir.join(tree_file_name(i));
        document::write(&p, t)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Builds the environment for a named scenario, applying an optional
/// configuration file. The obstacle layout follows `seed` unless the file
/// sets `obstacle_seed`.
pub fn scenario_env(scenario: &str, seed: u64, config_text: Option<&str>) -> Result<LaneEnv, PipelineError> {
    let mut base = EnvConfig::scenario(scenario)
        .ok_or_else(|| PipelineError::Usage(format!("unknown scenario {scenario:?}")))?;
    base.obstacle_seed = seed;
    let config = match config_text {
        Some(text) => crate::config::parse(text, base).map_err(|e| PipelineError::Usage(e.to_string()))?,
        None => base,
    };
    Ok(LaneEnv::new(config)?)
}

/// A reduced tree with its comparison row.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub outcome: ReductionOutcome,
    /// The reduced tree, materialized.
    pub tree: Tree,
    pub row: ReductionRow,
}

pub fn reduce_tree(
    original: &Tree,
    algorithm: Algorithm,
    beta_factor: f64,
    size: SizeMeasure,
) -> Result<Reduced, PipelineError> {
    let mut work = original.clone();
    let outcome = reduce(&mut work, algorithm, beta_factor, size)?;
    let tree = work.summarized_view();
    let row = compare(original, &tree, &outcome.params);
    Ok(Reduced { outcome, tree, row })
}

/// Compares two trees using the criterion resolved on `original`.
pub fn compare_trees(
    original: &Tree,
    reduced: &Tree,
    beta_factor: f64,
    size: SizeMeasure,
) -> Result<ReductionRow, PipelineError> {
    let params = TradeOff::resolve(original, beta_factor, size)?;
    Ok(compare(original, reduced, &params))
}

/// Tree files (`*.tree`) of a directory, sorted by name.
pub fn list_trees(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "tree") && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Results of one batch: per-tree rows per (algorithm, beta factor) and one
/// aggregate row per combination, in the order the settings were given.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchResult {
    pub per_combination: Vec<(Algorithm, f64, Vec<TableRow>)>,
    pub summary: Vec<TableRow>,
}

/// Reduces every tree with every (algorithm, beta factor) pair. Work runs on
/// up to `threads` workers (all cores when `None`); results do not depend on
/// scheduling.
pub fn run_batch(
    trees: &[(String, Tree)],
    algorithms: &[Algorithm],
    beta_factors: &[f64],
    size: SizeMeasure,
    threads: Option<usize>,
) -> Result<BatchResult, PipelineError> {
    if trees.is_empty() {
        return Err(PipelineError::Usage("no trees to reduce".into()));
    }
    let mut jobs = Vec::new();
    for &a in algorithms {
        for &b in beta_factors {
            for t in 0..trees.len() {
                jobs.push((a, b, t));
            }
        }
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let rows: Vec<ReductionRow> = pool.build()?.install(|| {
        jobs.par_iter()
            .map(|&(a, b, t)| reduce_tree(&trees[t].1, a, b, size).map(|r| r.row))
            .collect::<Result<_, _>>()
    })?;

    let mut per_combination = Vec::new();
    let mut summary = Vec::new();
    for (chunk, &(a, b, _)) in rows.chunks(trees.len()).zip(jobs.iter().step_by(trees.len())) {
        let tagged: Vec<TableRow> = chunk
            .iter()
            .zip(trees)
            .map(|(row, (name, _))| TableRow {
                tree: Some(name.clone()),
                algorithm: Some(a),
                beta_factor: b,
                row: row.clone(),
            })
            .collect();
        summary.push(TableRow {
            tree: None,
            algorithm: Some(a),
            beta_factor: b,
            row: aggregate(chunk).expect("non-empty batch"),
        });
        per_combination.push((a, b, tagged));
    }
    Ok(BatchResult {
        per_combination,
        summary,
    })
}

/// File name of the per-tree table of one combination.
pub fn rows_file_name(algorithm: Algorithm, beta_factor: f64) -> String {
    format!("rows_{}_{}.csv", algorithm.name(), beta_factor)
}

pub const SUMMARY_FILE: &str = "summary.csv";

pub fn write_batch(dir: &Path, result: &BatchResult) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for (a, b, rows) in &result.per_combination {
        let p = dir.join(rows_file_name(*a, *b));
        std::fs::write(&p, table::to_string(rows)).map_err(io_err(&p))?;
        written.push(p);
    }
    let p = dir.join(SUMMARY_FILE);
    std::fs::write(&p, table::to_string(&result.summary)).map_err(io_err(&p))?;
    written.push(p);
    Ok(written)
}

/// Loads every tree file of `dir` in name order.
pub fn load_dir(dir: &Path) -> Result<Vec<(String, Tree)>, PipelineError> {
    let paths = list_trees(dir)?;
    if paths.is_empty() {
        return Err(PipelineError::Usage(format!(
            "no .tree files in {}",
            dir.display()
        )));
    }
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, document::read(&p)?))
        })
        .collect()
}

/// Worker cap from `MCTS_XRAY_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>, PipelineError> {
    match std::env::var("MCTS_XRAY_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(PipelineError::Usage(format!(
                "MCTS_XRAY_THREADS must be a positive integer, got {v:?}"
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn episode(seed: u64, steps: u32) -> Vec<Tree> {
        let env = scenario_env("highway", seed, None).unwrap();
        let search = SearchConfig {
            seed,
            ..SearchConfig::default()
        };
        generate_episode(&env, &search, steps).unwrap()
    }

    #[test]
    fn one_step_budget_100() {
        let trees = episode(3, 1);
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].root_node().visits, 101);
    }

    #[test]
    fn batch_shape_and_order_independence() {
        let trees: Vec<(String, Tree)> = episode(5, 5)
            .into_iter()
            .enumerate()
            .map(|(i, t)| (tree_file_name(i), t))
            .collect();
        assert_eq!(trees.len(), 5);
        let betas = [1.0, 0.5, 0.25];
        let one = run_batch(&trees, &Algorithm::ALL, &betas, SizeMeasure::Visits, Some(1)).unwrap();
        let many = run_batch(&trees, &Algorithm::ALL, &betas, SizeMeasure::Visits, Some(4)).unwrap();
        assert_eq!(one, many);
        assert_eq!(one.summary.len(), 12);
        let total: usize = one.per_combination.iter().map(|c| c.2.len()).sum();
        assert_eq!(total, 60);
        assert!(one.summary.iter().all(|r| r.row.number_of_trees == 5));
    }

    #[test]
    fn unknown_scenario() {
        assert!(matches!(scenario_env("desert", 0, None), Err(PipelineError::Usage(_))));
    }
}
