#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcts_xray::document;
use mcts_xray::dot::export_dot;
use mcts_xray::pipeline::{self, PipelineError};
use mcts_xray::table::{self, TableRow};
use mcts_xray_core::engine::SearchConfig;
use mcts_xray_core::entropy::{all_per_step_bounds, all_subtree_entropies};
use mcts_xray_core::env::SCENARIOS;
use mcts_xray_core::reduction::{reduce, Algorithm, SizeMeasure};

/// Entropy-annotated MCTS trees: generation, inspection and reduction.
#[derive(Parser)]
#[command(name = "mcts-xray", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play an episode of the driving environment, saving one search tree per
    /// decision.
    Generate {
        #[arg(long, default_value = "highway", value_parser = clap::builder::PossibleValuesParser::new(SCENARIOS))]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Search iterations per decision.
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
        budget: u32,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        steps: u32,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
        rollout_depth: u32,
        #[arg(long, default_value_t = 1.0)]
        exploration: f64,
        /// Environment settings file (`key = value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print entropy, depth and per-step bounds of a tree.
    Entropy {
        input: PathBuf,
        /// Recompute every node's entropy recursively and fail on any
        /// difference above 1e-9.
        #[arg(long)]
        verify: bool,
        /// One line per node instead of the root only.
        #[arg(long)]
        nodes: bool,
    },
    /// Reduce a tree and write the reduced tree.
    Reduce {
        input: PathBuf,
        #[arg(long)]
        algo: Algorithm,
        #[arg(long, default_value_t = 1.0)]
        beta_factor: f64,
        #[arg(long, default_value = "visits")]
        size: SizeMeasure,
        #[arg(long)]
        out: PathBuf,
        /// Write a one-row comparison table here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare an original tree with a reduced one.
    Compare {
        original: PathBuf,
        reduced: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta_factor: f64,
        #[arg(long, default_value = "visits")]
        size: SizeMeasure,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce every tree of a directory under every algorithm and beta factor.
    Batch {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "local,two-stage-all,two-stage-stop,two-stage-v2")]
        algos: Vec<Algorithm>,
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25")]
        beta_factors: Vec<f64>,
        #[arg(long, default_value = "visits")]
        size: SizeMeasure,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a tree as Graphviz DOT. With `--algo`, the tree is reduced first
    /// and the reduced view is drawn.
    ExportDot {
        input: PathBuf,
        #[arg(long)]
        algo: Option<Algorithm>,
        #[arg(long, default_value_t = 1.0)]
        beta_factor: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check tree files against every structural invariant.
    Validate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Usage(m) => Failure::Usage(m),
            PipelineError::Reduction(e) => Failure::Usage(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<document::DocumentError> for Failure {
    fn from(e: document::DocumentError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            scenario,
            seed,
            budget,
            gamma,
            steps,
            rollout_depth,
            exploration,
            config,
            out,
        } => {
            let text = match &config {
                Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?),
                None => None,
            };
            let env = pipeline::scenario_env(&scenario, seed, text.as_deref())?;
            let search = SearchConfig {
                budget,
                gamma,
                exploration_weight: exploration,
                rollout_depth_cap: rollout_depth,
                seed,
                ..SearchConfig::default()
            };
            search.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let trees = pipeline::generate_episode(&env, &search, steps)?;
            let paths = pipeline::write_episode(&out, &trees)?;
            for p in paths {
                println!("{}", p.display());
            }
        }
        Command::Entropy { input, verify, nodes } => {
            let tree = document::read(&input)?;
            let reports = all_per_step_bounds(&tree);
            let ids: Vec<_> = if nodes { tree.preorder(tree.root()) } else { vec![tree.root()] };
            println!("path,entropy,depth,depth_lb,per_step_lower,per_step_upper,alphabet_used,nodes");
            for id in ids {
                let r = &reports[id.index()];
                let path: Vec<String> = tree.path(id).iter().map(|a| a.index().to_string()).collect();
                println!(
                    "root{}{},{},{},{},{},{},{},{}",
                    if path.is_empty() { "" } else { "/" },
                    path.join("/"),
                    r.entropy,
                    r.depth,
                    r.depth_lb,
                    r.per_step_lower,
                    r.per_step_upper,
                    r.alphabet_used,
                    r.nodes
                );
            }
            if verify {
                let oracle = all_subtree_entropies(&tree);
                let mut worst = 0.0f64;
                let mut bad = 0;
                for id in tree.ids() {
                    let d = (tree.node(id).entropy - oracle[id.index()]).abs();
                    worst = worst.max(d);
                    if !(d <= 1e-9) {
                        bad += 1;
                        eprintln!("mismatch at {:?}: stored {} recomputed {}", tree.path(id), tree.node(id).entropy, oracle[id.index()]);
                    }
                }
                if bad > 0 {
                    return Err(Failure::Runtime(format!("{bad} nodes differ from the recursive entropy")));
                }
                eprintln!("verified {} nodes, max difference {worst:e}", tree.len());
            }
        }
        Command::Reduce {
            input,
            algo,
            beta_factor,
            size,
            out,
            report,
        } => {
            let tree = document::read(&input)?;
            let reduced = pipeline::reduce_tree(&tree, algo, beta_factor, size)?;
            if reduced.outcome.degenerate {
                eprintln!("degenerate: tree has zero entropy, written unchanged");
            }
            document::write(&out, &reduced.tree)?;
            if let Some(p) = report {
                let row = TableRow {
                    tree: None,
                    algorithm: Some(algo),
                    beta_factor,
                    row: reduced.row,
                };
                write_out(Some(&p), &table::to_string(&[row]))?;
            }
            eprintln!(
                "{}: {} removals, trade-off {} -> {}, visits {} -> {}",
                algo,
                reduced.outcome.applied.len(),
                reduced.outcome.initial_tradeoff,
                reduced.outcome.final_tradeoff,
                tree.root_node().visits,
                reduced.tree.root_node().visits
            );
        }
        Command::Compare {
            original,
            reduced,
            beta_factor,
            size,
            out,
        } => {
            let a = document::read(&original)?;
            let b = document::read(&reduced)?;
            let row = TableRow {
                tree: None,
                algorithm: None,
                beta_factor,
                row: pipeline::compare_trees(&a, &b, beta_factor, size)?,
            };
            write_out(out.as_deref(), &table::to_string(&[row]))?;
        }
        Command::Batch {
            input,
            algos,
            beta_factors,
            size,
            out,
        } => {
            if algos.is_empty() || beta_factors.is_empty() {
                return Err(Failure::Usage("need at least one algorithm and beta factor".into()));
            }
            let trees = pipeline::load_dir(&input)?;
            let result = pipeline::run_batch(&trees, &algos, &beta_factors, size, pipeline::thread_cap()?)?;
            for p in pipeline::write_batch(&out, &result)? {
                println!("{}", p.display());
            }
        }
        Command::ExportDot {
            input,
            algo,
            beta_factor,
            out,
        } => {
            let mut tree = document::read(&input)?;
            let text = match algo {
                Some(a) => {
                    reduce(&mut tree, a, beta_factor, SizeMeasure::Visits).map_err(|e| Failure::Usage(e.to_string()))?;
                    export_dot(&tree, true)
                }
                None => export_dot(&tree, false),
            };
            write_out(out.as_deref(), &text)?;
        }
        Command::Validate { inputs } => {
            let mut failed = 0;
            for p in &inputs {
                match document::read(p) {
                    Ok(t) => println!("{}: ok ({} nodes)", p.display(), t.len()),
                    Err(e) => {
                        failed += 1;
                        println!("{}: {e}", p.display());
                    }
                }
            }
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} of {} files invalid", inputs.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}
