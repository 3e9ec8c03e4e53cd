//! `actilabel` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 stage failure,
//! 3 partial grid (or sweep) failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

#[derive(Debug, Parser)]
#[command(name = "actilabel", version, about = "Cross-domain activity label transfer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Graph construction options shared by the stage subcommands.
#[derive(Debug, Clone, Args)]
pub struct GraphOpts {
    /// Neighbours per observation; defaults to a fraction of n.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.02)]
    pub k_fraction: f64,
    /// Use raw features instead of z-scores.
    #[arg(long)]
    pub no_standardize: bool,
    /// Principal components to keep.
    #[arg(long)]
    pub reduce_dim: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic source/target pair of feature CSVs.
    Synth {
        /// JSON synthetic spec.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Window a raw sensor CSV and extract per-window features.
    Features {
        #[arg(long)]
        input: PathBuf,
        /// JSON column schema.
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        window: f64,
        #[arg(long, default_value_t = 0.25)]
        overlap: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the mutual k-NN network graph of a feature CSV.
    Graph {
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        opts: GraphOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find core clusters of a feature CSV.
    Cluster {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k0: Option<usize>,
        #[command(flatten)]
        opts: GraphOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Abstract a clustered feature CSV into a dependency graph.
    Depgraph {
        #[arg(long)]
        features: PathBuf,
        /// Partition CSV; omit with `--from-labels`.
        #[arg(long, required_unless_present = "from_labels")]
        partition: Option<PathBuf>,
        /// Cluster by the label column (source side).
        #[arg(long, conflicts_with = "partition")]
        from_labels: bool,
        #[command(flatten)]
        opts: GraphOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map target clusters onto source classes.
    Transfer {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        source: PathBuf,
        /// Target partition; when given, per-observation labels are written too.
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted labels against a labeled feature or label CSV.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Also report NMI and purity of this partition.
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every ordered domain pair of a scenario grid.
    Grid {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the pipeline for several k values.
    SweepK {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
        #[arg(long, default_value = "")]
        dataset: String,
        #[arg(long, default_value = "")]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Synth { spec, seed, out } => commands::synth(&spec, seed, &out),
        Command::Features {
            input,
            schema,
            window,
            overlap,
            out,
        } => commands::features(&input, &schema, window, overlap, &out),
        Command::Graph { features, opts, out } => commands::graph(&features, &opts, &out),
        Command::Cluster {
            features,
            m,
            k0,
            opts,
            out,
        } => commands::cluster(&features, m, k0, &opts, &out),
        Command::Depgraph {
            features,
            partition,
            from_labels: _,
            opts,
            out,
        } => commands::depgraph(&features, partition.as_deref(), &opts, &out),
        Command::Transfer {
            target,
            source,
            partition,
            out,
        } => commands::transfer(&target, &source, partition.as_deref(), &out),
        Command::Evaluate {
            pred,
            truth,
            partition,
            out,
        } => commands::evaluate(&pred, &truth, partition.as_deref(), out.as_deref()),
        Command::Run {
            config,
            k,
            m,
            seed,
            out,
        } => commands::run(&config, k, m, seed, out),
        Command::Grid { grid, seed, out } => commands::grid(&grid, seed, &out),
        Command::SweepK {
            config,
            ks,
            dataset,
            scenario,
            out,
        } => commands::sweep_k(&config, &ks, &dataset, &scenario, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
