mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leafscan_core::ForestParams;

use failure::Failure;

/// Grape-leaf disease classification: frozen VGG16 features and a random forest.
#[derive(Parser)]
#[command(name = "leafscan", version)]
struct Cli {
    /// Worker threads for extraction and training (0 = one per core).
    #[arg(long, env = "LEAFSCAN_THREADS", default_value_t = 0, global = true)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the layer table of a GVGG weight file and validate it.
    Inspect {
        #[arg(long)]
        weights: PathBuf,
    },
    /// Extract VGG16 features for every image under DIR/<class>/ into a GFCH cache.
    Extract {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = leafscan_core::vgg::INPUT_SIZE)]
        size: usize,
    },
    /// Split a feature cache, train a forest, and evaluate it on the held-out part.
    TrainEval {
        #[arg(long)]
        cache: PathBuf,
        /// Fraction of each class used for training.
        #[arg(long, default_value_t = 0.8)]
        ratio: f64,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract (or reuse cached) features, then train and evaluate at each ratio.
    Pipeline {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.6, 0.7, 0.8])]
        ratios: Vec<f64>,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long, default_value_t = leafscan_core::vgg::INPUT_SIZE)]
        size: usize,
        /// Re-extract features even when a matching cache exists.
        #[arg(long)]
        fresh: bool,
    },
    /// Write randomly initialised VGG16 weights (for smoke tests without real weights).
    SynthWeights {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct ForestArgs {
    /// Seed for the split and for every tree.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Unbounded when omitted.
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    min_split: usize,
    /// Defaults to floor(sqrt(feature dim)).
    #[arg(long)]
    features_per_split: Option<usize>,
    /// Train every tree on the full training set instead of a bootstrap sample.
    #[arg(long)]
    no_bootstrap: bool,
}

impl ForestArgs {
    fn params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            max_depth: self.max_depth,
            min_samples_split: self.min_split,
            features_per_split: self.features_per_split,
            seed: self.seed,
            bootstrap: !self.no_bootstrap,
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::internal(format!("cannot start thread pool: {e}")))?;
    }
    match cli.command {
        Command::Inspect { weights } => commands::inspect(&weights),
        Command::Extract {
            data,
            weights,
            out,
            size,
        } => commands::extract(&data, &weights, &out, size),
        Command::TrainEval {
            cache,
            ratio,
            forest,
            out,
        } => commands::train_eval(&cache, ratio, &forest.params(), &out),
        Command::Pipeline {
            data,
            weights,
            out,
            ratios,
            forest,
            size,
            fresh,
        } => commands::pipeline(&commands::PipelineConfig {
            data,
            weights,
            out,
            ratios,
            params: forest.params(),
            size,
            fresh,
        }),
        Command::SynthWeights { out, seed } => commands::synth_weights(&out, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        // the panic hook has already printed the message
        Err(_) => ExitCode::from(failure::INTERNAL),
    }
}
