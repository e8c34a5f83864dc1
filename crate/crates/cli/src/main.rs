mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] maxsr::Error),
}

#[derive(Parser)]
#[command(name = "maxsr", version, about = "Train and run maxout super-resolution networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand; they override `--config` values.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Flat `key = value` file with any of the options below
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// toy, espcn-mu, vdsr-mu or dnsr
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Toy activation: relu, lrelu, elu, mu, mu-d, mu-m, mu-s, mu-r:<n>
    #[arg(long, global = true)]
    activation: Option<String>,
    /// Toy filter count
    #[arg(long, global = true)]
    width: Option<String>,
    /// Toy conv count
    #[arg(long, global = true)]
    depth: Option<String>,
    #[arg(long, global = true)]
    scale: Option<String>,
    /// Training images: a directory or a manifest file
    #[arg(long, global = true)]
    train_dir: Option<PathBuf>,
    /// Test images: a directory or a manifest file
    #[arg(long, global = true)]
    test_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    iters: Option<String>,
    #[arg(long, global = true)]
    batch: Option<String>,
    /// HR crop size
    #[arg(long, global = true)]
    crop: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    threads: Option<String>,
    /// Accepted for compatibility; runs are always reproducible
    #[arg(long, global = true)]
    deterministic: bool,
    /// Output directory (checkpoints/, logs/, reports/)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Common {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        let mut flags = Settings::default();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let pairs = [
            ("preset", self.preset.clone()),
            ("activation", self.activation.clone()),
            ("width", self.width.clone()),
            ("depth", self.depth.clone()),
            ("scale", self.scale.clone()),
            ("train-dir", path(&self.train_dir)),
            ("test-dir", path(&self.test_dir)),
            ("iters", self.iters.clone()),
            ("batch", self.batch.clone()),
            ("crop", self.crop.clone()),
            ("seed", self.seed.clone()),
            ("threads", self.threads.clone()),
            ("deterministic", self.deterministic.then(|| "true".to_string())),
            ("out", path(&self.out)),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                flags.set(k, &v).map_err(CliError::Usage)?;
            }
        }
        s.merge(&flags);
        Ok(s)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write checkpoints and a loss log
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Score a checkpoint, or an interpolation baseline, on a test set
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "baseline")]
        checkpoint: Option<PathBuf>,
        /// Score plain interpolation instead: bicubic or nearest
        #[arg(long)]
        baseline: Option<String>,
        /// Name used in reports (defaults to the test directory name)
        #[arg(long)]
        name: Option<String>,
    },
    /// Upscale one image with a checkpoint
    Upscale {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train toy networks over activation kinds and widths
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated activation kinds
        #[arg(long, default_value = "relu,mu")]
        kinds: String,
        /// Comma-separated widths
        #[arg(long)]
        widths: String,
        /// Comma-separated seeds
        #[arg(long, default_value = "0,1,2")]
        seeds: String,
    },
    /// Compare backprop with finite differences
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Every activation kind as a toy net plus every full preset
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Parameters sampled per full-size preset
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Per-channel activation ratios of every activation layer
    Sparsity {
        #[command(flatten)]
        common: Common,
        /// Uses a freshly initialised network when omitted
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Pixels per cell of the grid image
        #[arg(long, default_value_t = 8)]
        cell: usize,
    },
    /// Print the parameter count of a preset
    Params {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { common } => commands::train(&common.settings()?),
        Command::Eval {
            common,
            checkpoint,
            baseline,
            name,
        } => commands::eval(&common.settings()?, checkpoint, baseline, name),
        Command::Upscale {
            common,
            checkpoint,
            input,
            output,
        } => commands::upscale(&common.settings()?, &checkpoint, &input, &output),
        Command::Sweep {
            common,
            kinds,
            widths,
            seeds,
        } => commands::sweep(&common.settings()?, &kinds, &widths, &seeds),
        Command::Gradcheck {
            common,
            all,
            eps,
            samples,
        } => commands::gradcheck(&common.settings()?, all, eps, samples),
        Command::Sparsity {
            common,
            checkpoint,
            input,
            cell,
        } => commands::sparsity(&common.settings()?, checkpoint, &input, cell),
        Command::Params { common } => commands::params(&common.settings()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
