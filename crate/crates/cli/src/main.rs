//! `drawseg` command line: synthesize, vectorize, train, predict, evaluate and render.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use config::ConfigArgs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<drawseg::Error> for CliError {
    fn from(e: drawseg::Error) -> Self {
        use drawseg::Error as E;
        match e {
            E::Io { path, source } => CliError::Io { path, source },
            E::Unreadable { .. } => CliError::Io {
                path: PathBuf::new(),
                source: std::io::Error::other(e.to_string()),
            },
            E::Config(_) | E::UnknownMethod(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "drawseg", version, about = "Vectorize engineering drawings and classify their components")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded corpus of synthetic drawings with ground truth
    Synth {
        /// Number of drawings
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Seed of the first drawing; drawing i uses seed + i
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
    },
    /// Vectorize a drawing, or every drawing of a corpus, into graph files
    Vectorize {
        /// Drawing image (PNG or PNM), or a corpus directory with index.json
        input: PathBuf,
        /// Ground-truth color image used to label a single drawing
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Graph file, or output directory for a corpus
        #[arg(long)]
        out: PathBuf,
        /// Also write an SVG of the fitted components
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train a classifier on labeled graph files or a corpus directory
    Train {
        /// Directory of *.graph.json files, or a corpus directory with index.json
        data: PathBuf,
        /// Model file
        #[arg(long)]
        out: PathBuf,
        /// History file; defaults to the model path with .history.json
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Predict node classes of a graph file or a directory of graph files
    Predict {
        /// Graph file or directory of *.graph.json files
        graph: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Labels file, or output directory for a graph directory
        #[arg(long)]
        out: PathBuf,
        /// SVG overlay colored by prediction (single graph only)
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Score predictions against labeled graphs, or a confusion matrix file
    Eval {
        /// Labels file or directory of *.labels.json files
        #[arg(long, required_unless_present = "confusion")]
        pred: Option<PathBuf>,
        /// Labeled graph file or directory of *.graph.json files
        #[arg(long, required_unless_present = "confusion")]
        truth: Option<PathBuf>,
        /// JSON confusion matrix (rows are ground truth) to score directly
        #[arg(long, conflicts_with_all = ["pred", "truth"])]
        confusion: Option<PathBuf>,
        /// Task: three (contour/text/dimension), text (text vs rest) or contour (contour vs rest)
        #[arg(long, default_value = "three")]
        task: String,
        /// Also write the report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a graph file as SVG, colored by labels or predictions
    Render {
        graph: PathBuf,
        /// Labels file to color by instead of the graph's own labels
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        stroke_width: f64,
    },
}

fn parse() -> Result<Cli, clap::Error> {
    let keys = config::keys_help();
    let mut cmd = Cli::command().after_help(keys.clone());
    for name in ["synth", "vectorize", "train", "predict", "eval", "render"] {
        let k = keys.clone();
        cmd = cmd.mut_subcommand(name, move |s| s.after_help(k));
    }
    Cli::from_arg_matches(&cmd.try_get_matches()?)
}

fn main() -> ExitCode {
    let cli = match parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
