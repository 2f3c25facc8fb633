use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use primasm_cli::commands;
use primasm_cli::config::{extract_overrides, load, output_dir, RunConfig};
use primasm_cli::error::{CliError, Result};

/// Decompose 3D point clouds into primitive assemblies.
///
/// Any configuration key can be overridden with `--<section>.<key> VALUE`,
/// e.g. `--model.layers 4` or `--train.weights.cd 0`.
#[derive(Parser)]
#[command(name = "primasm", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; fills every module seed not set explicitly.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Output directory (default: $PRIMASM_OUT/<command>, else runs/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    GenData,
    /// Train a model.
    Train {
        /// Dataset file or directory (overrides paths.data).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Generate assemblies for point clouds.
    Infer {
        /// Point file (.bin, .ply), record file (.json), dataset (.jsonl) or directory.
        input: PathBuf,
        /// Model checkpoint (overrides paths.checkpoint).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Evaluate predicted assemblies against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Canonicalize the primitives of an assembly or dataset file.
    Canon {
        input: PathBuf,
        /// Output file (default: <out>/<input file name>).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Export assemblies as OBJ meshes.
    ExportMesh {
        input: PathBuf,
        /// `.obj` file for a single assembly, otherwise a directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        resolution: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenData => "gen-data",
            Command::Train { .. } => "train",
            Command::Infer { .. } => "infer",
            Command::Eval { .. } => "eval",
            Command::Canon { .. } => "canon",
            Command::ExportMesh { .. } => "export-mesh",
        }
    }
}

fn run(args: Vec<String>) -> Result<()> {
    let (args, overrides) = extract_overrides(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.render().to_string();
            return Err(CliError::validation(msg.lines().next().unwrap_or("bad arguments").trim_start_matches("error: ")));
        }
    };
    let cfg: RunConfig = load(cli.config.as_deref(), cli.seed, &overrides)?;
    let out = output_dir(cli.out.as_deref(), &cfg, cli.command.name());
    match &cli.command {
        Command::GenData => commands::gen_data(&cfg, &out),
        Command::Train { data, resume } => commands::train(&cfg, &out, data.as_deref(), resume.as_deref()),
        Command::Infer { input, checkpoint } => commands::infer(&cfg, &out, input, checkpoint.as_deref()),
        Command::Eval { pred, gt } => {
            let reports = commands::eval(&cfg, &out, pred, gt)?;
            log::info!("evaluated {} samples into {}", reports.len(), out.display());
            Ok(())
        }
        Command::Canon { input, output } => {
            let target = match output {
                Some(p) => p.clone(),
                None => commands::canon_output(input, &out)?,
            };
            commands::canon(input, &target)
        }
        Command::ExportMesh { input, output, resolution } => {
            let target = output.clone().unwrap_or_else(|| out.clone());
            commands::export_mesh(input, &target, *resolution)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
