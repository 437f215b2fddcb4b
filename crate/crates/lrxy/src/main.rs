use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrxy::{execute, CliError, Command, RunConfig, RunOptions};

#[derive(Parser)]
#[command(name = "lrxy", version, about = "Long-range XY chain dynamics and Levy-flight transport")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the experiment described by the configuration.
    Run(RunArgs),
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write only the coupling matrix.
    Couplings(RunArgs),
    /// Fit the scaling collapse to an existing correlation CSV.
    Collapse {
        #[command(flatten)]
        run: RunArgs,
        /// Correlation CSV; overrides `analysis.input`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory; overrides `output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn options(args: &RunArgs) -> RunOptions {
    RunOptions {
        seed: args.seed,
        workers: args.workers,
        out: args.out.clone(),
        base_dir: args.config.parent().map(Path::to_path_buf),
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let (command, args, input) = match cli.command {
        Sub::Validate { config } => {
            RunConfig::parse(&read(&config)?).map_err(CliError::Config)?;
            println!("{}: ok", config.display());
            return Ok(());
        }
        Sub::Run(a) => (Command::Run, a, None),
        Sub::Couplings(a) => (Command::Couplings, a, None),
        Sub::Collapse { run, input } => (Command::Collapse, run, input),
    };
    let text = read(&args.config)?;
    let mut config = RunConfig::parse_unchecked(&text).map_err(CliError::Config)?;
    let mut opts = options(&args);
    if let Some(input) = input {
        // resolved against the working directory, not the config file
        let abs = std::env::current_dir().map(|d| d.join(&input)).unwrap_or(input);
        config.analysis.input = Some(abs);
    }
    config.check(&text).map_err(CliError::Config)?;
    if command == Command::Collapse && config.analysis_alpha().is_none() {
        return Err(CliError::Config(vec![lrxy::Diagnostic {
            field: "analysis.alpha".into(),
            line: None,
            message: "the collapse fit needs alpha".into(),
        }]));
    }
    opts.workers = opts.workers.max(1);
    let dir = execute(command, &config, &text, &opts)?;
    println!("{}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
