use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semilag::scenario::{self, ScenarioConfig};
use semilag::Error;

#[derive(Parser)]
#[command(name = "semilag", version, about = "Conservative semi-Lagrangian advection scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a TOML config.
    Run {
        config: PathBuf,
        /// Cap on worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Use the limiter formulas exactly as originally printed.
        #[arg(long)]
        literal_paper_mode: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::CflViolation { .. } => 3,
        Error::Config(_) | Error::InvalidGrid(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        config,
        threads,
        output,
        literal_paper_mode,
    } = cli.command;

    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let result = ScenarioConfig::load(&config).and_then(|mut cfg| {
        if literal_paper_mode {
            cfg.limiter.literal_paper_mode = true;
        }
        if let Some(dir) = output {
            cfg.output = dir;
        }
        let dir = cfg.output.clone();
        scenario::run(&cfg, Some(&dir)).map(|s| (s, dir))
    });

    match result {
        Ok((s, dir)) => {
            println!("completed {} steps, t = {:e}, output in {}", s.steps, s.time, dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
