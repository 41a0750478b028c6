use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use unfold_cli::{run, Command, RunOptions};

#[derive(Parser)]
#[command(
    name = "unfold",
    version,
    about = "Wavelet-Galerkin unfolding of folded Poisson data"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fold the intensity and draw seeded Poisson counts for every (t, replicate).
    Simulate(Common),
    /// Fit the exponential-family estimate to one count file.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Count CSV; overrides the config's `counts`.
        #[arg(long)]
        counts: Option<PathBuf>,
    },
    /// Monte Carlo sweep over t and replicates with losses, rate fit and plots.
    Experiment(Common),
    /// Theory constants, ellipticity and lemma checks.
    Diagnose(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Omit timestamps and timings so reruns are byte-identical.
    #[arg(long)]
    no_timestamp: bool,
}

impl Common {
    fn options(self, counts: Option<PathBuf>) -> RunOptions {
        RunOptions {
            config: self.config,
            out: self.out,
            seed: self.seed,
            no_timestamp: self.no_timestamp,
            counts,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match cli.command {
        Cmd::Simulate(c) => (Command::Simulate, c.options(None)),
        Cmd::Estimate { common, counts } => (Command::Estimate, common.options(counts)),
        Cmd::Experiment(c) => (Command::Experiment, c.options(None)),
        Cmd::Diagnose(c) => (Command::Diagnose, c.options(None)),
    };
    match run(command, &opts) {
        Ok(summary) => {
            println!("{}: {}", command.name(), summary.message);
            println!(
                "wrote {} files to {}",
                summary.files.len(),
                summary.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
