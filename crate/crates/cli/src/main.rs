use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use camp_cli::commands::{self, Report};
use camp_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "camp", version, about = "Train, certify and attack smoothed cart-pole Q-agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Train an agent and write its checkpoint and validation log.
    Train(Args),
    /// Collect smoothed returns and write the certified-return curve.
    Certify(Args),
    /// Run the budgeted PGD/APGD attack over a grid of budgets.
    Attack(Args),
    /// Evaluate mean return on noisy observations.
    Eval(Args),
    /// Report the smallest top-1/runner-up Q-gap seen during evaluation.
    Qgap(Args),
    /// Compute the global and per-step certified radii.
    Radii(Args),
}

#[derive(clap::Args, Clone)]
struct Args {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Checkpoint to read (or, for `train`, to write).
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
}

fn run(command: &Command) -> Result<Report, CliError> {
    let (Command::Train(args)
    | Command::Certify(args)
    | Command::Attack(args)
    | Command::Eval(args)
    | Command::Qgap(args)
    | Command::Radii(args)) = command;
    let mut cfg = RunConfig::load(&args.config, args.seed)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(ckpt) = &args.checkpoint {
        cfg.checkpoint = Some(ckpt.clone());
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match command {
        Command::Train(_) => commands::train_cmd(&cfg),
        Command::Certify(_) => commands::certify_cmd(&cfg),
        Command::Attack(_) => commands::attack_cmd(&cfg),
        Command::Eval(_) => commands::eval_cmd(&cfg),
        Command::Qgap(_) => commands::qgap_cmd(&cfg),
        Command::Radii(_) => commands::radii_cmd(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(report) => {
            // A closed stdout (e.g. piped into `head`) is not a failure of the run.
            let mut out = std::io::stdout().lock();
            let lines = report.lines.iter().cloned();
            let files = report.files.iter().map(|f| format!("wrote {}", f.display()));
            for line in lines.chain(files) {
                if writeln!(out, "{line}").is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("camp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
