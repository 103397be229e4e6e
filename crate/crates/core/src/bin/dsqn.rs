use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsqn::commands::{run, Command, RunOptions};
use dsqn::Error;

/// Deep spiking Q-networks: training, evaluation and analysis.
#[derive(Parser)]
#[command(name = "dsqn", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a Q-network on an environment.
    Train(Common),
    /// Evaluate a checkpoint with the epsilon-greedy protocol.
    Eval(Common),
    /// Compare backward gradients with finite differences.
    Gradcheck(Common),
    /// Sweep a neuron's firing rate over constant inputs.
    Ratecurve(Common),
    /// Convert a ReLU checkpoint into an IF spiking network.
    Convert(Common),
    /// Compare a converted network with its source over windows.
    Audit(Common),
    /// Synaptic-operation cost of a direct and a converted network.
    Energy(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults apply to absent fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a config field, e.g. `--set trainer.lr=0.001`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let first = first.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error: kind=usage msg={first:?}");
            return ExitCode::from(2);
        }
    };
    let (command, common) = match cli.command {
        Cmd::Train(c) => (Command::Train, c),
        Cmd::Eval(c) => (Command::Eval, c),
        Cmd::Gradcheck(c) => (Command::Gradcheck, c),
        Cmd::Ratecurve(c) => (Command::Ratecurve, c),
        Cmd::Convert(c) => (Command::Convert, c),
        Cmd::Audit(c) => (Command::Audit, c),
        Cmd::Energy(c) => (Command::Energy, c),
    };
    let opts = RunOptions {
        config: common.config,
        seed: common.seed,
        out: common.out,
        sets: common.sets,
    };
    match run(command, &opts) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                Error::Config { path, message } => {
                    eprintln!("error: kind=config path={path:?} msg={message:?}")
                }
                other => eprintln!("error: kind={} msg={:?}", other.kind(), other.to_string()),
            }
            ExitCode::from(if matches!(e, Error::Config { .. }) { 2 } else { 1 })
        }
    }
}
