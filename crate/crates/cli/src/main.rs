mod args;
mod commands;
mod failure;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use failure::{Failure, Outcome};

fn run(cli: &Cli) -> Outcome {
  if let Some(n) = cli.threads {
    if n == 0 {
      return Err(Failure::usage("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
      .num_threads(n)
      .build_global()
      .map_err(|e| Failure::usage(format!("cannot start {n} worker threads: {e}")))?;
  }
  match &cli.command {
    Command::Partition(a) => commands::partition(a),
    Command::Coarsen(a) => commands::coarsen(a),
    Command::Estimate(a) => commands::estimate(a),
    Command::PredictGop(a) => commands::predict_gop(a),
    Command::Compare(a) => commands::compare(a),
    Command::Bdrate(a) => commands::bdrate(a),
  }
}

fn main() -> ExitCode {
  let cli = match Cli::try_parse() {
    Ok(cli) => cli,
    Err(e) => {
      let _ = e.print();
      return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
    }
  };
  match run(&cli) {
    Ok(()) => ExitCode::SUCCESS,
    Err(f) => {
      eprintln!("cuboid: {f}");
      f.exit_code()
    }
  }
}
