use std::process::ExitCode;

use bdsm_bench::cli::{run, Cli, Command};
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BDSM_LOG", "info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(report) => {
                let solved = report.queries.iter().filter(|q| q.solved).count();
                match report.mean_latency() {
                    Some(m) => println!("{solved}/{} queries solved, mean latency {m:.6}s", report.queries.len()),
                    None => println!("{solved}/{} queries solved", report.queries.len()),
                }
                println!("reports written to {}", args.out.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
