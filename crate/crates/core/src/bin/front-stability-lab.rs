use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use front_lab::config::RunConfig;
use front_lab::pipeline::{exit_code, run_pipeline, Stage};

#[derive(Parser)]
#[command(name = "front-stability-lab", version, about = "Planar front stability pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one stage, or `all`, from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(Stage::NAMES))]
        stage: String,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("FSL_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("cannot size the thread pool: {e}");
        }
    }
    let Command::Run { config, stage, out, seed } = cli.command;
    let result = RunConfig::load(&config).and_then(|mut cfg| {
        if let Some(dir) = out {
            cfg.output_dir = dir;
        }
        if let Some(seed) = seed {
            cfg.seed = seed;
        }
        run_pipeline(&cfg, stage.parse()?)
    });
    match result {
        Ok(outcome) => {
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            if let Some(report) = &outcome.report {
                print!("{}", report.summary_table());
                for id in report.failing() {
                    eprintln!("FAILED {id}");
                }
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
