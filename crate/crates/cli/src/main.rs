mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::{Context, Failure};

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    if let Some(jobs) = g.jobs {
        if jobs == 0 {
            return Err(Failure {
                code: 1,
                message: "--jobs must be at least 1".into(),
            });
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let lenient = if g.lenient {
        Some(true)
    } else if g.strict {
        Some(false)
    } else {
        None
    };
    let ctx = Context {
        seed: g.seed,
        lenient,
        jobs: g.jobs,
    };
    match &cli.command {
        Command::Ingest(a) => commands::ingest_cmd(a, &ctx)?,
        Command::Corpus(a) => commands::corpus_cmd(a, &ctx)?,
        Command::TrainEmbeddings(a) => commands::train_embeddings_cmd(a, &ctx)?,
        Command::BuildDataset(a) => commands::build_dataset_cmd(a, &ctx)?,
        Command::TrainClassifier(a) => commands::train_classifier_cmd(a, &ctx)?,
        Command::Predict(a) => commands::predict_cmd(a, &ctx)?,
        Command::Evaluate(a) => commands::evaluate_cmd(a)?,
        Command::CompareExternal(a) => commands::compare_external_cmd(a)?,
        Command::Synth(a) => commands::synth_cmd(a, &ctx)?,
        Command::Pipeline(a) => commands::pipeline_cmd(a, &ctx)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
