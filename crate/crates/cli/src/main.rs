use std::io::Read;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use catmat_cli::commands::{self, EvaluateOptions};
use catmat_cli::{service, CliError, TrainSettings};
use catmat_core::evaluate::SplitName;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "catmat",
    version,
    about = "Suggests CATMAT class codes for purchase descriptions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Validation,
    Test,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and print its validation accuracy.
    Train {
        /// Labeled records, .jsonl or .csv.
        #[arg(long)]
        data: PathBuf,
        /// TOML training configuration; defaults apply without one.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a model on the validation or test split of its corpus.
    Evaluate {
        #[arg(long, env = "CATMAT_MODEL")]
        model: PathBuf,
        /// The same data file the model was trained from.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "validation")]
        split: SplitArg,
        /// Report top-k accuracy for k = 1..=K.
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        /// Evaluate the test split again.
        #[arg(long)]
        force: bool,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Read one description from stdin and print suggestions as JSON.
    Predict {
        #[arg(long, env = "CATMAT_MODEL")]
        model: PathBuf,
        /// JSON object mapping class codes to names.
        #[arg(long, env = "CATMAT_LABELS")]
        labels: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "CATMAT_MODEL")]
        model: PathBuf,
        #[arg(long, env = "CATMAT_LABELS")]
        labels: Option<PathBuf>,
    },
}

fn io_error(context: &str) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        context: context.to_string(),
        source,
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { data, config, out } => {
            let settings = match config {
                Some(path) => TrainSettings::load(&path)?,
                None => TrainSettings::default(),
            };
            let outcome = commands::train(&data, &settings, &out)?;
            let s = outcome.stats;
            println!(
                "records: {} read, {} labeled, {} discarded ({} empty, {} unlabeled, {} services), {} malformed",
                s.read,
                s.labeled,
                s.discarded,
                s.discarded_empty,
                s.discarded_unlabeled,
                s.discarded_service,
                s.malformed
            );
            let [train, validation, test] = outcome.split_sizes;
            println!("split: {train} train, {validation} validation, {test} test");
            for (code, count) in &outcome.report.dropped_classes {
                println!("dropped class {code}: {count} training documents");
            }
            if outcome.sweep.len() > 1 {
                for p in &outcome.sweep {
                    println!(
                        "C = {}: top-1 {:.4}, top-3 {:.4}",
                        p.c, p.validation_top1, p.validation_top3
                    );
                }
            }
            println!(
                "model: {} classes, {} words, {} pairs, C = {}",
                outcome.classes, outcome.report.vocabulary_size, outcome.report.pairs, outcome.chosen.c
            );
            println!(
                "wrote {} ({} bytes, version {})",
                out.display(),
                outcome.bytes,
                outcome.model_version
            );
            println!("validation top-1 accuracy: {:.4}", outcome.chosen.validation_top1);
            println!("validation top-3 accuracy: {:.4}", outcome.chosen.validation_top3);
        }
        Command::Evaluate {
            model,
            data,
            split,
            k,
            force,
            report,
        } => {
            let split = match split {
                SplitArg::Validation => SplitName::Validation,
                SplitArg::Test => SplitName::Test,
            };
            let opts = EvaluateOptions {
                model,
                data,
                split,
                max_k: k as usize,
                force,
            };
            let result = commands::evaluate(&opts)?;
            let json = to_json(&result);
            if let Some(path) = report {
                std::fs::write(&path, &json).map_err(io_error("evaluate: cannot write report"))?;
            }
            println!("{json}");
            eprint!("{}", result.to_table());
        }
        Command::Predict { model, labels, k } => {
            let mut description = String::new();
            std::io::stdin()
                .read_to_string(&mut description)
                .map_err(io_error("predict: cannot read stdin"))?;
            let response = commands::predict(&model, labels.as_deref(), &description, k)?;
            println!("{}", to_json(&response));
        }
        Command::Serve {
            port,
            host,
            model,
            labels,
        } => {
            let runtime = tokio::runtime::Runtime::new().map_err(io_error("serve: cannot start runtime"))?;
            runtime.block_on(service::serve(SocketAddr::new(host, port), model, labels))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
