use clap::{Parser, Subcommand};
use solsym_cli::{experiments, init_threads, report, run_experiment, CliError, RunRequest, EXIT_ASSERTION, EXIT_CONFIG, EXIT_PASS};
use solsym_cli::table::Cell;
use std::path::PathBuf;
use std::process::ExitCode;

/// Run and summarize reproducible numerical experiments.
///
/// Exit status: 0 when every assertion passes, 2 when one fails, 1 on a
/// configuration or input error. The worker thread count is read from
/// SOLSYM_THREADS.
#[derive(Parser)]
#[command(name = "solsym", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one registered experiment and archive its artifacts.
    Run {
        name: String,
        /// Flat JSON parameter overrides, or a manifest.json to replay.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Artifact directory [default: runs/<name>-<unix time>].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the pass/fail table of an artifact directory and write summary.json.
    Report { dir: PathBuf },
    /// List registered experiments.
    List,
    /// Print the default parameters of an experiment as JSON.
    Defaults { name: String },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG as u8)
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        return fail(e);
    }
    match cli.command {
        Command::Run { name, config, out, seed } => match run_experiment(&RunRequest { name, config, out, seed }) {
            Ok(r) => {
                for a in &r.assertions {
                    let v = if a.pass { "PASS" } else { "FAIL" };
                    println!("{v} {} = {} ({} {})", a.name, a.measured.cell(), a.relation.symbol(), a.threshold.cell());
                }
                println!("artifacts: {}", r.dir.display());
                code(r.exit_code())
            }
            Err(e) => fail(e),
        },
        Command::Report { dir } => match report::report(&dir) {
            Ok(s) => {
                print!("{}", s.to_text());
                code(if s.all_pass() { EXIT_PASS } else { EXIT_ASSERTION })
            }
            Err(e) => fail(e),
        },
        Command::List => {
            for n in experiments::NAMES {
                println!("{n}");
            }
            code(EXIT_PASS)
        }
        Command::Defaults { name } => match experiments::defaults(&name) {
            Some(d) => {
                println!("{}", serde_json::to_string_pretty(&d).expect("defaults serialize"));
                code(EXIT_PASS)
            }
            None => fail(CliError::UnknownExperiment(name)),
        },
    }
}
