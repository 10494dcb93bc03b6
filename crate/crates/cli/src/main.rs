use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use layerwalk::experiment::{self, parse_config, run_experiment, validate_suite, VERSION};
use layerwalk::Error;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "layerwalk", version = VERSION, about = "Random walks on randomly oriented layered lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Run { config: PathBuf },
    /// Run the fast self-check suite
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the version
    Version,
}

fn fail(code: u8, e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn run(path: PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let config = match parse_config(&text).and_then(|c| c.with_env_overrides()) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    match run_experiment(&config) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            checks_exit(&report.checks)
        }
        Err(e) if e.is_config() => fail(EXIT_CONFIG, &e),
        Err(e) => fail(EXIT_RUNTIME, &e),
    }
}

fn checks_exit(checks: &[experiment::CheckResult]) -> ExitCode {
    let mut ok = true;
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<22} {:<12.6} {}", c.name, c.value, c.detail);
        ok &= c.passed;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        for c in checks.iter().filter(|c| !c.passed) {
            eprintln!("check failed: {}", c.name);
        }
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => run(config),
        Command::Validate { seed } => match validate_suite(seed) {
            Ok(checks) => checks_exit(&checks),
            Err(e) => fail(EXIT_RUNTIME, &e),
        },
        Command::Version => {
            println!("layerwalk {VERSION}");
            ExitCode::SUCCESS
        }
    }
}

