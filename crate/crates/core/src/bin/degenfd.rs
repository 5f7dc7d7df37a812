use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use degenfd::acceptance;
use degenfd::config::{parse_config, StudyConfig, StudyMode};
use degenfd::presets::preset_names;
use degenfd::study::{emit_report, run_study, ReportFormat};

#[derive(Parser)]
#[command(
    name = "degenfd",
    about = "Finite-difference solver and convergence-study harness for \
             possibly degenerate parabolic and elliptic problems on a \
             periodic lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Study configuration file
    #[arg(long)]
    config: std::path::PathBuf,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Report format
    #[arg(long, value_parser = ["csv", "table"], default_value = "table")]
    format: String,
    /// Suppress wall-clock columns for byte-stable output
    #[arg(long)]
    deterministic: bool,
    /// Worker threads (currently solves run sequentially)
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem on its base mesh
    Solve(RunArgs),
    /// Run the study mode selected by the configuration
    Study(RunArgs),
    /// Run an expansion-remainder study
    Expansion(RunArgs),
    /// Run the full acceptance suite
    Accept {
        /// Write the verdict lines here instead of stdout
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// List the built-in preset catalog
    Presets,
}

fn load_config(args: &RunArgs) -> anyhow::Result<StudyConfig> {
    if args.threads == 0 {
        anyhow::bail!("--threads must be at least 1");
    }
    let text = std::fs::read_to_string(&args.config)?;
    Ok(parse_config(&text)?)
}

fn run(args: &RunArgs, mode: Option<StudyMode>) -> anyhow::Result<bool> {
    let mut cfg = load_config(args)?;
    if let Some(mode) = mode {
        cfg.mode = mode;
    }
    let report = run_study(&cfg, args.deterministic)?;
    let format = match args.format.as_str() {
        "csv" => ReportFormat::Csv,
        _ => ReportFormat::TextTable,
    };
    let text = emit_report(&report, format);
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(std::path::PathBuf::from));
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => run(args, Some(StudyMode::Single)),
        Command::Study(args) => run(args, None),
        Command::Expansion(args) => run(args, Some(StudyMode::Expansion)),
        Command::Accept { out } => {
            let outcome = acceptance::run_all();
            let text = outcome.render();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &text) {
                        eprintln!("error: {e}");
                        return ExitCode::FAILURE;
                    }
                }
                None => print!("{text}"),
            }
            Ok(outcome.all_pass())
        }
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
