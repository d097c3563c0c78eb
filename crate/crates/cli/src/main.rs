mod generate;
mod inspect;
mod validate;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use inspect::Section;

#[derive(Parser)]
#[command(name = "trailerforge", version, about = "Compile a learning pathway into a course-trailer storyboard")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a pathway and write storyboard, subtitles, voice-over, render plan and word cloud.
    Generate(Box<generate::RunConfig>),
    /// Check a manifest and template without writing anything; prints findings as JSON.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        template: PathBuf,
    },
    /// Print one section of a generated storyboard.
    Inspect {
        #[arg(long)]
        storyboard: PathBuf,
        #[arg(long, value_enum)]
        section: Section,
    },
    /// Serve the built-in stub adapters over JSON lines on stdin/stdout.
    #[command(hide = true)]
    AdapterStub,
}

/// Structured failure report on stderr.
pub(crate) fn report(kind: &str, message: impl std::fmt::Display) {
    eprintln!("{}", json!({ "error": kind, "message": message.to_string() }));
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRAILERFORGE_LOG", "warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(config) => generate::run(&config),
        Command::Validate { manifest, template } => validate::run(&manifest, &template),
        Command::Inspect { storyboard, section } => inspect::run(&storyboard, section),
        Command::AdapterStub => {
            let stdin = io::stdin();
            match trailerforge::adapters::serve(&Default::default(), stdin.lock(), io::stdout().lock()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    report("Io", e);
                    ExitCode::FAILURE
                }
            }
        }
    }
}
