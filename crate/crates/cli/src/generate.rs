use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;

use clap::Args;

use trailerforge::adapters::{AdapterRegistry, AdapterSettings, Cassette, StubBackend};
use trailerforge::composition::Template;
use trailerforge::corpus::{load_manifest, DEFAULT_READING_SPEED_WPM};
use trailerforge::fragments::Suggestion;
use trailerforge::pipeline::{remove_outputs, RENDERPLAN_FILE};
use trailerforge::textmetrics::StopWords;
use trailerforge::{compile, CompileOptions};

use crate::report;

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    #[arg(long = "manifest")]
    pub manifest_path: PathBuf,
    #[arg(long = "template")]
    pub template_path: PathBuf,
    /// Per-capability backend configuration (JSON).
    #[arg(long = "adapters")]
    pub adapters_path: Option<PathBuf>,
    #[arg(long = "out")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "reading-speed", default_value_t = DEFAULT_READING_SPEED_WPM)]
    pub reading_speed_wpm: f64,
    #[arg(long = "speaking-rate", default_value_t = trailerforge::composition::DEFAULT_SPEAKING_RATE_WPM)]
    pub speaking_rate_wpm: f64,
    /// Tuning override, e.g. `--set tf_threshold=0.02`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Save every adapter exchange to this cassette file.
    #[arg(long, conflicts_with = "replay")]
    pub record: Option<PathBuf>,
    /// Answer every adapter call from this cassette file.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Renderer to run afterwards; `{}` is replaced by the render plan path.
    #[arg(long = "render-cmd")]
    pub render_cmd: Option<String>,
    /// Write the creator suggestions (definitions, paraphrases) here.
    #[arg(long)]
    pub suggestions: Option<PathBuf>,
    /// Suggestions file with `accepted` set on the ones to apply.
    #[arg(long)]
    pub accept: Option<PathBuf>,
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, message: impl std::fmt::Display) -> Self {
        Failure { kind, message: message.to_string() }
    }
}

impl From<trailerforge::PipelineError> for Failure {
    fn from(e: trailerforge::PipelineError) -> Self {
        Failure::new(e.kind(), e)
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

fn build_registry(config: &RunConfig) -> Result<AdapterRegistry, Failure> {
    let registry = if let Some(path) = &config.replay {
        let cassette = Cassette::load(path).map_err(|e| Failure::new("CassetteError", format!("{}: {e}", path.display())))?;
        AdapterRegistry::replay(cassette)
    } else {
        let stub = StubBackend::new(Arc::new(StopWords::english()), config.speaking_rate_wpm);
        match &config.adapters_path {
            Some(path) => {
                let settings = AdapterSettings::load(path).map_err(|e| Failure::new("AdapterConfigError", e))?;
                AdapterRegistry::from_settings(&settings, stub)
            }
            None => AdapterRegistry::with_stub(stub),
        }
    };
    Ok(if config.record.is_some() { registry.record() } else { registry })
}

fn options(config: &RunConfig) -> Result<CompileOptions, Failure> {
    let mut options = CompileOptions {
        seed: config.seed,
        reading_speed_wpm: config.reading_speed_wpm,
        speaking_rate_wpm: config.speaking_rate_wpm,
        ..CompileOptions::default()
    };
    if !(options.reading_speed_wpm > 0.0 && options.speaking_rate_wpm > 0.0) {
        return Err(Failure::new("InvalidOverride", "reading speed and speaking rate must be positive"));
    }
    for item in &config.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::new("InvalidOverride", format!("expected KEY=VALUE, got `{item}`")))?;
        options.apply_override(key.trim(), value.trim())?;
    }
    if let Some(path) = &config.accept {
        let content = fs::read_to_string(path).map_err(|e| Failure::new("MissingFile", format!("{}: {e}", path.display())))?;
        options.accepted = serde_json::from_str::<Vec<Suggestion>>(&content)
            .map_err(|e| Failure::new("SchemaError", format!("{}: {e}", path.display())))?;
    }
    Ok(options)
}

fn generate(config: &RunConfig) -> Result<Option<i32>, Failure> {
    let (pathway, creator) = load_manifest(&config.manifest_path).map_err(trailerforge::PipelineError::from)?;
    let template = Template::load(&config.template_path).map_err(trailerforge::PipelineError::from)?;
    let options = options(config)?;
    let registry = build_registry(config)?;

    let compiled = compile(&pathway, &creator, &template, &registry, &options)?;
    compiled
        .write_to(&config.out_dir)
        .map_err(|e| Failure::new("Io", format!("{}: {e}", config.out_dir.display())))?;
    if let (Some(path), Some(cassette)) = (&config.record, registry.take_cassette()) {
        cassette.save(path).map_err(|e| Failure::new("Io", format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &config.suggestions {
        fs::write(path, compiled.suggestions_json())
            .map_err(|e| Failure::new("Io", format!("{}: {e}", path.display())))?;
    }

    let board = &compiled.storyboard;
    println!(
        "{} fragments, {} frames, total {:.3} s -> {}",
        board.fragments.len(),
        board.frames().count(),
        board.total_duration_s,
        config.out_dir.display()
    );

    match &config.render_cmd {
        Some(cmd) => run_renderer(cmd, &config.out_dir.join(RENDERPLAN_FILE)).map(Some),
        None => Ok(None),
    }
}

fn run_renderer(cmd: &str, plan: &Path) -> Result<i32, Failure> {
    let line = cmd.replace("{}", &shell_quote(&plan.display().to_string()));
    log::info!("running renderer: {line}");
    let status = Command::new("sh")
        .arg("-c")
        .arg(&line)
        .status()
        .map_err(|e| Failure::new("RendererError", format!("cannot start `{cmd}`: {e}")))?;
    Ok(status.code().unwrap_or(1))
}

pub fn run(config: &RunConfig) -> ExitCode {
    match generate(config) {
        Ok(None) | Ok(Some(0)) => ExitCode::SUCCESS,
        Ok(Some(code)) => {
            report("RendererError", format!("renderer exited with status {code}"));
            ExitCode::from(u8::try_from(code).unwrap_or(1))
        }
        Err(f) => {
            report(f.kind, &f.message);
            if f.kind == "Io" {
                remove_outputs(&config.out_dir);
            }
            ExitCode::FAILURE
        }
    }
}
