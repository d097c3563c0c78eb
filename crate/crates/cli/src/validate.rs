use std::fs;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;

use trailerforge::adapters::AdapterRegistry;
use trailerforge::composition::{CompositionError, Template};
use trailerforge::corpus::{load_manifest, CreatorInput, Pathway};
use trailerforge::fragments::{gen_author_fragment, gen_splash, FragmentKind};
use trailerforge::selection::{eligible_resources, FilterConfig};
use trailerforge::{compile, CompileOptions, PipelineError};

#[derive(Debug, Serialize)]
struct Finding {
    kind: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    elements: Vec<String>,
}

impl From<PipelineError> for Finding {
    fn from(e: PipelineError) -> Self {
        let elements = match &e {
            PipelineError::Composition(CompositionError::Overlap { a, b, .. }) => vec![a.clone(), b.clone()],
            _ => Vec::new(),
        };
        Finding { kind: e.kind(), message: e.to_string(), elements }
    }
}

fn read_template(path: &Path) -> Result<Template, PipelineError> {
    let content = fs::read_to_string(path)
        .map_err(|e| CompositionError::Schema(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&content).map_err(|e| CompositionError::Schema(format!("{}: {e}", path.display())).into())
}

fn cross_checks(pathway: &Pathway, creator: &CreatorInput, template: &Template) -> Vec<Finding> {
    let mut out = Vec::new();
    let k = template.constraints.outline_slots;
    if let Err(e) = eligible_resources(pathway, &FilterConfig::new(k)) {
        out.push(PipelineError::from(e).into());
    }
    let splash = gen_splash(creator);
    let author = gen_author_fragment(creator, template.constraints.max_authors_shown);
    let mut present = vec![
        FragmentKind::TrailerTitle,
        FragmentKind::Outline,
        FragmentKind::MetaInformation,
        FragmentKind::CallToAction,
    ];
    for result in [splash, author] {
        match result {
            Ok(f) if !f.is_omitted() => present.push(f.kind),
            Ok(_) => {}
            Err(e) => out.push(PipelineError::from(e).into()),
        }
    }
    if creator.social_proof.is_some() {
        present.push(FragmentKind::SocialProof);
    }
    present.sort();
    for kind in present {
        if !template.fragment_specs.contains_key(&kind) {
            out.push(PipelineError::from(CompositionError::TemplateMismatch(kind)).into());
        }
    }
    out
}

/// Static checks first; when they pass, a dry compile with the stub adapters
/// catches anything only visible during generation (such as a frame with no
/// fillable grammar).
fn findings(manifest: &Path, template_path: &Path) -> Vec<Finding> {
    let mut out: Vec<Finding> = Vec::new();
    let loaded = load_manifest(manifest).map_err(|e| out.push(PipelineError::from(e).into())).ok();
    let template = match read_template(template_path) {
        Ok(t) => {
            let problems = t.findings();
            let clean = problems.is_empty();
            out.extend(problems.into_iter().map(|p| PipelineError::from(p).into()));
            clean.then_some(t)
        }
        Err(e) => {
            out.push(e.into());
            None
        }
    };
    let (Some((pathway, creator)), Some(template)) = (loaded, template) else {
        return out;
    };
    out.extend(cross_checks(&pathway, &creator, &template));
    if out.is_empty() {
        if let Err(e) = compile(&pathway, &creator, &template, &AdapterRegistry::stubs(), &CompileOptions::default()) {
            out.push(e.into());
        }
    }
    out
}

pub fn run(manifest: &Path, template: &Path) -> ExitCode {
    let found = findings(manifest, template);
    println!("{}", serde_json::to_string_pretty(&found).expect("findings serialize"));
    if found.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
