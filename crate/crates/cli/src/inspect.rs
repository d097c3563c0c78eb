use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::ValueEnum;

use trailerforge::canonical;
use trailerforge::composition::Storyboard;
use trailerforge::fragments::FragmentKind;

use crate::report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Section {
    Timeline,
    Audit,
    Durations,
    Outline,
}

fn render(board: &Storyboard, section: Section) -> String {
    let mut out = String::new();
    match section {
        Section::Timeline => {
            for (i, fragment) in board.fragments.iter().enumerate() {
                let frames: Vec<&str> = fragment.frames.iter().map(|f| f.frame_id.as_str()).collect();
                out.push_str(&format!("{:>2}. {:<17} {}\n", i + 1, fragment.kind.name(), frames.join(", ")));
            }
        }
        Section::Audit => {
            out.push_str(&canonical::to_string(&board.audit).expect("audit serializes"));
        }
        Section::Durations => {
            let mut total_ms = 0;
            out.push_str(&format!("{:<16} {:>9} {:>10}\n", "frame", "start_s", "duration_s"));
            for frame in board.frames() {
                total_ms += frame.duration_ms();
                out.push_str(&format!(
                    "{:<16} {:>9.3} {:>10.3}\n",
                    frame.frame_id, frame.start_s, frame.duration_s
                ));
            }
            out.push_str(&format!("{:<16} {:>9} {:>10.3}\n", "total", "", total_ms as f64 / 1000.0));
        }
        Section::Outline => {
            let outline = board.fragments.iter().filter(|f| f.kind == FragmentKind::Outline);
            let mut n = 1;
            for frame in outline.flat_map(|f| f.frames.iter()) {
                for element in &frame.frame_spec.elements {
                    let numbered = element
                        .binding()
                        .strip_prefix("outline_")
                        .is_some_and(|n| n.parse::<usize>().is_ok());
                    if numbered {
                        if let Some(text) = frame.resolved_elements.get(&element.id) {
                            out.push_str(&format!("{n}. {text}\n"));
                            n += 1;
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn run(path: &Path, section: Section) -> ExitCode {
    let board = fs::read_to_string(path)
        .map_err(|e| e.to_string())
        .and_then(|s| serde_json::from_str::<Storyboard>(&s).map_err(|e| e.to_string()));
    match board {
        Ok(board) => {
            print!("{}", render(&board, section));
            ExitCode::SUCCESS
        }
        Err(e) => {
            report("ParseError", format!("{}: {e}", path.display()));
            ExitCode::FAILURE
        }
    }
}
