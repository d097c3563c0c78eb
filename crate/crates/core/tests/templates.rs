use std::path::PathBuf;

use trailerforge::composition::{CompositionError, Template};
use trailerforge::fragments::FragmentKind;

fn bundled(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("templates").join(name)).unwrap()
}

fn edit(name: &str, f: impl FnOnce(&mut serde_json::Value)) -> Result<Template, CompositionError> {
    let mut v: serde_json::Value = serde_json::from_str(&bundled(name)).unwrap();
    f(&mut v);
    Template::parse(&v.to_string())
}

#[test]
fn bundled_templates_load() {
    let t1 = Template::parse(&bundled("t1.json")).unwrap();
    assert_eq!(t1.constraints.outline_slots, 5);
    assert_eq!(t1.fragment_specs.len(), FragmentKind::ALL.len());
    let t2 = Template::parse(&bundled("t2.json")).unwrap();
    assert_eq!(t2.constraints.outline_slots, 5);
    assert_eq!(t2.fragment_specs[&FragmentKind::Outline].frames.len(), 2);
}

#[test]
fn misspelled_slot_is_dangling() {
    let err = edit("t1.json", |v| {
        v["fragment_specs"]["author_details"]["grammars"][1] =
            serde_json::json!({"pattern": "By {autor_name}.", "slots": ["autor_name"]});
    })
    .unwrap_err();
    assert_eq!(
        err,
        CompositionError::DanglingSlot { fragment: FragmentKind::AuthorDetails, slot: "autor_name".into() }
    );
}

#[test]
fn identical_rects_overlap() {
    let err = edit("t1.json", |v| {
        let elements = &mut v["fragment_specs"]["social_proof"]["frames"][0]["elements"];
        elements[1]["position"] = elements[0]["position"].clone();
    })
    .unwrap_err();
    assert!(matches!(err, CompositionError::Overlap { a, b, .. } if a == "learner_count" && b == "rating"));
}

#[test]
fn schema_violations() {
    let bad = |f: fn(&mut serde_json::Value)| matches!(edit("t1.json", f), Err(CompositionError::Schema(_)));
    assert!(bad(|v| v["constraints"]["outline_slots"] = 1.into()));
    assert!(bad(|v| v["animation"]["fade_in_s"] = (-0.5).into()));
    assert!(bad(|v| v["fragment_specs"]["outline"]["frames"][0]["elements"][1]["position"]["x"] = 0.95.into()));
    assert!(bad(|v| v["surprise"] = true.into()));
    // placeholder that is not declared as a slot
    assert!(bad(|v| v["fragment_specs"]["trailer_title"]["grammars"][0]["slots"] = serde_json::json!([])));
    assert!(bad(|v| v["fragment_specs"]["outline"]["frames"][0]["id"] = "title".into()));
}

#[test]
fn findings_lists_every_problem() {
    let mut t = Template::parse(&bundled("t1.json")).unwrap();
    t.constraints.outline_slots = 0;
    t.animation.fade_out_s = -1.0;
    assert_eq!(t.findings().len(), 2);
}
