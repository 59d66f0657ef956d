use std::sync::Arc;

use super::*;
use crate::llm::{ProviderConfig, Script, ScriptedProvider};
use crate::registry::builtin_catalog;
use crate::synthetic::{golden_examples, golden_script_json, GOLDEN_INSTRUCTION, GOLDEN_PROGRAM};

fn gateway(json: &str) -> LlmGateway {
    let script = Script::from_json(json, "<test>").unwrap();
    LlmGateway::new(Arc::new(ScriptedProvider::new(script)), &ProviderConfig::scripted("<test>"))
}

#[test]
fn golden_instruction_yields_reference_program() {
    let g = gateway(&golden_script_json());
    let examples = golden_examples();
    let before = examples.clone();
    let p = generate(GOLDEN_INSTRUCTION, &examples, &builtin_catalog(), &g).unwrap();
    assert_eq!(p, parse(GOLDEN_PROGRAM).unwrap());
    let functions: Vec<&str> = p.statements.iter().map(|s| s.function_name.as_str()).collect();
    assert_eq!(functions, ["GROUNDING", "TRIMAFTER", "VQA"]);
    assert_eq!(examples, before);
}

#[test]
fn merge_instruction() {
    let g = gateway(&golden_script_json());
    let p = generate("Merge the two videos.", &golden_examples(), &builtin_catalog(), &g).unwrap();
    assert_eq!(crate::dsl::print(&p), "OUT0=MERGE(video0=VIDEO0,video1=VIDEO1)");
}

#[test]
fn prose_reply_is_a_scrape_error() {
    let g = gateway(r#"{"rules":[{"response":"I would first find the man, then look at what follows."}]}"#);
    let err = generate("anything", &golden_examples(), &builtin_catalog(), &g).unwrap_err();
    assert!(matches!(err, GenerationError::Scrape(_)), "{err:?}");
    let err = generate_context_free("anything", &builtin_catalog(), &g).unwrap_err();
    assert!(matches!(err, GenerationError::Scrape(_)), "{err:?}");
}

#[test]
fn unparsable_reply_is_a_parse_error() {
    let g = gateway(r#"{"rules":[{"response":"A=VQA(video=VIDEO,question='x')\nA=VQA(video=VIDEO,question='y')"}]}"#);
    let err = generate("anything", &golden_examples(), &builtin_catalog(), &g).unwrap_err();
    assert!(matches!(err, GenerationError::Parse(ref e) if !e.is_empty()), "{err:?}");
}

#[test]
fn generated_program_is_not_validated() {
    let g = gateway(r#"{"rules":[{"response":"A=NOPE(video=VIDEO)"}]}"#);
    let p = generate("anything", &golden_examples(), &builtin_catalog(), &g).unwrap();
    assert_eq!(p.statements[0].function_name, "NOPE");
}

#[test]
fn context_free_path_differs_and_repeats() {
    let g = gateway(
        r#"{"rules":[
        {"stage":"generate","response":"A=VQA(video=VIDEO,question='what happens')"},
        {"stage":"context_free","response":"A=GROUNDING(video=VIDEO,query='door')\nB=TRIMAFTER(video=VIDEO,interval=A)\nC=VQA(video=B,question='what happens')"}
    ]}"#,
    );
    let reg = builtin_catalog();
    let with = generate("what happens after the door opens?", &golden_examples(), &reg, &g).unwrap();
    let first = generate_context_free("what happens after the door opens?", &reg, &g).unwrap();
    let second = generate_context_free("what happens after the door opens?", &reg, &g).unwrap();
    assert_ne!(with, first);
    assert_eq!(first, second);
    assert_eq!(first.len(), 3);
}

#[test]
fn context_free_prompt_has_no_examples_but_lists_functions() {
    let reg = builtin_catalog();
    let spec = context_free_spec("x", &reg);
    assert!(spec.in_context.is_empty());
    let text = spec.render().text();
    for name in reg.names() {
        assert!(text.contains(&format!("{name}(")), "{name}");
    }
    assert!(!text.contains("woman opens door"));
}

#[test]
fn prompt_lists_every_example_in_order() {
    let examples = crate::synthetic::example_set(false);
    let text = generation_spec("new question", &examples, &builtin_catalog()).render().text();
    let mut from = 0;
    for e in &examples.examples {
        let i = from + text[from..].find(&e.instruction).unwrap_or_else(|| panic!("{} missing", e.id));
        let j = i + text[i..].find(&e.program).unwrap_or_else(|| panic!("{} program missing", e.id));
        from = j + e.program.len();
    }
    assert!(text[from..].contains("Instruction: new question"));
}

#[test]
fn example_sets_round_trip_as_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("icl.jsonl");
    let mut set = golden_examples();
    set.examples[1].provenance = Provenance::Refined(2);
    set.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains(r#""provenance":"refined(2)""#));
    assert_eq!(ExampleSet::load(&path).unwrap(), set);
}

#[test]
fn provenance_defaults_to_curated() {
    let e: InContextExample =
        serde_json::from_str(r#"{"id":"a","instruction":"i","program":"A=VQA(video=VIDEO,question='q')"}"#).unwrap();
    assert_eq!(e.provenance, Provenance::Curated);
    assert!("refined(x)".parse::<Provenance>().is_err());
}

#[test]
fn set_validation_catches_bad_examples() {
    let reg = builtin_catalog();
    let mut dup = golden_examples();
    dup.examples.push(dup.examples[0].clone());
    assert!(matches!(dup.validate(&reg), Err(ExampleSetError::DuplicateId(_))));

    let bad = ExampleSet::new(vec![InContextExample::new("x", "i", "A=NOPE(video=VIDEO)")]);
    assert!(matches!(bad.validate(&reg), Err(ExampleSetError::Invalid { .. })));

    let garbage = ExampleSet::new(vec![InContextExample::new("x", "i", "not a program")]);
    assert!(matches!(garbage.validate(&reg), Err(ExampleSetError::Parse { .. })));
}

#[test]
fn load_reports_the_failing_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("icl.jsonl");
    std::fs::write(&path, "{\"id\":\"a\",\"instruction\":\"i\",\"program\":\"p\"}\n\n{oops\n").unwrap();
    let err = ExampleSet::load(&path).unwrap_err();
    assert!(matches!(err, ExampleSetError::Json { line: 3, .. }), "{err}");
}
