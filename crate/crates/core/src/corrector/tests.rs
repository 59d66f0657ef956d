use std::sync::Arc;

use super::*;
use crate::dsl::parse;
use crate::generator::InContextExample;
use crate::llm::{fault_count, ProviderConfig, Script, ScriptedProvider};
use crate::registry::builtin_catalog;

const GOLDEN: &str = "ANS0=GROUNDING(video=VIDEO,query='man enters room')\n\
                      ANS1=TRIMAFTER(video=VIDEO,interval=ANS0)\n\
                      FINAL=VQA(video=ANS1,question='what does the man do')";

fn gateway(json: &str) -> LlmGateway {
    let script = Script::from_json(json, "<test>").unwrap();
    LlmGateway::new(Arc::new(ScriptedProvider::new(script)), &ProviderConfig::scripted("<test>"))
}

fn fixer(per_call: usize) -> LlmGateway {
    gateway(&format!(
        r#"{{"rules":[{{"stage":"correct","response":{{"action":"fix_flagged","per_call":{per_call}}}}}]}}"#
    ))
}

fn video() -> BTreeMap<String, SemType> {
    BTreeMap::from([("VIDEO".to_owned(), SemType::Video)])
}

fn run(src: &str, g: &LlmGateway, max_iters: usize) -> CorrectionReport {
    let opts = CorrectionOptions {
        max_iters,
        llm_judge: false,
    };
    correct(&parse(src).unwrap(), "what does the man do", &builtin_catalog(), &video(), g, opts)
}

#[test]
fn valid_program_needs_no_rounds() {
    let r = run(GOLDEN, &fixer(1), 3);
    assert_eq!(r.iterations_used, 0);
    assert!(r.final_valid);
    assert_eq!(r.final_program, parse(GOLDEN).unwrap());
}

#[test]
fn one_suggestion_one_fix() {
    let r = run(&GOLDEN.replace("TRIMAFTER", "TRIMAFTR"), &fixer(1), 3);
    assert_eq!(r.iterations_used, 1);
    assert!(r.final_valid);
    assert_eq!(r.final_program, parse(GOLDEN).unwrap());
    assert!(r.per_iteration[0].feedback.rendered.contains("Did you mean 'TRIMAFTER'?"));
}

#[test]
fn three_faults_need_three_rounds() {
    let bad = GOLDEN
        .replace("GROUNDING", "GROUNDIN")
        .replace("TRIMAFTER", "TRIMAFTE")
        .replace("VQA(", "VQAX(");
    let r = run(&bad, &fixer(1), 3);
    assert_eq!(r.iterations_used, 3);
    assert!(r.final_valid);
    let r = run(&bad, &fixer(1), 2);
    assert_eq!(r.iterations_used, 2);
    assert!(!r.final_valid);
    assert_eq!(r.per_iteration.len(), r.iterations_used);
}

#[test]
fn zero_budget_is_validate_and_report() {
    let bad = GOLDEN.replace("VQA(", "VQAX(");
    let r = run(&bad, &fixer(1), 0);
    assert_eq!(r.iterations_used, 0);
    assert!(!r.final_valid);
    let p = parse(&bad).unwrap();
    assert_eq!(r.final_feedback, validate(&p, &builtin_catalog(), &video()));
}

#[test]
fn hostile_provider_exhausts_budget() {
    let g = gateway(r#"{"rules":[{"stage":"correct","response":{"action":"echo_previous"}}]}"#);
    let r = run(&GOLDEN.replace("VQA(", "VQAX("), &g, 3);
    assert_eq!(r.iterations_used, 3);
    assert!(!r.final_valid);
    assert!(r.error.is_none());
}

#[test]
fn generation_error_truncates_report() {
    let g = gateway(r#"{"rules":[{"stage":"correct","response":"I cannot help with that."}]}"#);
    let r = run(&GOLDEN.replace("VQA(", "VQAX("), &g, 3);
    assert_eq!(r.iterations_used, 0);
    assert!(!r.final_valid);
    assert!(matches!(r.error, Some(GenerationError::Scrape(_))));
}

#[test]
fn judge_can_stop_the_loop() {
    let g = gateway(r#"{"rules":[{"stage":"judge","response":"no"},{"stage":"correct","response":{"action":"fix_flagged"}}]}"#);
    let opts = CorrectionOptions {
        max_iters: 3,
        llm_judge: true,
    };
    let bad = parse(&GOLDEN.replace("VQA(", "VQAX(")).unwrap();
    let r = correct(&bad, "q", &builtin_catalog(), &video(), &g, opts);
    assert_eq!(r.iterations_used, 0);
    assert!(!r.final_valid, "the validator still decides final validity");

    let g = gateway(r#"{"rules":[{"stage":"judge","response":"yes"},{"stage":"correct","response":{"action":"fix_flagged"}}]}"#);
    let r = correct(&bad, "q", &builtin_catalog(), &video(), &g, opts);
    assert_eq!(r.iterations_used, 1);
    assert!(r.final_valid);
}

#[test]
fn sweep_is_monotone_and_starts_at_raw_injections() {
    let examples = ExampleSet::new(vec![InContextExample::new("e", "What does the man do after entering the room?", GOLDEN)]);
    let json = serde_json::json!({"seed": 42, "rules": [
        {"stage": "generate", "response": GOLDEN, "inject": {"rate": 0.3, "max_faults": 3}},
        {"stage": "correct", "response": {"action": "fix_flagged", "per_call": 1}}
    ]})
    .to_string();
    let g = gateway(&json);
    let instructions: Vec<String> = (0..60).map(|i| format!("instruction {i}")).collect();
    let sweep = error_sweep(&instructions, &examples, &builtin_catalog(), &video(), &g, 0..=3);
    assert_eq!(sweep.rows.len(), 4);
    assert!(sweep.is_non_increasing(), "{sweep:?}");
    assert_eq!(sweep.rows[3].1, 0);
    let raw = instructions
        .iter()
        .filter(|i| {
            let p = generate(i, &examples, &builtin_catalog(), &g).unwrap();
            fault_count(&print(&p), GOLDEN) > 0
        })
        .count();
    assert_eq!(sweep.rows[0].1, raw);
    assert!(sweep.to_csv().starts_with("iterations,invalid_count\n0,"));
}
