use std::sync::Arc;

use super::*;
use crate::dsl::parse;
use crate::llm::{ProviderConfig, Script, ScriptedProvider};
use crate::registry::builtin_catalog;
use crate::synthetic::{example_set, script_json, MergeBehavior, ScriptOptions};

fn gateway(json: &str) -> LlmGateway {
    let script = Script::from_json(json, "<test>").unwrap();
    LlmGateway::new(Arc::new(ScriptedProvider::new(script)), &ProviderConfig::scripted("<test>"))
}

fn synthetic_gateway(merge: MergeBehavior) -> LlmGateway {
    gateway(&script_json(ScriptOptions {
        merge,
        ..ScriptOptions::default()
    }))
}

#[test]
fn iteration_bounds() {
    assert!(RefinementConfig::new(0).is_err());
    assert!(RefinementConfig::new(1).is_ok());
    assert!(RefinementConfig::new(MAX_REFINEMENT_ITERATIONS).is_ok());
    assert_eq!(RefinementConfig::new(11), Err(RefinementConfigError::Iterations(11)));
}

#[test]
fn identity_merge_is_a_fixed_point() {
    let reg = builtin_catalog();
    let set = example_set(false);
    let out = refine_set(&set, &reg, &synthetic_gateway(MergeBehavior::Identity), RefinementConfig::new(2).unwrap());
    for s in &out.sets {
        let programs: Vec<&str> = s.examples.iter().map(|e| e.program.as_str()).collect();
        let before: Vec<&str> = set.examples.iter().map(|e| e.program.as_str()).collect();
        assert_eq!(programs, before);
    }
    assert!(out.records.iter().flatten().all(|r| r.accepted));
}

#[test]
fn context_free_merge_repairs_planted_flaw() {
    let reg = builtin_catalog();
    let flawed = example_set(true);
    let out = refine_set(
        &flawed,
        &reg,
        &synthetic_gateway(MergeBehavior::TakeContextFree),
        RefinementConfig::new(3).unwrap(),
    );
    assert_eq!(out.sets.len(), 3);
    assert_eq!(out.records.len(), 3);
    let clean = example_set(false);
    for (t, s) in out.sets.iter().enumerate() {
        assert_eq!(s.ids(), flawed.ids());
        s.validate(&reg).unwrap();
        for (e, c) in s.examples.iter().zip(&clean.examples) {
            assert_eq!(e.program, c.program, "{}", e.id);
            assert_eq!(e.provenance, Provenance::Refined(t as u32 + 1));
        }
    }
}

#[test]
fn invalid_merge_keeps_the_old_program() {
    let reg = builtin_catalog();
    let set = example_set(false);
    let g = gateway(
        r#"{"rules":[
            {"stage":"generate","response":{"action":"imitate"}},
            {"stage":"context_free","response":{"action":"template","program":"OUT=VQA(video=VIDEO,question='q')"}},
            {"stage":"merge","response":"OUT=FOO(video=VIDEO)"}
        ]}"#,
    );
    let out = refine_set(&set, &reg, &g, RefinementConfig::new(1).unwrap());
    for (r, e) in out.records[0].iter().zip(&set.examples) {
        assert!(!r.accepted);
        assert!(matches!(r.rejection, Some(Rejection::Invalid(_))), "{:?}", r.rejection);
        assert_eq!(Some(&r.refined_program), r.contextual_program.as_ref());
        let kept = out.sets[0].get(&e.id).unwrap();
        assert_eq!(kept, e);
    }
}

#[test]
fn merge_that_changes_inputs_is_rejected() {
    let reg = builtin_catalog();
    let set = example_set(false);
    let g = gateway(
        r#"{"rules":[
            {"stage":"generate","response":{"action":"imitate"}},
            {"stage":"context_free","response":"OUT=VQA(video=VIDEO,question='q')"},
            {"stage":"merge","response":"OUT=MERGE(video0=VIDEO0,video1=VIDEO1)"}
        ]}"#,
    );
    let r = refine_example(&set.examples[0], &set, &reg, &g, 1);
    assert_eq!(r.rejection, Some(Rejection::InputsChanged));
    assert_eq!(parse(&set.examples[0].program).unwrap().free_inputs(), r.refined_program.free_inputs());
}

#[test]
fn unanswered_generation_is_reported() {
    let reg = builtin_catalog();
    let set = example_set(false);
    let g = gateway(r#"{"rules":[{"stage":"merge","response":{"action":"pick_a"}}]}"#);
    let r = refine_example(&set.examples[3], &set, &reg, &g, 1);
    assert!(matches!(r.rejection, Some(Rejection::Contextual(_))));
    assert_eq!(print(&r.refined_program), set.examples[3].program);
    assert!(r.contextual_program.is_none());
}

#[test]
fn merge_prompt_carries_both_programs() {
    let reg = builtin_catalog();
    let a = parse("OUT=TRIM(video=VIDEO,start=1,end=2)").unwrap();
    let b = parse("OUT=CROP(video=VIDEO,region=VIDEO)").unwrap();
    let text = merge_spec("cut it", &a, &b, &reg).render().text();
    let ia = text.find("Program A (structure to preserve)").unwrap();
    let ib = text.find("Program B (reasoning to incorporate)").unwrap();
    assert!(ia < ib);
    assert!(text[ia..ib].contains("TRIM("));
    assert!(text[ib..].contains("CROP("));
    assert!(text.contains("Instruction: cut it"));
}
