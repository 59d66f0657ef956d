//! Whole pipelines over the mock world: generation, correction and
//! execution composed the way the CLI composes them.

use std::collections::BTreeMap;
use std::sync::Arc;

use vurf::corrector::{correct, CorrectionOptions};
use vurf::dsl::parse;
use vurf::generator::generate;
use vurf::interpreter::{execute, EffectKind, ExecOptions, Value};
use vurf::llm::{LlmGateway, ProviderConfig, Script, ScriptedProvider};
use vurf::registry::{builtin_catalog, SemType};
use vurf::synthetic::{
    fall_descriptor, fall_program, golden_descriptor, golden_examples, GOLDEN_INSTRUCTION, GOLDEN_PROGRAM,
};
use vurf::validator::{is_valid, video_inputs};
use vurf::world::{standard_bindings, World};

fn gateway(json: &str) -> LlmGateway {
    let script = Script::from_json(json, "<test>").unwrap();
    LlmGateway::new(Arc::new(ScriptedProvider::new(script)), &ProviderConfig::scripted("<test>"))
}

fn run(program: &str, world: World, inputs: &[(&str, &str)]) -> Value {
    let p = parse(program).unwrap();
    let inputs: BTreeMap<String, Value> = inputs
        .iter()
        .map(|(name, id)| (name.to_string(), Value::Video(world.input_video(id).unwrap())))
        .collect();
    let bindings = standard_bindings(Arc::new(world));
    execute(&p, &inputs, &bindings, &builtin_catalog(), &ExecOptions::default()).unwrap().0
}

#[test]
fn typo_in_generation_is_corrected_before_execution() {
    let typo = GOLDEN_PROGRAM.replace("TRIMAFTER", "TRIMAFTR").replace('\n', "\\n");
    let g = gateway(&format!(
        r#"{{"rules":[
            {{"stage":"generate","response":"{typo}"}},
            {{"stage":"correct","response":{{"action":"fix_flagged"}}}}
        ]}}"#
    ));
    let reg = builtin_catalog();
    let generated = generate(GOLDEN_INSTRUCTION, &golden_examples(), &reg, &g).unwrap();
    let inputs = BTreeMap::from([("VIDEO".to_owned(), SemType::Video)]);
    assert!(!is_valid(&generated, &reg, &inputs));
    let report = correct(&generated, GOLDEN_INSTRUCTION, &reg, &inputs, &g, CorrectionOptions::default());
    assert!(report.final_valid);
    assert_eq!(report.iterations_used, 1);
    let answer = run(&vurf::dsl::print(&report.final_program), World::single(golden_descriptor()), &[("VIDEO", "bathroom")]);
    assert_eq!(answer, Value::Text("pick up towel".into()));
}

#[test]
fn fall_detection_follows_the_tracked_person() {
    for (person, expected) in [("old man", "falling"), ("nurse", "standing")] {
        let answer = run(&fall_program(person), World::single(fall_descriptor()), &[("VIDEO", "ward")]);
        assert_eq!(answer, Value::Text(expected.into()), "{person}");
    }
    // before the fall the old man is still upright
    let early = fall_program("old man").replace("PERSON=CROP(video=VIDEO", "EARLY=TRIM(video=VIDEO,start=0,end=2.5)\nPERSON=CROP(video=EARLY");
    let answer = run(&early, World::single(fall_descriptor()), &[("VIDEO", "ward")]);
    assert_eq!(answer, Value::Text("standing".into()));
}

#[test]
fn editing_chain_annotates_without_touching_pixels() {
    let program = "A=TRIM(video=VIDEO0,start=1,end=4)\n\
                   B=BGBLUR(video=A,object='old man')\n\
                   C=COLORPOP(video=VIDEO1,object='towel')\n\
                   D=MERGE(video0=B,video1=C)";
    assert!(is_valid(&parse(program).unwrap(), &builtin_catalog(), &video_inputs(&parse(program).unwrap())));
    let world = World::from_descriptors([fall_descriptor(), golden_descriptor()]);
    let Value::Video(v) = run(program, world, &[("VIDEO0", "ward"), ("VIDEO1", "bathroom")]) else { panic!() };
    assert_eq!(v.clips.len(), 2);
    assert_eq!(v.handle(), "ward+bathroom");
    assert_eq!(v.duration(), 3.0 + 10.0);
    assert_eq!(v.clips[0].effects[0].kind, EffectKind::BgBlur);
    assert_eq!(v.clips[1].effects[0].kind, EffectKind::ColorPop);
    assert_eq!(v.to_string(), "Video(ward: [1, 4] bgblur('old man') + bathroom: [0, 10] colorpop('towel'))");
}

#[test]
fn questions_span_merged_videos() {
    let program = "M=MERGE(video0=VIDEO0,video1=VIDEO1)\nA=VQA(video=M,question='what happens')";
    let world = World::from_descriptors([fall_descriptor(), golden_descriptor()]);
    let answer = run(program, world, &[("VIDEO0", "ward"), ("VIDEO1", "bathroom")]);
    // longest visible event over both clips
    assert_eq!(answer, Value::Text("pick up towel".into()));
}
