use std::sync::Arc;

use super::*;
use crate::dsl::parse;
use crate::llm::{ProviderConfig, Script, ScriptedProvider};
use crate::registry::builtin_catalog;
use crate::synthetic::{
    eval_suite, example_set, item_scene, program_text, script_json, MergeBehavior, ScriptOptions,
};
use crate::world::standard_bindings;

fn gateway(opts: ScriptOptions) -> LlmGateway {
    let script = Script::from_json(&script_json(opts), "<test>").unwrap();
    LlmGateway::new(Arc::new(ScriptedProvider::new(script)), &ProviderConfig::scripted("<test>"))
}

struct Fixture {
    suite: EvalSuite,
    registry: Registry,
    bindings: Bindings,
    gateway: LlmGateway,
    config: EvalConfig,
}

impl Fixture {
    fn new(n: usize, multiple_choice: bool, opts: ScriptOptions) -> Self {
        let suite = eval_suite(n, multiple_choice);
        let bindings = standard_bindings(Arc::new(suite.world.clone()));
        Self {
            suite,
            registry: builtin_catalog(),
            bindings,
            gateway: gateway(opts),
            config: EvalConfig {
                seed: opts.seed,
                ..EvalConfig::default()
            },
        }
    }

    fn ctx(&self) -> EvalContext<'_> {
        EvalContext {
            registry: &self.registry,
            bindings: &self.bindings,
            gateway: &self.gateway,
            config: &self.config,
        }
    }
}

fn faulty(seed: u64) -> ScriptOptions {
    ScriptOptions {
        seed,
        inject: Some((0.3, 3)),
        ..ScriptOptions::default()
    }
}

#[test]
fn cooperative_suite_is_fully_answered() {
    let f = Fixture::new(50, true, ScriptOptions::default());
    let r = run_eval(&f.suite, &example_set(false), AblationFlags::all(1), &f.ctx()).unwrap();
    assert_eq!(r.total, 50);
    assert_eq!(r.correct, 50, "{:#?}", r.records.iter().find(|x| !x.correct));
    assert_eq!(r.accuracy, 1.0);
}

#[test]
fn injected_faults_cost_exactly_their_items() {
    let f = Fixture::new(50, false, faulty(42));
    let r = run_eval(&f.suite, &example_set(false), AblationFlags::NONE, &f.ctx()).unwrap();
    let injected = r
        .records
        .iter()
        .enumerate()
        .filter(|(i, rec)| {
            let s = item_scene(*i);
            rec.generated_program.as_deref() != Some(&program_text(s.direction.trim_function(), &s.anchor))
        })
        .count();
    assert!(injected > 0 && injected < 50);
    assert_eq!(r.correct, 50 - injected);
    assert_eq!(r.accuracy, 1.0 - injected as f64 / 50.0);
    assert!((r.accuracy - 0.7).abs() < 0.15, "{}", r.accuracy);
    assert!(r.records.iter().filter(|x| !x.valid).all(|x| !x.correct));
}

#[test]
fn free_text_matching_ignores_case() {
    assert_eq!(score("Pick up towel", None, "pick up towel"), (Some("Pick up towel".into()), true));
    assert!(score("pick up towel", Some(&[]), "pick up towel").1);
    assert!(!score("drop towel", None, "pick up towel").1);
}

#[test]
fn options_snap_to_nearest() {
    let opts: Vec<String> = ["open door", "pick up towel", "dry face"].iter().map(|s| s.to_string()).collect();
    assert_eq!(nearest_option("PICK UP TOWEL", &opts), Some("pick up towel"));
    assert_eq!(nearest_option("pick-up towel!", &opts), Some("pick up towel"));
    assert_eq!(nearest_option("he dries his face", &opts), Some("dry face"));
    assert_eq!(nearest_option("sleeps", &opts), None);
    assert_eq!(score("the towel", Some(&opts), "pick up towel"), (Some("pick up towel".into()), true));
}

#[test]
fn options_are_spliced_into_vqa_questions() {
    let p = parse("A=TRIM(video=VIDEO,start=0,end=1)\nB=VQA(video=A,question='what')").unwrap();
    let q = with_options(&p, &["x".into(), "y".into()]);
    assert_eq!(q.statements[1].args[1].value, ArgValue::text("what Options: a) x b) y"));
    assert_eq!(q.statements[0], p.statements[0]);
    assert_eq!(with_options(&p, &[]), p);
}

#[test]
fn ablation_rows_are_ordered() {
    let f = Fixture::new(50, true, faulty(42));
    let t = ablation_matrix(&f.suite, &example_set(true), 1, &f.ctx()).unwrap();
    assert_eq!(t.rows.len(), 4);
    assert_eq!(t.rows.iter().map(|r| r.label).collect::<Vec<_>>(), ABLATION_LABELS);
    assert!(t.is_ordered(), "{}", t.to_csv());
    let both = t.row(ABLATION_LABELS[3]).unwrap().accuracy;
    let none = t.row(ABLATION_LABELS[0]).unwrap().accuracy;
    assert_eq!(both, 1.0);
    assert!(none < t.row(ABLATION_LABELS[1]).unwrap().accuracy);
    assert!(none < t.row(ABLATION_LABELS[2]).unwrap().accuracy);
    let plain = run_eval(&f.suite, &example_set(true), AblationFlags::NONE, &f.ctx()).unwrap();
    assert_eq!(t.rows[0].accuracy, plain.accuracy);
}

#[test]
fn sweep_repairs_planted_flaw_then_plateaus() {
    let f = Fixture::new(40, false, ScriptOptions::default());
    let s = refinement_sweep(&f.suite, &example_set(true), 3, false, &f.ctx()).unwrap();
    let acc: Vec<f64> = s.rows.iter().map(|r| r.1).collect();
    assert_eq!(acc.len(), 4);
    // every fourth item asks about "before", which the flawed set trims wrongly
    assert_eq!(acc[0], 0.75);
    assert!(acc[1..].iter().all(|&a| a == 1.0), "{acc:?}");
    assert!(s.to_csv().starts_with("iteration,accuracy\n0,0.7500\n"));
}

#[test]
fn identity_merge_sweep_is_flat() {
    let f = Fixture::new(40, false, ScriptOptions {
        merge: MergeBehavior::Identity,
        ..ScriptOptions::default()
    });
    let s = refinement_sweep(&f.suite, &example_set(true), 3, false, &f.ctx()).unwrap();
    assert!(s.rows.iter().all(|r| r.1 == 0.75), "{:?}", s.rows);
}

#[test]
fn reports_are_reproducible_and_order_free() {
    let f = Fixture::new(30, true, faulty(7));
    let a = run_eval(&f.suite, &example_set(false), AblationFlags::NONE, &f.ctx()).unwrap();
    let g = Fixture::new(30, true, faulty(7));
    let b = run_eval(&g.suite, &example_set(false), AblationFlags::NONE, &g.ctx()).unwrap();
    assert_eq!(a.to_json(), b.to_json());

    let mut shuffled = f.suite.clone();
    shuffled.items.reverse();
    let c = run_eval(&shuffled, &example_set(false), AblationFlags::NONE, &f.ctx()).unwrap();
    assert_eq!(a.accuracy, c.accuracy);
}

#[test]
fn records_replay_to_their_predictions() {
    let f = Fixture::new(20, true, faulty(3));
    let r = run_eval(&f.suite, &example_set(false), AblationFlags::all(1), &f.ctx()).unwrap();
    for (item, rec) in f.suite.items.iter().zip(&r.records) {
        if !rec.valid {
            continue;
        }
        let p = parse(rec.corrected_program.as_deref().unwrap()).unwrap();
        assert_eq!(replay(&f.suite, item, &p, &f.ctx()).ok(), rec.raw_prediction);
    }
}

#[test]
fn suites_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let suite = eval_suite(5, true);
    let path = suite.save(dir.path()).unwrap();
    let back = EvalSuite::load(&path).unwrap();
    assert_eq!(back.items, suite.items);
    assert_eq!(back.world.len(), 5);
    assert_eq!(back.video_of(&back.items[2]), "vid002");
}

#[test]
fn answer_outside_options_is_rejected() {
    let mut suite = eval_suite(2, true);
    suite.items[1].answer = "juggle".into();
    let d: Vec<_> = (0..2).map(crate::synthetic::item_descriptor).collect();
    let err = EvalSuite::from_parts(suite.items, d).unwrap_err();
    assert!(err.to_string().contains("item001"), "{err}");
}

#[test]
fn empty_suite_is_an_error() {
    let f = Fixture::new(1, false, ScriptOptions::default());
    let mut empty = f.suite.clone();
    empty.items.clear();
    assert!(matches!(
        run_eval(&empty, &example_set(false), AblationFlags::NONE, &f.ctx()),
        Err(EvalError::NoItems)
    ));
}
