//! A misspelled function name is caught by the validator and repaired by
//! feeding its message back to the model. Also prints the invalid-program
//! curve over correction budgets for a batch with injected faults.

use std::collections::BTreeMap;
use std::sync::Arc;

use vurf::corrector::{correct, error_sweep, CorrectionOptions};
use vurf::dsl::{parse, print};
use vurf::llm::{LlmGateway, ProviderConfig, Script, ScriptedProvider};
use vurf::registry::{builtin_catalog, SemType};
use vurf::synthetic::{self, ScriptOptions, GOLDEN_INSTRUCTION, GOLDEN_PROGRAM};
use vurf::validator::validate;

fn gateway(json: &str) -> Result<LlmGateway, Box<dyn std::error::Error>> {
    let script = Script::from_json(json, "example")?;
    Ok(LlmGateway::new(Arc::new(ScriptedProvider::new(script)), &ProviderConfig::scripted("example")))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = builtin_catalog();
    let inputs = BTreeMap::from([("VIDEO".to_owned(), SemType::Video)]);

    let broken = parse(&GOLDEN_PROGRAM.replace("TRIMAFTER", "TRIMAFTR")).map_err(|e| e[0].to_string())?;
    for v in validate(&broken, &registry, &inputs).violations {
        println!("validator: {v}");
    }
    let g = gateway(r#"{"rules":[{"stage":"correct","response":{"action":"fix_flagged"}}]}"#)?;
    let report = correct(&broken, GOLDEN_INSTRUCTION, &registry, &inputs, &g, CorrectionOptions::default());
    println!(
        "after {} round(s), valid={}:\n{}\n",
        report.iterations_used,
        report.final_valid,
        print(&report.final_program)
    );

    // each correction round fixes one flagged fault, so a budget of k clears programs with at most k
    let faulty = gateway(&synthetic::script_json(ScriptOptions {
        seed: 42,
        inject: Some((0.3, 3)),
        ..ScriptOptions::default()
    }))?;
    let instructions = synthetic::item_instructions(400);
    let sweep = error_sweep(&instructions, &synthetic::example_set(false), &registry, &inputs, &faulty, 0..=3);
    print!("{}", sweep.to_csv());
    Ok(())
}
