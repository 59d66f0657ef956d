//! Generates a program for a temporal question, runs it against the mock
//! bathroom video and prints every step of the trace.

use std::collections::BTreeMap;
use std::sync::Arc;

use vurf::dsl::print;
use vurf::generator::generate;
use vurf::interpreter::{execute, ExecOptions, Value};
use vurf::llm::{LlmGateway, ProviderConfig, Script, ScriptedProvider};
use vurf::registry::builtin_catalog;
use vurf::synthetic::{golden_descriptor, golden_examples, golden_script_json, GOLDEN_INSTRUCTION};
use vurf::world::{standard_bindings, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = Script::from_json(&golden_script_json(), "golden")?;
    let gateway = LlmGateway::new(Arc::new(ScriptedProvider::new(script)), &ProviderConfig::scripted("golden"));
    let registry = builtin_catalog();

    let program = generate(GOLDEN_INSTRUCTION, &golden_examples(), &registry, &gateway)?;
    println!("{GOLDEN_INSTRUCTION}\n\n{}\n", print(&program));

    let world = World::single(golden_descriptor());
    let inputs = BTreeMap::from([("VIDEO".to_owned(), Value::Video(world.input_video("bathroom").unwrap()))]);
    let bindings = standard_bindings(Arc::new(world));
    let (answer, trace) = execute(&program, &inputs, &bindings, &registry, &ExecOptions::default())?;
    for step in &trace.steps {
        println!("line {} {:<10} -> {}", step.line_no, step.function, step.output);
    }
    println!("\nanswer: {answer}");
    Ok(())
}
