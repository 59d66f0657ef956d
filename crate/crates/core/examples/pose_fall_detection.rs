//! Tracks each person in a ward video, crops to them, estimates pose and
//! classifies it, so the fall is attributed to the right person.

use std::collections::BTreeMap;
use std::sync::Arc;

use vurf::dsl::parse;
use vurf::interpreter::{execute, ExecOptions, Value};
use vurf::registry::builtin_catalog;
use vurf::synthetic::{fall_descriptor, fall_program};
use vurf::world::{standard_bindings, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = World::single(fall_descriptor());
    let inputs = BTreeMap::from([("VIDEO".to_owned(), Value::Video(world.input_video("ward").unwrap()))]);
    let bindings = standard_bindings(Arc::new(world));
    let registry = builtin_catalog();
    for person in ["old man", "nurse"] {
        let program = parse(&fall_program(person)).map_err(|e| e[0].to_string())?;
        let (answer, trace) = execute(&program, &inputs, &bindings, &registry, &ExecOptions::default())?;
        println!("{person}: {answer}");
        for step in &trace.steps {
            println!("  {:<12} -> {}", step.function, step.output);
        }
    }
    Ok(())
}
