//! Asks one question over two merged input videos, bound as VIDEO0 and
//! VIDEO1.

use std::collections::BTreeMap;
use std::sync::Arc;

use vurf::dsl::parse;
use vurf::interpreter::{execute, ExecOptions, Value};
use vurf::registry::builtin_catalog;
use vurf::synthetic::{fall_descriptor, golden_descriptor};
use vurf::world::{standard_bindings, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let program = parse("M=MERGE(video0=VIDEO0,video1=VIDEO1)\nA=VQA(video=M,question='what happens')").map_err(|e| e[0].to_string())?;
    let world = World::from_descriptors([fall_descriptor(), golden_descriptor()]);
    let inputs = BTreeMap::from([
        ("VIDEO0".to_owned(), Value::Video(world.input_video("ward").unwrap())),
        ("VIDEO1".to_owned(), Value::Video(world.input_video("bathroom").unwrap())),
    ]);
    let bindings = standard_bindings(Arc::new(world));
    let (answer, trace) = execute(&program, &inputs, &bindings, &builtin_catalog(), &ExecOptions::default())?;
    println!("{}\n{answer}", trace.steps[0].output);
    Ok(())
}
