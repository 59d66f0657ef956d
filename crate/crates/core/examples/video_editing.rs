//! Edits are symbolic: trimming, blurring and merging produce a playlist of
//! annotated clip windows rather than new pixels.

use std::collections::BTreeMap;
use std::sync::Arc;

use vurf::dsl::parse;
use vurf::interpreter::{execute, ExecOptions, Value};
use vurf::registry::builtin_catalog;
use vurf::synthetic::{fall_descriptor, golden_descriptor};
use vurf::validator::video_inputs;
use vurf::world::{standard_bindings, World};

const PROGRAM: &str = "A=TRIM(video=VIDEO0,start=1,end=4)
B=BGBLUR(video=A,object='old man')
C=COLORPOP(video=VIDEO1,object='towel')
D=MERGE(video0=B,video1=C)";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let program = parse(PROGRAM).map_err(|e| e[0].to_string())?;
    println!("free inputs: {:?}", video_inputs(&program).keys().collect::<Vec<_>>());
    let world = World::from_descriptors([fall_descriptor(), golden_descriptor()]);
    let inputs = BTreeMap::from([
        ("VIDEO0".to_owned(), Value::Video(world.input_video("ward").unwrap())),
        ("VIDEO1".to_owned(), Value::Video(world.input_video("bathroom").unwrap())),
    ]);
    let bindings = standard_bindings(Arc::new(world));
    let (edited, _) = execute(&program, &inputs, &bindings, &builtin_catalog(), &ExecOptions::default())?;
    let Value::Video(v) = &edited else { unreachable!("MERGE returns a video") };
    println!("{edited}");
    println!("{} clip(s), {:.1} s", v.clips.len(), v.duration());
    Ok(())
}
