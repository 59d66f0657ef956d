//! Writes a synthetic evaluation suite, both example sets and a scripted
//! model to a directory, in the formats the CLI reads.
//!
//! cargo run --example write_synthetic_suite -- <out-dir> [n]

use std::path::PathBuf;

use vurf::synthetic::{self, ScriptOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synthetic".into()));
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50);
    std::fs::create_dir_all(&dir)?;

    let items = synthetic::eval_suite(n, true).save(&dir.join("suite"))?;
    synthetic::example_set(false).save(&dir.join("examples.jsonl"))?;
    synthetic::example_set(true).save(&dir.join("examples_flawed.jsonl"))?;
    std::fs::write(dir.join("script.json"), synthetic::script_json(ScriptOptions::default()))?;
    println!("wrote {} ({n} items)", items.display());
    println!("try: vurf --script {0}/script.json eval --items {1} --examples {0}/examples_flawed.jsonl", dir.display(), items.display());
    Ok(())
}
