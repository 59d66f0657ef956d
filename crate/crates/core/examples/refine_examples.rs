//! Refines an example set whose "before" examples trim the wrong side of
//! the anchor event, then prints which examples each round changed.

use std::sync::Arc;

use vurf::llm::{LlmGateway, ProviderConfig, Script, ScriptedProvider};
use vurf::refiner::{refine_set, RefinementConfig};
use vurf::registry::builtin_catalog;
use vurf::synthetic::{self, ScriptOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = Script::from_json(&synthetic::script_json(ScriptOptions::default()), "refine")?;
    let gateway = LlmGateway::new(Arc::new(ScriptedProvider::new(script)), &ProviderConfig::scripted("refine"));
    let registry = builtin_catalog();
    let flawed = synthetic::example_set(true);

    let outcome = refine_set(&flawed, &registry, &gateway, RefinementConfig::new(3)?);
    for (t, (set, records)) in outcome.sets.iter().zip(&outcome.records).enumerate() {
        let changed: Vec<&str> = set
            .examples
            .iter()
            .zip(if t == 0 { &flawed } else { &outcome.sets[t - 1] }.examples.iter())
            .filter(|(new, old)| new.program != old.program)
            .map(|(new, _)| new.id.as_str())
            .collect();
        let accepted = records.iter().filter(|r| r.accepted).count();
        println!("iteration {}: {accepted}/{} merges accepted, changed {changed:?}", t + 1, records.len());
    }
    let last = outcome.sets.last().unwrap();
    let e = last.examples.iter().find(|e| e.instruction.contains("before")).unwrap();
    println!("\n{} ({}):\n{}", e.id, e.provenance, e.program);
    Ok(())
}
