//! Builds a 50-item multiple-choice suite over synthetic videos and prints
//! the ablation table and the accuracy-by-refinement-iteration curve.

use std::sync::Arc;

use vurf::eval::{ablation_matrix, refinement_sweep, EvalConfig, EvalContext};
use vurf::llm::{LlmGateway, ProviderConfig, Script, ScriptedProvider};
use vurf::registry::builtin_catalog;
use vurf::synthetic::{self, ScriptOptions};
use vurf::world::standard_bindings;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = ScriptOptions {
        seed: 42,
        inject: Some((0.3, 3)),
        ..ScriptOptions::default()
    };
    let script = Script::from_json(&synthetic::script_json(opts), "ablation")?;
    let gateway = LlmGateway::new(Arc::new(ScriptedProvider::new(script)), &ProviderConfig::scripted("ablation"));
    let suite = synthetic::eval_suite(50, true);
    let registry = builtin_catalog();
    let bindings = standard_bindings(Arc::new(suite.world.clone()));
    let config = EvalConfig {
        seed: opts.seed,
        ..EvalConfig::default()
    };
    let ctx = EvalContext {
        registry: &registry,
        bindings: &bindings,
        gateway: &gateway,
        config: &config,
    };
    let flawed = synthetic::example_set(true);

    println!("{}", ablation_matrix(&suite, &flawed, 1, &ctx)?.to_csv());
    println!("{}", refinement_sweep(&suite, &flawed, 3, true, &ctx)?.to_csv());
    Ok(())
}
