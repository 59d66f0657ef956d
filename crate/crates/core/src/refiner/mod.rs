//! Offline refinement of an in-context example set.
//!
//! For each example, a contextual program P (generated from the rest of the
//! set) and a context-free program P′ (generated from the function list
//! alone) are handed back to the LLM to merge. A merge replaces the
//! example's program only if it parses, validates and keeps the example's
//! free inputs; otherwise the previous program stays, so every returned set
//! is as valid as the input set.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::dsl::{print, Program};
use crate::generator::{
    generate, generate_context_free, program_of, ExampleSet, GenerationError, InContextExample, Provenance,
};
use crate::llm::{fenced, merge_preamble, LlmGateway, PromptSpec, PromptTask};
use crate::registry::Registry;
use crate::validator::{validate, video_inputs};

pub const MAX_REFINEMENT_ITERATIONS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefinementConfig {
    pub iterations: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefinementConfigError {
    #[error("refinement needs between 1 and {MAX_REFINEMENT_ITERATIONS} iterations, got {0}")]
    Iterations(u32),
}

impl RefinementConfig {
    pub fn new(iterations: u32) -> Result<Self, RefinementConfigError> {
        if (1..=MAX_REFINEMENT_ITERATIONS).contains(&iterations) {
            Ok(Self { iterations })
        } else {
            Err(RefinementConfigError::Iterations(iterations))
        }
    }
}

/// Why a merge was not accepted.
#[derive(Debug, Clone, PartialEq)]
pub enum Rejection {
    Contextual(GenerationError),
    ContextFree(GenerationError),
    Merge(GenerationError),
    Invalid(String),
    InputsChanged,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Contextual(e) => write!(f, "contextual generation failed: {e}"),
            Rejection::ContextFree(e) => write!(f, "context-free generation failed: {e}"),
            Rejection::Merge(e) => write!(f, "merge failed: {e}"),
            Rejection::Invalid(why) => write!(f, "merged program is invalid: {why}"),
            Rejection::InputsChanged => f.write_str("merged program changes the free inputs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRecord {
    pub id: String,
    pub instruction: String,
    /// P: generated with the rest of the set as examples.
    pub contextual_program: Option<Program>,
    /// P′: generated without examples.
    pub context_free_program: Option<Program>,
    /// The merge when accepted, else P, else the example's old program.
    pub refined_program: Program,
    pub iteration: u32,
    pub accepted: bool,
    pub rejection: Option<Rejection>,
}

pub fn merge_spec(instruction: &str, a: &Program, b: &Program, registry: &Registry) -> PromptSpec {
    PromptSpec {
        task: PromptTask::Merge,
        system_preamble: merge_preamble(registry),
        in_context: Vec::new(),
        instruction: instruction.to_owned(),
        extra_context: Some(format!(
            "Program A (structure to preserve):\n{}\n\nProgram B (reasoning to incorporate):\n{}\n\nAvailable functions:\n{}",
            fenced(&print(a)),
            fenced(&print(b)),
            registry.usage_block()
        )),
    }
}

/// Refines one example against `examples`, which must contain it.
pub fn refine_example(
    example: &InContextExample,
    examples: &ExampleSet,
    registry: &Registry,
    gateway: &LlmGateway,
    iteration: u32,
) -> RefinementRecord {
    let old = crate::dsl::parse(&example.program).ok();
    let p = generate(&example.instruction, &examples.without(&example.id), registry, gateway);
    let p_prime = generate_context_free(&example.instruction, registry, gateway);
    let mut record = RefinementRecord {
        id: example.id.clone(),
        instruction: example.instruction.clone(),
        contextual_program: p.as_ref().ok().cloned(),
        context_free_program: p_prime.as_ref().ok().cloned(),
        refined_program: Program::new(Vec::new()),
        iteration,
        accepted: false,
        rejection: None,
    };
    let fallback = record.contextual_program.clone().or(old.clone()).unwrap_or_else(|| Program::new(Vec::new()));
    let outcome = (|| {
        let p = p.map_err(Rejection::Contextual)?;
        let p_prime = p_prime.map_err(Rejection::ContextFree)?;
        let merged = gateway
            .complete(&merge_spec(&example.instruction, &p, &p_prime, registry))
            .map_err(GenerationError::from)
            .and_then(|c| program_of(&c))
            .map_err(Rejection::Merge)?
            .canonicalized();
        let expected = old.as_ref().map_or_else(|| p.free_inputs(), Program::free_inputs);
        let fb = validate(&merged, registry, &video_inputs(&merged));
        if !fb.is_empty() {
            return Err(Rejection::Invalid(
                fb.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
            ));
        }
        if merged.free_inputs() != expected || merged.free_inputs() != p.free_inputs() {
            return Err(Rejection::InputsChanged);
        }
        Ok(merged)
    })();
    match outcome {
        Ok(merged) => {
            record.refined_program = merged;
            record.accepted = true;
        }
        Err(why) => {
            record.refined_program = fallback;
            record.rejection = Some(why);
        }
    }
    record
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementOutcome {
    /// `sets[t - 1]` is the set after iteration `t`.
    pub sets: Vec<ExampleSet>,
    pub records: Vec<Vec<RefinementRecord>>,
}

/// Runs `config.iterations` rounds; round t refines every example of set(t−1)
/// against set(t−1). Accepted merges replace their example's program.
pub fn refine_set(
    examples: &ExampleSet,
    registry: &Registry,
    gateway: &LlmGateway,
    config: RefinementConfig,
) -> RefinementOutcome {
    let mut current = examples.clone();
    let mut sets = Vec::new();
    let mut records = Vec::new();
    for t in 1..=config.iterations {
        let round: Vec<RefinementRecord> = current
            .examples
            .par_iter()
            .map(|e| refine_example(e, &current, registry, gateway, t))
            .collect();
        let next = ExampleSet {
            examples: current
                .examples
                .iter()
                .zip(&round)
                .map(|(e, r)| {
                    if r.accepted {
                        InContextExample {
                            program: print(&r.refined_program),
                            provenance: Provenance::Refined(t),
                            ..e.clone()
                        }
                    } else {
                        e.clone()
                    }
                })
                .collect(),
            registry: current.registry.clone(),
        };
        tracing::info!(
            iteration = t,
            accepted = round.iter().filter(|r| r.accepted).count(),
            total = round.len(),
            "refinement round finished"
        );
        sets.push(next.clone());
        records.push(round);
        current = next;
    }
    RefinementOutcome { sets, records }
}

#[cfg(test)]
mod tests;
