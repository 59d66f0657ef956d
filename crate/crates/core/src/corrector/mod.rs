//! Validate → feed violations back → regenerate, until valid or out of
//! iterations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::dsl::{print, Program};
use crate::generator::{generate, program_of, ExampleSet, GenerationError};
use crate::llm::{correction_preamble, fenced, LlmGateway, PromptSpec, PromptTask, JUDGE_PREAMBLE};
use crate::registry::{Registry, SemType};
use crate::validator::{validate, Feedback};

pub const DEFAULT_MAX_ITERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrectionOptions {
    pub max_iters: usize,
    /// Ask the LLM whether the program is faulty before every round; its
    /// "no" ends the loop even if the validator disagrees.
    pub llm_judge: bool,
}

impl Default for CorrectionOptions {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            llm_judge: false,
        }
    }
}

/// The feedback that prompted a round and the program it produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionStep {
    pub feedback: Feedback,
    #[serde(serialize_with = "program_text")]
    pub program: Program,
}

fn program_text<S: serde::Serializer>(p: &Program, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&print(p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionReport {
    pub initial_program: Program,
    pub final_program: Program,
    pub iterations_used: usize,
    pub per_iteration: Vec<CorrectionStep>,
    pub final_valid: bool,
    pub final_feedback: Feedback,
    /// Set when a regeneration failed; the loop stops there.
    pub error: Option<GenerationError>,
}

pub fn correction_spec(program: &Program, instruction: &str, feedback: &Feedback, registry: &Registry) -> PromptSpec {
    PromptSpec {
        task: PromptTask::Correct,
        system_preamble: correction_preamble(registry),
        in_context: Vec::new(),
        instruction: instruction.to_owned(),
        extra_context: Some(format!("Previous program:\n{}\n\n{}", fenced(&print(program)), feedback.rendered)),
    }
}

pub fn judge_spec(program: &Program, instruction: &str, registry: &Registry) -> PromptSpec {
    PromptSpec {
        task: PromptTask::Judge,
        system_preamble: JUDGE_PREAMBLE.to_owned(),
        in_context: Vec::new(),
        instruction: instruction.to_owned(),
        extra_context: Some(format!(
            "Program to check:\n{}\n\nAvailable functions:\n{}",
            fenced(&print(program)),
            registry.usage_block()
        )),
    }
}

/// Works on the canonical (renumbered) form so feedback line numbers match
/// the program text shown to the LLM.
pub fn correct(
    program: &Program,
    instruction: &str,
    registry: &Registry,
    inputs: &BTreeMap<String, SemType>,
    gateway: &LlmGateway,
    opts: CorrectionOptions,
) -> CorrectionReport {
    let initial = program.canonicalized();
    let mut current = initial.clone();
    let mut per_iteration = Vec::new();
    let mut error = None;
    for _ in 0..opts.max_iters {
        let feedback = validate(&current, registry, inputs);
        if opts.llm_judge {
            match gateway.complete(&judge_spec(&current, instruction, registry)) {
                Ok(c) if c.raw_text.trim().to_lowercase().starts_with("no") => break,
                Ok(_) => {}
                Err(e) => {
                    error = Some(e.into());
                    break;
                }
            }
        }
        if feedback.is_empty() {
            break;
        }
        let next = gateway
            .complete(&correction_spec(&current, instruction, &feedback, registry))
            .map_err(GenerationError::from)
            .and_then(|c| program_of(&c));
        match next {
            Ok(p) => {
                current = p.canonicalized();
                per_iteration.push(CorrectionStep {
                    feedback,
                    program: current.clone(),
                });
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    let final_feedback = validate(&current, registry, inputs);
    CorrectionReport {
        initial_program: initial,
        final_valid: error.is_none() && final_feedback.is_empty(),
        final_program: current,
        iterations_used: per_iteration.len(),
        per_iteration,
        final_feedback,
        error,
    }
}

/// Invalid final programs per correction budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorSweep {
    /// `(iterations, invalid_count)`, in increasing iterations.
    pub rows: Vec<(usize, usize)>,
}

impl ErrorSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iterations,invalid_count\n");
        for (k, n) in &self.rows {
            writeln!(out, "{k},{n}").unwrap();
        }
        out
    }

    pub fn is_non_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

/// Generates a program per instruction, then counts how many are still
/// invalid after correcting with each budget in `iters`. Failed
/// generations count as invalid for every budget.
pub fn error_sweep(
    instructions: &[String],
    examples: &ExampleSet,
    registry: &Registry,
    inputs: &BTreeMap<String, SemType>,
    gateway: &LlmGateway,
    iters: RangeInclusive<usize>,
) -> ErrorSweep {
    let generated: Vec<Option<Program>> = instructions
        .par_iter()
        .map(|i| generate(i, examples, registry, gateway).ok())
        .collect();
    let rows = iters
        .map(|k| {
            let invalid = instructions
                .par_iter()
                .zip(&generated)
                .filter(|(instruction, program)| match program {
                    None => true,
                    Some(p) => {
                        let opts = CorrectionOptions {
                            max_iters: k,
                            llm_judge: false,
                        };
                        !correct(p, instruction, registry, inputs, gateway, opts).final_valid
                    }
                })
                .count();
            (k, invalid)
        })
        .collect();
    ErrorSweep { rows }
}

#[cfg(test)]
mod tests;
