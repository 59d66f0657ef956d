use std::fmt;

use serde::{Deserialize, Serialize};

use crate::generator::InContextExample;
use crate::registry::Registry;

/// Which pipeline stage a prompt serves. Scripted providers key rules on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTask {
    Generate,
    ContextFree,
    Correct,
    Merge,
    Judge,
}

impl fmt::Display for PromptTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptTask::Generate => "generate",
            PromptTask::ContextFree => "context_free",
            PromptTask::Correct => "correct",
            PromptTask::Merge => "merge",
            PromptTask::Judge => "judge",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub task: PromptTask,
    pub system_preamble: String,
    /// Rendered verbatim and in order.
    pub in_context: Vec<InContextExample>,
    pub instruction: String,
    pub extra_context: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub messages: Vec<Message>,
}

impl RenderedPrompt {
    /// All message contents joined, the text rule matchers see.
    pub fn text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// DSL shape description given to prompts that carry no examples.
pub const DSL_SHAPE_HINT: &str = "Programs are straight-line: one statement per line, each of the form \
OUT=FUNC(arg=value,...). Arguments are named. A value is a variable (an earlier output, or the input \
VIDEO, or VIDEO0, VIDEO1, ... for several videos), a quoted string, a number, or true/false. The last \
statement's output is the answer.";

fn function_list(registry: &Registry) -> String {
    registry.names().collect::<Vec<_>>().join(", ")
}

pub fn generation_preamble(registry: &Registry) -> String {
    format!(
        "You write programs in a small video programming language, one statement per line, \
         in the form OUT=FUNC(arg=value,...). Use ONLY these functions: {}. \
         Reply with the program only.",
        function_list(registry)
    )
}

pub fn correction_preamble(registry: &Registry) -> String {
    format!(
        "You repair programs in a small video programming language. Rewrite the previous program \
         so that it satisfies every listed constraint, using ONLY these functions: {}. \
         Reply with the program only.",
        function_list(registry)
    )
}

pub fn merge_preamble(registry: &Registry) -> String {
    format!(
        "You combine two candidate programs for the same instruction into one program in a small \
         video programming language. Keep the structure of Program A, take over any better \
         reasoning from Program B, and use ONLY these functions: {}. Reply with the program only.",
        function_list(registry)
    )
}

pub const JUDGE_PREAMBLE: &str = "You check programs in a small video programming language. Answer \
'yes' if the program violates any of the listed constraints (unknown functions, unknown or missing \
arguments, wrongly typed arguments, unbound inputs), otherwise answer 'no'.";

/// Wraps program text in a plain code fence.
pub fn fenced(program_text: &str) -> String {
    format!("```\n{}\n```", program_text.trim_end())
}

impl PromptSpec {
    pub fn render(&self) -> RenderedPrompt {
        let mut user = String::new();
        for ex in &self.in_context {
            user.push_str(&format!("Instruction: {}\nProgram:\n{}\n\n", ex.instruction, ex.program.trim_end()));
        }
        if let Some(extra) = &self.extra_context {
            user.push_str(extra.trim_end());
            user.push_str("\n\n");
        }
        user.push_str(&format!("Instruction: {}\nProgram:", self.instruction));
        RenderedPrompt {
            messages: vec![
                Message {
                    role: "system".into(),
                    content: self.system_preamble.clone(),
                },
                Message {
                    role: "user".into(),
                    content: user,
                },
            ],
        }
    }
}
