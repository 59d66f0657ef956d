//! Few-shot program generation from an instruction.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dsl::{parse, ParseError, Program};
use crate::llm::{
    generation_preamble, scrape_program, Completion, LlmError, LlmGateway, PromptSpec, PromptTask, ScrapeError,
    DSL_SHAPE_HINT,
};
use crate::registry::Registry;
use crate::validator::{validate, video_inputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Curated,
    /// Produced by the given refinement iteration.
    Refined(u32),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Curated => f.write_str("curated"),
            Provenance::Refined(t) => write!(f, "refined({t})"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "curated" {
            return Ok(Provenance::Curated);
        }
        s.strip_prefix("refined(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|n| n.parse().ok())
            .map(Provenance::Refined)
            .ok_or_else(|| format!("unknown provenance '{s}'"))
    }
}

impl Serialize for Provenance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn curated() -> Provenance {
    Provenance::Curated
}

/// One instruction → program demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InContextExample {
    pub id: String,
    pub instruction: String,
    /// Canonical DSL text.
    pub program: String,
    #[serde(default = "curated")]
    pub provenance: Provenance,
}

impl InContextExample {
    pub fn new(id: impl Into<String>, instruction: impl Into<String>, program: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            instruction: instruction.into(),
            program: program.into(),
            provenance: Provenance::Curated,
        }
    }
}

/// Ordered demonstrations; every one is shown in every generation prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleSet {
    pub examples: Vec<InContextExample>,
    /// Name of the registry the programs are written against.
    pub registry: String,
}

#[derive(Debug, Error)]
pub enum ExampleSetError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Json { path: String, line: usize, message: String },
    #[error("duplicate example id '{0}'")]
    DuplicateId(String),
    #[error("example '{id}' does not parse: {message}")]
    Parse { id: String, message: String },
    #[error("example '{id}' is invalid: {feedback}")]
    Invalid { id: String, feedback: String },
}

pub const BUILTIN_REGISTRY_NAME: &str = "builtin";

impl ExampleSet {
    pub fn new(examples: Vec<InContextExample>) -> Self {
        Self {
            examples,
            registry: BUILTIN_REGISTRY_NAME.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.examples.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&InContextExample> {
        self.examples.iter().find(|e| e.id == id)
    }

    /// The set without the example `id`, order otherwise preserved.
    pub fn without(&self, id: &str) -> ExampleSet {
        ExampleSet {
            examples: self.examples.iter().filter(|e| e.id != id).cloned().collect(),
            registry: self.registry.clone(),
        }
    }

    /// Reads JSON Lines; blank lines are skipped.
    pub fn load(path: &Path) -> Result<Self, ExampleSetError> {
        let shown = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|source| ExampleSetError::Io {
            path: shown.clone(),
            source,
        })?;
        let mut examples = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| ExampleSetError::Io {
                path: shown.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            examples.push(serde_json::from_str(&line).map_err(|e| ExampleSetError::Json {
                path: shown.clone(),
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(Self::new(examples))
    }

    pub fn save(&self, path: &Path) -> Result<(), ExampleSetError> {
        let io = |source| ExampleSetError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        for e in &self.examples {
            writeln!(f, "{}", serde_json::to_string(e).expect("example serializes")).map_err(io)?;
        }
        f.flush().map_err(io)
    }

    /// Ids are unique and every program parses and validates with its free
    /// inputs bound as videos.
    pub fn validate(&self, registry: &Registry) -> Result<(), ExampleSetError> {
        let mut seen = BTreeSet::new();
        for e in &self.examples {
            if !seen.insert(e.id.as_str()) {
                return Err(ExampleSetError::DuplicateId(e.id.clone()));
            }
            let p = parse(&e.program).map_err(|errs| ExampleSetError::Parse {
                id: e.id.clone(),
                message: errs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
            })?;
            let fb = validate(&p, registry, &video_inputs(&p));
            if !fb.is_empty() {
                return Err(ExampleSetError::Invalid {
                    id: e.id.clone(),
                    feedback: fb.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("{0}")]
    Scrape(#[from] ScrapeError),
    #[error("generated program does not parse: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Parse(Vec<ParseError>),
}

/// The parsed program of a completion, or why there is none.
pub fn program_of(completion: &Completion) -> Result<Program, GenerationError> {
    if let Some(text) = &completion.extracted_program_text {
        return parse(text).map_err(GenerationError::Parse);
    }
    let text = scrape_program(&completion.raw_text)?;
    Err(GenerationError::Parse(parse(&text).expect_err("unparsable text was not extracted")))
}

pub fn generation_spec(instruction: &str, examples: &ExampleSet, registry: &Registry) -> PromptSpec {
    PromptSpec {
        task: PromptTask::Generate,
        system_preamble: generation_preamble(registry),
        in_context: examples.examples.clone(),
        instruction: instruction.to_owned(),
        extra_context: None,
    }
}

pub fn context_free_spec(instruction: &str, registry: &Registry) -> PromptSpec {
    PromptSpec {
        task: PromptTask::ContextFree,
        system_preamble: generation_preamble(registry),
        in_context: Vec::new(),
        instruction: instruction.to_owned(),
        extra_context: Some(format!("{DSL_SHAPE_HINT}\n\nAvailable functions:\n{}", registry.usage_block())),
    }
}

/// Prompts with every example and returns the parsed, unvalidated program.
pub fn generate(
    instruction: &str,
    examples: &ExampleSet,
    registry: &Registry,
    gateway: &LlmGateway,
) -> Result<Program, GenerationError> {
    program_of(&gateway.complete(&generation_spec(instruction, examples, registry))?)
}

/// Prompts with no examples, only the DSL shape and the function list.
pub fn generate_context_free(
    instruction: &str,
    registry: &Registry,
    gateway: &LlmGateway,
) -> Result<Program, GenerationError> {
    program_of(&gateway.complete(&context_free_spec(instruction, registry))?)
}

#[cfg(test)]
mod tests;
