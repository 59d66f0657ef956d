//! Deterministic stand-in for an LLM: an ordered list of match → response
//! rules read from JSON.
//!
//! ```json
//! {"seed": 42, "rules": [
//!   {"stage": "generate",
//!    "match": {"regex": "after (?P<event>.+)\\?$"}, "target": "instruction",
//!    "response": {"action": "imitate", "slots": {"query": "{event}"}},
//!    "inject": {"rate": 0.3, "max_faults": 3}},
//!   {"stage": "correct", "response": {"action": "fix_flagged", "per_call": 1}},
//!   {"match": {"contains": "I cannot"}, "response": "I cannot help with that."}
//! ]}
//! ```
//!
//! The first rule whose stage and matcher both accept the prompt answers it.
//! Every response is a pure function of the prompt, the rule and the seed;
//! fault injection draws from an RNG seeded by a hash of (seed, rule index,
//! instruction), so results never depend on call order or threading.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::LazyLock;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::prompt::{PromptSpec, PromptTask, RenderedPrompt};
use super::scrape::scrape_program;
use super::{LlmError, LlmProvider, SamplingParams};
use crate::dsl::{parse, print, ArgValue, Program};
use crate::world::tokens;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid script {path}: {message}")]
pub struct ScriptError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Target {
    #[default]
    Prompt,
    Instruction,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum MatcherDoc {
    Contains { contains: String },
    Regex { regex: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    /// Copies the program of the in-context example whose instruction
    /// shares the most tokens with the new one, refilling the listed
    /// string arguments from templates.
    Imitate {
        #[serde(default)]
        slots: BTreeMap<String, String>,
    },
    /// A fixed program with `{placeholders}` filled.
    Template { program: String },
    /// Renames up to `per_call` flagged unknown functions in the previous
    /// program to their suggested names.
    FixFlagged {
        #[serde(default = "one")]
        per_call: usize,
    },
    /// Returns the previous program untouched.
    EchoPrevious,
    PickA,
    PickB,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ResponseDoc {
    Text(String),
    Action(Action),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inject {
    /// Probability that a response gets corrupted at all.
    pub rate: f64,
    /// Upper bound on corrupted statements per response.
    pub max_faults: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    stage: Option<PromptTask>,
    #[serde(default, rename = "match")]
    matcher: Option<MatcherDoc>,
    #[serde(default)]
    target: Target,
    response: ResponseDoc,
    #[serde(default)]
    inject: Option<Inject>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptDoc {
    #[serde(default)]
    seed: u64,
    rules: Vec<RuleDoc>,
}

#[derive(Debug, Clone)]
enum Matcher {
    Any,
    Contains(String),
    Regex(Regex),
}

#[derive(Debug, Clone)]
enum Response {
    Text(String),
    Action(Action),
}

#[derive(Debug)]
struct Rule {
    name: String,
    stage: Option<PromptTask>,
    matcher: Matcher,
    target: Target,
    response: Response,
    inject: Option<Inject>,
    hits: AtomicU64,
}

/// A loaded, validated script.
#[derive(Debug)]
pub struct Script {
    seed: u64,
    rules: Vec<Rule>,
    /// Hash of the source text, part of the cache fingerprint.
    digest: String,
}

pub fn load_script(path: &Path) -> Result<Script, ScriptError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ScriptError {
        path: shown.clone(),
        message: e.to_string(),
    })?;
    Script::from_json(&text, &shown)
}

impl Script {
    pub fn from_json(text: &str, path: &str) -> Result<Self, ScriptError> {
        let fail = |message: String| ScriptError {
            path: path.to_owned(),
            message,
        };
        let doc: ScriptDoc = serde_json::from_str(text).map_err(|e| fail(e.to_string()))?;
        let mut rules = Vec::with_capacity(doc.rules.len());
        for (i, r) in doc.rules.into_iter().enumerate() {
            let name = r.name.unwrap_or_else(|| format!("rule {i}"));
            let matcher = match r.matcher {
                None => Matcher::Any,
                Some(MatcherDoc::Contains { contains }) => Matcher::Contains(contains),
                Some(MatcherDoc::Regex { regex }) => Matcher::Regex(
                    Regex::new(&regex).map_err(|e| fail(format!("rules[{i}].match.regex: {e}")))?,
                ),
            };
            if let Some(inj) = r.inject {
                if !(0.0..=1.0).contains(&inj.rate) {
                    return Err(fail(format!("rules[{i}].inject.rate must lie in [0, 1]")));
                }
                if inj.max_faults == 0 {
                    return Err(fail(format!("rules[{i}].inject.max_faults must be at least 1")));
                }
            }
            if let ResponseDoc::Action(Action::FixFlagged { per_call: 0 }) = r.response {
                return Err(fail(format!("rules[{i}].response.per_call must be at least 1")));
            }
            rules.push(Rule {
                name,
                stage: r.stage,
                matcher,
                target: r.target,
                response: match r.response {
                    ResponseDoc::Text(t) => Response::Text(t),
                    ResponseDoc::Action(a) => Response::Action(a),
                },
                inject: r.inject,
                hits: AtomicU64::new(0),
            });
        }
        Ok(Self {
            seed: doc.seed,
            rules,
            digest: hex::encode(Sha256::digest(text.as_bytes())),
        })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    /// Rule name → number of prompts it answered.
    pub fn hits(&self) -> Vec<(String, u64)> {
        self.rules
            .iter()
            .map(|r| (r.name.clone(), r.hits.load(Ordering::Relaxed)))
            .collect()
    }
}

/// Serves completions from a [`Script`].
#[derive(Debug)]
pub struct ScriptedProvider {
    script: Script,
}

impl ScriptedProvider {
    pub fn new(script: Script) -> Self {
        Self { script }
    }

    pub fn script(&self) -> &Script {
        &self.script
    }
}

fn fill(template: &str, vars: &BTreeMap<String, String>) -> String {
    let mut out = template.to_owned();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

static FLAGGED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"line (\d+): unknown function '([^']+)'\. Did you mean '([^']+)'\?").unwrap());

/// The program inside the first fence following `marker`.
fn block_after(text: &str, marker: &str) -> Option<String> {
    let rest = &text[text.find(marker)? + marker.len()..];
    let start = rest.find("```")?;
    let body = &rest[start + 3..];
    let body = &body[body.find('\n')? + 1..];
    let end = body.find("```")?;
    Some(body[..end].trim().to_owned())
}

fn imitate(spec: &PromptSpec, slots: &BTreeMap<String, String>, vars: &BTreeMap<String, String>) -> Result<String, String> {
    let want: Vec<String> = tokens(&spec.instruction);
    let overlap = |s: &str| {
        let have = tokens(s);
        want.iter().filter(|t| have.contains(t)).count()
    };
    let mut best: Option<(usize, &str)> = None;
    for ex in &spec.in_context {
        let score = overlap(&ex.instruction);
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, &ex.program));
        }
    }
    let (_, program) = best.ok_or("imitate needs at least one in-context example")?;
    let mut p = parse(program).map_err(|_| "nearest example does not parse".to_owned())?;
    for stmt in &mut p.statements {
        for arg in &mut stmt.args {
            if let (Some(t), ArgValue::Str(_)) = (slots.get(&arg.name), &arg.value) {
                arg.value = ArgValue::Str(fill(t, vars));
            }
        }
    }
    Ok(print(&p))
}

fn fix_flagged(spec: &PromptSpec, per_call: usize) -> Result<String, String> {
    let extra = spec.extra_context.as_deref().unwrap_or_default();
    let previous = block_after(extra, "Previous program:").ok_or("no previous program in the prompt")?;
    let mut p = parse(&previous).map_err(|_| "previous program does not parse".to_owned())?;
    let mut fixed = 0;
    for cap in FLAGGED.captures_iter(extra) {
        if fixed == per_call {
            break;
        }
        let line: usize = cap[1].parse().map_err(|_| "bad line number")?;
        let Some(stmt) = p.statements.get_mut(line.wrapping_sub(1)) else { continue };
        if stmt.function_name == cap[2] {
            stmt.function_name = cap[3].to_owned();
            fixed += 1;
        }
    }
    Ok(print(&p))
}

/// A name one edit away from `name`: its last character dropped, or an `X`
/// appended to names of three characters or fewer.
pub fn corrupt_name(name: &str) -> String {
    if name.chars().count() > 3 {
        let mut s = name.to_owned();
        s.pop();
        s
    } else {
        format!("{name}X")
    }
}

fn injection_rng(seed: u64, rule: usize, instruction: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((rule as u64).to_le_bytes());
    h.update(instruction.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Corrupts the function names of a seeded random subset of statements.
/// Text that does not scrape and parse is left alone.
pub fn inject_faults(text: &str, inject: Inject, rng: &mut impl Rng) -> String {
    let Some(mut p) = scrape_program(text).ok().and_then(|t| parse(&t).ok()) else {
        return text.to_owned();
    };
    if !rng.gen_bool(inject.rate) {
        return text.to_owned();
    }
    let n = p.statements.len();
    let k = rng.gen_range(1..=inject.max_faults.min(n));
    for i in sample(rng, n, k) {
        let s = &mut p.statements[i];
        s.function_name = corrupt_name(&s.function_name);
    }
    print(&p)
}

fn was_injected(p: &Program, original: &Program) -> usize {
    p.statements
        .iter()
        .zip(&original.statements)
        .filter(|(a, b)| a.function_name != b.function_name)
        .count()
}

/// Number of statements whose function differs, for inspecting injections.
pub fn fault_count(injected: &str, clean: &str) -> usize {
    match (parse(injected), parse(clean)) {
        (Ok(a), Ok(b)) => was_injected(&a, &b),
        _ => 0,
    }
}

impl LlmProvider for ScriptedProvider {
    fn fingerprint(&self) -> String {
        format!("scripted:{}:{}", self.script.digest, self.script.seed)
    }

    fn respond(&self, spec: &PromptSpec, prompt: &RenderedPrompt, _params: &SamplingParams) -> Result<String, LlmError> {
        let full = prompt.text();
        for (i, rule) in self.script.rules.iter().enumerate() {
            if rule.stage.is_some_and(|s| s != spec.task) {
                continue;
            }
            let target = match rule.target {
                Target::Prompt => full.as_str(),
                Target::Instruction => spec.instruction.as_str(),
            };
            let mut vars = BTreeMap::from([("instruction".to_owned(), spec.instruction.clone())]);
            let matched = match &rule.matcher {
                Matcher::Any => true,
                Matcher::Contains(s) => target.contains(s.as_str()),
                Matcher::Regex(re) => match re.captures(target) {
                    Some(caps) => {
                        for name in re.capture_names().flatten() {
                            if let Some(m) = caps.name(name) {
                                vars.insert(name.to_owned(), m.as_str().to_owned());
                            }
                        }
                        true
                    }
                    None => false,
                },
            };
            if !matched {
                continue;
            }
            rule.hits.fetch_add(1, Ordering::Relaxed);
            let action_error = |message: String| LlmError::Script {
                rule: rule.name.clone(),
                message,
            };
            let extra = spec.extra_context.as_deref().unwrap_or_default();
            let text = match &rule.response {
                Response::Text(t) => t.clone(),
                Response::Action(Action::Template { program }) => fill(program, &vars),
                Response::Action(Action::Imitate { slots }) => imitate(spec, slots, &vars).map_err(action_error)?,
                Response::Action(Action::FixFlagged { per_call }) => fix_flagged(spec, *per_call).map_err(action_error)?,
                Response::Action(Action::EchoPrevious) => block_after(extra, "Previous program:")
                    .ok_or_else(|| action_error("no previous program in the prompt".into()))?,
                Response::Action(Action::PickA) => block_after(extra, "Program A")
                    .ok_or_else(|| action_error("no Program A in the prompt".into()))?,
                Response::Action(Action::PickB) => block_after(extra, "Program B")
                    .ok_or_else(|| action_error("no Program B in the prompt".into()))?,
            };
            return Ok(match rule.inject {
                Some(inj) => inject_faults(&text, inj, &mut injection_rng(self.script.seed, i, &spec.instruction)),
                None => text,
            });
        }
        Err(LlmError::ScriptMiss {
            task: spec.task,
            instruction: spec.instruction.clone(),
        })
    }
}
