//! Static checks of a program against a registry, and the feedback text
//! handed back to the model when a program breaks them.

pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::{ArgValue, Program};
use crate::registry::{Registry, SemType};

/// Suggestions are only offered within this edit distance.
pub const SUGGESTION_MAX_DISTANCE: usize = 3;

pub const FEEDBACK_HEADER: &str = "The program violates these constraints:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    UnknownFunction,
    UnknownParam,
    MissingRequiredParam,
    ArgTypeMismatch,
    ResultTypeUnknown,
    UnboundInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub line_no: usize,
    pub kind: ViolationKind,
    pub detail: String,
    pub suggestion: Option<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}.", self.line_no, self.detail)?;
        if let Some(s) = &self.suggestion {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub violations: Vec<Violation>,
    /// Empty exactly when `violations` is empty.
    pub rendered: String,
}

impl Feedback {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn from_violations(violations: Vec<Violation>, registry: &Registry) -> Self {
        if violations.is_empty() {
            return Self::default();
        }
        let mut rendered = String::from(FEEDBACK_HEADER);
        for v in &violations {
            rendered.push_str("\n- ");
            rendered.push_str(&v.to_string());
        }
        rendered.push_str("\n\nAvailable functions:\n");
        rendered.push_str(&registry.usage_block());
        Self {
            violations,
            rendered,
        }
    }

    pub fn kinds(&self) -> Vec<ViolationKind> {
        self.violations.iter().map(|v| v.kind).collect()
    }
}

/// Type-propagating check of every statement in order.
///
/// Output variables take their function's return type. Calls to unknown
/// functions produce values of unknown type; passing one of those to a known
/// function is a `ResultTypeUnknown` violation. Each unbound free input is
/// reported once, at its first use.
pub fn validate(
    program: &Program,
    registry: &Registry,
    inputs: &BTreeMap<String, SemType>,
) -> Feedback {
    let mut violations = Vec::new();
    // None = produced by a call whose result type cannot be known.
    let mut env: BTreeMap<&str, Option<SemType>> = BTreeMap::new();
    let mut reported_unbound: BTreeSet<&str> = BTreeSet::new();

    for stmt in &program.statements {
        let line_no = stmt.line_no;
        let sig = registry.lookup(&stmt.function_name);
        if sig.is_none() {
            violations.push(Violation {
                line_no,
                kind: ViolationKind::UnknownFunction,
                detail: format!("unknown function '{}'", stmt.function_name),
                suggestion: nearest(&stmt.function_name, registry.names())
                    .map(|s| format!("Did you mean '{s}'?")),
            });
        }

        for arg in &stmt.args {
            let actual: Option<SemType> = match &arg.value {
                ArgValue::VarRef(name) => match env.get(name.as_str()) {
                    Some(t) => *t,
                    None => match inputs.get(name) {
                        Some(t) => Some(*t),
                        None => {
                            if reported_unbound.insert(name) {
                                violations.push(Violation {
                                    line_no,
                                    kind: ViolationKind::UnboundInput,
                                    detail: format!("input '{name}' is not bound"),
                                    suggestion: None,
                                });
                            }
                            // already reported; do not cascade
                            Some(SemType::Any)
                        }
                    },
                },
                ArgValue::Str(_) => Some(SemType::Text),
                ArgValue::Num(_) => Some(SemType::Number),
                ArgValue::Bool(_) => Some(SemType::Bool),
            };

            let Some(sig) = sig else { continue };
            let Some(param) = sig.param(&arg.name) else {
                violations.push(Violation {
                    line_no,
                    kind: ViolationKind::UnknownParam,
                    detail: format!(
                        "function '{}' has no parameter '{}'",
                        sig.name, arg.name
                    ),
                    suggestion: nearest(&arg.name, sig.params.iter().map(|p| p.name.as_str()))
                        .map(|s| format!("Did you mean '{s}'?")),
                });
                continue;
            };
            match actual {
                None => violations.push(Violation {
                    line_no,
                    kind: ViolationKind::ResultTypeUnknown,
                    detail: format!(
                        "argument '{}' of '{}' uses a value whose type is unknown because the call producing it is invalid",
                        arg.name, sig.name
                    ),
                    suggestion: None,
                }),
                Some(t) if !param.ty.unifies(t) => violations.push(Violation {
                    line_no,
                    kind: ViolationKind::ArgTypeMismatch,
                    detail: format!(
                        "argument '{}' of '{}' expects {} but got {}",
                        arg.name, sig.name, param.ty, t
                    ),
                    suggestion: None,
                }),
                Some(_) => {}
            }
        }

        if let Some(sig) = sig {
            for p in sig.params.iter().filter(|p| p.required) {
                if stmt.arg(&p.name).is_none() {
                    violations.push(Violation {
                        line_no,
                        kind: ViolationKind::MissingRequiredParam,
                        detail: format!(
                            "function '{}' requires parameter '{}' of type {}",
                            sig.name, p.name, p.ty
                        ),
                        suggestion: None,
                    });
                }
            }
        }

        env.insert(&stmt.output_var, sig.map(|s| s.returns));
    }

    Feedback::from_violations(violations, registry)
}

pub fn is_valid(program: &Program, registry: &Registry, inputs: &BTreeMap<String, SemType>) -> bool {
    validate(program, registry, inputs).is_empty()
}

/// Binds every free input of `program` as a video, which is the only kind
/// of input the language reserves names for.
pub fn video_inputs(program: &Program) -> BTreeMap<String, SemType> {
    program
        .free_inputs()
        .into_iter()
        .map(|name| (name, SemType::Video))
        .collect()
}

/// Case-insensitive edit distance.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().flat_map(char::to_lowercase).collect();
    let b: Vec<char> = b.chars().flat_map(char::to_lowercase).collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Closest candidate within `SUGGESTION_MAX_DISTANCE`; the first candidate
/// wins ties.
pub fn nearest<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    let mut best: Option<(usize, &str)> = None;
    for c in candidates {
        let d = levenshtein(name, c);
        if d <= SUGGESTION_MAX_DISTANCE && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, c));
        }
    }
    best.map(|(_, c)| c)
}
