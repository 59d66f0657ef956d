//! Straight-line execution of programs against bound backends.
//!
//! Videos are symbolic: a [`VideoRef`] is a list of clips, each a span set
//! over a source plus view and effect annotations. The editing functions
//! are span algebra ([`PureBackend`]); perception is delegated to whatever
//! backend a function is bound to.

pub mod backend;
mod builtins;
pub mod remote;
mod span;
mod value;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{Backend, BackendError, BindingError, Bindings, ExecutorKind};
pub use builtins::{add_effect, crop, merge, trim, trim_after, trim_before, PureBackend};
pub use remote::RemoteBackend;
pub use span::{Span, SpanSet};
pub use value::{Clip, Effect, EffectKind, Interval, PoseFrame, Region, Value, VideoRef};

use crate::dsl::{ArgValue, Program};
use crate::registry::Registry;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ExecOptions {
    /// Per-call budget.
    pub timeout: Duration,
    /// When false every step records 0 ms, keeping traces byte-stable.
    pub record_timing: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            timeout: DEFAULT_TIMEOUT,
            record_timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub line_no: usize,
    pub function: String,
    /// Argument name → rendered value.
    pub args: BTreeMap<String, String>,
    pub output: String,
    pub output_value: Value,
    pub backend: String,
    pub wall_time_ms: u64,
}

/// One step per executed statement, in execution order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
}

impl ExecutionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecCause {
    #[error("backend failure: {0}")]
    BackendFailure(BackendError),
    #[error("runtime type mismatch: {0}")]
    TypeRuntimeMismatch(String),
    #[error("timed out after {0:?}")]
    Timeout(Duration),
}

/// A failed statement plus the trace of every step that completed before it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line_no} ({function}): {cause}")]
pub struct ExecError {
    pub line_no: usize,
    pub function: String,
    pub cause: ExecCause,
    pub trace: ExecutionTrace,
}

/// Runs every statement in order and returns the value of the last one.
pub fn execute(
    program: &Program,
    inputs: &BTreeMap<String, Value>,
    bindings: &Bindings,
    registry: &Registry,
    opts: &ExecOptions,
) -> Result<(Value, ExecutionTrace), ExecError> {
    let mut env: BTreeMap<String, Value> = inputs.clone();
    let mut trace = ExecutionTrace::default();
    let mut last = None;
    for stmt in &program.statements {
        let fail = |cause: ExecCause, trace: &ExecutionTrace| ExecError {
            line_no: stmt.line_no,
            function: stmt.function_name.clone(),
            cause,
            trace: trace.clone(),
        };
        let mut args = BTreeMap::new();
        for a in &stmt.args {
            let v = match &a.value {
                ArgValue::VarRef(name) => match env.get(name) {
                    Some(v) => v.clone(),
                    None => {
                        return Err(fail(
                            ExecCause::TypeRuntimeMismatch(format!("variable '{name}' has no value")),
                            &trace,
                        ))
                    }
                },
                ArgValue::Str(s) => Value::Text(s.clone()),
                ArgValue::Num(n) => Value::Number(*n),
                ArgValue::Bool(b) => Value::Bool(*b),
            };
            args.insert(a.name.clone(), v);
        }
        let sig = registry.lookup(&stmt.function_name);
        if let Some(sig) = sig {
            for p in &sig.params {
                if let Some(v) = args.get(&p.name) {
                    if !p.ty.unifies(v.sem_type()) {
                        return Err(fail(
                            ExecCause::TypeRuntimeMismatch(format!(
                                "argument '{}' expects {} but got {}",
                                p.name,
                                p.ty,
                                v.sem_type()
                            )),
                            &trace,
                        ));
                    }
                }
            }
        }
        let Some(backend) = bindings.get(&stmt.function_name) else {
            return Err(fail(
                ExecCause::BackendFailure(BackendError::Unsupported(stmt.function_name.clone())),
                &trace,
            ));
        };
        let started = Instant::now();
        let out = backend.invoke(&stmt.function_name, &args, opts.timeout);
        let elapsed = started.elapsed();
        let out = match out {
            Ok(v) => v,
            Err(BackendError::Timeout(d)) => return Err(fail(ExecCause::Timeout(d), &trace)),
            Err(e) => return Err(fail(ExecCause::BackendFailure(e), &trace)),
        };
        if elapsed > opts.timeout {
            return Err(fail(ExecCause::Timeout(opts.timeout), &trace));
        }
        if let Some(sig) = sig {
            if !sig.returns.unifies(out.sem_type()) {
                return Err(fail(
                    ExecCause::TypeRuntimeMismatch(format!(
                        "{} returned {} instead of {}",
                        stmt.function_name,
                        out.sem_type(),
                        sig.returns
                    )),
                    &trace,
                ));
            }
        }
        if let Err(e) = out.check() {
            return Err(fail(ExecCause::TypeRuntimeMismatch(e), &trace));
        }
        trace.steps.push(TraceStep {
            line_no: stmt.line_no,
            function: stmt.function_name.clone(),
            args: args.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
            output: out.to_string(),
            output_value: out.clone(),
            backend: backend.kind().to_string(),
            wall_time_ms: if opts.record_timing { elapsed.as_millis() as u64 } else { 0 },
        });
        env.insert(stmt.output_var.clone(), out.clone());
        last = Some(out);
    }
    match last {
        Some(v) => Ok((v, trace)),
        None => Err(ExecError {
            line_no: 0,
            function: String::new(),
            cause: ExecCause::TypeRuntimeMismatch("program has no statements".into()),
            trace,
        }),
    }
}
