use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::value::Value;
use crate::registry::Registry;

/// How a function is executed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecutorKind {
    /// Span algebra over symbolic videos; no model involved.
    BuiltinPure,
    /// Answers read from a synthetic ground-truth descriptor.
    MockWorld,
    /// A model server reached over HTTP.
    Remote(String),
}

impl fmt::Display for ExecutorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExecutorKind::BuiltinPure => f.write_str("builtin_pure"),
            ExecutorKind::MockWorld => f.write_str("mock_world"),
            ExecutorKind::Remote(url) => write!(f, "remote({url})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("no match: {0}")]
    NoMatch(String),
    #[error("backend does not provide '{0}'")]
    Unsupported(String),
    #[error("bad arguments: {0}")]
    BadArgs(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("{kind}: {message}")]
    Application { kind: String, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("timed out after {0:?}")]
    Timeout(Duration),
}

/// An executor for some set of functions. Implementations must tolerate
/// concurrent calls.
pub trait Backend: Send + Sync {
    fn kind(&self) -> ExecutorKind;

    fn invoke(
        &self,
        function: &str,
        args: &BTreeMap<String, Value>,
        timeout: Duration,
    ) -> Result<Value, BackendError>;
}

/// Function name → backend.
#[derive(Clone, Default)]
pub struct Bindings {
    map: BTreeMap<String, Arc<dyn Backend>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindingError {
    #[error("functions without a backend: {0:?}")]
    Missing(Vec<String>),
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds (or rebinds) each listed function to `backend`.
    pub fn bind<'a>(
        mut self,
        functions: impl IntoIterator<Item = &'a str>,
        backend: Arc<dyn Backend>,
    ) -> Self {
        for f in functions {
            self.map.insert(f.to_owned(), backend.clone());
        }
        self
    }

    pub fn get(&self, function: &str) -> Option<&Arc<dyn Backend>> {
        self.map.get(function)
    }

    pub fn kind_of(&self, function: &str) -> Option<ExecutorKind> {
        self.map.get(function).map(|b| b.kind())
    }

    /// Every registry function must have a backend before execution.
    pub fn check_complete(&self, registry: &Registry) -> Result<(), BindingError> {
        let missing: Vec<String> = registry
            .names()
            .filter(|n| !self.map.contains_key(*n))
            .map(str::to_owned)
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(BindingError::Missing(missing))
        }
    }

    pub fn describe(&self) -> BTreeMap<String, ExecutorKind> {
        self.map.iter().map(|(k, v)| (k.clone(), v.kind())).collect()
    }
}

impl fmt::Debug for Bindings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.describe()).finish()
    }
}

pub(crate) fn arg<'a>(args: &'a BTreeMap<String, Value>, name: &str) -> Result<&'a Value, BackendError> {
    args.get(name)
        .ok_or_else(|| BackendError::BadArgs(format!("missing argument '{name}'")))
}

macro_rules! typed_arg {
    ($fn_name:ident, $variant:ident, $ty:ty) => {
        pub(crate) fn $fn_name<'a>(
            args: &'a BTreeMap<String, Value>,
            name: &str,
        ) -> Result<&'a $ty, BackendError> {
            match arg(args, name)? {
                Value::$variant(v) => Ok(v),
                other => Err(BackendError::BadArgs(format!(
                    "argument '{name}' should be {} but is {}",
                    stringify!($variant),
                    other.sem_type()
                ))),
            }
        }
    };
}

typed_arg!(video_arg, Video, super::value::VideoRef);
typed_arg!(interval_arg, Interval, super::value::Interval);
typed_arg!(region_arg, Region, super::value::Region);
typed_arg!(text_arg, Text, String);
typed_arg!(number_arg, Number, f64);
typed_arg!(poses_arg, PoseSequence, Vec<super::value::PoseFrame>);
