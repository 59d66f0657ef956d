//! LLM access behind one gateway: prompt assembly, retries, a
//! content-addressed cache and program scraping. Providers are either a
//! remote chat-completion endpoint or a deterministic [`ScriptedProvider`].

mod prompt;
mod remote;
mod scrape;
pub mod script;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use prompt::{
    correction_preamble, fenced, generation_preamble, merge_preamble, Message, PromptSpec, PromptTask, RenderedPrompt,
    DSL_SHAPE_HINT, JUDGE_PREAMBLE,
};
pub use remote::RemoteProvider;
pub use scrape::{is_statement_line, scrape_program, ScrapeError};
pub use script::{fault_count, load_script, Script, ScriptError, ScriptedProvider};

use crate::dsl::parse;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("transport failed after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("unexpected provider reply: {0}")]
    Protocol(String),
    #[error("no script rule answers the {task} prompt for '{instruction}'")]
    ScriptMiss { task: PromptTask, instruction: String },
    #[error("script rule '{rule}' failed: {message}")]
    Script { rule: String, message: String },
    #[error("cache: {0}")]
    Cache(String),
}

impl LlmError {
    fn retryable(&self) -> bool {
        matches!(self, LlmError::Transport(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingParams {
    pub model: String,
    pub temperature: f64,
    pub timeout: Duration,
}

/// A source of completions. Must tolerate concurrent calls.
pub trait LlmProvider: Send + Sync {
    /// Identifies the provider and its configuration in cache keys.
    fn fingerprint(&self) -> String;

    fn respond(&self, spec: &PromptSpec, prompt: &RenderedPrompt, params: &SamplingParams) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderKind {
    Remote {
        url: String,
        model: String,
        api_key: Option<String>,
    },
    Scripted {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout: Duration,
    /// First retry delay; doubles on every further attempt.
    pub backoff: Duration,
}

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

impl ProviderConfig {
    pub fn scripted(path: impl Into<PathBuf>) -> Self {
        Self::with_kind(ProviderKind::Scripted { path: path.into() })
    }

    pub fn with_kind(kind: ProviderKind) -> Self {
        Self {
            kind,
            temperature: 0.0,
            max_retries: 2,
            timeout: Duration::from_secs(60),
            backoff: Duration::from_millis(250),
        }
    }

    /// Remote settings from `VURF_LLM_URL`, `VURF_LLM_KEY` and
    /// `VURF_LLM_MODEL`; `None` without a URL.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var("VURF_LLM_URL").ok().filter(|u| !u.is_empty())?;
        Some(Self::with_kind(ProviderKind::Remote {
            url,
            model: std::env::var("VURF_LLM_MODEL").unwrap_or_else(|_| DEFAULT_MODEL.into()),
            api_key: std::env::var("VURF_LLM_KEY").ok().filter(|k| !k.is_empty()),
        }))
    }

    fn model(&self) -> String {
        match &self.kind {
            ProviderKind::Remote { model, .. } => model.clone(),
            ProviderKind::Scripted { .. } => "scripted".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub raw_text: String,
    /// Present only when the scraped text parses.
    pub extracted_program_text: Option<String>,
    pub provider_latency: Duration,
    pub cache_hit: bool,
}

#[derive(Serialize, Deserialize)]
struct CachedCompletion {
    key: String,
    raw_text: String,
}

/// Content-addressed completion cache, in memory and optionally on disk.
#[derive(Debug, Default)]
struct Cache {
    memory: Mutex<HashMap<String, String>>,
    dir: Option<PathBuf>,
}

impl Cache {
    fn get(&self, key: &str) -> Option<String> {
        if let Some(hit) = self.memory.lock().unwrap().get(key) {
            return Some(hit.clone());
        }
        let path = self.dir.as_ref()?.join(format!("{key}.json"));
        let stored: CachedCompletion = serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()?;
        (stored.key == key).then(|| {
            self.memory.lock().unwrap().insert(key.to_owned(), stored.raw_text.clone());
            stored.raw_text
        })
    }

    fn put(&self, key: &str, raw_text: &str) -> Result<(), LlmError> {
        self.memory.lock().unwrap().insert(key.to_owned(), raw_text.to_owned());
        if let Some(dir) = &self.dir {
            let doc = CachedCompletion {
                key: key.to_owned(),
                raw_text: raw_text.to_owned(),
            };
            // write-then-rename keeps concurrent readers from seeing partial files
            let tmp = dir.join(format!("{key}.json.{:?}.tmp", std::thread::current().id()));
            let text = serde_json::to_string(&doc).expect("completion serializes");
            std::fs::write(&tmp, text)
                .and_then(|_| std::fs::rename(&tmp, dir.join(format!("{key}.json"))))
                .map_err(|e| LlmError::Cache(e.to_string()))?;
        }
        Ok(())
    }
}

/// The single entry point every pipeline stage uses to reach an LLM.
pub struct LlmGateway {
    provider: Arc<dyn LlmProvider>,
    params: SamplingParams,
    max_retries: u32,
    backoff: Duration,
    cache: Cache,
}

impl LlmGateway {
    pub fn new(provider: Arc<dyn LlmProvider>, config: &ProviderConfig) -> Self {
        Self {
            provider,
            params: SamplingParams {
                model: config.model(),
                temperature: config.temperature,
                timeout: config.timeout,
            },
            max_retries: config.max_retries,
            backoff: config.backoff,
            cache: Cache::default(),
        }
    }

    /// Builds the configured provider. `seed` overrides a script's own seed.
    pub fn from_config(config: &ProviderConfig, seed: Option<u64>) -> Result<Self, GatewayError> {
        let provider: Arc<dyn LlmProvider> = match &config.kind {
            ProviderKind::Remote { url, api_key, .. } => Arc::new(RemoteProvider::new(url.clone(), api_key.clone())),
            ProviderKind::Scripted { path } => {
                let mut script = load_script(path)?;
                if let Some(s) = seed {
                    script.set_seed(s);
                }
                Arc::new(ScriptedProvider::new(script))
            }
        };
        Ok(Self::new(provider, config))
    }

    /// Persists completions under `dir` in addition to memory.
    pub fn with_cache_dir(mut self, dir: &Path) -> Result<Self, GatewayError> {
        std::fs::create_dir_all(dir).map_err(|e| GatewayError::CacheDir {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        self.cache.dir = Some(dir.to_owned());
        Ok(self)
    }

    pub fn provider(&self) -> &Arc<dyn LlmProvider> {
        &self.provider
    }

    /// Hash over the provider, sampling parameters and full rendered prompt.
    pub fn cache_key(&self, prompt: &RenderedPrompt) -> String {
        let material = serde_json::json!({
            "provider": self.provider.fingerprint(),
            "model": self.params.model,
            "temperature": self.params.temperature,
            "messages": prompt.messages,
        });
        hex::encode(Sha256::digest(material.to_string().as_bytes()))
    }

    pub fn complete(&self, spec: &PromptSpec) -> Result<Completion, LlmError> {
        let prompt = spec.render();
        let key = self.cache_key(&prompt);
        if let Some(raw_text) = self.cache.get(&key) {
            return Ok(completion(raw_text, Duration::ZERO, true));
        }
        let started = Instant::now();
        let mut attempt = 0;
        let raw_text = loop {
            match self.provider.respond(spec, &prompt, &self.params) {
                Ok(t) => break t,
                Err(e) if e.retryable() && attempt < self.max_retries => {
                    tracing::warn!(attempt, error = %e, "LLM call failed, retrying");
                    std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt));
                    attempt += 1;
                }
                Err(e) if e.retryable() => {
                    return Err(LlmError::RetriesExhausted {
                        attempts: attempt + 1,
                        last: e.to_string(),
                    })
                }
                Err(e) => return Err(e),
            }
        };
        self.cache.put(&key, &raw_text)?;
        Ok(completion(raw_text, started.elapsed(), false))
    }
}

fn completion(raw_text: String, provider_latency: Duration, cache_hit: bool) -> Completion {
    let extracted_program_text = scrape_program(&raw_text)
        .ok()
        .filter(|t| parse(t).is_ok());
    Completion {
        raw_text,
        extracted_program_text,
        provider_latency,
        cache_hit,
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("cannot use cache directory {path}: {message}")]
    CacheDir { path: String, message: String },
}
