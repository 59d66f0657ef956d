use std::sync::Arc;

use serde_json::json;

use super::prompt::{PromptSpec, RenderedPrompt};
use super::{LlmError, LlmProvider, SamplingParams};
use crate::http::{HttpClient, HttpError, UreqClient};

/// Generic JSON chat-completion endpoint:
/// `{"model", "messages", "temperature"}` → `{"choices":[{"message":{"content"}}]}`.
pub struct RemoteProvider {
    url: String,
    api_key: Option<String>,
    client: Arc<dyn HttpClient>,
}

impl RemoteProvider {
    pub fn new(url: impl Into<String>, api_key: Option<String>) -> Self {
        Self::with_client(url, api_key, Arc::new(UreqClient))
    }

    pub fn with_client(url: impl Into<String>, api_key: Option<String>, client: Arc<dyn HttpClient>) -> Self {
        Self {
            url: url.into(),
            api_key,
            client,
        }
    }
}

impl LlmProvider for RemoteProvider {
    fn fingerprint(&self) -> String {
        format!("remote:{}", self.url)
    }

    fn respond(&self, _spec: &PromptSpec, prompt: &RenderedPrompt, params: &SamplingParams) -> Result<String, LlmError> {
        let body = json!({
            "model": params.model,
            "messages": prompt.messages,
            "temperature": params.temperature,
        })
        .to_string();
        let auth = self.api_key.as_ref().map(|k| format!("Bearer {k}"));
        let headers: Vec<(&str, &str)> = auth.iter().map(|a| ("Authorization", a.as_str())).collect();
        let resp = self
            .client
            .post_json(&self.url, &headers, &body, params.timeout)
            .map_err(|e| match e {
                HttpError::Timeout(d) => LlmError::Transport(format!("timed out after {d:?}")),
                HttpError::Transport(m) => LlmError::Transport(m),
            })?;
        match resp.status {
            401 | 403 => return Err(LlmError::Auth(format!("HTTP {}: {}", resp.status, resp.body))),
            429 | 500..=599 => return Err(LlmError::Transport(format!("HTTP {}: {}", resp.status, resp.body))),
            400..=499 => return Err(LlmError::Protocol(format!("HTTP {}: {}", resp.status, resp.body))),
            _ => {}
        }
        let v: serde_json::Value =
            serde_json::from_str(&resp.body).map_err(|e| LlmError::Protocol(format!("malformed reply: {e}")))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| LlmError::Protocol("reply lacks choices[0].message.content".into()))
    }
}
