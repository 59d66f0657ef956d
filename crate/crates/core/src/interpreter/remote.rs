//! Client side of the model-server wire protocol.
//!
//! `GET /health` → `{"status":"ok"}`; `GET /functions` → a registry
//! document; `POST /invoke` with `{function, args, request_id}` →
//! `{ok, value | error: {kind, message}, request_id}`. Values use the
//! typed JSON encoding of [`Value`]. Application errors arrive as HTTP 200
//! with `ok: false`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::backend::{Backend, BackendError, ExecutorKind};
use super::value::Value;
use crate::http::{HttpClient, HttpError, HttpResponse, UreqClient};
use crate::registry::{Registry, RegistryDocument};

pub struct RemoteBackend {
    endpoint: String,
    client: Arc<dyn HttpClient>,
    manifest: Registry,
    next_id: AtomicU64,
}

#[derive(Deserialize)]
struct InvokeResponse {
    ok: bool,
    #[serde(default)]
    value: Option<serde_json::Value>,
    #[serde(default)]
    error: Option<ErrorBody>,
    request_id: String,
}

#[derive(Deserialize)]
struct ErrorBody {
    kind: String,
    message: String,
}

fn transport(e: HttpError) -> BackendError {
    match e {
        HttpError::Timeout(d) => BackendError::Timeout(d),
        HttpError::Transport(m) => BackendError::Transport(m),
    }
}

fn expect_ok(resp: HttpResponse) -> Result<String, BackendError> {
    if resp.status >= 400 {
        Err(BackendError::Http {
            status: resp.status,
            body: resp.body,
        })
    } else {
        Ok(resp.body)
    }
}

impl RemoteBackend {
    /// Fetches the server's manifest over a real HTTP client.
    pub fn connect(endpoint: &str, timeout: Duration) -> Result<Self, BackendError> {
        Self::connect_with(endpoint, Arc::new(UreqClient), timeout)
    }

    pub fn connect_with(endpoint: &str, client: Arc<dyn HttpClient>, timeout: Duration) -> Result<Self, BackendError> {
        let endpoint = endpoint.trim_end_matches('/').to_owned();
        let body = expect_ok(
            client
                .get(&format!("{endpoint}/functions"), &[], timeout)
                .map_err(transport)?,
        )?;
        let doc: RegistryDocument = serde_json::from_str(&body)
            .map_err(|e| BackendError::Protocol(format!("malformed manifest: {e}")))?;
        let manifest = Registry::from_signatures(doc.functions)
            .map_err(|e| BackendError::Protocol(format!("invalid manifest: {e}")))?;
        Ok(Self {
            endpoint,
            client,
            manifest,
            next_id: AtomicU64::new(1),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn manifest(&self) -> &Registry {
        &self.manifest
    }

    pub fn health(&self, timeout: Duration) -> Result<(), BackendError> {
        let body = expect_ok(
            self.client
                .get(&format!("{}/health", self.endpoint), &[], timeout)
                .map_err(transport)?,
        )?;
        let v: serde_json::Value =
            serde_json::from_str(&body).map_err(|e| BackendError::Protocol(format!("malformed health reply: {e}")))?;
        if v["status"] == "ok" {
            Ok(())
        } else {
            Err(BackendError::Protocol(format!("unhealthy: {body}")))
        }
    }
}

impl Backend for RemoteBackend {
    fn kind(&self) -> ExecutorKind {
        ExecutorKind::Remote(self.endpoint.clone())
    }

    fn invoke(
        &self,
        function: &str,
        args: &BTreeMap<String, Value>,
        timeout: Duration,
    ) -> Result<Value, BackendError> {
        let Some(sig) = self.manifest.lookup(function) else {
            return Err(BackendError::Protocol(format!(
                "server at {} does not advertise '{function}'",
                self.endpoint
            )));
        };
        let request_id = format!("req-{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let body = json!({ "function": function, "args": args, "request_id": request_id }).to_string();
        let reply = expect_ok(
            self.client
                .post_json(&format!("{}/invoke", self.endpoint), &[], &body, timeout)
                .map_err(transport)?,
        )?;
        let reply: InvokeResponse =
            serde_json::from_str(&reply).map_err(|e| BackendError::Protocol(format!("malformed invoke reply: {e}")))?;
        if reply.request_id != request_id {
            return Err(BackendError::Protocol(format!(
                "reply for '{}' answers request '{request_id}'",
                reply.request_id
            )));
        }
        if !reply.ok {
            let e = reply
                .error
                .ok_or_else(|| BackendError::Protocol("ok=false without an error body".into()))?;
            return Err(BackendError::Application {
                kind: e.kind,
                message: e.message,
            });
        }
        let raw = reply
            .value
            .ok_or_else(|| BackendError::Protocol("ok=true without a value".into()))?;
        let value: Value =
            serde_json::from_value(raw).map_err(|e| BackendError::Protocol(format!("untyped value: {e}")))?;
        if !sig.returns.unifies(value.sem_type()) {
            return Err(BackendError::Protocol(format!(
                "'{function}' returned {} but the manifest declares {}",
                value.sem_type(),
                sig.returns
            )));
        }
        Ok(value)
    }
}
