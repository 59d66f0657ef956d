//! Runs model-backed steps over the model-server wire protocol while pure
//! steps stay local.
//!
//! With a URL argument this talks to a running server. Without one it uses
//! an in-process loopback that answers the protocol from the mock world.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde_json::json;
use vurf::dsl::parse;
use vurf::http::{HttpClient, HttpError, HttpResponse};
use vurf::interpreter::{execute, Backend, Bindings, ExecOptions, PureBackend, RemoteBackend, Value};
use vurf::registry::{builtin_catalog, Registry, MODEL_FUNCTIONS, PURE_FUNCTIONS};
use vurf::synthetic::{golden_descriptor, GOLDEN_PROGRAM};
use vurf::world::{MockWorldBackend, World};

struct Loopback {
    backend: MockWorldBackend,
    manifest: Registry,
}

impl HttpClient for Loopback {
    fn get(&self, url: &str, _: &[(&str, &str)], _: Duration) -> Result<HttpResponse, HttpError> {
        let body = if url.ends_with("/functions") {
            serde_json::to_string(&self.manifest.to_document()).unwrap()
        } else {
            json!({"status": "ok"}).to_string()
        };
        Ok(HttpResponse { status: 200, body })
    }

    fn post_json(&self, _: &str, _: &[(&str, &str)], body: &str, timeout: Duration) -> Result<HttpResponse, HttpError> {
        let req: serde_json::Value = serde_json::from_str(body).map_err(|e| HttpError::Transport(e.to_string()))?;
        let args: BTreeMap<String, Value> =
            serde_json::from_value(req["args"].clone()).map_err(|e| HttpError::Transport(e.to_string()))?;
        let reply = match self.backend.invoke(req["function"].as_str().unwrap_or_default(), &args, timeout) {
            Ok(v) => json!({"ok": true, "value": v, "request_id": req["request_id"]}),
            Err(e) => json!({"ok": false, "error": {"kind": "Internal", "message": e.to_string()}, "request_id": req["request_id"]}),
        };
        Ok(HttpResponse { status: 200, body: reply.to_string() })
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let timeout = Duration::from_secs(10);
    let world = Arc::new(World::single(golden_descriptor()));
    let remote = match std::env::args().nth(1) {
        Some(url) => RemoteBackend::connect(&url, timeout)?,
        None => {
            let catalog = builtin_catalog();
            let manifest = Registry::from_signatures(MODEL_FUNCTIONS.iter().map(|f| catalog.lookup(f).unwrap().clone()))?;
            let loopback = Loopback {
                backend: MockWorldBackend::new(world.clone()),
                manifest,
            };
            RemoteBackend::connect_with("http://loopback", Arc::new(loopback), timeout)?
        }
    };
    remote.health(timeout)?;
    println!("{} advertises {:?}", remote.endpoint(), remote.manifest().names().collect::<Vec<_>>());

    let remote_names: Vec<String> = remote.manifest().names().map(str::to_owned).collect();
    let registry = builtin_catalog().merge(remote.manifest())?;
    let bindings = Bindings::new()
        .bind(PURE_FUNCTIONS.iter().copied(), Arc::new(PureBackend))
        .bind(remote_names.iter().map(String::as_str), Arc::new(remote));

    let inputs = BTreeMap::from([("VIDEO".to_owned(), Value::Video(world.input_video("bathroom").unwrap()))]);
    let (answer, trace) = execute(&parse(GOLDEN_PROGRAM).map_err(|e| e[0].to_string())?, &inputs, &bindings, &registry, &ExecOptions::default())?;
    for step in &trace.steps {
        println!("{:<10} on {:<24} -> {}", step.function, step.backend, step.output);
    }
    println!("answer: {answer}");
    Ok(())
}
