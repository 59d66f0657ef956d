//! An in-process model server speaking the remote-backend protocol, with
//! stub models and switchable misbehaviour.

#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use serde_json::{json, Value as Json};
use tiny_http::{Header, Response, Server};
use vurf::registry::{builtin_catalog, RegistryDocument};

#[derive(Debug, Clone, Default)]
pub struct Behavior {
    /// Answer every request with this status and an empty body.
    pub http_status: Option<u16>,
    /// Echo a request id that was never sent.
    pub wrong_request_id: bool,
    /// VQA answers with a Number although the manifest promises Text.
    pub vqa_returns_number: bool,
    /// Sleep before answering invocations.
    pub delay: Option<Duration>,
}

pub struct StubServer {
    pub url: String,
    pub invocations: Arc<AtomicUsize>,
    server: Arc<Server>,
    handle: Option<JoinHandle<()>>,
}

pub const STUB_FUNCTIONS: [&str; 3] = ["GROUNDING", "POSE", "VQA"];

pub fn manifest() -> String {
    let reg = builtin_catalog();
    let doc = RegistryDocument {
        functions: STUB_FUNCTIONS.iter().map(|f| reg.lookup(f).unwrap().clone()).collect(),
    };
    serde_json::to_string(&doc).unwrap()
}

/// FNV-1a, so canned answers are a pure function of the request.
fn fnv(text: &str) -> u64 {
    text.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100000001b3))
}

fn invoke(body: &str, behavior: &Behavior) -> Json {
    let req: Json = serde_json::from_str(body).unwrap_or(Json::Null);
    let id = if behavior.wrong_request_id {
        json!("req-bogus")
    } else {
        req["request_id"].clone()
    };
    let args = &req["args"];
    let fail = |kind: &str, message: &str| json!({"ok": false, "error": {"kind": kind, "message": message}, "request_id": id});
    let value = match req["function"].as_str() {
        Some("VQA") if behavior.vqa_returns_number => json!({"type": "Number", "value": 1.0}),
        Some("VQA") => {
            let key = format!("{}|{}", args["video"], args["question"]);
            json!({"type": "Text", "value": format!("answer-{:04x}", fnv(&key) % 0x10000)})
        }
        Some("GROUNDING") => match args["query"]["value"].as_str() {
            Some(q) if q.contains("enter") => json!({"type": "Interval", "value": {"start_s": 1.0, "end_s": 2.0}}),
            Some(_) => return fail("BadArgs", "nothing matches the query"),
            None => return fail("BadArgs", "query must be Text"),
        },
        Some("POSE") => {
            let frame = |t: f64| json!({"t_s": t, "keypoints": {"nose": [0.5, 0.2], "left_ankle": [0.45, 0.9]}});
            json!({"type": "PoseSequence", "value": [frame(0.0), frame(0.5)]})
        }
        Some(other) => return fail("UnknownFunction", &format!("no function '{other}'")),
        None => return fail("BadArgs", "missing function"),
    };
    json!({"ok": true, "value": value, "request_id": id})
}

impl StubServer {
    pub fn start(behavior: Behavior) -> Self {
        let server = Arc::new(Server::http("127.0.0.1:0").unwrap());
        let port = server.server_addr().to_ip().unwrap().port();
        let invocations = Arc::new(AtomicUsize::new(0));
        let (srv, count) = (server.clone(), invocations.clone());
        let handle = std::thread::spawn(move || {
            while let Ok(mut request) = srv.recv() {
                let behavior = behavior.clone();
                let count = count.clone();
                std::thread::spawn(move || {
                    let mut body = String::new();
                    let _ = request.as_reader().read_to_string(&mut body);
                    let json_header = Header::from_bytes("Content-Type", "application/json").unwrap();
                    if let Some(status) = behavior.http_status {
                        let _ = request.respond(Response::from_string("server exploded").with_status_code(status));
                        return;
                    }
                    let reply = match (request.method().as_str(), request.url()) {
                        ("GET", "/health") => json!({"status": "ok"}).to_string(),
                        ("GET", "/functions") => manifest(),
                        ("POST", "/invoke") => {
                            count.fetch_add(1, Ordering::SeqCst);
                            if let Some(d) = behavior.delay {
                                std::thread::sleep(d);
                            }
                            invoke(&body, &behavior).to_string()
                        }
                        _ => {
                            let _ = request.respond(Response::from_string("not found").with_status_code(404));
                            return;
                        }
                    };
                    let _ = request.respond(Response::from_string(reply).with_header(json_header));
                });
            }
        });
        Self {
            url: format!("http://127.0.0.1:{port}"),
            invocations,
            server,
            handle: Some(handle),
        }
    }

    pub fn invocations(&self) -> usize {
        self.invocations.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
