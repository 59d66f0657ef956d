//! Minimal blocking HTTP client seam shared by the remote backend and the
//! remote LLM provider, so tests can substitute counting or failing fakes.

use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HttpError {
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("{0}")]
    Transport(String),
}

/// Non-2xx statuses are returned as responses, not errors.
pub trait HttpClient: Send + Sync {
    fn get(&self, url: &str, headers: &[(&str, &str)], timeout: Duration) -> Result<HttpResponse, HttpError>;

    fn post_json(
        &self,
        url: &str,
        headers: &[(&str, &str)],
        body: &str,
        timeout: Duration,
    ) -> Result<HttpResponse, HttpError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UreqClient;

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

fn finish(
    result: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    timeout: Duration,
) -> Result<HttpResponse, HttpError> {
    let map = |e: ureq::Error| match e {
        ureq::Error::Timeout(_) => HttpError::Timeout(timeout),
        other => HttpError::Transport(other.to_string()),
    };
    let mut resp = result.map_err(map)?;
    let status = resp.status().as_u16();
    let body = resp.body_mut().read_to_string().map_err(map)?;
    Ok(HttpResponse { status, body })
}

impl HttpClient for UreqClient {
    fn get(&self, url: &str, headers: &[(&str, &str)], timeout: Duration) -> Result<HttpResponse, HttpError> {
        let mut req = agent(timeout).get(url);
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        finish(req.call(), timeout)
    }

    fn post_json(
        &self,
        url: &str,
        headers: &[(&str, &str)],
        body: &str,
        timeout: Duration,
    ) -> Result<HttpResponse, HttpError> {
        let mut req = agent(timeout).post(url).header("Content-Type", "application/json");
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        finish(req.send(body), timeout)
    }
}
