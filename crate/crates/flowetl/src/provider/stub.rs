//! A scripted, in-process HTTP stub implementing the provider protocol.
//!
//! Tests start a [`StubServer`] with an ordered list of canned responses;
//! each incoming request consumes the next one, and every request is
//! logged so call budgets and prompt contents can be asserted. When the
//! script runs out the listener closes, so further calls see a refused
//! connection — the harshest failure mode a client must survive.
//!
//! This is a test utility, not a service: single-threaded handling is
//! plenty for the two calls a pipeline run is allowed.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::error::Result;

/// One canned reply.
#[derive(Debug, Clone)]
pub enum ScriptedResponse {
    /// `200 OK` with this JSON body.
    Json(serde_json::Value),
    /// `200 OK` with raw body text — use for malformed-JSON scripts.
    Raw(String),
    /// Sleep, then answer with the JSON body. Pair with a client timeout
    /// shorter than the delay to simulate a hung provider.
    Delayed(Duration, serde_json::Value),
    /// `500 Internal Server Error`.
    ServerError,
}

/// Ordered responses for one stub lifetime.
#[derive(Debug, Clone, Default)]
pub struct ProviderScript {
    pub responses: Vec<ScriptedResponse>,
}

impl ProviderScript {
    pub fn new(responses: Vec<ScriptedResponse>) -> ProviderScript {
        ProviderScript { responses }
    }
}

/// One request the stub received.
#[derive(Debug, Clone)]
pub struct LoggedRequest {
    /// Request path, e.g. `/match`.
    pub path: String,
    /// Raw request body.
    pub body: String,
}

impl LoggedRequest {
    /// The body parsed as JSON, for prompt-content assertions.
    pub fn body_json(&self) -> Option<serde_json::Value> {
        serde_json::from_str(&self.body).ok()
    }
}

/// Handle to a running stub. Dropping it stops the listener thread.
pub struct StubServer {
    url: String,
    requests: Arc<Mutex<Vec<LoggedRequest>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Binds an ephemeral localhost port and serves the script.
    pub fn start(script: ProviderScript) -> Result<StubServer> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        listener.set_nonblocking(true)?;
        let url = format!("http://{}", listener.local_addr()?);

        let requests = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let thread_requests = Arc::clone(&requests);
        let thread_stop = Arc::clone(&stop);

        let handle = std::thread::spawn(move || {
            let mut remaining = script.responses.into_iter();
            let mut next = remaining.next();
            while !thread_stop.load(Ordering::Relaxed) {
                let Some(response) = next.take() else {
                    // Script exhausted: close the listener so further
                    // connections are refused.
                    break;
                };
                match listener.accept() {
                    Ok((stream, _)) => {
                        handle_connection(stream, &response, &thread_requests);
                        next = remaining.next();
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        next = Some(response);
                        std::thread::sleep(Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
        });

        Ok(StubServer {
            url,
            requests,
            stop,
            handle: Some(handle),
        })
    }

    /// Base URL of the running stub, for [`super::ProviderConfig`].
    pub fn url(&self) -> &str {
        &self.url
    }

    /// Snapshot of all requests received so far.
    pub fn request_log(&self) -> Vec<LoggedRequest> {
        self.requests.lock().expect("stub log lock").clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn handle_connection(
    stream: TcpStream,
    response: &ScriptedResponse,
    requests: &Mutex<Vec<LoggedRequest>>,
) {
    let _ = stream.set_read_timeout(Some(Duration::from_secs(5)));
    let Ok(peer) = stream.try_clone() else {
        return;
    };
    let mut reader = BufReader::new(peer);

    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    let path = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("")
        .to_string();

    let mut content_length = 0usize;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header).is_err() || header.trim().is_empty() {
            break;
        }
        if let Some(value) = header
            .to_ascii_lowercase()
            .strip_prefix("content-length:")
        {
            content_length = value.trim().parse().unwrap_or(0);
        }
    }

    let mut body = vec![0u8; content_length];
    let _ = reader.read_exact(&mut body);
    requests.lock().expect("stub log lock").push(LoggedRequest {
        path,
        body: String::from_utf8_lossy(&body).into_owned(),
    });

    let (status, payload) = match response {
        ScriptedResponse::Json(value) => ("200 OK", value.to_string()),
        ScriptedResponse::Raw(text) => ("200 OK", text.clone()),
        ScriptedResponse::Delayed(delay, value) => {
            std::thread::sleep(*delay);
            ("200 OK", value.to_string())
        }
        ScriptedResponse::ServerError => {
            ("500 Internal Server Error", "{\"error\":\"scripted\"}".to_string())
        }
    };

    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let _ = stream.flush();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{
        HttpProvider, MatchRequest, Provider, ProviderConfig, DEFAULT_MATCH_RULES,
    };
    use crate::schema::ColumnSchema;
    use indexmap::IndexMap;
    use serde_json::json;

    fn request() -> MatchRequest {
        let mut cols = IndexMap::new();
        cols.insert("id".to_string(), crate::ir::ColumnType::Number);
        let schema = ColumnSchema::new(cols);
        MatchRequest {
            source_schema: schema.clone(),
            target_schema: schema,
            rules: DEFAULT_MATCH_RULES.iter().map(|r| r.to_string()).collect(),
        }
    }

    fn provider_for(stub: &StubServer, timeout_ms: u64) -> HttpProvider {
        HttpProvider::new(
            ProviderConfig::new(stub.url())
                .with_timeout(Duration::from_millis(timeout_ms)),
        )
    }

    #[test]
    fn scripted_json_answers_and_logs() {
        let stub = StubServer::start(ProviderScript::new(vec![ScriptedResponse::Json(
            json!({"correspondences": [{"sources": ["id"], "target": "id"}]}),
        )]))
        .unwrap();
        let provider = provider_for(&stub, 2_000);

        let response = provider.match_schemas(&request()).unwrap();
        assert_eq!(response.correspondences.len(), 1);

        let log = stub.request_log();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].path, "/match");
        let body = log[0].body_json().unwrap();
        assert_eq!(body["source_schema"]["id"], "number");
        assert!(body["rules"].as_array().is_some_and(|r| !r.is_empty()));
    }

    #[test]
    fn malformed_body_is_a_client_error() {
        let stub = StubServer::start(ProviderScript::new(vec![ScriptedResponse::Raw(
            "this is not json".to_string(),
        )]))
        .unwrap();
        let provider = provider_for(&stub, 2_000);
        assert!(provider.match_schemas(&request()).is_err());
    }

    #[test]
    fn delay_beyond_timeout_is_a_client_error() {
        let stub = StubServer::start(ProviderScript::new(vec![ScriptedResponse::Delayed(
            Duration::from_millis(600),
            json!({"correspondences": []}),
        )]))
        .unwrap();
        let provider = provider_for(&stub, 100);
        assert!(provider.match_schemas(&request()).is_err());
    }

    #[test]
    fn server_error_is_a_client_error() {
        let stub =
            StubServer::start(ProviderScript::new(vec![ScriptedResponse::ServerError]))
                .unwrap();
        let provider = provider_for(&stub, 2_000);
        assert!(provider.match_schemas(&request()).is_err());
    }

    #[test]
    fn exhausted_script_refuses_connections() {
        let stub = StubServer::start(ProviderScript::new(vec![ScriptedResponse::Json(
            json!({"correspondences": []}),
        )]))
        .unwrap();
        let provider = provider_for(&stub, 2_000);

        assert!(provider.match_schemas(&request()).is_ok());
        // Give the stub thread a moment to close the listener.
        std::thread::sleep(Duration::from_millis(50));
        assert!(provider.match_schemas(&request()).is_err());
        assert_eq!(stub.request_log().len(), 1);
    }
}
