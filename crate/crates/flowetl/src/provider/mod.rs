//! The pluggable inference provider: an external service (typically an LLM
//! gateway) that answers schema-match and program-inference requests.
//!
//! The wire protocol is two JSON POST endpoints:
//!
//! * `POST {base}/match` — body [`MatchRequest`], response [`MatchResponse`]
//! * `POST {base}/infer` — body [`InferRequest`], response [`InferResponse`]
//!
//! Both requests carry a `rules` array: the prompt contract the service is
//! expected to honour. The engine treats every provider answer as
//! untrusted — schema maps are validated and programs are verified against
//! the example pair before use, and any failure falls back to the
//! deterministic path. A pipeline run makes at most two provider calls:
//! one match, one inference.

pub mod stub;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::InternalRepresentation;
use crate::matching::{Correspondence, SchemaMap};
use crate::schema::ColumnSchema;

/// Environment variable naming the provider base URL.
pub const ENV_PROVIDER_URL: &str = "FLOWETL_PROVIDER_URL";
/// Environment variable holding the bearer key, if any.
pub const ENV_PROVIDER_KEY: &str = "FLOWETL_PROVIDER_KEY";
/// Environment variable overriding the request timeout in milliseconds.
pub const ENV_PROVIDER_TIMEOUT_MS: &str = "FLOWETL_PROVIDER_TIMEOUT_MS";

/// Default request timeout when the environment does not override it.
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

/// Rules sent with every match request. They document the contract a
/// provider must satisfy; the stub and any real gateway see the same text.
pub const DEFAULT_MATCH_RULES: &[&str] = &[
    "Match columns of the source schema to columns of the target schema.",
    "Use only the column names and types given; never invent columns.",
    "Each target column may appear in at most one correspondence.",
    "Multiple sources may map to one target, and one source to many targets.",
    "Leave columns with no plausible counterpart unmatched.",
    "Answer with JSON: {\"correspondences\": [{\"sources\": [..], \"target\": ..}]}.",
];

/// Rules sent with every program-inference request.
pub const DEFAULT_INFER_RULES: &[&str] = &[
    "Infer one transformation expression per mapped target column.",
    "Expressions must reproduce every target example exactly from the paired source rows.",
    "Use only these operations: col, const, concat, arith, format, map_lookup, split.",
    "Reference only columns present in the source sample; never invent data.",
    "Answer with JSON: {\"program\": {\"columns\": [{\"target_column\": .., \"expr\": ..}]}}.",
];

/// Schema-match request body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRequest {
    pub source_schema: ColumnSchema,
    pub target_schema: ColumnSchema,
    pub rules: Vec<String>,
}

/// Schema-match response body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResponse {
    pub correspondences: Vec<Correspondence>,
}

/// Program-inference request body. Samples are capped by the caller (at
/// most 50 source rows go over the wire).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferRequest {
    pub schema_map: SchemaMap,
    pub source_sample: InternalRepresentation,
    pub target_sample: InternalRepresentation,
    pub rules: Vec<String>,
}

/// Program-inference response body. The program is raw JSON here; the
/// transform module parses and verifies it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferResponse {
    pub program: serde_json::Value,
}

/// Maximum source rows included in an inference request.
pub const MAX_PROMPT_ROWS: usize = 50;

/// How an answer at a provider-capable stage was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Deterministic path, chosen directly (no provider involved).
    Algorithmic,
    /// Remote provider answer, validated and accepted.
    Provider,
    /// Provider failed or answered invalidly; deterministic result used.
    Fallback,
}

/// A service answering match and inference requests.
pub trait Provider {
    fn match_schemas(&self, request: &MatchRequest) -> Result<MatchResponse>;
    fn infer_program(&self, request: &InferRequest) -> Result<InferResponse>;
}

/// Connection settings for an HTTP provider.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderConfig {
    /// Base URL; `/match` and `/infer` are appended.
    pub url: String,
    pub key: Option<String>,
    pub timeout: Duration,
}

impl ProviderConfig {
    /// Reads the configuration from `FLOWETL_PROVIDER_URL`,
    /// `FLOWETL_PROVIDER_KEY`, and `FLOWETL_PROVIDER_TIMEOUT_MS`. The URL
    /// is required; the rest have defaults.
    pub fn from_env() -> Result<ProviderConfig> {
        let url = std::env::var(ENV_PROVIDER_URL).map_err(|_| {
            Error::Config(format!("{ENV_PROVIDER_URL} is not set; remote provider unavailable"))
        })?;
        let key = std::env::var(ENV_PROVIDER_KEY).ok();
        let timeout_ms = match std::env::var(ENV_PROVIDER_TIMEOUT_MS) {
            Ok(raw) => raw.parse::<u64>().map_err(|_| {
                Error::Config(format!("{ENV_PROVIDER_TIMEOUT_MS} must be an integer, got {raw:?}"))
            })?,
            Err(_) => DEFAULT_TIMEOUT_MS,
        };
        Ok(ProviderConfig {
            url,
            key,
            timeout: Duration::from_millis(timeout_ms),
        })
    }

    pub fn new(url: impl Into<String>) -> ProviderConfig {
        ProviderConfig {
            url: url.into(),
            key: None,
            timeout: Duration::from_millis(DEFAULT_TIMEOUT_MS),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> ProviderConfig {
        self.timeout = timeout;
        self
    }
}

/// Blocking HTTP client for the provider protocol.
pub struct HttpProvider {
    config: ProviderConfig,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> HttpProvider {
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build();
        HttpProvider {
            agent: agent_config.into(),
            config,
        }
    }

    fn post<Req: Serialize, Resp: serde::de::DeserializeOwned>(
        &self,
        endpoint: &str,
        request: &Req,
    ) -> Result<Resp> {
        let url = format!("{}/{}", self.config.url.trim_end_matches('/'), endpoint);
        let mut builder = self.agent.post(&url);
        if let Some(key) = &self.config.key {
            builder = builder.header("authorization", format!("Bearer {key}"));
        }
        let mut response = builder.send_json(request).map_err(|e| Error::Pipeline {
            component: "provider".to_string(),
            message: format!("POST {endpoint} failed: {e}"),
        })?;
        response.body_mut().read_json().map_err(|e| Error::Pipeline {
            component: "provider".to_string(),
            message: format!("POST {endpoint} returned an unreadable body: {e}"),
        })
    }
}

impl Provider for HttpProvider {
    fn match_schemas(&self, request: &MatchRequest) -> Result<MatchResponse> {
        self.post("match", request)
    }

    fn infer_program(&self, request: &InferRequest) -> Result<InferResponse> {
        self.post("infer", request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;

    #[test]
    fn match_request_wire_shape() {
        let mut cols = IndexMap::new();
        cols.insert("id".to_string(), crate::ir::ColumnType::Number);
        let schema = ColumnSchema::new(cols);
        let request = MatchRequest {
            source_schema: schema.clone(),
            target_schema: schema,
            rules: vec!["r1".into()],
        };
        let json = serde_json::to_value(&request).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "source_schema": {"id": "number"},
                "target_schema": {"id": "number"},
                "rules": ["r1"],
            })
        );
    }

    #[test]
    fn infer_response_accepts_arbitrary_program_json() {
        let raw = r#"{"program": {"columns": []}}"#;
        let parsed: InferResponse = serde_json::from_str(raw).unwrap();
        assert!(parsed.program.is_object());
    }

    #[test]
    fn config_from_env_requires_url() {
        // Run in a scoped fashion: the variable is cleared for this test
        // binary unless a caller set it, in which case skip.
        if std::env::var(ENV_PROVIDER_URL).is_ok() {
            return;
        }
        assert!(ProviderConfig::from_env().is_err());
    }
}
