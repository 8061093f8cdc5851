//! Perception and reasoning model backends.
//!
//! Every backend answers a [`ModelRequest`] with plain text. [`Backend`] wraps
//! an implementation with the per-instance lock (at most one request in
//! flight) and the retry budget from its [`BackendConfig`].

mod encode;
mod http;
mod scripted;

pub use encode::{decode_frame_payload, encode_frames, encode_png};
pub use http::{chat_completions_body, HttpBackend, HttpEmbedder};
pub use scripted::{ScriptRule, ScriptedBackend};

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("server returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Decode(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelRequest {
    pub system_prompt: String,
    pub user_text: String,
    /// Base64 PNG payloads; perception requests only.
    pub images: Option<Vec<String>>,
    pub max_new_tokens: u32,
    pub temperature: f64,
}

pub trait ModelBackend: Send + Sync {
    fn complete(&self, req: &ModelRequest) -> Result<String, BackendError>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Scripted,
    Http,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Server base URL, e.g. `http://localhost:8000`.
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: f64,
    pub retries: u32,
    /// Environment variable holding a bearer token.
    pub auth_env: Option<String>,
    /// Scenario file for the scripted kind.
    pub scenario: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Scripted,
            endpoint: None,
            model: None,
            timeout_secs: 120.0,
            retries: 1,
            auth_env: None,
            scenario: None,
        }
    }
}

impl BackendConfig {
    /// Invariant violations as `(field, message)` pairs.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.kind == BackendKind::Http {
            if self.endpoint.as_deref().is_none_or(str::is_empty) {
                out.push(("endpoint", "http backend requires an endpoint".to_string()));
            }
            if self.model.as_deref().is_none_or(str::is_empty) {
                out.push(("model", "http backend requires a model name".to_string()));
            }
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            out.push(("timeout_secs", "timeout must be positive".to_string()));
        }
        out
    }

    /// Bearer token from the configured environment variable, if set.
    pub fn auth_token(&self) -> Option<String> {
        self.auth_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|t| !t.is_empty())
    }

    /// Scenario path resolved against `base` when relative.
    pub fn scenario_path(&self, base: &Path) -> Option<PathBuf> {
        self.scenario.as_ref().map(|p| {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        })
    }
}

/// A backend instance with mutual exclusion and a retry budget.
pub struct Backend {
    inner: Box<dyn ModelBackend>,
    lock: Arc<Mutex<()>>,
    retries: u32,
}

impl Backend {
    pub fn new(inner: impl ModelBackend + 'static, retries: u32) -> Self {
        Backend {
            inner: Box::new(inner),
            lock: Arc::new(Mutex::new(())),
            retries,
        }
    }

    /// Builds the HTTP client described by `cfg`.
    pub fn http(cfg: &BackendConfig) -> Result<Self, BackendError> {
        Ok(Backend::new(HttpBackend::new(cfg)?, cfg.retries))
    }

    /// Shares `lock` with other backends so that none of them run
    /// concurrently, e.g. to let a single-GPU server swap models between the
    /// perception and reasoning phases.
    pub fn with_lock(mut self, lock: Arc<Mutex<()>>) -> Self {
        self.lock = lock;
        self
    }

    pub fn retries(&self) -> u32 {
        self.retries
    }

    /// One attempt, holding the instance lock for its duration.
    pub fn complete(&self, req: &ModelRequest) -> Result<String, BackendError> {
        let _guard = self
            .lock
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner());
        self.inner.complete(req)
    }

    /// Up to `1 + retries` attempts; the last error is returned.
    pub fn complete_with_retry(&self, req: &ModelRequest) -> Result<String, BackendError> {
        let mut attempt = 0;
        loop {
            match self.complete(req) {
                Ok(reply) => return Ok(reply),
                Err(e) if attempt >= self.retries => return Err(e),
                Err(_) => attempt += 1,
            }
        }
    }
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backend")
            .field("retries", &self.retries)
            .finish_non_exhaustive()
    }
}
