//! OpenAI-compatible HTTP clients.
//!
//! Chat requests go to `POST {endpoint}/v1/chat/completions`:
//!
//! ```json
//! {
//!   "model": "...",
//!   "messages": [
//!     {"role": "system", "content": "..."},
//!     {"role": "user", "content": [
//!       {"type": "text", "text": "..."},
//!       {"type": "image_url", "image_url": {"url": "data:image/png;base64,..."}}
//!     ]}
//!   ],
//!   "max_tokens": 512,
//!   "temperature": 0.7
//! }
//! ```
//!
//! The user content is a plain string when the request carries no images.
//! The reply text is `choices[0].message.content`.

use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder};
use serde_json::{json, Value};

use super::{BackendConfig, BackendError, ModelBackend, ModelRequest};
use crate::memory::{normalize, Embedder, MemoryError};

/// JSON body for a chat-completions request.
pub fn chat_completions_body(model: &str, req: &ModelRequest) -> Value {
    let user_content = match &req.images {
        None => Value::String(req.user_text.clone()),
        Some(images) => {
            let mut parts = Vec::with_capacity(images.len() + 1);
            if !req.user_text.is_empty() {
                parts.push(json!({"type": "text", "text": req.user_text}));
            }
            parts.extend(images.iter().map(|b64| {
                json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}})
            }));
            Value::Array(parts)
        }
    };
    json!({
        "model": model,
        "messages": [
            {"role": "system", "content": req.system_prompt},
            {"role": "user", "content": user_content},
        ],
        "max_tokens": req.max_new_tokens,
        "temperature": req.temperature,
    })
}

struct HttpClient {
    client: Client,
    base: String,
    token: Option<String>,
}

impl HttpClient {
    fn new(cfg: &BackendConfig) -> Result<Self, BackendError> {
        if let Some((field, msg)) = cfg.violations().into_iter().next() {
            return Err(BackendError::Config(format!("{field}: {msg}")));
        }
        let base = cfg
            .endpoint
            .as_deref()
            .ok_or_else(|| BackendError::Config("endpoint: missing".into()))?
            .trim_end_matches('/')
            .to_string();
        let client = Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(HttpClient {
            client,
            base,
            token: cfg.auth_token(),
        })
    }

    fn post(&self, path: &str) -> RequestBuilder {
        let rb = self.client.post(format!("{}{path}", self.base));
        match &self.token {
            Some(t) => rb.bearer_auth(t),
            None => rb,
        }
    }

    fn send_json(&self, path: &str, body: &Value) -> Result<Value, BackendError> {
        let resp = self.post(path).json(body).send().map_err(map_reqwest)?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(BackendError::Status {
                status: status.as_u16(),
                body,
            });
        }
        resp.json::<Value>().map_err(map_reqwest)
    }
}

fn map_reqwest(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        BackendError::Timeout
    } else if e.is_decode() {
        BackendError::Decode(e.to_string())
    } else {
        BackendError::Transport(e.to_string())
    }
}

pub struct HttpBackend {
    http: HttpClient,
    model: String,
}

impl HttpBackend {
    pub fn new(cfg: &BackendConfig) -> Result<Self, BackendError> {
        let http = HttpClient::new(cfg)?;
        Ok(HttpBackend {
            http,
            model: cfg.model.clone().unwrap_or_default(),
        })
    }
}

impl ModelBackend for HttpBackend {
    fn complete(&self, req: &ModelRequest) -> Result<String, BackendError> {
        let reply = self.http.send_json(
            "/v1/chat/completions",
            &chat_completions_body(&self.model, req),
        )?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Decode("missing choices[0].message.content".into()))
    }
}

/// Sentence encoder behind `POST {endpoint}/v1/embeddings`.
///
/// The request is `{"input": text}` (plus `"model"` when configured); the
/// reply is `{"embedding": [...]}`. OpenAI-style `{"data": [{"embedding":
/// [...]}]}` replies are accepted too.
pub struct HttpEmbedder {
    http: HttpClient,
    model: Option<String>,
    dim: usize,
    retries: u32,
}

impl HttpEmbedder {
    pub fn new(cfg: &BackendConfig, dim: usize) -> Result<Self, BackendError> {
        let mut relaxed = cfg.clone();
        // an encoder server may not need a model name
        relaxed.model.get_or_insert_with(|| "default".into());
        Ok(HttpEmbedder {
            http: HttpClient::new(&relaxed)?,
            model: cfg.model.clone(),
            dim,
            retries: cfg.retries,
        })
    }

    fn request(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        let mut body = json!({ "input": text });
        if let Some(m) = &self.model {
            body["model"] = Value::String(m.clone());
        }
        let reply = self.http.send_json("/v1/embeddings", &body)?;
        let values = reply
            .get("embedding")
            .or_else(|| reply.pointer("/data/0/embedding"))
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::Decode("missing embedding".into()))?;
        values
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| BackendError::Decode("non-numeric embedding".into()))
            })
            .collect()
    }
}

impl Embedder for HttpEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, MemoryError> {
        if text.trim().is_empty() {
            return Err(MemoryError::EmptyText);
        }
        let mut attempt = 0;
        let v = loop {
            match self.request(text) {
                Ok(v) => break v,
                Err(e) if attempt >= self.retries => {
                    return Err(MemoryError::Encoder(e.to_string()))
                }
                Err(_) => attempt += 1,
            }
        };
        if v.len() != self.dim {
            return Err(MemoryError::Dimension {
                expected: self.dim,
                actual: v.len(),
            });
        }
        normalize(v)
    }
}
