//! Engine configuration file (TOML).
//!
//! Every field has a default, so an empty file is a complete configuration.
//! Post-processing parameters left unset follow the selected profile.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vad_core::agent::{LoopConfig, ProfileId, PromptProfile};
use vad_core::backend::{BackendConfig, BackendKind, ScriptedBackend};
use vad_core::frames::MotionConfig;
use vad_core::memory::MemoryConfig;
use vad_core::postprocess::PostConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub size: usize,
    pub stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            size: 128,
            stride: 64,
        }
    }
}

/// Explicit post-processing values; unset ones come from the profile.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostOverrides {
    pub alpha: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendsConfig {
    pub vlm: BackendConfig,
    pub llm: BackendConfig,
    /// Sentence encoder for the memory; the built-in hashing encoder when
    /// absent or scripted.
    pub encoder: Option<BackendConfig>,
    /// Let at most one request run across the perception and reasoning
    /// backends at any time.
    pub serialize_phases: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub profile: ProfileId,
    /// Replaces the profile's built-in scoring prompt.
    pub profile_prompt: Option<PathBuf>,
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
    pub window: WindowConfig,
    pub motion: MotionConfig,
    #[serde(rename = "loop")]
    pub agent: LoopConfig,
    pub memory: MemoryConfig,
    pub post: PostOverrides,
    pub backends: BackendsConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            profile: ProfileId::Ucf,
            profile_prompt: None,
            workers: 1,
            output_dir: None,
            window: WindowConfig::default(),
            motion: MotionConfig::default(),
            agent: LoopConfig::default(),
            memory: MemoryConfig::default(),
            post: PostOverrides::default(),
            backends: BackendsConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Dotted path of the offending key, e.g. `loop.threshold`.
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

fn prefixed<'a>(
    prefix: &'a str,
    found: Vec<(&'static str, String)>,
) -> impl Iterator<Item = Violation> + 'a {
    found.into_iter().map(move |(field, message)| Violation {
        key: format!("{prefix}.{field}"),
        message,
    })
}

impl EngineConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, String> {
        let mut cfg: EngineConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        EngineConfig::parse(&text, base).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn post_config(&self) -> PostConfig {
        let base = self.profile.post_defaults();
        PostConfig {
            alpha: self.post.alpha.unwrap_or(base.alpha),
            sigma1: self.post.sigma1.unwrap_or(base.sigma1),
            sigma2: self.post.sigma2.unwrap_or(base.sigma2),
        }
    }

    pub fn prompt_profile(&self) -> std::io::Result<PromptProfile> {
        match &self.profile_prompt {
            Some(p) => PromptProfile::from_file(self.profile, &self.resolve(p)),
            None => Ok(PromptProfile::builtin(self.profile)),
        }
    }

    /// Switches both dialogue backends to `kind`.
    pub fn set_backend_kind(&mut self, kind: BackendKind) {
        self.backends.vlm.kind = kind;
        self.backends.llm.kind = kind;
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |key: &str, message: String| {
            out.push(Violation {
                key: key.to_string(),
                message,
            })
        };
        if self.workers == 0 {
            push("workers", "worker count must be at least 1".into());
        }
        if self.window.size == 0 {
            push("window.size", "window size must be positive".into());
        }
        if self.window.stride == 0 {
            push("window.stride", "stride must be positive".into());
        } else if self.window.stride > self.window.size {
            push(
                "window.stride",
                "stride must not exceed the window size".into(),
            );
        }
        if let Some(p) = &self.profile_prompt {
            if let Err(e) = std::fs::read_to_string(self.resolve(p)) {
                push(
                    "profile_prompt",
                    format!("cannot read {}: {e}", p.display()),
                );
            }
        }
        for (name, b) in [("vlm", &self.backends.vlm), ("llm", &self.backends.llm)] {
            for (field, message) in b.violations() {
                push(&format!("backends.{name}.{field}"), message);
            }
            if b.kind == BackendKind::Scripted {
                if let Some(p) = b.scenario_path(&self.base_dir) {
                    if let Err(e) = ScriptedBackend::load_scenario(&p) {
                        push(&format!("backends.{name}.scenario"), e.to_string());
                    }
                }
            }
        }
        if let Some(enc) = &self.backends.encoder {
            if enc.kind == BackendKind::Http && enc.endpoint.as_deref().is_none_or(str::is_empty) {
                push(
                    "backends.encoder.endpoint",
                    "http encoder requires an endpoint".into(),
                );
            }
        }
        out.extend(prefixed("motion", self.motion.violations()));
        out.extend(prefixed("loop", self.agent.violations()));
        out.extend(prefixed("memory", self.memory.violations()));
        out.extend(prefixed("post", self.post_config().violations()));
        out
    }

    /// Effective parameters as `(key, value)` rows.
    pub fn effective_table(&self) -> Vec<(String, String)> {
        let post = self.post_config();
        let m = &self.motion;
        let a = &self.agent;
        let mem = &self.memory;
        let backend = |b: &BackendConfig| match b.kind {
            BackendKind::Scripted => format!(
                "scripted{}",
                b.scenario
                    .as_ref()
                    .map(|p| format!(" ({})", p.display()))
                    .unwrap_or_default()
            ),
            BackendKind::Http => format!(
                "http {} model={}",
                b.endpoint.as_deref().unwrap_or("?"),
                b.model.as_deref().unwrap_or("?")
            ),
        };
        let rows: Vec<(&str, String)> = vec![
            ("profile", self.profile.to_string()),
            ("workers", self.workers.to_string()),
            ("window.size", self.window.size.to_string()),
            ("window.stride", self.window.stride.to_string()),
            ("motion.blur_kernel_size", m.blur_kernel_size.to_string()),
            ("motion.motion_threshold", m.motion_threshold.to_string()),
            ("motion.n_uniform", m.n_uniform.to_string()),
            ("motion.n_select", m.n_select.to_string()),
            ("loop.max_turns", a.max_turns.to_string()),
            ("loop.threshold", a.threshold.to_string()),
            ("loop.enrich_budget", a.enrich_budget.to_string()),
            ("loop.max_caption_tokens", a.max_caption_tokens.to_string()),
            ("loop.max_answer_tokens", a.max_answer_tokens.to_string()),
            ("loop.vlm_max_new_tokens", a.vlm_max_new_tokens.to_string()),
            ("loop.vlm_temperature", a.vlm_temperature.to_string()),
            ("loop.llm_max_new_tokens", a.llm_max_new_tokens.to_string()),
            ("loop.llm_temperature", a.llm_temperature.to_string()),
            ("memory.caption_budget", mem.caption_budget.to_string()),
            ("memory.context_budget", mem.context_budget.to_string()),
            ("memory.top_k", mem.top_k.to_string()),
            ("memory.dim", mem.dim.to_string()),
            ("memory.capacity", mem.capacity.to_string()),
            ("post.alpha", post.alpha.to_string()),
            ("post.sigma1", post.sigma1.to_string()),
            ("post.sigma2", post.sigma2.to_string()),
            ("backends.vlm", backend(&self.backends.vlm)),
            ("backends.llm", backend(&self.backends.llm)),
            (
                "backends.encoder",
                self.backends
                    .encoder
                    .as_ref()
                    .filter(|e| e.kind == BackendKind::Http)
                    .map(backend)
                    .unwrap_or_else(|| format!("hashing ({} dims)", mem.dim)),
            ),
            (
                "backends.serialize_phases",
                self.backends.serialize_phases.to_string(),
            ),
        ];
        rows.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}
