//! Per-video semantic memory of past windows.
//!
//! Every completed window stores a short scene summary with its embedding.
//! Later windows query the memory with their clarifying question and receive
//! the most similar summaries, capped by a token budget.

mod embed;

pub use embed::{cosine, fnv1a64, normalize, Embedder, HashingEmbedder};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{render_turns, DialogueTurn};
use crate::tokens::{count_tokens, truncate_tokens};

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("empty embedding input")]
    EmptyText,
    #[error("embedding has zero or non-finite norm")]
    ZeroVector,
    #[error("embedding has dimension {actual}, expected {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error("encoder backend: {0}")]
    Encoder(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryConfig {
    /// Token cap on stored scene text.
    pub caption_budget: usize,
    /// Token budget for the joined retrieval result.
    pub context_budget: usize,
    pub top_k: usize,
    pub dim: usize,
    /// Entry count that triggers pruning.
    pub capacity: usize,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        MemoryConfig {
            caption_budget: 150,
            context_budget: 512,
            top_k: 3,
            dim: 384,
            capacity: 400,
        }
    }
}

impl MemoryConfig {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        [
            ("caption_budget", self.caption_budget),
            ("context_budget", self.context_budget),
            ("top_k", self.top_k),
            ("dim", self.dim),
            ("capacity", self.capacity),
        ]
        .into_iter()
        .filter(|&(_, v)| v == 0)
        .map(|(name, _)| (name, format!("{name} must be positive")))
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemoryEntry {
    pub text: String,
    pub verdict_flag: bool,
    pub embedding: Vec<f64>,
}

/// Snapshot row: `{"text": ..., "flag": 0|1, "embedding": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub text: String,
    pub flag: u8,
    pub embedding: Vec<f64>,
}

pub struct MemoryIndex {
    entries: Vec<MemoryEntry>,
    cfg: MemoryConfig,
    encoder: Arc<dyn Embedder>,
}

impl std::fmt::Debug for MemoryIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MemoryIndex")
            .field("entries", &self.entries.len())
            .field("cfg", &self.cfg)
            .finish()
    }
}

/// Stored text for one window: caption, then the dialogue, then the
/// retrieved context, cut to `budget` tokens.
pub fn scene_text(
    caption: &str,
    turns: &[DialogueTurn],
    ctx: Option<&str>,
    budget: usize,
) -> String {
    let mut parts = vec![caption.to_string()];
    if !turns.is_empty() {
        parts.push(render_turns(turns));
    }
    if let Some(ctx) = ctx.filter(|c| !c.trim().is_empty()) {
        parts.push(ctx.to_string());
    }
    truncate_tokens(&parts.join("\n"), budget).into_owned()
}

impl MemoryIndex {
    pub fn new(cfg: MemoryConfig, encoder: Arc<dyn Embedder>) -> Self {
        MemoryIndex {
            entries: Vec::new(),
            cfg,
            encoder,
        }
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.cfg
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn encode(&self, text: &str) -> Result<Vec<f64>, MemoryError> {
        let v = self.encoder.embed(text)?;
        if v.len() != self.cfg.dim {
            return Err(MemoryError::Dimension {
                expected: self.cfg.dim,
                actual: v.len(),
            });
        }
        normalize(v)
    }

    /// Stores one window. When the index grows past capacity only the most
    /// recent `capacity / 2` entries survive.
    pub fn add_scene(
        &mut self,
        caption: &str,
        verdict_flag: bool,
        turns: &[DialogueTurn],
        ctx: Option<&str>,
    ) -> Result<(), MemoryError> {
        let text = scene_text(caption, turns, ctx, self.cfg.caption_budget);
        let embedding = self.encode(&text)?;
        self.entries.push(MemoryEntry {
            text,
            verdict_flag,
            embedding,
        });
        if self.entries.len() > self.cfg.capacity {
            let keep = self.cfg.capacity / 2;
            let drop = self.entries.len() - keep;
            self.entries.drain(..drop);
        }
        Ok(())
    }

    /// Positions of the entries that make up the context for `query`, in
    /// rank order. Ranking is by cosine similarity, ties to the older entry;
    /// accumulation stops right after the entry that pushes the token count
    /// past the context budget.
    pub fn retrieve(&self, query: &str) -> Result<Vec<usize>, MemoryError> {
        if self.entries.is_empty() || query.trim().is_empty() {
            return Ok(Vec::new());
        }
        let q = self.encode(query)?;
        let sims: Vec<f64> = self
            .entries
            .iter()
            .map(|e| cosine(&q, &e.embedding))
            .collect();
        let mut order: Vec<usize> = (0..sims.len()).collect();
        order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));

        let mut picked = Vec::new();
        let mut tokens = 0;
        for j in order.into_iter().take(self.cfg.top_k) {
            picked.push(j);
            tokens += count_tokens(&self.entries[j].text);
            if tokens > self.cfg.context_budget {
                break;
            }
        }
        Ok(picked)
    }

    /// Joined text of [`retrieve`](Self::retrieve), or `None` when nothing is
    /// stored yet.
    pub fn retrieve_context(&self, query: &str) -> Result<Option<String>, MemoryError> {
        let picked = self.retrieve(query)?;
        if picked.is_empty() {
            return Ok(None);
        }
        let texts: Vec<&str> = picked
            .iter()
            .map(|&j| self.entries[j].text.as_str())
            .collect();
        Ok(Some(texts.join("\n")))
    }

    pub fn snapshot(&self) -> Vec<SnapshotEntry> {
        self.entries
            .iter()
            .map(|e| SnapshotEntry {
                text: e.text.clone(),
                flag: u8::from(e.verdict_flag),
                embedding: e.embedding.clone(),
            })
            .collect()
    }

    pub fn from_snapshot(
        rows: Vec<SnapshotEntry>,
        cfg: MemoryConfig,
        encoder: Arc<dyn Embedder>,
    ) -> Result<Self, MemoryError> {
        let mut entries = Vec::with_capacity(rows.len());
        for row in rows {
            if row.embedding.len() != cfg.dim {
                return Err(MemoryError::Dimension {
                    expected: cfg.dim,
                    actual: row.embedding.len(),
                });
            }
            entries.push(MemoryEntry {
                text: row.text,
                verdict_flag: row.flag != 0,
                embedding: normalize(row.embedding)?,
            });
        }
        Ok(MemoryIndex {
            entries,
            cfg,
            encoder,
        })
    }
}
