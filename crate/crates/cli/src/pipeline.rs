//! Dataset runs.
//!
//! Videos are processed in parallel on a bounded pool; windows within a
//! video run strictly in order because each may read what the previous ones
//! wrote to the video's memory. Every video gets its own memory, and scripted
//! backends are instantiated per video so that their consumable rules cannot
//! leak between videos. HTTP clients are shared.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use thiserror::Error;
use vad_core::agent::{Agent, PromptProfile, WindowResult};
use vad_core::backend::{
    Backend, BackendConfig, BackendKind, HttpEmbedder, ScriptRule, ScriptedBackend,
};
use vad_core::eval::{average_precision, macro_average, micro_average, roc_auc, LabeledSeries};
use vad_core::frames::{open_frames, select_from_candidates, uniform_offsets, window_spans};
use vad_core::memory::{Embedder, HashingEmbedder, MemoryIndex};
use vad_core::postprocess::{final_scores, PostConfig, ScoreSeries, WindowScore};

use crate::config::{EngineConfig, Violation};
use crate::manifest::{read_labels, Manifest, VideoEntry};
use crate::output::{
    write_metrics, write_video_outputs, MetricsReport, VideoMetrics, METRICS_JSON,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("{0}")]
    Setup(String),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

enum Source {
    Scripted(Vec<ScriptRule>, u32),
    Shared(Backend),
}

impl Source {
    fn build(cfg: &BackendConfig, base: &Path, lock: &Arc<Mutex<()>>) -> Result<Self, String> {
        match cfg.kind {
            BackendKind::Scripted => {
                let rules = match cfg.scenario_path(base) {
                    Some(p) => ScriptedBackend::load_scenario(&p).map_err(|e| e.to_string())?,
                    None => Vec::new(),
                };
                Ok(Source::Scripted(rules, cfg.retries))
            }
            BackendKind::Http => Ok(Source::Shared(
                Backend::http(cfg)
                    .map_err(|e| e.to_string())?
                    .with_lock(lock.clone()),
            )),
        }
    }
}

/// Everything shared by the videos of one run.
pub struct Engine {
    cfg: EngineConfig,
    profile: PromptProfile,
    post: PostConfig,
    embedder: Arc<dyn Embedder>,
    vlm: Source,
    llm: Source,
    serialize_phases: bool,
}

/// One finished video.
#[derive(Clone, Debug)]
pub struct VideoRun {
    pub series: ScoreSeries,
    pub windows: Vec<WindowResult>,
    pub labels: Option<Vec<bool>>,
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Result<Self, RunError> {
        let violations = cfg.violations();
        if !violations.is_empty() {
            return Err(RunError::Invalid(violations));
        }
        let profile = cfg
            .prompt_profile()
            .map_err(|e| RunError::Setup(format!("profile_prompt: {e}")))?;
        let embedder: Arc<dyn Embedder> = match &cfg.backends.encoder {
            Some(enc) if enc.kind == BackendKind::Http => Arc::new(
                HttpEmbedder::new(enc, cfg.memory.dim)
                    .map_err(|e| RunError::Setup(format!("backends.encoder: {e}")))?,
            ),
            _ => Arc::new(HashingEmbedder::new(cfg.memory.dim)),
        };
        // a lone lock per backend unless the phases are serialized
        let phase_lock = Arc::new(Mutex::new(()));
        let (vlm_lock, llm_lock) = if cfg.backends.serialize_phases {
            (phase_lock.clone(), phase_lock)
        } else {
            (Arc::new(Mutex::new(())), Arc::new(Mutex::new(())))
        };
        let vlm = Source::build(&cfg.backends.vlm, &cfg.base_dir, &vlm_lock)
            .map_err(|e| RunError::Setup(format!("backends.vlm: {e}")))?;
        let llm = Source::build(&cfg.backends.llm, &cfg.base_dir, &llm_lock)
            .map_err(|e| RunError::Setup(format!("backends.llm: {e}")))?;
        Ok(Engine {
            post: cfg.post_config(),
            serialize_phases: cfg.backends.serialize_phases,
            cfg,
            profile,
            embedder,
            vlm,
            llm,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// Frames, windows, dialogue and post-processing for one video.
    pub fn process(&self, entry: &VideoEntry) -> Result<VideoRun, String> {
        let mut source = open_frames(&entry.frames).map_err(|e| e.to_string())?;
        let len = source.len();
        let labels = match &entry.labels {
            Some(p) => {
                let labels = read_labels(p)?;
                if labels.len() != len {
                    return Err(format!(
                        "{}: {} labels for {len} frames",
                        p.display(),
                        labels.len()
                    ));
                }
                Some(labels)
            }
            None => None,
        };
        let spans = window_spans(len, self.cfg.window.size, self.cfg.window.stride)
            .map_err(|e| e.to_string())?;

        let video_lock = Arc::new(Mutex::new(()));
        let fresh = |rules: &[ScriptRule], retries: u32, lock: Arc<Mutex<()>>| {
            Backend::new(ScriptedBackend::new(rules.to_vec()), retries).with_lock(lock)
        };
        let lock_for = |shared_with_other: bool| {
            if shared_with_other {
                video_lock.clone()
            } else {
                Arc::new(Mutex::new(()))
            }
        };
        let owned_vlm;
        let vlm = match &self.vlm {
            Source::Shared(b) => b,
            Source::Scripted(rules, r) => {
                owned_vlm = fresh(rules, *r, lock_for(self.serialize_phases));
                &owned_vlm
            }
        };
        let owned_llm;
        let llm = match &self.llm {
            Source::Shared(b) => b,
            Source::Scripted(rules, r) => {
                owned_llm = fresh(rules, *r, lock_for(self.serialize_phases));
                &owned_llm
            }
        };

        let agent = Agent::new(&self.cfg.agent, &self.profile, vlm, llm);
        let mut memory = MemoryIndex::new(self.cfg.memory.clone(), self.embedder.clone());
        let mut windows = Vec::with_capacity(spans.len());
        for span in spans {
            let candidates = uniform_offsets(span.len(), self.cfg.motion.n_uniform)
                .into_iter()
                .map(|o| source.frame(span.start + o))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let clip = select_from_candidates(candidates, &self.cfg.motion, span.start)
                .map_err(|e| e.to_string())?;
            let result = agent
                .run_window(&clip, &mut memory)
                .map_err(|e| format!("window {}: memory: {e}", span.start))?;
            windows.push(result);
        }
        let scores: Vec<WindowScore> = windows.iter().map(WindowResult::score).collect();
        let series = final_scores(&scores, len, self.cfg.window.size, &self.post)
            .map_err(|e| e.to_string())?;
        Ok(VideoRun {
            series,
            windows,
            labels,
        })
    }

    /// Runs every video of `manifest` and writes all outputs under `out`.
    pub fn run(&self, manifest: &Manifest, out: &Path) -> Result<RunSummary, RunError> {
        std::fs::create_dir_all(out)
            .map_err(|e| RunError::Setup(format!("{}: {e}", out.display())))?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .map_err(|e| RunError::Setup(e.to_string()))?;
        let entries: Vec<(&String, &VideoEntry)> = manifest.videos.iter().collect();
        let outcomes: Vec<Result<VideoRun, String>> = pool.install(|| {
            entries
                .par_iter()
                .map(|(id, entry)| {
                    let run = self.process(entry)?;
                    write_video_outputs(
                        &out.join(id.as_str()),
                        id,
                        &run.series,
                        &run.windows,
                        run.labels.as_deref(),
                    )
                    .map_err(|e| format!("writing outputs: {e}"))?;
                    Ok(run)
                })
                .collect()
        });

        let mut summary = RunSummary::default();
        for ((id, _), outcome) in entries.into_iter().zip(outcomes) {
            match outcome {
                Ok(run) => {
                    summary.videos.insert(id.clone(), run);
                }
                Err(e) => {
                    summary.failures.insert(id.clone(), e);
                }
            }
        }
        let report = summary.report(self.cfg.profile.as_str(), self.post);
        write_metrics(&out.join(METRICS_JSON), &report)
            .map_err(|e| RunError::Setup(format!("writing {METRICS_JSON}: {e}")))?;
        summary.metrics = Some(report);
        Ok(summary)
    }
}

#[derive(Debug, Default)]
pub struct RunSummary {
    pub videos: BTreeMap<String, VideoRun>,
    /// Video id to error message.
    pub failures: BTreeMap<String, String>,
    pub metrics: Option<MetricsReport>,
}

impl RunSummary {
    /// 0 when every video completed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.failures.is_empty())
    }

    fn report(&self, profile: &str, post: PostConfig) -> MetricsReport {
        let mut labeled = Vec::new();
        let mut videos = BTreeMap::new();
        for (id, run) in &self.videos {
            let scores = &run.series.final_scores;
            let (auc, ap) = match &run.labels {
                Some(l) => (roc_auc(scores, l).ok(), average_precision(scores, l).ok()),
                None => (None, None),
            };
            if let Some(l) = &run.labels {
                labeled.push(LabeledSeries {
                    scores: scores.clone(),
                    labels: l.clone(),
                });
            }
            videos.insert(
                id.clone(),
                VideoMetrics {
                    frames: scores.len(),
                    windows: run.windows.len(),
                    failed_windows: run.windows.iter().filter(|w| w.failed).count(),
                    labeled: run.labels.is_some(),
                    auc,
                    ap,
                },
            );
        }
        let (micro, micro_error) = if labeled.is_empty() {
            (None, Some("no labeled videos".to_string()))
        } else {
            match micro_average(&labeled) {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            }
        };
        MetricsReport {
            profile: profile.to_string(),
            post,
            videos,
            failures: self.failures.clone(),
            micro,
            micro_error,
            macro_average: macro_average(&labeled),
        }
    }
}
