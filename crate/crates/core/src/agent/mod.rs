//! The per-window dialogue between the perception and reasoning backends.
//!
//! A window starts with a broad caption of its selected frames. The
//! reasoning backend scores it; while the score stays below the confidence
//! threshold and turns remain, it asks one clarifying question, the memory is
//! searched with that question, the perception backend answers it, and the
//! scene is re-scored with the answer and any retrieved context. The final
//! scene summary is written to memory once the loop ends.

mod prompts;
mod verdict;

pub use prompts::{
    focused_prompt, ProfileId, PromptProfile, QUESTION_PROMPT, VLM_FOCUSED_PROMPT,
    VLM_INITIAL_PROMPT,
};
pub use verdict::{extract_json_object, parse_verdict, AgentVerdict};

use serde::{Deserialize, Serialize};

use crate::backend::{encode_frames, Backend, BackendError, ModelRequest};
use crate::dialogue::{render_turns, DialogueHistory, DialogueTurn};
use crate::frames::SelectedClip;
use crate::memory::{MemoryError, MemoryIndex};
use crate::postprocess::WindowScore;
use crate::tokens::{count_tokens, truncate_tokens};

/// Used when the reasoning backend returns no usable question.
pub const FALLBACK_QUESTION: &str = "What specific actions are the people performing?";
/// Recorded when the perception backend cannot answer.
pub const UNANSWERABLE: &str = "unanswerable";
pub const BACKEND_ERROR: &str = "backend_error";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub max_turns: usize,
    /// The loop continues while the probability is strictly below this.
    pub threshold: f64,
    /// Token budget of the enriched scoring message.
    pub enrich_budget: usize,
    pub max_caption_tokens: usize,
    pub max_answer_tokens: usize,
    pub vlm_max_new_tokens: u32,
    pub vlm_temperature: f64,
    pub llm_max_new_tokens: u32,
    pub llm_temperature: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            max_turns: 2,
            threshold: 0.7,
            enrich_budget: 2048,
            max_caption_tokens: 300,
            max_answer_tokens: 150,
            vlm_max_new_tokens: 512,
            vlm_temperature: 0.7,
            llm_max_new_tokens: 512,
            llm_temperature: 0.3,
        }
    }
}

impl LoopConfig {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            out.push((
                "threshold",
                format!("threshold must lie in (0, 1), got {}", self.threshold),
            ));
        }
        for (name, v) in [
            ("enrich_budget", self.enrich_budget),
            ("max_caption_tokens", self.max_caption_tokens),
            ("max_answer_tokens", self.max_answer_tokens),
        ] {
            if v == 0 {
                out.push((name, format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("vlm_max_new_tokens", self.vlm_max_new_tokens),
            ("llm_max_new_tokens", self.llm_max_new_tokens),
        ] {
            if v == 0 {
                out.push((name, format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [
            ("vlm_temperature", self.vlm_temperature),
            ("llm_temperature", self.llm_temperature),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push((name, format!("{name} must be >= 0")));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub text: String,
    pub token_count: usize,
}

impl Caption {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let token_count = count_tokens(&text);
        Caption { text, token_count }
    }
}

/// Outcome of one window's dialogue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub window_start: usize,
    pub selected_frames: Vec<usize>,
    pub caption: String,
    pub flag: bool,
    pub probability: f64,
    pub reasoning: String,
    pub crime_type: String,
    pub history: DialogueHistory,
    pub turns_used: usize,
    pub failed: bool,
}

impl WindowResult {
    pub fn failed(clip: &SelectedClip) -> Self {
        WindowResult {
            window_start: clip.source_window_start,
            selected_frames: clip.frame_indices(),
            caption: String::new(),
            flag: false,
            probability: 0.0,
            reasoning: BACKEND_ERROR.to_string(),
            crime_type: "none".to_string(),
            history: DialogueHistory::new(),
            turns_used: 0,
            failed: true,
        }
    }

    pub fn score(&self) -> WindowScore {
        WindowScore {
            start: self.window_start,
            flag: self.flag,
            probability: self.probability,
        }
    }
}

/// Scoring message: the caption, then retrieved context, then the dialogue.
///
/// When the whole message exceeds `budget` tokens the context is cut first,
/// then the oldest turns are dropped; the caption is never cut.
pub fn enrich(caption: &str, turns: &[DialogueTurn], ctx: Option<&str>, budget: usize) -> String {
    const CTX_LABEL: &str = "Prior observations:";
    let label_tokens = count_tokens(CTX_LABEL);
    let caption_tokens = count_tokens(caption);
    let mut first_turn = 0;
    let turn_tokens = |from: usize| count_tokens(&render_turns(&turns[from..]));

    let mut ctx_text = ctx.filter(|c| !c.trim().is_empty()).map(str::to_string);
    let ctx_cost = |c: &Option<String>| c.as_ref().map_or(0, |c| label_tokens + count_tokens(c));

    if caption_tokens + turn_tokens(0) + ctx_cost(&ctx_text) > budget {
        let room = budget.saturating_sub(caption_tokens + turn_tokens(0) + label_tokens);
        ctx_text = ctx_text
            .map(|c| truncate_tokens(&c, room).into_owned())
            .filter(|c| count_tokens(c) > 0);
    }
    while first_turn < turns.len()
        && caption_tokens + turn_tokens(first_turn) + ctx_cost(&ctx_text) > budget
    {
        first_turn += 1;
    }

    let mut out = caption.to_string();
    if let Some(c) = ctx_text {
        out.push_str("\n\n");
        out.push_str(CTX_LABEL);
        out.push(' ');
        out.push_str(&c);
    }
    if first_turn < turns.len() {
        out.push_str("\n\n");
        out.push_str(&render_turns(&turns[first_turn..]));
    }
    out
}

/// Drives the dialogue for one window against a pair of backends.
pub struct Agent<'a> {
    pub cfg: &'a LoopConfig,
    pub profile: &'a PromptProfile,
    pub vlm: &'a Backend,
    pub llm: &'a Backend,
}

impl<'a> Agent<'a> {
    pub fn new(
        cfg: &'a LoopConfig,
        profile: &'a PromptProfile,
        vlm: &'a Backend,
        llm: &'a Backend,
    ) -> Self {
        Agent {
            cfg,
            profile,
            vlm,
            llm,
        }
    }

    fn vlm_request(&self, prompt: String, images: &[String]) -> ModelRequest {
        ModelRequest {
            system_prompt: prompt,
            user_text: String::new(),
            images: Some(images.to_vec()),
            max_new_tokens: self.cfg.vlm_max_new_tokens,
            temperature: self.cfg.vlm_temperature,
        }
    }

    fn llm_request(&self, system: &str, user: String) -> ModelRequest {
        ModelRequest {
            system_prompt: system.to_string(),
            user_text: user,
            images: None,
            max_new_tokens: self.cfg.llm_max_new_tokens,
            temperature: self.cfg.llm_temperature,
        }
    }

    pub fn initial_caption(&self, clip: &SelectedClip) -> Result<Caption, BackendError> {
        self.caption_from_payloads(&encode_frames(clip))
    }

    fn caption_from_payloads(&self, images: &[String]) -> Result<Caption, BackendError> {
        let reply = self
            .vlm
            .complete_with_retry(&self.vlm_request(VLM_INITIAL_PROMPT.to_string(), images))?;
        let text = truncate_tokens(reply.trim(), self.cfg.max_caption_tokens).into_owned();
        if text.is_empty() {
            return Err(BackendError::Decode("empty caption".into()));
        }
        Ok(Caption::new(text))
    }

    /// Scores the scene. A reply that cannot be parsed is requested once more
    /// before degrading to the fallback verdict.
    pub fn score_scene(
        &self,
        caption: &Caption,
        history: &DialogueHistory,
        ctx: Option<&str>,
    ) -> AgentVerdict {
        let user = enrich(&caption.text, history.turns(), ctx, self.cfg.enrich_budget);
        let req = self.llm_request(&self.profile.system_prompt, user);
        for _ in 0..2 {
            match self.llm.complete_with_retry(&req) {
                Err(_) => return AgentVerdict::fallback(BACKEND_ERROR),
                Ok(reply) => {
                    let verdict = parse_verdict(&reply);
                    if verdict.parse_ok {
                        return verdict;
                    }
                }
            }
        }
        AgentVerdict::fallback("parse_error")
    }

    pub fn generate_question(
        &self,
        caption: &Caption,
        history: &DialogueHistory,
        verdict: &AgentVerdict,
    ) -> String {
        let mut user = enrich(&caption.text, history.turns(), None, self.cfg.enrich_budget);
        user.push_str(&format!(
            "\n\nCurrent assessment: anomaly_score={}, confidence={:.2}\nReasoning: {}",
            u8::from(verdict.flag),
            verdict.probability,
            verdict.reasoning
        ));
        self.llm
            .complete_with_retry(&self.llm_request(QUESTION_PROMPT, user))
            .ok()
            .and_then(|reply| {
                reply
                    .lines()
                    .map(str::trim)
                    .find(|l| !l.is_empty())
                    .map(str::to_string)
            })
            .unwrap_or_else(|| FALLBACK_QUESTION.to_string())
    }

    pub fn answer_question(&self, clip: &SelectedClip, question: &str) -> String {
        self.answer_from_payloads(&encode_frames(clip), question)
    }

    fn answer_from_payloads(&self, images: &[String], question: &str) -> String {
        match self
            .vlm
            .complete_with_retry(&self.vlm_request(focused_prompt(question), images))
        {
            Ok(reply) if !reply.trim().is_empty() => {
                truncate_tokens(reply.trim(), self.cfg.max_answer_tokens).into_owned()
            }
            _ => UNANSWERABLE.to_string(),
        }
    }

    /// Full dialogue for one window, ending with one memory write.
    ///
    /// Backend failures degrade the result instead of erroring; only memory
    /// (encoder) failures are returned as errors.
    pub fn run_window(
        &self,
        clip: &SelectedClip,
        memory: &mut MemoryIndex,
    ) -> Result<WindowResult, MemoryError> {
        let images = encode_frames(clip);
        let caption = match self.caption_from_payloads(&images) {
            Ok(c) => c,
            Err(_) => return Ok(WindowResult::failed(clip)),
        };

        let mut history = DialogueHistory::new();
        let mut verdict = self.score_scene(&caption, &history, None);
        let mut last_ctx: Option<String> = None;
        let mut turns = 0;
        while turns < self.cfg.max_turns && verdict.probability < self.cfg.threshold {
            let question = self.generate_question(&caption, &history, &verdict);
            let ctx = memory.retrieve_context(&question)?;
            let answer = self.answer_from_payloads(&images, &question);
            history.push(question, answer);
            verdict = self.score_scene(&caption, &history, ctx.as_deref());
            if ctx.is_some() {
                last_ctx = ctx;
            }
            turns += 1;
        }

        memory.add_scene(
            &caption.text,
            verdict.flag,
            history.turns(),
            last_ctx.as_deref(),
        )?;

        Ok(WindowResult {
            window_start: clip.source_window_start,
            selected_frames: clip.frame_indices(),
            caption: caption.text,
            flag: verdict.flag,
            probability: verdict.probability,
            reasoning: verdict.reasoning,
            crime_type: verdict.crime_type,
            history,
            turns_used: turns,
            failed: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn(q: &str, a: &str) -> DialogueTurn {
        DialogueTurn {
            question: q.into(),
            answer: a.into(),
        }
    }

    #[test]
    fn enrich_layout() {
        let turns = vec![
            turn("Is he running?", "No."),
            turn("Is the door open?", "Yes."),
        ];
        assert_eq!(
            enrich("A hallway.", &turns, Some("earlier: a cart"), 2048),
            "A hallway.\n\nPrior observations: earlier: a cart\n\nQ: Is he running?\nA: No.\nQ: Is the door open?\nA: Yes."
        );
        assert_eq!(enrich("A hallway.", &[], None, 2048), "A hallway.");
        assert_eq!(enrich("A hallway.", &[], Some(" "), 2048), "A hallway.");
    }

    #[test]
    fn enrich_cuts_context_first() {
        let turns = vec![turn("q1", "a1")];
        // caption 2 + turn 4 + label 2 leaves 2 context tokens within 10
        let out = enrich("c d", &turns, Some("x1 x2 x3 x4 x5"), 10);
        assert_eq!(out, "c d\n\nPrior observations: x1 x2\n\nQ: q1\nA: a1");
        assert_eq!(count_tokens(&out), 10);
        // no room at all for context: section disappears
        let out = enrich("c d", &turns, Some("x1 x2"), 7);
        assert_eq!(out, "c d\n\nQ: q1\nA: a1");
    }

    #[test]
    fn enrich_then_drops_oldest_turns() {
        let turns = vec![turn("old question", "old answer"), turn("new", "answer")];
        let out = enrich("c", &turns, Some("ctx"), 6);
        assert_eq!(out, "c\n\nQ: new\nA: answer");
        // the caption always survives
        let out = enrich("a very long caption here", &turns, Some("ctx"), 2);
        assert_eq!(out, "a very long caption here");
    }

    #[test]
    fn enrich_respects_budget() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let words = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
                vec!["w"; rng.random_range(1..n)].join(" ")
            };
            let caption = words(&mut rng, 40);
            let turns: Vec<DialogueTurn> = (0..rng.random_range(0..4))
                .map(|_| turn(&words(&mut rng, 30), &words(&mut rng, 30)))
                .collect();
            let ctx = words(&mut rng, 80);
            let budget = rng.random_range(1..150);
            let out = enrich(&caption, &turns, Some(&ctx), budget);
            assert!(out.starts_with(&caption));
            assert!(count_tokens(&out) <= budget.max(count_tokens(&caption)));
        }
    }

    #[test]
    fn loop_config_checks() {
        assert!(LoopConfig::default().violations().is_empty());
        let bad = LoopConfig {
            threshold: 1.2,
            ..LoopConfig::default()
        };
        assert_eq!(bad.violations()[0].0, "threshold");
    }
}
