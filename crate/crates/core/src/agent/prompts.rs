use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::postprocess::PostConfig;

pub const VLM_INITIAL_PROMPT: &str = include_str!("../../prompts/vlm_initial.txt");
/// Contains a `{question}` placeholder.
pub const VLM_FOCUSED_PROMPT: &str = include_str!("../../prompts/vlm_focused.txt");
pub const QUESTION_PROMPT: &str = include_str!("../../prompts/question_generation.txt");

const SCORING_UCF: &str = include_str!("../../prompts/scoring_ucf.txt");
const SCORING_XD: &str = include_str!("../../prompts/scoring_xd.txt");
const SCORING_UBNORMAL: &str = include_str!("../../prompts/scoring_ubnormal.txt");
const SCORING_COMPLEXVAD: &str = include_str!("../../prompts/scoring_complexvad.txt");

/// Focused perception prompt for one question.
pub fn focused_prompt(question: &str) -> String {
    VLM_FOCUSED_PROMPT.replace("{question}", question)
}

/// Benchmark whose anomaly definition the scoring prompt follows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileId {
    #[default]
    Ucf,
    Xd,
    Ubnormal,
    Complexvad,
}

impl ProfileId {
    pub const ALL: [ProfileId; 4] = [
        ProfileId::Ucf,
        ProfileId::Xd,
        ProfileId::Ubnormal,
        ProfileId::Complexvad,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileId::Ucf => "ucf",
            ProfileId::Xd => "xd",
            ProfileId::Ubnormal => "ubnormal",
            ProfileId::Complexvad => "complexvad",
        }
    }

    pub fn taxonomy_label(self) -> &'static str {
        match self {
            ProfileId::Ucf => "UCF-Crime",
            ProfileId::Xd => "XD-Violence",
            ProfileId::Ubnormal => "UBnormal",
            ProfileId::Complexvad => "ComplexVAD",
        }
    }

    pub fn scoring_prompt(self) -> &'static str {
        match self {
            ProfileId::Ucf => SCORING_UCF,
            ProfileId::Xd => SCORING_XD,
            ProfileId::Ubnormal => SCORING_UBNORMAL,
            ProfileId::Complexvad => SCORING_COMPLEXVAD,
        }
    }

    /// Post-processing parameters tuned for this benchmark.
    pub fn post_defaults(self) -> PostConfig {
        let (sigma1, sigma2, alpha) = match self {
            ProfileId::Ucf => (280.0, 0.3, 0.05),
            ProfileId::Ubnormal => (145.0, 0.5, 0.2),
            ProfileId::Xd => (142.0, 0.7, 0.4),
            ProfileId::Complexvad => (420.0, 0.4, 0.21),
        };
        PostConfig {
            alpha,
            sigma1,
            sigma2,
        }
    }
}

impl fmt::Display for ProfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProfileId::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown profile {s:?} (expected ucf, xd, ubnormal or complexvad)")
            })
    }
}

/// Scoring system prompt plus the taxonomy it encodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptProfile {
    pub id: ProfileId,
    pub taxonomy_label: String,
    pub system_prompt: String,
}

impl PromptProfile {
    pub fn builtin(id: ProfileId) -> Self {
        PromptProfile {
            id,
            taxonomy_label: id.taxonomy_label().to_string(),
            system_prompt: id.scoring_prompt().to_string(),
        }
    }

    /// Replaces the scoring prompt with the contents of `path`.
    pub fn from_file(id: ProfileId, path: &Path) -> std::io::Result<Self> {
        let system_prompt = std::fs::read_to_string(path)?;
        Ok(PromptProfile {
            system_prompt,
            ..PromptProfile::builtin(id)
        })
    }
}
