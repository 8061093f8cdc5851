use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{BackendError, ModelBackend, ModelRequest};

/// A canned reply, chosen when `match` occurs in the request's system prompt
/// followed by its user text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(rename = "match")]
    pub pattern: String,
    pub reply: String,
    #[serde(default)]
    pub consume_once: bool,
}

impl ScriptRule {
    pub fn new(pattern: impl Into<String>, reply: impl Into<String>) -> Self {
        ScriptRule {
            pattern: pattern.into(),
            reply: reply.into(),
            consume_once: false,
        }
    }

    pub fn once(pattern: impl Into<String>, reply: impl Into<String>) -> Self {
        ScriptRule {
            consume_once: true,
            ..ScriptRule::new(pattern, reply)
        }
    }
}

/// Deterministic substring-dispatch backend.
///
/// Rules are tried in order; the first match answers, and a `consume_once`
/// rule is removed after answering. No match answers with an empty string.
/// Every request is logged.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    rules: Mutex<Vec<ScriptRule>>,
    log: Mutex<Vec<ModelRequest>>,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptRule>) -> Self {
        ScriptedBackend {
            rules: Mutex::new(rules),
            log: Mutex::new(Vec::new()),
        }
    }

    /// Parses a scenario: a JSON list of `{match, reply, consume_once}`.
    pub fn parse_scenario(json: &str) -> Result<Vec<ScriptRule>, BackendError> {
        serde_json::from_str(json).map_err(|e| BackendError::Config(format!("scenario: {e}")))
    }

    pub fn load_scenario(path: &Path) -> Result<Vec<ScriptRule>, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        Self::parse_scenario(&text)
    }

    pub fn requests(&self) -> Vec<ModelRequest> {
        self.log.lock().unwrap().clone()
    }

    /// Number of logged requests whose system prompt contains `needle`.
    pub fn count_system(&self, needle: &str) -> usize {
        self.log
            .lock()
            .unwrap()
            .iter()
            .filter(|r| r.system_prompt.contains(needle))
            .count()
    }
}

impl ModelBackend for ScriptedBackend {
    fn complete(&self, req: &ModelRequest) -> Result<String, BackendError> {
        self.log.lock().unwrap().push(req.clone());
        let haystack = format!("{}{}", req.system_prompt, req.user_text);
        let mut rules = self.rules.lock().unwrap();
        let Some(pos) = rules.iter().position(|r| haystack.contains(&r.pattern)) else {
            return Ok(String::new());
        };
        let reply = rules[pos].reply.clone();
        if rules[pos].consume_once {
            rules.remove(pos);
        }
        Ok(reply)
    }
}

// The Arc form lets tests keep a handle for call inspection while the
// pipeline owns the backend.
impl ModelBackend for std::sync::Arc<ScriptedBackend> {
    fn complete(&self, req: &ModelRequest) -> Result<String, BackendError> {
        self.as_ref().complete(req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(system: &str, user: &str) -> ModelRequest {
        ModelRequest {
            system_prompt: system.into(),
            user_text: user.into(),
            images: None,
            max_new_tokens: 512,
            temperature: 0.7,
        }
    }

    #[test]
    fn first_matching_rule_answers() {
        let b = ScriptedBackend::new(vec![
            ScriptRule::new("Analyze this surveillance", "Two people..."),
            ScriptRule::new("Analyze", "never reached"),
        ]);
        let r = req("Analyze this surveillance video sequence.", "");
        assert_eq!(b.complete(&r).unwrap(), "Two people...");
        assert_eq!(b.complete(&req("other", "")).unwrap(), "");
        assert_eq!(b.requests().len(), 2);
    }

    #[test]
    fn consume_once_rules_expire() {
        let b = ScriptedBackend::new(vec![
            ScriptRule::once("x", "first"),
            ScriptRule::new("x", "later"),
        ]);
        let outs: Vec<String> = (0..3).map(|_| b.complete(&req("x", "")).unwrap()).collect();
        assert_eq!(outs, vec!["first", "later", "later"]);
    }

    #[test]
    fn matches_across_prompt_and_user_text() {
        let b = ScriptedBackend::new(vec![ScriptRule::new("endbegin", "joined")]);
        assert_eq!(b.complete(&req("the end", "begin here")).unwrap(), "joined");
    }

    #[test]
    fn scenario_json() {
        let rules = ScriptedBackend::parse_scenario(
            r#"[{"match": "a", "reply": "b", "consume_once": true}, {"match": "c", "reply": "d"}]"#,
        )
        .unwrap();
        assert_eq!(
            rules,
            vec![ScriptRule::once("a", "b"), ScriptRule::new("c", "d")]
        );
        assert!(ScriptedBackend::parse_scenario("{").is_err());
    }

    #[test]
    fn identical_sequences_identical_replies() {
        let rules = vec![
            ScriptRule::once("q", "1"),
            ScriptRule::once("q", "2"),
            ScriptRule::new("", "z"),
        ];
        let run = || {
            let b = ScriptedBackend::new(rules.clone());
            (0..4)
                .map(|_| b.complete(&req("q", "")).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
        assert_eq!(run(), vec!["1", "2", "z", "z"]);
    }
}
