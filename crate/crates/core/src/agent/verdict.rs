use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One scoring turn of the reasoning backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentVerdict {
    pub flag: bool,
    /// Anomaly probability in `[0, 1]`.
    pub probability: f64,
    pub reasoning: String,
    pub crime_type: String,
    pub parse_ok: bool,
}

impl AgentVerdict {
    /// Degraded verdict used when no usable reply could be obtained.
    pub fn fallback(reason: &str) -> Self {
        AgentVerdict {
            flag: false,
            probability: 0.0,
            reasoning: reason.to_string(),
            crime_type: "none".to_string(),
            parse_ok: false,
        }
    }
}

/// First balanced `{...}` block in `raw`, skipping braces inside JSON strings.
pub fn extract_json_object(raw: &str) -> Option<&str> {
    let start = raw.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (off, ch) in raw[start..].char_indices() {
        if in_string {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&raw[start..start + off + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .filter(|x: &f64| x.is_finite())
}

fn as_text(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

/// Reads `{"anomaly_score", "confidence", "reasoning", "crime_type"}` out of
/// a raw reply. Any non-zero score counts as anomalous and the confidence is
/// clamped to `[0, 1]`. Unusable replies give the `parse_error` fallback with
/// `parse_ok == false`.
pub fn parse_verdict(raw: &str) -> AgentVerdict {
    try_parse(raw).unwrap_or_else(|| AgentVerdict::fallback("parse_error"))
}

fn try_parse(raw: &str) -> Option<AgentVerdict> {
    let obj: Value = serde_json::from_str(extract_json_object(raw)?).ok()?;
    let score = as_number(obj.get("anomaly_score")?)?;
    let confidence = as_number(obj.get("confidence")?)?;
    Some(AgentVerdict {
        flag: score != 0.0,
        probability: confidence.clamp(0.0, 1.0),
        reasoning: as_text(obj.get("reasoning")).unwrap_or_default(),
        crime_type: as_text(obj.get("crime_type"))
            .filter(|s| !s.trim().is_empty())
            .unwrap_or_else(|| "none".to_string()),
        parse_ok: true,
    })
}
