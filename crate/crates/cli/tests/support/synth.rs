//! Synthetic videos, scenarios and manifests for end-to-end runs.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};
use vad_core::frames::{write_raw_video, Frame};

pub const CAPTION_MARK: &str = "Analyze this surveillance video sequence";
pub const ANSWER_MARK: &str = "Answer this specific question";
pub const QUESTION_MARK: &str = "ONE specific, focused question";
pub const SCORING_MARK: &str = "Respond ONLY in JSON format";

/// A bright block sliding across a dark gradient, `speed` pixels per frame.
pub fn moving_block(len: usize, width: usize, height: usize, speed: usize) -> Vec<Frame> {
    (0..len)
        .map(|t| {
            let bx = (t * speed) % width;
            let pixels = (0..width * height)
                .map(|i| {
                    let (x, y) = (i % width, i / width);
                    let in_block = x >= bx && x < bx + 6 && y >= height / 3 && y < height / 3 + 6;
                    if in_block {
                        230
                    } else {
                        (10 + (x + y) % 40) as u8
                    }
                })
                .collect();
            Frame::new(t, width, height, pixels).unwrap()
        })
        .collect()
}

pub fn write_video(dir: &Path, name: &str, frames: &[Frame]) -> PathBuf {
    let path = dir.join(format!("{name}.raw"));
    write_raw_video(frames, &path, 30.0).unwrap();
    path
}

pub fn write_labels(dir: &Path, name: &str, labels: &[bool]) -> PathBuf {
    let path = dir.join(format!("{name}.txt"));
    vad_cli::manifest::write_labels(&path, labels).unwrap();
    path
}

pub fn write_manifest(dir: &Path, videos: &[(&str, &Path, Option<&Path>)]) -> PathBuf {
    let mut m = serde_json::Map::new();
    for (id, frames, labels) in videos {
        let mut entry = json!({ "frames": frames });
        if let Some(l) = labels {
            entry["labels"] = json!(l);
        }
        m.insert(id.to_string(), entry);
    }
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    path
}

pub fn rule(pattern: &str, reply: &str, once: bool) -> serde_json::Value {
    json!({"match": pattern, "reply": reply, "consume_once": once})
}

pub fn verdict(flag: u8, confidence: f64, reasoning: &str) -> String {
    json!({"anomaly_score": flag, "confidence": confidence, "reasoning": reasoning, "crime_type": if flag == 1 { "Assault" } else { "none" }})
        .to_string()
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> PathBuf {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_path_buf()
}

/// Scenario whose verdicts depend on retrieved memory, so any leak between
/// videos changes the outputs.
pub fn memory_sensitive_scenarios(dir: &Path) -> (PathBuf, PathBuf) {
    let vlm = json!([
        rule(
            CAPTION_MARK,
            "A person in a red jacket waits near the parked van.",
            true
        ),
        rule(
            CAPTION_MARK,
            "The person in the red jacket opens the van door.",
            true
        ),
        rule(
            CAPTION_MARK,
            "The person in the red jacket carries a box away.",
            true
        ),
        rule(CAPTION_MARK, "An empty parking lot with the van.", false),
        rule(
            ANSWER_MARK,
            "The person keeps looking around the van.",
            false
        ),
    ]);
    let llm = json!([
        rule(
            QUESTION_MARK,
            "Has the person in the red jacket been near the van before?",
            false
        ),
        rule(
            "Prior observations: The person in the red jacket opens",
            &verdict(1, 0.8, "repeated access to the van"),
            false
        ),
        rule(
            "Prior observations: A person in a red jacket",
            &verdict(0, 0.6, "lingering near a van"),
            false
        ),
        rule(SCORING_MARK, &verdict(0, 0.5, "nothing conclusive"), false),
    ]);
    (
        write_json(&dir.join("vlm_scenario.json"), &vlm),
        write_json(&dir.join("llm_scenario.json"), &llm),
    )
}

pub fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

/// SHA-256 of every file under `root`, keyed by relative path.
pub fn hash_tree(root: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().flatten().collect();
        entries.sort_by_key(|e| e.path());
        for e in entries {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let digest = Sha256::digest(std::fs::read(&p).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), hex);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn run_args(config: &Path, manifest: &Path, out: &Path, workers: usize) -> vad_cli::RunArgs {
    vad_cli::RunArgs {
        config: config.to_path_buf(),
        manifest: manifest.to_path_buf(),
        out: Some(out.to_path_buf()),
        workers: Some(workers),
        profile: None,
        backend: None,
    }
}

/// Runs the `run` command, returning the exit code and stderr.
pub fn run(args: &vad_cli::RunArgs) -> (i32, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = vad_cli::run_command(args, &mut out, &mut err);
    (code, String::from_utf8(err).unwrap())
}

/// Eight videos of different lengths sharing one memory-sensitive scenario.
pub fn eight_video_dataset(dir: &Path) -> (PathBuf, PathBuf) {
    let (vlm, llm) = memory_sensitive_scenarios(dir);
    let config = write_config(
        dir,
        &format!(
            "profile = \"ucf\"\n[backends.vlm]\nscenario = {:?}\n[backends.llm]\nscenario = {:?}\n",
            vlm.file_name().unwrap(),
            llm.file_name().unwrap()
        ),
    );
    let mut videos = Vec::new();
    for k in 0..8 {
        let len = 130 + 37 * k;
        let frames = moving_block(len, 32, 24, 1 + k % 3);
        let labels: Vec<bool> = (0..len).map(|i| i >= len / 2 && i < len / 2 + 40).collect();
        videos.push((
            format!("video{k}"),
            write_video(dir, &format!("video{k}"), &frames),
            write_labels(dir, &format!("video{k}"), &labels),
        ));
    }
    let refs: Vec<(&str, &Path, Option<&Path>)> = videos
        .iter()
        .map(|(id, f, l)| (id.as_str(), f.as_path(), Some(l.as_path())))
        .collect();
    (config, write_manifest(dir, &refs))
}
