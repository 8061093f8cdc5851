//! Dataset manifests and ground-truth label files.
//!
//! A manifest is a JSON object mapping video ids to their frame source and
//! optional label file:
//!
//! ```json
//! {"Arrest007": {"frames": "videos/Arrest007.raw", "labels": "gt/Arrest007.txt"}}
//! ```
//!
//! Relative paths are resolved against the manifest's directory. A label
//! file holds one `0` or `1` per frame, one per line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoEntry {
    pub frames: PathBuf,
    #[serde(default)]
    pub labels: Option<PathBuf>,
}

/// Videos ordered by id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Manifest {
    pub videos: BTreeMap<String, VideoEntry>,
}

impl Manifest {
    pub fn parse(json: &str, base_dir: &Path) -> Result<Self, String> {
        let mut m: Manifest = serde_json::from_str(json).map_err(|e| e.to_string())?;
        for entry in m.videos.values_mut() {
            entry.frames = base_dir.join(&entry.frames);
            if let Some(l) = &mut entry.labels {
                *l = base_dir.join(&*l);
            }
        }
        for id in m.videos.keys() {
            if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
                return Err(format!(
                    "video id {id:?} cannot be used as a directory name"
                ));
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Manifest::parse(&text, path.parent().unwrap_or(Path::new(".")))
            .map_err(|e| format!("{}: {e}", path.display()))
    }
}

pub fn parse_labels(text: &str) -> Result<Vec<bool>, String> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| match l {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(format!("line {}: expected 0 or 1, got {other:?}", i + 1)),
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<bool>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_labels(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Writes labels in the format [`read_labels`] accepts.
pub fn write_labels(path: &Path, labels: &[bool]) -> std::io::Result<()> {
    let mut text = String::with_capacity(labels.len() * 2);
    for &l in labels {
        text.push(if l { '1' } else { '0' });
        text.push('\n');
    }
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_resolve_against_the_manifest() {
        let m = Manifest::parse(
            r#"{"b": {"frames": "v/b.raw"}, "a": {"frames": "/abs/a", "labels": "gt/a.txt"}}"#,
            Path::new("/data"),
        )
        .unwrap();
        let ids: Vec<&String> = m.videos.keys().collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(m.videos["a"].frames, PathBuf::from("/abs/a"));
        assert_eq!(m.videos["a"].labels, Some(PathBuf::from("/data/gt/a.txt")));
        assert_eq!(m.videos["b"].frames, PathBuf::from("/data/v/b.raw"));
    }

    #[test]
    fn bad_ids_and_fields_are_rejected() {
        assert!(Manifest::parse(r#"{"../x": {"frames": "f"}}"#, Path::new(".")).is_err());
        assert!(Manifest::parse(r#"{"x": {"frame": "f"}}"#, Path::new(".")).is_err());
    }

    #[test]
    fn label_files() {
        assert_eq!(
            parse_labels("0\n1\n1\n\n").unwrap(),
            vec![false, true, true]
        );
        assert!(parse_labels("0\n2\n").unwrap_err().starts_with("line 2"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.txt");
        write_labels(&p, &[true, false]).unwrap();
        assert_eq!(read_labels(&p).unwrap(), vec![true, false]);
    }
}
