//! Frame sources on disk.
//!
//! Two layouts are supported:
//!
//! * a directory of binary PNM images (`P5` grayscale, or `P6` colour which is
//!   converted to luma) whose file stems are the zero-padded frame index,
//!   e.g. `000000.pgm`, `000001.pgm`, ...;
//! * a raw planar file of `frame_count * height * width` bytes, frame-major
//!   then row-major, next to a JSON manifest with the same stem
//!   (`clip.raw` + `clip.json`).

use std::fs::{self, File};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Frame, FrameError};

/// Random access to the frames of one video.
pub trait FrameSource: Send {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn frame(&mut self, index: usize) -> Result<Frame, FrameError>;
}

pub struct InMemoryFrames {
    frames: Vec<Frame>,
}

impl InMemoryFrames {
    pub fn new(frames: Vec<Frame>) -> Self {
        InMemoryFrames { frames }
    }
}

impl FrameSource for InMemoryFrames {
    fn len(&self) -> usize {
        self.frames.len()
    }

    fn frame(&mut self, index: usize) -> Result<Frame, FrameError> {
        self.frames
            .get(index)
            .cloned()
            .ok_or(FrameError::OutOfRange {
                index,
                len: self.frames.len(),
            })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FrameError + '_ {
    move |source| FrameError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> FrameError {
    FrameError::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Decodes one PNM file into a grayscale frame.
pub fn read_pnm_frame(path: &Path, index: usize) -> Result<Frame, FrameError> {
    let img = image::ImageReader::open(path)
        .map_err(io_err(path))?
        .with_guessed_format()
        .map_err(io_err(path))?
        .decode()
        .map_err(|e| format_err(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        Frame::from_rgb(index, w, h, img.to_rgb8().as_raw())
    } else {
        Frame::new(index, w, h, img.to_luma8().into_raw())
    }
}

/// A directory of per-frame PNM images.
pub struct PnmDirectory {
    files: Vec<PathBuf>,
    width: usize,
    height: usize,
}

impl PnmDirectory {
    pub fn open(dir: &Path) -> Result<Self, FrameError> {
        let mut numbered = Vec::new();
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            let ext = path
                .extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase);
            if !matches!(ext.as_deref(), Some("pgm" | "ppm" | "pnm")) {
                continue;
            }
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default();
            let n: usize = stem
                .parse()
                .map_err(|_| format_err(&path, "file stem is not a frame index"))?;
            numbered.push((n, path));
        }
        if numbered.is_empty() {
            return Err(FrameError::EmptyInput);
        }
        numbered.sort();
        for (expected, (n, path)) in numbered.iter().enumerate() {
            if *n != expected {
                return Err(format_err(
                    path,
                    format!("expected frame {expected}, found {n}"),
                ));
            }
        }
        let files: Vec<PathBuf> = numbered.into_iter().map(|(_, p)| p).collect();
        let first = read_pnm_frame(&files[0], 0)?;
        Ok(PnmDirectory {
            files,
            width: first.width(),
            height: first.height(),
        })
    }
}

impl FrameSource for PnmDirectory {
    fn len(&self) -> usize {
        self.files.len()
    }

    fn frame(&mut self, index: usize) -> Result<Frame, FrameError> {
        let path = self.files.get(index).ok_or(FrameError::OutOfRange {
            index,
            len: self.files.len(),
        })?;
        let frame = read_pnm_frame(path, index)?;
        if frame.width() != self.width || frame.height() != self.height {
            return Err(FrameError::Dimensions {
                index,
                width: frame.width(),
                height: frame.height(),
                expected_width: self.width,
                expected_height: self.height,
            });
        }
        Ok(frame)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawManifest {
    pub height: usize,
    pub width: usize,
    pub frame_count: usize,
    pub fps: f64,
}

pub struct RawVideo {
    file: File,
    path: PathBuf,
    manifest: RawManifest,
}

impl RawVideo {
    /// Opens `path` (either the `.raw` data file or its `.json` manifest).
    pub fn open(path: &Path) -> Result<Self, FrameError> {
        let is_manifest = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let (data_path, manifest_path) = if is_manifest {
            (path.with_extension("raw"), path.to_path_buf())
        } else {
            (path.to_path_buf(), path.with_extension("json"))
        };
        let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest: RawManifest =
            serde_json::from_str(&text).map_err(|e| format_err(&manifest_path, e.to_string()))?;
        if manifest.width == 0 || manifest.height == 0 {
            return Err(FrameError::ZeroSize);
        }
        if manifest.frame_count == 0 {
            return Err(FrameError::EmptyInput);
        }
        let file = File::open(&data_path).map_err(io_err(&data_path))?;
        let size = file.metadata().map_err(io_err(&data_path))?.len();
        let expected = (manifest.width * manifest.height * manifest.frame_count) as u64;
        if size != expected {
            return Err(format_err(
                &data_path,
                format!("expected {expected} bytes, found {size}"),
            ));
        }
        Ok(RawVideo {
            file,
            path: data_path,
            manifest,
        })
    }

    pub fn manifest(&self) -> &RawManifest {
        &self.manifest
    }
}

impl FrameSource for RawVideo {
    fn len(&self) -> usize {
        self.manifest.frame_count
    }

    fn frame(&mut self, index: usize) -> Result<Frame, FrameError> {
        if index >= self.manifest.frame_count {
            return Err(FrameError::OutOfRange {
                index,
                len: self.manifest.frame_count,
            });
        }
        let area = self.manifest.width * self.manifest.height;
        let mut pixels = vec![0u8; area];
        self.file
            .seek(SeekFrom::Start((index * area) as u64))
            .map_err(io_err(&self.path))?;
        self.file
            .read_exact(&mut pixels)
            .map_err(io_err(&self.path))?;
        Frame::new(index, self.manifest.width, self.manifest.height, pixels)
    }
}

/// Opens a frame directory or a raw planar video, depending on what `path`
/// points at.
pub fn open_frames(path: &Path) -> Result<Box<dyn FrameSource>, FrameError> {
    if path.is_dir() {
        Ok(Box::new(PnmDirectory::open(path)?))
    } else {
        Ok(Box::new(RawVideo::open(path)?))
    }
}

/// Writes `frames` as `000000.pgm`, `000001.pgm`, ... using the header
/// `P5\n{width} {height}\n255\n`.
pub fn write_pgm_directory(frames: &[Frame], dir: &Path) -> Result<(), FrameError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (i, frame) in frames.iter().enumerate() {
        let path = dir.join(format!("{i:06}.pgm"));
        let mut bytes = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
        bytes.extend_from_slice(frame.pixels());
        fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Writes `frames` to `path` (data) and `path.with_extension("json")`.
pub fn write_raw_video(frames: &[Frame], path: &Path, fps: f64) -> Result<RawManifest, FrameError> {
    let first = frames.first().ok_or(FrameError::EmptyInput)?;
    let manifest = RawManifest {
        height: first.height(),
        width: first.width(),
        frame_count: frames.len(),
        fps,
    };
    let mut out = File::create(path).map_err(io_err(path))?;
    for f in frames {
        if f.width() != manifest.width || f.height() != manifest.height {
            return Err(FrameError::Dimensions {
                index: f.index(),
                width: f.width(),
                height: f.height(),
                expected_width: manifest.width,
                expected_height: manifest.height,
            });
        }
        out.write_all(f.pixels()).map_err(io_err(path))?;
    }
    let manifest_path = path.with_extension("json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;
    Ok(manifest)
}
