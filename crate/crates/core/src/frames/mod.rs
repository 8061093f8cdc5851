//! Frame ingestion, sliding windows and the two-stage frame abstraction
//! (uniform coverage followed by motion-salient selection).

mod ingest;
mod motion;

pub use ingest::{
    open_frames, read_pnm_frame, write_pgm_directory, write_raw_video, FrameSource, InMemoryFrames,
    PnmDirectory, RawManifest, RawVideo,
};
pub use motion::{
    blur_frame, motion_saliency, select_clip, select_from_candidates, select_indices,
    select_motion_frames, MotionConfig,
};

use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient frames for motion")]
    InsufficientFrames,
    #[error("invalid window schedule: window {window}, stride {stride}")]
    InvalidSchedule { window: usize, stride: usize },
    #[error("frame {index}: expected {expected} pixels, got {actual}")]
    PixelCount {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("frame {index} is {width}x{height}, expected {expected_width}x{expected_height}")]
    Dimensions {
        index: usize,
        width: usize,
        height: usize,
        expected_width: usize,
        expected_height: usize,
    },
    #[error("frame dimensions must be at least 1x1")]
    ZeroSize,
    #[error("mismatched candidate and score counts ({candidates} vs {scores})")]
    ScoreCount { candidates: usize, scores: usize },
    #[error("frame index {index} out of range for {len} frames")]
    OutOfRange { index: usize, len: usize },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One 8-bit grayscale frame, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    index: usize,
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(
        index: usize,
        width: usize,
        height: usize,
        pixels: Vec<u8>,
    ) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::ZeroSize);
        }
        if pixels.len() != width * height {
            return Err(FrameError::PixelCount {
                index,
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Frame {
            index,
            width,
            height,
            pixels,
        })
    }

    /// A frame with every pixel set to `value`.
    pub fn filled(index: usize, width: usize, height: usize, value: u8) -> Self {
        assert!(
            width > 0 && height > 0,
            "frame dimensions must be at least 1x1"
        );
        Frame {
            index,
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    /// Converts interleaved RGB to luma with weights 0.299 / 0.587 / 0.114.
    pub fn from_rgb(
        index: usize,
        width: usize,
        height: usize,
        rgb: &[u8],
    ) -> Result<Self, FrameError> {
        if rgb.len() != width * height * 3 {
            return Err(FrameError::PixelCount {
                index,
                expected: width * height * 3,
                actual: rgb.len(),
            });
        }
        let pixels = rgb
            .chunks_exact(3)
            .map(|px| {
                let y = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
                y.round().clamp(0.0, 255.0) as u8
            })
            .collect();
        Frame::new(index, width, height, pixels)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Same pixels under a different position in the video.
    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }
}

/// A contiguous run of frames starting at `start`.
#[derive(Clone, Copy, Debug)]
pub struct Window<'a> {
    pub start: usize,
    pub frames: &'a [Frame],
}

impl Window<'_> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn span(&self) -> Range<usize> {
        self.start..self.start + self.frames.len()
    }
}

/// The frames handed to the perception backend for one window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectedClip {
    pub source_window_start: usize,
    pub frames: Vec<Frame>,
}

impl SelectedClip {
    pub fn frame_indices(&self) -> Vec<usize> {
        self.frames.iter().map(Frame::index).collect()
    }
}

/// Window ranges for a video of `len` frames.
///
/// Windows start at `0, stride, 2*stride, ...` and the schedule stops at the
/// first window that reaches the last frame, which may be shorter than
/// `window`. A video shorter than `window` is one truncated window.
pub fn window_spans(
    len: usize,
    window: usize,
    stride: usize,
) -> Result<Vec<Range<usize>>, FrameError> {
    if window == 0 || stride == 0 || stride > window {
        return Err(FrameError::InvalidSchedule { window, stride });
    }
    if len == 0 {
        return Err(FrameError::EmptyInput);
    }
    let mut spans = Vec::with_capacity(len / stride + 1);
    let mut start = 0;
    loop {
        let end = (start + window).min(len);
        spans.push(start..end);
        if end == len {
            break;
        }
        start += stride;
    }
    Ok(spans)
}

/// Splits an in-memory video into overlapping windows.
pub fn slide_windows(
    video: &[Frame],
    window: usize,
    stride: usize,
) -> Result<Vec<Window<'_>>, FrameError> {
    Ok(window_spans(video.len(), window, stride)?
        .into_iter()
        .map(|span| Window {
            start: span.start,
            frames: &video[span],
        })
        .collect())
}

/// Offsets `i * step` of the uniform candidates inside a window of `len`
/// frames, with `step = max(1, len / n_uniform)`. Windows shorter than
/// `n_uniform` yield every offset.
pub fn uniform_offsets(len: usize, n_uniform: usize) -> Vec<usize> {
    let step = (len / n_uniform.max(1)).max(1);
    (0..n_uniform.min(len)).map(|i| i * step).collect()
}

pub fn uniform_sample(window: &Window<'_>, n_uniform: usize) -> Vec<Frame> {
    uniform_offsets(window.len(), n_uniform)
        .into_iter()
        .map(|off| window.frames[off].clone())
        .collect()
}
