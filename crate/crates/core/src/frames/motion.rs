use serde::{Deserialize, Serialize};

use super::{uniform_sample, Frame, FrameError, SelectedClip, Window};
use crate::kernel::{gaussian_weights, reflect_index};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionConfig {
    /// Side length of the square Gaussian blur kernel; odd.
    pub blur_kernel_size: usize,
    /// A blurred pixel difference must strictly exceed this to count as motion.
    pub motion_threshold: f64,
    pub n_uniform: usize,
    pub n_select: usize,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            blur_kernel_size: 21,
            motion_threshold: 25.0,
            n_uniform: 32,
            n_select: 8,
        }
    }
}

impl MotionConfig {
    /// The kernel spans three standard deviations on each side.
    pub fn blur_sigma(&self) -> f64 {
        self.blur_kernel_size.saturating_sub(1) as f64 / 6.0
    }

    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.blur_kernel_size.is_multiple_of(2) {
            out.push(("blur_kernel_size", "kernel size must be odd".to_string()));
        }
        if !(self.motion_threshold >= 0.0 && self.motion_threshold.is_finite()) {
            out.push((
                "motion_threshold",
                "threshold must be a finite value >= 0".to_string(),
            ));
        }
        if self.n_select < 2 {
            out.push((
                "n_select",
                "at least the first and last frame must be selected".to_string(),
            ));
        }
        if self.n_uniform < self.n_select {
            out.push(("n_uniform", "must be at least n_select".to_string()));
        }
        out
    }

    fn blur_radius(&self) -> usize {
        self.blur_kernel_size.saturating_sub(1) / 2
    }
}

/// Separable Gaussian blur with reflected borders, rounded back to 8 bits.
pub fn blur_frame(frame: &Frame, cfg: &MotionConfig) -> Vec<u8> {
    let radius = cfg.blur_radius();
    let weights = gaussian_weights(cfg.blur_sigma(), radius);
    if weights.len() == 1 {
        return frame.pixels().to_vec();
    }
    let (w, h) = (frame.width(), frame.height());
    let r = radius as isize;
    let src = frame.pixels();

    let mut horizontal = vec![0.0f64; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wt) in weights.iter().enumerate() {
                let sx = reflect_index(x as isize + k as isize - r, w);
                acc += wt * row[sx] as f64;
            }
            horizontal[y * w + x] = acc;
        }
    }

    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wt) in weights.iter().enumerate() {
                let sy = reflect_index(y as isize + k as isize - r, h);
                acc += wt * horizontal[sy * w + x];
            }
            out[y * w + x] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Fraction of pixels whose blurred difference to the next candidate exceeds
/// the motion threshold. The last candidate repeats the previous score.
pub fn motion_saliency(candidates: &[Frame], cfg: &MotionConfig) -> Result<Vec<f64>, FrameError> {
    if candidates.len() < 2 {
        return Err(FrameError::InsufficientFrames);
    }
    let first = &candidates[0];
    for f in &candidates[1..] {
        if f.width() != first.width() || f.height() != first.height() {
            return Err(FrameError::Dimensions {
                index: f.index(),
                width: f.width(),
                height: f.height(),
                expected_width: first.width(),
                expected_height: first.height(),
            });
        }
    }

    let blurred: Vec<Vec<u8>> = candidates.iter().map(|f| blur_frame(f, cfg)).collect();
    let area = (first.width() * first.height()) as f64;
    let mut scores: Vec<f64> = blurred
        .windows(2)
        .map(|pair| {
            let moving = pair[0]
                .iter()
                .zip(&pair[1])
                .filter(|(a, b)| f64::from(a.abs_diff(**b)) > cfg.motion_threshold)
                .count();
            moving as f64 / area
        })
        .collect();
    scores.push(scores[scores.len() - 1]);
    Ok(scores)
}

/// Candidate positions to keep: the first and last, then the highest scores
/// (ties to the lower position), returned in ascending order.
pub fn select_indices(scores: &[f64], n_select: usize) -> Vec<usize> {
    let n = scores.len();
    if n <= n_select.max(2) {
        return (0..n).collect();
    }
    let mut interior: Vec<usize> = (1..n - 1).collect();
    interior.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut keep: Vec<usize> = vec![0, n - 1];
    keep.extend(interior.into_iter().take(n_select.saturating_sub(2)));
    keep.sort_unstable();
    keep
}

pub fn select_motion_frames(
    candidates: &[Frame],
    scores: &[f64],
    n_select: usize,
    source_window_start: usize,
) -> Result<SelectedClip, FrameError> {
    if candidates.len() != scores.len() {
        return Err(FrameError::ScoreCount {
            candidates: candidates.len(),
            scores: scores.len(),
        });
    }
    let frames = select_indices(scores, n_select)
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect();
    Ok(SelectedClip {
        source_window_start,
        frames,
    })
}

/// Runs both stages on a window. Windows that yield no more candidates than
/// `n_select` pass through without scoring.
pub fn select_clip(window: &Window<'_>, cfg: &MotionConfig) -> Result<SelectedClip, FrameError> {
    if window.is_empty() {
        return Err(FrameError::EmptyInput);
    }
    let candidates = uniform_sample(window, cfg.n_uniform);
    select_from_candidates(candidates, cfg, window.start)
}

/// Selection over already sampled candidates, for callers that fetch the
/// uniform offsets themselves.
pub fn select_from_candidates(
    candidates: Vec<Frame>,
    cfg: &MotionConfig,
    source_window_start: usize,
) -> Result<SelectedClip, FrameError> {
    if candidates.len() <= cfg.n_select {
        return Ok(SelectedClip {
            source_window_start,
            frames: candidates,
        });
    }
    let scores = motion_saliency(&candidates, cfg)?;
    select_motion_frames(&candidates, &scores, cfg.n_select, source_window_start)
}
