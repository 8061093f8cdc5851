//! Window verdicts to frame-level scores.
//!
//! Each frame takes the maximum flag and probability over the windows that
//! contain it. The probability is then bounded by `alpha` (floored for
//! anomalous frames, capped for normal ones) and smoothed by two Gaussian
//! passes with standard deviations `sigma1` and `sigma2` frames.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{gaussian_weights, reflect_index};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PostError {
    #[error("coverage gap at frame {0}")]
    CoverageGap(usize),
    #[error("empty input")]
    Empty,
    #[error("flag and probability lengths differ ({0} vs {1})")]
    Misaligned(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostConfig {
    pub alpha: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl PostConfig {
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(0.0..=1.0).contains(&self.alpha) {
            out.push((
                "alpha",
                format!("alpha must lie in [0, 1], got {}", self.alpha),
            ));
        }
        for (name, v) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push((name, format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        out
    }
}

/// One window's contribution to the frame scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowScore {
    pub start: usize,
    pub flag: bool,
    pub probability: f64,
}

/// Per-frame arrays from every stage of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSeries {
    pub flags: Vec<bool>,
    pub probabilities: Vec<f64>,
    pub calibrated: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub final_scores: Vec<f64>,
}

impl ScoreSeries {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Max-pools window verdicts onto frames. Window `start` covers
/// `start..min(start + window, video_len)`.
pub fn aggregate_frames(
    windows: &[WindowScore],
    video_len: usize,
    window: usize,
) -> Result<(Vec<bool>, Vec<f64>), PostError> {
    if video_len == 0 {
        return Err(PostError::Empty);
    }
    let mut covered = vec![false; video_len];
    let mut flags = vec![false; video_len];
    let mut probs = vec![0.0f64; video_len];
    for w in windows {
        let end = (w.start + window).min(video_len);
        for i in w.start.min(end)..end {
            covered[i] = true;
            flags[i] |= w.flag;
            probs[i] = probs[i].max(w.probability);
        }
    }
    if let Some(gap) = covered.iter().position(|c| !c) {
        return Err(PostError::CoverageGap(gap));
    }
    Ok((flags, probs))
}

/// `max(p, alpha)` for anomalous frames, `min(p, alpha)` otherwise.
pub fn calibrate(flags: &[bool], probs: &[f64], alpha: f64) -> Result<Vec<f64>, PostError> {
    if flags.len() != probs.len() {
        return Err(PostError::Misaligned(flags.len(), probs.len()));
    }
    Ok(flags
        .iter()
        .zip(probs)
        .map(|(&g, &p)| if g { p.max(alpha) } else { p.min(alpha) })
        .collect())
}

/// Kernel radius for a smoothing pass: `ceil(3 sigma)`, at least 1 when
/// `sigma > 0`.
pub fn smoothing_radius(sigma: f64) -> usize {
    if sigma <= 0.0 {
        0
    } else {
        ((3.0 * sigma).ceil() as usize).max(1)
    }
}

/// Convolution with a normalized Gaussian of standard deviation `sigma`
/// using reflected boundaries. `sigma == 0` returns the input unchanged.
pub fn gaussian_smooth(series: &[f64], sigma: f64) -> Vec<f64> {
    let radius = smoothing_radius(sigma);
    if radius == 0 || series.is_empty() {
        return series.to_vec();
    }
    let weights = gaussian_weights(sigma, radius);
    let n = series.len();
    let r = radius as isize;
    (0..n)
        .map(|i| {
            weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * series[reflect_index(i as isize + k as isize - r, n)])
                .sum()
        })
        .collect()
}

/// Aggregate, calibrate, smooth twice and clamp to `[0, 1]`.
pub fn final_scores(
    windows: &[WindowScore],
    video_len: usize,
    window: usize,
    cfg: &PostConfig,
) -> Result<ScoreSeries, PostError> {
    let (flags, probabilities) = aggregate_frames(windows, video_len, window)?;
    let calibrated = calibrate(&flags, &probabilities, cfg.alpha)?;
    let smoothed = gaussian_smooth(&calibrated, cfg.sigma1);
    let final_scores = gaussian_smooth(&smoothed, cfg.sigma2)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    Ok(ScoreSeries {
        flags,
        probabilities,
        calibrated,
        smoothed,
        final_scores,
    })
}
