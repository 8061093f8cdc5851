//! Training-free video anomaly detection.
//!
//! A video is cut into overlapping windows. From each window a handful of
//! motion-salient frames is captioned by a vision-language backend, and a
//! language-model backend scores the scene, asking follow-up questions while
//! it is unsure. Scene summaries go into a per-video vector memory that later
//! windows can consult. Window verdicts are finally turned into calibrated,
//! smoothed per-frame scores and evaluated with ROC-AUC and AP.
//!
//! ```
//! use vad_core::frames::{window_spans, Frame};
//!
//! let spans = window_spans(256, 128, 64).unwrap();
//! assert_eq!(spans, vec![0..128, 64..192, 128..256]);
//! let _black = Frame::filled(0, 4, 4, 0);
//! ```

pub mod agent;
pub mod backend;
pub mod dialogue;
pub mod eval;
pub mod frames;
pub mod kernel;
pub mod memory;
pub mod postprocess;
pub mod tokens;

// Guide chapters, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/frames.md")]
    mod frames {}
    #[doc = include_str!("../../../book/src/memory.md")]
    mod memory {}
    #[doc = include_str!("../../../book/src/agent.md")]
    mod agent {}
    #[doc = include_str!("../../../book/src/backends.md")]
    mod backends {}
    #[doc = include_str!("../../../book/src/postprocess.md")]
    mod postprocess {}
    #[doc = include_str!("../../../book/src/eval.md")]
    mod eval {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
