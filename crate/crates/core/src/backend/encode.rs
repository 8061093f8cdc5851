use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};

use super::BackendError;
use crate::frames::{Frame, SelectedClip};

/// 8-bit grayscale PNG bytes for one frame.
pub fn encode_png(frame: &Frame) -> Vec<u8> {
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(
            frame.pixels(),
            frame.width() as u32,
            frame.height() as u32,
            ExtendedColorType::L8,
        )
        .expect("in-memory PNG encoding of a valid frame");
    out
}

/// Base64 PNG payload per frame, in clip order.
pub fn encode_frames(clip: &SelectedClip) -> Vec<String> {
    clip.frames
        .iter()
        .map(|f| STANDARD.encode(encode_png(f)))
        .collect()
}

/// Inverse of one [`encode_frames`] payload.
pub fn decode_frame_payload(payload: &str, index: usize) -> Result<Frame, BackendError> {
    let bytes = STANDARD
        .decode(payload)
        .map_err(|e| BackendError::Decode(format!("base64: {e}")))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| BackendError::Decode(format!("png: {e}")))?
        .to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Frame::new(index, w, h, img.into_raw()).map_err(|e| BackendError::Decode(e.to_string()))
}
