use serde::{Deserialize, Serialize};

use super::WarpField;
use crate::config::AugmentConfig;
use crate::rng::SampleStream;

/// A crop window (resized back to the full frame) and optional mirror.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropFlipParams {
    /// `(row, col)` of the window's top-left pixel.
    pub crop_origin: (usize, usize),
    pub crop_height: usize,
    pub crop_width: usize,
    pub flip_horizontal: bool,
}

impl CropFlipParams {
    pub fn identity(height: usize, width: usize) -> Self {
        Self {
            crop_origin: (0, 0),
            crop_height: height,
            crop_width: width,
            flip_horizontal: false,
        }
    }

    pub fn is_identity(&self, height: usize, width: usize) -> bool {
        *self == Self::identity(height, width)
    }

    pub fn fits(&self, height: usize, width: usize) -> bool {
        self.crop_height >= 1
            && self.crop_width >= 1
            && self.crop_origin.0 + self.crop_height <= height
            && self.crop_origin.1 + self.crop_width <= width
    }

    /// Backward field that crops, mirrors and stretches the window over an
    /// `height × width` output.
    pub fn field(&self, height: usize, width: usize) -> WarpField {
        let sy = self.crop_height as f64;
        let sx = self.crop_width as f64;
        let (h, w) = (height as f64, width as f64);
        let (r0, c0) = (self.crop_origin.0 as f64, self.crop_origin.1 as f64);
        WarpField::from_fn(height, width, |row, col| {
            let col = if self.flip_horizontal {
                width - 1 - col
            } else {
                col
            };
            let x = c0 + (col as f64 + 0.5) * sx / w - 0.5;
            let y = r0 + (row as f64 + 0.5) * sy / h - 0.5;
            (x, y)
        })
    }
}

fn window(frac: f64, len: usize) -> usize {
    // The epsilon absorbs representation error, e.g. 0.9 · 100 = 90.000…01.
    ((frac * len as f64 - 1e-9).ceil() as usize).clamp(1, len)
}

/// Draws the crop origin (row, then column) and then the flip decision.
pub fn sample_crop_flip(
    rng: &mut SampleStream,
    cfg: &AugmentConfig,
    height: usize,
    width: usize,
) -> CropFlipParams {
    let crop_height = window(cfg.crop_frac, height);
    let crop_width = window(cfg.crop_frac, width);
    let row = rng.uniform_inclusive((height - crop_height) as u64) as usize;
    let col = rng.uniform_inclusive((width - crop_width) as u64) as usize;
    CropFlipParams {
        crop_origin: (row, col),
        crop_height,
        crop_width,
        flip_horizontal: rng.bernoulli(cfg.flip_prob),
    }
}
