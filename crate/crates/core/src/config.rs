use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Bilinear,
    Nearest,
}

/// How source coordinates outside the frame are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorderMode {
    #[default]
    Clamp,
    Reflect,
}

/// Parameters of the augmentation distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Control points per axis.
    pub grid_n: usize,
    /// Per-axis shift cap as a fraction of `min(height, width)`.
    pub max_shift_frac: f64,
    /// Smoothness weight added to the kernel diagonal.
    pub lambda: f64,
    pub crop_frac: f64,
    pub flip_prob: f64,
    pub interp_image: Interpolation,
    pub interp_primitive: Interpolation,
    pub border: BorderMode,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            grid_n: 3,
            max_shift_frac: 0.10,
            lambda: 0.01,
            crop_frac: 0.9,
            flip_prob: 0.5,
            interp_image: Interpolation::Bilinear,
            interp_primitive: Interpolation::Nearest,
            border: BorderMode::Clamp,
        }
    }
}

impl AugmentConfig {
    /// A configuration whose every draw is the identity transform.
    pub fn identity() -> Self {
        Self {
            max_shift_frac: 0.0,
            crop_frac: 1.0,
            flip_prob: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        // A zero cap is allowed: it makes every warp the identity.
        if !(0.0..0.5).contains(&self.max_shift_frac) {
            return bad(format!(
                "max_shift_frac must be in [0, 0.5), got {}",
                self.max_shift_frac
            ));
        }
        if self.grid_n < 2 {
            return bad(format!("grid_n must be at least 2, got {}", self.grid_n));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            ));
        }
        if !(self.crop_frac > 0.0 && self.crop_frac <= 1.0) {
            return bad(format!(
                "crop_frac must be in (0, 1], got {}",
                self.crop_frac
            ));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return bad(format!(
                "flip_prob must be in [0, 1], got {}",
                self.flip_prob
            ));
        }
        if self.interp_primitive != Interpolation::Nearest {
            return bad("primitives must be resampled with nearest-neighbour".into());
        }
        Ok(())
    }
}
