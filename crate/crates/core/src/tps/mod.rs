//! Thin-plate-spline warps: control grids, closed-form fitting, dense
//! backward fields and the crop-and-flip companion transform.
//!
//! Coordinates are normalized to `[0, 1]²` with `x` along columns and `y`
//! along rows. Pixel `(row, col)` has its center at
//! `((col + 0.5) / W, (row + 0.5) / H)`.

mod crop_flip;
mod field;
mod grid;
mod model;

pub use crop_flip::{sample_crop_flip, CropFlipParams};
pub use field::{apply_warp, apply_warp_with, rasterize, WarpField};
pub use grid::{sample_warp, ControlGrid};
pub use model::{fit_points, fit_tps, tps_kernel, TpsModel};

use serde::{Deserialize, Serialize};

/// A point in normalized image coordinates, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[inline]
pub(crate) fn pixel_center(row: usize, col: usize, height: usize, width: usize) -> Point {
    Point::new(
        (col as f64 + 0.5) / width as f64,
        (row as f64 + 0.5) / height as f64,
    )
}
