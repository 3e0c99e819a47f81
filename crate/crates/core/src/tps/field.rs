//! Dense backward warp fields and resampling.
//!
//! A field stores, for every output pixel, the source location to pull from
//! in pixel units, where pixel `(row, col)` is centered at `(col, row)`.
//!
//! Binary layout: ASCII magic `TPSW`, `u32` height, `u32` width, then
//! `height·width` `f32` values of `map_x` followed by as many of `map_y`, all
//! little-endian and row-major.

use std::fs;
use std::path::Path;

use super::{pixel_center, TpsModel};
use crate::config::{BorderMode, Interpolation};
use crate::error::{Error, Result};
use crate::image::ImageTensor;

const MAGIC: &[u8; 4] = b"TPSW";

#[derive(Debug, Clone, PartialEq)]
pub struct WarpField {
    height: usize,
    width: usize,
    map_x: Vec<f64>,
    map_y: Vec<f64>,
}

impl WarpField {
    pub fn new(height: usize, width: usize, map_x: Vec<f64>, map_y: Vec<f64>) -> Result<Self> {
        if map_x.len() != height * width || map_y.len() != height * width {
            return Err(Error::mismatch(
                format!("{} entries", height * width),
                format!("{}/{}", map_x.len(), map_y.len()),
            ));
        }
        Ok(Self {
            height,
            width,
            map_x,
            map_y,
        })
    }

    pub fn identity(height: usize, width: usize) -> Self {
        Self::from_fn(height, width, |row, col| (col as f64, row as f64))
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> (f64, f64),
    ) -> Self {
        let mut map_x = Vec::with_capacity(height * width);
        let mut map_y = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                let (x, y) = f(row, col);
                map_x.push(x);
                map_y.push(y);
            }
        }
        Self {
            height,
            width,
            map_x,
            map_y,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn map_x(&self) -> &[f64] {
        &self.map_x
    }

    pub fn map_y(&self) -> &[f64] {
        &self.map_y
    }

    /// Source location `(x, y)` for output pixel `(row, col)`.
    pub fn at(&self, row: usize, col: usize) -> (f64, f64) {
        let i = row * self.width + col;
        (self.map_x[i], self.map_y[i])
    }

    /// Serializes with `f32` precision.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.map_x.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        for v in self.map_x.iter().chain(&self.map_y) {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing TPSW header".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let (height, width) = (word(4) as usize, word(8) as usize);
        let n = height * width;
        if bytes.len() != 12 + 8 * n {
            return Err(Error::Format(format!(
                "TPSW body is {} bytes, expected {}",
                bytes.len() - 12,
                8 * n
            )));
        }
        let floats: Vec<f64> = bytes[12..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let (map_x, map_y) = floats.split_at(n);
        Self::new(height, width, map_x.to_vec(), map_y.to_vec())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Rasterizes `model` as a backward field: each output pixel is mapped
/// through the inverse spline (targets → sources) so resampling pulls from
/// the source image.
pub fn rasterize(model: &TpsModel, height: usize, width: usize) -> Result<WarpField> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidConfig(format!(
            "cannot rasterize a {height}x{width} field"
        )));
    }
    let inverse = model.inverse()?;
    let (w, h) = (width as f64, height as f64);
    Ok(WarpField::from_fn(height, width, |row, col| {
        let src = inverse.evaluate(pixel_center(row, col, height, width));
        (src.x * w - 0.5, src.y * h - 0.5)
    }))
}

pub fn apply_warp(
    field: &WarpField,
    img: &ImageTensor,
    interp: Interpolation,
) -> Result<ImageTensor> {
    apply_warp_with(field, img, interp, BorderMode::Clamp)
}

pub fn apply_warp_with(
    field: &WarpField,
    img: &ImageTensor,
    interp: Interpolation,
    border: BorderMode,
) -> Result<ImageTensor> {
    if field.height != img.height() || field.width != img.width() {
        return Err(Error::mismatch(
            format!("{}x{}", img.height(), img.width()),
            format!("{}x{}", field.height, field.width),
        ));
    }
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let src = img.data();
    let mut out = Vec::with_capacity(src.len());
    for (&x, &y) in field.map_x.iter().zip(&field.map_y) {
        let x = resolve(x, w, border);
        let y = resolve(y, h, border);
        match interp {
            Interpolation::Nearest => {
                let col = (x + 0.5).floor().min((w - 1) as f64) as usize;
                let row = (y + 0.5).floor().min((h - 1) as f64) as usize;
                let base = (row * w + col) * c;
                out.extend_from_slice(&src[base..base + c]);
            }
            Interpolation::Bilinear => {
                let x0 = x.floor() as usize;
                let y0 = y.floor() as usize;
                let fx = x - x0 as f64;
                let fy = y - y0 as f64;
                let x1 = (x0 + 1).min(w - 1);
                let y1 = (y0 + 1).min(h - 1);
                let i00 = (y0 * w + x0) * c;
                let i01 = (y0 * w + x1) * c;
                let i10 = (y1 * w + x0) * c;
                let i11 = (y1 * w + x1) * c;
                for ch in 0..c {
                    let top = src[i00 + ch] as f64 * (1.0 - fx) + src[i01 + ch] as f64 * fx;
                    let bot = src[i10 + ch] as f64 * (1.0 - fx) + src[i11 + ch] as f64 * fx;
                    let v = top * (1.0 - fy) + bot * fy;
                    out.push((v as f32).clamp(0.0, 1.0));
                }
            }
        }
    }
    Ok(ImageTensor::from_raw(h, w, c, out))
}

/// Maps a possibly out-of-frame coordinate into `[0, len - 1]`.
fn resolve(v: f64, len: usize, border: BorderMode) -> f64 {
    let max = (len - 1) as f64;
    if !v.is_finite() || len == 1 {
        return 0.0;
    }
    match border {
        BorderMode::Clamp => v.clamp(0.0, max),
        BorderMode::Reflect => {
            let period = 2.0 * max;
            let m = v.rem_euclid(period);
            if m > max {
                period - m
            } else {
                m
            }
        }
    }
}
