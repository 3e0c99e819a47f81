//! Float raster type and PNG boundary.
//!
//! Samples live in `[0, 1]` as `f32` everywhere inside the crate. Conversion
//! to 8-bit happens only when reading or writing files.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

/// Row-major `height x width x channels` raster with samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::mismatch(
                format!("{} samples", height * width * channels),
                format!("{} samples", data.len()),
            ));
        }
        if let Some(bad) = data.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Format(format!("sample {bad} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds a tensor whose samples are already known to be in range.
    pub(crate) fn from_raw(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), height * width * channels);
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Self {
        Self::from_raw(
            height,
            width,
            channels,
            vec![value.clamp(0.0, 1.0); height * width * channels],
        )
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for row in 0..height {
            for col in 0..width {
                for ch in 0..channels {
                    data.push(f(row, col, ch).clamp(0.0, 1.0));
                }
            }
        }
        Self::from_raw(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f32 {
        self.data[self.index(row, col, ch)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, value: f32) {
        let i = self.index(row, col, ch);
        self.data[i] = value.clamp(0.0, 1.0);
    }

    pub fn same_shape(&self, other: &ImageTensor) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.height, self.width, self.channels)
    }

    /// Extracts channels `[start, end)` into a new tensor.
    pub fn slice_channels(&self, start: usize, end: usize) -> Result<ImageTensor> {
        if start >= end || end > self.channels {
            return Err(Error::mismatch(
                format!("channel range within 0..{}", self.channels),
                format!("{start}..{end}"),
            ));
        }
        let n = end - start;
        let mut data = Vec::with_capacity(self.height * self.width * n);
        for px in self.data.chunks_exact(self.channels) {
            data.extend_from_slice(&px[start..end]);
        }
        Ok(Self::from_raw(self.height, self.width, n, data))
    }

    /// Stacks the channels of `self` followed by those of `other`.
    pub fn stack_channels(&self, other: &ImageTensor) -> Result<ImageTensor> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::mismatch(
                format!("{}x{}", self.height, self.width),
                format!("{}x{}", other.height, other.width),
            ));
        }
        let channels = self.channels + other.channels;
        let mut data = Vec::with_capacity(self.height * self.width * channels);
        for (a, b) in self
            .data
            .chunks_exact(self.channels)
            .zip(other.data.chunks_exact(other.channels))
        {
            data.extend_from_slice(a);
            data.extend_from_slice(b);
        }
        Ok(Self::from_raw(self.height, self.width, channels, data))
    }

    /// Rounds every sample to the nearest 8-bit level, exactly as a
    /// save/load round-trip would.
    pub fn quantized(&self) -> ImageTensor {
        let data = self.data.iter().map(|&s| from_u8(to_u8(s))).collect();
        Self::from_raw(self.height, self.width, self.channels, data)
    }

    /// Encodes as an 8-bit grayscale or RGB PNG.
    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let bytes: Vec<u8> = self.data.iter().map(|&s| to_u8(s)).collect();
        let (w, h) = (self.width as u32, self.height as u32);
        let dynamic = match self.channels {
            1 => image::GrayImage::from_raw(w, h, bytes).map(DynamicImage::ImageLuma8),
            3 => image::RgbImage::from_raw(w, h, bytes).map(DynamicImage::ImageRgb8),
            c => return Err(Error::UnsupportedChannels(c)),
        }
        .ok_or_else(|| Error::Encode("buffer size mismatch".into()))?;
        let mut out = Cursor::new(Vec::new());
        dynamic
            .write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Encode(e.to_string()))?;
        Ok(out.into_inner())
    }

    pub fn from_png_bytes(bytes: &[u8], origin: &Path) -> Result<ImageTensor> {
        let decoded =
            image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| {
                Error::Decode {
                    path: origin.to_path_buf(),
                    message: e.to_string(),
                }
            })?;
        Ok(from_dynamic(decoded))
    }
}

#[inline]
pub(crate) fn to_u8(s: f32) -> u8 {
    (s.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[inline]
pub(crate) fn from_u8(v: u8) -> f32 {
    v as f32 / 255.0
}

fn from_dynamic(img: DynamicImage) -> ImageTensor {
    let (w, h) = (img.width() as usize, img.height() as usize);
    // Alpha is dropped; 16-bit inputs keep their precision.
    match img {
        DynamicImage::ImageLuma8(buf) => {
            ImageTensor::from_raw(h, w, 1, buf.into_raw().into_iter().map(from_u8).collect())
        }
        DynamicImage::ImageLuma16(buf) => ImageTensor::from_raw(
            h,
            w,
            1,
            buf.into_raw()
                .into_iter()
                .map(|v| v as f32 / 65535.0)
                .collect(),
        ),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLumaA16(_) => {
            let buf = img.to_luma16();
            ImageTensor::from_raw(
                h,
                w,
                1,
                buf.into_raw()
                    .into_iter()
                    .map(|v| v as f32 / 65535.0)
                    .collect(),
            )
        }
        DynamicImage::ImageRgb8(buf) => {
            ImageTensor::from_raw(h, w, 3, buf.into_raw().into_iter().map(from_u8).collect())
        }
        DynamicImage::ImageRgba8(_) => {
            let buf = img.to_rgb8();
            ImageTensor::from_raw(h, w, 3, buf.into_raw().into_iter().map(from_u8).collect())
        }
        other => {
            let buf = other.to_rgb16();
            ImageTensor::from_raw(
                h,
                w,
                3,
                buf.into_raw()
                    .into_iter()
                    .map(|v| v as f32 / 65535.0)
                    .collect(),
            )
        }
    }
}

/// Reads a PNG into `[0, 1]` samples. Grayscale stays single-channel, color
/// becomes three channels.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ImageTensor::from_png_bytes(&bytes, path)
}

pub fn save_image(img: &ImageTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = img.to_png_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
