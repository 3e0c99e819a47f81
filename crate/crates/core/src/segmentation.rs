//! Label-grid storage for segmentation primitives.
//!
//! On disk a map is an 8-bit indexed PNG (pixel value = label id, PLTE
//! carries the display colors) plus a sidecar palette JSON:
//! `{"labels": [{"id": 0, "color": [r, g, b], "name": "..."}]}`.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub id: u32,
    pub color: [u8; 3],
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Palette {
    pub labels: Vec<PaletteEntry>,
}

impl Palette {
    pub fn new(colors: &[[u8; 3]]) -> Self {
        Self {
            labels: colors
                .iter()
                .enumerate()
                .map(|(i, &color)| PaletteEntry {
                    id: i as u32,
                    color,
                    name: format!("label{i}"),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn color(&self, id: u32) -> Option<[u8; 3]> {
        self.labels.iter().find(|e| e.id == id).map(|e| e.color)
    }

    /// Ids must be exactly `0..len` (in any order).
    pub fn check_contiguous(&self) -> Result<()> {
        let mut ids: Vec<u32> = self.labels.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        for (expected, &id) in ids.iter().enumerate() {
            if id != expected as u32 {
                return Err(Error::NonContiguousLabels(format!(
                    "palette ids {ids:?} are not 0..{}",
                    ids.len()
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMap {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    palette: Palette,
}

impl SegmentationMap {
    pub fn new(height: usize, width: usize, labels: Vec<u32>, palette: Palette) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::mismatch(
                format!("{} labels", height * width),
                format!("{} labels", labels.len()),
            ));
        }
        let map = Self {
            height,
            width,
            labels,
            palette,
        };
        map.check()?;
        Ok(map)
    }

    pub fn check(&self) -> Result<()> {
        self.palette.check_contiguous()?;
        let n = self.palette.len() as u32;
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= n) {
            return Err(Error::NonContiguousLabels(format!(
                "label {bad} outside palette range 0..{n}"
            )));
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn palette(&self) -> &Palette {
        &self.palette
    }

    pub fn label_count(&self) -> usize {
        self.palette.len()
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        if self.palette.len() > 256 {
            return Err(Error::Encode("indexed PNG holds at most 256 labels".into()));
        }
        let mut plte = vec![0u8; self.palette.len() * 3];
        for entry in &self.palette.labels {
            let i = entry.id as usize * 3;
            plte[i..i + 3].copy_from_slice(&entry.color);
        }
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Indexed);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_palette(plte);
            let mut writer = enc
                .write_header()
                .map_err(|e| Error::Encode(e.to_string()))?;
            let data: Vec<u8> = self.labels.iter().map(|&l| l as u8).collect();
            writer
                .write_image_data(&data)
                .map_err(|e| Error::Encode(e.to_string()))?;
        }
        Ok(out)
    }

    /// Decodes an 8-bit indexed (or 8-bit grayscale) PNG whose sample value is
    /// the label id.
    pub fn from_png_bytes(bytes: &[u8], palette: Palette, origin: &Path) -> Result<Self> {
        let decode_err = |m: String| Error::Decode {
            path: origin.to_path_buf(),
            message: m,
        };
        let mut decoder = png::Decoder::new(Cursor::new(bytes));
        decoder.set_transformations(png::Transformations::IDENTITY);
        let mut reader = decoder.read_info().map_err(|e| decode_err(e.to_string()))?;
        let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| decode_err(e.to_string()))?;
        if info.bit_depth != png::BitDepth::Eight
            || !matches!(
                info.color_type,
                png::ColorType::Indexed | png::ColorType::Grayscale
            )
        {
            return Err(decode_err(format!(
                "expected 8-bit indexed label PNG, got {:?} {:?}",
                info.color_type, info.bit_depth
            )));
        }
        let (w, h) = (info.width as usize, info.height as usize);
        let mut labels = Vec::with_capacity(w * h);
        for row in buf[..info.buffer_size()].chunks_exact(info.line_size) {
            labels.extend(row[..w].iter().map(|&v| v as u32));
        }
        Self::new(h, w, labels, palette)
    }

    pub fn load(png_path: impl AsRef<Path>, palette_path: impl AsRef<Path>) -> Result<Self> {
        let png_path = png_path.as_ref();
        let palette = Palette::load(palette_path)?;
        let bytes = fs::read(png_path).map_err(|e| Error::io(png_path, e))?;
        Self::from_png_bytes(&bytes, palette, png_path)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_png_bytes()?).map_err(|e| Error::io(path, e))
    }
}
