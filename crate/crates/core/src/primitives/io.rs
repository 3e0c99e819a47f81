//! Primitive files: edges as 1-bit grayscale PNG, segmentation as indexed
//! PNG plus palette JSON, combined as both.

use std::fs;
use std::path::{Path, PathBuf};

use super::{compose_combined, decode_segmentation, encode_segmentation};
use crate::error::{Error, Result};
use crate::image::{load_image, ImageTensor};
use crate::primitive::{PrimitiveKind, PrimitiveTensor};
use crate::segmentation::{Palette, SegmentationMap};

pub fn edge_png_bytes(edges: &ImageTensor) -> Result<Vec<u8>> {
    if edges.channels() != 1 {
        return Err(Error::UnsupportedChannels(edges.channels()));
    }
    let (h, w) = (edges.height(), edges.width());
    let stride = w.div_ceil(8);
    let mut packed = vec![0u8; stride * h];
    for row in 0..h {
        for col in 0..w {
            if edges.get(row, col, 0) >= 0.5 {
                packed[row * stride + col / 8] |= 0x80 >> (col % 8);
            }
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::One);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer
            .write_image_data(&packed)
            .map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}

pub fn save_edge_map(edges: &PrimitiveTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let t = edges
        .edge_tensor()
        .ok_or_else(|| Error::InvalidConfig("primitive has no edge channel".into()))?;
    fs::write(path, edge_png_bytes(&t)?).map_err(|e| Error::io(path, e))
}

/// Loads any grayscale PNG as a binary edge map (samples ≥ 0.5 are edges).
pub fn load_edge_map(path: impl AsRef<Path>) -> Result<PrimitiveTensor> {
    let img = load_image(path)?;
    binarize(&img)
}

pub(crate) fn binarize(img: &ImageTensor) -> Result<PrimitiveTensor> {
    if img.channels() != 1 {
        // Color edge drawings are reduced to their brightest channel.
        let tensor = ImageTensor::from_raw(
            img.height(),
            img.width(),
            1,
            img.data()
                .chunks_exact(img.channels())
                .map(|p| {
                    let m = p.iter().copied().fold(0.0f32, f32::max);
                    if m >= 0.5 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
        );
        return PrimitiveTensor::edge(tensor);
    }
    let data = img
        .data()
        .iter()
        .map(|&v| if v >= 0.5 { 1.0 } else { 0.0 })
        .collect();
    PrimitiveTensor::edge(ImageTensor::from_raw(img.height(), img.width(), 1, data))
}

/// Locations of the files that make up one primitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrimitiveFiles {
    pub edge: Option<PathBuf>,
    pub segmentation: Option<PathBuf>,
    pub palette: Option<PathBuf>,
}

impl PrimitiveFiles {
    pub fn kind(&self) -> Result<PrimitiveKind> {
        match (&self.edge, &self.segmentation) {
            (Some(_), None) => Ok(PrimitiveKind::Edge),
            (None, Some(_)) => Ok(PrimitiveKind::Segmentation),
            (Some(_), Some(_)) => Ok(PrimitiveKind::Combined),
            (None, None) => Err(Error::InvalidConfig(
                "a primitive needs an edge map, a segmentation map, or both".into(),
            )),
        }
    }

    /// Loads and encodes the primitive; returns the palette when one applies.
    pub fn load(&self) -> Result<(PrimitiveTensor, Option<Palette>)> {
        let kind = self.kind()?;
        let seg = match &self.segmentation {
            Some(p) => {
                let palette = self
                    .palette
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("segmentation needs a palette".into()))?;
                Some(SegmentationMap::load(p, palette)?)
            }
            None => None,
        };
        let edge = self.edge.as_ref().map(load_edge_map).transpose()?;
        let palette = seg.as_ref().map(|s| s.palette().clone());
        let prim = match kind {
            PrimitiveKind::Edge => edge.unwrap(),
            PrimitiveKind::Segmentation => encode_segmentation(&seg.unwrap())?,
            PrimitiveKind::Combined => {
                compose_combined(&edge.unwrap(), &encode_segmentation(&seg.unwrap())?)?
            }
        };
        Ok((prim, palette))
    }

    /// Writes `prim` to the paths this value names. The palette JSON is only
    /// written when a palette path is set.
    pub fn write(&self, prim: &PrimitiveTensor, palette: Option<&Palette>) -> Result<()> {
        let targets = [&self.edge, &self.segmentation];
        for (bytes, path) in encode_files(prim, palette)?.into_iter().zip(targets) {
            if let (Some(bytes), Some(path)) = (bytes, path) {
                fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
            }
        }
        if let (Some(pal), Some(path)) = (palette, &self.palette) {
            pal.save(path)?;
        }
        Ok(())
    }
}

/// PNG encodings `[edge, segmentation]` of a primitive, each present when the
/// primitive has that constituent.
pub(crate) fn encode_files(
    prim: &PrimitiveTensor,
    palette: Option<&Palette>,
) -> Result<[Option<Vec<u8>>; 2]> {
    let edge = prim.edge_tensor().map(|t| edge_png_bytes(&t)).transpose()?;
    let seg = match prim.kind() {
        PrimitiveKind::Edge => None,
        _ => {
            let palette = palette
                .ok_or_else(|| Error::InvalidConfig("segmentation needs a palette".into()))?;
            Some(decode_segmentation(prim, palette)?.to_png_bytes()?)
        }
    };
    Ok([edge, seg])
}
