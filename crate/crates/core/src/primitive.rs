//! Conditioning representations and training pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Edge,
    Segmentation,
    /// One-hot label channels followed by a single binary edge channel.
    Combined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveTensor {
    kind: PrimitiveKind,
    tensor: ImageTensor,
    label_count: usize,
}

impl PrimitiveTensor {
    pub fn new(kind: PrimitiveKind, tensor: ImageTensor, label_count: usize) -> Result<Self> {
        let prim = Self {
            kind,
            tensor,
            label_count: if kind == PrimitiveKind::Edge {
                0
            } else {
                label_count
            },
        };
        prim.check()?;
        Ok(prim)
    }

    pub fn edge(tensor: ImageTensor) -> Result<Self> {
        Self::new(PrimitiveKind::Edge, tensor, 0)
    }

    pub(crate) fn from_parts_unchecked(
        kind: PrimitiveKind,
        tensor: ImageTensor,
        label_count: usize,
    ) -> Self {
        Self {
            kind,
            tensor,
            label_count,
        }
    }

    pub fn kind(&self) -> PrimitiveKind {
        self.kind
    }

    pub fn tensor(&self) -> &ImageTensor {
        &self.tensor
    }

    pub fn into_tensor(self) -> ImageTensor {
        self.tensor
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn height(&self) -> usize {
        self.tensor.height()
    }

    pub fn width(&self) -> usize {
        self.tensor.width()
    }

    pub fn channels(&self) -> usize {
        self.tensor.channels()
    }

    /// Index of the binary edge channel, if this primitive carries one.
    pub fn edge_channel(&self) -> Option<usize> {
        match self.kind {
            PrimitiveKind::Edge => Some(0),
            PrimitiveKind::Segmentation => None,
            PrimitiveKind::Combined => Some(self.label_count),
        }
    }

    pub fn expected_channels(&self) -> usize {
        match self.kind {
            PrimitiveKind::Edge => 1,
            PrimitiveKind::Segmentation => self.label_count,
            PrimitiveKind::Combined => self.label_count + 1,
        }
    }

    /// Verifies the kind's channel layout and the binary / one-hot invariants
    /// at every pixel.
    pub fn check(&self) -> Result<()> {
        let t = &self.tensor;
        if self.kind != PrimitiveKind::Edge && self.label_count == 0 {
            return Err(Error::InvalidConfig(
                "label_count must be at least 1".into(),
            ));
        }
        if t.channels() != self.expected_channels() {
            return Err(Error::mismatch(
                format!("{} channels for {:?}", self.expected_channels(), self.kind),
                format!("{} channels", t.channels()),
            ));
        }
        let labels = match self.kind {
            PrimitiveKind::Edge => 0,
            _ => self.label_count,
        };
        for (i, px) in t.data().chunks_exact(t.channels()).enumerate() {
            if labels > 0 {
                let mut ones = 0;
                for &v in &px[..labels] {
                    if v == 1.0 {
                        ones += 1;
                    } else if v != 0.0 {
                        return Err(Error::Format(format!(
                            "pixel {i}: label channel {v} not 0/1"
                        )));
                    }
                }
                if ones != 1 {
                    return Err(Error::Format(format!("pixel {i}: {ones} active labels")));
                }
            }
            if let Some(e) = self.edge_channel() {
                if px[e] != 0.0 && px[e] != 1.0 {
                    return Err(Error::Format(format!(
                        "pixel {i}: edge value {} not 0/1",
                        px[e]
                    )));
                }
            }
        }
        Ok(())
    }

    /// The edge channel as a single-channel tensor.
    pub fn edge_tensor(&self) -> Option<ImageTensor> {
        let e = self.edge_channel()?;
        self.tensor.slice_channels(e, e + 1).ok()
    }

    /// The one-hot label channels.
    pub fn label_tensor(&self) -> Option<ImageTensor> {
        match self.kind {
            PrimitiveKind::Edge => None,
            _ => self.tensor.slice_channels(0, self.label_count).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    primitive: PrimitiveTensor,
    image: ImageTensor,
}

impl ImagePair {
    pub fn new(primitive: PrimitiveTensor, image: ImageTensor) -> Result<Self> {
        if primitive.height() != image.height() || primitive.width() != image.width() {
            return Err(Error::mismatch(
                format!("{}x{}", image.height(), image.width()),
                format!("{}x{}", primitive.height(), primitive.width()),
            ));
        }
        Ok(Self { primitive, image })
    }

    pub fn primitive(&self) -> &PrimitiveTensor {
        &self.primitive
    }

    pub fn image(&self) -> &ImageTensor {
        &self.image
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn into_parts(self) -> (PrimitiveTensor, ImageTensor) {
        (self.primitive, self.image)
    }
}
