//! Single-pair image augmentation with random thin-plate-spline warps.
//!
//! One `(primitive, image)` pair is turned into an unbounded stream of
//! geometrically consistent training pairs. The crate covers the spline
//! engine, primitive construction (edges, one-hot segmentation, combined),
//! deterministic dataset generation and serving, and fidelity metrics.

pub mod augment;
pub mod config;
pub mod error;
pub mod image;
pub mod metrics;
pub mod primitive;
pub mod primitives;
pub mod rng;
pub mod segmentation;
pub mod tps;

pub use augment::{augment_pair, generate_dataset, get_sample, Dataset, SampleManifest};
pub use config::{AugmentConfig, BorderMode, Interpolation};
pub use error::{Error, Result};
pub use image::{load_image, save_image, ImageTensor};
pub use metrics::{l1_distance, psnr, ssim, MetricReport};
pub use primitive::{ImagePair, PrimitiveKind, PrimitiveTensor};
pub use rng::{derive_stream, SampleStream, SeedSpec};
pub use segmentation::{Palette, PaletteEntry, SegmentationMap};
pub use tps::{
    apply_warp, fit_tps, rasterize, sample_crop_flip, sample_warp, ControlGrid, TpsModel, WarpField,
};
