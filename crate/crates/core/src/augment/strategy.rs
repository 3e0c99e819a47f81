//! Named augmentation strategies.
//!
//! A strategy only decides which random parameters to draw. Applying a draw
//! is shared: the identical geometric transform hits both members of a pair,
//! the primitive with nearest-neighbour and the image with the configured
//! interpolation, crop/flip before the spline warp.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::{AugmentConfig, Interpolation};
use crate::error::{Error, Result};
use crate::primitive::{ImagePair, PrimitiveTensor};
use crate::rng::SampleStream;
use crate::tps::{
    apply_warp_with, fit_tps, rasterize, sample_crop_flip, sample_warp, ControlGrid,
    CropFlipParams, WarpField,
};

pub const DEFAULT_STRATEGY: &str = "crop-flip+tps";

/// The random parameters of one augmentation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AugmentDraw {
    pub crop_flip: Option<CropFlipParams>,
    pub warp_grid: Option<ControlGrid>,
}

impl AugmentDraw {
    pub fn identity(cfg: &AugmentConfig, height: usize, width: usize) -> Self {
        Self {
            crop_flip: Some(CropFlipParams::identity(height, width)),
            warp_grid: Some(ControlGrid::equispaced(cfg.grid_n, height, width)),
        }
    }
}

pub trait AugmentStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn draw(
        &self,
        rng: &mut SampleStream,
        cfg: &AugmentConfig,
        height: usize,
        width: usize,
    ) -> AugmentDraw;
}

/// Leaves pairs untouched.
pub struct IdentityAugment;

impl AugmentStrategy for IdentityAugment {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn draw(&self, _: &mut SampleStream, _: &AugmentConfig, _: usize, _: usize) -> AugmentDraw {
        AugmentDraw::default()
    }
}

/// Random spline warp only.
pub struct TpsOnly;

impl AugmentStrategy for TpsOnly {
    fn name(&self) -> &'static str {
        "tps"
    }

    fn draw(&self, rng: &mut SampleStream, cfg: &AugmentConfig, h: usize, w: usize) -> AugmentDraw {
        AugmentDraw {
            crop_flip: None,
            warp_grid: Some(sample_warp(rng, cfg, h, w)),
        }
    }
}

/// The crop-and-flip baseline.
pub struct CropFlipOnly;

impl AugmentStrategy for CropFlipOnly {
    fn name(&self) -> &'static str {
        "crop-flip"
    }

    fn draw(&self, rng: &mut SampleStream, cfg: &AugmentConfig, h: usize, w: usize) -> AugmentDraw {
        AugmentDraw {
            crop_flip: Some(sample_crop_flip(rng, cfg, h, w)),
            warp_grid: None,
        }
    }
}

/// Crop/flip followed by a spline warp. Draws crop/flip parameters first.
pub struct CropFlipThenTps;

impl AugmentStrategy for CropFlipThenTps {
    fn name(&self) -> &'static str {
        "crop-flip+tps"
    }

    fn draw(&self, rng: &mut SampleStream, cfg: &AugmentConfig, h: usize, w: usize) -> AugmentDraw {
        let crop_flip = sample_crop_flip(rng, cfg, h, w);
        let warp_grid = sample_warp(rng, cfg, h, w);
        AugmentDraw {
            crop_flip: Some(crop_flip),
            warp_grid: Some(warp_grid),
        }
    }
}

#[derive(Clone)]
pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Arc<dyn AugmentStrategy>>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            strategies: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(IdentityAugment));
        r.register(Arc::new(TpsOnly));
        r.register(Arc::new(CropFlipOnly));
        r.register(Arc::new(CropFlipThenTps));
        r
    }

    pub fn register(&mut self, strategy: Arc<dyn AugmentStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn AugmentStrategy>> {
        self.strategies
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "augmentation",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }
}

fn warp_pair(pair: ImagePair, field: &WarpField, cfg: &AugmentConfig) -> Result<ImagePair> {
    let (prim, img) = pair.into_parts();
    let (kind, labels) = (prim.kind(), prim.label_count());
    let warped_prim = apply_warp_with(field, prim.tensor(), Interpolation::Nearest, cfg.border)?;
    let warped_img = apply_warp_with(field, &img, cfg.interp_image, cfg.border)?;
    // Nearest-neighbour resampling copies whole pixels, so the one-hot and
    // binary invariants carry over.
    let prim = PrimitiveTensor::from_parts_unchecked(kind, warped_prim, labels);
    ImagePair::new(prim, warped_img)
}

/// Applies recorded parameters to a pair. Identity components are skipped,
/// so an all-identity draw returns the input unchanged.
pub fn apply_draw(pair: &ImagePair, draw: &AugmentDraw, cfg: &AugmentConfig) -> Result<ImagePair> {
    let (h, w) = (pair.height(), pair.width());
    let mut out = pair.clone();
    if let Some(cf) = draw.crop_flip.filter(|cf| !cf.is_identity(h, w)) {
        if !cf.fits(h, w) {
            return Err(Error::InvalidConfig(format!(
                "crop window {cf:?} does not fit a {h}x{w} image"
            )));
        }
        out = warp_pair(out, &cf.field(h, w), cfg)?;
    }
    if let Some(grid) = draw.warp_grid.as_ref().filter(|g| !g.is_identity()) {
        let model = fit_tps(grid, cfg.lambda)?;
        out = warp_pair(out, &rasterize(&model, h, w)?, cfg)?;
    }
    Ok(out)
}

/// One draw from the default strategy applied to `pair`.
pub fn augment_pair(
    pair: &ImagePair,
    rng: &mut SampleStream,
    cfg: &AugmentConfig,
) -> Result<ImagePair> {
    augment_pair_with(&CropFlipThenTps, pair, rng, cfg).map(|(p, _)| p)
}

pub fn augment_pair_with(
    strategy: &dyn AugmentStrategy,
    pair: &ImagePair,
    rng: &mut SampleStream,
    cfg: &AugmentConfig,
) -> Result<(ImagePair, AugmentDraw)> {
    cfg.validate()?;
    let draw = strategy.draw(rng, cfg, pair.height(), pair.width());
    let out = apply_draw(pair, &draw, cfg)?;
    Ok((out, draw))
}
