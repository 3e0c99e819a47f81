//! Draws from the augmentation distribution, persisted datasets, and the
//! sample-serving HTTP service.

mod dataset;
pub mod service;
mod strategy;

pub use dataset::{
    generate_dataset, generate_dataset_with, get_sample, Dataset, DatasetOptions, SampleManifest,
    SampleRecord, SourcePair, FRESH_STREAM_ID, MANIFEST_SCHEMA_VERSION,
};
pub use strategy::{
    apply_draw, augment_pair, augment_pair_with, AugmentDraw, AugmentStrategy, CropFlipOnly,
    CropFlipThenTps, IdentityAugment, StrategyRegistry, TpsOnly, DEFAULT_STRATEGY,
};
