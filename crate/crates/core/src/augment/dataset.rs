//! Persisted augmented datasets.
//!
//! Layout of an output directory:
//!
//! ```text
//! manifest.json
//! palette.json                 (segmentation primitives only)
//! samples/000000_image.png     index 0 is always the unaugmented pair
//! samples/000000_edge.png
//! samples/000000_seg.png
//! samples/000000.tpsw          (optional dense fields)
//! ...
//! ```
//!
//! Sample `i > 0` is drawn from `derive_stream(seed, i)`, so any sample can be
//! regenerated from the manifest alone.

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::strategy::{apply_draw, AugmentDraw, StrategyRegistry, DEFAULT_STRATEGY};
use crate::config::AugmentConfig;
use crate::error::{Error, Result};
use crate::image::load_image;
use crate::primitive::{ImagePair, PrimitiveKind};
use crate::primitives::io::encode_files;
use crate::primitives::PrimitiveFiles;
use crate::rng::{derive_stream, SeedSpec};
use crate::segmentation::Palette;
use crate::tps::{fit_tps, rasterize};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Stream id used for `/fresh` draws, distinct from dataset streams.
pub const FRESH_STREAM_ID: u64 = 0x0066_7265_7368;

/// Where the source pair came from, as given by the caller.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourcePair {
    pub image: Option<String>,
    pub edge: Option<String>,
    pub segmentation: Option<String>,
    pub palette: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    #[serde(flatten)]
    pub draw: AugmentDraw,
    /// Edge map, or the label map for segmentation-only primitives.
    pub primitive_path: String,
    /// Label map of a combined primitive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segmentation_path: Option<String>,
    pub image_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub schema_version: u32,
    pub master_seed: u64,
    pub stream_id: u64,
    pub strategy: String,
    pub config: AugmentConfig,
    pub source_pair: SourcePair,
    pub primitive_kind: PrimitiveKind,
    pub label_count: usize,
    pub height: usize,
    pub width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub palette_path: Option<String>,
    pub samples: Vec<SampleRecord>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    root: PathBuf,
}

impl SampleManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: SampleManifest = serde_json::from_str(&text)?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "unsupported manifest schema_version {}",
                m.schema_version
            )));
        }
        m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seed(&self) -> SeedSpec {
        SeedSpec::with_stream(self.master_seed, self.stream_id)
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn files_for(&self, record: &SampleRecord) -> PrimitiveFiles {
        let palette = self.palette_path.as_deref().map(|p| self.resolve(p));
        let main = Some(self.resolve(&record.primitive_path));
        match self.primitive_kind {
            PrimitiveKind::Edge => PrimitiveFiles {
                edge: main,
                ..Default::default()
            },
            PrimitiveKind::Segmentation => PrimitiveFiles {
                segmentation: main,
                palette,
                ..Default::default()
            },
            PrimitiveKind::Combined => PrimitiveFiles {
                edge: main,
                segmentation: record.segmentation_path.as_deref().map(|p| self.resolve(p)),
                palette,
            },
        }
    }

    /// Loads the persisted files of sample `index` without regenerating.
    pub fn load_persisted(&self, index: usize) -> Result<(ImagePair, Option<Palette>)> {
        let record = self.record(index)?;
        let (prim, palette) = self.files_for(record).load()?;
        let img = load_image(self.resolve(&record.image_path))?;
        Ok((ImagePair::new(prim, img)?, palette))
    }

    pub fn record(&self, index: usize) -> Result<&SampleRecord> {
        self.samples.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.samples.len(),
        })
    }
}

/// Knobs for dataset generation beyond the augmentation config.
#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub strategy: String,
    pub palette: Option<Palette>,
    pub source: SourcePair,
    /// Also write each sample's dense backward field as `.tpsw`.
    pub save_fields: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            strategy: DEFAULT_STRATEGY.to_string(),
            palette: None,
            source: SourcePair::default(),
            save_fields: false,
        }
    }
}

pub fn generate_dataset(
    pair: &ImagePair,
    n: usize,
    seed: SeedSpec,
    cfg: &AugmentConfig,
    out_dir: impl AsRef<Path>,
) -> Result<SampleManifest> {
    generate_dataset_with(pair, n, seed, cfg, out_dir, &DatasetOptions::default())
}

pub fn generate_dataset_with(
    pair: &ImagePair,
    n: usize,
    seed: SeedSpec,
    cfg: &AugmentConfig,
    out_dir: impl AsRef<Path>,
    opts: &DatasetOptions,
) -> Result<SampleManifest> {
    let out_dir = out_dir.as_ref();
    if n == 0 {
        return Err(Error::InvalidConfig(
            "dataset needs at least one sample".into(),
        ));
    }
    cfg.validate()?;
    let strategy = StrategyRegistry::with_builtins().get(&opts.strategy)?;
    let kind = pair.primitive().kind();
    if kind != PrimitiveKind::Edge && opts.palette.is_none() {
        return Err(Error::InvalidConfig(
            "segmentation primitives need a palette".into(),
        ));
    }
    let palette = opts.palette.as_ref();

    // Everything downstream works from the 8-bit source so regeneration from
    // the index-0 files is exact.
    let source = ImagePair::new(pair.primitive().clone(), pair.image().quantized())?;
    let (h, w) = (source.height(), source.width());

    let samples_dir = out_dir.join("samples");
    fs::create_dir_all(&samples_dir).map_err(|e| Error::io(&samples_dir, e))?;
    let palette_path = match palette {
        Some(p) => {
            p.save(out_dir.join("palette.json"))?;
            Some("palette.json".to_string())
        }
        None => None,
    };

    let records = (0..n)
        .into_par_iter()
        .map(|index| {
            let (sample, draw) = if index == 0 {
                (source.clone(), AugmentDraw::identity(cfg, h, w))
            } else {
                let mut rng = derive_stream(seed, index as u64);
                let draw = strategy.draw(&mut rng, cfg, h, w);
                (apply_draw(&source, &draw, cfg)?, draw)
            };
            write_sample(
                out_dir,
                index,
                &sample,
                draw,
                palette,
                cfg,
                opts.save_fields,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = SampleManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        master_seed: seed.master_seed,
        stream_id: seed.stream_id,
        strategy: opts.strategy.clone(),
        config: cfg.clone(),
        source_pair: opts.source.clone(),
        primitive_kind: kind,
        label_count: source.primitive().label_count(),
        height: h,
        width: w,
        palette_path,
        samples: records,
        root: out_dir.to_path_buf(),
    };
    let path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn write_sample(
    out_dir: &Path,
    index: usize,
    sample: &ImagePair,
    draw: AugmentDraw,
    palette: Option<&Palette>,
    cfg: &AugmentConfig,
    save_fields: bool,
) -> Result<SampleRecord> {
    let stem = format!("samples/{index:06}");
    let write = |rel: &str, bytes: &[u8]| -> Result<()> {
        let p = out_dir.join(rel);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
    };
    let image_path = format!("{stem}_image.png");
    write(&image_path, &sample.image().to_png_bytes()?)?;

    let [edge, seg] = encode_files(sample.primitive(), palette)?;
    let edge_path = format!("{stem}_edge.png");
    let seg_path = format!("{stem}_seg.png");
    if let Some(bytes) = &edge {
        write(&edge_path, bytes)?;
    }
    if let Some(bytes) = &seg {
        write(&seg_path, bytes)?;
    }
    let (primitive_path, segmentation_path) = match sample.primitive().kind() {
        PrimitiveKind::Edge => (edge_path, None),
        PrimitiveKind::Segmentation => (seg_path, None),
        PrimitiveKind::Combined => (edge_path, Some(seg_path)),
    };

    let field_path = if save_fields {
        let (h, w) = (sample.height(), sample.width());
        let field = match &draw.warp_grid {
            Some(g) if !g.is_identity() => rasterize(&fit_tps(g, cfg.lambda)?, h, w)?,
            _ => crate::tps::WarpField::identity(h, w),
        };
        let rel = format!("{stem}.tpsw");
        write(&rel, &field.to_bytes())?;
        Some(rel)
    } else {
        None
    };

    Ok(SampleRecord {
        index,
        draw,
        primitive_path,
        segmentation_path,
        image_path,
        field_path,
    })
}

/// A manifest with its source pair loaded, ready to regenerate samples.
#[derive(Debug, Clone)]
pub struct Dataset {
    manifest: Option<SampleManifest>,
    source: ImagePair,
    palette: Option<Palette>,
    config: AugmentConfig,
    strategy: String,
}

impl Dataset {
    pub fn open(manifest_path: impl AsRef<Path>) -> Result<Self> {
        Self::from_manifest(SampleManifest::load(manifest_path)?)
    }

    pub fn from_manifest(manifest: SampleManifest) -> Result<Self> {
        let (source, palette) = manifest.load_persisted(0)?;
        Ok(Self {
            config: manifest.config.clone(),
            strategy: manifest.strategy.clone(),
            manifest: Some(manifest),
            source,
            palette,
        })
    }

    /// A dataset made of only the source pair; `/fresh` still works.
    pub fn from_pair(
        pair: ImagePair,
        palette: Option<Palette>,
        config: AugmentConfig,
        strategy: &str,
    ) -> Result<Self> {
        config.validate()?;
        StrategyRegistry::with_builtins().get(strategy)?;
        if pair.primitive().kind() != PrimitiveKind::Edge && palette.is_none() {
            return Err(Error::InvalidConfig(
                "segmentation primitives need a palette".into(),
            ));
        }
        let source = ImagePair::new(pair.primitive().clone(), pair.image().quantized())?;
        Ok(Self {
            manifest: None,
            source,
            palette,
            config,
            strategy: strategy.to_string(),
        })
    }

    pub fn manifest(&self) -> Option<&SampleManifest> {
        self.manifest.as_ref()
    }

    pub fn config(&self) -> &AugmentConfig {
        &self.config
    }

    pub fn palette(&self) -> Option<&Palette> {
        self.palette.as_ref()
    }

    pub fn source(&self) -> &ImagePair {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.manifest.as_ref().map_or(1, |m| m.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Regenerates sample `index` from its recorded parameters, quantized to
    /// the 8-bit values the persisted files hold.
    pub fn get_sample(&self, index: usize) -> Result<ImagePair> {
        if index == 0 {
            return Ok(self.source.clone());
        }
        let manifest = self
            .manifest
            .as_ref()
            .ok_or(Error::IndexOutOfRange { index, len: 1 })?;
        let record = manifest.record(index)?;
        let pair = apply_draw(&self.source, &record.draw, &self.config)?;
        finalize(pair)
    }

    /// A newly drawn pair from the stream keyed by `seed`.
    pub fn fresh(&self, seed: u64) -> Result<(ImagePair, AugmentDraw)> {
        let strategy = StrategyRegistry::with_builtins().get(&self.strategy)?;
        let mut rng = derive_stream(SeedSpec::with_stream(seed, FRESH_STREAM_ID), 0);
        let (h, w) = (self.source.height(), self.source.width());
        let draw = strategy.draw(&mut rng, &self.config, h, w);
        let pair = apply_draw(&self.source, &draw, &self.config)?;
        Ok((finalize(pair)?, draw))
    }

    /// Zip archive (stored, fixed timestamps) with `image.png` plus
    /// `edge.png` and/or `segmentation.png`.
    pub fn encode_pair(&self, pair: &ImagePair) -> Result<Vec<u8>> {
        use zip::write::SimpleFileOptions;

        let [edge, seg] = encode_files(pair.primitive(), self.palette.as_ref())?;
        let mut entries = vec![("image.png", pair.image().to_png_bytes()?)];
        if let Some(b) = edge {
            entries.push(("edge.png", b));
        }
        if let Some(b) = seg {
            entries.push(("segmentation.png", b));
        }
        let opts = SimpleFileOptions::default()
            .compression_method(zip::CompressionMethod::Stored)
            .last_modified_time(zip::DateTime::default())
            .unix_permissions(0o644);
        let mut zw = zip::ZipWriter::new(Cursor::new(Vec::new()));
        for (name, bytes) in entries {
            zw.start_file(name, opts)
                .map_err(|e| Error::Encode(e.to_string()))?;
            zw.write_all(&bytes)
                .map_err(|e| Error::Encode(e.to_string()))?;
        }
        let cursor = zw.finish().map_err(|e| Error::Encode(e.to_string()))?;
        Ok(cursor.into_inner())
    }
}

fn finalize(pair: ImagePair) -> Result<ImagePair> {
    let (prim, img) = pair.into_parts();
    ImagePair::new(prim, img.quantized())
}

/// Regenerates sample `index` of a loaded manifest.
pub fn get_sample(manifest: &SampleManifest, index: usize) -> Result<ImagePair> {
    manifest.record(index)?;
    Dataset::from_manifest(manifest.clone())?.get_sample(index)
}
