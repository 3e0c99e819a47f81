use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Point;
use crate::config::AugmentConfig;
use crate::error::{Error, Result};
use crate::rng::SampleStream;

/// Source control points and their displaced targets, in normalized
/// coordinates, for an image of the recorded size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    sources: Vec<Point>,
    targets: Vec<Point>,
    image_height: usize,
    image_width: usize,
}

impl ControlGrid {
    pub fn new(
        sources: Vec<Point>,
        targets: Vec<Point>,
        image_height: usize,
        image_width: usize,
    ) -> Result<Self> {
        if sources.len() != targets.len() {
            return Err(Error::mismatch(sources.len(), targets.len()));
        }
        Ok(Self {
            sources,
            targets,
            image_height,
            image_width,
        })
    }

    /// `n × n` points spanning `[0, 1]²`, row-major, with targets = sources.
    pub fn equispaced(n: usize, image_height: usize, image_width: usize) -> Self {
        let step = 1.0 / (n.max(2) - 1) as f64;
        let sources: Vec<Point> = (0..n)
            .flat_map(|i| (0..n).map(move |j| Point::new(j as f64 * step, i as f64 * step)))
            .collect();
        Self {
            targets: sources.clone(),
            sources,
            image_height,
            image_width,
        }
    }

    pub fn sources(&self) -> &[Point] {
        &self.sources
    }

    pub fn targets(&self) -> &[Point] {
        &self.targets
    }

    pub fn image_height(&self) -> usize {
        self.image_height
    }

    pub fn image_width(&self) -> usize {
        self.image_width
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.sources == self.targets
    }

    /// Per-control-point displacement `(dx, dy)` in pixels.
    pub fn pixel_displacements(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (w, h) = (self.image_width as f64, self.image_height as f64);
        self.sources
            .iter()
            .zip(&self.targets)
            .map(move |(s, t)| ((t.x - s.x) * w, (t.y - s.y) * h))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let grid: Self = serde_json::from_str(text)?;
        if grid.sources.len() != grid.targets.len() {
            return Err(Error::Format("sources and targets differ in length".into()));
        }
        Ok(grid)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Draws one random control grid.
///
/// Each control point moves by independent uniform shifts in
/// `[-s, s]` pixels per axis, `s = max_shift_frac · min(height, width)`.
/// Draw order is row-major over points, `dx` before `dy`.
pub fn sample_warp(
    rng: &mut SampleStream,
    cfg: &AugmentConfig,
    height: usize,
    width: usize,
) -> ControlGrid {
    let mut grid = ControlGrid::equispaced(cfg.grid_n, height, width);
    let cap = cfg.max_shift_frac * height.min(width) as f64;
    if cap == 0.0 {
        return grid;
    }
    let (w, h) = (width as f64, height as f64);
    for t in grid.targets.iter_mut() {
        let dx = rng.symmetric(cap);
        let dy = rng.symmetric(cap);
        t.x += dx / w;
        t.y += dy / h;
    }
    grid
}
