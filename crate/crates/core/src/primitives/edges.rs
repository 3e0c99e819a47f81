//! Canny-style binary edge extraction.
//!
//! Pipeline: luma conversion, separable Gaussian smoothing, Sobel gradients,
//! non-maximum suppression along the quantized gradient direction, then
//! hysteresis. Thresholds are fractions of the largest gradient magnitude,
//! so scaling the input by a constant does not change the result.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::primitive::PrimitiveTensor;

/// Rec. 601 luma weights for R, G, B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdgeParams {
    pub gaussian_sigma: f64,
    pub low_threshold: f64,
    pub high_threshold: f64,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self {
            gaussian_sigma: 1.0,
            low_threshold: 0.1,
            high_threshold: 0.2,
        }
    }
}

impl EdgeParams {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 <= self.low_threshold
            && self.low_threshold <= self.high_threshold
            && self.high_threshold <= 1.0
            && self.gaussian_sigma >= 0.0
            && self.gaussian_sigma.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "edge params need sigma >= 0 and 0 <= low <= high <= 1, got {self:?}"
            )))
        }
    }
}

struct Plane {
    h: usize,
    w: usize,
    v: Vec<f64>,
}

impl Plane {
    fn zeros(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            v: vec![0.0; h * w],
        }
    }

    #[inline]
    fn at(&self, r: isize, c: isize) -> f64 {
        let r = r.clamp(0, self.h as isize - 1) as usize;
        let c = c.clamp(0, self.w as isize - 1) as usize;
        self.v[r * self.w + c]
    }
}

fn luma(img: &ImageTensor) -> Result<Plane> {
    let (h, w) = (img.height(), img.width());
    let v = match img.channels() {
        1 => img.data().iter().map(|&s| s as f64).collect(),
        3 => img
            .data()
            .chunks_exact(3)
            .map(|p| {
                LUMA_WEIGHTS[0] * p[0] as f64
                    + LUMA_WEIGHTS[1] * p[1] as f64
                    + LUMA_WEIGHTS[2] * p[2] as f64
            })
            .collect(),
        c => return Err(Error::UnsupportedChannels(c)),
    };
    Ok(Plane { h, w, v })
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

fn blur(p: &Plane, sigma: f64) -> Plane {
    if sigma == 0.0 {
        return Plane {
            h: p.h,
            w: p.w,
            v: p.v.clone(),
        };
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let mut tmp = Plane::zeros(p.h, p.w);
    for row in 0..p.h {
        for col in 0..p.w {
            tmp.v[row * p.w + col] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * p.at(row as isize, col as isize + i as isize - r))
                .sum();
        }
    }
    let mut out = Plane::zeros(p.h, p.w);
    for row in 0..p.h {
        for col in 0..p.w {
            out.v[row * p.w + col] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp.at(row as isize + i as isize - r, col as isize))
                .sum();
        }
    }
    out
}

pub fn extract_edges(img: &ImageTensor, params: &EdgeParams) -> Result<PrimitiveTensor> {
    params.validate()?;
    let smooth = blur(&luma(img)?, params.gaussian_sigma);
    let (h, w) = (smooth.h, smooth.w);

    let mut mag = Plane::zeros(h, w);
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    for row in 0..h {
        for col in 0..w {
            let (r, c) = (row as isize, col as isize);
            let s = |dr: isize, dc: isize| smooth.at(r + dr, c + dc);
            let x = (s(-1, 1) + 2.0 * s(0, 1) + s(1, 1)) - (s(-1, -1) + 2.0 * s(0, -1) + s(1, -1));
            let y = (s(1, -1) + 2.0 * s(1, 0) + s(1, 1)) - (s(-1, -1) + 2.0 * s(-1, 0) + s(-1, 1));
            let i = row * w + col;
            gx[i] = x;
            gy[i] = y;
            mag.v[i] = x.hypot(y);
        }
    }
    let max = mag.v.iter().copied().fold(0.0, f64::max);
    let mut edges = ImageTensor::filled(h, w, 1, 0.0);
    if max <= 0.0 {
        return PrimitiveTensor::edge(edges);
    }

    // Non-maximum suppression. Ties along the gradient keep the pixel on the
    // negative side so a symmetric ridge yields a one-pixel line.
    let get = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
            0.0
        } else {
            mag.v[r as usize * w + c as usize]
        }
    };
    let mut thin = vec![0.0; h * w];
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let m = mag.v[i];
            if m == 0.0 {
                continue;
            }
            let angle = gy[i].atan2(gx[i]).to_degrees().rem_euclid(180.0);
            let (dr, dc) = if !(22.5..157.5).contains(&angle) {
                (0, 1)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (1, 0)
            } else {
                (1, -1)
            };
            let (r, c) = (row as isize, col as isize);
            let before = get(r - dr, c - dc);
            let after = get(r + dr, c + dc);
            if m > before && m >= after {
                thin[i] = m;
            }
        }
    }

    let high = params.high_threshold * max;
    let low = params.low_threshold * max;
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m > high {
            edges.set(i / w, i % w, 0, 1.0);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (row, col) = ((i / w) as isize, (i % w) as isize);
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (r, c) = (row + dr, col + dc);
                if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
                    continue;
                }
                let j = r as usize * w + c as usize;
                if thin[j] > low && edges.get(r as usize, c as usize, 0) == 0.0 {
                    edges.set(r as usize, c as usize, 0, 1.0);
                    queue.push_back(j);
                }
            }
        }
    }
    PrimitiveTensor::edge(edges)
}
