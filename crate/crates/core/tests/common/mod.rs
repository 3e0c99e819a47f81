//! Test-only references that share no code path with the library.
#![allow(dead_code, clippy::needless_range_loop)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};

use tpsaug::image::ImageTensor;
use tpsaug::primitive::{ImagePair, PrimitiveTensor};
use tpsaug::primitives::{compose_combined, encode_segmentation};
use tpsaug::segmentation::{Palette, SegmentationMap};
use tpsaug::tps::Point;

/// Symmetric positive definite matrix in lower band storage, factored in
/// place by Cholesky.
pub struct BandedSpd {
    n: usize,
    bw: usize,
    // Row i holds columns i-bw..=i at offsets 0..=bw.
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    fn pos(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.pos(i, j)]
        }
    }

    /// Adds `v` to entry `(i, j)` with `i >= j`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            i >= j && i - j <= self.bw,
            "({i}, {j}) outside band {}",
            self.bw
        );
        let p = self.pos(i, j);
        self.data[p] += v;
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// Zeroes row and column `i` and puts 1 on the diagonal.
    pub fn pin(&mut self, i: usize) {
        for j in i.saturating_sub(self.bw)..i {
            let p = self.pos(i, j);
            self.data[p] = 0.0;
        }
        for r in i + 1..(i + self.bw + 1).min(self.n) {
            let p = self.pos(r, i);
            self.data[p] = 0.0;
        }
        let p = self.pos(i, i);
        self.data[p] = 1.0;
    }

    pub fn factor(mut self) -> CholeskyBand {
        let (n, bw) = (self.n, self.bw);
        let stride = bw + 1;
        for i in 0..n {
            let k0 = i.saturating_sub(bw);
            for j in k0..=i {
                let (ri, rj) = (i * stride + bw - i, j * stride + bw - j);
                let mut s = self.data[ri + j];
                for k in k0..j {
                    s -= self.data[ri + k] * self.data[rj + k];
                }
                if j == i {
                    assert!(s > 0.0, "matrix not positive definite at row {i}");
                    self.data[ri + j] = s.sqrt();
                } else {
                    self.data[ri + j] = s / self.data[rj + j];
                }
            }
        }
        CholeskyBand(self)
    }
}

pub struct CholeskyBand(BandedSpd);

impl CholeskyBand {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = &self.0;
        let (n, bw) = (m.n, m.bw);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= m.data[m.pos(i, k)] * y[k];
            }
            y[i] = s / m.data[m.pos(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= m.data[m.pos(k, i)] * y[k];
            }
            y[i] = s / m.data[m.pos(i, i)];
        }
        y
    }
}

/// Minimizer of the finite-difference bending energy
/// `h² Σ (Dxx f)² + (Dyy f)² + 2 (Dxy f)²` on a square node mesh, plus either
/// hard interpolation constraints (`lambda == 0`) or a weighted data term.
///
/// The continuous smoothing weight is `lambda / (8π)`: the kernel `r² log r`
/// is `8π` times the biharmonic Green's function.
pub struct EnergyOracle {
    n: usize,
    lo: f64,
    h: f64,
    lambda: f64,
    nodes: Vec<usize>,
    // For the constrained solve: couplings H[r][node] of the unpinned energy.
    couplings: Vec<Vec<(usize, f64)>>,
    chol: CholeskyBand,
}

impl EnergyOracle {
    /// Mesh of `n × n` nodes on `[lo, lo + (n-1)h]²`. Every source must sit
    /// on a node.
    pub fn new(sources: &[Point], lambda: f64, n: usize, lo: f64, h: f64) -> Self {
        let idx = |i: usize, j: usize| i * n + j;
        let big = n * n;
        let mut hess = BandedSpd::zeros(big, 2 * n + 2);
        let inv = 1.0 / (h * h);
        let mut stencil = |entries: &[(usize, f64)], weight: f64| {
            for &(a, ca) in entries {
                for &(b, cb) in entries {
                    if a >= b {
                        hess.add(a, b, weight * h * h * ca * cb * inv * inv);
                    }
                }
            }
        };
        for i in 0..n {
            for j in 1..n - 1 {
                stencil(
                    &[
                        (idx(i, j - 1), 1.0),
                        (idx(i, j), -2.0),
                        (idx(i, j + 1), 1.0),
                    ],
                    1.0,
                );
            }
        }
        for i in 1..n - 1 {
            for j in 0..n {
                stencil(
                    &[
                        (idx(i - 1, j), 1.0),
                        (idx(i, j), -2.0),
                        (idx(i + 1, j), 1.0),
                    ],
                    1.0,
                );
            }
        }
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                stencil(
                    &[
                        (idx(i, j), 1.0),
                        (idx(i + 1, j + 1), 1.0),
                        (idx(i, j + 1), -1.0),
                        (idx(i + 1, j), -1.0),
                    ],
                    2.0,
                );
            }
        }

        let nodes: Vec<usize> = sources
            .iter()
            .map(|p| {
                let fj = (p.x - lo) / h;
                let fi = (p.y - lo) / h;
                assert!(
                    (fj - fj.round()).abs() < 1e-9 && (fi - fi.round()).abs() < 1e-9,
                    "source {p:?} is not a mesh node"
                );
                idx(fi.round() as usize, fj.round() as usize)
            })
            .collect();

        let mut couplings = Vec::new();
        if lambda == 0.0 {
            for &c in &nodes {
                let lo_r = c.saturating_sub(hess.bw);
                let hi_r = (c + hess.bw + 1).min(big);
                couplings.push(
                    (lo_r..hi_r)
                        .filter(|&r| !nodes.contains(&r))
                        .map(|r| (r, hess.get(r, c)))
                        .filter(|&(_, v)| v != 0.0)
                        .collect(),
                );
            }
            for &c in &nodes {
                hess.pin(c);
            }
        } else {
            hess.scale(lambda / (8.0 * std::f64::consts::PI));
            for &c in &nodes {
                hess.add(c, c, 1.0);
            }
        }
        Self {
            n,
            lo,
            h,
            lambda,
            nodes,
            couplings,
            chol: hess.factor(),
        }
    }

    /// Mesh values of the minimizer for the given targets, `(fx, fy)`.
    pub fn solve(&self, targets: &[Point]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(targets.len(), self.nodes.len());
        let big = self.n * self.n;
        let mut out = Vec::new();
        for axis in 0..2 {
            let t = |k: usize| {
                if axis == 0 {
                    targets[k].x
                } else {
                    targets[k].y
                }
            };
            let mut rhs = vec![0.0; big];
            if self.lambda == 0.0 {
                for (k, list) in self.couplings.iter().enumerate() {
                    for &(r, v) in list {
                        rhs[r] -= v * t(k);
                    }
                }
                for (k, &c) in self.nodes.iter().enumerate() {
                    rhs[c] = t(k);
                }
            } else {
                for (k, &c) in self.nodes.iter().enumerate() {
                    rhs[c] += t(k);
                }
            }
            out.push(self.chol.solve(&rhs));
        }
        let fy = out.pop().unwrap();
        let fx = out.pop().unwrap();
        (fx, fy)
    }

    /// Bilinear read-out of a mesh function.
    pub fn sample(&self, f: &[f64], p: Point) -> f64 {
        let n = self.n;
        let fx = (p.x - self.lo) / self.h;
        let fy = (p.y - self.lo) / self.h;
        let j0 = (fx.floor() as usize).min(n - 2);
        let i0 = (fy.floor() as usize).min(n - 2);
        let (ax, ay) = (fx - j0 as f64, fy - i0 as f64);
        let at = |i: usize, j: usize| f[i * n + j];
        (1.0 - ax) * (1.0 - ay) * at(i0, j0)
            + ax * (1.0 - ay) * at(i0, j0 + 1)
            + (1.0 - ax) * ay * at(i0 + 1, j0)
            + ax * ay * at(i0 + 1, j0 + 1)
    }

    /// Minimizer evaluated at `points`.
    pub fn warp(&self, targets: &[Point], points: &[Point]) -> Vec<Point> {
        let (fx, fy) = self.solve(targets);
        points
            .iter()
            .map(|&p| Point::new(self.sample(&fx, p), self.sample(&fy, p)))
            .collect()
    }
}

/// Mesh used by the dense-warp oracle: spacing 1/32 on `[-2, 3]²`, so the
/// unit square and the 3×3 control grid sit on nodes with a wide margin for
/// the free boundary.
pub fn standard_oracle(sources: &[Point], lambda: f64) -> EnergyOracle {
    EnergyOracle::new(sources, lambda, 161, -2.0, 1.0 / 32.0)
}

/// Pixel centers of a `side × side` raster in normalized units, row-major.
pub fn raster_points(side: usize) -> Vec<Point> {
    let s = side as f64;
    (0..side)
        .flat_map(|r| {
            (0..side).map(move |c| Point::new((c as f64 + 0.5) / s, (r as f64 + 0.5) / s))
        })
        .collect()
}

pub fn rmse(a: &[Point], b: &[Point]) -> f64 {
    assert_eq!(a.len(), b.len());
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (p.x - q.x).powi(2) + (p.y - q.y).powi(2))
        .sum();
    (sum / (2 * a.len()) as f64).sqrt()
}

/// SSIM from explicit per-window weighted moments (two-pass variance).
pub fn reference_ssim(a: &ImageTensor, b: &ImageTensor) -> f64 {
    const WIN: usize = 11;
    let sigma = 1.5f64;
    let mut g = [0.0f64; WIN];
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - 5.0;
        *v = (-(d * d) / (2.0 * sigma * sigma)).exp();
    }
    let mut weights = [[0.0f64; WIN]; WIN];
    let mut total = 0.0;
    for u in 0..WIN {
        for v in 0..WIN {
            weights[u][v] = g[u] * g[v];
            total += weights[u][v];
        }
    }
    let c1 = (0.01f64 * 1.0).powi(2);
    let c2 = (0.03f64 * 1.0).powi(2);
    let (h, w, ch) = (a.height(), a.width(), a.channels());
    let mut acc = 0.0;
    for c in 0..ch {
        let mut sum = 0.0;
        let mut count = 0usize;
        for r0 in 0..=h - WIN {
            for c0 in 0..=w - WIN {
                let px = |img: &ImageTensor, u: usize, v: usize| img.get(r0 + u, c0 + v, c) as f64;
                let mut mx = 0.0;
                let mut my = 0.0;
                for u in 0..WIN {
                    for v in 0..WIN {
                        let wt = weights[u][v] / total;
                        mx += wt * px(a, u, v);
                        my += wt * px(b, u, v);
                    }
                }
                let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
                for u in 0..WIN {
                    for v in 0..WIN {
                        let wt = weights[u][v] / total;
                        let dx = px(a, u, v) - mx;
                        let dy = px(b, u, v) - my;
                        vx += wt * dx * dx;
                        vy += wt * dy * dy;
                        cov += wt * dx * dy;
                    }
                }
                sum += (2.0 * mx * my + c1) * (2.0 * cov + c2)
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        acc += sum / count as f64;
    }
    acc / ch as f64
}

/// Two-sided one-sample KS statistic against the uniform law on `[lo, hi]`.
pub fn ks_uniform(samples: &mut [f64], lo: f64, hi: f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            let above = (i as f64 + 1.0) / n - cdf;
            let below = cdf - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Small deterministic generator for fixtures (SplitMix64).
pub struct Fixture(u64);

impl Fixture {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn image(&mut self, h: usize, w: usize, ch: usize) -> ImageTensor {
        let data = (0..h * w * ch).map(|_| self.unit() as f32).collect();
        ImageTensor::new(h, w, ch, data).unwrap()
    }
}

pub fn three_label_palette() -> Palette {
    Palette::new(&[[20, 20, 20], [200, 40, 40], [40, 200, 40]])
}

/// Combined (edge + 3-label segmentation) pair with 8-bit exact image samples.
pub fn combined_pair(h: usize, w: usize) -> ImagePair {
    let labels = (0..h * w)
        .map(|i| {
            let (r, c) = (i / w, i % w);
            if (r as f64 - h as f64 / 2.0).powi(2) + (c as f64 - w as f64 / 2.0).powi(2)
                < (h.min(w) as f64 / 3.0).powi(2)
            {
                2
            } else if c < w / 3 {
                1
            } else {
                0
            }
        })
        .collect();
    let seg = SegmentationMap::new(h, w, labels, three_label_palette()).unwrap();
    let edge = PrimitiveTensor::edge(ImageTensor::from_fn(h, w, 1, |r, c, _| {
        (r % 9 == 4 || c % 11 == 3) as u8 as f32
    }))
    .unwrap();
    let prim = compose_combined(&edge, &encode_segmentation(&seg).unwrap()).unwrap();
    let img = ImageTensor::from_fn(h, w, 3, |r, c, ch| {
        ((r * 7 + c * 3 + ch * 50) % 256) as f32 / 255.0
    });
    ImagePair::new(prim, img).unwrap()
}

pub struct HttpResponse {
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

/// `GET path` over a fresh connection, HTTP/1.1 with `Connection: close`.
pub fn http_get(addr: &str, path: &str) -> HttpResponse {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let split = raw
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .expect("no header terminator");
    let head = String::from_utf8_lossy(&raw[..split]).to_string();
    let mut body = raw[split + 4..].to_vec();
    let mut lines = head.lines();
    let status = lines
        .next()
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let mut content_type = None;
    let mut chunked = false;
    for line in lines {
        let (k, v) = line.split_once(':').unwrap();
        let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_string());
        if k == "content-type" {
            content_type = Some(v);
        } else if k == "transfer-encoding" && v.eq_ignore_ascii_case("chunked") {
            chunked = true;
        }
    }
    if chunked {
        body = dechunk(&body);
    }
    HttpResponse {
        status,
        content_type,
        body,
    }
}

fn dechunk(mut data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let eol = data.windows(2).position(|w| w == b"\r\n").unwrap();
        let size_str = String::from_utf8_lossy(&data[..eol]);
        let size = usize::from_str_radix(size_str.split(';').next().unwrap().trim(), 16).unwrap();
        data = &data[eol + 2..];
        if size == 0 {
            return out;
        }
        out.extend_from_slice(&data[..size]);
        data = &data[size + 2..];
    }
}

/// A `serve` subprocess bound to an ephemeral port.
pub struct ServerProcess {
    child: Child,
    pub addr: String,
}

impl ServerProcess {
    pub fn spawn(manifest: &std::path::Path) -> Self {
        let mut child = Command::new(env!("CARGO_BIN_EXE_tpsaug"))
            .args(["serve", "--manifest"])
            .arg(manifest)
            .args(["--bind", "127.0.0.1:0"])
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let addr = line
            .trim()
            .strip_prefix("listening on http://")
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
            .to_string();
        Self { child, addr }
    }
}

impl Drop for ServerProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Every file under `root` as (relative path, bytes), sorted by path.
pub fn read_tree(root: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    fn walk(dir: &std::path::Path, root: &std::path::Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
