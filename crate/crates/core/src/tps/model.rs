//! Closed-form regularized thin-plate spline.
//!
//! With kernel `U(r) = r² log r` (`U(0) = 0`), centers `c_k` and targets
//! `t_k`, the weights `w` and affine part `a` solve
//!
//! ```text
//! [ K + λI  P ] [w]   [t]
//! [ Pᵀ      0 ] [a] = [0]      K_ij = U(|c_i − c_j|),  P_k = [1, x_k, y_k]
//! ```
//!
//! once per output axis. The bottom block rows are the side conditions
//! `Σ w_k = 0`, `Σ w_k c_k = 0` that keep the bending energy finite.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ControlGrid, Point};
use crate::error::{Error, Result};

#[inline]
pub fn tps_kernel(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpsModel {
    /// Row `d` maps `[1, x, y]` to output axis `d` (0 = x, 1 = y).
    affine: [[f64; 3]; 2],
    /// One `[w_x, w_y]` pair per center.
    rbf_weights: Vec<[f64; 2]>,
    centers: Vec<Point>,
    /// Values the spline was fitted to at each center.
    targets: Vec<Point>,
    lambda: f64,
}

pub fn fit_tps(grid: &ControlGrid, lambda: f64) -> Result<TpsModel> {
    fit_points(grid.sources(), grid.targets(), lambda)
}

/// Fits the spline mapping `sources[k]` towards `targets[k]`.
pub fn fit_points(sources: &[Point], targets: &[Point], lambda: f64) -> Result<TpsModel> {
    if sources.len() != targets.len() {
        return Err(Error::mismatch(
            format!("{} targets", sources.len()),
            format!("{} targets", targets.len()),
        ));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    check_geometry(sources)?;

    let k = sources.len();
    let n = k + 3;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = if i == j {
                lambda
            } else {
                tps_kernel(sources[i].distance(sources[j]))
            };
        }
        let p = [1.0, sources[i].x, sources[i].y];
        for (c, &v) in p.iter().enumerate() {
            a[(i, k + c)] = v;
            a[(k + c, i)] = v;
        }
    }

    // Solving for displacements keeps the identity warp exact: a zero
    // right-hand side yields exactly zero coefficients.
    let mut rhs = DMatrix::<f64>::zeros(n, 2);
    for (i, (s, t)) in sources.iter().zip(targets).enumerate() {
        rhs[(i, 0)] = t.x - s.x;
        rhs[(i, 1)] = t.y - s.y;
    }

    let lu = a.clone().lu();
    let sol = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    // Reject numerically rank-deficient systems by their residual.
    let resid = (&a * &sol - &rhs).amax();
    let scale = rhs.amax().max(1.0);
    if resid > 1e-9 * scale {
        return Err(Error::SingularSystem);
    }

    let rbf_weights = (0..k).map(|i| [sol[(i, 0)], sol[(i, 1)]]).collect();
    let affine = [
        [sol[(k, 0)], 1.0 + sol[(k + 1, 0)], sol[(k + 2, 0)]],
        [sol[(k, 1)], sol[(k + 1, 1)], 1.0 + sol[(k + 2, 1)]],
    ];
    Ok(TpsModel {
        affine,
        rbf_weights,
        centers: sources.to_vec(),
        targets: targets.to_vec(),
        lambda,
    })
}

fn check_geometry(points: &[Point]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "need at least 3 control points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.x.is_finite() && p.y.is_finite()))
    {
        return Err(Error::DegenerateGeometry(format!("non-finite point {p:?}")));
    }
    let extent = points
        .iter()
        .flat_map(|p| points.iter().map(move |q| p.distance(*q)))
        .fold(0.0, f64::max);
    let tol = 1e-12 * extent.max(1.0);
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            if p.distance(*q) <= tol {
                return Err(Error::DegenerateGeometry(format!("duplicate point {p:?}")));
            }
        }
    }
    // Collinear iff every point lies on the line through p0 and the point
    // farthest from it.
    let p0 = points[0];
    let far = points
        .iter()
        .copied()
        .max_by(|a, b| p0.distance(*a).total_cmp(&p0.distance(*b)))
        .unwrap_or(p0);
    let (ux, uy) = (far.x - p0.x, far.y - p0.y);
    let len = ux.hypot(uy);
    let spread = points
        .iter()
        .map(|p| ((p.x - p0.x) * uy - (p.y - p0.y) * ux).abs() / len)
        .fold(0.0, f64::max);
    if spread <= 1e-9 * extent {
        return Err(Error::DegenerateGeometry(
            "control points are collinear".into(),
        ));
    }
    Ok(())
}

impl TpsModel {
    pub fn identity_on(centers: &[Point]) -> Result<Self> {
        fit_points(centers, centers, 0.0)
    }

    pub fn affine(&self) -> &[[f64; 3]; 2] {
        &self.affine
    }

    pub fn rbf_weights(&self) -> &[[f64; 2]] {
        &self.rbf_weights
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn targets(&self) -> &[Point] {
        &self.targets
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn evaluate(&self, p: Point) -> Point {
        let [ax, ay] = &self.affine;
        let mut x = ax[0] + ax[1] * p.x + ax[2] * p.y;
        let mut y = ay[0] + ay[1] * p.x + ay[2] * p.y;
        for (c, w) in self.centers.iter().zip(&self.rbf_weights) {
            let u = tps_kernel(p.distance(*c));
            x += w[0] * u;
            y += w[1] * u;
        }
        Point::new(x, y)
    }

    /// The spline fitted in the opposite direction, targets → centers, with
    /// the same smoothness weight.
    pub fn inverse(&self) -> Result<TpsModel> {
        fit_points(&self.targets, &self.centers, self.lambda)
    }

    /// `Σ_k |t_k − f(c_k)|²`.
    pub fn data_misfit(&self) -> f64 {
        self.centers
            .iter()
            .zip(&self.targets)
            .map(|(c, t)| {
                let f = self.evaluate(*c);
                (t.x - f.x).powi(2) + (t.y - f.y).powi(2)
            })
            .sum()
    }

    /// Quadratic bending term `wᵀ K w`, summed over both output axes.
    pub fn bending_energy(&self) -> f64 {
        let k = self.centers.len();
        let mut total = 0.0;
        for axis in 0..2 {
            let w = DVector::from_iterator(k, self.rbf_weights.iter().map(|w| w[axis]));
            let kmat = DMatrix::from_fn(k, k, |i, j| {
                tps_kernel(self.centers[i].distance(self.centers[j]))
            });
            total += w.dot(&(kmat * &w));
        }
        total
    }

    /// Largest violation of `Σ w = 0` and `Σ w c = 0` over both axes.
    pub fn side_condition_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for axis in 0..2 {
            let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
            for (w, c) in self.rbf_weights.iter().zip(&self.centers) {
                s += w[axis];
                sx += w[axis] * c.x;
                sy += w[axis] * c.y;
            }
            worst = worst.max(s.abs()).max(sx.abs()).max(sy.abs());
        }
        worst
    }
}
