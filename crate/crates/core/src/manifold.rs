//! Exact geometry kernel for the two constant-curvature models: the flat
//! torus `T^d` (side length `L`, coordinates in `[0, L)`) and the round
//! sphere `S^d` (embedding radius `R`, ambient coordinates in `R^{d+1}`).
//!
//! All distances, centers, volumes, and nets are exact closed forms; no
//! charts or numerical geodesic integration. Operations that rely on unique
//! centers or convex balls refuse radii above `convexity_radius`.

use crate::error::{Error, Result};
use crate::linalg;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};


/// Volume of the Euclidean unit ball in dimension `d`:
/// `pi^(d/2) / Gamma(d/2 + 1)`, evaluated by the exact two-step recursion
/// `omega_d = 2 pi omega_(d-2) / d` so small dimensions carry no
/// gamma-function rounding.
pub fn unit_ball_volume(d: usize) -> f64 {
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = d % 2;
    while k < d {
        k += 2;
        v *= 2.0 * std::f64::consts::PI / k as f64;
    }
    v
}

/// Which constant-curvature model the ambient space is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    #[serde(alias = "flat_torus")]
    Torus,
    #[serde(alias = "round_sphere")]
    Sphere,
}

/// The ambient space: kind, intrinsic dimension, and scale (torus side
/// length `L` or sphere embedding radius `R`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldModel {
    pub kind: ManifoldKind,
    pub dim: usize,
    pub scale: f64,
}

/// An annulus `B_(r_outer)(center) \ B°_(r_inner)(center)` used to restrict
/// net construction.
#[derive(Debug, Clone)]
pub struct AnnulusRegion {
    pub center: Vec<f64>,
    pub r_inner: f64,
    pub r_outer: f64,
}

/// A geodesic ball described by its center and radius.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius < 0.0 {
            return Err(Error::InvalidInput(format!("negative radius {radius}")));
        }
        Ok(BallSpec { center, radius })
    }
}

impl ManifoldModel {
    pub fn torus(dim: usize, side: f64) -> Result<Self> {
        if dim == 0 || side <= 0.0 || !side.is_finite() {
            return Err(Error::InvalidInput(format!(
                "torus requires dim >= 1 and positive side, got dim={dim} side={side}"
            )));
        }
        Ok(ManifoldModel { kind: ManifoldKind::Torus, dim, scale: side })
    }

    pub fn sphere(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || radius <= 0.0 || !radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sphere requires dim >= 1 and positive radius, got dim={dim} radius={radius}"
            )));
        }
        Ok(ManifoldModel { kind: ManifoldKind::Sphere, dim, scale: radius })
    }

    /// Round sphere scaled so that its Riemannian volume is exactly 1.
    pub fn sphere_unit_volume(dim: usize) -> Result<Self> {
        let sigma = (dim as f64 + 1.0) * unit_ball_volume(dim + 1);
        Self::sphere(dim, (1.0 / sigma).powf(1.0 / dim as f64))
    }

    pub fn new(kind: ManifoldKind, dim: usize, scale: f64) -> Result<Self> {
        match kind {
            ManifoldKind::Torus => Self::torus(dim, scale),
            ManifoldKind::Sphere => Self::sphere(dim, scale),
        }
    }

    /// Number of coordinates a point carries: `d` on the torus, `d+1` on the
    /// sphere.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Torus => self.dim,
            ManifoldKind::Sphere => self.dim + 1,
        }
    }

    /// Total Riemannian volume: `L^d` or the surface measure of the
    /// `d`-sphere of radius `R`.
    pub fn volume(&self) -> f64 {
        match self.kind {
            ManifoldKind::Torus => self.scale.powi(self.dim as i32),
            ManifoldKind::Sphere => {
                (self.dim as f64 + 1.0)
                    * unit_ball_volume(self.dim + 1)
                    * self.scale.powi(self.dim as i32)
            }
        }
    }

    /// Scalar curvature: 0 on the torus, `d(d-1)/R^2` on the sphere.
    pub fn scalar_curvature(&self) -> f64 {
        match self.kind {
            ManifoldKind::Torus => 0.0,
            ManifoldKind::Sphere => {
                (self.dim * (self.dim.saturating_sub(1))) as f64 / (self.scale * self.scale)
            }
        }
    }

    /// Conservative radius below which geodesic balls are convex and centers
    /// of generic subsets unique: `L/4` on the torus, `pi R/4` on the sphere.
    pub fn convexity_radius(&self) -> f64 {
        match self.kind {
            ManifoldKind::Torus => self.scale / 4.0,
            ManifoldKind::Sphere => std::f64::consts::PI * self.scale / 4.0,
        }
    }

    /// Checks coordinate count and the model's point invariant.
    pub fn validate_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.ambient_dim() {
            return Err(Error::InvalidInput(format!(
                "point has {} coords, manifold expects {}",
                p.len(),
                self.ambient_dim()
            )));
        }
        match self.kind {
            ManifoldKind::Torus => {
                for &x in p {
                    if !(0.0..self.scale).contains(&x) {
                        return Err(Error::InvalidInput(format!(
                            "torus coordinate {x} outside [0, {})",
                            self.scale
                        )));
                    }
                }
            }
            ManifoldKind::Sphere => {
                let n = linalg::norm(p);
                if (n - self.scale).abs() > 1e-12 * self.scale {
                    return Err(Error::InvalidInput(format!(
                        "sphere point norm {n} != {}",
                        self.scale
                    )));
                }
            }
        }
        Ok(())
    }

    /// Geodesic distance. Assumes both points are valid for the model.
    #[inline]
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Torus => {
                let l = self.scale;
                let half = 0.5 * l;
                let mut s = 0.0;
                for (a, b) in p.iter().zip(q) {
                    let mut t = (a - b).abs();
                    if t > half {
                        t = l - t;
                    }
                    s += t * t;
                }
                s.sqrt()
            }
            ManifoldKind::Sphere => {
                let r = self.scale;
                let c = (linalg::dot(p, q) / (r * r)).clamp(-1.0, 1.0);
                r * c.acos()
            }
        }
    }

    /// Distance with input validation (dimension mismatch reported).
    pub fn distance_checked(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        Ok(self.distance(p, q))
    }

    /// Orthonormal frame of the tangent space at `p`, as vectors in the
    /// point's coordinate space. Torus: the standard basis. Sphere: the
    /// first `d` columns of the Householder reflection taking the unit
    /// normal to the last coordinate axis (deterministic in `p`).
    pub fn tangent_frame(&self, p: &[f64]) -> Vec<Vec<f64>> {
        match self.kind {
            ManifoldKind::Torus => (0..self.dim)
                .map(|i| {
                    let mut e = vec![0.0; self.dim];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            ManifoldKind::Sphere => {
                let a = self.ambient_dim();
                let n: Vec<f64> = p.iter().map(|x| x / self.scale).collect();
                let sign = if n[a - 1] >= 0.0 { 1.0 } else { -1.0 };
                let mut w = n.clone();
                w[a - 1] += sign;
                let ww = linalg::dot(&w, &w);
                (0..self.dim)
                    .map(|i| {
                        let f = -2.0 * w[i] / ww;
                        let mut col: Vec<f64> = w.iter().map(|wj| f * wj).collect();
                        col[i] += 1.0;
                        col
                    })
                    .collect()
            }
        }
    }

    /// Inverse exponential map: the tangent vector at `p` pointing to `q`,
    /// expressed as `d` components in `tangent_frame(p)`. Its norm equals
    /// `distance(p, q)` and `exp_map` of it recovers `q`.
    pub fn log_map(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        match self.kind {
            ManifoldKind::Torus => {
                let l = self.scale;
                let mut v = vec![0.0; self.dim];
                for i in 0..self.dim {
                    let mut t = q[i] - p[i];
                    t -= l * (t / l).round();
                    if t.abs() >= 0.5 * l - 1e-12 * l {
                        return Err(Error::DegenerateGeodesic(format!(
                            "ambiguous wrap in coordinate {i}: |delta| = L/2"
                        )));
                    }
                    v[i] = t;
                }
                Ok(v)
            }
            ManifoldKind::Sphere => {
                let r = self.scale;
                let dist = self.distance(p, q);
                if dist >= std::f64::consts::PI * r * (1.0 - 1e-12) {
                    return Err(Error::DegenerateGeodesic(
                        "antipodal points have no unique geodesic".into(),
                    ));
                }
                if dist == 0.0 {
                    return Ok(vec![0.0; self.dim]);
                }
                // Component of q orthogonal to p, rescaled to the geodesic length.
                let c = linalg::dot(p, q) / (r * r);
                let mut u: Vec<f64> = q.iter().zip(p).map(|(qi, pi)| qi - c * pi).collect();
                let un = linalg::norm(&u);
                if un < 1e-300 {
                    return Ok(vec![0.0; self.dim]);
                }
                for x in &mut u {
                    *x *= dist / un;
                }
                let frame = self.tangent_frame(p);
                Ok(frame.iter().map(|f| linalg::dot(f, &u)).collect())
            }
        }
    }

    /// Exponential map: follow the geodesic from `p` with initial velocity
    /// `v` (components in `tangent_frame(p)`) for unit time.
    pub fn exp_map(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        match self.kind {
            ManifoldKind::Torus => {
                let l = self.scale;
                p.iter().zip(v).map(|(x, dv)| (x + dv).rem_euclid(l)).collect()
            }
            ManifoldKind::Sphere => {
                let r = self.scale;
                let t = linalg::norm(v);
                if t < 1e-300 {
                    return p.to_vec();
                }
                let frame = self.tangent_frame(p);
                let mut w = vec![0.0; self.ambient_dim()];
                for (vi, f) in v.iter().zip(&frame) {
                    for (wj, fj) in w.iter_mut().zip(f) {
                        *wj += vi * fj;
                    }
                }
                let (ct, st) = ((t / r).cos(), (t / r).sin());
                let out: Vec<f64> = p
                    .iter()
                    .zip(&w)
                    .map(|(pi, wi)| pi * ct + wi / t * r * st)
                    .collect();
                // Renormalize to keep the point invariant tight.
                let n = linalg::norm(&out);
                out.into_iter().map(|x| x * r / n).collect()
            }
        }
    }

    /// Lifts torus points to a common Euclidean chart around `pts[0]`
    /// (nearest wrap per coordinate). Sphere points are already Euclidean.
    fn lift(&self, pts: &[&[f64]]) -> Vec<Vec<f64>> {
        match self.kind {
            ManifoldKind::Torus => {
                let l = self.scale;
                let base = pts[0];
                pts.iter()
                    .map(|p| {
                        p.iter()
                            .zip(base)
                            .map(|(x, b)| {
                                let mut t = x - b;
                                t -= l * (t / l).round();
                                b + t
                            })
                            .collect()
                    })
                    .collect()
            }
            ManifoldKind::Sphere => pts.iter().map(|p| p.to_vec()).collect(),
        }
    }

    fn wrap(&self, p: &[f64]) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Torus => p.iter().map(|x| x.rem_euclid(self.scale)).collect(),
            ManifoldKind::Sphere => p.to_vec(),
        }
    }

    /// Circumcenter of a generic set of 1..=d+1 points: the unique
    /// equidistant point minimizing the common distance, and that distance.
    /// Returns `None` for affinely dependent input (torus) or an equatorial
    /// degenerate configuration (sphere).
    pub fn circumcenter(&self, pts: &[&[f64]]) -> Option<(Vec<f64>, f64)> {
        let m = pts.len();
        if m == 0 || m > self.dim + 1 {
            return None;
        }
        if m == 1 {
            return Some((pts[0].to_vec(), 0.0));
        }
        if m == 2 {
            let d = self.distance(pts[0], pts[1]);
            if let ManifoldKind::Sphere = self.kind {
                if d >= std::f64::consts::PI * self.scale * (1.0 - 1e-12) {
                    return None; // antipodal pair: every equator point ties
                }
            }
            return Some((self.pair_midpoint(pts[0], pts[1]), 0.5 * d));
        }
        if m == 3 && self.dim == 2 {
            return match self.kind {
                ManifoldKind::Torus => self.torus2_circumcenter(pts),
                ManifoldKind::Sphere => self.sphere2_circumcenter(pts),
            };
        }
        let lifted = self.lift(pts);
        let a = self.ambient_dim();
        let k = m - 1;
        // Rows of A are y_i - y_0; solve A A^T t = rhs with rhs_i = |row_i|^2 / 2,
        // then the affine-hull circumcenter is y_0 + A^T t.
        let mut rows = Vec::with_capacity(k);
        let mut rhs = vec![0.0; k];
        for i in 1..m {
            let row = linalg::sub(&lifted[i], &lifted[0]);
            rhs[i - 1] = 0.5 * linalg::dot(&row, &row);
            rows.push(row);
        }
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] = linalg::dot(&rows[i], &rows[j]);
            }
        }
        let t = linalg::solve(&gram, &rhs, k)?;
        let mut center = lifted[0].to_vec();
        for i in 0..k {
            for j in 0..a {
                center[j] += t[i] * rows[i][j];
            }
        }
        match self.kind {
            ManifoldKind::Torus => {
                let radius = linalg::norm(&linalg::sub(&center, &lifted[0]));
                // Beyond L/2 the lifted chart no longer realizes geodesic
                // distances, so no center exists in the regime.
                if !radius.is_finite() || radius > 0.5 * self.scale * (1.0 - 1e-12) {
                    return None;
                }
                Some((self.wrap(&center), radius))
            }
            ManifoldKind::Sphere => {
                let cn = linalg::norm(&center);
                if cn <= 1e-9 * self.scale {
                    return None; // equatorial degenerate: both poles equidistant
                }
                let mut on_sphere: Vec<f64> =
                    center.iter().map(|x| x * self.scale / cn).collect();
                let mut radius = self.distance(&on_sphere, pts[0]);
                // Of the two antipodal candidates keep the one with the
                // smaller common distance.
                if radius > std::f64::consts::PI * self.scale / 2.0 {
                    for x in &mut on_sphere {
                        *x = -*x;
                    }
                    radius = self.distance(&on_sphere, pts[0]);
                }
                if !radius.is_finite() {
                    return None;
                }
                Some((on_sphere, radius))
            }
        }
    }

    /// Minimal enclosing geodesic ball: the center minimizing the maximum
    /// distance to `pts`, and that minimax radius. Welzl-style recursion
    /// over support sets; input is processed in lexicographic point order so
    /// ties resolve deterministically.
    pub fn min_enclosing_ball(&self, pts: &[&[f64]]) -> Result<(Vec<f64>, f64)> {
        if pts.is_empty() {
            return Err(Error::InvalidInput("empty point set".into()));
        }
        let conv = self.convexity_radius();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if self.distance(pts[i], pts[j]) >= 2.0 * conv {
                    return Err(Error::OutOfRegime(format!(
                        "point set diameter >= 2 * convexity_radius = {}",
                        2.0 * conv
                    )));
                }
            }
        }
        let mut order: Vec<&[f64]> = pts.to_vec();
        order.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        order.dedup_by(|a, b| a == b);
        let mut support: Vec<&[f64]> = Vec::with_capacity(self.dim + 1);
        let ball = self.welzl(&order, order.len(), &mut support);
        let (center, radius) = match ball {
            Some(b) => b,
            None => self.miniball_by_subsets(&order)?,
        };
        // Degenerate support geometry can in principle derail the recursion;
        // verify and fall back to exhaustive support enumeration if needed.
        let tol = 1e-9 * (1.0 + radius);
        if pts.iter().any(|p| self.distance(&center, p) > radius + tol) {
            return self.miniball_by_subsets(&order);
        }
        Ok((center, radius))
    }

    fn welzl<'a>(
        &self,
        pts: &[&'a [f64]],
        n_active: usize,
        support: &mut Vec<&'a [f64]>,
    ) -> Option<(Vec<f64>, f64)> {
        if n_active == 0 || support.len() == self.dim + 1 {
            return match support.len() {
                0 => None,
                1 => Some((support[0].to_vec(), 0.0)),
                _ => self.circumcenter(support),
            };
        }
        let p = pts[n_active - 1];
        let b = self.welzl(pts, n_active - 1, support);
        if let Some((ref c, r)) = b {
            if self.distance(c, p) <= r * (1.0 + 1e-12) + 1e-15 {
                return b;
            }
        }
        support.push(p);
        let b2 = self.welzl(pts, n_active - 1, support);
        support.pop();
        b2
    }

    fn miniball_by_subsets(&self, pts: &[&[f64]]) -> Result<(Vec<f64>, f64)> {
        let n = pts.len();
        let max_s = (self.dim + 1).min(n);
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut subset = Vec::with_capacity(max_s);
        self.subset_scan(pts, 0, max_s, &mut subset, &mut best);
        // No covering support circumball exists only when the true minimal
        // ball exceeds the convexity regime (winding torus configurations,
        // beyond-hemisphere spreads).
        best.ok_or_else(|| {
            Error::OutOfRegime("minimal enclosing ball exceeds the convexity regime".into())
        })
    }

    fn subset_scan<'a>(
        &self,
        pts: &[&'a [f64]],
        from: usize,
        max_s: usize,
        subset: &mut Vec<&'a [f64]>,
        best: &mut Option<(Vec<f64>, f64)>,
    ) {
        if !subset.is_empty() {
            if let Some((c, r)) = self.circumcenter(subset) {
                let tol = 1e-9 * (1.0 + r);
                if pts.iter().all(|p| self.distance(&c, p) <= r + tol)
                    && best.as_ref().map_or(true, |(_, br)| r < *br)
                {
                    *best = Some((c, r));
                }
            }
        }
        if subset.len() == max_s {
            return;
        }
        for i in from..pts.len() {
            subset.push(pts[i]);
            self.subset_scan(pts, i + 1, max_s, subset, best);
            subset.pop();
        }
    }

    /// Largest radius at which the closed-form ball volume is exact:
    /// `L/2` on the torus (no self-overlap), `pi R` on the sphere.
    pub fn volume_formula_radius(&self) -> f64 {
        match self.kind {
            ManifoldKind::Torus => 0.5 * self.scale,
            ManifoldKind::Sphere => std::f64::consts::PI * self.scale,
        }
    }

    /// Predicate: the minimal enclosing geodesic ball of `pts` has radius
    /// at most `r` (closed-ball convention). Decided by scanning support
    /// subsets and accepting the first covering candidate ball of radius
    /// <= r, which is equivalent to comparing the miniball radius itself.
    /// Requires `r <= convexity_radius` for the torus-chart argument.
    /// Closed-form fast paths cover the two-dimensional models at the
    /// simplex sizes the complex builder generates.
    pub fn miniball_radius_leq(&self, pts: &[&[f64]], r: f64) -> bool {
        let m = pts.len();
        if m == 0 {
            return true;
        }
        if m == 1 {
            return r >= 0.0;
        }
        if m == 2 {
            return self.distance(pts[0], pts[1]) <= 2.0 * r;
        }
        if self.dim == 2 && m <= 4 {
            return match self.kind {
                ManifoldKind::Torus => self.torus2_small_leq(pts, r),
                ManifoldKind::Sphere => self.sphere2_small_leq(pts, r),
            };
        }
        // Max pair: the only pair that can support the miniball.
        let (mut bi, mut bj, mut maxd) = (0, 1, 0.0f64);
        for i in 0..m {
            for j in i + 1..m {
                let d = self.distance(pts[i], pts[j]);
                if d > maxd {
                    maxd = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        if maxd > 2.0 * r {
            return false;
        }
        let mid = self.pair_midpoint(pts[bi], pts[bj]);
        let rad = 0.5 * maxd;
        if self.covers(&mid, rad, pts) {
            return true;
        }
        // Supports of size 2..=d+1 (size 2 re-scanned to catch tied max pairs).
        let max_s = (self.dim + 1).min(m);
        let mut subset: Vec<&[f64]> = Vec::with_capacity(max_s);
        self.scan_radius_leq(pts, r, 0, 2, max_s, &mut subset)
    }

    fn scan_radius_leq<'a>(
        &self,
        pts: &[&'a [f64]],
        r: f64,
        from: usize,
        min_s: usize,
        max_s: usize,
        subset: &mut Vec<&'a [f64]>,
    ) -> bool {
        if subset.len() >= min_s {
            if let Some((c, rad)) = self.circumcenter(subset) {
                if rad <= r && self.covers(&c, rad, pts) {
                    return true;
                }
            }
        }
        if subset.len() == max_s {
            return false;
        }
        for i in from..pts.len() {
            subset.push(pts[i]);
            if self.scan_radius_leq(pts, r, i + 1, min_s, max_s, subset) {
                subset.pop();
                return true;
            }
            subset.pop();
        }
        false
    }

    #[inline]
    fn covers(&self, center: &[f64], radius: f64, pts: &[&[f64]]) -> bool {
        let tol = 1e-10 * (1.0 + radius);
        pts.iter().all(|p| self.distance(center, p) <= radius + tol)
    }

    /// Closed-form circumcenter of a torus triple in the nearest-wrap lift.
    fn torus2_circumcenter(&self, pts: &[&[f64]]) -> Option<(Vec<f64>, f64)> {
        let l = self.scale;
        let mut xs = [0.0f64; 3];
        let mut ys = [0.0f64; 3];
        for (i, p) in pts.iter().enumerate() {
            let mut dx = p[0] - pts[0][0];
            dx -= l * (dx / l).round();
            let mut dy = p[1] - pts[0][1];
            dy -= l * (dy / l).round();
            xs[i] = dx;
            ys[i] = dy;
        }
        let det = 2.0
            * (xs[0] * (ys[1] - ys[2]) + xs[1] * (ys[2] - ys[0]) + xs[2] * (ys[0] - ys[1]));
        let scale2 = xs.iter().chain(ys.iter()).fold(0.0f64, |a, v| a.max(v * v));
        if det.abs() <= 1e-13 * scale2.max(1e-300) {
            return None;
        }
        let n: [f64; 3] =
            std::array::from_fn(|i| xs[i] * xs[i] + ys[i] * ys[i]);
        let ux = (n[0] * (ys[1] - ys[2]) + n[1] * (ys[2] - ys[0]) + n[2] * (ys[0] - ys[1])) / det;
        let uy = (n[0] * (xs[2] - xs[1]) + n[1] * (xs[0] - xs[2]) + n[2] * (xs[1] - xs[0])) / det;
        let radius = (ux * ux + uy * uy).sqrt();
        if !radius.is_finite() || radius > 0.5 * l * (1.0 - 1e-12) {
            return None;
        }
        let center = vec![
            (pts[0][0] + ux).rem_euclid(l),
            (pts[0][1] + uy).rem_euclid(l),
        ];
        Some((center, radius))
    }

    /// Closed-form circumcenter of a sphere triple: the planar circumcenter
    /// of the ambient triangle, radially projected, taking the antipode
    /// with the smaller common distance.
    fn sphere2_circumcenter(&self, pts: &[&[f64]]) -> Option<(Vec<f64>, f64)> {
        let rr = self.scale;
        let (a, b, c) = (pts[0], pts[1], pts[2]);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let uu = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        let vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let uv = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        let det = uu * vv - uv * uv;
        if det.abs() <= 1e-13 * (uu * vv).max(1e-300) {
            return None;
        }
        let s = 0.5 * vv * (uu - uv) / det;
        let t = 0.5 * uu * (vv - uv) / det;
        let cc = [
            a[0] + s * u[0] + t * v[0],
            a[1] + s * u[1] + t * v[1],
            a[2] + s * u[2] + t * v[2],
        ];
        let cn = (cc[0] * cc[0] + cc[1] * cc[1] + cc[2] * cc[2]).sqrt();
        if cn <= 1e-9 * rr {
            return None; // equatorial degenerate
        }
        let mut center = vec![cc[0] * rr / cn, cc[1] * rr / cn, cc[2] * rr / cn];
        let mut radius = self.distance(&center, a);
        if radius > std::f64::consts::PI * rr / 2.0 {
            for x in &mut center {
                *x = -*x;
            }
            radius = self.distance(&center, a);
        }
        if !radius.is_finite() {
            return None;
        }
        Some((center, radius))
    }

    /// Flat 2-torus predicate for 3 or 4 points: nearest-wrap lift around
    /// the first point, then the planar support scan in closed form (max
    /// pair's midpoint ball, else triple circumballs).
    fn torus2_small_leq(&self, pts: &[&[f64]], r: f64) -> bool {
        let l = self.scale;
        let m = pts.len();
        let mut xs = [0.0f64; 4];
        let mut ys = [0.0f64; 4];
        for (i, p) in pts.iter().enumerate() {
            let mut dx = p[0] - pts[0][0];
            dx -= l * (dx / l).round();
            let mut dy = p[1] - pts[0][1];
            dy -= l * (dy / l).round();
            xs[i] = dx;
            ys[i] = dy;
        }
        let d2 = |i: usize, j: usize| -> f64 {
            let (dx, dy) = (xs[i] - xs[j], ys[i] - ys[j]);
            dx * dx + dy * dy
        };
        let r2 = r * r;
        let (mut bi, mut bj, mut maxd2) = (0usize, 1usize, 0.0f64);
        for i in 0..m {
            for j in i + 1..m {
                let v = d2(i, j);
                if v > maxd2 {
                    maxd2 = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        if maxd2 > 4.0 * r2 {
            return false;
        }
        // Max-pair midpoint ball.
        let (mx, my) = (0.5 * (xs[bi] + xs[bj]), 0.5 * (ys[bi] + ys[bj]));
        let rad2 = 0.25 * maxd2;
        let ctol = 1e-10 * (1.0 + rad2);
        if (0..m).all(|i| {
            let (dx, dy) = (xs[i] - mx, ys[i] - my);
            dx * dx + dy * dy <= rad2 + ctol
        }) {
            return true;
        }
        // Triple circumballs (the planar support has at most 3 points).
        let idx: [usize; 4] = [0, 1, 2, 3];
        let triples: &[[usize; 3]] = if m == 3 {
            &[[0, 1, 2]]
        } else {
            &[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
        };
        for t in triples {
            let (a, b, c) = (idx[t[0]], idx[t[1]], idx[t[2]]);
            let det = 2.0
                * (xs[a] * (ys[b] - ys[c]) + xs[b] * (ys[c] - ys[a]) + xs[c] * (ys[a] - ys[b]));
            if det.abs() < 1e-300 {
                continue;
            }
            let (na, nb, nc) = (
                xs[a] * xs[a] + ys[a] * ys[a],
                xs[b] * xs[b] + ys[b] * ys[b],
                xs[c] * xs[c] + ys[c] * ys[c],
            );
            let ux = (na * (ys[b] - ys[c]) + nb * (ys[c] - ys[a]) + nc * (ys[a] - ys[b])) / det;
            let uy = (na * (xs[c] - xs[b]) + nb * (xs[a] - xs[c]) + nc * (xs[b] - xs[a])) / det;
            let (dax, day) = (xs[a] - ux, ys[a] - uy);
            let rad2 = dax * dax + day * day;
            if rad2 > r2 * (1.0 + 2e-10) {
                continue;
            }
            let ctol = 1e-10 * (1.0 + rad2);
            if (0..m).all(|i| {
                let (dx, dy) = (xs[i] - ux, ys[i] - uy);
                dx * dx + dy * dy <= rad2 + ctol
            }) {
                return true;
            }
        }
        false
    }

    /// Round 2-sphere predicate for 3 or 4 points, entirely in chord space
    /// (geodesic distance is monotone in chord length): compare candidate
    /// chord radii against `2R sin(r/2R)`.
    fn sphere2_small_leq(&self, pts: &[&[f64]], r: f64) -> bool {
        let rr = self.scale;
        let m = pts.len();
        let chord_r = 2.0 * rr * (r / (2.0 * rr)).sin();
        let cr2 = chord_r * chord_r;
        let d2 = |p: &[f64], q: &[f64]| -> f64 {
            let (dx, dy, dz) = (p[0] - q[0], p[1] - q[1], p[2] - q[2]);
            dx * dx + dy * dy + dz * dz
        };
        let (mut bi, mut bj, mut maxd2) = (0usize, 1usize, 0.0f64);
        for i in 0..m {
            for j in i + 1..m {
                let v = d2(pts[i], pts[j]);
                if v > maxd2 {
                    maxd2 = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        if maxd2 > 4.0 * cr2 {
            return false;
        }
        // Geodesic midpoint of the max pair, then chord comparisons.
        let mut mid = [
            pts[bi][0] + pts[bj][0],
            pts[bi][1] + pts[bj][1],
            pts[bi][2] + pts[bj][2],
        ];
        let n = (mid[0] * mid[0] + mid[1] * mid[1] + mid[2] * mid[2]).sqrt();
        if n > 1e-300 {
            for x in &mut mid {
                *x *= rr / n;
            }
            let rad2 = d2(&mid, pts[bi]).max(d2(&mid, pts[bj]));
            if rad2 <= cr2 * (1.0 + 2e-10) {
                let ctol = 1e-10 * (1.0 + rad2);
                if (0..m).all(|i| d2(&mid, pts[i]) <= rad2 + ctol) {
                    return true;
                }
            }
        }
        let triples: &[[usize; 3]] = if m == 3 {
            &[[0, 1, 2]]
        } else {
            &[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
        };
        for t in triples {
            let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let uu = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
            let vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            let uv = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            let det = uu * vv - uv * uv;
            if det.abs() < 1e-300 {
                continue;
            }
            // Planar circumcenter of the lifted triple in the (u, v) basis.
            let s = (0.5 * uu * vv - 0.5 * vv * uv) / det;
            let t2 = (0.5 * vv * uu - 0.5 * uu * uv) / det;
            let mut cc = [
                a[0] + s * u[0] + t2 * v[0],
                a[1] + s * u[1] + t2 * v[1],
                a[2] + s * u[2] + t2 * v[2],
            ];
            let cn = (cc[0] * cc[0] + cc[1] * cc[1] + cc[2] * cc[2]).sqrt();
            if cn <= 1e-12 * rr {
                continue; // equatorial: geodesic radius pi R / 2, beyond regime
            }
            for x in &mut cc {
                *x *= rr / cn;
            }
            let rad2 = d2(&cc, a);
            if rad2 > cr2 * (1.0 + 2e-10) {
                continue;
            }
            let ctol = 1e-10 * (1.0 + rad2);
            if (0..m).all(|i| d2(&cc, pts[i]) <= rad2 + ctol) {
                return true;
            }
        }
        false
    }

    /// Geodesic midpoint of two points (valid away from antipodes/ambiguous
    /// wraps; callers stay within the convexity regime).
    pub fn pair_midpoint(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Torus => {
                let l = self.scale;
                p.iter()
                    .zip(q)
                    .map(|(a, b)| {
                        let mut t = b - a;
                        t -= l * (t / l).round();
                        (a + 0.5 * t).rem_euclid(l)
                    })
                    .collect()
            }
            ManifoldKind::Sphere => {
                let s: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + b).collect();
                let n = linalg::norm(&s);
                s.into_iter().map(|x| x * self.scale / n).collect()
            }
        }
    }

    /// Volume of a geodesic ball of radius `r`. Exact closed forms:
    /// `omega_d r^d` on the torus, the sine-integral profile on the sphere.
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        if !(0.0..=self.volume_formula_radius()).contains(&r) {
            return Err(Error::OutOfRegime(format!(
                "ball radius {r} outside [0, {}]",
                self.volume_formula_radius()
            )));
        }
        Ok(self.ball_volume_unchecked(r))
    }

    /// Same closed form as `ball_volume`, valid for any r in the injectivity
    /// range; used internally where the regime was already checked.
    pub fn ball_volume_unchecked(&self, r: f64) -> f64 {
        let d = self.dim;
        match self.kind {
            ManifoldKind::Torus => unit_ball_volume(d) * r.powi(d as i32),
            ManifoldKind::Sphere => {
                let rr = self.scale;
                d as f64
                    * unit_ball_volume(d)
                    * rr.powi(d as i32)
                    * sin_power_integral(d - 1, r / rr)
            }
        }
    }

    /// Second-order small-r expansion `omega_d r^d (1 - s/(6(d+2)) r^2)`;
    /// diagnostic companion to the exact `ball_volume`.
    pub fn ball_volume_expansion(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        unit_ball_volume(self.dim)
            * r.powi(self.dim as i32)
            * (1.0 - self.scalar_curvature() / (6.0 * (d + 2.0)) * r * r)
    }

    /// Deterministic delta-net: every point of the manifold (or of the given
    /// annulus region) lies within `delta` of some returned point.
    pub fn build_net(&self, delta: f64, region: Option<&AnnulusRegion>) -> Vec<Vec<f64>> {
        assert!(delta > 0.0, "net spacing must be positive");
        match region {
            None => self.full_net(delta),
            Some(reg) => self.annulus_net(delta, reg),
        }
    }

    fn full_net(&self, delta: f64) -> Vec<Vec<f64>> {
        match self.kind {
            ManifoldKind::Torus => {
                let l = self.scale;
                let spacing = delta / (self.dim as f64).sqrt();
                let nc = (l / spacing).ceil().max(1.0) as usize;
                let step = l / nc as f64;
                let mut out = Vec::with_capacity(nc.pow(self.dim as u32));
                let mut idx = vec![0usize; self.dim];
                loop {
                    out.push(idx.iter().map(|&i| i as f64 * step).collect());
                    let mut c = 0;
                    loop {
                        idx[c] += 1;
                        if idx[c] < nc {
                            break;
                        }
                        idx[c] = 0;
                        c += 1;
                        if c == self.dim {
                            return out;
                        }
                    }
                }
            }
            ManifoldKind::Sphere => self.sphere_net(delta),
        }
    }

    fn sphere_net(&self, delta: f64) -> Vec<Vec<f64>> {
        let r = self.scale;
        let h = 0.999 * delta;
        if self.dim == 1 {
            let n = ((2.0 * std::f64::consts::PI * r) / h).ceil().max(1.0) as usize;
            return (0..n)
                .map(|j| {
                    let a = j as f64 * 2.0 * std::f64::consts::PI / n as f64;
                    vec![r * a.cos(), r * a.sin()]
                })
                .collect();
        }
        if self.dim == 2 {
            // Latitude-band lattice: meridian step + in-band step each <= h/2.
            let n_theta = (std::f64::consts::PI * r / h).ceil().max(1.0) as usize;
            let mut out = Vec::new();
            for i in 0..n_theta {
                let theta = (i as f64 + 0.5) * std::f64::consts::PI / n_theta as f64;
                let band = 2.0 * std::f64::consts::PI * r * theta.sin();
                let n_phi = (band / h).ceil().max(1.0) as usize;
                for j in 0..n_phi {
                    let phi = j as f64 * 2.0 * std::f64::consts::PI / n_phi as f64;
                    out.push(vec![
                        r * theta.sin() * phi.cos(),
                        r * theta.sin() * phi.sin(),
                        r * theta.cos(),
                    ]);
                }
            }
            out
        } else {
            // Product-angle lattice; each of the d angular steps costs at
            // most R * step / 2 of geodesic length.
            let step = 2.0 * h / (r * self.dim as f64);
            let n_polar = (std::f64::consts::PI / step).ceil().max(1.0) as usize;
            let n_azim = (2.0 * std::f64::consts::PI / step).ceil().max(1.0) as usize;
            let mut out = Vec::new();
            let mut angles = vec![0usize; self.dim];
            loop {
                let mut coords = vec![0.0; self.dim + 1];
                let mut sin_prod = r;
                for (axis, &ai) in angles.iter().enumerate() {
                    let ang = if axis + 1 < self.dim {
                        (ai as f64 + 0.5) * std::f64::consts::PI / n_polar as f64
                    } else {
                        ai as f64 * 2.0 * std::f64::consts::PI / n_azim as f64
                    };
                    coords[axis] = sin_prod * ang.cos();
                    sin_prod *= ang.sin();
                }
                coords[self.dim] = sin_prod;
                out.push(coords);
                let mut c = 0;
                loop {
                    angles[c] += 1;
                    let lim = if c + 1 < self.dim { n_polar } else { n_azim };
                    if angles[c] < lim {
                        break;
                    }
                    angles[c] = 0;
                    c += 1;
                    if c == self.dim {
                        return out;
                    }
                }
            }
        }
    }

    fn annulus_net(&self, delta: f64, reg: &AnnulusRegion) -> Vec<Vec<f64>> {
        assert!(reg.r_inner >= 0.0 && reg.r_outer >= reg.r_inner);
        // Lattice in the tangent space at the center, pushed through the
        // exponential map (1-Lipschitz on both models).
        let s = delta / std::f64::consts::SQRT_2;
        if self.dim == 1 {
            let k_max = ((reg.r_outer - reg.r_inner) / s).ceil() as usize;
            let mut out = Vec::new();
            for k in 0..=k_max {
                let u = (reg.r_inner + k as f64 * s).min(reg.r_outer);
                for sgn in [1.0, -1.0] {
                    out.push(self.exp_map(&reg.center, &[sgn * u]));
                    if u == 0.0 {
                        break;
                    }
                }
            }
            return out;
        }
        if self.dim == 2 {
            // Polar lattice: radial step and in-circle arc step each <= s/2.
            let k_max = ((reg.r_outer - reg.r_inner) / s).ceil() as usize;
            let mut out = Vec::new();
            for k in 0..=k_max {
                let u = (reg.r_inner + k as f64 * s).min(reg.r_outer);
                if u == 0.0 {
                    out.push(reg.center.clone());
                    continue;
                }
                let n_a = ((2.0 * std::f64::consts::PI * u) / s).ceil().max(1.0) as usize;
                for j in 0..n_a {
                    let a = j as f64 * 2.0 * std::f64::consts::PI / n_a as f64;
                    out.push(self.exp_map(&reg.center, &[u * a.cos(), u * a.sin()]));
                }
            }
            return out;
        }
        // d >= 3: cubical lattice in the tangent shell, radially clamped.
        let sd = s / (self.dim as f64).sqrt();
        let half_diag = sd * (self.dim as f64).sqrt() / 2.0;
        let lim = ((reg.r_outer + half_diag) / sd).ceil() as i64;
        let mut out = Vec::new();
        let mut idx = vec![-lim; self.dim];
        'outer: loop {
            let v: Vec<f64> = idx.iter().map(|&i| i as f64 * sd).collect();
            let n = linalg::norm(&v);
            if n >= (reg.r_inner - half_diag).max(0.0) && n <= reg.r_outer + half_diag {
                let clamped = n.clamp(reg.r_inner.max(1e-300), reg.r_outer);
                let w: Vec<f64> = if n < 1e-300 {
                    let mut e = vec![0.0; self.dim];
                    e[0] = clamped;
                    e
                } else {
                    v.iter().map(|x| x * clamped / n).collect()
                };
                out.push(self.exp_map(&reg.center, &w));
            }
            let mut c = 0;
            loop {
                idx[c] += 1;
                if idx[c] <= lim {
                    break;
                }
                idx[c] = -lim;
                c += 1;
                if c == self.dim {
                    break 'outer;
                }
            }
        }
        out
    }

    /// One uniform sample with respect to the Riemannian volume measure.
    pub fn uniform_sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Torus => {
                (0..self.dim).map(|_| rng.gen::<f64>() * self.scale).collect()
            }
            ManifoldKind::Sphere => loop {
                let g: Vec<f64> =
                    (0..self.ambient_dim()).map(|_| rng.sample(StandardNormal)).collect();
                let n = linalg::norm(&g);
                if n > 1e-12 {
                    return g.into_iter().map(|x| x * self.scale / n).collect();
                }
            },
        }
    }
}

/// `I_m(x) = integral of sin^m(t) dt from 0 to x` by the standard reduction.
fn sin_power_integral(m: usize, x: f64) -> f64 {
    match m {
        0 => x,
        1 => 1.0 - x.cos(),
        _ => {
            let m_f = m as f64;
            ((m_f - 1.0) * sin_power_integral(m - 2, x)
                - x.cos() * x.sin().powi(m as i32 - 1))
                / m_f
        }
    }
}
