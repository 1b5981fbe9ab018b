//! Critical points of the distance function: an index-k critical point is
//! the center of a (k+1)-subset whose gradient polytope contains the origin
//! and whose open circumball contains no other cloud point. Also the Morse
//! inequalities and the net-based coverage certificate.

use crate::cech::{adjacency_high, for_each_clique, CechComplex, SpatialGrid};
use crate::error::{Error, Result};
use crate::homology::{betti_numbers, manifold_betti};
use crate::linalg;
use crate::manifold::ManifoldModel;
use crate::sampler::PointCloud;
use std::io::Write;

/// An index-k critical point of the distance function: the center and
/// common radius of its k+1 generators.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub index: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub generators: Vec<u32>,
}

/// Per-index critical-point radii over an interval, with the degenerate
/// (center-less) candidate count reported rather than silently dropped.
#[derive(Debug, Clone)]
pub struct CritCounts {
    pub r_lo: f64,
    pub r_hi: f64,
    pub cloud_size: usize,
    /// Sorted critical radii per index 0..=k_max.
    pub radii: Vec<Vec<f64>>,
    pub degenerate_skips: usize,
}

impl CritCounts {
    /// Number of critical points of index `k` with radius in `(a, b]`.
    /// Index 0 critical points sit at radius zero and are counted when
    /// `a <= 0` (the minima are the points themselves).
    pub fn count_in(&self, k: usize, a: f64, b: f64) -> usize {
        let Some(rs) = self.radii.get(k) else { return 0 };
        if k == 0 {
            return if a <= 0.0 && b >= 0.0 { rs.len() } else { 0 };
        }
        rs.iter().filter(|&&rho| rho > a && rho <= b).count()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.radii.iter().map(|v| v.len()).collect()
    }
}

/// Decides whether the origin of the tangent space at `center` lies in the
/// convex hull of the gradients `-2 log_center(y_i)` (closed-hull
/// convention, tolerance scaled by the gradient norms). Equivalent to
/// testing the log vectors themselves.
pub fn delta_polytope_contains_origin(
    m: &ManifoldModel,
    center: &[f64],
    generators: &[&[f64]],
) -> Result<bool> {
    let mut vectors = Vec::with_capacity(generators.len());
    for y in generators {
        let mut v = m.log_map(center, y)?;
        for x in &mut v {
            *x *= -2.0;
        }
        vectors.push(v);
    }
    Ok(origin_in_hull(&vectors, m.dim))
}

/// Closed-hull membership of the origin by Carathéodory scan: some affinely
/// independent subset must carry nonnegative barycentric coordinates for 0.
pub(crate) fn origin_in_hull(vectors: &[Vec<f64>], dim: usize) -> bool {
    let scale = vectors
        .iter()
        .map(|v| linalg::norm(v))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let tol = 1e-9 * scale;
    let m = vectors.len();
    let max_s = (dim + 1).min(m);
    let mut subset: Vec<usize> = Vec::with_capacity(max_s);
    hull_scan(vectors, tol, 0, max_s, &mut subset)
}

fn hull_scan(vectors: &[Vec<f64>], tol: f64, from: usize, max_s: usize, subset: &mut Vec<usize>) -> bool {
    if !subset.is_empty() && origin_in_affine_simplex(vectors, subset, tol) {
        return true;
    }
    if subset.len() == max_s {
        return false;
    }
    for i in from..vectors.len() {
        subset.push(i);
        if hull_scan(vectors, tol, i + 1, max_s, subset) {
            subset.pop();
            return true;
        }
        subset.pop();
    }
    false
}

/// Tests `0 in conv{vectors[subset]}` assuming affine independence: solve
/// the least-squares barycentric system and require a near-zero residual
/// with nonnegative coordinates.
fn origin_in_affine_simplex(vectors: &[Vec<f64>], subset: &[usize], tol: f64) -> bool {
    let s0 = &vectors[subset[0]];
    let k = subset.len() - 1;
    if k == 0 {
        return linalg::norm(s0) <= tol;
    }
    let dirs: Vec<Vec<f64>> = subset[1..]
        .iter()
        .map(|&i| linalg::sub(&vectors[i], s0))
        .collect();
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            gram[i * k + j] = linalg::dot(&dirs[i], &dirs[j]);
        }
        rhs[i] = -linalg::dot(&dirs[i], s0);
    }
    let Some(beta) = linalg::solve(&gram, &rhs, k) else { return false };
    let alpha0 = 1.0 - beta.iter().sum::<f64>();
    let rel = 1e-9;
    if alpha0 < -rel || beta.iter().any(|&b| b < -rel) {
        return false;
    }
    // Residual of 0 = alpha0 s0 + sum beta_i (s0 + dirs_i) = s0 + sum beta_i dirs_i.
    let mut res = s0.clone();
    for (b, d) in beta.iter().zip(&dirs) {
        for (r, x) in res.iter_mut().zip(d) {
            *r += b * x;
        }
    }
    linalg::norm(&res) <= tol
}

/// Result of critical-point enumeration, with the degenerate-candidate
/// counter carried alongside.
#[derive(Debug, Clone)]
pub struct CritEnumeration {
    pub points: Vec<CriticalPoint>,
    pub degenerate_skips: usize,
}

/// Enumerates the index-k critical points with radius in `(r_lo, r_hi]`
/// (index 0: the cloud points themselves, radius zero, when `r_lo <= 0`).
/// Candidates are the (k+1)-cliques of the `2 r_hi`-neighbor graph.
pub fn enumerate_critical_points(
    cloud: &PointCloud,
    k: usize,
    r_lo: f64,
    r_hi: f64,
) -> Result<CritEnumeration> {
    let m = &cloud.manifold;
    if k > m.dim {
        return Err(Error::InvalidInput(format!(
            "critical index {k} above manifold dimension {}",
            m.dim
        )));
    }
    if !(r_lo >= 0.0 && r_lo < r_hi && r_hi <= m.convexity_radius()) {
        return Err(Error::OutOfRegime(format!(
            "interval ({r_lo}, {r_hi}] outside [0, {}]",
            m.convexity_radius()
        )));
    }
    let mut out = CritEnumeration { points: Vec::new(), degenerate_skips: 0 };
    if k == 0 {
        if r_lo <= 0.0 {
            for i in 0..cloud.len() {
                out.points.push(CriticalPoint {
                    index: 0,
                    center: cloud.point(i).to_vec(),
                    radius: 0.0,
                    generators: vec![i as u32],
                });
            }
        }
        return Ok(out);
    }
    if cloud.is_empty() {
        return Ok(out);
    }
    let adj = adjacency_high(cloud, 2.0 * r_hi);
    let grid = SpatialGrid::from_cloud(cloud, r_hi);
    let mut near: Vec<u32> = Vec::new();
    let mut pts: Vec<&[f64]> = Vec::with_capacity(k + 1);
    for_each_clique(&adj, k + 1, |verts| {
        pts.clear();
        pts.extend(verts.iter().map(|&v| cloud.point(v as usize)));
        let Some((center, radius)) = m.circumcenter(&pts) else {
            out.degenerate_skips += 1;
            return;
        };
        if radius <= r_lo || radius > r_hi {
            return;
        }
        // Open-ball emptiness: no non-generator strictly inside B_rho(c).
        grid.neighbors_into(&center, &mut near);
        for &j in &near {
            if verts.contains(&j) {
                continue;
            }
            if m.distance(&center, cloud.point(j as usize)) <= radius - 1e-12 {
                return;
            }
        }
        match delta_polytope_contains_origin(m, &center, &pts) {
            Ok(true) => out.points.push(CriticalPoint {
                index: k,
                center,
                radius,
                generators: verts.to_vec(),
            }),
            Ok(false) => {}
            Err(_) => out.degenerate_skips += 1,
        }
    });
    out.points.sort_by(|a, b| {
        a.radius
            .partial_cmp(&b.radius)
            .unwrap()
            .then_with(|| a.generators.cmp(&b.generators))
    });
    Ok(out)
}

/// Counts critical points per index over `(r_lo, r_hi]`, retaining the
/// radii so sub-intervals can be queried afterwards.
pub fn crit_counts(cloud: &PointCloud, r_lo: f64, r_hi: f64, k_max: usize) -> Result<CritCounts> {
    let mut radii = Vec::with_capacity(k_max + 1);
    let mut degenerate = 0usize;
    for k in 0..=k_max {
        let e = enumerate_critical_points(cloud, k, r_lo, r_hi)?;
        degenerate += e.degenerate_skips;
        let mut rs: Vec<f64> = e.points.iter().map(|c| c.radius).collect();
        rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        radii.push(rs);
    }
    Ok(CritCounts {
        r_lo,
        r_hi,
        cloud_size: cloud.len(),
        radii,
        degenerate_skips: degenerate,
    })
}

/// One row of the Morse-inequality report.
#[derive(Debug, Clone)]
pub struct MorseRow {
    pub k: usize,
    pub beta: usize,
    /// Weak inequality: beta_k <= C_k(0, r] with C_0 = |cloud|.
    pub weak_bound: usize,
    pub weak_pass: bool,
    /// Relative inequality under a coverage certificate at r0:
    /// beta_k - beta_k(M) <= C_(k+1)(r, r0].
    pub relative: Option<(i64, usize, bool)>,
}

#[derive(Debug, Clone)]
pub struct MorseReport {
    pub r: f64,
    pub covered_at: Option<f64>,
    pub rows: Vec<MorseRow>,
}

impl MorseReport {
    pub fn all_pass(&self) -> bool {
        self.rows
            .iter()
            .all(|row| row.weak_pass && row.relative.map_or(true, |(_, _, p)| p))
    }
}

/// Checks the weak Morse inequality for every trusted degree, and the
/// relative inequality when a coverage radius is certified. `counts` must
/// cover `(0, covered_at.unwrap_or(r)]`.
pub fn morse_inequality_check(
    cx: &CechComplex,
    m: &ManifoldModel,
    counts: &CritCounts,
    covered_at: Option<f64>,
) -> Result<MorseReport> {
    let bv = betti_numbers(cx)?;
    morse_report_from_betti(&bv, cx.r, m, counts, covered_at)
}

/// Same report from an already-computed Betti vector (the harness computes
/// Betti numbers with a streamed top dimension and reuses them here).
pub fn morse_report_from_betti(
    bv: &crate::homology::BettiVector,
    r: f64,
    m: &ManifoldModel,
    counts: &CritCounts,
    covered_at: Option<f64>,
) -> Result<MorseReport> {
    let mb = manifold_betti(m);
    let k_max = counts.radii.len().saturating_sub(1);
    let mut rows = Vec::new();
    for k in 0..bv.trusted_degrees().min(m.dim + 1) {
        let beta = bv.get(k);
        let weak_bound = if k == 0 { counts.cloud_size } else { counts.count_in(k, 0.0, r) };
        let weak_pass = beta <= weak_bound;
        let relative = covered_at.and_then(|r0| {
            // No critical point of the distance function has index above
            // the manifold dimension, so C_(d+1) vanishes identically.
            let bound = if k + 1 > m.dim {
                0
            } else if k + 1 > k_max {
                return None;
            } else {
                counts.count_in(k + 1, r, r0)
            };
            let lhs = beta as i64 - mb.get(k).copied().unwrap_or(0) as i64;
            Some((lhs, bound, lhs <= bound as i64))
        });
        rows.push(MorseRow { k, beta, weak_bound, weak_pass, relative });
    }
    Ok(MorseReport { r, covered_at, rows })
}

/// One-sided coverage certificate: builds a deterministic (r0/8)-net and
/// requires a cloud point within `7 r0 / 8` of every net point, which by
/// the triangle inequality forces `B_r0(cloud) = M`. A `false` answer does
/// not prove non-coverage.
pub fn coverage_certificate(cloud: &PointCloud, r0: f64) -> Result<bool> {
    let m = &cloud.manifold;
    if !(r0 > 0.0 && r0 <= m.convexity_radius()) {
        return Err(Error::OutOfRegime(format!(
            "coverage radius {r0} outside (0, {}]",
            m.convexity_radius()
        )));
    }
    if cloud.is_empty() {
        return Ok(false);
    }
    let delta = r0 / 8.0;
    let reach = r0 - delta;
    let net = m.build_net(delta, None);
    let grid = SpatialGrid::from_cloud(cloud, reach);
    let mut near: Vec<u32> = Vec::new();
    'net: for s in &net {
        grid.neighbors_into(s, &mut near);
        for &j in &near {
            if m.distance(s, cloud.point(j as usize)) <= reach {
                continue 'net;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

/// CSV serialization of critical points: index, radius, center coordinates,
/// space-separated generator indices.
pub fn write_critical_csv<W: Write>(
    w: &mut W,
    m: &ManifoldModel,
    points: &[CriticalPoint],
) -> Result<()> {
    let coords: Vec<String> = (0..m.ambient_dim()).map(|i| format!("c{i}")).collect();
    writeln!(w, "index,radius,{},generators", coords.join(","))?;
    for p in points {
        let c: Vec<String> = p.center.iter().map(|x| format!("{x:.16e}")).collect();
        let g: Vec<String> = p.generators.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{:.16e},{},{}", p.index, p.radius, c.join(","), g.join(" "))?;
    }
    Ok(())
}
