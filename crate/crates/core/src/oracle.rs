//! Independent reference implementations used by the verification suite and
//! the oracle-equivalence tests. These deliberately avoid the production
//! code paths they audit: complex enumeration is exhaustive over vertex
//! subsets instead of grid-accelerated clique expansion, the simplex test
//! goes through the Welzl miniball instead of the support-scan predicate,
//! homology uses dense elimination instead of sparse column reduction, and
//! critical-point emptiness checks scan the whole cloud.

use crate::cech::CechComplex;
use crate::error::Result;
use crate::manifold::ManifoldModel;
use crate::morse::{delta_polytope_contains_origin, CriticalPoint};
use crate::sampler::PointCloud;
use itertools::Itertools;

/// Čech complex by exhaustive subset enumeration: every vertex subset of
/// size <= dim_cap + 1 whose pairwise distances permit a common ball is
/// tested with the Welzl minimal enclosing ball.
pub fn brute_force_complex(cloud: &PointCloud, r: f64, dim_cap: usize) -> Result<CechComplex> {
    let m = &cloud.manifold;
    let n = cloud.len();
    let mut simplices: Vec<Vec<u32>> = Vec::new();
    for size in 1..=(dim_cap + 1).min(n.max(1)) {
        'subsets: for combo in (0..n).combinations(size) {
            let pts: Vec<&[f64]> = combo.iter().map(|&i| cloud.point(i)).collect();
            if size >= 2 {
                for i in 0..size {
                    for j in i + 1..size {
                        if m.distance(pts[i], pts[j]) > 2.0 * r {
                            continue 'subsets;
                        }
                    }
                }
                let radius = match m.min_enclosing_ball(&pts) {
                    Ok((_, radius)) => radius,
                    // A ball beyond the convexity regime cannot have radius
                    // <= r <= convexity_radius.
                    Err(crate::error::Error::OutOfRegime(_)) => continue 'subsets,
                    Err(e) => return Err(e),
                };
                if radius > r {
                    continue;
                }
            }
            simplices.push(combo.iter().map(|&i| i as u32).collect());
        }
    }
    let mut cx = CechComplex::from_simplices(r, dim_cap, &simplices)?;
    cx.cloud_ref = cloud.id();
    Ok(cx)
}

/// Betti numbers by dense GF(2) Gaussian elimination. Returns degrees
/// `0..=dim_cap` with the same boundary conventions as the production path.
pub fn dense_betti(cx: &CechComplex) -> Result<Vec<usize>> {
    let cap = cx.dim_cap;
    let mut f = vec![0usize; cap + 2];
    for (k, &c) in cx.f_vector().iter().enumerate() {
        f[k] = c;
    }
    let mut ranks = vec![0usize; cap + 2];
    for k in 1..=cap {
        if f[k] == 0 {
            continue;
        }
        let rows = f[k - 1];
        let cols = f[k];
        let mut dense = vec![false; rows * cols];
        let lower = cx.simplices(k - 1);
        let mut face = vec![0u32; k];
        for (c, s) in cx.simplices(k).iter().enumerate() {
            for drop in 0..=k {
                let mut w = 0;
                for (i, &v) in s.iter().enumerate() {
                    if i != drop {
                        face[w] = v;
                        w += 1;
                    }
                }
                let row = lower.position(&face).ok_or_else(|| {
                    crate::error::Error::InvalidComplex(format!("missing face {face:?}"))
                })?;
                dense[row * cols + c] = true;
            }
        }
        ranks[k] = dense_gf2_rank(&mut dense, rows, cols);
    }
    let mut out = vec![0usize; cap + 1];
    for k in 0..=cap {
        out[k] = f[k] - ranks[k] - ranks[k + 1];
    }
    Ok(out)
}

/// In-place dense GF(2) row reduction.
fn dense_gf2_rank(m: &mut [bool], rows: usize, cols: usize) -> usize {
    let mut rank = 0usize;
    let mut row = 0usize;
    for col in 0..cols {
        let mut piv = None;
        for r in row..rows {
            if m[r * cols + col] {
                piv = Some(r);
                break;
            }
        }
        let Some(p) = piv else { continue };
        if p != row {
            for c in 0..cols {
                m.swap(row * cols + c, p * cols + c);
            }
        }
        for r in 0..rows {
            if r != row && m[r * cols + col] {
                for c in 0..cols {
                    m[r * cols + c] ^= m[row * cols + c];
                }
            }
        }
        rank += 1;
        row += 1;
        if row == rows {
            break;
        }
    }
    rank
}

/// Critical points by exhaustive subset enumeration, with the open-ball
/// emptiness condition checked against the entire cloud directly.
pub fn brute_force_critical_points(
    cloud: &PointCloud,
    k: usize,
    r_lo: f64,
    r_hi: f64,
) -> Result<Vec<CriticalPoint>> {
    let m = &cloud.manifold;
    let n = cloud.len();
    let mut out = Vec::new();
    if k == 0 {
        if r_lo <= 0.0 {
            for i in 0..n {
                out.push(CriticalPoint {
                    index: 0,
                    center: cloud.point(i).to_vec(),
                    radius: 0.0,
                    generators: vec![i as u32],
                });
            }
        }
        return Ok(out);
    }
    'subsets: for combo in (0..n).combinations(k + 1) {
        let pts: Vec<&[f64]> = combo.iter().map(|&i| cloud.point(i)).collect();
        let Some((center, radius)) = m.circumcenter(&pts) else { continue };
        if radius <= r_lo || radius > r_hi {
            continue;
        }
        for j in 0..n {
            if combo.contains(&j) {
                continue;
            }
            if m.distance(&center, cloud.point(j)) <= radius - 1e-12 {
                continue 'subsets;
            }
        }
        if !delta_polytope_contains_origin(m, &center, &pts)? {
            continue;
        }
        out.push(CriticalPoint {
            index: k,
            center,
            radius,
            generators: combo.iter().map(|&i| i as u32).collect(),
        });
    }
    out.sort_by(|a, b| {
        a.radius
            .partial_cmp(&b.radius)
            .unwrap()
            .then_with(|| a.generators.cmp(&b.generators))
    });
    Ok(out)
}

/// Monte Carlo estimate of `vol(B_r(p)) / vol(M)` by uniform sampling.
pub fn mc_ball_volume_fraction(
    m: &ManifoldModel,
    center: &[f64],
    r: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let p = m.uniform_sample(&mut rng);
        if m.distance(center, &p) <= r {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldModel;

    #[test]
    fn mc_volume_agrees_with_closed_form() {
        // 10^6 samples; binomial 4-sigma tolerance.
        for m in [
            ManifoldModel::torus(2, 1.0).unwrap(),
            ManifoldModel::sphere(2, 1.0).unwrap(),
        ] {
            let r = 0.6 * m.convexity_radius();
            let center = vec![0.0; m.ambient_dim()];
            let center = match m.kind {
                crate::manifold::ManifoldKind::Torus => center,
                crate::manifold::ManifoldKind::Sphere => {
                    let mut c = center;
                    c[0] = m.scale;
                    c
                }
            };
            let frac = mc_ball_volume_fraction(&m, &center, r, 1_000_000, 9);
            let expect = m.ball_volume(r).unwrap() / m.volume();
            let sigma = (expect * (1.0 - expect) / 1_000_000f64).sqrt();
            assert!(
                (frac - expect).abs() <= 4.0 * sigma,
                "MC volume {frac} vs exact {expect} (sigma {sigma})"
            );
        }
    }
}
