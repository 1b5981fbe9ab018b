//! Θ-cycles: critical configurations that provably create a new nontrivial
//! k-cycle. A configuration qualifies when its radius falls in (r1, r], the
//! r2-ball around its center contains only the generators, its gradient
//! polytope holds the origin robustly (phi >= epsilon), and the surrounding
//! annulus is certified covered by a deterministic net. The count is a
//! certified lower bound on beta_k.

use crate::cech::{CechComplex, SpatialGrid};
use crate::error::{Error, Result};
use crate::homology::betti_numbers;
use crate::linalg;
use crate::manifold::{AnnulusRegion, ManifoldKind, ManifoldModel};
use crate::morse::{delta_polytope_contains_origin, enumerate_critical_points};
use crate::sampler::PointCloud;

/// Radii and robustness threshold for Θ-cycle detection.
#[derive(Debug, Clone, Copy)]
pub struct ThetaConfig {
    pub epsilon: f64,
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
    pub xi: f64,
}

impl ThetaConfig {
    /// Builds a config from the default radii rule `r2 = r(1+xi)`,
    /// `r1 = r(1 - xi^2/(2 c_g^2))` with `xi = 1/lambda`.
    pub fn from_rule(m: &ManifoldModel, r: f64, lambda_val: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidInput(format!("epsilon {epsilon} outside (0, 1)")));
        }
        let cg = c_g_constant(m, r)?;
        let (r1, r2) = theta_radii(r, lambda_val, cg, m.convexity_radius())?;
        Ok(ThetaConfig { epsilon, r, r1, r2, xi: 1.0 / lambda_val })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r1 < self.r && self.r < self.r2) {
            return Err(Error::InvalidInput(format!(
                "radii must satisfy r1 < r < r2, got ({}, {}, {})",
                self.r1, self.r, self.r2
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidInput(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        Ok(())
    }
}

/// A detected Θ-cycle.
#[derive(Debug, Clone)]
pub struct ThetaCycle {
    pub generators: Vec<u32>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub phi: f64,
}

/// Robustness of a critical configuration: the distance from the origin to
/// the boundary of the gradient polytope, normalized by the gradient norm
/// `2 rho`. Ranges over [0, 1]; zero means the origin sits on a facet.
pub fn phi(m: &ManifoldModel, center: &[f64], generators: &[&[f64]]) -> Result<f64> {
    if generators.len() < 2 {
        return Err(Error::InvalidInput("phi needs at least two generators".into()));
    }
    let mut vectors = Vec::with_capacity(generators.len());
    let mut rho = 0.0f64;
    for y in generators {
        let mut v = m.log_map(center, y)?;
        rho = rho.max(linalg::norm(&v));
        for x in &mut v {
            *x *= -2.0;
        }
        vectors.push(v);
    }
    if !delta_polytope_contains_origin(m, center, generators)? {
        return Err(Error::InvalidConfiguration(
            "origin outside the gradient polytope".into(),
        ));
    }
    // Boundary facets of a simplex are its (m-1)-subsets; for a pair the
    // boundary is the two endpoints.
    let mth = vectors.len();
    let mut best = f64::INFINITY;
    if mth == 2 {
        best = linalg::norm(&vectors[0]).min(linalg::norm(&vectors[1]));
    } else {
        let mut facet: Vec<Vec<f64>> = Vec::with_capacity(mth - 1);
        for drop in 0..mth {
            facet.clear();
            for (i, v) in vectors.iter().enumerate() {
                if i != drop {
                    facet.push(v.clone());
                }
            }
            best = best.min(dist_origin_to_simplex(&facet));
        }
    }
    Ok(best / (2.0 * rho))
}

/// Euclidean distance from the origin to the convex hull of `vs`: the
/// affine minimizer if its barycentric coordinates are nonnegative,
/// otherwise the best sub-facet.
fn dist_origin_to_simplex(vs: &[Vec<f64>]) -> f64 {
    if vs.len() == 1 {
        return linalg::norm(&vs[0]);
    }
    let k = vs.len() - 1;
    let dirs: Vec<Vec<f64>> = vs[1..].iter().map(|v| linalg::sub(v, &vs[0])).collect();
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            gram[i * k + j] = linalg::dot(&dirs[i], &dirs[j]);
        }
        rhs[i] = -linalg::dot(&dirs[i], &vs[0]);
    }
    if let Some(beta) = linalg::solve(&gram, &rhs, k) {
        let alpha0 = 1.0 - beta.iter().sum::<f64>();
        if alpha0 >= -1e-12 && beta.iter().all(|&b| b >= -1e-12) {
            let mut res = vs[0].clone();
            for (b, d) in beta.iter().zip(&dirs) {
                for (r, x) in res.iter_mut().zip(d) {
                    *r += b * x;
                }
            }
            return linalg::norm(&res);
        }
    }
    // Recurse on the sub-facets.
    let mut best = f64::INFINITY;
    let mut sub: Vec<Vec<f64>> = Vec::with_capacity(vs.len() - 1);
    for drop in 0..vs.len() {
        sub.clear();
        for (i, v) in vs.iter().enumerate() {
            if i != drop {
                sub.push(v.clone());
            }
        }
        best = best.min(dist_origin_to_simplex(&sub));
    }
    best
}

/// Excess-inequality constant `c_g(r) = 1/sqrt(A(r))` where `A(r)` is the
/// sharp lower Hessian eigenvalue factor of half the squared distance over
/// balls of radius 2r: exactly 1 on the torus, `(2r/R) cot(2r/R)` (capped
/// at 1) on the sphere. Continuous, nondecreasing, and -> 1 as r -> 0.
pub fn c_g_constant(m: &ManifoldModel, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= m.convexity_radius()) {
        return Err(Error::OutOfRegime(format!(
            "c_g radius {r} outside (0, {}]",
            m.convexity_radius()
        )));
    }
    match m.kind {
        ManifoldKind::Torus => Ok(1.0),
        ManifoldKind::Sphere => {
            let x = 2.0 * r / m.scale;
            let a = (x / x.tan()).min(1.0);
            if a <= 0.0 {
                return Ok(f64::INFINITY);
            }
            Ok(1.0 / a.sqrt())
        }
    }
}

/// Default Θ radii: `r2 = r(1+xi)` and `r1 = r(1 - xi^2/(2 c_g^2))` with
/// `xi = 1/lambda_val`. The returned pair always satisfies the lower-bound
/// lemma hypothesis `r1 > r sqrt(1 - (1/c_g^2)(r2/r - 1)^2)`, which is
/// asserted numerically.
pub fn theta_radii(r: f64, lambda_val: f64, c_g: f64, r_max: f64) -> Result<(f64, f64)> {
    if !(lambda_val > 1.0) {
        return Err(Error::InvalidInput(format!("lambda {lambda_val} must exceed 1")));
    }
    if !(r > 0.0) || !c_g.is_finite() || c_g < 1.0 {
        return Err(Error::InvalidInput(format!("bad r {r} or c_g {c_g}")));
    }
    let xi = 1.0 / lambda_val;
    let r2 = r * (1.0 + xi);
    if r2 > r_max {
        return Err(Error::OutOfRegime(format!("outer radius {r2} above {r_max}")));
    }
    let r1 = r * (1.0 - xi * xi / (2.0 * c_g * c_g));
    // The rule satisfies the lemma hypothesis identically (sqrt(1 - x) is
    // below 1 - x/2); tolerate f64 saturation when xi underflows the ulp.
    let radicand = 1.0 - (xi / c_g) * (xi / c_g);
    if radicand >= 0.0 && r1 < r * radicand.sqrt() - 1e-15 * r {
        return Err(Error::InvalidInput(format!(
            "radii rule violated its own hypothesis: r1 = {r1}"
        )));
    }
    Ok((r1, r2))
}

/// Counts Θ-cycles of index `k`: critical configurations in `(r1, r]` whose
/// r2-ball is otherwise empty, whose phi clears epsilon, and whose annulus
/// `A_eps` carries a passing net certificate. The certificate is one-sided,
/// so the count is a valid lower-bound contributor.
pub fn count_theta_cycles(
    cloud: &PointCloud,
    k: usize,
    cfg: &ThetaConfig,
) -> Result<(usize, Vec<ThetaCycle>)> {
    cfg.validate()?;
    let m = &cloud.manifold;
    if k == 0 || k + 1 > m.dim {
        return Err(Error::InvalidInput(format!(
            "theta index {k} outside [1, {}]",
            m.dim.saturating_sub(1)
        )));
    }
    if cfg.r2 > m.convexity_radius() {
        return Err(Error::OutOfRegime(format!(
            "outer radius {} above convexity radius",
            cfg.r2
        )));
    }
    let mut cycles = Vec::new();
    if cloud.is_empty() {
        return Ok((0, cycles));
    }
    let crits = enumerate_critical_points(cloud, k, cfg.r1, cfg.r)?;
    if crits.points.is_empty() {
        return Ok((0, cycles));
    }
    let grid = SpatialGrid::from_cloud(cloud, cfg.r2);
    let mut near: Vec<u32> = Vec::new();
    'candidates: for cp in &crits.points {
        // (C2) the closed r2-ball holds only the generators.
        grid.neighbors_into(&cp.center, &mut near);
        for &j in &near {
            if cp.generators.contains(&j) {
                continue;
            }
            if m.distance(&cp.center, cloud.point(j as usize)) <= cfg.r2 - 1e-12 {
                continue 'candidates;
            }
        }
        // (C3) robustness of the critical configuration.
        let pts: Vec<&[f64]> = cp.generators.iter().map(|&i| cloud.point(i as usize)).collect();
        let phi_val = phi(m, &cp.center, &pts)?;
        if phi_val < cfg.epsilon {
            continue;
        }
        // Annulus certificate: an (eps rho / 2)-net of A_eps in which every
        // net point has a cloud point within rho (1 - eps/2).
        if !annulus_certificate(cloud, &cp.center, cp.radius, cfg.epsilon) {
            continue;
        }
        cycles.push(ThetaCycle {
            generators: cp.generators.clone(),
            center: cp.center.clone(),
            radius: cp.radius,
            phi: phi_val,
        });
    }
    Ok((cycles.len(), cycles))
}

/// Net certificate for `A_eps(center, rho) subset B_rho(cloud)`: every point
/// of a deterministic (eps rho / 2)-net of the annulus must be within
/// `rho (1 - eps/2)` of the cloud. One-sided and conservative.
pub fn annulus_certificate(cloud: &PointCloud, center: &[f64], rho: f64, eps: f64) -> bool {
    let m = &cloud.manifold;
    let region = AnnulusRegion {
        center: center.to_vec(),
        r_inner: eps * rho,
        r_outer: rho,
    };
    let net = m.build_net(eps * rho / 2.0, Some(&region));
    let reach = rho * (1.0 - eps / 2.0);
    let grid = SpatialGrid::from_cloud(cloud, reach);
    let mut near: Vec<u32> = Vec::new();
    'net: for s in &net {
        grid.neighbors_into(s, &mut near);
        for &j in &near {
            if m.distance(s, cloud.point(j as usize)) <= reach {
                continue 'net;
            }
        }
        return false;
    }
    true
}

/// Lower-bound soundness check: `beta_k(cx) >= theta_count`. Asserted on
/// every harness trial; a failure is a build-stopping bug.
pub fn theta_lower_bound_check(
    cx: &CechComplex,
    theta_count: usize,
    m: &ManifoldModel,
    k: usize,
) -> Result<bool> {
    if k >= m.dim {
        return Err(Error::InvalidInput(format!(
            "theta degree {k} outside [1, {}]",
            m.dim.saturating_sub(1)
        )));
    }
    let bv = betti_numbers(cx)?;
    Ok(bv.get(k) >= theta_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech::build_complex;
    use crate::manifold::ManifoldModel;
    use crate::sampler::PointCloud;

    fn t2() -> ManifoldModel {
        ManifoldModel::torus(2, 1.0).unwrap()
    }

    #[test]
    fn phi_symmetric_pair_is_one() {
        let m = t2();
        let c = [0.5, 0.5];
        let v = phi(&m, &c, &[&[0.4, 0.5], &[0.6, 0.5]]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phi_equilateral_triple_is_half() {
        // Three gradient vectors of norm 2 rho at 120 degrees: nearest
        // boundary point is an edge midpoint at distance 2 rho cos 60 = rho.
        let m = t2();
        let c = [0.5, 0.5];
        let rho = 0.08;
        let gens: Vec<Vec<f64>> = (0..3)
            .map(|i| {
                let a = i as f64 * 2.0 * std::f64::consts::PI / 3.0;
                vec![0.5 + rho * a.cos(), 0.5 + rho * a.sin()]
            })
            .collect();
        let refs: Vec<&[f64]> = gens.iter().map(|v| v.as_slice()).collect();
        let v = phi(&m, &c, &refs).unwrap();
        assert!((v - 0.5).abs() < 1e-9, "phi {v}");
    }

    #[test]
    fn phi_origin_on_facet_is_zero() {
        // Degenerate: origin on the segment between the two far generators.
        let m = t2();
        let c = [0.5, 0.5];
        let refs: [&[f64]; 3] = [&[0.42, 0.5], &[0.58, 0.5], &[0.5, 0.58]];
        let v = phi(&m, &c, &refs).unwrap();
        assert!(v.abs() < 1e-9);
    }

    #[test]
    fn phi_rejects_noncritical() {
        let m = t2();
        let c = [0.5, 0.5];
        assert!(matches!(
            phi(&m, &c, &[&[0.6, 0.5], &[0.5, 0.6]]),
            Err(Error::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn phi_scale_invariant() {
        // Doubling rho leaves phi unchanged.
        let m = t2();
        let c = [0.5, 0.5];
        for rho in [0.04, 0.08] {
            let gens: Vec<Vec<f64>> = [0.2f64, 2.3, 4.0]
                .iter()
                .map(|&a| vec![0.5 + rho * a.cos(), 0.5 + rho * a.sin()])
                .collect();
            let refs: Vec<&[f64]> = gens.iter().map(|v| v.as_slice()).collect();
            let v = phi(&m, &c, &refs).unwrap();
            let gens2: Vec<Vec<f64>> = [0.2f64, 2.3, 4.0]
                .iter()
                .map(|&a| vec![0.5 + 2.0 * rho * a.cos(), 0.5 + 2.0 * rho * a.sin()])
                .collect();
            let refs2: Vec<&[f64]> = gens2.iter().map(|v| v.as_slice()).collect();
            let v2 = phi(&m, &c, &refs2).unwrap();
            assert!((v - v2).abs() < 1e-9);
            assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn c_g_flat_is_one_and_sphere_value() {
        let m = t2();
        assert_eq!(c_g_constant(&m, 0.1).unwrap(), 1.0);
        let s = ManifoldModel::sphere(2, 1.0).unwrap();
        let v = c_g_constant(&s, 0.1).unwrap();
        let expect = 1.0 / (0.2f64 / 0.2f64.tan()).sqrt();
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 1.00675).abs() < 5e-5);
        assert!(c_g_constant(&s, 0.0).is_err());
        assert!(c_g_constant(&s, 1.0).is_err());
    }

    #[test]
    fn c_g_monotone_to_one() {
        let s = ManifoldModel::sphere(2, 1.0).unwrap();
        let mut prev = 1.0;
        for r in [1e-3, 0.01, 0.05, 0.1, 0.2] {
            let v = c_g_constant(&s, r).unwrap();
            assert!(v >= prev - 1e-12, "c_g not nondecreasing at {r}");
            prev = v;
        }
        assert!((c_g_constant(&s, 1e-3).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn c_g_matches_hessian_minimization() {
        // Independent oracle: minimize the numerical second derivative of
        // rho_p^2 / 2 along arc-length geodesics at distances <= 2r.
        let s = ManifoldModel::sphere(2, 1.0).unwrap();
        let p = [1.0, 0.0, 0.0];
        let r = 0.1;
        let h = 1e-4;
        let mut min_eig = f64::INFINITY;
        for iu in 1..=20 {
            let u = 2.0 * r * iu as f64 / 20.0;
            for ipsi in 0..=20 {
                let psi = std::f64::consts::FRAC_PI_2 * ipsi as f64 / 20.0;
                // Point x at distance u from p; geodesic through x in a
                // direction making angle psi with the radial direction.
                let x = s.exp_map(&p, &[u, 0.0]);
                let frame_dir = [psi.cos(), psi.sin()];
                let f = |t: f64| -> f64 {
                    let q = s.exp_map(&x, &[t * frame_dir[0], t * frame_dir[1]]);
                    let d = s.distance(&p, &q);
                    0.5 * d * d
                };
                let second = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
                min_eig = min_eig.min(second);
            }
        }
        let a_closed = 2.0 * r / (2.0 * r as f64).tan();
        assert!(
            (min_eig - a_closed).abs() < 1e-5,
            "numerical Hessian floor {min_eig} vs closed form {a_closed}"
        );
        let cg = c_g_constant(&s, r).unwrap();
        assert!((cg - 1.0 / min_eig.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn theta_radii_arithmetic() {
        let (r1, r2) = theta_radii(0.02, 10.0, 1.0, 0.25).unwrap();
        assert!((r2 - 0.022).abs() < 1e-15);
        assert!((r1 - 0.0199).abs() < 1e-15);
        // Lemma hypothesis at these values.
        let bound = 0.02 * (1.0f64 - 0.01).sqrt();
        assert!(bound < r1);
        // xi -> 0 collapses both radii onto r.
        let (r1, r2) = theta_radii(0.02, 1e9, 1.0, 0.25).unwrap();
        assert!((r1 - 0.02).abs() < 1e-10 && (r2 - 0.02).abs() < 1e-10);
        assert!(theta_radii(0.02, 0.5, 1.0, 0.25).is_err());
        assert!(theta_radii(0.2, 1.05, 1.0, 0.25).is_err());
    }

    /// Hand-built Θ configuration: a symmetric pair at distance 2 rho with a
    /// ring of cloud points just outside r2 covering the annulus.
    fn theta_instance(with_ring: bool) -> (PointCloud, ThetaConfig) {
        let m = t2();
        let rho = 0.1f64;
        let r = rho;
        let lambda = 50.0; // xi = 0.02
        let cfg = ThetaConfig::from_rule(&m, r, lambda, 0.1).unwrap();
        let c = [0.5, 0.5];
        let mut pts = vec![vec![0.4, 0.5], vec![0.6, 0.5]];
        if with_ring {
            let ring_r = 0.1035; // in (r2, rho (1 + eps/2))
            for j in 0..64 {
                let a = j as f64 * 2.0 * std::f64::consts::PI / 64.0;
                pts.push(vec![c[0] + ring_r * a.cos(), c[1] + ring_r * a.sin()]);
            }
        }
        (PointCloud::from_points(m, &pts).unwrap(), cfg)
    }

    #[test]
    fn constructive_theta_cycle_detected() {
        let (cloud, cfg) = theta_instance(true);
        let (count, cycles) = count_theta_cycles(&cloud, 1, &cfg).unwrap();
        assert_eq!(count, 1, "expected exactly the hand-built cycle");
        assert_eq!(cycles[0].generators, vec![0, 1]);
        assert!((cycles[0].radius - 0.1).abs() < 1e-12);
        assert!((cycles[0].phi - 1.0).abs() < 1e-9);
        // Soundness: the uncovered edge creates a 1-cycle.
        let cx = build_complex(&cloud, cfg.r, 3).unwrap();
        assert!(theta_lower_bound_check(&cx, count, &t2(), 1).unwrap());
        let bv = betti_numbers(&cx).unwrap();
        assert!(bv.get(1) >= 1);
    }

    #[test]
    fn theta_cycle_needs_annulus_ring() {
        let (cloud, cfg) = theta_instance(false);
        let (count, _) = count_theta_cycles(&cloud, 1, &cfg).unwrap();
        assert_eq!(count, 0, "annulus certificate must fail without the ring");
    }

    #[test]
    fn empty_cloud_no_cycles() {
        let m = t2();
        let cfg = ThetaConfig::from_rule(&m, 0.05, 20.0, 0.1).unwrap();
        let cloud = PointCloud::from_points(m, &[]).unwrap();
        assert_eq!(count_theta_cycles(&cloud, 1, &cfg).unwrap().0, 0);
    }

    #[test]
    fn zero_count_always_sound() {
        let (cloud, cfg) = theta_instance(true);
        let cx = build_complex(&cloud, cfg.r, 3).unwrap();
        assert!(theta_lower_bound_check(&cx, 0, &t2(), 1).unwrap());
    }

    #[test]
    fn annulus_certificate_agrees_with_dense_sampling() {
        use rand::{Rng, SeedableRng};
        // Whenever the certificate passes, dense random sampling of the
        // annulus finds no point farther than rho from the cloud.
        let (cloud, cfg) = theta_instance(true);
        let m = t2();
        let c = [0.5, 0.5];
        let rho = 0.1;
        assert!(annulus_certificate(&cloud, &c, rho, cfg.epsilon));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for _ in 0..10_000 {
            let u = cfg.epsilon * rho + rng.gen::<f64>() * rho * (1.0 - cfg.epsilon);
            let a = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
            let p = m.exp_map(&c, &[u * a.cos(), u * a.sin()]);
            let nearest = cloud
                .iter_points()
                .map(|q| m.distance(&p, q))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= rho + 1e-12, "annulus point {nearest} beyond rho");
        }
    }
}
