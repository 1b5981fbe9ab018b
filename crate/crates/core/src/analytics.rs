//! Closed-form reference quantities: the density parameter, threshold
//! radii, the incomplete-gamma critical-point envelope, and expected-Betti
//! envelopes with user-supplied constants.

use crate::error::{Error, Result};
use crate::manifold::unit_ball_volume;

/// The experiment regime: intensity, radius, dimension, volume, and the
/// derived density parameter.
#[derive(Debug, Clone, Copy)]
pub struct RegimeParams {
    pub n: f64,
    pub r: f64,
    pub d: usize,
    pub vol: f64,
    pub lambda_val: f64,
    pub w: f64,
}

impl RegimeParams {
    pub fn new(n: f64, r: f64, d: usize, vol: f64, w: f64) -> Result<Self> {
        let lambda_val = lambda_of(n, r, d, vol)?;
        if lambda_val <= 0.0 {
            return Err(Error::InvalidInput(format!("lambda {lambda_val} must be positive")));
        }
        Ok(RegimeParams { n, r, d, vol, lambda_val, w })
    }

    /// The stored value must reproduce from its inputs.
    pub fn consistent(&self) -> bool {
        match lambda_of(self.n, self.r, self.d, self.vol) {
            Ok(l) => (l - self.lambda_val).abs() <= 1e-12 * self.lambda_val.abs(),
            Err(_) => false,
        }
    }
}

/// Density parameter `n omega_d r^d / vol`.
pub fn lambda_of(n: f64, r: f64, d: usize, vol: f64) -> Result<f64> {
    if !(n > 0.0) || !(vol > 0.0) || d == 0 || r < 0.0 {
        return Err(Error::InvalidInput(format!(
            "lambda_of needs n > 0, vol > 0, d >= 1, r >= 0; got n={n} r={r} d={d} vol={vol}"
        )));
    }
    Ok(n * unit_ball_volume(d) * r.powi(d as i32) / vol)
}

/// Solves `n omega_d r^d / vol = log n + k log log n + offset` for r.
/// `k` may be negative (the lower branch of the threshold).
pub fn threshold_radius(n: f64, k: i64, offset: f64, d: usize, vol: f64) -> Result<f64> {
    if n <= std::f64::consts::E {
        return Err(Error::InvalidInput(format!("n = {n} must exceed e for log log n")));
    }
    if !(vol > 0.0) || d == 0 {
        return Err(Error::InvalidInput(format!("vol {vol} and d {d} must be positive")));
    }
    let target = n.ln() + k as f64 * n.ln().ln() + offset;
    if target <= 0.0 {
        return Err(Error::OutOfRegime(format!("target lambda {target} <= 0")));
    }
    Ok((target * vol / (n * unit_ball_volume(d))).powf(1.0 / d as f64))
}

/// Critical-point envelope between two density levels:
/// `n (e^-L sum_(j<k) L^j/j! - e^-L0 sum_(j<k) L0^j/j!)`, the analytic
/// bound shape up to its unnamed constant. `lambda_r0` may be infinite.
pub fn crit_envelope(n: f64, lambda_r: f64, lambda_r0: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("envelope defined for k >= 1".into()));
    }
    if !(lambda_r > 0.0) || lambda_r > lambda_r0 {
        return Err(Error::InvalidInput(format!(
            "need 0 < lambda_r <= lambda_r0, got {lambda_r} vs {lambda_r0}"
        )));
    }
    let tail = |lam: f64| -> f64 {
        if lam.is_infinite() {
            return 0.0;
        }
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for j in 1..k {
            term *= lam / j as f64;
            sum += term;
        }
        (-lam).exp() * sum
    };
    Ok(n * (tail(lambda_r) - tail(lambda_r0)))
}

/// Expected-Betti envelope with user-supplied constants:
/// `(a_k n L^(k-2) e^-L, beta_k(M) + b_k n L^k e^-L)`. Diagnostic only; the
/// underlying constants are non-effective.
pub fn betti_envelope(
    n: f64,
    lambda_val: f64,
    k: usize,
    a_k: f64,
    b_k: f64,
    beta_k_manifold: usize,
) -> (f64, f64) {
    let lower = a_k * n * lambda_val.powi(k as i32 - 2) * (-lambda_val).exp();
    let upper =
        beta_k_manifold as f64 + b_k * n * lambda_val.powi(k as i32) * (-lambda_val).exp();
    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes_exact() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_examples() {
        let l = lambda_of(1e4, 0.019075, 2, 1.0).unwrap();
        assert!((l - 11.43).abs() < 0.01);
        assert_eq!(lambda_of(100.0, 0.0, 2, 1.0).unwrap(), 0.0);
        let l = lambda_of(100.0, 0.01, 1, 1.0).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
        assert!(lambda_of(-1.0, 0.1, 2, 1.0).is_err());
        assert!(lambda_of(10.0, 0.1, 2, 0.0).is_err());
    }

    #[test]
    fn threshold_radius_examples() {
        let n = 1e4f64;
        let r = threshold_radius(n, 1, 0.0, 2, 1.0).unwrap();
        assert!((r - 0.019075).abs() < 1e-5);
        // Round trip through lambda_of recovers the target.
        let target = n.ln() + n.ln().ln();
        let l = lambda_of(n, r, 2, 1.0).unwrap();
        assert!((l - target).abs() <= 1e-10 * target);
        // k = 0 with zero offset is the bare log n threshold.
        let r0 = threshold_radius(n, 0, 0.0, 2, 1.0).unwrap();
        assert!((r0 - (n.ln() / (n * std::f64::consts::PI)).sqrt()).abs() < 1e-12);
        // Lower branches shrink the radius monotonically.
        let r_low = threshold_radius(n, -1, -5.0, 2, 1.0).unwrap();
        assert!(r_low < r0 && r0 < r);
        assert!(threshold_radius(2.0, 1, 0.0, 2, 1.0).is_err());
        assert!(threshold_radius(n, -1, -20.0, 2, 1.0).is_err());
    }

    #[test]
    fn crit_envelope_examples() {
        let v = crit_envelope(1.0, 2.0, f64::INFINITY, 1).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-12);
        assert_eq!(crit_envelope(10.0, 5.0, 5.0, 2).unwrap(), 0.0);
        let v = crit_envelope(1.0, 5.0, 20.0, 2).unwrap();
        let expect = (-5.0f64).exp() * 6.0 - (-20.0f64).exp() * 21.0;
        assert!((v - expect).abs() < 1e-12);
        assert!(crit_envelope(1.0, 10.0, 5.0, 1).is_err());
        assert!(crit_envelope(1.0, 1.0, 2.0, 0).is_err());
    }

    #[test]
    fn crit_envelope_decreasing_in_lambda() {
        for k in 1..=3usize {
            let mut prev = f64::INFINITY;
            for i in 1..=40 {
                let lam = i as f64;
                let v = crit_envelope(1e4, lam, 50.0, k).unwrap();
                assert!(v >= 0.0);
                assert!(v <= prev, "envelope not decreasing at lambda {lam}, k {k}");
                prev = v;
            }
        }
    }

    #[test]
    fn betti_envelope_examples() {
        let (lo, hi) = betti_envelope(1e4, 10.0, 1, 1.0, 1.0, 2);
        assert!((lo - 1e4 * 0.1 * (-10.0f64).exp()).abs() < 1e-12);
        assert!((hi - (2.0 + 1e4 * 10.0 * (-10.0f64).exp())).abs() < 1e-10);
        assert!((lo - 0.0454).abs() < 1e-4);
        assert!((hi - 6.54).abs() < 0.01);
        // Large lambda collapses to (0, beta_k(M)).
        let (lo, hi) = betti_envelope(1e4, 500.0, 1, 1.0, 1.0, 2);
        assert!(lo < 1e-100 && (hi - 2.0).abs() < 1e-100);
        // k = 2 lower bound carries the Lambda^0 factor.
        let (lo, _) = betti_envelope(10.0, 3.0, 2, 1.0, 1.0, 1);
        assert!((lo - 10.0 * (-3.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn regime_params_consistency() {
        let p = RegimeParams::new(1000.0, 0.05, 2, 1.0, 3.0).unwrap();
        assert!(p.consistent());
        assert!(RegimeParams::new(1000.0, 0.0, 2, 1.0, 0.0).is_err());
    }
}
