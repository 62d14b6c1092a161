//! Base-chart bookkeeping and the collapse rescaling map.
//!
//! `chi` is the inverse of the radial profile τ ↦ τ² log τ⁻¹ / 2π on [0, 1/2];
//! `zeta_s` is the associated rescaling y ↦ √(log|y|⁻¹ / 2πs) · y that carries a
//! punctured disc onto the Gaussian-limit plane, with |y| = χ(s·‖ζ_s(y)‖²) as the
//! round trip.

// F64Ext goes unused when std's inherent f64 methods are in scope (tests).
#[cfg_attr(test, allow(unused_imports))]
use crate::real::{F64Ext, SplitMix64, PI, TWO_PI};
use crate::{Error, Result};
use num_complex::Complex64;

/// Upper end of the χ domain: (1/2)² · log 2 / 2π = log 2 / 8π.
pub fn chi_domain_max() -> f64 {
    0.25 * core::f64::consts::LN_2 / TWO_PI
}

const CHI_BISECT_ITERS: u32 = 80;

/// Parameters shared by every model in the laboratory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Fiber scale (area of the torus fibers is 2πs-normalized); s > 0.
    pub s: f64,
    /// Tensor power of the line bundle; k ≥ 1.
    pub k: u32,
    /// Bohr–Sommerfeld level under study; m ≥ 1.
    pub m: u32,
    /// Radius of the punctured-disc chart; 0 < δ₀ ≤ 1/2.
    pub delta0: f64,
    /// Symmetric truncation order of lattice sums; ≥ 2.
    pub trunc_n: usize,
    /// Generic iteration tolerance.
    pub tol: f64,
}

impl ModelParams {
    pub fn new(s: f64, k: u32, m: u32, delta0: f64, trunc_n: usize, tol: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain("s must be positive and finite"));
        }
        if k == 0 {
            return Err(Error::Domain("k must be >= 1"));
        }
        if m == 0 {
            return Err(Error::Domain("m must be >= 1"));
        }
        if !(delta0 > 0.0 && delta0 <= 0.5) {
            return Err(Error::Domain("delta0 must lie in (0, 1/2]"));
        }
        if trunc_n < 2 {
            return Err(Error::Domain("trunc_n must be >= 2"));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Domain("tol must be positive"));
        }
        Ok(Self { s, k, m, delta0, trunc_n, tol })
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { s: 0.05, k: 1, m: 1, delta0: 0.5, trunc_n: 2000, tol: 1e-10 }
    }
}

/// A point of the punctured-disc base chart, kept as the complex coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseChart {
    pub y: Complex64,
}

impl BaseChart {
    pub fn new(y: Complex64) -> Self {
        Self { y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self { y: Complex64::new(r * theta.cos(), r * theta.sin()) }
    }

    pub fn radius(&self) -> f64 {
        self.y.re.hypot(self.y.im)
    }

    /// Argument wrapped into [0, 2π).
    pub fn angle(&self) -> f64 {
        let mut t = self.y.im.atan2(self.y.re);
        if t < 0.0 {
            t += TWO_PI;
        }
        if t >= TWO_PI {
            t -= TWO_PI;
        }
        t
    }
}

/// Rescaled point of the Gaussian-limit plane, with the circle coordinate of the
/// unit bundle carried along.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPoint {
    /// Circle coordinate in [0, 2π).
    pub t: f64,
    /// Plane coordinate ξ.
    pub xi: [f64; 2],
}

impl LimitPoint {
    pub fn new(t: f64, xi: [f64; 2]) -> Self {
        let mut t = t % TWO_PI;
        if t < 0.0 {
            t += TWO_PI;
        }
        Self { t, xi }
    }

    pub fn radius(&self) -> f64 {
        self.xi[0].hypot(self.xi[1])
    }
}

/// Forward radial profile τ ↦ τ² log τ⁻¹ / 2π, the inverse of `chi`.
pub fn chi_forward(tau: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&tau) {
        return Err(Error::Domain("chi_forward takes tau in [0, 1/2]"));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    Ok(tau * tau * (1.0 / tau).ln() / TWO_PI)
}

/// χ: [0, log2/8π] → [0, 1/2], inverse of τ ↦ τ² log τ⁻¹/2π. Strictly increasing
/// on this window (the profile is monotone up to τ = e^{-1/2} > 1/2), solved by
/// bisection to machine precision.
pub fn chi(t: f64) -> Result<f64> {
    if !(0.0..=chi_domain_max() + 1e-15).contains(&t) {
        return Err(Error::Domain("chi takes t in [0, log2/(8 pi)]"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0_f64;
    let mut hi = 0.5_f64;
    for _ in 0..CHI_BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let f = mid * mid * (1.0 / mid).ln() / TWO_PI;
        if f < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Derivative χ′(t) = 2π / (2χ log χ⁻¹ − χ), for transporting radial error bars.
pub fn chi_prime(t: f64) -> Result<f64> {
    let c = chi(t)?;
    if c == 0.0 {
        return Err(Error::Singular("chi' blows up at t = 0"));
    }
    Ok(TWO_PI / (2.0 * c * (1.0 / c).ln() - c))
}

/// Rescaling map ζ_s(y) = √(log|y|⁻¹ / 2πs) · y, extended by ζ_s(0) = 0.
/// Requires |y| < 1 so the radial factor is real.
pub fn zeta_s(y: Complex64, s: f64) -> Result<[f64; 2]> {
    if !(s > 0.0) {
        return Err(Error::Domain("zeta_s needs s > 0"));
    }
    let r = y.re.hypot(y.im);
    if r == 0.0 {
        return Ok([0.0, 0.0]);
    }
    if r >= 1.0 {
        return Err(Error::Domain("zeta_s is defined on the open unit disc"));
    }
    let factor = ((1.0 / r).ln() / (TWO_PI * s)).sqrt();
    Ok([factor * y.re, factor * y.im])
}

/// Inverse radius: given ‖ζ_s(y)‖, recover |y| = χ(s‖ζ‖²). Valid while
/// s‖ζ‖² stays within the χ domain.
pub fn zeta_inverse_radius(xi_norm: f64, s: f64) -> Result<f64> {
    chi(s * xi_norm * xi_norm)
}

/// Scale σ_s = √( s(log s⁻¹ + log π) / 2π³ ) separating the near-singular core
/// from the annulus where the rescaling is metrically tame.
pub fn sigma_s(s: f64) -> Result<f64> {
    if !(0.0 < s && s < 1.0) {
        return Err(Error::Domain("sigma_s needs 0 < s < 1"));
    }
    Ok((s * ((1.0 / s).ln() + PI.ln()) / (2.0 * PI * PI * PI)).sqrt())
}

/// Deterministic sample of chart points in an annulus r ∈ [r_lo, r_hi), for
/// property tests and sweeps.
pub fn sample_annulus(seed: u64, n: usize, r_lo: f64, r_hi: f64) -> alloc::vec::Vec<BaseChart> {
    let mut rng = SplitMix64::new(seed);
    let mut out = alloc::vec::Vec::with_capacity(n);
    for _ in 0..n {
        // area-uniform radius
        let u = rng.next_f64();
        let r = (r_lo * r_lo + u * (r_hi * r_hi - r_lo * r_lo)).sqrt();
        let th = rng.range(0.0, TWO_PI);
        out.push(BaseChart::from_polar(r, th));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn chi_endpoints() {
        assert_eq!(chi(0.0).unwrap(), 0.0);
        let top = chi(chi_domain_max()).unwrap();
        assert!((top - 0.5).abs() < TOL, "chi at top of domain: {top}");
    }

    #[test]
    fn chi_inverts_forward_map() {
        for i in 1..200 {
            let tau = 0.5 * i as f64 / 200.0;
            let t = chi_forward(tau).unwrap();
            let back = chi(t).unwrap();
            assert!((back - tau).abs() < TOL, "tau={tau} back={back}");
        }
    }

    #[test]
    fn chi_monotone() {
        let mut prev = -1.0;
        for i in 0..=500 {
            let t = chi_domain_max() * i as f64 / 500.0;
            let c = chi(t).unwrap();
            assert!(c > prev, "chi not strictly increasing at t={t}");
            prev = c;
        }
    }

    #[test]
    fn chi_rejects_outside_domain() {
        assert!(chi(-1e-3).is_err());
        assert!(chi(chi_domain_max() + 1e-3).is_err());
    }

    #[test]
    fn zeta_fixes_origin_and_preserves_angle() {
        assert_eq!(zeta_s(Complex64::new(0.0, 0.0), 0.1).unwrap(), [0.0, 0.0]);
        for c in sample_annulus(11, 50, 1e-3, 0.9) {
            let xi = zeta_s(c.y, 0.07).unwrap();
            let ang_y = c.angle();
            let mut ang_xi = xi[1].atan2(xi[0]);
            if ang_xi < 0.0 {
                ang_xi += TWO_PI;
            }
            assert!((ang_y - ang_xi).abs() < 1e-10, "angle changed: {ang_y} vs {ang_xi}");
        }
    }

    #[test]
    fn zeta_round_trip_radius() {
        for c in sample_annulus(5, 80, 1e-3, 0.49) {
            let s = 0.05;
            let xi = zeta_s(c.y, s).unwrap();
            let r = zeta_inverse_radius(xi[0].hypot(xi[1]), s).unwrap();
            assert!((r - c.radius()).abs() < 1e-12, "round trip {r} vs {}", c.radius());
        }
    }

    #[test]
    fn zeta_at_special_scale_is_identity_on_real_axis() {
        // At s = log|y|^{-1}/(2π) the radial factor is exactly 1, so ζ_s fixes y.
        let y = Complex64::new(0.1, 0.0);
        let s = (10.0_f64).ln() / TWO_PI;
        let xi = zeta_s(y, s).unwrap();
        assert!((xi[0] - 0.1).abs() < 1e-15 && xi[1].abs() < 1e-15, "{xi:?}");
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.05, 1, 1, 0.5, 2000, 1e-10).is_ok());
        assert!(ModelParams::new(-0.05, 1, 1, 0.5, 2000, 1e-10).is_err());
        assert!(ModelParams::new(0.05, 0, 1, 0.5, 2000, 1e-10).is_err());
        assert!(ModelParams::new(0.05, 1, 0, 0.5, 2000, 1e-10).is_err());
        assert!(ModelParams::new(0.05, 1, 1, 0.6, 2000, 1e-10).is_err());
        assert!(ModelParams::new(0.05, 1, 1, 0.5, 1, 1e-10).is_err());
        assert!(ModelParams::new(0.05, 1, 1, 0.5, 2000, 0.0).is_err());
    }

    #[test]
    fn chart_angle_wraps() {
        let c = BaseChart::from_polar(0.3, -0.25);
        assert!((c.angle() - (TWO_PI - 0.25)).abs() < 1e-12);
        let d = BaseChart::from_polar(0.3, TWO_PI + 0.25);
        assert!((d.angle() - 0.25).abs() < 1e-12);
    }
}
