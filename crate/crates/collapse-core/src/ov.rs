//! The Ooguri–Vafa gravitational instanton on D^× × T²: periodic-monopole
//! potential V_s, its semi-flat fiber average V^sf, the Kähler-potential
//! gradients that build the connection form γ_s, fiber metrics, and the
//! V_s ↔ V^sf comparison statistics.
//!
//! The potential is the renormalized sum over monopoles at heights s·n,
//!
//!   V_s(u) = (1/4π) Σ_{n≠0} [ 1/√(ρ² + (u₃−sn)²) − 1/(s|n|) ]
//!          + 1/(4π|u|) + a_s + h(u₁,u₂)/s ,      a_s = (γ − log 2s)/(2πs),
//!
//! with ρ² = u₁²+u₂². Sums are taken over symmetric pairs ±n up to `trunc_n`
//! and closed with Euler–Maclaurin tails, so the truncation error is far below
//! f64 noise for the parameter ranges used here.

use crate::geometry::ModelParams;
#[cfg_attr(test, allow(unused_imports))]
use crate::real::{F64Ext, EULER_GAMMA, GAUSS8, PI, TWO_PI};
use crate::{Error, Result};
use alloc::sync::Arc;
use alloc::vec::Vec;
use num_complex::Complex64;

/// Harmonic shift h(u₁,u₂) entering V_s as h/s. `Zero` is the standard model;
/// `Custom` carries the function together with (optionally) its harmonic
/// conjugate; when the conjugate is absent it is reconstructed by a line
/// integral from the origin.
#[derive(Clone)]
pub enum Harmonic {
    Zero,
    Custom {
        h: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        /// Harmonic conjugate h̃ with h̃(0,0)=0, if known in closed form.
        conj: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
    },
}

impl core::fmt::Debug for Harmonic {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Harmonic::Zero => write!(f, "Harmonic::Zero"),
            Harmonic::Custom { conj, .. } => {
                write!(f, "Harmonic::Custom{{conj: {}}}", conj.is_some())
            }
        }
    }
}

impl Harmonic {
    pub fn eval(&self, u1: f64, u2: f64) -> f64 {
        match self {
            Harmonic::Zero => 0.0,
            Harmonic::Custom { h, .. } => h(u1, u2),
        }
    }

    /// ∂h/∂u₁, ∂h/∂u₂ by central differences (exact zero for `Zero`).
    pub fn grad(&self, u1: f64, u2: f64) -> [f64; 2] {
        match self {
            Harmonic::Zero => [0.0, 0.0],
            Harmonic::Custom { h, .. } => {
                let d = 1e-5;
                [
                    (h(u1 + d, u2) - h(u1 - d, u2)) / (2.0 * d),
                    (h(u1, u2 + d) - h(u1, u2 - d)) / (2.0 * d),
                ]
            }
        }
    }

    /// Harmonic conjugate h̃(u₁,u₂), normalized by h̃(0,0)=0. Uses the closed
    /// form when supplied, otherwise integrates −h_{u₂}du₁ + h_{u₁}du₂ along
    /// the straight segment from the origin (the disc is simply connected).
    pub fn conjugate(&self, u1: f64, u2: f64) -> f64 {
        match self {
            Harmonic::Zero => 0.0,
            Harmonic::Custom { conj: Some(c), .. } => c(u1, u2),
            Harmonic::Custom { conj: None, .. } => {
                let mut acc = 0.0;
                for &(x, w) in GAUSS8.iter() {
                    let g = self.grad(x * u1, x * u2);
                    acc += w * (-g[1] * u1 + g[0] * u2);
                }
                acc
            }
        }
    }
}

/// Branch window for Im log y⁻¹ on the punctured disc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBranch {
    /// Im log y⁻¹ ∈ [0, 2π) — default.
    ZeroTwoPi,
    /// Im log y⁻¹ ∈ [π/2, 5π/2) — the window used while building the second
    /// holonomy cycle.
    HalfPiFiveHalfPi,
}

impl LogBranch {
    fn lower(self) -> f64 {
        match self {
            LogBranch::ZeroTwoPi => 0.0,
            LogBranch::HalfPiFiveHalfPi => 0.5 * PI,
        }
    }
}

/// Model data of one Ooguri–Vafa chart.
#[derive(Debug, Clone)]
pub struct OvModel {
    pub params: ModelParams,
    pub branch: LogBranch,
    pub h: Harmonic,
}

impl OvModel {
    pub fn new(params: ModelParams, h: Harmonic) -> Result<Self> {
        let model = Self { params, branch: LogBranch::ZeroTwoPi, h };
        model.check_harmonic_bound()?;
        Ok(model)
    }

    pub fn with_branch(mut self, branch: LogBranch) -> Self {
        self.branch = branch;
        self
    }

    /// The admissibility bound max|h| ≤ (1/10π) log δ₀⁻¹ over the chart,
    /// sampled on a grid (exact for `Zero`).
    fn check_harmonic_bound(&self) -> Result<()> {
        if matches!(self.h, Harmonic::Zero) {
            return Ok(());
        }
        let bound = (1.0 / (10.0 * PI)) * (1.0 / self.params.delta0).ln();
        let n = 48;
        for i in 0..=n {
            for j in 0..=n {
                let u1 = self.params.delta0 * (2.0 * i as f64 / n as f64 - 1.0);
                let u2 = self.params.delta0 * (2.0 * j as f64 / n as f64 - 1.0);
                if u1 * u1 + u2 * u2 > self.params.delta0 * self.params.delta0 {
                    continue;
                }
                if self.h.eval(u1, u2).abs() > bound {
                    return Err(Error::Domain("harmonic shift violates max|h| <= log(1/delta0)/(10 pi)"));
                }
            }
        }
        Ok(())
    }
}

/// a_s = (γ − log 2s) / 2πs: the renormalization constant fixing the fiber
/// average of V_s to the semi-flat value.
pub fn a_s(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain("a_s needs s > 0"));
    }
    Ok((EULER_GAMMA - (2.0 * s).ln()) / (TWO_PI * s))
}

/// Reduce u₃ to the symmetric window [−s/2, s/2).
fn reduce_u3(u3: f64, s: f64) -> f64 {
    let mut t = u3 - s * (u3 / s).round();
    if t >= s / 2.0 {
        t -= s;
    }
    if t < -s / 2.0 {
        t += s;
    }
    t
}

/// Euler–Maclaurin tails Σ_{n>N} n^{-3} and Σ_{n>N} n^{-5}.
fn zeta_tails(n: usize) -> (f64, f64) {
    let x = n as f64;
    let t3 = 1.0 / (2.0 * x * x) - 1.0 / (2.0 * x * x * x) + 1.0 / (4.0 * x.powi(4))
        - 1.0 / (12.0 * x.powi(6));
    let t5 = 1.0 / (4.0 * x.powi(4)) - 1.0 / (2.0 * x.powi(5)) + 5.0 / (12.0 * x.powi(6))
        - 7.0 / (24.0 * x.powi(8));
    (t3, t5)
}

/// The periodic-monopole potential V_s(u₁,u₂,u₃).
pub fn ov_potential(model: &OvModel, u1: f64, u2: f64, u3: f64) -> Result<f64> {
    let s = model.params.s;
    let rho2 = u1 * u1 + u2 * u2;
    let t3 = reduce_u3(u3, s);
    let r0 = (rho2 + t3 * t3).sqrt();
    if r0 < 1e-14 * s {
        return Err(Error::Singular("V_s evaluated at a monopole point"));
    }
    let n = model.params.trunc_n;
    let mut sum = 1.0 / r0;
    for j in 1..=n {
        let sj = s * j as f64;
        let rp = (rho2 + (t3 - sj) * (t3 - sj)).sqrt();
        let rm = (rho2 + (t3 + sj) * (t3 + sj)).sqrt();
        sum += 1.0 / rp + 1.0 / rm - 2.0 / sj;
    }
    let beta = t3 * t3 + rho2;
    let c3 = 2.0 * t3 * t3 - rho2;
    let c5 = 0.75 * beta * beta - 7.5 * t3 * t3 * beta + 8.75 * t3.powi(4);
    let (z3, z5) = zeta_tails(n);
    sum += c3 * z3 / s.powi(3) + c5 * z5 / s.powi(5);
    Ok(sum / (4.0 * PI) + a_s(s)? + model.h.eval(u1, u2) / s)
}

/// Semi-flat potential V^sf(y) = log|y|⁻¹/2πs + h/s (the fiber average of V_s).
pub fn ov_vsf(model: &OvModel, u1: f64, u2: f64) -> Result<f64> {
    let r = u1.hypot(u2);
    if r == 0.0 {
        return Err(Error::Singular("V^sf diverges at y = 0"));
    }
    if r >= 1.0 {
        return Err(Error::Domain("V^sf needs |y| < 1"));
    }
    Ok(((1.0 / r).ln() / TWO_PI + model.h.eval(u1, u2)) / model.params.s)
}

/// Gradient of the Kähler potential φ_s and the derived connection data at a
/// point of the chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSample {
    /// (∂φ/∂u₁, ∂φ/∂u₂, ∂φ/∂u₃).
    pub dphi: [f64; 3],
    /// |γ_f|²_g of the fiber part −V⁻¹φ_{u₁}(α/2π) − φ_{u₂}du₃.
    pub gamma_f_normsq: f64,
    /// |γ_⊥|²_g of the base part φ_{u₃}du₂.
    pub gamma_perp_normsq: f64,
    /// V_s at the point (the norm weights).
    pub v: f64,
}

/// ∂φ/∂u₃ as the paired monopole series; bounded by 1/2π and s-periodic, odd
/// in u₃, vanishing at u₃ ∈ {0, s/2}.
pub fn ov_dphi3(model: &OvModel, u1: f64, u2: f64, u3: f64) -> Result<f64> {
    let s = model.params.s;
    let rho2 = u1 * u1 + u2 * u2;
    let t3 = reduce_u3(u3, s);
    let r0 = (rho2 + t3 * t3).sqrt();
    if r0 < 1e-14 * s {
        return Err(Error::Singular("grad phi evaluated at a monopole point"));
    }
    let n = model.params.trunc_n;
    let mut sum = t3 / r0;
    for j in 1..=n {
        let sj = s * j as f64;
        let rp = (rho2 + (t3 - sj) * (t3 - sj)).sqrt();
        let rm = (rho2 + (t3 + sj) * (t3 + sj)).sqrt();
        sum += (t3 - sj) / rp + (t3 + sj) / rm;
    }
    let (z3, z5) = zeta_tails(n);
    let c3 = 2.0 * rho2 * t3;
    let c5 = 4.0 * rho2 * t3.powi(3) - 3.0 * rho2 * rho2 * t3;
    sum += c3 * z3 / s.powi(3) + c5 * z5 / s.powi(5);
    Ok(-sum / (4.0 * PI) + t3 / (TWO_PI * s))
}

/// Full gradient sample of φ_s, including the γ norms used by the tameness
/// conditions. The u₁-derivative is exactly −u₁V_s; the u₂-derivative carries
/// the harmonic-shift line integrals.
pub fn ov_phi_gradient(model: &OvModel, u1: f64, u2: f64, u3: f64) -> Result<GammaSample> {
    let s = model.params.s;
    let v = ov_potential(model, u1, u2, u3)?;
    let dphi1 = -u1 * v;
    let (i1, i2) = h_line_terms(model, u1, u2);
    let dphi2 = -u2 * (v - model.h.eval(u1, u2) / s + 1.0 / (TWO_PI * s)) - (i1 + i2) / s;
    let dphi3 = ov_dphi3(model, u1, u2, u3)?;
    let gamma_f_normsq = (dphi1 * dphi1 + dphi2 * dphi2) / v;
    let gamma_perp_normsq = dphi3 * dphi3 / v;
    Ok(GammaSample { dphi: [dphi1, dphi2, dphi3], gamma_f_normsq, gamma_perp_normsq, v })
}

/// The harmonic-shift line integrals (∫₀^{u₁} t ∂h/∂u₂(t,u₂) dt, ∫₀^{u₂} h(0,t) dt)
/// shared by the u₂-gradient and the holonomy function.
pub(crate) fn h_line_terms(model: &OvModel, u1: f64, u2: f64) -> (f64, f64) {
    if matches!(model.h, Harmonic::Zero) {
        return (0.0, 0.0);
    }
    let mut i1 = 0.0;
    let mut i2 = 0.0;
    for &(x, w) in GAUSS8.iter() {
        let t = x * u1;
        i1 += w * u1 * t * model.h.grad(t, u2)[1];
        i2 += w * u2 * model.h.eval(0.0, x * u2);
    }
    (i1, i2)
}

/// The complex period 𝒱(y) = (log y⁻¹)/2π + ĥ(y) with the branch window of the
/// model; Re 𝒱 = s·V^sf and Im 𝒱 feeds the fiber metric and the holonomy.
pub fn cal_v(model: &OvModel, u1: f64, u2: f64) -> Result<Complex64> {
    let r = u1.hypot(u2);
    if r == 0.0 {
        return Err(Error::Singular("period diverges at y = 0"));
    }
    let re = (1.0 / r).ln() / TWO_PI + model.h.eval(u1, u2);
    let phase = -u2.atan2(u1); // Im log y^{-1} before branch choice
    let lo = model.branch.lower();
    let width = TWO_PI;
    let wrapped = phase - width * ((phase - lo) / width).floor();
    let im = wrapped / TWO_PI + model.h.conjugate(u1, u2);
    Ok(Complex64::new(re, im))
}

/// Fiber metric in angle coordinates (θ₁, θ₂) of period 2π:
/// F = (V̄⁻¹/4π²) [[1, Im𝒱], [Im𝒱, |𝒱|²]], with V̄ either the pointwise V_s or
/// the fiber average V^sf.
pub fn fiber_theta_metric(vbar: f64, calv: Complex64) -> [[f64; 2]; 2] {
    let c = 1.0 / (vbar * TWO_PI * TWO_PI);
    [
        [c, c * calv.im],
        [c * calv.im, c * calv.norm_sqr()],
    ]
}

/// Metric sample in the orthogonal coframe {α/2π, du₁, du₂, du₃}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    /// Diagonal of the 4×4 Gram matrix in the coframe above: (V⁻¹, V, V, V).
    pub frame_diag: [f64; 4],
    /// Base block in (du₁, du₂).
    pub base: [[f64; 2]; 2],
    /// Fiber metric in angle coordinates, built from pointwise V_s.
    pub fiber_theta: [[f64; 2]; 2],
    /// Fiber metric in angle coordinates, built from V^sf (fiber average).
    pub fiber_theta_sf: [[f64; 2]; 2],
    /// det of the 4×4 tensor (= V_s²).
    pub det: f64,
    /// Length of the S¹ orbit through the point: V_s^{-1/2}.
    pub orbit_length: f64,
}

pub fn ov_metric(model: &OvModel, u1: f64, u2: f64, u3: f64) -> Result<MetricSample> {
    let v = ov_potential(model, u1, u2, u3)?;
    let vsf = ov_vsf(model, u1, u2)?;
    let calv = cal_v(model, u1, u2)?;
    Ok(MetricSample {
        frame_diag: [1.0 / v, v, v, v],
        base: [[v, 0.0], [0.0, v]],
        fiber_theta: fiber_theta_metric(v, calv),
        fiber_theta_sf: fiber_theta_metric(vsf, calv),
        det: v * v,
        orbit_length: 1.0 / v.sqrt(),
    })
}

/// Diameter of the fiber torus (θ ∈ ℝ²/2πℤ² with the constant metric F built
/// from V^sf): max over a fundamental grid of the distance to the lattice.
pub fn fiber_diameter(model: &OvModel, u1: f64, u2: f64) -> Result<f64> {
    let vsf = ov_vsf(model, u1, u2)?;
    let calv = cal_v(model, u1, u2)?;
    let f = fiber_theta_metric(vsf, calv);
    let norm = |a: f64, b: f64| (f[0][0] * a * a + 2.0 * f[0][1] * a * b + f[1][1] * b * b).sqrt();
    let n = 48;
    let mut diam: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let th1 = -PI + TWO_PI * (i as f64 + 0.5) / n as f64;
            let th2 = -PI + TWO_PI * (j as f64 + 0.5) / n as f64;
            let mut best = f64::INFINITY;
            for l1 in -1..=1 {
                for l2 in -1..=1 {
                    best = best.min(norm(th1 + TWO_PI * l1 as f64, th2 + TWO_PI * l2 as f64));
                }
            }
            diam = diam.max(best);
        }
    }
    Ok(diam)
}

/// Modified Bessel function K₀ by a two-branch evaluation: the standard power
/// series against I₀ below x = 9, the asymptotic series √(π/2x)e^{−x}Σ(−1)^j c_j/x^j
/// above. Relative accuracy is ~1e−12 away from the seam and ~1e−7 at worst
/// near it (the cancellation/min-term floor of the two expansions in f64); the
/// collapse statistics evaluate at x = 2πρ/s which sits well away from the seam
/// for every parameter set used here.
pub fn bessel_k0(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain("K0 needs x > 0"));
    }
    if x < 9.0 {
        let q = 0.25 * x * x;
        let mut i0 = 1.0;
        let mut term = 1.0;
        let mut sum = 0.0; // Σ q^m/(m!)² · H_m
        let mut harmonic = 0.0;
        for m in 1..60 {
            term *= q / ((m * m) as f64);
            harmonic += 1.0 / m as f64;
            i0 += term;
            sum += term * harmonic;
            if term < 1e-18 * i0 {
                break;
            }
        }
        Ok(-((0.5 * x).ln() + EULER_GAMMA) * i0 + sum)
    } else {
        let mut t = 1.0;
        let mut acc = 1.0;
        for j in 1..24 {
            let num = (2 * j - 1) as f64;
            t *= -(num * num) / (8.0 * j as f64 * x);
            let prev = acc;
            acc += t;
            if t.abs() < 1e-18 * prev.abs() {
                break;
            }
        }
        Ok((PI / (2.0 * x)).sqrt() * (-x).exp() * acc)
    }
}

/// V_s − V^sf by the Poisson resummation
///   V_s − V^sf = (1/πs) Σ_{j≥1} cos(2πj u₃/s) K₀(2πj|y|/s),
/// which resolves differences far below f64 cancellation of the direct sums.
pub fn ov_diff_bessel(model: &OvModel, u1: f64, u2: f64, u3: f64) -> Result<f64> {
    let s = model.params.s;
    let rho = u1.hypot(u2);
    if rho == 0.0 {
        return Err(Error::Singular("difference series needs |y| > 0"));
    }
    let x1 = TWO_PI * rho / s;
    let mut acc = 0.0;
    for j in 1..200 {
        let k = bessel_k0(x1 * j as f64)?;
        let term = (TWO_PI * j as f64 * u3 / s).cos() * k;
        acc += term;
        if k < 1e-22 * (1.0 + acc.abs()) {
            break;
        }
    }
    Ok(acc / (PI * s))
}

/// Comparison statistics between V_s and V^sf on the circle |y| = ρ, taken over
/// a u₃ grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareReport {
    /// s · e^{2πρ/s} · sup_{u₃} |V_s − V^sf| (computed via the K₀ series).
    pub scaled_sup_diff: f64,
    /// min over the fiber of V_s · 10πs / log ρ⁻¹ (≥ 1 when the positivity
    /// estimate holds).
    pub positivity_min: f64,
    /// max over the fiber of V_s / (V^sf + 1/2πρ) (≤ 1 under the upper bound).
    pub upper_max: f64,
    /// range of V_s / V^sf over the fiber.
    pub ratio_lo: f64,
    pub ratio_hi: f64,
}

pub fn ov_compare(model: &OvModel, u1: f64, u2: f64, n_fiber: usize) -> Result<CompareReport> {
    let s = model.params.s;
    let rho = u1.hypot(u2);
    let vsf = ov_vsf(model, u1, u2)?;
    let mut sup_diff: f64 = 0.0;
    let mut pos_min = f64::INFINITY;
    let mut up_max: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..n_fiber {
        let u3 = s * i as f64 / n_fiber as f64;
        let v = ov_potential(model, u1, u2, u3)?;
        let d = ov_diff_bessel(model, u1, u2, u3)?;
        sup_diff = sup_diff.max(d.abs());
        pos_min = pos_min.min(v * 10.0 * PI * s / (1.0 / rho).ln());
        up_max = up_max.max(v / (vsf + 1.0 / (TWO_PI * rho)));
        let r = v / vsf;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(CompareReport {
        scaled_sup_diff: s * (TWO_PI * rho / s).exp() * sup_diff,
        positivity_min: pos_min,
        upper_max: up_max,
        ratio_lo: lo,
        ratio_hi: hi,
    })
}

/// Deterministic evaluation grid on the fiber circle (used by tests and the CLI).
pub fn fiber_grid(s: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| s * i as f64 / n as f64).collect()
}
