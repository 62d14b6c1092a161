//! Prequantum holonomy over the cycle basis e₁, e₂ and Bohr–Sommerfeld
//! enumeration.
//!
//! Over y = u₁+iu₂ the connection form γ integrates to ∫_{e₁}γ = u₁ and
//! ∫_{e₂}γ = 𝓗(u₁,u₂); a fiber lies in BS_k exactly when both action
//! coordinates (u₁+a₁, 𝓗+a₂) land in (1/k)ℤ. `holonomy_h` is the closed form,
//! `holonomy_h_line_integral` rebuilds the e₂ integral from pointwise potential
//! samples as an independent consistency check.

use crate::ov::{cal_v, h_line_terms, ov_potential, LogBranch, OvModel};
#[cfg_attr(test, allow(unused_imports))]
use crate::real::{F64Ext, GAUSS8, TWO_PI};
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use num_complex::Complex64;

/// Holonomy integrals of the prequantum connection over the cycle basis.
#[derive(Debug, Clone, Copy)]
pub struct HolonomyVector {
    /// ∫_{e₁,y} γ = u₁.
    pub x1: f64,
    /// ∫_{e₂,y} γ = 𝓗(u₁,u₂).
    pub x2: f64,
    /// Gauge offsets (a₁, a₂) of the chart.
    pub offsets: [f64; 2],
}

impl HolonomyVector {
    /// Action coordinates (x₁+a₁, x₂+a₂): the BS_k condition is that both lie
    /// in (1/k)ℤ.
    pub fn action(&self) -> [f64; 2] {
        [self.x1 + self.offsets[0], self.x2 + self.offsets[1]]
    }
}

/// Base location of a Bohr–Sommerfeld point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BsBase {
    /// Point y on the punctured-disc chart (y = 0 is the singular fiber).
    Disk(Complex64),
    /// Action-lattice point of the flat torus model.
    Lattice([f64; 2]),
}

/// A Bohr–Sommerfeld fiber: the holonomy of ∇^m is trivial exactly when
/// `level | m`; `strict` records membership in BS_k ∖ ⋃_{l<k} BS_l for the
/// query level k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BSPoint {
    pub base: BsBase,
    /// Smallest m ≥ 1 with trivial ∇^m-holonomy.
    pub level: u32,
    /// level == k for the k the point was enumerated at.
    pub strict: bool,
}

/// 𝓗(u₁,u₂) = −u₂ log r/2π + u₂/2π + ∫₀^{u₁} t ∂h/∂u₂(t,u₂) dt
/// + ∫₀^{u₂} h(0,t) dt + u₁·Im 𝒱(y), continuously extended by 𝓗(0,0) = 0.
///
/// Im 𝒱 follows the model's branch window; its jump locus carries the
/// prefactor u₁, so with the [π/2, 5π/2) window (cut at u₁ = 0, u₂ < 0) the
/// function is continuous on the whole chart.
pub fn holonomy_h(model: &OvModel, u1: f64, u2: f64) -> Result<f64> {
    let r = u1.hypot(u2);
    if r == 0.0 {
        return Ok(0.0);
    }
    if r >= model.params.delta0 {
        return Err(Error::Domain("holonomy point outside the chart"));
    }
    let (i1, i2) = h_line_terms(model, u1, u2);
    let mut h = -u2 * r.ln() / TWO_PI + u2 / TWO_PI + i1 + i2;
    if u1 != 0.0 {
        h += u1 * cal_v(model, u1, u2)?.im;
    }
    Ok(h)
}

/// Holonomy pair (∫_{e₁}γ, ∫_{e₂}γ) with gauge offsets attached.
pub fn holonomy_vector(model: &OvModel, u1: f64, u2: f64, offsets: [f64; 2]) -> Result<HolonomyVector> {
    Ok(HolonomyVector { x1: u1, x2: holonomy_h(model, u1, u2)?, offsets })
}

/// ∫_{e₂,y} γ rebuilt as an explicit line integral: the u₃-leg integrates
/// −∂φ/∂u₂ with the potential sampled pointwise (composite Gauss panels over
/// one period), and the closing fiber arc contributes u₁·Im 𝒱. Agreement with
/// `holonomy_h` checks the potential series against the exact fiber average
/// ∫₀^s V dt = −log r/2π + h.
pub fn holonomy_h_line_integral(model: &OvModel, u1: f64, u2: f64, panels: usize) -> Result<f64> {
    if panels == 0 {
        return Err(Error::Grid("need at least one quadrature panel"));
    }
    if u1 == 0.0 && u2 == 0.0 {
        return Ok(0.0);
    }
    let s = model.params.s;
    let hval = model.h.eval(u1, u2);
    let (i1, i2) = h_line_terms(model, u1, u2);
    let mut leg1 = 0.0;
    let width = s / panels as f64;
    for p in 0..panels {
        let lo = p as f64 * width;
        for &(x, w) in GAUSS8.iter() {
            let v = ov_potential(model, u1, u2, lo + x * width)?;
            // −φ_{u₂} = u₂(V − h/s + 1/2πs) + (i1+i2)/s
            leg1 += w * width * (u2 * (v - hval / s + 1.0 / (TWO_PI * s)) + (i1 + i2) / s);
        }
    }
    let leg2 = if u1 != 0.0 { u1 * cal_v(model, u1, u2)?.im } else { 0.0 };
    Ok(leg1 + leg2)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Strict level of the lattice point j/k: smallest m with m·j/k ∈ ℤ², i.e.
/// k / gcd(j₁, j₂, k).
fn lattice_level(j1: i64, j2: i64, k: u32) -> u32 {
    let g = gcd(gcd(j1.unsigned_abs(), j2.unsigned_abs()), k as u64);
    k / g as u32
}

/// All points of the shifted lattice ((1/k)ℤ² − a) in the half-open window
/// [lo₁,hi₁) × [lo₂,hi₂), with strict levels.
pub fn bs_points_semiflat(window: [[f64; 2]; 2], k: u32, offsets: [f64; 2]) -> Result<Vec<BSPoint>> {
    if k == 0 {
        return Err(Error::Domain("bs enumeration needs k >= 1"));
    }
    let kf = k as f64;
    let eps = 1e-9;
    // j/k − a ∈ [lo, hi)  ⇔  j ∈ [k(lo+a), k(hi+a))
    let axis = |lo: f64, hi: f64, a: f64| -> (i64, i64) {
        let jlo = (kf * (lo + a) - eps).ceil() as i64;
        let jhi = (kf * (hi + a) - eps).ceil() as i64 - 1;
        (jlo, jhi)
    };
    let (j1lo, j1hi) = axis(window[0][0], window[0][1], offsets[0]);
    let (j2lo, j2hi) = axis(window[1][0], window[1][1], offsets[1]);
    let mut out = Vec::new();
    for j1 in j1lo..=j1hi {
        for j2 in j2lo..=j2hi {
            let level = lattice_level(j1, j2, k);
            out.push(BSPoint {
                base: BsBase::Lattice([j1 as f64 / kf - offsets[0], j2 as f64 / kf - offsets[1]]),
                level,
                strict: level == k,
            });
        }
    }
    Ok(out)
}

/// Bohr–Sommerfeld points of the disc chart: solves u₁+a₁ ∈ (1/k)ℤ and
/// 𝓗(u₁,u₂)+a₂ ∈ (1/k)ℤ by bracketed bisection along the u₁-slices, plus the
/// singular fiber y = 0 exactly when (a₁,a₂) ∈ (1/k)ℤ².
///
/// The slice scan runs on the [π/2, 5π/2) branch window so 𝓗 is continuous
/// across u₂ = 0 on every slice (the model's own branch only relabels 𝓗 by
/// u₁·ℤ, which moves membership only when a₁ ∉ (1/k)ℤ; reports should flag
/// that case).
pub fn bs_points_ov(model: &OvModel, k: u32, offsets: [f64; 2]) -> Result<Vec<BSPoint>> {
    if k == 0 {
        return Err(Error::Domain("bs enumeration needs k >= 1"));
    }
    let search = model.clone().with_branch(LogBranch::HalfPiFiveHalfPi);
    let kf = k as f64;
    let d0 = search.params.delta0;
    let tol = search.params.tol;
    let [a1, a2] = offsets;
    let mut out = Vec::new();

    // Singular fiber: 0 ∈ BS_k iff both offsets are k-th fractions.
    let frac = |x: f64| (x * kf - (x * kf).round()).abs();
    if frac(a1) < tol && frac(a2) < tol {
        let j1 = (a1 * kf).round() as i64;
        let j2 = (a2 * kf).round() as i64;
        let level = lattice_level(j1, j2, k);
        out.push(BSPoint { base: BsBase::Disk(Complex64::new(0.0, 0.0)), level, strict: level == k });
    }

    let j1lo = ((a1 - d0) * kf).floor() as i64 + 1;
    let j1hi = ((a1 + d0) * kf).ceil() as i64 - 1;
    for j1 in j1lo..=j1hi {
        let u1 = j1 as f64 / kf - a1;
        if u1.abs() >= d0 {
            continue;
        }
        // stay off the chart boundary; 𝓗 needs r < δ₀
        let half = (d0 * d0 - u1 * u1).sqrt() * 0.98;
        if half <= 0.0 {
            continue;
        }
        let n = 400.max(64 * k as usize);
        let mut us = Vec::with_capacity(n + 1);
        let mut hs = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let u2 = -half + 2.0 * half * i as f64 / n as f64;
            us.push(u2);
            hs.push(holonomy_h(&search, u1, u2)?);
        }
        for i in 0..n {
            let (fa, fb) = (hs[i] + a2, hs[i + 1] + a2);
            let lo = kf * fa.min(fb);
            let hi = kf * fa.max(fb);
            let mut j2 = lo.ceil() as i64;
            while (j2 as f64) <= hi {
                let target = j2 as f64 / kf - a2;
                if let Some(root) = bisect_root(&search, u1, us[i], us[i + 1], target, tol)? {
                    // the singular fiber is handled above; skip its numeric shadow
                    if u1 != 0.0 || root.abs() > 1e-8 {
                        let level = lattice_level(j1, j2, k);
                        out.push(BSPoint {
                            base: BsBase::Disk(Complex64::new(u1, root)),
                            level,
                            strict: level == k,
                        });
                    }
                }
                j2 += 1;
            }
        }
    }

    dedupe_and_check_isolation(&mut out, tol)?;
    Ok(out)
}

/// Bracketed bisection + secant polish for 𝓗(u₁,·) = target on [ua, ub].
/// Returns None when the bracket only grazes the target (no sign change).
fn bisect_root(model: &OvModel, u1: f64, ua: f64, ub: f64, target: f64, tol: f64) -> Result<Option<f64>> {
    let f = |u2: f64| -> Result<f64> { Ok(holonomy_h(model, u1, u2)? - target) };
    let (mut a, mut b) = (ua, ub);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(Some(a));
    }
    if fb == 0.0 {
        return Ok(Some(b));
    }
    if fa * fb > 0.0 {
        return Ok(None);
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(Some(m));
        }
        if fa * fm < 0.0 {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    // secant polish inside the final bracket
    let mut root = (a * fb - b * fa) / (fb - fa);
    for _ in 0..3 {
        let fr = f(root)?;
        if fr == 0.0 {
            break;
        }
        if fa * fr < 0.0 {
            b = root;
            fb = fr;
        } else {
            a = root;
            fa = fr;
        }
        if fb == fa {
            break;
        }
        root = (a * fb - b * fa) / (fb - fa);
    }
    if f(root)?.abs() < tol {
        Ok(Some(root))
    } else {
        Err(Error::NonConvergence("bs root residual above tolerance"))
    }
}

/// Drop numerically-duplicate roots, then verify returned points are
/// pairwise isolated; sort by base coordinate for deterministic output.
fn dedupe_and_check_isolation(points: &mut Vec<BSPoint>, tol: f64) -> Result<()> {
    let key = |p: &BSPoint| -> (f64, f64) {
        match p.base {
            BsBase::Disk(y) => (y.re, y.im),
            BsBase::Lattice(x) => (x[0], x[1]),
        }
    };
    points.sort_by(|p, q| {
        let (a, b) = (key(p), key(q));
        a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
    });
    let mut i = 1;
    while i < points.len() {
        let (p, q) = (key(&points[i - 1]), key(&points[i]));
        let d = (p.0 - q.0).hypot(p.1 - q.1);
        if d < 1e-12 {
            points.remove(i);
        } else {
            i += 1;
        }
    }
    for i in 1..points.len() {
        for j in 0..i {
            let (p, q) = (key(&points[i]), key(&points[j]));
            if (p.0 - q.0).hypot(p.1 - q.1) < tol {
                return Err(Error::NonConvergence("bs roots are not isolated at tol"));
            }
        }
    }
    Ok(())
}

/// Partition a BS_k list by strict level; every level must divide k.
pub fn bs_level_decompose(points: &[BSPoint], k: u32) -> Result<BTreeMap<u32, Vec<BSPoint>>> {
    let mut map: BTreeMap<u32, Vec<BSPoint>> = BTreeMap::new();
    for p in points {
        if p.level == 0 || k % p.level != 0 {
            return Err(Error::Domain("bs point level does not divide k"));
        }
        map.entry(p.level).or_default().push(*p);
    }
    Ok(map)
}
