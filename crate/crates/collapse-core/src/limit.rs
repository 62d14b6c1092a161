//! The limit spaces 𝕊_{0,m} and the Gaussian-space spectral structure.
//!
//! The model operator on ℝ² is Δ^k f = −(f_{ξ₁ξ₁}+f_{ξ₂ξ₂}) + 2k(ξ₁f_{ξ₁}+ξ₂f_{ξ₂}),
//! self-adjoint on L² with weight e^{−k‖ξ‖²}; its spectrum is {2k(n₁+n₂)} with
//! multiplicity n₁+n₂+1. The circle-bundle reduction rule sends the ρ_k-isotypic
//! spectrum of 𝕊_{0,m} to that structure shifted by k²+2k when m | k, and to
//! the zero space otherwise.

use crate::geometry::LimitPoint;
use crate::graph::Graph;
#[cfg_attr(test, allow(unused_imports))]
use crate::real::{F64Ext, GAUSS8, TWO_PI};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};
use alloc::vec::Vec;

/// Symmetrized 1D discretization of −f″ + 2kξf′ on [−6/√k, 6/√k] with
/// Dirichlet truncation: interior nodes ξ_i = −L + (i+1)h, flux weights
/// w = e^{−kξ²} at half-nodes, then the similarity transform u = √w·f makes it
/// a plain symmetric tridiagonal. Weight ratios are taken as exponentials of
/// differences so nothing underflows.
pub fn gaussian_operator_1d(k: u32, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 {
        return Err(Error::Domain("gaussian operator needs k >= 1"));
    }
    if n < 3 {
        return Err(Error::Grid("need at least 3 interior nodes"));
    }
    let kf = k as f64;
    let l = 6.0 / kf.sqrt();
    let h = 2.0 * l / (n as f64 + 1.0);
    let xi = |i: usize| -l + (i as f64 + 1.0) * h;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n - 1);
    for i in 0..n {
        let x = xi(i);
        let xm = x - 0.5 * h;
        let xp = x + 0.5 * h;
        // w(x±h/2)/w(x) = exp(−k(x±h/2)² + kx²)
        let rm = (-kf * (xm * xm - x * x)).exp();
        let rp = (-kf * (xp * xp - x * x)).exp();
        diag.push((rm + rp) / (h * h));
        if i + 1 < n {
            let xn = xi(i + 1);
            // w(x+h/2)/√(w(x)w(x+h)) = exp(−k(x+h/2)² + k(x²+xn²)/2)
            let r = (-kf * (xp * xp - 0.5 * (x * x + xn * xn))).exp();
            off.push(-r / (h * h));
        }
    }
    Ok((diag, off))
}

/// 2D operator as the Kronecker sum B⊗I + I⊗B of the symmetrized 1D matrix,
/// in CSR form; dimension n².
pub fn gaussian_operator(k: u32, n: usize) -> Result<CsrMatrix> {
    let (diag, off) = gaussian_operator_1d(k, n)?;
    let dim = n * n;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(5 * dim);
    let at = |i: usize, j: usize| i * n + j;
    for i in 0..n {
        for j in 0..n {
            let r = at(i, j);
            triplets.push((r, r, diag[i] + diag[j]));
            if i + 1 < n {
                triplets.push((r, at(i + 1, j), off[i]));
                triplets.push((at(i + 1, j), r, off[i]));
            }
            if j + 1 < n {
                triplets.push((r, at(i, j + 1), off[j]));
                triplets.push((at(i, j + 1), r, off[j]));
            }
        }
    }
    CsrMatrix::from_triplets(dim, &triplets)
}

/// First `count` exact eigenvalues {2k(n₁+n₂)} of the continuum operator,
/// ascending with multiplicity n₁+n₂+1.
pub fn gaussian_spectrum_exact(k: u32, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut level = 0u32;
    while out.len() < count {
        for _ in 0..=level {
            if out.len() == count {
                break;
            }
            out.push(2.0 * k as f64 * level as f64);
        }
        level += 1;
    }
    out
}

/// Which model space a reduced spectral structure lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    /// The zero space: no ρ_k-isotypic functions at all.
    Zero,
    /// The weighted Gaussian space on ℝ² at power k.
    Gaussian { k: u32 },
}

/// A spectral structure with affine tags: the pair (a₁, a₂) denotes
/// a₁·Σ + a₂ acting on the underlying space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralStructure {
    pub kind: StructureKind,
    pub a1: f64,
    pub a2: f64,
}

impl SpectralStructure {
    pub fn zero() -> Self {
        Self { kind: StructureKind::Zero, a1: 1.0, a2: 0.0 }
    }

    /// b₁·(self) + b₂; tags compose affinely and a₁ stays positive.
    pub fn rescale(self, b1: f64, b2: f64) -> Result<Self> {
        if !(b1 > 0.0) {
            return Err(Error::Domain("spectral scale must be positive"));
        }
        Ok(Self { kind: self.kind, a1: b1 * self.a1, a2: b1 * self.a2 + b2 })
    }

    /// Exact low spectrum of the tagged structure, with multiplicity.
    pub fn low_spectrum(&self, count: usize) -> Vec<f64> {
        match self.kind {
            StructureKind::Zero => Vec::new(),
            StructureKind::Gaussian { k } => gaussian_spectrum_exact(k, count)
                .into_iter()
                .map(|x| self.a1 * x + self.a2)
                .collect(),
        }
    }
}

/// Isotypic reduction rule on the limit space 𝕊_{0,m}: the ρ_k part vanishes
/// unless m | k, and otherwise equals the Gaussian structure shifted by k²+2k.
pub fn rho_k_structure(m: u32, k: u32) -> Result<SpectralStructure> {
    if m == 0 || k == 0 {
        return Err(Error::Domain("rho_k structure needs m, k >= 1"));
    }
    if k % m != 0 {
        return Ok(SpectralStructure::zero());
    }
    let kf = k as f64;
    Ok(SpectralStructure {
        kind: StructureKind::Gaussian { k },
        a1: 1.0,
        a2: kf * kf + 2.0 * kf,
    })
}

/// Eigenvalue table with solver diagnostics, ready for artifact export.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub threshold: f64,
    pub count_below: usize,
}

impl SpectrumResult {
    pub fn new(eigenvalues: Vec<f64>, residuals: Vec<f64>, threshold: f64) -> Self {
        let count_below = eigenvalues.iter().filter(|&&x| x < threshold).count();
        Self { eigenvalues, residuals, threshold, count_below }
    }
}

/// Geodesic-distance estimate on (S¹×ℝ², ĝ_{0,m}) with
/// ĝ_{0,m} = dt²/(m²(1+‖ξ‖²)) + dξ², by Dijkstra on a product grid with a
/// 26-neighbour stencil and Gauss-quadrature edge lengths.
#[derive(Debug, Clone, Copy)]
pub struct DistanceReport {
    pub distance: f64,
    /// Conservative bound on the overestimate: stencil-direction defect plus
    /// endpoint snapping.
    pub error_bound: f64,
}

pub fn limit_distance(u0: &LimitPoint, u1: &LimitPoint, m: u32, n_base: usize) -> Result<DistanceReport> {
    if m == 0 {
        return Err(Error::Domain("limit metric needs m >= 1"));
    }
    if n_base < 8 {
        return Err(Error::Grid("base grid too coarse"));
    }
    let mf = m as f64;
    // bounding box with unit margin; detours beyond it never pay (the fiber
    // factor 1/√(1+‖ξ‖²) saves < 2·excursion)
    let lo = [
        u0.xi[0].min(u1.xi[0]) - 1.0,
        u0.xi[1].min(u1.xi[1]) - 1.0,
    ];
    let hi = [
        u0.xi[0].max(u1.xi[0]) + 1.0,
        u0.xi[1].max(u1.xi[1]) + 1.0,
    ];
    let nx = n_base;
    let h = [
        (hi[0] - lo[0]) / (nx as f64 - 1.0),
        (hi[1] - lo[1]) / (nx as f64 - 1.0),
    ];
    // fiber resolution matched to the base step at the smallest fiber radius
    let hmax = h[0].max(h[1]);
    let mut nt = (TWO_PI / (mf * hmax)).ceil() as usize;
    nt = nt.clamp(8, 192);
    if nt % 2 == 1 {
        nt += 1;
    }
    let node = |it: usize, ix: usize, iy: usize| (it * nx + ix) * nx + iy;
    let xi_of = |ix: usize, iy: usize| [lo[0] + ix as f64 * h[0], lo[1] + iy as f64 * h[1]];
    let t_of = |it: usize| TWO_PI * it as f64 / nt as f64;

    let seg_len = |t_a: f64, xi_a: [f64; 2], t_b: f64, xi_b: [f64; 2]| -> f64 {
        // straight segment in (t, ξ); dt wrapped to the short way
        let mut dt = t_b - t_a;
        if dt > core::f64::consts::PI {
            dt -= TWO_PI;
        }
        if dt < -core::f64::consts::PI {
            dt += TWO_PI;
        }
        let dxi = [xi_b[0] - xi_a[0], xi_b[1] - xi_a[1]];
        let mut acc = 0.0;
        for &(x, w) in GAUSS8.iter() {
            let xi = [xi_a[0] + x * dxi[0], xi_a[1] + x * dxi[1]];
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            let speed2 = dt * dt / (mf * mf * (1.0 + r2)) + dxi[0] * dxi[0] + dxi[1] * dxi[1];
            acc += w * speed2.sqrt();
        }
        acc
    };

    let mut g = Graph::new(nt * nx * nx);
    for it in 0..nt {
        for ix in 0..nx {
            for iy in 0..nx {
                let a = node(it, ix, iy);
                let (ta, xia) = (t_of(it), xi_of(ix, iy));
                // undirected edges: enumerate the forward half of the stencil
                for &(dt, dx, dy) in STENCIL_HALF.iter() {
                    let jt = (it as isize + dt).rem_euclid(nt as isize) as usize;
                    let jx = ix as isize + dx;
                    let jy = iy as isize + dy;
                    if jx < 0 || jy < 0 || jx >= nx as isize || jy >= nx as isize {
                        continue;
                    }
                    let b = node(jt, jx as usize, jy as usize);
                    let w = seg_len(ta, xia, t_of(jt), xi_of(jx as usize, jy as usize));
                    g.add_edge(a, b, w);
                }
            }
        }
    }

    let snap = |p: &LimitPoint| -> Result<(usize, f64)> {
        let wrap = p.t - TWO_PI * (p.t / TWO_PI).floor();
        let it = ((wrap / TWO_PI * nt as f64).round() as usize) % nt;
        let fx = (p.xi[0] - lo[0]) / h[0];
        let fy = (p.xi[1] - lo[1]) / h[1];
        let ix = fx.round() as isize;
        let iy = fy.round() as isize;
        if ix < 0 || iy < 0 || ix >= nx as isize || iy >= nx as isize {
            return Err(Error::Grid("point escapes the distance grid"));
        }
        let (ix, iy) = (ix as usize, iy as usize);
        // snapping cost: fiber arc at this radius plus base offset
        let xi = xi_of(ix, iy);
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        let dt_err = (wrap - t_of(it)).abs().min(TWO_PI - (wrap - t_of(it)).abs());
        let snap_err = dt_err / (mf * (1.0 + r2).sqrt())
            + ((fx - ix as f64) * h[0]).hypot((fy - iy as f64) * h[1]);
        Ok((node(it, ix, iy), snap_err))
    };
    let (src, e0) = snap(u0)?;
    let (dst, e1) = snap(u1)?;
    let distance = g.dijkstra(src)[dst];
    if !distance.is_finite() {
        return Err(Error::Grid("grid disconnected"));
    }
    // 26-stencil worst direction misses by ≤ 1/cos(π/8) − 1 ≈ 8.24 %
    let error_bound = 0.0824 * distance + e0 + e1;
    Ok(DistanceReport { distance, error_bound })
}

/// Forward half of the 26-neighbour stencil on the (t, ξ₁, ξ₂) product grid.
const STENCIL_HALF: [(isize, isize, isize); 13] = [
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (0, 1, 1),
    (0, 1, -1),
    (1, 1, 0),
    (1, -1, 0),
    (1, 0, 1),
    (1, 0, -1),
    (1, 1, 1),
    (1, 1, -1),
    (1, -1, 1),
    (1, -1, -1),
];
