//! Semi-flat Kähler data over a lattice family: the fiberwise-flat form
//!
//!   η = (i/2) [ W (dx + b dy) ∧ (dx̄ + b̄ dȳ) + W⁻¹ dy ∧ dȳ ],
//!
//! with W = s / Im(τ̄₁τ₂) and
//!   b = −(W/s) [ Im(τ₂ x̄) ∂τ₁/∂y + Im(τ̄₁ x) ∂τ₂/∂y ],
//! where x is the fiber coordinate on ℂ/(ℤτ₁ + ℤτ₂). Fibers have area s·(2π)⁰
//! in the x-normalization used here; fiber metrics scale linearly in s.

use crate::ov::LogBranch;
#[cfg_attr(test, allow(unused_imports))]
use crate::real::{F64Ext, TWO_PI};
use crate::{Error, Result};
use alloc::sync::Arc;
use num_complex::Complex64;

/// One period of the lattice family, as a function of the base coordinate.
#[derive(Clone)]
pub enum Tau {
    Const(Complex64),
    /// τ(y) = (1/2πi) log y (+ branch choice): the monodromy-log family of the
    /// Ooguri–Vafa chart. Derivative 1/(2πi y).
    Log(LogBranch),
    Custom(Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>),
}

impl core::fmt::Debug for Tau {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Tau::Const(c) => write!(f, "Tau::Const({c})"),
            Tau::Log(b) => write!(f, "Tau::Log({b:?})"),
            Tau::Custom(_) => write!(f, "Tau::Custom"),
        }
    }
}

fn branch_log_inv(y: Complex64, branch: LogBranch) -> Result<Complex64> {
    let r = y.re.hypot(y.im);
    if r == 0.0 {
        return Err(Error::Singular("log branch undefined at y = 0"));
    }
    let lo = match branch {
        LogBranch::ZeroTwoPi => 0.0,
        LogBranch::HalfPiFiveHalfPi => 0.5 * core::f64::consts::PI,
    };
    let phase = -y.im.atan2(y.re);
    let wrapped = phase - TWO_PI * ((phase - lo) / TWO_PI).floor();
    Ok(Complex64::new((1.0 / r).ln(), wrapped))
}

impl Tau {
    pub fn eval(&self, y: Complex64) -> Result<Complex64> {
        match self {
            Tau::Const(c) => Ok(*c),
            Tau::Log(branch) => {
                // (1/2πi) log y = (i/2π) log y⁻¹
                let l = branch_log_inv(y, *branch)?;
                Ok(Complex64::new(0.0, 1.0 / TWO_PI) * l)
            }
            Tau::Custom(f) => Ok(f(y)),
        }
    }

    /// Complex derivative dτ/dy: exact for `Const` and `Log`, central
    /// differences (step 1e−5) for `Custom`.
    pub fn deriv(&self, y: Complex64) -> Result<Complex64> {
        match self {
            Tau::Const(_) => Ok(Complex64::new(0.0, 0.0)),
            Tau::Log(_) => {
                let n = y.norm_sqr();
                if n == 0.0 {
                    return Err(Error::Singular("dtau/dy undefined at y = 0"));
                }
                // 1/(2πi y)
                Ok(Complex64::new(0.0, -1.0 / TWO_PI) * y.conj() / n)
            }
            Tau::Custom(f) => {
                let d = 1e-5;
                let h = Complex64::new(d, 0.0);
                Ok((f(y + h) - f(y - h)) / (2.0 * d))
            }
        }
    }
}

/// Family of lattices ℤτ₁(y) + ℤτ₂(y) over the base chart.
#[derive(Debug, Clone)]
pub struct LatticeFamily {
    pub tau1: Tau,
    pub tau2: Tau,
}

impl LatticeFamily {
    /// Square torus fibers: τ₁ = 1, τ₂ = i.
    pub fn abelian() -> Self {
        Self { tau1: Tau::Const(Complex64::new(1.0, 0.0)), tau2: Tau::Const(Complex64::new(0.0, 1.0)) }
    }

    /// Constant fibers with a general period τ₂ (Im τ₂ > 0 required at use).
    pub fn constant(tau2: Complex64) -> Self {
        Self { tau1: Tau::Const(Complex64::new(1.0, 0.0)), tau2: Tau::Const(tau2) }
    }

    /// The monodromy-log family τ₁ = 1, τ₂ = (1/2πi) log y of the Ooguri–Vafa
    /// chart (h = 0).
    pub fn log_lattice(branch: LogBranch) -> Self {
        Self { tau1: Tau::Const(Complex64::new(1.0, 0.0)), tau2: Tau::Log(branch) }
    }
}

/// Semi-flat model = lattice family + fiber scale.
#[derive(Debug, Clone)]
pub struct SemiFlat {
    pub family: LatticeFamily,
    pub s: f64,
}

/// Fiber metric data at a base point: the Gram matrix in lattice coordinates
/// (v₁, v₂) of period 1, in angle coordinates θ = 2πv, and its largest
/// eigenvalue N_b = sup of the fiber metric in θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberMetric {
    pub v_matrix: [[f64; 2]; 2],
    pub theta_matrix: [[f64; 2]; 2],
    pub n_b: f64,
}

fn im_conj_prod(a: Complex64, b: Complex64) -> f64 {
    // Im(ā·b)
    (a.conj() * b).im
}

impl SemiFlat {
    pub fn new(family: LatticeFamily, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain("fiber scale s must be positive"));
        }
        Ok(Self { family, s })
    }

    fn taus(&self, y: Complex64) -> Result<(Complex64, Complex64, f64)> {
        let t1 = self.family.tau1.eval(y)?;
        let t2 = self.family.tau2.eval(y)?;
        let im = im_conj_prod(t1, t2);
        if !(im > 0.0) {
            return Err(Error::Domain("lattice is degenerate: Im(conj(tau1) tau2) <= 0"));
        }
        Ok((t1, t2, im))
    }

    /// (W, b) at base point y and fiber point x (x on the universal cover of
    /// the fiber). W is x-independent; b carries the fiber dependence.
    pub fn w_b(&self, y: Complex64, x: Complex64) -> Result<(f64, Complex64)> {
        let (t1, t2, im) = self.taus(y)?;
        let w = self.s / im;
        let d1 = self.family.tau1.deriv(y)?;
        let d2 = self.family.tau2.deriv(y)?;
        let b = -(w / self.s) * (im_conj_prod(x, t2) * d1 + im_conj_prod(t1, x) * d2);
        Ok((w, b))
    }

    /// Coefficient of the quotient metric on the base: g_base = W⁻¹ |dy|².
    pub fn base_coeff(&self, y: Complex64) -> Result<f64> {
        let (_, _, im) = self.taus(y)?;
        Ok(im / self.s)
    }

    /// Coefficient matrix A of the (1,0)-coframe {dy + A₁ⱼ dvⱼ, dY + A₂ⱼ dvⱼ}
    /// in lattice coordinates v: A = (is/Im(τ̄₁τ₂)) · Re(τ̄ᵢτⱼ), so Im(A)/s is
    /// the lattice Gram matrix over Im(τ̄₁τ₂) and the v-metric is s·Im(A)/s.
    pub fn frame10(&self, y: Complex64) -> Result<[[Complex64; 2]; 2]> {
        let (t1, t2, im) = self.taus(y)?;
        let c = Complex64::new(0.0, self.s / im);
        let gram = [
            [(t1.conj() * t1).re, (t1.conj() * t2).re],
            [(t2.conj() * t1).re, (t2.conj() * t2).re],
        ];
        Ok([
            [c * gram[0][0], c * gram[0][1]],
            [c * gram[1][0], c * gram[1][1]],
        ])
    }

    /// Fiber metric at y; linear in s.
    pub fn fiber_metric(&self, y: Complex64) -> Result<FiberMetric> {
        let a = self.frame10(y)?;
        // Gram in v-coordinates: Im(A); in θ = 2πv: /(2π)².
        let v = [[a[0][0].im, a[0][1].im], [a[1][0].im, a[1][1].im]];
        let c = 1.0 / (TWO_PI * TWO_PI);
        let th = [[v[0][0] * c, v[0][1] * c], [v[1][0] * c, v[1][1] * c]];
        let tr = th[0][0] + th[1][1];
        let det = th[0][0] * th[1][1] - th[0][1] * th[1][0];
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        Ok(FiberMetric { v_matrix: v, theta_matrix: th, n_b: 0.5 * (tr + disc) })
    }
}

/// 2×2 Cholesky check: returns true when the symmetric matrix is positive
/// definite.
pub fn pos_def_2x2(m: [[f64; 2]; 2]) -> bool {
    m[0][0] > 0.0 && (m[0][0] * m[1][1] - m[0][1] * m[1][0]) > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::SplitMix64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn w_fixtures() {
        // τ₂ = i, s = 0.1 → W = 0.1; τ₂ = 2i, s = 0.1 → W = 0.05.
        let sf = SemiFlat::new(LatticeFamily::abelian(), 0.1).unwrap();
        let (w, b) = sf.w_b(c(0.3, 0.0), c(0.2, 0.7)).unwrap();
        assert_eq!(w, 0.1);
        assert_eq!(b, c(0.0, 0.0));
        let sf2 = SemiFlat::new(LatticeFamily::constant(c(0.0, 2.0)), 0.1).unwrap();
        let (w2, _) = sf2.w_b(c(0.3, 0.0), c(0.0, 0.0)).unwrap();
        assert!((w2 - 0.05).abs() < 1e-15);
    }

    #[test]
    fn w_log_lattice_fixture() {
        // y = 0.1, s = 0.05 → W = 0.05·2π/log 10.
        let sf = SemiFlat::new(LatticeFamily::log_lattice(LogBranch::ZeroTwoPi), 0.05).unwrap();
        let (w, _) = sf.w_b(c(0.1, 0.0), c(0.0, 0.0)).unwrap();
        let want = 0.05 * TWO_PI / (10.0_f64).ln();
        assert!((w - want).abs() < 1e-14, "{w} vs {want}");
    }

    #[test]
    fn degenerate_lattice_rejected() {
        let sf = SemiFlat::new(LatticeFamily::constant(c(0.5, -1.0)), 0.1).unwrap();
        assert!(sf.w_b(c(0.3, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn frame_fixtures_and_positivity() {
        // τ₂ = i: Im(A)/s = identity. τ₂ = 1+i: [[1,1],[1,2]].
        let sf = SemiFlat::new(LatticeFamily::abelian(), 0.07).unwrap();
        let a = sf.frame10(c(0.2, 0.1)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a[i][j].im / 0.07 - want).abs() < 1e-14);
                assert!(a[i][j].re.abs() < 1e-14);
            }
        }
        let sf2 = SemiFlat::new(LatticeFamily::constant(c(1.0, 1.0)), 0.07).unwrap();
        let a2 = sf2.frame10(c(0.2, 0.1)).unwrap();
        let want = [[1.0, 1.0], [1.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((a2[i][j].im / 0.07 - want[i][j]).abs() < 1e-14, "{:?}", a2);
            }
        }
        let fm = sf2.fiber_metric(c(0.2, 0.1)).unwrap();
        assert!(pos_def_2x2(fm.v_matrix));
        assert!(pos_def_2x2(fm.theta_matrix));
    }

    #[test]
    fn fiber_metric_scales_linearly_in_s_and_nb_closed_form() {
        let y = c(0.15, -0.2);
        let f1 = SemiFlat::new(LatticeFamily::constant(c(0.4, 1.3)), 0.05)
            .unwrap()
            .fiber_metric(y)
            .unwrap();
        let f2 = SemiFlat::new(LatticeFamily::constant(c(0.4, 1.3)), 0.10)
            .unwrap()
            .fiber_metric(y)
            .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((2.0 * f1.v_matrix[i][j] - f2.v_matrix[i][j]).abs() < 1e-14);
            }
        }
        assert!((2.0 * f1.n_b - f2.n_b).abs() < 1e-14);
        // n_b for τ₂ = i is s/4π² exactly
        let fa = SemiFlat::new(LatticeFamily::abelian(), 0.05).unwrap().fiber_metric(y).unwrap();
        assert!((fa.n_b - 0.05 / (TWO_PI * TWO_PI)).abs() < 1e-16);
        // eigenvalue equation check: det(theta − n_b I) ≈ 0
        let th = f1.theta_matrix;
        let d = (th[0][0] - f1.n_b) * (th[1][1] - f1.n_b) - th[0][1] * th[1][0];
        assert!(d.abs() < 1e-16, "{d}");
    }

    /// Wirtinger derivative ∂f/∂y of a numerically-given complex function, by
    /// central differences in both real directions.
    fn wirtinger<F: Fn(Complex64) -> Complex64>(f: F, z: Complex64, h: f64) -> Complex64 {
        let dre = (f(z + c(h, 0.0)) - f(z - c(h, 0.0))) / (2.0 * h);
        let dim = (f(z + c(0.0, h)) - f(z - c(0.0, h))) / (2.0 * h);
        0.5 * (dre - Complex64::new(0.0, 1.0) * dim)
    }

    #[test]
    fn kahler_identities_for_log_lattice() {
        // ∂W/∂y = ∂(Wb)/∂x and ∂(W b̄)/∂y = ∂ₓ[ W(W⁻² + |b|²) ].
        let sf = SemiFlat::new(LatticeFamily::log_lattice(LogBranch::ZeroTwoPi), 0.05).unwrap();
        let mut rng = SplitMix64::new(41);
        for _ in 0..12 {
            let y = c(rng.range(0.05, 0.4), rng.range(0.02, 0.3));
            let x = c(rng.range(-0.4, 0.4), rng.range(-0.4, 0.4));
            let h = 1e-5;
            let lhs1 = wirtinger(|yy| c(sf.w_b(yy, x).unwrap().0, 0.0), y, h);
            let rhs1 = wirtinger(
                |xx| {
                    let (w, b) = sf.w_b(y, xx).unwrap();
                    w * b
                },
                x,
                h,
            );
            assert!((lhs1 - rhs1).norm_sqr().sqrt() < 1e-6, "closedness 1: {lhs1} vs {rhs1}");
            let lhs2 = wirtinger(
                |yy| {
                    let (w, b) = sf.w_b(yy, x).unwrap();
                    w * b.conj()
                },
                y,
                h,
            );
            let rhs2 = wirtinger(
                |xx| {
                    let (w, b) = sf.w_b(y, xx).unwrap();
                    c(w * (1.0 / (w * w) + b.norm_sqr()), 0.0)
                },
                x,
                h,
            );
            assert!((lhs2 - rhs2).norm_sqr().sqrt() < 1e-6, "closedness 2: {lhs2} vs {rhs2}");
        }
    }

    #[test]
    fn volume_form_matches_canonical_square() {
        // η∧η = (Re Θ)∧(Re Θ) as 4-forms, Θ = dy∧dx: both Pfaffians equal 1 in
        // the coordinate order (x₁,x₂,y₁,y₂).
        let sf = SemiFlat::new(LatticeFamily::log_lattice(LogBranch::ZeroTwoPi), 0.08).unwrap();
        let mut rng = SplitMix64::new(53);
        for _ in 0..12 {
            let y = c(rng.range(0.05, 0.4), rng.range(-0.3, 0.3));
            if y.norm_sqr() < 0.01 {
                continue;
            }
            let x = c(rng.range(-0.5, 0.5), rng.range(-0.5, 0.5));
            let (w, b) = sf.w_b(y, x).unwrap();
            // 1-forms as complex coefficient vectors over (dx₁,dx₂,dy₁,dy₂)
            let i = Complex64::new(0.0, 1.0);
            let dx = [c(1.0, 0.0), i, c(0.0, 0.0), c(0.0, 0.0)];
            let dy = [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), i];
            let alpha: [Complex64; 4] = core::array::from_fn(|k| dx[k] + b * dy[k]);
            // wedge coefficient matrix of η = (i/2)(W α∧ᾱ + W⁻¹ dy∧dȳ)
            let mut eta = [[0.0_f64; 4]; 4];
            for p in 0..4 {
                for q in 0..4 {
                    let z = 0.5
                        * i
                        * (w * (alpha[p] * alpha[q].conj() - alpha[q] * alpha[p].conj())
                            + (dy[p] * dy[q].conj() - dy[q] * dy[p].conj()) / w);
                    assert!(z.im.abs() < 1e-12, "eta must be real");
                    eta[p][q] = z.re;
                }
            }
            let pf =
                eta[0][1] * eta[2][3] - eta[0][2] * eta[1][3] + eta[0][3] * eta[1][2];
            assert!((pf - 1.0).abs() < 1e-10, "Pfaffian of eta: {pf}");
        }
    }
}
