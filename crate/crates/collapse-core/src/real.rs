//! f64 math for no_std builds, plus the handful of numeric helpers (quadrature
//! nodes, deterministic seeding) shared across modules.

/// Extension trait routing the usual f64 transcendentals through `libm` so the
/// crate builds without std. Call sites read like normal float code.
pub trait F64Ext: Copy {
    fn abs(self) -> f64;
    fn sqrt(self) -> f64;
    fn ln(self) -> f64;
    fn exp(self) -> f64;
    fn cos(self) -> f64;
    fn sin(self) -> f64;
    fn atan2(self, other: f64) -> f64;
    fn powi(self, n: i32) -> f64;
    fn hypot(self, other: f64) -> f64;
    fn floor(self) -> f64;
    fn ceil(self) -> f64;
    fn round(self) -> f64;
    fn cosh(self) -> f64;
    fn max(self, other: f64) -> f64;
    fn min(self, other: f64) -> f64;
}

impl F64Ext for f64 {
    #[inline]
    fn abs(self) -> f64 {
        libm::fabs(self)
    }
    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    #[inline]
    fn ln(self) -> f64 {
        libm::log(self)
    }
    #[inline]
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    #[inline]
    fn cos(self) -> f64 {
        libm::cos(self)
    }
    #[inline]
    fn sin(self) -> f64 {
        libm::sin(self)
    }
    #[inline]
    fn atan2(self, other: f64) -> f64 {
        libm::atan2(self, other)
    }
    #[inline]
    fn powi(self, n: i32) -> f64 {
        libm::pow(self, n as f64)
    }
    #[inline]
    fn hypot(self, other: f64) -> f64 {
        libm::hypot(self, other)
    }
    #[inline]
    fn floor(self) -> f64 {
        libm::floor(self)
    }
    #[inline]
    fn ceil(self) -> f64 {
        libm::ceil(self)
    }
    #[inline]
    fn round(self) -> f64 {
        libm::round(self)
    }
    #[inline]
    fn cosh(self) -> f64 {
        libm::cosh(self)
    }
    #[inline]
    fn max(self, other: f64) -> f64 {
        if self > other {
            self
        } else {
            other
        }
    }
    #[inline]
    fn min(self, other: f64) -> f64 {
        if self < other {
            self
        } else {
            other
        }
    }
}

pub const TWO_PI: f64 = core::f64::consts::TAU;
pub const PI: f64 = core::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// 8-point Gauss–Legendre rule on [0,1]: (node, weight).
pub const GAUSS8: [(f64, f64); 8] = [
    (0.019_855_071_751_231_84, 0.050_614_268_145_188_13),
    (0.101_666_761_293_186_63, 0.111_190_517_226_687_24),
    (0.237_233_795_041_835_5, 0.156_853_322_938_943_65),
    (0.408_282_678_752_175_14, 0.181_341_891_689_180_99),
    (0.591_717_321_247_824_86, 0.181_341_891_689_180_99),
    (0.762_766_204_958_164_5, 0.156_853_322_938_943_65),
    (0.898_333_238_706_813_4, 0.111_190_517_226_687_24),
    (0.980_144_928_248_768_1, 0.050_614_268_145_188_13),
];

/// Composite Simpson rule with `panels` (even) panels on [a,b].
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = if panels % 2 == 0 { panels } else { panels + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// SplitMix64: deterministic stream for start vectors and grids of test points.
/// (Sampling that feeds statistics goes through ChaCha in `ghlab` instead.)
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0,1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform in [lo,hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Uniform [0,1) draw from any `rand_core` generator.
pub fn uniform_f64<R: rand_core::RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 64);
        // exact: 4 - 4 + 2 = 2
        assert!((v - 2.0).abs() < 1e-12, "simpson cubic: {v}");
    }

    #[test]
    fn gauss8_weights_sum_to_one() {
        let s: f64 = GAUSS8.iter().map(|&(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-15);
        // degree-15 exactness spot check on x^10: integral over [0,1] = 1/11
        let v: f64 = GAUSS8.iter().map(|&(x, w)| w * x.powi(10)).sum();
        assert!((v - 1.0 / 11.0).abs() < 1e-15, "gauss8 x^10: {v}");
    }

    #[test]
    fn splitmix_is_deterministic_and_in_range() {
        let mut a = SplitMix64::new(7);
        let mut b = SplitMix64::new(7);
        for _ in 0..100 {
            let x = a.next_f64();
            assert_eq!(x, b.next_f64());
            assert!((0.0..1.0).contains(&x));
        }
    }
}
