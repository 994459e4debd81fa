//! Globally adaptive Gauss–Kronrod (7, 15) quadrature for complex integrands.

use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Value and error estimate of an integral.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    /// Integral estimate.
    pub value: Complex64,
    /// Estimated absolute error.
    pub error: f64,
    /// Number of integrand evaluations.
    pub evaluations: usize,
}

/// Single 15-point Kronrod rule with its embedded 7-point Gauss estimate.
pub fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kron += fsum * WGK[j];
        if j % 2 == 1 {
            gauss += fsum * WG[j / 2];
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).norm();
    (value, error)
}

struct Interval {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]`, starting from `pieces` equal subintervals and
/// bisecting the worst interval until `error ≤ max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    pieces: usize,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            evaluations: 0,
        });
    }
    let pieces = pieces.max(1);
    let mut heap = BinaryHeap::with_capacity(pieces * 4);
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    let mut evaluations = 0;
    let width = (b - a) / pieces as f64;
    for i in 0..pieces {
        let lo = a + width * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + width };
        let (value, error) = gk15(&mut f, lo, hi);
        evaluations += 15;
        total += value;
        total_err += error;
        heap.push(Interval {
            a: lo,
            b: hi,
            value,
            error,
        });
    }
    let limit = pieces + 20_000;
    while total_err > abs_tol.max(rel_tol * total.norm()) {
        if heap.len() >= limit {
            return Err(Error::Quadrature {
                a,
                b,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature {
                a,
                b,
                error: total_err,
            });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Interval {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Interval {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to remove drift from the incremental updates.
    let value = heap.iter().fold(Complex64::new(0.0, 0.0), |acc, iv| acc + iv.value);
    let error = heap.iter().map(|iv| iv.error).sum();
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    pieces: usize,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, pieces, abs_tol, rel_tol).map(|r| r.value.re)
}

/// Three-point Gauss–Legendre nodes on `[-1, 1]`.
pub const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
/// Three-point Gauss–Legendre weights on `[-1, 1]`.
pub const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Asymptotic expansion of `∫_{u0}^∞ e^{-iu} u^{-a} du` for large `u0`.
///
/// Repeated integration by parts gives
/// `-i e^{-iu0} u0^{-a} Σ_k (a)_k (i/u0)^k`; the sum is truncated at its
/// smallest term. Returns the value and the size of the first omitted term.
pub fn oscillatory_power_tail(u0: f64, a: f64) -> (Complex64, f64) {
    let i = Complex64::new(0.0, 1.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = 1.0;
    for k in 0..200 {
        let next = term * i * ((a + k as f64) / u0);
        let size = next.norm();
        if size >= last || size < 1e-18 {
            last = size;
            break;
        }
        sum += next;
        term = next;
        last = size;
    }
    let pref = -i * Complex64::from_polar(u0.powf(-a), -u0);
    (pref * sum, last * u0.powf(-a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| Complex64::new(x * x * x, x), 0.0, 2.0, 1, 1e-14, 0.0).unwrap();
        assert!((r.value.re - 4.0).abs() < 1e-13);
        assert!((r.value.im - 2.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let r = integrate(|x| Complex64::from_polar(1.0, 40.0 * x), 0.0, 1.0, 4, 1e-13, 0.0)
            .unwrap();
        let exact = (Complex64::from_polar(1.0, 40.0) - 1.0) / Complex64::new(0.0, 40.0);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn tail_expansion_matches_quadrature() {
        let u0 = 30.0;
        let (tail, bound) = oscillatory_power_tail(u0, 1.5);
        let finite = integrate(
            |u| Complex64::from_polar(u.powf(-1.5), -u),
            u0,
            300.0,
            200,
            1e-15,
            0.0,
        )
        .unwrap();
        let (far, _) = oscillatory_power_tail(300.0, 1.5);
        assert!(bound < 1e-12);
        assert!((finite.value + far - tail).norm() < 1e-12);
    }
}
