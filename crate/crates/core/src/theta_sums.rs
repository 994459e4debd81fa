//! Riemann-function family, quadratic Gauss sums and Talbot coefficients.
//!
//! Every truncated series is returned as a [`TruncatedSum`] carrying a
//! rigorous bound on the omitted tail.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::quad;

/// Partial sum of a series together with a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedSum {
    /// Value of the partial sum.
    pub value: Complex64,
    /// Upper bound for the modulus of the omitted tail.
    pub tail_bound: f64,
    /// Truncation parameter used.
    pub terms_used: u64,
}

/// Torsion `ω₀ = aπ/b` with `gcd(a, b) = 1`; `a = 0` is torsion free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RationalTorsion {
    a: u64,
    b: u64,
}

impl RationalTorsion {
    /// Validated constructor; `b ≥ 1` and `gcd(a, b) = 1` (with `0/1` for zero).
    pub fn new(a: u64, b: u64) -> Result<Self> {
        if b == 0 {
            return Err(invalid("torsion", "denominator must be positive"));
        }
        if a == 0 && b != 1 {
            return Err(invalid("torsion", "zero torsion must be written 0/1"));
        }
        if gcd(a, b) != 1 {
            return Err(invalid("torsion", format!("{a}/{b} is not in lowest terms")));
        }
        Ok(Self { a, b })
    }

    /// The torsion-free value `0/1`.
    pub const fn zero() -> Self {
        Self { a: 0, b: 1 }
    }

    /// Numerator.
    pub const fn a(&self) -> u64 {
        self.a
    }

    /// Denominator.
    pub const fn b(&self) -> u64 {
        self.b
    }

    /// `ω₀ = aπ/b`.
    pub fn omega0(&self) -> f64 {
        self.a as f64 * PI / self.b as f64
    }

    /// True for `a = 0`.
    pub const fn is_zero(&self) -> bool {
        self.a == 0
    }
}

impl std::fmt::Display for RationalTorsion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.a, self.b)
    }
}

impl std::str::FromStr for RationalTorsion {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('/')
            .ok_or_else(|| invalid("torsion", format!("expected a/b, got `{s}`")))?;
        let a = a
            .trim()
            .parse::<u64>()
            .map_err(|e| invalid("torsion", format!("numerator: {e}")))?;
        let b = b
            .trim()
            .parse::<u64>()
            .map_err(|e| invalid("torsion", format!("denominator: {e}")))?;
        Self::new(a, b)
    }
}

/// Indices `(n, m)` of the shifted family `Σ (e^{i2πt(mj−n)²}−1)/(mj−n)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ThetaFamilyParams {
    /// Shift.
    pub n: u64,
    /// Dilation, `m ≥ 1`.
    pub m: u64,
}

impl ThetaFamilyParams {
    /// Validated constructor.
    pub fn new(n: u64, m: u64) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m", "must be at least 1"));
        }
        Ok(Self { n, m })
    }
}

/// Greatest common divisor.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

fn check_terms(n_terms: u64) -> Result<()> {
    if n_terms == 0 {
        Err(invalid("N", "must be at least 1"))
    } else {
        Ok(())
    }
}

/// `(e^{iθ} − 1)` without cancellation for small `θ`.
#[inline]
pub(crate) fn expm1_i(theta: f64) -> Complex64 {
    let s = (0.5 * theta).sin();
    Complex64::new(-2.0 * s * s, theta.sin())
}

/// `𝔯(t) = t + Σ_{1≤|j|≤N} (e^{itj²}−1)/(ij²)`, tail bound `4/N`.
pub fn riemann_r(t: f64, n_terms: u64) -> Result<TruncatedSum> {
    check_terms(n_terms)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (1..=n_terms).rev() {
        let j2 = (j as f64) * (j as f64);
        acc += expm1_i(t * j2) / j2;
    }
    // Both signs of j contribute equally; 1/i = −i.
    let value = Complex64::new(t, 0.0) + acc * Complex64::new(0.0, -2.0);
    Ok(TruncatedSum {
        value,
        tail_bound: 4.0 / n_terms as f64,
        terms_used: n_terms,
    })
}

/// `φ_D(t) = Σ_{j=1}^N e^{itj²}/(ij²)`, tail bound `1/N`.
pub fn duistermaat_phi(t: f64, n_terms: u64) -> Result<TruncatedSum> {
    check_terms(n_terms)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (1..=n_terms).rev() {
        let j2 = (j as f64) * (j as f64);
        acc += Complex64::from_polar(1.0 / j2, t * j2);
    }
    Ok(TruncatedSum {
        value: acc * Complex64::new(0.0, -1.0),
        tail_bound: 1.0 / n_terms as f64,
        terms_used: n_terms,
    })
}

/// `𝔯_{n,m}(t) = Σ_{|j|≤N} (e^{i2πt(mj−n)²}−1)/(mj−n)²`.
///
/// A vanishing frequency `mj = n` contributes `2πit`. The tail bound is
/// `4/(m²(N − n/m))` and infinite when `N ≤ n/m`.
pub fn riemann_nm(t: f64, params: ThetaFamilyParams, n_terms: u64) -> Result<TruncatedSum> {
    check_terms(n_terms)?;
    let m = params.m as i64;
    let n = params.n as i64;
    let big_n = n_terms as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut degenerate = Complex64::new(0.0, 0.0);
    // Sum each sign from the outside in.
    for j in (0..=big_n).rev().chain(-big_n..0) {
        let d = m * j - n;
        if d == 0 {
            degenerate = Complex64::new(0.0, 2.0 * PI * t);
            continue;
        }
        let d2 = (d as f64) * (d as f64);
        let frac = (t * d2).rem_euclid(1.0);
        acc += expm1_i(2.0 * PI * frac) / d2;
    }
    let shift = params.n as f64 / params.m as f64;
    let tail_bound = if (n_terms as f64) > shift {
        4.0 / ((params.m as f64).powi(2) * (n_terms as f64 - shift))
    } else {
        f64::INFINITY
    };
    Ok(TruncatedSum {
        value: acc + degenerate,
        tail_bound,
        terms_used: n_terms,
    })
}

/// `R̃(t) = −Γ Σ_{|j|≤N} (e^{i4π²t(j−a/2b)²}−1)/(i4π²(j−a/2b)²)`.
///
/// A vanishing frequency contributes `t`. The tail bound is
/// `Γ/(π²(N − a/2b))`.
pub fn r_tilde(t: f64, gamma: f64, torsion: RationalTorsion, n_terms: u64) -> Result<TruncatedSum> {
    check_terms(n_terms)?;
    if !(gamma > 0.0) {
        return Err(invalid("Gamma", "must be positive"));
    }
    let shift = torsion.a() as f64 / (2.0 * torsion.b() as f64);
    let four_pi2 = 4.0 * PI * PI;
    let big_n = n_terms as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut degenerate = Complex64::new(0.0, 0.0);
    for j in (0..=big_n).rev().chain(-big_n..0) {
        let d = j as f64 - shift;
        if d == 0.0 {
            degenerate = Complex64::new(t, 0.0);
            continue;
        }
        let d2 = d * d;
        acc += expm1_i(four_pi2 * t * d2) / (four_pi2 * d2);
    }
    let value = -gamma * (acc * Complex64::new(0.0, -1.0) + degenerate);
    let tail_bound = if (n_terms as f64) > shift {
        gamma / (PI * PI * (n_terms as f64 - shift))
    } else {
        f64::INFINITY
    };
    Ok(TruncatedSum {
        value,
        tail_bound,
        terms_used: n_terms,
    })
}

fn check_coprime(p: i64, q: u64) -> Result<()> {
    if q == 0 {
        return Err(invalid("q", "must be positive"));
    }
    if gcd(p.unsigned_abs(), q) != 1 {
        return Err(invalid("p", format!("gcd({p}, {q}) must be 1")));
    }
    Ok(())
}

/// `τ₀ = Σ_{r=0}^{q−1} e^{i2πp(mr−n)²/q}` with exact modular phases.
pub fn gauss_sum(p: i64, q: u64, m: u64, n: u64) -> Result<Complex64> {
    check_coprime(p, q)?;
    if m == 0 {
        return Err(invalid("m", "must be positive"));
    }
    let qi = q as i128;
    let pm = (p as i128).rem_euclid(qi);
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..qi {
        let d = (m as i128 * r - n as i128).rem_euclid(qi);
        let e = (pm * ((d * d) % qi)) % qi;
        acc += Complex64::from_polar(1.0, 2.0 * PI * e as f64 / q as f64);
    }
    Ok(acc)
}

/// Coefficients `τ_j`, `0 ≤ j < q`, of `e^{i(p/2πq)Δ}` applied to the
/// 2π-periodic Dirac comb, so that the result is `Σ_j τ_j δ(x − j/q)`.
///
/// Explicitly `τ_j = q⁻¹ Σ_r e^{−i2πpr²/q} e^{i2πrj/q}`.
pub fn talbot_coefficients(p: i64, q: u64) -> Result<Vec<Complex64>> {
    check_coprime(p, q)?;
    let qi = q as i128;
    let pm = (p as i128).rem_euclid(qi);
    let base: Vec<i128> = (0..qi).map(|r| (pm * ((r * r) % qi)) % qi).collect();
    let out = (0..qi)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (r, e) in base.iter().enumerate() {
                let phase = (r as i128 * j - e).rem_euclid(qi);
                acc += Complex64::from_polar(1.0, 2.0 * PI * phase as f64 / q as f64);
            }
            acc / q as f64
        })
        .collect();
    Ok(out)
}

/// Discrepancy of the Gaussian-regularized Poisson identity
/// `Σ_{|j|≤N} e^{−zj²} = √(π/z) Σ_k e^{−π²k²/z}`, `z = ε − 4π²it`.
///
/// The dual sum is extended until its tail is below `10⁻¹²`.
pub fn poisson_dual_check(t: f64, eps: f64, n_terms: u64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    check_terms(n_terms)?;
    let z = Complex64::new(eps, -4.0 * PI * PI * t);
    let mut direct = Complex64::new(0.0, 0.0);
    for j in (1..=n_terms).rev() {
        let j2 = (j as f64).powi(2);
        direct += (-z * j2).exp();
    }
    let direct = 1.0 + 2.0 * direct;

    let w = Complex64::new(PI * PI, 0.0) / z;
    // Tail of Σ_{k>K} e^{−Re(w) k²} ≤ e^{−Re(w)K²}/(1 − e^{−Re(w)(2K+1)}).
    let decay = w.re;
    let mut k_max: u64 = 1;
    loop {
        let kk = k_max as f64;
        let tail = 2.0 * (-decay * kk * kk).exp() / (1.0 - (-decay * (2.0 * kk + 1.0)).exp());
        if tail < 1e-12 || k_max > 100_000_000 {
            break;
        }
        k_max += 1 + k_max / 4;
    }
    let mut dual = Complex64::new(0.0, 0.0);
    for k in (1..=k_max).rev() {
        let k2 = (k as f64).powi(2);
        dual += (-w * k2).exp();
    }
    let dual = (Complex64::new(PI, 0.0) / z).sqrt() * (1.0 + 2.0 * dual);
    Ok((direct - dual).norm())
}

const FRESNEL_SWITCH: f64 = 30.0;

/// `∫_0^t e^{−ij²/(4τ)} τ^{−1/2} dτ` for one frequency `j`.
///
/// With `u = j²/(4τ)` this is `(|j|/2) ∫_{u0}^∞ e^{−iu} u^{−3/2} du`,
/// `u0 = j²/(4t)`. Large `u0` uses the integration-by-parts expansion;
/// small `u0` reduces to a Fresnel integral on `[0, √u0]`.
pub fn corner_term(j: i64, t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    if j == 0 {
        return Ok(Complex64::new(2.0 * t.sqrt(), 0.0));
    }
    let jj = j.unsigned_abs() as f64;
    let u0 = jj * jj / (4.0 * t);
    let e = if u0 >= FRESNEL_SWITCH {
        quad::oscillatory_power_tail(u0, 1.5).0
    } else {
        // E(u0) = 2u0^{-1/2}e^{-iu0} − 2i(√π e^{−iπ/4} − 2∫_0^{√u0} e^{−iv²} dv).
        let v0 = u0.sqrt();
        let fres = quad::integrate(|v| Complex64::from_polar(1.0, -v * v), 0.0, v0, 8, 1e-15, 0.0)?;
        let i = Complex64::new(0.0, 1.0);
        let full = Complex64::from_polar(PI.sqrt(), -FRAC_PI_4);
        Complex64::from_polar(2.0 / v0, -u0) - 2.0 * i * (full - 2.0 * fres.value)
    };
    Ok(0.5 * jj * e)
}

/// `∫_0^t Σ_{|j|≤⌊n^ν⌋} e^{−ij²/(4τ)} τ^{−1/2} dτ`, summed term by term.
pub fn corner_integral(t: f64, n: u64, nu: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(invalid("nu", "must lie in (0, 1]"));
    }
    let j_max = support_radius(n, nu);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (1..=j_max).rev() {
        acc += corner_term(j as i64, t)?;
    }
    Ok(corner_term(0, t)? + 2.0 * acc)
}

/// `⌊n^ν⌋`, guarded against round-off for integer powers.
pub fn support_radius(n: u64, nu: f64) -> u64 {
    let x = (n as f64).powf(nu);
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// Limit of [`corner_integral`] as `n → ∞`: `e^{−iπ/4} 𝔯(4π²t)/(2π√π)`.
pub fn corner_integral_limit(t: f64, n_terms: u64) -> Result<TruncatedSum> {
    let r = riemann_r(4.0 * PI * PI * t, n_terms)?;
    let scale = 1.0 / (2.0 * PI * PI.sqrt());
    Ok(TruncatedSum {
        value: Complex64::from_polar(scale, -FRAC_PI_4) * r.value,
        tail_bound: scale * r.tail_bound,
        terms_used: n_terms,
    })
}

/// Closed form `(2b²/(π√π)) e^{−iπ/4} Σ_{|j|≤N} (e^{iπ²(t/b²)(2bj−a)²}−1)/(i(2bj−a)²)`
/// of the helical corner integral.
pub fn helix_integral(t: f64, torsion: RationalTorsion, n_terms: u64) -> Result<TruncatedSum> {
    if !(t >= 0.0) {
        return Err(invalid("t", "must be nonnegative"));
    }
    check_terms(n_terms)?;
    let a = torsion.a() as i64;
    let b = torsion.b() as i64;
    let bf = b as f64;
    let big_n = n_terms as i64;
    let rate = PI * PI * t / (bf * bf);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut degenerate = Complex64::new(0.0, 0.0);
    for j in (0..=big_n).rev().chain(-big_n..0) {
        let d = 2 * b * j - a;
        if d == 0 {
            degenerate = Complex64::new(rate, 0.0);
            continue;
        }
        let d2 = (d as f64) * (d as f64);
        acc += expm1_i(rate * d2) / d2;
    }
    let sum = acc * Complex64::new(0.0, -1.0) + degenerate;
    let pref = Complex64::from_polar(2.0 * bf * bf / (PI * PI.sqrt()), -FRAC_PI_4);
    let shift = a as f64 / (2.0 * bf);
    let tail_bound = if (n_terms as f64) > shift {
        (2.0 * bf * bf / (PI * PI.sqrt())) * 4.0 / (4.0 * bf * bf * (n_terms as f64 - shift))
    } else {
        f64::INFINITY
    };
    Ok(TruncatedSum {
        value: pref * sum,
        tail_bound,
        terms_used: n_terms,
    })
}

/// Direct evaluation of `∫_0^t e^{iτω₀²} Σ_{|j|≤J} e^{−i(j+2τω₀)²/(4τ)} τ^{−1/2} dτ`.
///
/// The integrand equals `Σ_j e^{−ijω₀} e^{−ij²/(4τ)} τ^{−1/2}`, so each
/// frequency reuses [`corner_term`].
pub fn helix_integral_quadrature(t: f64, torsion: RationalTorsion, j_max: u64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    let omega = torsion.omega0();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (1..=j_max).rev() {
        acc += 2.0 * (j as f64 * omega).cos() * corner_term(j as i64, t)?;
    }
    Ok(acc + corner_term(0, t)?)
}

/// `c̃_M = √(−(M²/4π²) ln cos(π/M))` for the regular `M`-gon.
pub fn polygon_coefficient(m: u64) -> Result<f64> {
    if m < 3 {
        return Err(invalid("M", "must be at least 3"));
    }
    let mf = m as f64;
    // ln cos x = ln(1 − 2 sin²(x/2)) keeps full precision for large M.
    let half = (0.5 * PI / mf).sin();
    let c2 = -(mf * mf / (4.0 * PI * PI)) * (-2.0 * half * half).ln_1p();
    Ok(c2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn riemann_r_trivial_values() {
        assert_eq!(riemann_r(0.0, 100).unwrap().value, Complex64::new(0.0, 0.0));
        let v = riemann_r(2.0 * PI, 100).unwrap().value;
        assert!(close(v, Complex64::new(2.0 * PI, 0.0), 1e-10));
    }

    #[test]
    fn riemann_r_at_pi_matches_odd_closed_form() {
        // Odd j give e^{iπj²} − 1 = −2, even j give 0.
        let r = riemann_r(PI, 1_000_000).unwrap();
        let expected = Complex64::new(PI, PI * PI / 2.0);
        assert!(close(r.value, expected, r.tail_bound));
    }

    #[test]
    fn duistermaat_phi_zero_and_period() {
        let p0 = duistermaat_phi(0.0, 1_000_000).unwrap();
        assert!(close(p0.value, Complex64::new(0.0, -PI * PI / 6.0), p0.tail_bound));
        let a = duistermaat_phi(0.0, 100).unwrap().value;
        let b = duistermaat_phi(2.0 * PI, 100).unwrap().value;
        assert!(close(a, b, 1e-10));
    }

    #[test]
    fn riemann_and_duistermaat_identity_constant() {
        let n = 1_000_000;
        let r = riemann_r(1.0, n).unwrap();
        let p = duistermaat_phi(1.0, n).unwrap();
        let lhs = r.value - 2.0 * p.value - 1.0;
        // Direct algebra: 𝔯 − 2φ_D − t = −2 Σ_{j≥1} 1/(ij²) = iπ²/3.
        let tol = r.tail_bound + 2.0 * p.tail_bound;
        assert!(close(lhs, Complex64::new(0.0, PI * PI / 3.0), tol));
    }

    #[test]
    fn riemann_nm_reductions() {
        let p01 = ThetaFamilyParams::new(0, 1).unwrap();
        assert_eq!(riemann_nm(0.0, p01, 50).unwrap().value.norm(), 0.0);
        let t = 0.3;
        let a = riemann_nm(t, p01, 200_000).unwrap();
        let b = riemann_r(2.0 * PI * t, 200_000).unwrap();
        assert!(close(a.value, Complex64::new(0.0, 1.0) * b.value, 1e-9));
        let p12 = ThetaFamilyParams::new(1, 2).unwrap();
        let x = riemann_nm(0.17, p12, 5000).unwrap().value;
        let y = riemann_nm(1.17, p12, 5000).unwrap().value;
        assert!(close(x, y, 1e-9));
    }

    #[test]
    fn r_tilde_reduces_to_riemann_r() {
        let t = 0.05;
        let a = r_tilde(t, 1.0, RationalTorsion::zero(), 100_000).unwrap();
        let b = riemann_r(4.0 * PI * PI * t, 100_000).unwrap();
        let expected = -b.value / (4.0 * PI * PI);
        assert!(close(a.value, expected, 1e-12));
        let twice = r_tilde(t, 2.0, RationalTorsion::zero(), 1000).unwrap().value;
        let once = r_tilde(t, 1.0, RationalTorsion::zero(), 1000).unwrap().value;
        assert!(close(twice, 2.0 * once, 0.0));
    }

    #[test]
    fn gauss_sum_examples() {
        assert!(close(gauss_sum(1, 1, 1, 0).unwrap(), Complex64::new(1.0, 0.0), 1e-15));
        let g3 = gauss_sum(1, 3, 1, 0).unwrap();
        assert!(close(g3, Complex64::new(0.0, 3f64.sqrt()), 1e-12));
        let g4 = gauss_sum(1, 4, 1, 0).unwrap();
        assert!(close(g4, Complex64::new(2.0, 2.0), 1e-12));
        assert!(gauss_sum(2, 4, 1, 0).is_err());
    }

    #[test]
    fn talbot_examples() {
        let one = talbot_coefficients(1, 1).unwrap();
        assert!((one[0].norm() - 1.0).abs() < 1e-14);
        for c in talbot_coefficients(1, 3).unwrap() {
            assert!((c.norm() - 3f64.sqrt().recip()).abs() < 1e-14);
        }
        let two: Vec<f64> = talbot_coefficients(1, 2).unwrap().iter().map(|c| c.norm()).collect();
        assert!(two[0] < 1e-14 && (two[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn poisson_examples() {
        assert!(poisson_dual_check(0.0, 1.0, 50).unwrap() < 1e-12);
        assert!(poisson_dual_check(1.0 / (4.0 * PI * PI), 0.01, 200).unwrap() < 1e-10);
        assert!(poisson_dual_check(0.1, 0.0, 10).is_err());
    }

    #[test]
    fn corner_term_against_direct_quadrature() {
        // Plain quadrature of (j/2)∫_{u0}^{U} u^{-3/2} e^{-iu} du plus the
        // leading boundary term at U.
        let upper = 20_000.0;
        for &(j, t) in &[(1i64, 0.2), (2, 0.25), (3, 0.05), (7, 0.2)] {
            let u0 = (j * j) as f64 / (4.0 * t);
            let body = quad::integrate(
                |u| Complex64::from_polar(u.powf(-1.5), -u),
                u0,
                upper,
                6000,
                1e-13,
                0.0,
            )
            .unwrap();
            let boundary = Complex64::new(0.0, -1.0) * Complex64::from_polar(upper.powf(-1.5), -upper);
            let direct = 0.5 * j as f64 * (body.value + boundary);
            let fast = corner_term(j, t).unwrap();
            assert!(close(fast, direct, 1e-9), "j={j} t={t}: {fast} vs {direct}");
        }
    }

    #[test]
    fn corner_integral_small_support() {
        let t = 0.1;
        let v = corner_integral(t, 1, 1.0).unwrap();
        let j0 = corner_term(0, t).unwrap();
        assert_eq!(j0, Complex64::new(2.0 * t.sqrt(), 0.0));
        let j1 = corner_term(1, t).unwrap();
        assert!(close(v, j0 + 2.0 * j1, 1e-15));
    }

    #[test]
    fn helix_integral_zero_torsion_consistency() {
        let t = 0.1;
        let h = helix_integral(t, RationalTorsion::zero(), 200_000).unwrap();
        let l = corner_integral_limit(t, 200_000).unwrap();
        assert!(close(h.value, l.value, h.tail_bound + l.tail_bound));
        assert_eq!(helix_integral(0.0, RationalTorsion::new(1, 2).unwrap(), 10).unwrap().value.norm(), 0.0);
    }

    #[test]
    fn helix_integral_matches_quadrature_path() {
        let tor = RationalTorsion::new(1, 1).unwrap();
        let t = 0.1;
        let closed = helix_integral(t, tor, 1_000_000).unwrap().value;
        let quad = helix_integral_quadrature(t, tor, 200_000).unwrap();
        assert!((closed - quad).norm() / closed.norm() < 1e-4);
    }

    #[test]
    fn polygon_coefficient_values() {
        let c4 = polygon_coefficient(4).unwrap();
        let expected = ((4.0 / (PI * PI)) * (2f64.ln() / 2.0)).sqrt();
        assert!((c4 - expected).abs() < 1e-14);
        assert!(polygon_coefficient(3).unwrap() > 0.0);
        assert!(polygon_coefficient(2).is_err());
        // ln cos(π/M) ≈ −π²/(2M²) gives the limit √(1/8).
        let big = polygon_coefficient(1_000_000).unwrap();
        assert!((big - (0.125f64).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn torsion_parsing() {
        let t: RationalTorsion = "1/2".parse().unwrap();
        assert_eq!((t.a(), t.b()), (1, 2));
        assert!("2/4".parse::<RationalTorsion>().is_err());
        assert!("1/0".parse::<RationalTorsion>().is_err());
        assert!("x".parse::<RationalTorsion>().is_err());
    }
}
