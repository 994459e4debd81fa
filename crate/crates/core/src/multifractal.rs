//! Multifractal diagnostics of the family `𝔯_{n,m}`.
//!
//! Covers smoothed quadratic exponential sums and their `L^p` structure
//! functions, the Frisch–Parisi transform of the Besov exponents,
//! continued-fraction approximability, and local Hölder fits at rational
//! and irrational points.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fit::{linear_fit, log_log_slope};
use crate::quad::integrate;
use crate::theta_sums::{expm1_i, gauss_sum, ThetaFamilyParams, TruncatedSum};

/// `C^∞` ramp `e^{−1/u}/(e^{−1/u} + e^{−1/(1−u)})`, clamped to `[0, 1]`.
fn ramp(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

/// Even smooth cutoff: `1` on `1 ≤ |x| ≤ 2`, `0` for `|x| ≤ 1/2` or `|x| ≥ 4`.
pub fn sigma(x: f64) -> f64 {
    let a = x.abs();
    ramp((a - 0.5) / 0.5) * ramp((4.0 - a) / 2.0)
}

/// Integers `j` with `σ(j/N) ≠ 0`, i.e. `N/2 < |j| < 4N`.
fn cutoff_support(n: u64) -> impl Iterator<Item = i64> {
    let lo = (n / 2) as i64 + 1;
    let hi = 4 * n as i64;
    (-hi..=-lo).chain(lo..=hi)
}

/// `Σ_j σ(j/N) e^{2πi(tj² − xj)}`.
pub fn smoothed_sum(n: u64, t: f64, x: f64) -> Result<Complex64> {
    if n < 2 {
        return Err(invalid("N", "must be at least 2"));
    }
    let nf = n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in cutoff_support(n) {
        let w = sigma(j as f64 / nf);
        if w == 0.0 {
            continue;
        }
        let jf = j as f64;
        let phase = (t * jf * jf - x * jf).rem_euclid(1.0);
        acc += Complex64::from_polar(w, 2.0 * PI * phase);
    }
    Ok(acc)
}

/// `Σ_j σ(j/N)`, the trivial bound on [`smoothed_sum`].
pub fn cutoff_mass(n: u64) -> f64 {
    let nf = n as f64;
    cutoff_support(n).map(|j| sigma(j as f64 / nf)).sum()
}

/// Structure functions `I_{N,p}` for one `N` and several `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureFunctionTable {
    /// Dyadic scale.
    pub n: u64,
    /// Exponents.
    pub p: Vec<f64>,
    /// `I_{N,p}`, aligned with `p`.
    pub values: Vec<f64>,
    /// Time step of the Riemann sum.
    pub t_step: f64,
    /// `Σ_k |Σ_{j: ν_j = k} σ(j/N)|²` over distinct frequencies.
    pub parseval: f64,
}

/// `I_{N,p} = ∫_0^1 |Σ_j σ(j/N) e^{2πit(j² − 2nj/m)}|^p dt` for each `p`.
///
/// The sum is tabulated on the grid `t_l = l/(256N²)` by one inverse FFT
/// of length `256mN²`, whose bins are the integer frequencies `mj² − 2nj`.
pub fn structure_functions(n: u64, p: &[f64], params: ThetaFamilyParams) -> Result<StructureFunctionTable> {
    if !(16..=512).contains(&n) {
        return Err(invalid("N", "must lie in [16, 512]"));
    }
    if p.iter().any(|&v| !(1.0..=8.0).contains(&v)) {
        return Err(invalid("p", "must lie in [1, 8]"));
    }
    let m = params.m as i64;
    let shift = 2 * params.n as i64;
    let samples = 256 * (n as usize) * (n as usize);
    let len = samples * params.m as usize;
    let mut grid = vec![Complex64::new(0.0, 0.0); len];
    let nf = n as f64;
    for j in cutoff_support(n) {
        let k = m * j * j - shift * j;
        grid[k.rem_euclid(len as i64) as usize] += sigma(j as f64 / nf);
    }
    let parseval = grid.iter().map(|c| c.norm_sqr()).sum();
    FftPlanner::new().plan_fft_inverse(len).process(&mut grid);
    let mut sums = vec![0.0; p.len()];
    for s in &grid[..samples] {
        let a = s.norm();
        for (acc, &e) in sums.iter_mut().zip(p) {
            *acc += a.powf(e);
        }
    }
    Ok(StructureFunctionTable {
        n,
        p: p.to_vec(),
        values: sums.into_iter().map(|v| v / samples as f64).collect(),
        t_step: 1.0 / samples as f64,
        parseval,
    })
}

/// Single `I_{N,p}`.
pub fn structure_function(n: u64, p: f64, params: ThetaFamilyParams) -> Result<f64> {
    Ok(structure_functions(n, &[p], params)?.values[0])
}

/// `η(p) = min(1 + p/2, 3p/4)`.
pub fn analytic_eta(p: f64) -> f64 {
    (1.0 + 0.5 * p).min(0.75 * p)
}

/// Growth rate of `I_{N,p}` implied by `η`: `p − 2` above 4, `p/2` below.
pub fn predicted_slope(p: f64) -> f64 {
    if p > 4.0 {
        p - 2.0
    } else {
        0.5 * p
    }
}

/// Fitted and predicted growth of `I_{N,p}` in `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaFit {
    /// Exponent.
    pub p: f64,
    /// Scales used.
    pub n_list: Vec<u64>,
    /// `I_{N,p}` per scale.
    pub values: Vec<f64>,
    /// Least-squares slope of `log I` against `log N`.
    pub fitted_slope: f64,
    /// Predicted slope; at `p = 4` a `log N` factor is ignored.
    pub predicted_slope: f64,
    /// `η(p)` of the analytic law.
    pub eta_predicted: f64,
}

/// Fits `log I_{N,p}` against `log N` over dyadic scales.
pub fn eta_fit(p: f64, n_list: &[u64], params: ThetaFamilyParams) -> Result<EtaFit> {
    let fits = eta_fits(&[p], n_list, params)?;
    Ok(fits.into_iter().next().expect("one exponent requested"))
}

/// [`eta_fit`] for several exponents sharing the tabulated sums.
pub fn eta_fits(p: &[f64], n_list: &[u64], params: ThetaFamilyParams) -> Result<Vec<EtaFit>> {
    if n_list.len() < 3 || n_list.iter().any(|n| !n.is_power_of_two()) {
        return Err(invalid("N_list", "need at least 3 dyadic scales"));
    }
    let tables = n_list
        .iter()
        .map(|&n| structure_functions(n, p, params))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    p.iter()
        .enumerate()
        .map(|(i, &e)| {
            let values: Vec<f64> = tables.iter().map(|t| t.values[i]).collect();
            let fitted_slope = log_log_slope(&xs, &values).ok_or_else(|| invalid("p", "degenerate structure functions"))?;
            Ok(EtaFit {
                p: e,
                n_list: n_list.to_vec(),
                values,
                fitted_slope,
                predicted_slope: predicted_slope(e),
                eta_predicted: analytic_eta(e),
            })
        })
        .collect()
}

/// `inf_p (βp − η(p) + 1)` over `p = 0.01, 0.02, …, 40`.
pub fn frisch_parisi<F: Fn(f64) -> f64>(eta: F, beta: f64) -> f64 {
    (1..=4000)
        .map(|k| {
            let p = k as f64 / 100.0;
            beta * p - eta(p) + 1.0
        })
        .fold(f64::INFINITY, f64::min)
}

/// Spectrum `d(β)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    /// Hölder exponents.
    pub beta: Vec<f64>,
    /// `d(β)` from the Frisch–Parisi transform.
    pub d: Vec<f64>,
    /// `(p, η(p))` samples of the exponent law used.
    pub eta_table: Vec<(f64, f64)>,
}

/// Frisch–Parisi spectrum of `η` on `betas`.
pub fn spectrum<F: Fn(f64) -> f64>(eta: F, betas: &[f64]) -> SpectrumResult {
    SpectrumResult {
        beta: betas.to_vec(),
        d: betas.iter().map(|&b| frisch_parisi(&eta, b)).collect(),
        eta_table: (1..=16).map(|k| (k as f64 * 0.5, eta(k as f64 * 0.5))).collect(),
    }
}

/// How an expansion ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// All requested digits were produced.
    Complete,
    /// The value is rational (to working precision) with this many digits.
    Rational {
        /// Digits produced.
        depth: usize,
    },
    /// The next convergent would overflow `u128`.
    Overflow {
        /// Digits produced.
        depth: usize,
    },
}

/// Continued fraction `x = [0; a₁, a₂, …]` with its convergents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuedFractionExpansion {
    /// Expanded value.
    pub value: f64,
    /// Digits `a_k`, `k ≥ 1`.
    pub digits: Vec<u64>,
    /// Convergents `(p_k, q_k)`, `k ≥ 1`.
    pub convergents: Vec<(u128, u128)>,
    /// `|x − p_k/q_k|`, from the complete quotients.
    pub distances: Vec<f64>,
    /// `r_k = −log|x − p_k/q_k| / log q_k`; `None` for `q_k = 1` or `x = p_k/q_k`.
    pub exponents: Vec<Option<f64>>,
    /// How the expansion ended.
    pub termination: Termination,
}

impl ContinuedFractionExpansion {
    /// Builds convergents and distances from digits and complete quotients
    /// `ξ_{k+1} = [a_{k+1}; a_{k+2}, …]` (`∞` when `x = p_k/q_k`).
    fn from_digits(value: f64, digits: Vec<u64>, tails: &[f64], termination: Termination) -> Result<Self> {
        let mut convergents = Vec::with_capacity(digits.len());
        let (mut p_prev, mut q_prev) = (1u128, 0u128);
        let (mut p, mut q) = (0u128, 1u128);
        for (k, &a) in digits.iter().enumerate() {
            let a = a as u128;
            let p_next = a.checked_mul(p).and_then(|v| v.checked_add(p_prev));
            let q_next = a.checked_mul(q).and_then(|v| v.checked_add(q_prev));
            let (Some(pn), Some(qn)) = (p_next, q_next) else {
                return Err(Error::Overflow { depth: k });
            };
            p_prev = p;
            q_prev = q;
            p = pn;
            q = qn;
            convergents.push((p, q));
        }
        let mut distances = Vec::with_capacity(digits.len());
        let mut exponents = Vec::with_capacity(digits.len());
        for (k, &(_, qk)) in convergents.iter().enumerate() {
            let q_before = if k == 0 { 1.0 } else { convergents[k - 1].1 as f64 };
            let qf = qk as f64;
            // |x − p_k/q_k| = 1/(q_k(ξ_{k+1} q_k + q_{k−1})).
            let dist = 1.0 / (qf * (tails[k] * qf + q_before));
            distances.push(dist);
            exponents.push(if qk > 1 && dist > 0.0 { Some(-dist.ln() / qf.ln()) } else { None });
        }
        Ok(Self {
            value,
            digits,
            convergents,
            distances,
            exponents,
            termination,
        })
    }
}

/// Expansion of `x ∈ (0, 1)` to at most `k` digits.
///
/// Stops early, reporting [`Termination::Rational`], when the fractional
/// remainder drops below `10⁻⁹`.
pub fn continued_fraction(x: f64, k: usize) -> Result<ContinuedFractionExpansion> {
    if !(x > 0.0 && x < 1.0) {
        return Err(invalid("x", "must lie in (0, 1)"));
    }
    if k == 0 {
        return Err(invalid("K", "must be positive"));
    }
    let mut digits = Vec::new();
    let mut quotients = Vec::new();
    let mut frac = x;
    let mut termination = Termination::Complete;
    while digits.len() < k {
        let xi = 1.0 / frac;
        let a = xi.floor();
        quotients.push(xi);
        digits.push(a as u64);
        frac = xi - a;
        if frac < 1e-9 {
            termination = Termination::Rational { depth: digits.len() };
            break;
        }
    }
    // ξ_{k+1} for every produced digit.
    let mut tails: Vec<f64> = quotients[1..].to_vec();
    tails.push(match termination {
        Termination::Complete => 1.0 / frac,
        Termination::Rational { .. } | Termination::Overflow { .. } => f64::INFINITY,
    });
    ContinuedFractionExpansion::from_digits(x, digits, &tails, termination)
}

/// Value of `[0; a₁, …, a_K]` and the complete quotients of its digits.
fn evaluate_digits(digits: &[u64]) -> (f64, Vec<f64>) {
    let mut tails = vec![f64::INFINITY; digits.len()];
    let mut xi = f64::INFINITY;
    for k in (0..digits.len()).rev() {
        // Complete quotient starting at the digit after `k`.
        tails[k] = xi;
        xi = digits[k] as f64 + 1.0 / xi;
    }
    (1.0 / xi, tails)
}

/// Builds `x` whose convergent exponents approach `r`, with digits
/// `a_{k+1} = max(1, ⌈q_k^{r−2}⌉)`.
///
/// With `force_odd`, each digit following an odd `q_k` is bumped by one if
/// needed so that every `q_k` is odd. When `q_k` would leave `u128` the
/// expansion stops with [`Termination::Overflow`]; [`Error::Overflow`] is
/// returned only if not a single digit fits.
pub fn irrationality_target(r: f64, k: usize, force_odd: bool) -> Result<(f64, ContinuedFractionExpansion)> {
    if !(r >= 2.0) {
        return Err(invalid("r", "must be at least 2"));
    }
    if k == 0 {
        return Err(invalid("K", "must be positive"));
    }
    let mut digits = Vec::new();
    let (mut q_prev, mut q) = (0u128, 1u128);
    while digits.len() < k {
        let target = (q as f64).powf(r - 2.0).ceil().max(1.0);
        if target >= u64::MAX as f64 {
            break;
        }
        let mut a = target as u64;
        // With q_k odd, q_{k+1} = a q_k + q_{k−1} is odd iff a + q_{k−1} is.
        if force_odd && q % 2 == 1 && (a as u128 + q_prev) % 2 == 0 {
            a += 1;
        }
        let next = (a as u128).checked_mul(q).and_then(|v| v.checked_add(q_prev));
        let Some(next) = next else { break };
        digits.push(a);
        q_prev = q;
        q = next;
    }
    if digits.is_empty() {
        return Err(Error::Overflow { depth: 0 });
    }
    let (x, tails) = evaluate_digits(&digits);
    let termination = if digits.len() < k {
        Termination::Overflow { depth: digits.len() }
    } else {
        Termination::Complete
    };
    // The last digit has no successor: treat its tail as the next target digit.
    let mut tails = tails;
    if let Some(last) = tails.last_mut() {
        let q_last = q as f64;
        *last = q_last.powf(r - 2.0).max(1.0);
    }
    let exp = ContinuedFractionExpansion::from_digits(x, digits, &tails, termination)?;
    Ok((x, exp))
}

/// Fitted local exponent with its regression data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    /// Least-squares exponent.
    pub exponent: f64,
    /// Fitted amplitude `A` of `A h^e`.
    pub amplitude: f64,
    /// Scales.
    pub scales: Vec<f64>,
    /// `sup_{|h'| ≤ h} |f(x+h') − f(x)|` per scale.
    pub sups: Vec<f64>,
}

/// Points per side sampled inside each window.
const WINDOW_SAMPLES: usize = 16;

/// Slope of `log sup_{|h'| ≤ h}|f(x+h') − f(x)|` against `log h`.
///
/// `f` must resolve the increments: its tail bound at `x` may not exceed
/// `h_min^{3/4}`.
pub fn holder_estimate<F>(f: F, x: f64, h_min: f64, h_max: f64, n_scales: usize) -> Result<HolderFit>
where
    F: Fn(f64) -> Result<TruncatedSum>,
{
    if !(h_min > 0.0 && h_min < h_max) {
        return Err(invalid("h", "need 0 < h_min < h_max"));
    }
    if n_scales < 3 {
        return Err(invalid("n_scales", "need at least 3 scales"));
    }
    let base = f(x)?;
    if base.tail_bound > h_min.powf(0.75) {
        return Err(invalid(
            "f",
            format!("tail bound {:e} exceeds h_min^(3/4) = {:e}", base.tail_bound, h_min.powf(0.75)),
        ));
    }
    let ratio = (h_max / h_min).ln() / (n_scales - 1) as f64;
    let scales: Vec<f64> = (0..n_scales).map(|i| h_min * (ratio * i as f64).exp()).collect();
    let mut sups = Vec::with_capacity(n_scales);
    let mut running: f64 = 0.0;
    let mut previous = 0.0;
    for &h in &scales {
        for k in 1..=WINDOW_SAMPLES {
            let step = h * k as f64 / WINDOW_SAMPLES as f64;
            if step <= previous {
                continue;
            }
            for s in [step, -step] {
                running = running.max((f(x + s)?.value - base.value).norm());
            }
        }
        previous = h;
        sups.push(running);
    }
    let (exponent, intercept) = fit_power(&scales, &sups)?;
    Ok(HolderFit {
        exponent,
        amplitude: intercept.exp(),
        scales,
        sups,
    })
}

fn fit_power(h: &[f64], v: &[f64]) -> Result<(f64, f64)> {
    if v.iter().any(|&a| !(a > 0.0)) {
        return Err(invalid("f", "vanishing increments"));
    }
    let lx: Vec<f64> = h.iter().map(|a| a.ln()).collect();
    let ly: Vec<f64> = v.iter().map(|a| a.ln()).collect();
    linear_fit(&lx, &ly).ok_or_else(|| invalid("h", "degenerate scales"))
}

/// `𝔯_{n,m}(t + h) − 𝔯_{n,m}(t)` summed directly over `|j| ≤ N`.
///
/// Each term is `e^{2πit d²}(e^{2πih d²} − 1)/d²` with `d = mj − n`; the
/// tail is bounded by `Σ_{|j|>N} min(2πh, 2/d²)`.
pub fn riemann_nm_increment(t: f64, h: f64, params: ThetaFamilyParams, n_terms: u64) -> Result<TruncatedSum> {
    if n_terms == 0 {
        return Err(invalid("N", "must be positive"));
    }
    let m = params.m as i64;
    let n = params.n as i64;
    let big = n_terms as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (0..=big).rev().chain(-big..0) {
        let d = m * j - n;
        if d == 0 {
            acc += Complex64::new(0.0, 2.0 * PI * h);
            continue;
        }
        let d2 = (d as f64) * (d as f64);
        let base = 2.0 * PI * (t * d2).rem_euclid(1.0);
        let inc = 2.0 * PI * (h * d2).rem_euclid(1.0);
        acc += Complex64::from_polar(1.0 / d2, base) * expm1_i(inc);
    }
    let shift = params.n as f64 / params.m as f64;
    let tail_bound = if (n_terms as f64) > shift {
        4.0 / ((params.m as f64).powi(2) * (n_terms as f64 - shift))
    } else {
        f64::INFINITY
    };
    Ok(TruncatedSum {
        value: acc,
        tail_bound,
        terms_used: n_terms,
    })
}

/// Power-law fit of increments at a rational point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementFit {
    /// Fitted `A` of `A h^e`.
    pub amplitude: f64,
    /// Fitted `e`.
    pub exponent: f64,
    /// `|J(0)|/(m√q)` for odd `q`.
    pub predicted_amplitude: Option<f64>,
    /// Step sizes.
    pub h: Vec<f64>,
    /// `|𝔯_{n,m}(p/q + h) − 𝔯_{n,m}(p/q)|` per step.
    pub increments: Vec<f64>,
    /// `|Δ(h) − (J(0)/m)(τ₀/q)√h| / min(h√q, (hq)^{3/2})` per step; `None`
    /// where the truncation bound is not below 5% of the envelope.
    pub residual_ratios: Vec<Option<f64>>,
}

impl IncrementFit {
    /// Largest resolved residual ratio, the fitted envelope constant.
    pub fn residual_constant(&self) -> Option<f64> {
        self.residual_ratios.iter().flatten().copied().reduce(f64::max)
    }
}

/// Largest term count spent on one increment.
const MAX_INCREMENT_TERMS: u64 = 20_000_000;

/// Fits `|𝔯_{n,m}(p/q + h) − 𝔯_{n,m}(p/q)| ≈ A h^e` over `h_list`.
///
/// Each increment uses at least `⌈2000/√h⌉` terms, which keeps the tail
/// bound below `0.2%` of `√h`; the term count is raised up to `2·10⁷` when
/// that resolves the residual envelope.
pub fn rational_increment_fit(params: ThetaFamilyParams, p: i64, q: u64, h_list: &[f64]) -> Result<IncrementFit> {
    if q == 0 || crate::theta_sums::gcd(p.unsigned_abs(), q) != 1 {
        return Err(invalid("q", "need gcd(p, q) = 1 and q ≥ 1"));
    }
    if h_list.len() < 2 || h_list.iter().any(|&h| !(h > 0.0 && h < 1.0)) {
        return Err(invalid("h_list", "need at least two steps in (0, 1)"));
    }
    let t = p as f64 / q as f64;
    let tau0 = gauss_sum(p, q, params.m, params.n)?;
    let j0 = j_function(0.0)?;
    let lead = j0 * tau0 / (params.m as f64 * q as f64);
    let qf = q as f64;
    let mut increments = Vec::with_capacity(h_list.len());
    let mut residual_ratios = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let envelope = (h * qf.sqrt()).min((h * qf).powf(1.5));
        let fit_terms = (2000.0 / h.sqrt()).ceil() as u64;
        let resolving = (80.0 / (params.m as f64).powi(2) / envelope).ceil() as u64;
        let terms = if resolving <= MAX_INCREMENT_TERMS {
            fit_terms.max(resolving)
        } else {
            fit_terms
        };
        let delta = riemann_nm_increment(t, h, params, terms)?;
        increments.push(delta.value.norm());
        residual_ratios.push(
            (delta.tail_bound <= 0.05 * envelope).then(|| (delta.value - lead * h.sqrt()).norm() / envelope),
        );
    }
    let (exponent, intercept) = fit_power(h_list, &increments)?;
    Ok(IncrementFit {
        amplitude: intercept.exp(),
        exponent,
        predicted_amplitude: (q % 2 == 1).then(|| j0.norm() / (params.m as f64 * qf.sqrt())),
        h: h_list.to_vec(),
        increments,
        residual_ratios,
    })
}

/// Quadrature window half-width of [`j_function`].
const J_WINDOW: f64 = 50.0;

/// `∫_z^∞ sin(v)/v dv = π/2 − Si(z)` for `z ≥ 0`.
///
/// Power series for `z ≤ 2`; otherwise the continued fraction of `E₁(iz)`.
fn sine_integral_tail(z: f64) -> f64 {
    if z <= 2.0 {
        let mut term = z;
        let mut si = z;
        let mut k = 0.0;
        while term.abs() > 1e-18 {
            term *= -z * z / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            k += 1.0;
            si += term / (2.0 * k + 1.0);
        }
        return 0.5 * PI - si;
    }
    // Modified Lentz evaluation of E₁(iz) e^{iz}.
    let mut b = Complex64::new(1.0, z);
    let mut c = Complex64::new(1e300, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..10_000 {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let e1 = h * Complex64::from_polar(1.0, -z);
    -e1.im
}

/// `∫_S^∞ cos(sx)/s² ds = cos(Sx)/S − x(π/2 − Si(Sx))` for `x ≥ 0`.
fn cosine_tail(s0: f64, x: f64) -> f64 {
    (s0 * x).cos() / s0 - x * sine_integral_tail(s0 * x)
}

/// `∫_S^∞ e^{i(2πs² + ξs)} s^{−2} ds` for `4πS + ξ > 0`, by two
/// integrations by parts.
fn chirp_tail(s0: f64, xi: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let phase = 2.0 * PI * s0 * s0 + xi * s0;
    let dphi = 4.0 * PI * s0 + xi;
    let g = 1.0 / (s0 * s0);
    // h = (g/(iφ'))' = i(2/(s³φ') + 4π/(s²φ'²)).
    let h = i * (2.0 / (s0 * s0 * s0 * dphi) + 4.0 * PI / (s0 * s0 * dphi * dphi));
    let e = Complex64::from_polar(1.0, phase);
    -e * g / (i * dphi) + e * h / (i * dphi)
}

/// `J(x) = ∫_ℝ (e^{2πis²} − 1) s^{−2} e^{−isx} ds`.
///
/// Adaptive quadrature on `[0, 50]` of the even integrand plus closed-form
/// tails; `J(0) = 2√2 π e^{3iπ/4}`.
pub fn j_function(x: f64) -> Result<Complex64> {
    let x = x.abs();
    if x >= 4.0 * PI * J_WINDOW {
        return Err(invalid("x", "outside the range of the tail expansion"));
    }
    let mut f = |s: f64| {
        let core = if s == 0.0 {
            Complex64::new(0.0, 2.0 * PI)
        } else {
            expm1_i(2.0 * PI * s * s) / (s * s)
        };
        core * (s * x).cos()
    };
    let pieces = (J_WINDOW * (4.0 + x)).ceil() as usize;
    let body = integrate(&mut f, 0.0, J_WINDOW, pieces, 1e-13, 1e-12)?.value;
    let chirp = 0.5 * (chirp_tail(J_WINDOW, x) + chirp_tail(J_WINDOW, -x));
    let plain = cosine_tail(J_WINDOW, x);
    Ok(2.0 * (body + chirp - plain))
}

/// `2√2 π e^{3iπ/4}`.
pub fn j_at_zero() -> Complex64 {
    Complex64::from_polar(2.0 * SQRT_2 * PI, 0.75 * PI)
}
