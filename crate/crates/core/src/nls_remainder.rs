//! Corner-data sequences and the remainder system of the polygonal ansatz.
//!
//! The filament function is written as
//! `u(t,x) = Σ_j e^{−i(|α_j|²−S) log√t} (α_j + R_j(t)) e^{i(x−j)²/(4t)}/√t`
//! with `S = Σ|α_j|²`, which solves
//! `iu_t + u_xx + ½(|u|² − S/t)u = 0` exactly when
//! `R_k' = i f_k − (i/2t)(|α_k+R_k|² − |α_k|²)(α_k+R_k)`, where
//! `f_k = (1/2t) Σ_{NR_k} e^{−iΔ/(4t)} e^{iω log√t} z_{j₁} z̄_{j₂} z_{j₃}`,
//! `z = α + R`, `j₁−j₂+j₃ = k`, `Δ = k²−j₁²+j₂²−j₃² = 2(j₁−j₂)(j₃−j₂) ≠ 0`
//! and `ω = |α_k|²−|α_{j₁}|²+|α_{j₂}|²−|α_{j₃}|²`.
//!
//! Modes are stored as centered slices: index `i` holds mode `k = i − K`
//! for a slice of length `2K + 1`. Truncating every sum to `|k| ≤ K` is a
//! Galerkin truncation and conserves `Σ|z_k|²` exactly.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fit::log_log_slope;
use crate::ode::{Control, Dopri5, OdeStats, OdeSystem};
use crate::quad;
use crate::theta_sums::{support_radius, RationalTorsion};

/// Parameters of a polygonal line with equal corner angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerParams {
    /// Scale parameter.
    pub n: u64,
    /// Support exponent; corners sit at `|k| ≤ ⌊n^ν⌋`.
    pub nu: f64,
    /// Total turning parameter, `n(π − θ_n) = Γ`.
    pub gamma: f64,
    /// Twist between consecutive corners.
    pub torsion: RationalTorsion,
    /// Curvature coefficient of each corner.
    pub c_n: f64,
    /// Corner angle.
    pub theta_n: f64,
}

/// Finite-support complex sequence `{α_k}` encoding the corners.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSequence {
    params: Option<CornerParams>,
    radius: u64,
    values: Vec<Complex64>,
}

impl AlphaSequence {
    /// Sequence supported on `|k| ≤ (len−1)/2` with the given centered values.
    pub fn from_values(values: Vec<Complex64>) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(invalid("values", "length must be odd (centered modes)"));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(invalid("values", "must be finite"));
        }
        Ok(Self {
            params: None,
            radius: (values.len() / 2) as u64,
            values,
        })
    }

    /// Single corner `α_0 = c`.
    pub fn single_corner(c: f64) -> Self {
        Self {
            params: None,
            radius: 0,
            values: vec![Complex64::new(c, 0.0)],
        }
    }

    /// Construction parameters, when built from a polygonal line.
    pub fn params(&self) -> Option<&CornerParams> {
        self.params.as_ref()
    }

    /// Largest `|k|` of the support.
    pub fn radius(&self) -> u64 {
        self.radius
    }

    /// Centered values on the support.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `α_k`, zero outside the support.
    pub fn get(&self, k: i64) -> Complex64 {
        let r = self.radius as i64;
        if k.abs() > r {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(k + r) as usize]
        }
    }

    /// `Σ|α_k|²`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Centered values on `|k| ≤ k_max`, zero-padded.
    pub fn extended(&self, k_max: u64) -> Vec<Complex64> {
        let k = k_max as i64;
        (-k..=k).map(|j| self.get(j)).collect()
    }
}

/// `c = √(−(2/π) ln sin(θ/2))`, the curvature coefficient of a corner of angle `θ`.
pub fn curvature_from_angle(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(invalid("theta", "must lie in (0, π]"));
    }
    // sin(θ/2) = cos(x) with x = (π−θ)/2; ln cos x = ln(1 − 2 sin²(x/2)).
    let half = (0.25 * (PI - theta)).sin();
    let c2 = -(2.0 / PI) * (-2.0 * half * half).ln_1p();
    Ok(c2.max(0.0).sqrt())
}

/// Corner data `α_k = c_n e^{ikω₀}` on `|k| ≤ ⌊n^ν⌋`, with `θ_n = π − Γ/n`.
pub fn build_alpha(n: u64, nu: f64, gamma: f64, torsion: RationalTorsion) -> Result<AlphaSequence> {
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(invalid("nu", "must lie in (0, 1]"));
    }
    if !(gamma >= 0.0) || gamma / n as f64 >= PI {
        return Err(invalid("Gamma", "need 0 ≤ Γ/n < π for a valid corner angle"));
    }
    let theta_n = PI - gamma / n as f64;
    let c_n = curvature_from_angle(theta_n)?;
    let radius = support_radius(n, nu);
    let omega = torsion.omega0();
    let r = radius as i64;
    let values = (-r..=r)
        .map(|k| Complex64::from_polar(c_n, k as f64 * omega))
        .collect();
    Ok(AlphaSequence {
        params: Some(CornerParams {
            n,
            nu,
            gamma,
            torsion,
            c_n,
            theta_n,
        }),
        radius,
        values,
    })
}

fn radius_of(len: usize) -> i64 {
    assert!(len % 2 == 1, "centered mode slices have odd length");
    (len / 2) as i64
}

/// `1/(4t)` reduced modulo `2π`; exact for integer multiples.
#[inline]
pub(crate) fn reduced_inverse_time(t: f64) -> f64 {
    (0.25 / t).rem_euclid(TAU)
}

/// `f_k(t)` by the double loop over `(j₁, j₂)` with `j₃ = k − j₁ + j₂`.
///
/// `state` holds `z = α + R` and `alpha_sq` holds `|α_j|²`, both centered
/// on the same range; cost `O(M²)` for `M` modes.
pub fn nonresonant_force(k: i64, t: f64, state: &[Complex64], alpha_sq: &[f64]) -> Complex64 {
    assert_eq!(state.len(), alpha_sq.len());
    let r = radius_of(state.len());
    if k.abs() > r {
        return Complex64::new(0.0, 0.0);
    }
    let s = reduced_inverse_time(t);
    let log_half = 0.5 * t.ln();
    let ak = alpha_sq[(k + r) as usize];
    let mut acc = Complex64::new(0.0, 0.0);
    for j1 in -r..=r {
        let z1 = state[(j1 + r) as usize];
        let a1 = alpha_sq[(j1 + r) as usize];
        for j2 in -r..=r {
            let j3 = k - j1 + j2;
            if j3.abs() > r {
                continue;
            }
            let delta = 2 * (j1 - j2) * (j3 - j2);
            if delta == 0 {
                continue;
            }
            let i2 = (j2 + r) as usize;
            let i3 = (j3 + r) as usize;
            let omega = ak - a1 + alpha_sq[i2] - alpha_sq[i3];
            let phase = -(delta as f64) * s + omega * log_half;
            acc += Complex64::from_polar(1.0, phase) * z1 * state[i2].conj() * state[i3];
        }
    }
    acc / (2.0 * t)
}

/// One non-resonant interaction `(j₁, j₂, j₃)` feeding mode `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Triple {
    /// First factor index.
    pub j1: i64,
    /// Conjugated factor index.
    pub j2: i64,
    /// Third factor index.
    pub j3: i64,
    /// `k² − j₁² + j₂² − j₃²`, never zero.
    pub delta: i64,
    /// `|α_k|² − |α_{j₁}|² + |α_{j₂}|² − |α_{j₃}|²`.
    pub omega: f64,
}

/// Precomputed non-resonant triples for every mode of a centered range.
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceIndex {
    k_max: i64,
    triples: Vec<Vec<Triple>>,
}

impl ResonanceIndex {
    /// Enumerates all non-resonant triples for `|k| ≤ K`; memory `O(M³)`.
    pub fn new(alpha_sq: &[f64]) -> Self {
        let r = radius_of(alpha_sq.len());
        let a = |j: i64| alpha_sq[(j + r) as usize];
        let triples = (-r..=r)
            .map(|k| {
                let mut list = Vec::new();
                for j1 in -r..=r {
                    for j2 in -r..=r {
                        let j3 = k - j1 + j2;
                        if j3.abs() > r {
                            continue;
                        }
                        let delta = 2 * (j1 - j2) * (j3 - j2);
                        if delta != 0 {
                            list.push(Triple {
                                j1,
                                j2,
                                j3,
                                delta,
                                omega: a(k) - a(j1) + a(j2) - a(j3),
                            });
                        }
                    }
                }
                list
            })
            .collect();
        Self { k_max: r, triples }
    }

    /// Largest mode index covered.
    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    /// Triples feeding mode `k`.
    pub fn triples(&self, k: i64) -> &[Triple] {
        &self.triples[(k + self.k_max) as usize]
    }

    /// `f_k(t)` from the stored triples.
    pub fn force(&self, k: i64, t: f64, state: &[Complex64]) -> Complex64 {
        let r = self.k_max;
        let s = reduced_inverse_time(t);
        let log_half = 0.5 * t.ln();
        let mut acc = Complex64::new(0.0, 0.0);
        for tr in self.triples(k) {
            let phase = -(tr.delta as f64) * s + tr.omega * log_half;
            acc += Complex64::from_polar(1.0, phase)
                * state[(tr.j1 + r) as usize]
                * state[(tr.j2 + r) as usize].conj()
                * state[(tr.j3 + r) as usize];
        }
        acc / (2.0 * t)
    }
}

/// FFT evaluation of all `f_k` at once in `O(M log M)`.
///
/// With `w_j = z_j e^{i(j²/(4t) − |α_j|² log√t)}` the full cubic sum is the
/// `k`-th Fourier coefficient of `|V|²V`, `V` the trigonometric polynomial of
/// `w` sampled on `M > 4K` points (no aliasing into `|k| ≤ K`). The resonant
/// part `2Σ|z|² z_k − |z_k|² z_k` is then subtracted.
pub struct ForceEvaluator {
    k_max: usize,
    grid: usize,
    alpha_sq: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
    phases: Vec<Complex64>,
}

impl ForceEvaluator {
    /// Evaluator for the centered range of `alpha_sq`.
    pub fn new(alpha_sq: &[f64]) -> Self {
        let k_max = radius_of(alpha_sq.len()) as usize;
        let grid = (4 * k_max + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid);
        let inverse = planner.plan_fft_inverse(grid);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            k_max,
            grid,
            alpha_sq: alpha_sq.to_vec(),
            forward,
            inverse,
            buffer: vec![Complex64::new(0.0, 0.0); grid],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            phases: vec![Complex64::new(0.0, 0.0); alpha_sq.len()],
        }
    }

    /// Largest mode index covered.
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// FFT length in use.
    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Writes `f_k(t)` for every `|k| ≤ K` into `out`.
    pub fn evaluate(&mut self, t: f64, z: &[Complex64], out: &mut [Complex64]) {
        let r = self.k_max as i64;
        let m = self.grid as i64;
        assert_eq!(z.len(), self.alpha_sq.len());
        assert_eq!(out.len(), z.len());
        let s = reduced_inverse_time(t);
        let log_half = 0.5 * t.ln();
        self.buffer.fill(Complex64::new(0.0, 0.0));
        let mut mass = 0.0;
        for (i, zi) in z.iter().enumerate() {
            let j = i as i64 - r;
            let phase = (j * j) as f64 * s - self.alpha_sq[i] * log_half;
            self.phases[i] = Complex64::from_polar(1.0, phase);
            self.buffer[j.rem_euclid(m) as usize] = zi * self.phases[i];
            mass += zi.norm_sqr();
        }
        self.inverse
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        for v in self.buffer.iter_mut() {
            *v *= v.norm_sqr();
        }
        self.forward
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        let norm = 1.0 / (m as f64 * 2.0 * t);
        let inv2t = 1.0 / (2.0 * t);
        for (i, zi) in z.iter().enumerate() {
            let k = i as i64 - r;
            let full = self.phases[i].conj() * self.buffer[k.rem_euclid(m) as usize] * norm;
            let resonant = zi * (2.0 * mass - zi.norm_sqr()) * inv2t;
            out[i] = full - resonant;
        }
    }
}

/// The remainder equations as a real ODE system on interleaved `(re, im)` pairs.
pub struct RemainderSystem {
    alpha: Vec<Complex64>,
    alpha_sq: Vec<f64>,
    force: ForceEvaluator,
    z: Vec<Complex64>,
    f: Vec<Complex64>,
}

impl RemainderSystem {
    /// System for `alpha` on the range `|k| ≤ k_max` (`k_max ≥` the support radius).
    pub fn new(alpha: &AlphaSequence, k_max: u64) -> Result<Self> {
        if k_max < alpha.radius() {
            return Err(invalid("k_max", "must cover the support of alpha"));
        }
        let values = alpha.extended(k_max);
        let alpha_sq: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
        let len = values.len();
        Ok(Self {
            force: ForceEvaluator::new(&alpha_sq),
            alpha: values,
            alpha_sq,
            z: vec![Complex64::new(0.0, 0.0); len],
            f: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    /// Number of modes `2K + 1`.
    pub fn modes(&self) -> usize {
        self.alpha.len()
    }

    /// Largest mode index.
    pub fn k_max(&self) -> u64 {
        (self.alpha.len() / 2) as u64
    }

    /// Extended corner data on the mode range.
    pub fn alpha(&self) -> &[Complex64] {
        &self.alpha
    }

    /// `|α_k|²` on the mode range.
    pub fn alpha_sq(&self) -> &[f64] {
        &self.alpha_sq
    }

    /// `R'(t)` for interleaved `R` in `y`, written to `dy`.
    pub fn derivative(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let inv2t = 0.5 / t;
        for (i, zi) in self.z.iter_mut().enumerate() {
            *zi = self.alpha[i] + Complex64::new(y[2 * i], y[2 * i + 1]);
        }
        self.force.evaluate(t, &self.z, &mut self.f);
        for i in 0..self.z.len() {
            let z = self.z[i];
            let coef = (z.norm_sqr() - self.alpha_sq[i]) * inv2t;
            // i f − i·coef·z
            let d = Complex64::new(0.0, 1.0) * (self.f[i] - coef * z);
            dy[2 * i] = d.re;
            dy[2 * i + 1] = d.im;
        }
    }
}

impl OdeSystem for RemainderSystem {
    fn dim(&self) -> usize {
        2 * self.alpha.len()
    }

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        self.derivative(t, y, dy);
    }
}

pub(crate) fn to_complex(y: &[f64]) -> Vec<Complex64> {
    y.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Run configuration of [`integrate_remainder`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderOptions {
    /// Start time; `R(ε) = 0`.
    pub eps: f64,
    /// Final time.
    pub t_end: f64,
    /// Local absolute and relative tolerance.
    pub tol: f64,
    /// Mode range; defaults to the support radius.
    pub k_max: Option<u64>,
    /// Weight exponent of the sup norms `sup t^{−γ}‖R‖`.
    pub gamma: f64,
    /// Times in `(ε, T]` at which `R` is recorded (`ε` and `T` always are).
    pub sample_times: Vec<f64>,
    /// Repeat the run from `ε/2` and report the change of `R(T)`.
    pub startup_check: bool,
}

impl RemainderOptions {
    /// Options with `γ = 0.6`, no extra samples and no start-up check.
    pub fn new(eps: f64, t_end: f64, tol: f64) -> Self {
        Self {
            eps,
            t_end,
            tol,
            k_max: None,
            gamma: 0.6,
            sample_times: Vec::new(),
            startup_check: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < self.t_end && self.t_end <= 1.0) {
            return Err(invalid("eps", "need 0 < ε < T ≤ 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Samples and diagnostics of one remainder run.
#[derive(Debug, Clone, Serialize)]
pub struct RemainderTrajectory {
    /// Options of the run.
    pub options: RemainderOptions,
    /// Mode range used.
    pub k_max: u64,
    /// Sample times, starting at `ε` and ending at `T`.
    pub times: Vec<f64>,
    /// Centered `R_k` at each sample time.
    pub values: Vec<Vec<Complex64>>,
    /// Integrator counters.
    pub stats: OdeStats,
    /// `Σ|α_k|²`.
    pub initial_mass: f64,
    /// Largest `|Σ|α+R|² − Σ|α|²| / Σ|α|²` over accepted steps.
    pub max_relative_mass_drift: f64,
    /// `sup_t t^{−γ} Σ|R_k|` over accepted steps.
    pub sup_weighted_l1: f64,
    /// `sup_t t Σ|R_k'|` over accepted steps.
    pub sup_scaled_derivative_l1: f64,
    /// `sup_t t^{−γ} Σ(1+|k|)|R_k|` over accepted steps.
    pub sup_weighted_l11: f64,
    /// `max_k |R_k(T) − R̂_k(T)|` for the run started at `ε/2`, if requested.
    pub startup_change: Option<f64>,
}

impl RemainderTrajectory {
    /// `R(T)`.
    pub fn final_state(&self) -> &[Complex64] {
        self.values.last().expect("a trajectory always holds R(ε)")
    }
}

/// Integrates the remainder system from `R(ε) = 0` to `T`.
pub fn integrate_remainder(alpha: &AlphaSequence, options: &RemainderOptions) -> Result<RemainderTrajectory> {
    options.validate()?;
    let mut trajectory = run_remainder(alpha, options, options.eps)?;
    if options.startup_check {
        let half = run_remainder(alpha, options, 0.5 * options.eps)?;
        let change = trajectory
            .final_state()
            .iter()
            .zip(half.final_state())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        trajectory.startup_change = Some(change);
    }
    Ok(trajectory)
}

fn run_remainder(alpha: &AlphaSequence, options: &RemainderOptions, eps: f64) -> Result<RemainderTrajectory> {
    let k_max = options.k_max.unwrap_or(alpha.radius()).max(alpha.radius());
    let mut sys = RemainderSystem::new(alpha, k_max)?;
    let modes = sys.modes();
    let alpha_ext = sys.alpha().to_vec();
    let initial_mass = alpha.mass();
    let mut samples: Vec<f64> = options
        .sample_times
        .iter()
        .copied()
        .filter(|&s| s > eps && s < options.t_end)
        .collect();
    samples.sort_by(f64::total_cmp);
    samples.dedup();
    samples.push(options.t_end);

    let mut times = vec![eps];
    let mut values = vec![vec![Complex64::new(0.0, 0.0); modes]];
    let mut next = 0;
    let mut interp = vec![0.0; 2 * modes];
    let mut drift: f64 = 0.0;
    let mut sup_l1: f64 = 0.0;
    let mut sup_d: f64 = 0.0;
    let mut sup_l11: f64 = 0.0;
    let k_max_i = k_max as i64;

    let mut y = vec![0.0; 2 * modes];
    let stats = Dopri5::with_tol(options.tol).integrate(&mut sys, eps, options.t_end, &mut y, |view| {
        let w = view.t.powf(-options.gamma);
        let mut mass = 0.0;
        let mut l1 = 0.0;
        let mut l11 = 0.0;
        let mut dl1 = 0.0;
        for i in 0..modes {
            let r = Complex64::new(view.y[2 * i], view.y[2 * i + 1]);
            mass += (alpha_ext[i] + r).norm_sqr();
            l1 += r.norm();
            l11 += (1.0 + (i as i64 - k_max_i).abs() as f64) * r.norm();
            dl1 += Complex64::new(view.dy[2 * i], view.dy[2 * i + 1]).norm();
        }
        if initial_mass > 0.0 {
            drift = drift.max((mass - initial_mass).abs() / initial_mass);
        }
        sup_l1 = sup_l1.max(w * l1);
        sup_l11 = sup_l11.max(w * l11);
        sup_d = sup_d.max(view.t * dl1);
        while next < samples.len() && samples[next] <= view.t {
            let ts = samples[next];
            if ts == view.t {
                values.push(to_complex(view.y));
            } else {
                view.interpolate(ts, &mut interp);
                values.push(to_complex(&interp));
            }
            times.push(ts);
            next += 1;
        }
        Control::Continue
    })?;
    Ok(RemainderTrajectory {
        options: RemainderOptions {
            eps,
            ..options.clone()
        },
        k_max,
        times,
        values,
        stats,
        initial_mass,
        max_relative_mass_drift: drift,
        sup_weighted_l1: sup_l1,
        sup_scaled_derivative_l1: sup_d,
        sup_weighted_l11: sup_l11,
        startup_change: None,
    })
}

/// Residual of the integral form `R(t) = ∫_ε^t F(τ, R(τ)) dτ` along the run.
///
/// The run of `trajectory` is repeated up to `t`; on every accepted step the
/// right-hand side is integrated by three-point Gauss–Legendre quadrature on
/// the continuous extension, and the accumulated integral is compared with
/// the integrator's `R(t)`. Returns `max_k |Φ_k(t) − R_k(t)|`.
pub fn picard_verify(alpha: &AlphaSequence, trajectory: &RemainderTrajectory, t: f64) -> Result<f64> {
    let opts = &trajectory.options;
    if !(t > opts.eps && t <= opts.t_end) {
        return Err(invalid("t", "must lie in (ε, T] of the trajectory"));
    }
    let k_max = trajectory.k_max;
    let mut sys = RemainderSystem::new(alpha, k_max)?;
    let mut probe = RemainderSystem::new(alpha, k_max)?;
    let dim = sys.dim();
    let mut phi = vec![0.0; dim];
    let mut ys = vec![0.0; dim];
    let mut fs = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    Dopri5::with_tol(opts.tol).integrate(&mut sys, opts.eps, t, &mut y, |view| {
        let mid = 0.5 * (view.t_old + view.t);
        let half = 0.5 * (view.t - view.t_old);
        for (node, weight) in quad::GL3_NODES.iter().zip(quad::GL3_WEIGHTS) {
            let s = mid + half * node;
            view.interpolate(s, &mut ys);
            probe.derivative(s, &ys, &mut fs);
            for (p, f) in phi.iter_mut().zip(&fs) {
                *p += half * weight * f;
            }
        }
        Control::Continue
    })?;
    Ok(phi
        .chunks_exact(2)
        .zip(y.chunks_exact(2))
        .map(|(p, r)| Complex64::new(p[0] - r[0], p[1] - r[1]).norm())
        .fold(0.0, f64::max))
}

/// `∫_{t0}^{t1} f_k(τ, z(τ)) dτ` by direct adaptive quadrature along a prescribed path `z(τ)`.
pub fn force_integral_direct<P>(k: i64, t0: f64, t1: f64, alpha_sq: &[f64], path: P) -> Result<Complex64>
where
    P: Fn(f64) -> Vec<Complex64>,
{
    if !(t0 > 0.0 && t1 > t0) {
        return Err(invalid("t0", "need 0 < t0 < t1"));
    }
    quad::integrate(
        |tau| nonresonant_force(k, tau, &path(tau), alpha_sq),
        t0,
        t1,
        64,
        1e-13,
        1e-11,
    )
    .map(|r| r.value)
}

/// The same integral after one integration by parts in time.
///
/// Each triple contributes
/// `[(2τ/(iΔ)) G e^{−iΔ/(4τ)}]_{t0}^{t1} − (2/(iΔ)) ∫ e^{−iΔ/(4τ)} (τG)' dτ`,
/// `G = e^{iω log√τ} z_{j₁} z̄_{j₂} z_{j₃}`; `path_rate` supplies `z'(τ)`.
pub fn force_integral_by_parts<P, D>(
    k: i64,
    t0: f64,
    t1: f64,
    alpha_sq: &[f64],
    path: P,
    path_rate: D,
) -> Result<Complex64>
where
    P: Fn(f64) -> Vec<Complex64>,
    D: Fn(f64) -> Vec<Complex64>,
{
    if !(t0 > 0.0 && t1 > t0) {
        return Err(invalid("t0", "need 0 < t0 < t1"));
    }
    let index = ResonanceIndex::new(alpha_sq);
    let r = index.k_max();
    let i = Complex64::new(0.0, 1.0);
    let triples = index.triples(k).to_vec();
    let g_of = |tau: f64, z: &[Complex64], tr: &Triple| {
        Complex64::from_polar(1.0, tr.omega * 0.5 * tau.ln())
            * z[(tr.j1 + r) as usize]
            * z[(tr.j2 + r) as usize].conj()
            * z[(tr.j3 + r) as usize]
    };
    let boundary = |tau: f64| {
        let z = path(tau);
        let s = reduced_inverse_time(tau);
        triples.iter().fold(Complex64::new(0.0, 0.0), |acc, tr| {
            let d = tr.delta as f64;
            acc + 2.0 * tau / (i * d) * g_of(tau, &z, tr) * Complex64::from_polar(1.0, -d * s)
        })
    };
    let edge = boundary(t1) - boundary(t0);
    let body = quad::integrate(
        |tau| {
            let z = path(tau);
            let dz = path_rate(tau);
            let s = reduced_inverse_time(tau);
            triples.iter().fold(Complex64::new(0.0, 0.0), |acc, tr| {
                let d = tr.delta as f64;
                let (i1, i2, i3) = ((tr.j1 + r) as usize, (tr.j2 + r) as usize, (tr.j3 + r) as usize);
                let g = g_of(tau, &z, tr);
                let cubic_rate = dz[i1] * z[i2].conj() * z[i3]
                    + z[i1] * dz[i2].conj() * z[i3]
                    + z[i1] * z[i2].conj() * dz[i3];
                // (τG)' = G(1 + iω/2) + τ e^{iω log√τ} (z z̄ z)'
                let rate = g * (1.0 + 0.5 * i * tr.omega)
                    + tau * Complex64::from_polar(1.0, tr.omega * 0.5 * tau.ln()) * cubic_rate;
                acc + Complex64::from_polar(1.0, -d * s) * rate * (2.0 / (i * d))
            })
        },
        t0,
        t1,
        64,
        1e-13,
        1e-11,
    )?;
    Ok(edge - body.value)
}

/// `u(t, x)` and `u_x(t, x)` of the ansatz for the remainder `r` (centered, covering the support).
pub fn evaluate_u(t: f64, x: f64, alpha: &AlphaSequence, r: &[Complex64]) -> Result<(Complex64, Complex64)> {
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    let k = radius_of(r.len());
    if (k as u64) < alpha.radius() {
        return Err(invalid("r", "must cover the support of alpha"));
    }
    let mass = alpha.mass();
    let log_half = 0.5 * t.ln();
    let inv_sqrt = 1.0 / t.sqrt();
    let mut u = Complex64::new(0.0, 0.0);
    let mut ux = Complex64::new(0.0, 0.0);
    for (idx, rj) in r.iter().enumerate() {
        let j = idx as i64 - k;
        let aj = alpha.get(j);
        let d = x - j as f64;
        let phase = (d * d * 0.25 / t).rem_euclid(TAU) - (aj.norm_sqr() - mass) * log_half;
        let term = Complex64::from_polar(inv_sqrt, phase) * (aj + rj);
        u += term;
        ux += term * Complex64::new(0.0, d * 0.5 / t);
    }
    Ok((u, ux))
}

/// Configuration of [`decay_study`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayConfig {
    /// Support exponent.
    pub nu: f64,
    /// Turning parameter.
    pub gamma_turn: f64,
    /// Twist between corners.
    pub torsion: RationalTorsion,
    /// Weight exponent `γ ∈ (0, 1)`.
    pub gamma: f64,
    /// Integrability exponent `q > 1` of the predicted rates.
    pub q: f64,
    /// Start time.
    pub eps: f64,
    /// Final time.
    pub t_end: f64,
    /// Integrator tolerance.
    pub tol: f64,
    /// Mode range as a multiple of the support radius.
    pub range_factor: u64,
}

/// Sup norms of one run of the decay study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    /// Scale parameter.
    pub n: u64,
    /// `sup_t t^{−γ}‖R‖_{ℓ¹}`.
    pub weighted_l1: f64,
    /// `sup_t t‖R'‖_{ℓ¹}`.
    pub scaled_derivative_l1: f64,
    /// `sup_t t^{−γ}‖R‖_{ℓ^{1,1}}`.
    pub weighted_l11: f64,
    /// Relative mass drift of the run.
    pub mass_drift: f64,
}

/// Decay table with fitted and predicted exponents in `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayTable {
    /// One row per `n`.
    pub rows: Vec<DecayRow>,
    /// Fitted exponents `(ℓ¹, derivative, ℓ^{1,1})`; `None` when a norm vanishes.
    pub fitted: [Option<f64>; 3],
    /// Predicted exponents `(−(2−2/q), 0, −(1−2/q))`.
    pub predicted: [f64; 3],
}

/// Measures the `n`-dependence of the remainder norms.
pub fn decay_study(n_list: &[u64], config: &DecayConfig) -> Result<DecayTable> {
    if !(config.q > 1.0) {
        return Err(invalid("q", "must exceed 1"));
    }
    if config.range_factor == 0 {
        return Err(invalid("range_factor", "must be at least 1"));
    }
    let rows: Vec<DecayRow> = n_list
        .par_iter()
        .map(|&n| -> Result<DecayRow> {
            let alpha = build_alpha(n, config.nu, config.gamma_turn, config.torsion)?;
            let mut opts = RemainderOptions::new(config.eps, config.t_end, config.tol);
            opts.gamma = config.gamma;
            opts.k_max = Some(alpha.radius() * config.range_factor);
            let traj = integrate_remainder(&alpha, &opts)?;
            Ok(DecayRow {
                n,
                weighted_l1: traj.sup_weighted_l1,
                scaled_derivative_l1: traj.sup_scaled_derivative_l1,
                weighted_l11: traj.sup_weighted_l11,
                mass_drift: traj.max_relative_mass_drift,
            })
        })
        .collect::<Result<_>>()?;
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let col = |f: fn(&DecayRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let fitted = [
        log_log_slope(&ns, &col(|r| r.weighted_l1)),
        log_log_slope(&ns, &col(|r| r.scaled_derivative_l1)),
        log_log_slope(&ns, &col(|r| r.weighted_l11)),
    ];
    let q = config.q;
    Ok(DecayTable {
        rows,
        fitted,
        predicted: [-(2.0 - 2.0 / q), 0.0, -(1.0 - 2.0 / q)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(len: usize, rng: &mut ChaCha8Rng) -> (Vec<Complex64>, Vec<f64>) {
        let z = (0..len)
            .map(|_| Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect();
        let a = (0..len).map(|_| rng.random_range(0.0..0.5)).collect();
        (z, a)
    }

    #[test]
    fn alpha_sequence_values() {
        let a = build_alpha(4, 1.0, 1.0, RationalTorsion::zero()).unwrap();
        let theta: f64 = PI - 0.25;
        let c = (-(2.0 / PI) * (theta / 2.0).sin().ln()).sqrt();
        assert_eq!(a.radius(), 4);
        for v in a.values() {
            assert!((v.re - c).abs() < 1e-14 && v.im == 0.0);
        }
        let big = build_alpha(1000, 1.0, 1.0, RationalTorsion::zero()).unwrap();
        let ratio = 1000.0 * big.params().unwrap().c_n / (1.0 / (2.0 * PI.sqrt()));
        assert!((ratio - 1.0).abs() < 1e-3);
        assert!(build_alpha(1, 1.0, 4.0, RationalTorsion::zero()).is_err());
    }

    #[test]
    fn angle_law_holds_for_built_data() {
        let a = build_alpha(7, 1.0, 1.3, RationalTorsion::new(1, 3).unwrap()).unwrap();
        let p = a.params().unwrap();
        let lhs = (0.5 * p.theta_n).sin();
        assert!((lhs - (-PI * p.c_n * p.c_n / 2.0).exp()).abs() < 1e-14);
        assert!((a.get(2) - Complex64::from_polar(p.c_n, 2.0 * PI / 3.0)).norm() < 1e-14);
    }

    #[test]
    fn single_mode_has_no_force() {
        let z = [Complex64::new(0.3, -0.2)];
        assert_eq!(nonresonant_force(0, 0.1, &z, &[0.1]), Complex64::new(0.0, 0.0));
        let mut f = ForceEvaluator::new(&[0.1]);
        let mut out = [Complex64::new(1.0, 1.0)];
        f.evaluate(0.1, &z, &mut out);
        assert!(out[0].norm() < 1e-16);
    }

    #[test]
    fn fft_force_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for r in [1usize, 2, 5, 11] {
            let (z, a) = random_state(2 * r + 1, &mut rng);
            let mut eval = ForceEvaluator::new(&a);
            let mut out = vec![Complex64::new(0.0, 0.0); z.len()];
            for &t in &[1e-3, 0.07, 0.9] {
                eval.evaluate(t, &z, &mut out);
                for (i, o) in out.iter().enumerate() {
                    let k = i as i64 - r as i64;
                    let slow = nonresonant_force(k, t, &z, &a);
                    assert!((o - slow).norm() < 1e-11 * (1.0 + slow.norm()), "r={r} k={k}");
                }
            }
        }
    }

    #[test]
    fn index_matches_double_loop_and_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (z, a) = random_state(9, &mut rng);
        let index = ResonanceIndex::new(&a);
        for k in -4..=4i64 {
            for tr in index.triples(k) {
                assert_eq!(tr.j1 - tr.j2 + tr.j3, k);
                assert_eq!(tr.delta, k * k - tr.j1 * tr.j1 + tr.j2 * tr.j2 - tr.j3 * tr.j3);
                assert_ne!(tr.delta, 0);
            }
            let x = index.force(k, 0.03, &z);
            let y = nonresonant_force(k, 0.03, &z, &a);
            assert!((x - y).norm() < 1e-13 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn zero_and_single_corner_stay_zero() {
        for alpha in [AlphaSequence::from_values(vec![Complex64::new(0.0, 0.0); 5]).unwrap(), AlphaSequence::single_corner(0.4)] {
            let traj = integrate_remainder(&alpha, &RemainderOptions::new(1e-3, 0.2, 1e-10)).unwrap();
            assert!(traj.final_state().iter().all(|r| r.norm() < 1e-14));
        }
    }

    #[test]
    fn small_run_conserves_mass() {
        let alpha = build_alpha(4, 1.0, 1.0, RationalTorsion::zero()).unwrap();
        let mut opts = RemainderOptions::new(1e-3, 0.25, 1e-10);
        opts.k_max = Some(8);
        opts.sample_times = vec![0.01, 0.1];
        let traj = integrate_remainder(&alpha, &opts).unwrap();
        assert_eq!(traj.times, vec![1e-3, 0.01, 0.1, 0.25]);
        assert!(traj.max_relative_mass_drift < 1e-8, "{}", traj.max_relative_mass_drift);
        assert!(traj.final_state().iter().any(|r| r.norm() > 0.0));
    }

    #[test]
    fn picard_residual_is_small() {
        let alpha = build_alpha(3, 1.0, 1.0, RationalTorsion::zero()).unwrap();
        let opts = RemainderOptions::new(1e-3, 0.1, 1e-10);
        let traj = integrate_remainder(&alpha, &opts).unwrap();
        let res = picard_verify(&alpha, &traj, 0.1).unwrap();
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn integration_by_parts_matches_direct_quadrature() {
        let alpha_sq = vec![0.04, 0.09, 0.0];
        let path = |t: f64| {
            vec![
                Complex64::new(0.2 + 0.3 * t, -0.1 * t * t),
                Complex64::new(0.3, 0.5 * t),
                Complex64::new(0.05 * t, 0.1),
            ]
        };
        let rate = |t: f64| {
            vec![
                Complex64::new(0.3, -0.2 * t),
                Complex64::new(0.0, 0.5),
                Complex64::new(0.05, 0.0),
            ]
        };
        for k in -1..=1 {
            let a = force_integral_direct(k, 0.02, 0.3, &alpha_sq, path).unwrap();
            let b = force_integral_by_parts(k, 0.02, 0.3, &alpha_sq, path, rate).unwrap();
            assert!((a - b).norm() < 1e-9, "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn single_corner_field_is_self_similar() {
        let alpha = AlphaSequence::single_corner(0.5);
        let (u, ux) = evaluate_u(0.2, 0.3, &alpha, &[Complex64::new(0.0, 0.0)]).unwrap();
        let expect = Complex64::from_polar(0.5 / 0.2f64.sqrt(), 0.09 / 0.8);
        assert!((u - expect).norm() < 1e-14);
        assert!((ux - expect * Complex64::new(0.0, 0.3 / 0.4)).norm() < 1e-13);
    }

    #[test]
    fn symmetric_data_gives_paired_terms() {
        let alpha = build_alpha(3, 1.0, 1.0, RationalTorsion::zero()).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); 7];
        let (_, ux) = evaluate_u(0.05, 0.0, &alpha, &zero).unwrap();
        assert!(ux.norm() < 1e-10);
    }
}
