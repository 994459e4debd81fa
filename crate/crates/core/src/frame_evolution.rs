//! Parallel frame and trajectory of the corner at `x = 0`.
//!
//! Along `x = 0` the frame `(T, N)`, `N = e₁ + ie₂`, obeys
//! `T_t = Im(ū_x N)`, `N_t = −iu_x T + i(|u|²/2 − S/(2t))N`, and the corner
//! moves with `χ_t = Im(ū N)`, where `u` is the filament function of the
//! ansatz. These equations are integrated together with the remainder
//! system, the corner position and the modulated-normal diagnostic.
//!
//! Start-up at `t = ε`: `T = Θ̃e₁`, `N = e^{iβ(ε)} Θ̃(e₂ + ie₃)` with
//! `β(ε) = Σ_{j≠0}|α_j|² log√ε`, and `χ = 2c₀√ε Θ̃e₃`, the exact values of
//! the single self-similar corner at `s = 0` rotated by the corner rotation
//! `Θ̃` and dephased by the far corners.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::nls_remainder::{build_alpha, reduced_inverse_time, AlphaSequence, RemainderSystem};
use crate::ode::{Control, Dopri5, OdeStats, OdeSystem};
use crate::selfsimilar::{apply, integrate_profile, asymptotic_tangents, symmetric_corner_rotation, CVec3, Mat3, Vec3};
use crate::theta_sums::{r_tilde, RationalTorsion};

/// Frame and corner data at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FramePoint {
    /// Time.
    pub t: f64,
    /// Tangent at `x = 0`.
    pub tangent: Vec3,
    /// Complex normal `e₁ + ie₂` at `x = 0`.
    pub normal: CVec3,
    /// Corner position `χ(t, 0)`.
    pub chi: Vec3,
    /// `∫_ε^t Σ_j e^{−ij²/(4τ)} τ^{−1/2} g(τ) dτ` with `g = e^{iΦ}N − Ñ`.
    pub modulated_integral: CVec3,
    /// `|e^{iΦ(t)}N(t) − Ñ|`.
    pub modulated_gap: f64,
}

/// Start-up data of a frame run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameStart {
    /// Corner rotation `Θ̃` (row-major).
    pub rotation: Mat3,
    /// Frame at `ε`.
    pub point: FramePoint,
    /// Modulated limit normal `Ñ = e^{iΣ_{j≠0}|α_j|² log|j|} Θ̃(e₂ + ie₃)`.
    pub limit_normal: CVec3,
}

/// Run configuration of [`evolve_frame`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameOptions {
    /// Start time.
    pub eps: f64,
    /// Final time.
    pub t_end: f64,
    /// Integrator tolerance.
    pub tol: f64,
    /// Remainder mode range as a multiple of the support radius.
    pub range_factor: u64,
    /// Output times in `(ε, T]`; `T` is always included.
    pub sample_times: Vec<f64>,
    /// Half-length of the profile used for `Θ̃`.
    pub profile_s_max: f64,
    /// Profile step.
    pub profile_step: f64,
}

impl FrameOptions {
    /// Defaults: `range_factor = 1`, 64 geometric samples in `[10⁻³, T]`,
    /// profile on `[−200, 200]` with step `10⁻³`.
    pub fn new(eps: f64, t_end: f64, tol: f64) -> Self {
        Self {
            eps,
            t_end,
            tol,
            range_factor: 1,
            sample_times: geometric_grid(1e-3, t_end, 64),
            profile_s_max: 200.0,
            profile_step: 1e-3,
        }
    }
}

/// `count` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 || !(hi > lo) {
        return vec![hi];
    }
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (r * i as f64).exp()).collect()
}

fn corner_rotation(alpha: &AlphaSequence, opts: &FrameOptions) -> Result<Mat3> {
    let c = alpha.get(0).norm();
    if c == 0.0 {
        return symmetric_corner_rotation([1.0, 0.0, 0.0]);
    }
    let profile = integrate_profile(c, opts.profile_s_max, opts.profile_step)?;
    let (a_plus, _, _) = asymptotic_tangents(&profile)?;
    symmetric_corner_rotation(a_plus)
}

fn far_mass(alpha: &AlphaSequence) -> f64 {
    alpha.mass() - alpha.get(0).norm_sqr()
}

fn log_weight(alpha: &AlphaSequence) -> f64 {
    let r = alpha.radius() as i64;
    (-r..=r)
        .filter(|&j| j != 0)
        .map(|j| alpha.get(j).norm_sqr() * (j.abs() as f64).ln())
        .sum()
}

/// `Φ(t) = Σ_{j≠0}|α_j|² log(|j|/√t)`.
pub fn modulation_phase(alpha: &AlphaSequence, t: f64) -> f64 {
    log_weight(alpha) - far_mass(alpha) * 0.5 * t.ln()
}

fn start_from_rotation(alpha: &AlphaSequence, eps: f64, rotation: Mat3) -> Result<FrameStart> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    if alpha.get(0).im.abs() > 1e-15 || alpha.get(0).re < 0.0 {
        return Err(invalid("alpha", "the corner at 0 needs arg α₀ = 0"));
    }
    let e1 = apply(&rotation, [1.0, 0.0, 0.0]);
    let e2 = apply(&rotation, [0.0, 1.0, 0.0]);
    let e3 = apply(&rotation, [0.0, 0.0, 1.0]);
    let base = [0, 1, 2].map(|k| Complex64::new(e2[k], e3[k]));
    let beta = far_mass(alpha) * 0.5 * eps.ln();
    let normal = base.map(|v| Complex64::from_polar(1.0, beta) * v);
    let limit = base.map(|v| Complex64::from_polar(1.0, log_weight(alpha)) * v);
    let c0 = alpha.get(0).re;
    let chi = e3.map(|v| 2.0 * c0 * eps.sqrt() * v);
    Ok(FrameStart {
        rotation,
        point: FramePoint {
            t: eps,
            tangent: e1,
            normal,
            chi,
            modulated_integral: [Complex64::new(0.0, 0.0); 3],
            modulated_gap: 0.0,
        },
        limit_normal: limit,
    })
}

/// Frame, corner position and limit normal at `t = ε`.
pub fn init_frame(alpha: &AlphaSequence, eps: f64, opts: &FrameOptions) -> Result<FrameStart> {
    start_from_rotation(alpha, eps, corner_rotation(alpha, opts)?)
}

/// `u(t, 0)` and `u_x(t, 0)` for interleaved remainders `y`.
fn field_at_corner(t: f64, alpha: &[Complex64], alpha_sq: &[f64], mass: f64, y: &[f64]) -> (Complex64, Complex64) {
    let k = (alpha.len() / 2) as i64;
    let s = reduced_inverse_time(t);
    let log_half = 0.5 * t.ln();
    let inv_sqrt = 1.0 / t.sqrt();
    let mut u = Complex64::new(0.0, 0.0);
    let mut ux = Complex64::new(0.0, 0.0);
    for (i, a) in alpha.iter().enumerate() {
        let j = i as i64 - k;
        let z = a + Complex64::new(y[2 * i], y[2 * i + 1]);
        let phase = ((j * j) as f64 * s).rem_euclid(TAU) - (alpha_sq[i] - mass) * log_half;
        let term = Complex64::from_polar(inv_sqrt, phase) * z;
        u += term;
        ux += term * Complex64::new(0.0, -(j as f64) * 0.5 / t);
    }
    (u, ux)
}

struct FrameSystem {
    remainder: RemainderSystem,
    mass: f64,
    radius: i64,
    far_mass: f64,
    log_weight: f64,
    limit: CVec3,
    drift: f64,
}

const T_OFF: usize = 0;
const N_OFF: usize = 3;
const CHI_OFF: usize = 9;
const G_OFF: usize = 12;
const EXTRA: usize = 18;

impl FrameSystem {
    fn base(&self) -> usize {
        self.remainder.dim()
    }

    fn modulated(&self, t: f64, y: &[f64]) -> CVec3 {
        let b = self.base();
        let phi = self.log_weight - self.far_mass * 0.5 * t.ln();
        let rot = Complex64::from_polar(1.0, phi);
        [0, 1, 2].map(|k| rot * Complex64::new(y[b + N_OFF + 2 * k], y[b + N_OFF + 2 * k + 1]) - self.limit[k])
    }
}

impl OdeSystem for FrameSystem {
    fn dim(&self) -> usize {
        self.base() + EXTRA
    }

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let b = self.base();
        self.remainder.derivative(t, &y[..b], &mut dy[..b]);
        let (u, ux) = field_at_corner(t, self.remainder.alpha(), self.remainder.alpha_sq(), self.mass, &y[..b]);
        let tan = [y[b + T_OFF], y[b + T_OFF + 1], y[b + T_OFF + 2]];
        let nor = [0, 1, 2].map(|k| Complex64::new(y[b + N_OFF + 2 * k], y[b + N_OFF + 2 * k + 1]));
        let i = Complex64::new(0.0, 1.0);
        let rate = 0.5 * u.norm_sqr() - 0.5 * self.mass / t;
        for k in 0..3 {
            dy[b + T_OFF + k] = (ux.conj() * nor[k]).im;
            let dn = -i * ux * tan[k] + i * rate * nor[k];
            dy[b + N_OFF + 2 * k] = dn.re;
            dy[b + N_OFF + 2 * k + 1] = dn.im;
            dy[b + CHI_OFF + k] = (u.conj() * nor[k]).im;
        }
        // Σ_{|j|≤J} e^{−ij²/(4t)} t^{−1/2}
        let s = reduced_inverse_time(t);
        let mut kernel = Complex64::new(0.0, 0.0);
        for j in -self.radius..=self.radius {
            kernel += Complex64::from_polar(1.0, -((j * j) as f64 * s).rem_euclid(TAU));
        }
        kernel /= t.sqrt();
        let g = self.modulated(t, y);
        for k in 0..3 {
            let v = kernel * g[k];
            dy[b + G_OFF + 2 * k] = v.re;
            dy[b + G_OFF + 2 * k + 1] = v.im;
        }
    }

    fn project(&mut self, _t: f64, y: &mut [f64]) -> bool {
        let b = self.base();
        let t = [y[b], y[b + 1], y[b + 2]];
        let e1 = [y[b + N_OFF], y[b + N_OFF + 2], y[b + N_OFF + 4]];
        let e2 = [y[b + N_OFF + 1], y[b + N_OFF + 3], y[b + N_OFF + 5]];
        let dot = |a: Vec3, c: Vec3| a[0] * c[0] + a[1] * c[1] + a[2] * c[2];
        let gram = [
            dot(t, t) - 1.0,
            dot(e1, e1) - 1.0,
            dot(e2, e2) - 1.0,
            dot(t, e1),
            dot(t, e2),
            dot(e1, e2),
        ];
        self.drift = self.drift.max(gram.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let norm = |a: Vec3| {
            let l = dot(a, a).sqrt();
            a.map(|v| v / l)
        };
        let t = norm(t);
        let p = dot(t, e1);
        let e1 = norm([0, 1, 2].map(|k| e1[k] - p * t[k]));
        // e₂ = T × e₁ keeps the triple right-handed.
        let e2n = [
            t[1] * e1[2] - t[2] * e1[1],
            t[2] * e1[0] - t[0] * e1[2],
            t[0] * e1[1] - t[1] * e1[0],
        ];
        for k in 0..3 {
            y[b + k] = t[k];
            y[b + N_OFF + 2 * k] = e1[k];
            y[b + N_OFF + 2 * k + 1] = e2n[k];
        }
        let _ = e2;
        true
    }
}

/// Result of a coupled frame run.
#[derive(Debug, Clone, Serialize)]
pub struct FrameRun {
    /// Start-up data.
    pub start: FrameStart,
    /// Frame and corner data at `ε` and at every sample time.
    pub points: Vec<FramePoint>,
    /// Largest orthonormality defect seen before re-orthonormalization.
    pub orthonormality_drift: f64,
    /// Integrator counters.
    pub stats: OdeStats,
    /// Size `2c₀√ε` of the modeled start-up displacement.
    pub startup_budget: f64,
    /// Options of the run.
    pub options: FrameOptions,
}

/// Integrates remainder, frame, corner position and diagnostic from `ε` to `T`.
pub fn evolve_frame(alpha: &AlphaSequence, opts: &FrameOptions) -> Result<FrameRun> {
    let start = init_frame(alpha, opts.eps, opts)?;
    evolve_from(alpha, opts, start)
}

fn evolve_from(alpha: &AlphaSequence, opts: &FrameOptions, start: FrameStart) -> Result<FrameRun> {
    if !(opts.eps > 0.0 && opts.eps < opts.t_end) {
        return Err(invalid("eps", "need 0 < ε < T"));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if opts.range_factor == 0 {
        return Err(invalid("range_factor", "must be at least 1"));
    }
    let k_max = alpha.radius() * opts.range_factor;
    let remainder = RemainderSystem::new(alpha, k_max)?;
    let mut sys = FrameSystem {
        remainder,
        mass: alpha.mass(),
        radius: alpha.radius() as i64,
        far_mass: far_mass(alpha),
        log_weight: log_weight(alpha),
        limit: start.limit_normal,
        drift: 0.0,
    };
    let b = sys.base();
    let mut y = vec![0.0; sys.dim()];
    let p = &start.point;
    for k in 0..3 {
        y[b + T_OFF + k] = p.tangent[k];
        y[b + N_OFF + 2 * k] = p.normal[k].re;
        y[b + N_OFF + 2 * k + 1] = p.normal[k].im;
        y[b + CHI_OFF + k] = p.chi[k];
    }
    let mut samples: Vec<f64> = opts
        .sample_times
        .iter()
        .copied()
        .filter(|&s| s > opts.eps && s < opts.t_end)
        .collect();
    samples.sort_by(f64::total_cmp);
    samples.dedup();
    samples.push(opts.t_end);

    let limit = start.limit_normal;
    let lw = sys.log_weight;
    let fm = sys.far_mass;
    let extract = |t: f64, y: &[f64]| -> FramePoint {
        let normal = [0, 1, 2].map(|k| Complex64::new(y[b + N_OFF + 2 * k], y[b + N_OFF + 2 * k + 1]));
        let rot = Complex64::from_polar(1.0, lw - fm * 0.5 * t.ln());
        let gap = (0..3)
            .map(|k| (rot * normal[k] - limit[k]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        FramePoint {
            t,
            tangent: [y[b], y[b + 1], y[b + 2]],
            normal,
            chi: [y[b + CHI_OFF], y[b + CHI_OFF + 1], y[b + CHI_OFF + 2]],
            modulated_integral: [0, 1, 2].map(|k| Complex64::new(y[b + G_OFF + 2 * k], y[b + G_OFF + 2 * k + 1])),
            modulated_gap: gap,
        }
    };
    let mut points = vec![start.point];
    let mut next = 0;
    let mut interp = vec![0.0; y.len()];
    let stats = Dopri5::with_tol(opts.tol).integrate(&mut sys, opts.eps, opts.t_end, &mut y, |view| {
        while next < samples.len() && samples[next] <= view.t {
            let ts = samples[next];
            if ts == view.t {
                points.push(extract(ts, view.y));
            } else {
                view.interpolate(ts, &mut interp);
                points.push(extract(ts, &interp));
            }
            next += 1;
        }
        Control::Continue
    })?;
    Ok(FrameRun {
        start,
        points,
        orthonormality_drift: sys.drift,
        stats,
        startup_budget: 2.0 * alpha.get(0).re * opts.eps.sqrt(),
        options: opts.clone(),
    })
}

/// Corner trajectory `χ(t, 0)` of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerTrajectory {
    /// Times, starting at `ε`.
    pub times: Vec<f64>,
    /// Positions; the `t → 0` limit is the origin.
    pub chi: Vec<Vec3>,
    /// Scale parameter of the data, when known.
    pub n: Option<u64>,
    /// Turning parameter, when known.
    pub gamma: Option<f64>,
    /// Twist, when known.
    pub torsion: Option<RationalTorsion>,
    /// Size of the modeled start-up displacement `2c₀√ε`.
    pub startup_budget: f64,
}

/// Extracts the corner trajectory from a frame run.
pub fn corner_trajectory(run: &FrameRun, alpha: &AlphaSequence) -> CornerTrajectory {
    let params = alpha.params();
    CornerTrajectory {
        times: run.points.iter().map(|p| p.t).collect(),
        chi: run.points.iter().map(|p| p.chi).collect(),
        n: params.map(|p| p.n),
        gamma: params.map(|p| p.gamma),
        torsion: params.map(|p| p.torsion),
        startup_budget: run.startup_budget,
    }
}

/// Sample of the rescaled trajectory against its limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitSample {
    /// Time.
    pub t: f64,
    /// `n χ_n(t, 0)`.
    pub scaled: Vec3,
    /// Limit curve in the frame orientation used here.
    pub target: Vec3,
    /// `(0, Re R̃, Im R̃)`, reported for reference.
    pub target_literal: Vec3,
}

/// `e_n` with its per-sample data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameLimitReport {
    /// Scale parameter.
    pub n: u64,
    /// `max_t ‖n χ_n(t,0) − (0, −Im R̃, −Re R̃)‖`.
    pub error: f64,
    /// `max_t ‖n χ_n(t,0) − (0, Re R̃, Im R̃)‖`.
    pub error_literal: f64,
    /// `|n c_n ∫ Σ_j e^{−ij²/4τ}τ^{−1/2} g dτ|` at the last sample.
    pub modulated_integral: f64,
    /// Orthonormality defect of the run.
    pub orthonormality_drift: f64,
    /// Samples.
    pub samples: Vec<LimitSample>,
    /// Integrator counters.
    pub stats: OdeStats,
}

/// Target `(0, −Im R̃(t), −Re R̃(t))` of `nχ_n(t, 0)`.
///
/// With `T(0,0^±) = (sin θ/2, ±cos θ/2, 0)` and the right-handed frame
/// `N = Θ̃(e₂ + ie₃)`, the limit of `Θ̃e₂ + iΘ̃e₃` is
/// `(0, (1+i)/√2, (−1+i)/√2)`, which turns `−e^{−iπ/4}R̃` into this vector.
pub fn limit_target(t: f64, gamma: f64, torsion: RationalTorsion, n_terms: u64) -> Result<(Vec3, Vec3)> {
    let r = r_tilde(t, gamma, torsion, n_terms)?.value;
    Ok(([0.0, -r.im, -r.re], [0.0, r.re, r.im]))
}

/// Runs the pipeline for one `n` and measures `e_n` over the samples.
pub fn frame_limit_error(
    n: u64,
    nu: f64,
    gamma: f64,
    torsion: RationalTorsion,
    opts: &FrameOptions,
) -> Result<FrameLimitReport> {
    let alpha = build_alpha(n, nu, gamma, torsion)?;
    let run = evolve_frame(&alpha, opts)?;
    let nf = n as f64;
    let mut error: f64 = 0.0;
    let mut error_literal: f64 = 0.0;
    let mut samples = Vec::new();
    for p in run.points.iter().skip(1) {
        let scaled = p.chi.map(|v| nf * v);
        let (target, literal) = limit_target(p.t, gamma, torsion, 200_000)?;
        let dist = |a: Vec3, b: Vec3| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        error = error.max(dist(scaled, target));
        error_literal = error_literal.max(dist(scaled, literal));
        samples.push(LimitSample {
            t: p.t,
            scaled,
            target,
            target_literal: literal,
        });
    }
    let c_n = alpha.params().map_or(0.0, |p| p.c_n);
    let last = run.points.last().expect("runs hold at least the start point");
    let gn = last
        .modulated_integral
        .iter()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(FrameLimitReport {
        n,
        error,
        error_literal,
        modulated_integral: nf * c_n * gn,
        orthonormality_drift: run.orthonormality_drift,
        samples,
        stats: run.stats,
    })
}

/// `∫_0^t Σ_j e^{−ij²/(4τ)} τ^{−1/2} g_n(τ) dτ` with `g_n = e^{iΦ_n}N_n − Ñ_n`.
///
/// The start-up interval `[0, ε]` contributes nothing since `g_n(ε) = 0`.
pub fn gn_diagnostic(n: u64, nu: f64, gamma: f64, torsion: RationalTorsion, t: f64, opts: &FrameOptions) -> Result<CVec3> {
    let alpha = build_alpha(n, nu, gamma, torsion)?;
    let mut o = opts.clone();
    o.t_end = t;
    o.sample_times.clear();
    let run = evolve_frame(&alpha, &o)?;
    Ok(run.points.last().expect("runs hold at least the start point").modulated_integral)
}

/// `e_n` for several `n`, evaluated in parallel.
pub fn frame_limit_ladder(
    n_list: &[u64],
    nu: f64,
    gamma: f64,
    torsion: RationalTorsion,
    opts: &FrameOptions,
) -> Result<Vec<FrameLimitReport>> {
    n_list
        .par_iter()
        .map(|&n| frame_limit_error(n, nu, gamma, torsion, opts))
        .collect()
}

/// Angle `π − θ` of the corner carried by the data at `0`.
pub fn turning_angle(alpha: &AlphaSequence) -> f64 {
    let c = alpha.get(0).norm();
    PI - 2.0 * (-0.5 * PI * c * c).exp().asin()
}
