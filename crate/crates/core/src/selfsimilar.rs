//! Self-similar corner profile and its asymptotic frames.
//!
//! The profile has constant curvature `c` and torsion `s/2`, starts from the
//! canonical frame at `s = 0` and satisfies `G(s) = sT(s) + 2c b(s)`, so
//! `G(0) = (0, 0, 2c)`. Frames are advanced by a fourth-order Magnus step
//! with an exact rotation, which keeps them orthonormal to round-off.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Real 3-vector.
pub type Vec3 = [f64; 3];
/// Complex 3-vector.
pub type CVec3 = [Complex64; 3];

/// Frenet state of the profile at arclength `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrenetState {
    /// Arclength.
    pub s: f64,
    /// Position.
    pub g: Vec3,
    /// Tangent.
    pub t: Vec3,
    /// Principal normal.
    pub n: Vec3,
    /// Binormal.
    pub b: Vec3,
}

/// Profile samples on `[−S, S]` in increasing `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    /// Curvature.
    pub c: f64,
    /// Step used.
    pub step: f64,
    /// Samples, one per step.
    pub samples: Vec<FrenetState>,
}

impl Profile {
    /// Half-length `S` of the sampled interval.
    pub fn s_max(&self) -> f64 {
        self.samples.last().map_or(0.0, |p| p.s)
    }
}

fn v3(a: Vec3) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

fn arr(v: Vector3<f64>) -> Vec3 {
    [v[0], v[1], v[2]]
}

/// `exp(Ω)` for a skew-symmetric `Ω`.
fn skew_exp(m: &Matrix3<f64>) -> Matrix3<f64> {
    let w = Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]);
    Rotation3::new(w).into_inner()
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6

/// One fourth-order Magnus step of `Y' = A(s)Y` from `s` to `s + h`.
fn magnus_step<F: Fn(f64) -> Matrix3<f64>>(a: &F, s: f64, h: f64, y: &Matrix3<f64>) -> Matrix3<f64> {
    let a1 = a(s + (0.5 - GAUSS_OFFSET) * h);
    let a2 = a(s + (0.5 + GAUSS_OFFSET) * h);
    let omega = (a1 + a2) * (0.5 * h) + (a2 * a1 - a1 * a2) * (3f64.sqrt() / 12.0 * h * h);
    skew_exp(&omega) * y
}

fn reorthonormalize(y: &mut Matrix3<f64>) {
    let t = y.row(0).transpose().normalize();
    let n = y.row(1).transpose();
    let n = (n - t * t.dot(&n)).normalize();
    let b = t.cross(&n);
    y.set_row(0, &t.transpose());
    y.set_row(1, &n.transpose());
    y.set_row(2, &b.transpose());
}

/// Frenet generator with rows `(T, n, b)`: `T' = cn`, `n' = −cT + τb`, `b' = −τn`.
fn frenet_generator(c: f64) -> impl Fn(f64) -> Matrix3<f64> {
    move |s| {
        let tau = 0.5 * s;
        Matrix3::new(0.0, c, 0.0, -c, 0.0, tau, 0.0, -tau, 0.0)
    }
}

/// Integrates the profile on `[−S, S]` with step `h ≤ 10⁻²`.
///
/// `G` is accumulated from `G' = T` by Simpson's rule on each step, which
/// keeps the identity `G = sT + 2cb` as an independent check.
pub fn integrate_profile(c: f64, s_max: f64, step: f64) -> Result<Profile> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(invalid("c", "must be nonnegative"));
    }
    if !(step > 0.0 && step <= 1e-2) {
        return Err(invalid("step", "must lie in (0, 0.01]"));
    }
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(invalid("S_max", "must be positive"));
    }
    let steps = (s_max / step).ceil() as usize;
    let h = s_max / steps as f64;
    let gen = frenet_generator(c);
    let mut sides: [Vec<FrenetState>; 2] = [Vec::new(), Vec::new()];
    for (side, dir) in [(0usize, -1.0f64), (1, 1.0)] {
        let hh = dir * h;
        let mut y = Matrix3::identity();
        let mut g = Vector3::new(0.0, 0.0, 2.0 * c);
        let out = &mut sides[side];
        out.reserve(steps + 1);
        let push = |out: &mut Vec<FrenetState>, s: f64, g: &Vector3<f64>, y: &Matrix3<f64>| {
            out.push(FrenetState {
                s,
                g: arr(*g),
                t: arr(y.row(0).transpose()),
                n: arr(y.row(1).transpose()),
                b: arr(y.row(2).transpose()),
            });
        };
        push(out, 0.0, &g, &y);
        for i in 0..steps {
            let s = i as f64 * hh;
            let mid = magnus_step(&gen, s, 0.5 * hh, &y);
            let mut next = magnus_step(&gen, s, hh, &y);
            reorthonormalize(&mut next);
            let t0 = y.row(0).transpose();
            let tm = mid.row(0).transpose();
            let t1 = next.row(0).transpose();
            g += (t0 + tm * 4.0 + t1) * (hh / 6.0);
            y = next;
            push(out, (i + 1) as f64 * hh, &g, &y);
        }
    }
    let [mut neg, pos] = sides;
    neg.reverse();
    neg.pop();
    neg.extend(pos);
    Ok(Profile {
        c,
        step: h,
        samples: neg,
    })
}

/// `‖G/2 − (s/2)G' − G'∧G''‖` at one sample, with `G' = T`, `G'' = cn`.
pub fn profile_residual(c: f64, p: &FrenetState) -> f64 {
    let g = v3(p.g);
    let t = v3(p.t);
    let gpp = v3(p.n) * c;
    (g * 0.5 - t * (0.5 * p.s) - t.cross(&gpp)).norm()
}

/// Limits of the profile frames as `s → ±∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileAsymptotics {
    /// Curvature.
    pub c: f64,
    /// `lim_{s→+∞} T(s)`.
    pub a_plus: Vec3,
    /// `lim_{s→−∞} T(s)`.
    pub a_minus: Vec3,
    /// `lim_{s→+∞} e^{ic² log s} N(s)` of the parallel frame.
    pub b_plus: CVec3,
    /// RMS residual of the tangent fits.
    pub tangent_residual: f64,
    /// RMS residual of the normal fit.
    pub normal_residual: f64,
}

/// Least squares `min ‖Xβ − y‖` for complex data via the normal equations.
fn complex_lsq(x: &DMatrix<Complex64>, y: &DVector<Complex64>) -> Option<(DVector<Complex64>, f64)> {
    let xh = x.adjoint();
    let beta = (&xh * x).lu().solve(&(&xh * y))?;
    let r = y - x * &beta;
    Some((beta, (r.norm_squared() / y.len() as f64).sqrt()))
}

fn tail_window(profile: &Profile, positive: bool) -> Vec<&FrenetState> {
    let s_max = profile.s_max();
    let stride = ((0.01 / profile.step).round() as usize).max(1);
    profile
        .samples
        .iter()
        .step_by(stride)
        .filter(|p| {
            let a = if positive { p.s } else { -p.s };
            a >= 0.5 * s_max && a <= s_max
        })
        .collect()
}

fn oscillation_phase(c: f64, s: f64) -> f64 {
    0.25 * s * s + c * c * s.ln()
}

/// Fits `T(s) = A + (sin φ/s)P + (cos φ/s)Q + D/s²` on `[S/2, S]`,
/// `φ = s²/4 + c² log s`; the same on `[−S, −S/2]` with `|s|`.
///
/// Returns `(A⁺, A⁻, rms residual)`. The fit fails if the residual exceeds
/// ten times the predicted oscillation amplitude `2c/(S/2)`.
pub fn asymptotic_tangents(profile: &Profile) -> Result<(Vec3, Vec3, f64)> {
    let c = profile.c;
    let s_max = profile.s_max();
    if s_max < 100.0 / (1.0 + c) {
        return Err(invalid("profile", "needs S_max ≥ 100/(1+c)"));
    }
    let mut limits = [[0.0; 3]; 2];
    let mut worst: f64 = 0.0;
    for (slot, positive) in [(0usize, true), (1, false)] {
        let window = tail_window(profile, positive);
        let rows = window.len();
        let mut x = DMatrix::<Complex64>::zeros(rows, 4);
        for (i, p) in window.iter().enumerate() {
            let s = p.s.abs();
            let phi = oscillation_phase(c, s);
            x[(i, 0)] = Complex64::new(1.0, 0.0);
            x[(i, 1)] = Complex64::new(phi.sin() / s, 0.0);
            x[(i, 2)] = Complex64::new(phi.cos() / s, 0.0);
            x[(i, 3)] = Complex64::new(1.0 / (s * s), 0.0);
        }
        let mut sq = 0.0;
        for comp in 0..3 {
            let y = DVector::from_iterator(rows, window.iter().map(|p| Complex64::new(p.t[comp], 0.0)));
            let (beta, res) = complex_lsq(&x, &y).ok_or(Error::FitResidual {
                residual: f64::INFINITY,
                bound: 0.0,
            })?;
            limits[slot][comp] = beta[0].re;
            sq += res * res;
        }
        worst = worst.max(sq.sqrt());
    }
    let bound = 10.0 * 2.0 * c / (0.5 * s_max);
    if worst > bound.max(1e-12) {
        return Err(Error::FitResidual {
            residual: worst,
            bound,
        });
    }
    let norm = |a: Vec3| {
        let v = v3(a).normalize();
        arr(v)
    };
    Ok((norm(limits[0]), norm(limits[1]), worst))
}

/// Parallel frame `(T, N)` along the profile on `[0, S]`, from `T' = Re(ū N)`,
/// `N' = −uT`, `u = c e^{is²/4}`, `T(0) = e₁`, `N(0) = e₂ + ie₃`.
///
/// Returns `(s, T, N)` at every `stride`-th step.
pub fn parallel_frame(c: f64, s_max: f64, step: f64, stride: usize) -> Result<Vec<(f64, Vec3, CVec3)>> {
    if !(step > 0.0 && step <= 1e-2) {
        return Err(invalid("step", "must lie in (0, 0.01]"));
    }
    if !(s_max > 0.0) {
        return Err(invalid("S_max", "must be positive"));
    }
    let stride = stride.max(1);
    let steps = (s_max / step).ceil() as usize;
    let h = s_max / steps as f64;
    // Rows (T, e₁, e₂) with N = e₁ + ie₂ and u = α + iβ:
    // T' = αe₁ + βe₂, e₁' = −αT, e₂' = −βT.
    let gen = move |s: f64| {
        let (b, a) = (0.25 * s * s).sin_cos();
        let (a, b) = (c * a, c * b);
        Matrix3::new(0.0, a, b, -a, 0.0, 0.0, -b, 0.0, 0.0)
    };
    let mut y = Matrix3::identity();
    let record = |s: f64, y: &Matrix3<f64>| {
        let t = arr(y.row(0).transpose());
        let e1 = y.row(1);
        let e2 = y.row(2);
        let n = [0, 1, 2].map(|k| Complex64::new(e1[k], e2[k]));
        (s, t, n)
    };
    let mut out = vec![record(0.0, &y)];
    for i in 0..steps {
        y = magnus_step(&gen, i as f64 * h, h, &y);
        reorthonormalize(&mut y);
        if (i + 1) % stride == 0 || i + 1 == steps {
            out.push(record((i + 1) as f64 * h, &y));
        }
    }
    Ok(out)
}

/// `B⁺ = lim e^{ic² log s} N(s)` from a modulated fit
/// `B + e^{iφ}P/s + e^{−iφ}Q/s + D/s²` on `[S/2, S]`.
///
/// Returns `(B⁺, rms residual)`; the real and imaginary parts are
/// re-normalized to an orthonormal pair.
pub fn asymptotic_normal(profile: &Profile, c: f64) -> Result<(CVec3, f64)> {
    let s_max = profile.s_max();
    if s_max < 100.0 / (1.0 + c) {
        return Err(invalid("profile", "needs S_max ≥ 100/(1+c)"));
    }
    let stride = ((0.01 / profile.step).round() as usize).max(1);
    let frame = parallel_frame(c, s_max, profile.step, stride)?;
    let window: Vec<_> = frame
        .iter()
        .filter(|(s, _, _)| *s >= 0.5 * s_max)
        .collect();
    let rows = window.len();
    let mut x = DMatrix::<Complex64>::zeros(rows, 4);
    for (i, (s, _, _)) in window.iter().enumerate() {
        let phi = oscillation_phase(c, *s);
        x[(i, 0)] = Complex64::new(1.0, 0.0);
        x[(i, 1)] = Complex64::from_polar(1.0 / s, phi);
        x[(i, 2)] = Complex64::from_polar(1.0 / s, -phi);
        x[(i, 3)] = Complex64::new(1.0 / (s * s), 0.0);
    }
    let mut b = [Complex64::new(0.0, 0.0); 3];
    let mut sq = 0.0;
    for comp in 0..3 {
        let y = DVector::from_iterator(
            rows,
            window
                .iter()
                .map(|(s, _, n)| Complex64::from_polar(1.0, c * c * s.ln()) * n[comp]),
        );
        let (beta, res) = complex_lsq(&x, &y).ok_or(Error::FitResidual {
            residual: f64::INFINITY,
            bound: 0.0,
        })?;
        b[comp] = beta[0];
        sq += res * res;
    }
    let residual = sq.sqrt();
    let bound = 10.0 * 2.0 * c.max(1e-3) / (0.5 * s_max);
    if residual > bound {
        return Err(Error::FitResidual { residual, bound });
    }
    let re = Vector3::new(b[0].re, b[1].re, b[2].re).normalize();
    let im = Vector3::new(b[0].im, b[1].im, b[2].im);
    let im = (im - re * re.dot(&im)).normalize();
    Ok(([0, 1, 2].map(|k| Complex64::new(re[k], im[k])), residual))
}

/// Profile to `S` with step `h`, then both asymptotic extractions.
pub fn profile_asymptotics(c: f64, s_max: f64, step: f64) -> Result<ProfileAsymptotics> {
    let profile = integrate_profile(c, s_max, step)?;
    let (a_plus, a_minus, tangent_residual) = asymptotic_tangents(&profile)?;
    let (b_plus, normal_residual) = asymptotic_normal(&profile, c)?;
    Ok(ProfileAsymptotics {
        c,
        a_plus,
        a_minus,
        b_plus,
        tangent_residual,
        normal_residual,
    })
}

/// Row-major 3×3 matrix.
pub type Mat3 = [[f64; 3]; 3];

fn mat(m: &Matrix3<f64>) -> Mat3 {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}

/// Applies a row-major matrix to a vector.
pub fn apply(m: &Mat3, v: Vec3) -> Vec3 {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

/// Proper rotation `Θ` with `Θ A^± = (sin θ/2, ±cos θ/2, 0)`.
///
/// `Θ` maps `(A⁺+A⁻)/|·|` to `e₁` and `(A⁺−A⁻)/|·|` to `e₂`. A proper
/// rotation then sends `A⁺∧A⁻/|A⁺∧A⁻|` to the image `−e₃` of the target
/// pair's own wedge. For `A⁺ = A⁻` (straight line, `θ = π`) the rotation
/// taking `A⁺` to `e₁` about `A⁺∧e₁` is returned.
pub fn rotation_to_corner(a_plus: Vec3, a_minus: Vec3, theta: f64) -> Result<Mat3> {
    let p = v3(a_plus);
    let m = v3(a_minus);
    if (p.norm() - 1.0).abs() > 1e-9 || (m.norm() - 1.0).abs() > 1e-9 {
        return Err(invalid("A", "tangent limits must be unit vectors"));
    }
    if !(theta > 0.0 && theta <= PI) {
        return Err(invalid("theta", "must lie in (0, π]"));
    }
    let source = p.dot(&m).clamp(-1.0, 1.0).acos();
    let target = PI - theta;
    if (source - target).abs() > 1e-6 {
        return Err(invalid(
            "theta",
            format!("angle between A⁺ and A⁻ is {source}, targets need {target}"),
        ));
    }
    let sum = p + m;
    let diff = p - m;
    if diff.norm() < 1e-12 {
        let u1 = sum.normalize();
        let rot = Rotation3::rotation_between(&u1, &Vector3::x())
            .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::z_axis(), PI));
        return Ok(mat(rot.matrix()));
    }
    let u1 = sum.normalize();
    let u2 = diff.normalize();
    let u3 = u1.cross(&u2);
    let theta_m = Matrix3::from_rows(&[u1.transpose(), u2.transpose(), u3.transpose()]);
    Ok(mat(&theta_m))
}

/// Rotation `Θ̃` built from the reflection-symmetric form of the tangent
/// limits: only the direction of `(A⁺₂, A⁺₃)` is taken from `a_plus`, and
/// the first component is set to `sin(θ/2)` exactly.
pub fn symmetric_corner_rotation(a_plus: Vec3) -> Result<Mat3> {
    let rho = (a_plus[1] * a_plus[1] + a_plus[2] * a_plus[2]).sqrt();
    if rho < 1e-300 {
        return Ok([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }
    let (a2, a3) = (a_plus[1] / rho, a_plus[2] / rho);
    Ok([[1.0, 0.0, 0.0], [0.0, a2, a3], [0.0, -a3, a2]])
}

/// Coefficients of `B⁺` in the basis `{A⁺, A⁻, A⁺∧A⁻/|A⁺∧A⁻|}` and the
/// assembled limit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitNormal {
    /// Coefficients of `Re B⁺`.
    pub a: Vec3,
    /// Coefficients of `Im B⁺`.
    pub b: Vec3,
    /// `e^{iλ}(Θ Re B⁺ + iΘ Im B⁺)` for the supplied log-phase `λ`.
    pub vector: CVec3,
}

/// Decomposes `B⁺` from the orthogonality relations and assembles the
/// rotated normal, for data with `arg α₀ = 0`.
///
/// With `κ = e^{−πc²}`: `a₁+a₂ = (Re B⁺)₁ e^{πc²/2}`,
/// `a₁ = a₂(1−2κ)`, and `a₃` from the second coordinate. The rotated normal
/// is `((a₁+a₂) sin θ/2, (a₁−a₂) cos θ/2, −a₃) + i(...)`, the sign of the
/// last entry following from [`rotation_to_corner`].
pub fn limit_normal(asym: &ProfileAsymptotics, theta: f64, log_phase: f64) -> Result<LimitNormal> {
    let c = asym.c;
    if !(c > 0.0) {
        return Err(invalid("c", "must be positive"));
    }
    let half = 0.5 * theta;
    if (half.sin() - (-0.5 * PI * c * c).exp()).abs() > 1e-9 {
        return Err(invalid("theta", "sin(θ/2) must equal e^{−πc²/2}"));
    }
    let kappa = (-PI * c * c).exp();
    let a_p = asym.a_plus;
    let rho = (1.0 - kappa).sqrt();
    let coeffs = |w: Vec3| -> Vec3 {
        let sum = w[0] * (0.5 * PI * c * c).exp();
        let second = sum / (2.0 * (1.0 - kappa));
        let first = second * (1.0 - 2.0 * kappa);
        let third = (w[1] - (first - second) * a_p[1]) * rho / a_p[2];
        [first, second, third]
    };
    let re = [0, 1, 2].map(|k| asym.b_plus[k].re);
    let im = [0, 1, 2].map(|k| asym.b_plus[k].im);
    let a = coeffs(re);
    let b = coeffs(im);
    let image = |q: Vec3| [(q[0] + q[1]) * half.sin(), (q[0] - q[1]) * half.cos(), -q[2]];
    let (ra, rb) = (image(a), image(b));
    let phase = Complex64::from_polar(1.0, log_phase);
    let vector = [0, 1, 2].map(|k| phase * Complex64::new(ra[k], rb[k]));
    Ok(LimitNormal { a, b, vector })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: Vec3, b: Vec3) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    #[test]
    fn straight_profile_for_zero_curvature() {
        let p = integrate_profile(0.0, 5.0, 1e-2).unwrap();
        for q in &p.samples {
            assert!((q.g[0] - q.s).abs() < 1e-12 && q.g[1].abs() < 1e-14 && q.g[2].abs() < 1e-14);
        }
    }

    #[test]
    fn profile_equation_and_orthonormality() {
        let p = integrate_profile(0.5, 20.0, 1e-3).unwrap();
        for q in p.samples.iter().step_by(97) {
            assert!(profile_residual(0.5, q) < 1e-6, "s={}", q.s);
            let det = v3(q.t).cross(&v3(q.n)).dot(&v3(q.b));
            assert!((det - 1.0).abs() < 1e-10);
            assert!((dot(q.t, q.n)).abs() < 1e-12);
            // G = sT + 2cb
            let g = v3(q.t) * q.s + v3(q.b) * 1.0;
            assert!((g - v3(q.g)).norm() < 1e-6);
        }
    }

    #[test]
    fn parallel_frame_matches_frenet_phase() {
        let c = 0.4;
        let p = integrate_profile(c, 10.0, 1e-3).unwrap();
        let f = parallel_frame(c, 10.0, 1e-3, 1000).unwrap();
        for (s, t, n) in &f {
            let idx = p.samples.iter().position(|q| (q.s - s).abs() < 1e-9).unwrap();
            let q = &p.samples[idx];
            let rot = Complex64::from_polar(1.0, 0.25 * s * s);
            for k in 0..3 {
                let expect = rot * Complex64::new(q.n[k], q.b[k]);
                assert!((n[k] - expect).norm() < 1e-7, "s={s}");
                assert!((t[k] - q.t[k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn tangent_limits_follow_angle_law() {
        let p = integrate_profile(0.5, 200.0, 1e-3).unwrap();
        let (ap, am, _) = asymptotic_tangents(&p).unwrap();
        assert!((ap[0] - (-PI / 8.0).exp()).abs() < 5e-3);
        assert!((dot(ap, am) - (2.0 * (-PI / 4.0).exp() - 1.0)).abs() < 1e-2);
        assert!((am[0] - ap[0]).abs() < 1e-6 && (am[1] + ap[1]).abs() < 1e-6 && (am[2] + ap[2]).abs() < 1e-6);
    }

    #[test]
    fn normal_limit_structure() {
        let asym = profile_asymptotics(0.1, 200.0, 1e-3).unwrap();
        let re = [0, 1, 2].map(|k| asym.b_plus[k].re);
        let im = [0, 1, 2].map(|k| asym.b_plus[k].im);
        assert!(dot(re, asym.a_plus).abs() < 1e-6);
        assert!(dot(im, asym.a_plus).abs() < 1e-6);
        let cp = 0.1 * (PI / 2.0).sqrt();
        assert!((re[0].abs() - cp).abs() < 0.05 * cp);
    }

    #[test]
    fn rotation_maps_tangents_to_targets() {
        let c = 0.5;
        let p = integrate_profile(c, 200.0, 1e-3).unwrap();
        let (ap, am, _) = asymptotic_tangents(&p).unwrap();
        let theta = PI - dot(ap, am).acos();
        let rot = rotation_to_corner(ap, am, theta).unwrap();
        let tp = apply(&rot, ap);
        let tm = apply(&rot, am);
        let h = 0.5 * theta;
        assert!((tp[0] - h.sin()).abs() < 1e-9 && (tp[1] - h.cos()).abs() < 1e-9 && tp[2].abs() < 1e-9);
        assert!((tm[0] - h.sin()).abs() < 1e-9 && (tm[1] + h.cos()).abs() < 1e-9 && tm[2].abs() < 1e-9);
        let m = Matrix3::from_fn(|i, j| rot[i][j]);
        assert!((m.determinant() - 1.0).abs() < 1e-12);
        assert!((m.transpose() * m - Matrix3::identity()).norm() < 1e-12);
    }

    #[test]
    fn rotation_identity_for_targets() {
        let theta: f64 = 2.0;
        let h = 0.5 * theta;
        let rot = rotation_to_corner([h.sin(), h.cos(), 0.0], [h.sin(), -h.cos(), 0.0], theta).unwrap();
        let m = Matrix3::from_fn(|i, j| rot[i][j]);
        assert!((m - Matrix3::identity()).norm() < 1e-12);
        assert!(rotation_to_corner([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.3).is_err());
    }

    #[test]
    fn limit_normal_small_curvature() {
        for &c in &[1e-2, 1e-3] {
            let asym = profile_asymptotics(c, 200.0, 1e-3).unwrap();
            let theta = 2.0 * (-0.5 * PI * c * c).exp().asin();
            let ln = limit_normal(&asym, theta, 0.0).unwrap();
            let half = 0.5 * theta;
            assert!((ln.a[0] + ln.a[1]).abs() < 0.05, "{:?}", ln.a);
            assert!(((ln.a[0] - ln.a[1]) * half.cos() - 0.5f64.sqrt()).abs() < 0.02, "{:?}", ln.a);
            assert!((ln.a[2] - 0.5f64.sqrt()).abs() < 0.02);
            assert!((ln.b[2] + 0.5f64.sqrt()).abs() < 0.02);
            let s = 0.5f64.sqrt();
            let expect = [Complex64::new(0.0, 0.0), Complex64::new(s, s), Complex64::new(-s, s)];
            for k in 0..3 {
                assert!((ln.vector[k] - expect[k]).norm() < 0.03, "c={c} k={k} {:?}", ln.vector);
            }
        }
    }
}
