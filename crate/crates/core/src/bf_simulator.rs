//! Direct simulation of the binormal flow through its tangent equation.
//!
//! The tangent obeys the Schrödinger map `T_t = T ∧ T_xx`; it is discretized
//! by centered differences and advanced by classical RK4 with projection to
//! the sphere after every stage. The curve is rebuilt from the tangent and
//! the position of the node at `x = 0`, which follows `χ_t = T ∧ T_x`.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::frame_evolution::{corner_trajectory, evolve_frame, FrameOptions};
use crate::nls_remainder::{build_alpha, CornerParams};
use crate::selfsimilar::Vec3;
use crate::theta_sums::{support_radius, RationalTorsion};

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(s: f64, a: Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn normalized(a: Vec3) -> Vec3 {
    scale(1.0 / norm(a), a)
}

fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(add(a, scale(-1.0, b)))
}

/// Rotation of `v` by `angle` about the unit axis `k` (Rodrigues).
fn rotate(v: Vec3, k: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    let kv = cross(k, v);
    let kd = dot(k, v) * (1.0 - c);
    [0, 1, 2].map(|i| v[i] * c + kv[i] * s + k[i] * kd)
}

/// Angle between unit vectors, stable near `0` and `π`.
fn angle_between(a: Vec3, b: Vec3) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

/// Polygonal line with corners of equal angle at `j ℓ`, `|j| ≤ ⌊n^ν⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolygonalLineSpec {
    /// Scale parameter.
    pub n: u64,
    /// Support exponent.
    pub nu: f64,
    /// Corner angle `θ ∈ (0, π)`.
    pub theta: f64,
    /// Twist per corner.
    pub torsion: RationalTorsion,
    /// Rescaling exponent `μ`: edges of length `n^{−μ}`.
    pub mu: Option<f64>,
}

impl PolygonalLineSpec {
    /// Line of the corner data `params`.
    pub fn from_params(params: &CornerParams, mu: Option<f64>) -> Self {
        Self {
            n: params.n,
            nu: params.nu,
            theta: params.theta_n,
            torsion: params.torsion,
            mu,
        }
    }

    /// Number of corners on each side of `0`.
    pub fn radius(&self) -> u64 {
        support_radius(self.n, self.nu)
    }

    /// Edge length `n^{−μ}`.
    pub fn edge(&self) -> f64 {
        self.mu.map_or(1.0, |m| (self.n as f64).powf(-m))
    }

    /// `(π − θ)(2⌊n^ν⌋ + 1)`.
    pub fn total_turning(&self) -> f64 {
        (std::f64::consts::PI - self.theta) * (2 * self.radius() + 1) as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            return Err(invalid("theta", "must lie in (0, π)"));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) || self.n == 0 {
            return Err(invalid("n", "need n ≥ 1 and ν ∈ (0, 1]"));
        }
        Ok(())
    }
}

/// Uniform grid of a polygonal line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Cells per edge; `h = ℓ / cells_per_edge`.
    pub cells_per_edge: usize,
    /// Half-length `L` in edges; must exceed the corner radius.
    pub half_length_edges: usize,
}

/// Curve sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCurve {
    /// Time of the sample.
    pub t: f64,
    /// Spacing.
    pub h: f64,
    /// Abscissa of node 0.
    pub x0: f64,
    /// Positions.
    pub chi: Vec<Vec3>,
    /// Unit tangents.
    pub tangent: Vec<Vec3>,
    /// Node at `x = 0`.
    pub anchor: usize,
    /// Nodes carrying a corner.
    pub corners: Vec<usize>,
    /// Mollification width in cells, once applied.
    pub smoothing: Option<usize>,
    /// True for a closed curve of period `len · h`.
    pub periodic: bool,
}

impl GridCurve {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.tangent.len()
    }

    /// True for an empty grid.
    pub fn is_empty(&self) -> bool {
        self.tangent.is_empty()
    }

    /// Abscissa of node `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// Straight line along `direction` on `[−L, L]`.
    pub fn straight_line(h: f64, half_cells: usize, direction: Vec3) -> Result<Self> {
        if !(h > 0.0) || half_cells == 0 {
            return Err(invalid("h", "need a positive spacing and extent"));
        }
        let d = normalized(direction);
        let nodes = 2 * half_cells + 1;
        let mut c = Self {
            t: 0.0,
            h,
            x0: -(half_cells as f64) * h,
            chi: vec![[0.0; 3]; nodes],
            tangent: vec![d; nodes],
            anchor: half_cells,
            corners: Vec::new(),
            smoothing: None,
            periodic: false,
        };
        c.chi = c.integrate_positions([0.0; 3]);
        Ok(c)
    }

    /// Unit circle in the plane `z = 0`, parametrized by arclength.
    pub fn circle(nodes: usize) -> Result<Self> {
        if nodes < 8 {
            return Err(invalid("nodes", "need at least 8 nodes"));
        }
        let h = TAU / nodes as f64;
        let chi = (0..nodes)
            .map(|i| {
                let s = i as f64 * h;
                [s.cos(), s.sin(), 0.0]
            })
            .collect();
        let tangent = (0..nodes)
            .map(|i| {
                let s = i as f64 * h;
                [-s.sin(), s.cos(), 0.0]
            })
            .collect();
        Ok(Self {
            t: 0.0,
            h,
            x0: 0.0,
            chi,
            tangent,
            anchor: 0,
            corners: Vec::new(),
            smoothing: None,
            periodic: true,
        })
    }

    /// Positions by the trapezoid rule from `start` at the anchor.
    pub fn integrate_positions(&self, start: Vec3) -> Vec<Vec3> {
        let n = self.len();
        let mut chi = vec![[0.0; 3]; n];
        chi[self.anchor] = start;
        let half = 0.5 * self.h;
        for i in self.anchor + 1..n {
            chi[i] = add(chi[i - 1], scale(half, add(self.tangent[i - 1], self.tangent[i])));
        }
        for i in (0..self.anchor).rev() {
            chi[i] = add(chi[i + 1], scale(-half, add(self.tangent[i], self.tangent[i + 1])));
        }
        chi
    }

    /// `Σ ∠(T_i, T_{i+1})`, the discrete `∫|T_x|` over `[x_a, x_b]`.
    pub fn turning(&self, a: usize, b: usize) -> f64 {
        (a..b.min(self.len() - 1))
            .map(|i| angle_between(self.tangent[i], self.tangent[i + 1]))
            .sum()
    }

    /// Largest `||T_i| − 1|`.
    pub fn norm_defect(&self) -> f64 {
        self.tangent.iter().fold(0.0, |m, v| m.max((norm(*v) - 1.0).abs()))
    }
}

/// Frame `(T, n, b)` carried along the edges.
#[derive(Clone, Copy)]
struct EdgeFrame {
    t: Vec3,
    n: Vec3,
    b: Vec3,
}

impl EdgeFrame {
    fn rotate_about(self, axis: Vec3, angle: f64) -> Self {
        Self {
            t: rotate(self.t, axis, angle),
            n: rotate(self.n, axis, angle),
            b: rotate(self.b, axis, angle),
        }
    }

    /// Crossing a corner forward: turn about `b`, then twist about the new `T`.
    fn forward(self, turn: f64, twist: f64) -> Self {
        let turned = self.rotate_about(self.b, turn);
        turned.rotate_about(turned.t, twist)
    }

    fn backward(self, turn: f64, twist: f64) -> Self {
        let untwisted = self.rotate_about(self.t, -twist);
        untwisted.rotate_about(untwisted.b, -turn)
    }
}

/// Polygonal line on a grid; `χ(0) = 0` with one-sided tangents
/// `(sin θ/2, ±cos θ/2, 0)` at the corner `0`.
pub fn build_polygonal_line(spec: &PolygonalLineSpec, grid: &GridSpec) -> Result<GridCurve> {
    spec.validate()?;
    let m = grid.cells_per_edge;
    if m < 2 {
        return Err(invalid("cells_per_edge", "need at least 2 cells per edge"));
    }
    let radius = spec.radius() as usize;
    if grid.half_length_edges <= radius {
        return Err(invalid(
            "half_length_edges",
            format!("L = {} edges does not exceed the corner radius {radius}", grid.half_length_edges),
        ));
    }
    let r = radius as i64;
    let edge = spec.edge();
    let turn = std::f64::consts::PI - spec.theta;
    let twist = spec.torsion.omega0();
    let (sh, ch) = (0.5 * spec.theta).sin_cos();
    let t0 = [sh, ch, 0.0];
    let b0 = rotate([0.0, 0.0, 1.0], t0, twist);
    let f0 = EdgeFrame { t: t0, n: cross(b0, t0), b: b0 };
    // Edge e joins corner e to corner e + 1; edges −r−1 and r are half-lines.
    let mut frames = vec![f0; (2 * r + 2) as usize];
    let idx = |e: i64| (e + r + 1) as usize;
    for e in 1..=r {
        frames[idx(e)] = frames[idx(e - 1)].forward(turn, twist);
    }
    for e in (-r - 1..0).rev() {
        frames[idx(e)] = frames[idx(e + 1)].backward(turn, twist);
    }
    let mut vertex = vec![[0.0; 3]; (2 * r + 1) as usize];
    let vidx = |k: i64| (k + r) as usize;
    for k in 1..=r {
        vertex[vidx(k)] = add(vertex[vidx(k - 1)], scale(edge, frames[idx(k - 1)].t));
    }
    for k in (-r..0).rev() {
        vertex[vidx(k)] = add(vertex[vidx(k + 1)], scale(-edge, frames[idx(k)].t));
    }

    let half_cells = grid.half_length_edges * m;
    let nodes = 2 * half_cells + 1;
    let h = edge / m as f64;
    let mi = m as i64;
    let mut tangent = Vec::with_capacity(nodes);
    let mut chi = Vec::with_capacity(nodes);
    let mut corners = Vec::new();
    for i in 0..nodes {
        let d = i as i64 - half_cells as i64;
        let e = d.div_euclid(mi).clamp(-r - 1, r);
        let on_corner = d.rem_euclid(mi) == 0 && (d / mi).abs() <= r;
        let tan = if on_corner {
            let k = d / mi;
            corners.push(i);
            normalized(add(frames[idx(k - 1)].t, frames[idx(k)].t))
        } else {
            frames[idx(e)].t
        };
        tangent.push(tan);
        let k = e.max(-r);
        let offset = (d - k * mi) as f64 * h;
        chi.push(add(vertex[vidx(k)], scale(offset, frames[idx(e)].t)));
    }
    Ok(GridCurve {
        t: 0.0,
        h,
        x0: -(half_cells as f64) * h,
        chi,
        tangent,
        anchor: half_cells,
        corners,
        smoothing: None,
        periodic: false,
    })
}

/// `6s⁵ − 15s⁴ + 10s³`, monotone from 0 to 1 with vanishing two derivatives.
fn smootherstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

/// Great-circle interpolation between unit vectors.
fn slerp(a: Vec3, b: Vec3, w: f64) -> Vec3 {
    let omega = angle_between(a, b);
    if omega < 1e-12 {
        return a;
    }
    let s = omega.sin();
    normalized(add(scale(((1.0 - w) * omega).sin() / s, a), scale((w * omega).sin() / s, b)))
}

/// Smooths each corner over `w` cells along the great circle joining the
/// one-sided tangents, then rebuilds positions with `χ(0) = 0`.
pub fn mollify(curve: &GridCurve, w: usize) -> Result<GridCurve> {
    if w < 2 {
        return Err(invalid("w", "need at least 2 cells"));
    }
    if curve.smoothing.is_some() {
        return Err(invalid("curve", "already mollified"));
    }
    let spacing = curve.corners.windows(2).map(|p| p[1] - p[0]).min();
    if let Some(gap) = spacing {
        if w > gap {
            return Err(invalid("w", format!("windows of {w} cells overlap at corner spacing {gap}")));
        }
    }
    let half = w as f64 / 2.0;
    let reach = w / 2 + 1;
    let mut out = curve.clone();
    for &ic in &curve.corners {
        if ic < reach || ic + reach >= curve.len() {
            return Err(invalid("w", "smoothing window leaves the grid"));
        }
        let before = curve.tangent[ic - reach];
        let after = curve.tangent[ic + reach];
        for d in -(w as i64 / 2)..=(w as i64 / 2) {
            let s = (d as f64 + half) / w as f64;
            out.tangent[(ic as i64 + d) as usize] = slerp(before, after, smootherstep(s));
        }
    }
    // Anchor so the straight parts next to the corner at 0 stay on the
    // polygon, splitting the window's length mismatch evenly between them.
    let a = curve.anchor;
    let provisional = out.integrate_positions([0.0; 3]);
    let (l, r) = (a.saturating_sub(reach), (a + reach).min(curve.len() - 1));
    let shift = [0, 1, 2].map(|k| 0.5 * ((curve.chi[l][k] - provisional[l][k]) + (curve.chi[r][k] - provisional[r][k])));
    out.chi = out.integrate_positions(add(curve.chi[a], shift));
    out.smoothing = Some(w);
    Ok(out)
}

/// Time stepping of [`run_schrodinger_map`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapOptions {
    /// Time step; at most `h²/4`.
    pub dt: f64,
    /// Number of steps.
    pub steps: usize,
    /// Store a curve every this many steps; `0` keeps only the final one.
    pub output_every: usize,
}

impl MapOptions {
    /// Largest stable step reaching `t_end` exactly.
    pub fn to_time(h: f64, t_end: f64) -> Self {
        let steps = (t_end / (0.25 * h * h)).ceil().max(1.0) as usize;
        Self {
            dt: t_end / steps as f64,
            steps,
            output_every: 0,
        }
    }
}

/// Result of a Schrödinger-map run.
#[derive(Debug, Clone, Serialize)]
pub struct MapRun {
    /// Stored curves, starting with the initial one.
    pub snapshots: Vec<GridCurve>,
    /// Times of the anchor record (every step).
    pub times: Vec<f64>,
    /// `χ(t, 0)` at every step.
    pub corner: Vec<Vec3>,
    /// Largest `||T| − 1|` before projection.
    pub max_norm_drift: f64,
    /// Largest change of the end tangents.
    pub far_field_change: f64,
}

struct MapState {
    tangent: Vec<Vec3>,
    anchor: Vec3,
}

fn map_rhs(curve: &GridCurve, s: &MapState, out: &mut [Vec3]) -> Vec3 {
    let n = s.tangent.len();
    let inv = 1.0 / (curve.h * curve.h);
    let t = &s.tangent;
    for i in 0..n {
        let (l, r) = if curve.periodic {
            ((i + n - 1) % n, (i + 1) % n)
        } else if i == 0 || i == n - 1 {
            out[i] = [0.0; 3];
            continue;
        } else {
            (i - 1, i + 1)
        };
        // T × T_xx with T × T = 0.
        out[i] = scale(inv, cross(t[i], add(t[l], t[r])));
    }
    let a = curve.anchor;
    let (l, r) = if curve.periodic { ((a + n - 1) % n, (a + 1) % n) } else { (a - 1, a + 1) };
    scale(0.5 / curve.h, cross(t[a], add(t[r], scale(-1.0, t[l]))))
}

fn combine(base: &MapState, k: &[Vec3], ka: Vec3, dt: f64, project: bool, drift: &mut f64) -> MapState {
    let tangent = base
        .tangent
        .iter()
        .zip(k)
        .map(|(t, d)| {
            let v = add(*t, scale(dt, *d));
            if project {
                *drift = drift.max((norm(v) - 1.0).abs());
                normalized(v)
            } else {
                v
            }
        })
        .collect();
    MapState {
        tangent,
        anchor: add(base.anchor, scale(dt, ka)),
    }
}

/// RK4 integration of `T_t = T ∧ T_xx` with projection after every stage.
pub fn run_schrodinger_map(curve: &GridCurve, opts: &MapOptions) -> Result<MapRun> {
    let bound = 0.25 * curve.h * curve.h;
    if !(opts.dt > 0.0) || opts.dt > bound * (1.0 + 1e-12) {
        return Err(Error::Stability { dt: opts.dt, bound });
    }
    if curve.len() < 3 {
        return Err(invalid("curve", "need at least 3 nodes"));
    }
    let n = curve.len();
    let dt = opts.dt;
    let mut state = MapState {
        tangent: curve.tangent.clone(),
        anchor: curve.chi[curve.anchor],
    };
    let mut k1 = vec![[0.0; 3]; n];
    let mut k2 = vec![[0.0; 3]; n];
    let mut k3 = vec![[0.0; 3]; n];
    let mut k4 = vec![[0.0; 3]; n];
    let mut drift: f64 = 0.0;
    let mut stage_drift: f64 = 0.0;
    let mut snapshots = vec![curve.clone()];
    let mut times = vec![curve.t];
    let mut corner = vec![state.anchor];
    let snapshot = |s: &MapState, t: f64| {
        let mut c = curve.clone();
        c.t = t;
        c.tangent = s.tangent.clone();
        c.chi = c.integrate_positions(s.anchor);
        c
    };
    for step in 1..=opts.steps {
        let t = curve.t + step as f64 * dt;
        let a1 = map_rhs(curve, &state, &mut k1);
        let s2 = combine(&state, &k1, a1, 0.5 * dt, true, &mut stage_drift);
        let a2 = map_rhs(curve, &s2, &mut k2);
        let s3 = combine(&state, &k2, a2, 0.5 * dt, true, &mut stage_drift);
        let a3 = map_rhs(curve, &s3, &mut k3);
        let s4 = combine(&state, &k3, a3, dt, true, &mut stage_drift);
        let a4 = map_rhs(curve, &s4, &mut k4);
        for i in 0..n {
            k1[i] = add(add(k1[i], k4[i]), scale(2.0, add(k2[i], k3[i])));
        }
        let ka = add(add(a1, a4), scale(2.0, add(a2, a3)));
        state = combine(&state, &k1, ka, dt / 6.0, true, &mut drift);
        if !state.anchor.iter().all(|v| v.is_finite()) || !state.tangent.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        times.push(t);
        corner.push(state.anchor);
        if (opts.output_every > 0 && step % opts.output_every == 0) || step == opts.steps {
            snapshots.push(snapshot(&state, t));
        }
    }
    let far_field_change = if curve.periodic {
        0.0
    } else {
        distance(state.tangent[0], curve.tangent[0]).max(distance(state.tangent[n - 1], curve.tangent[n - 1]))
    };
    Ok(MapRun {
        snapshots,
        times,
        corner,
        max_norm_drift: drift.max(stage_drift),
        far_field_change,
    })
}

/// Linear interpolation of a trajectory sampled at increasing `times`.
fn sample_at(times: &[f64], values: &[Vec3], t: f64) -> Vec3 {
    let i = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
    let (t0, t1) = (times[i - 1], times[i]);
    let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
    add(scale(1.0 - w, values[i - 1]), scale(w, values[i]))
}

/// Resolution of [`compare_with_frame`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareOptions {
    /// Grid of the PDE run.
    pub grid: GridSpec,
    /// Mollification width in cells.
    pub mollify_cells: usize,
    /// Frame run configuration; its sample times are replaced.
    pub frame: FrameOptions,
}

impl CompareOptions {
    /// `cells_per_edge` cells per edge, margin of 4 edges, `w = 4`, frame
    /// run from `ε = 10⁻⁴` at tolerance `10⁻¹⁰`.
    pub fn new(cells_per_edge: usize, radius: u64) -> Self {
        Self {
            grid: GridSpec {
                cells_per_edge,
                half_length_edges: radius as usize + 4,
            },
            mollify_cells: 4,
            frame: FrameOptions::new(1e-4, 1.0, 1e-10),
        }
    }
}

/// Both corner trajectories and their normalized distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    /// Comparison times (rescaled time when `μ` is set).
    pub times: Vec<f64>,
    /// PDE corner position `χ(t,0)`; the polygon vertex sits at the origin.
    pub pde: Vec<Vec3>,
    /// Frame corner displacement, rescaled when `μ` is set.
    pub frame: Vec<Vec3>,
    /// Largest pointwise distance.
    pub max_distance: f64,
    /// Diameter of the frame trajectory together with the origin.
    pub diameter: f64,
    /// `max_distance / diameter`.
    pub normalized: f64,
}

/// Runs the PDE on the polygonal line of `(n, ν, Γ, ω₀)` and the frame
/// pipeline on the same data, and compares the corner trajectories.
///
/// With `μ` set, the PDE runs on the rescaled line and the frame trajectory
/// is mapped by `χ̃(t) = n^{−μ} χ(n^{2μ} t)`.
pub fn compare_with_frame(
    n: u64,
    nu: f64,
    gamma: f64,
    torsion: RationalTorsion,
    mu: Option<f64>,
    t_grid: &[f64],
    opts: &CompareOptions,
) -> Result<CompareReport> {
    let t_max = t_grid.iter().copied().fold(f64::NAN, f64::max);
    if t_grid.is_empty() || !(t_grid.iter().all(|&t| t > 0.0)) {
        return Err(invalid("t_grid", "need positive times"));
    }
    let alpha = build_alpha(n, nu, gamma, torsion)?;
    let params = *alpha.params().expect("built data carry parameters");
    let spec = PolygonalLineSpec::from_params(&params, mu);
    let line = mollify(&build_polygonal_line(&spec, &opts.grid)?, opts.mollify_cells)?;
    let run = run_schrodinger_map(&line, &MapOptions::to_time(line.h, t_max))?;
    // The polygon vertex at 0 is the origin of both trajectories.
    let pde: Vec<Vec3> = t_grid.iter().map(|&t| sample_at(&run.times, &run.corner, t)).collect();

    let time_scale = mu.map_or(1.0, |m| (n as f64).powf(2.0 * m));
    let length_scale = mu.map_or(1.0, |m| (n as f64).powf(-m));
    let mut frame_opts = opts.frame.clone();
    frame_opts.t_end = t_max * time_scale;
    frame_opts.sample_times = t_grid.iter().map(|t| t * time_scale).collect();
    if !(frame_opts.eps < t_grid.iter().copied().fold(f64::INFINITY, f64::min) * time_scale) {
        return Err(invalid("t_grid", "times must exceed the frame start-up time"));
    }
    let frun = evolve_frame(&alpha, &frame_opts)?;
    let traj = corner_trajectory(&frun, &alpha);
    let frame: Vec<Vec3> = t_grid
        .iter()
        .map(|&t| scale(length_scale, sample_at(&traj.times, &traj.chi, t * time_scale)))
        .collect();

    let max_distance = pde
        .iter()
        .zip(&frame)
        .map(|(a, b)| distance(*a, *b))
        .fold(0.0, f64::max);
    let mut diameter: f64 = 0.0;
    let mut points = frame.clone();
    points.push([0.0; 3]);
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            diameter = diameter.max(distance(*a, *b));
        }
    }
    if !(diameter > 0.0) {
        return Err(invalid("t_grid", "the frame trajectory has zero extent"));
    }
    Ok(CompareReport {
        times: t_grid.to_vec(),
        pde,
        frame,
        max_distance,
        diameter,
        normalized: max_distance / diameter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(n: u64, theta: f64, torsion: RationalTorsion) -> PolygonalLineSpec {
        PolygonalLineSpec {
            n,
            nu: 1.0,
            theta,
            torsion,
            mu: None,
        }
    }

    #[test]
    fn torsion_free_line_is_planar() {
        let g = GridSpec { cells_per_edge: 4, half_length_edges: 6 };
        let c = build_polygonal_line(&spec(4, 2.5, RationalTorsion::zero()), &g).unwrap();
        assert!(c.chi.iter().all(|p| p[2].abs() < 1e-14));
        assert_eq!(c.chi[c.anchor], [0.0; 3]);
    }

    #[test]
    fn regular_loop_closes() {
        let n = 3;
        let theta = (2 * n - 1) as f64 * PI / (2 * n + 1) as f64;
        let g = GridSpec { cells_per_edge: 2, half_length_edges: 5 };
        let c = build_polygonal_line(&spec(n, theta, RationalTorsion::zero()), &g).unwrap();
        // Corners −3..3 bound 6 closed edges; the seventh edge returns to start.
        let first = c.chi[c.corners[0]];
        let last = c.chi[*c.corners.last().unwrap()];
        let closing = c.tangent[*c.corners.last().unwrap() + 1];
        assert!(distance(add(last, closing), first) < 1e-12);
    }

    #[test]
    fn total_turning_counts_corners() {
        let s = spec(5, 2.0, RationalTorsion::zero());
        let g = GridSpec { cells_per_edge: 4, half_length_edges: 8 };
        let c = build_polygonal_line(&s, &g).unwrap();
        assert!((c.turning(0, c.len()) - s.total_turning()).abs() < 1e-12);
        assert_eq!(c.corners.len(), 11);
    }

    #[test]
    fn mollification_keeps_turn_and_far_tangents() {
        let s = spec(2, 2.2, RationalTorsion::new(1, 3).unwrap());
        let g = GridSpec { cells_per_edge: 16, half_length_edges: 4 };
        let c = build_polygonal_line(&s, &g).unwrap();
        let m = mollify(&c, 6).unwrap();
        for &ic in &c.corners {
            let turn = m.turning(ic - 8, ic + 8);
            assert!((turn - (PI - s.theta)).abs() < 1e-8);
            assert_eq!(m.tangent[ic - 8], c.tangent[ic - 8]);
            assert_eq!(m.tangent[ic + 8], c.tangent[ic + 8]);
        }
        assert!(m.norm_defect() < 1e-15);
        assert!(mollify(&c, 17).is_err());
        assert!(mollify(&c, 1).is_err());
    }

    #[test]
    fn straight_line_is_fixed() {
        let c = GridCurve::straight_line(0.1, 50, [1.0, 2.0, 2.0]).unwrap();
        assert_eq!(mollify(&c, 4).unwrap().tangent, c.tangent);
        let run = run_schrodinger_map(&c, &MapOptions { dt: 0.0025, steps: 50, output_every: 0 }).unwrap();
        let last = run.snapshots.last().unwrap();
        for (a, b) in last.tangent.iter().zip(&c.tangent) {
            assert!(distance(*a, *b) < 1e-15);
        }
    }

    #[test]
    fn rejects_unstable_step_and_short_grid() {
        let c = GridCurve::straight_line(0.1, 10, [1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            run_schrodinger_map(&c, &MapOptions { dt: 0.01, steps: 1, output_every: 0 }),
            Err(Error::Stability { .. })
        ));
        let g = GridSpec { cells_per_edge: 4, half_length_edges: 3 };
        assert!(build_polygonal_line(&spec(3, 2.0, RationalTorsion::zero()), &g).is_err());
    }

    #[test]
    fn circle_translates_rigidly() {
        let c = GridCurve::circle(512).unwrap();
        let opts = MapOptions::to_time(c.h, 2.0);
        let run = run_schrodinger_map(&c, &opts).unwrap();
        let last = run.snapshots.last().unwrap();
        let dev = last
            .chi
            .iter()
            .zip(&c.chi)
            .map(|(p, q)| distance(*p, add(*q, [0.0, 0.0, 2.0])))
            .fold(0.0, f64::max);
        assert!(dev / 2.0 < 1e-2, "deviation {dev}");
        assert!(run.max_norm_drift < 1e-6);
    }
}
