//! Executors of the verbs; each writes its data files and one metadata file.

use std::f64::consts::PI;
use std::path::PathBuf;

use riemannlab_core::bf_simulator::{
    build_polygonal_line, compare_with_frame, mollify, run_schrodinger_map, CompareOptions, GridSpec, MapOptions,
};
use riemannlab_core::frame_evolution::{geometric_grid, frame_limit_error, FrameOptions};
use riemannlab_core::io::{write_csv, write_json, write_svg_polyline};
use riemannlab_core::multifractal::{analytic_eta, eta_fits, spectrum};
use riemannlab_core::nls_remainder::{build_alpha, decay_study, integrate_remainder, DecayConfig};
use riemannlab_core::selfsimilar::{integrate_profile, profile_asymptotics};
use riemannlab_core::theta_sums::{
    duistermaat_phi, gauss_sum, helix_integral, r_tilde, riemann_nm, riemann_r, talbot_coefficients,
};
use riemannlab_core::{
    Cell, ColumnKind, PolygonalLineSpec, RemainderOptions, Result, RunConfig, RunMetadata, Table,
    ThetaFamilyParams, TruncatedSum,
};
use serde_json::json;

use crate::args::{
    BfCompare, BfSimulate, FrameTrajectory, GaussSum, GaussTalbot, Group, MfSpectrum, MfStructure, NlsDecay, NlsRun,
    SsProfile, ThetaEval, ThetaFunction,
};
use crate::args::{BfVerb, FrameVerb, GaussVerb, MfVerb, NlsVerb, SsVerb, ThetaVerb};

/// Dispatches the parsed command; returns the files written.
pub fn execute(group: &Group, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut run = Run::new(config);
    match group {
        Group::Theta(ThetaVerb::Eval(a)) => theta_eval(a, &mut run)?,
        Group::Gauss(GaussVerb::Sum(a)) => gauss_sum_cmd(a, &mut run)?,
        Group::Gauss(GaussVerb::Talbot(a)) => gauss_talbot(a, &mut run)?,
        Group::Ss(SsVerb::Profile(a)) => ss_profile(a, &mut run)?,
        Group::Nls(NlsVerb::Run(a)) => nls_run(a, &mut run)?,
        Group::Nls(NlsVerb::Decay(a)) => nls_decay(a, &mut run)?,
        Group::Frame(FrameVerb::Trajectory(a)) => frame_trajectory(a, &mut run)?,
        Group::Bf(BfVerb::Simulate(a)) => bf_simulate(a, &mut run)?,
        Group::Bf(BfVerb::Compare(a)) => bf_compare(a, &mut run)?,
        Group::Mf(MfVerb::Structure(a)) => mf_structure(a, &mut run)?,
        Group::Mf(MfVerb::Spectrum(a)) => mf_spectrum(a, &mut run)?,
    }
    run.finish()
}

/// Collects artifacts and tolerances of one invocation.
struct Run<'a> {
    config: &'a RunConfig,
    meta: RunMetadata,
    written: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn new(config: &'a RunConfig) -> Self {
        Self {
            config,
            meta: RunMetadata::new(config),
            written: Vec::new(),
        }
    }

    fn csv(&mut self, suffix: &str, table: &Table) -> Result<()> {
        let path = self.config.artifact(suffix);
        write_csv(table, &path)?;
        self.meta.data_file(&path);
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, suffix: &str, value: &serde_json::Value) -> Result<()> {
        let path = self.config.artifact(suffix);
        write_json(value, &path)?;
        self.meta.data_file(&path);
        self.written.push(path);
        Ok(())
    }

    fn svg(&mut self, points: &[[f64; 2]]) -> Result<()> {
        if !self.config.svg {
            return Ok(());
        }
        let path = self.config.artifact(".svg");
        write_svg_polyline(points, &path)?;
        self.meta.data_file(&path);
        self.written.push(path);
        Ok(())
    }

    fn tolerance<T: serde::Serialize>(&mut self, key: &str, value: T) {
        self.meta.tolerance(key, value);
    }

    fn finish(mut self) -> Result<Vec<PathBuf>> {
        let path = self.config.artifact(".meta.json");
        write_json(&self.meta, &path)?;
        self.written.push(path);
        Ok(self.written)
    }
}

fn table(columns: &[(&str, ColumnKind)]) -> Result<Table> {
    Table::new(columns)
}

fn theta_eval(a: &ThetaEval, run: &mut Run) -> Result<()> {
    if a.steps == 0 {
        return Err(riemannlab_core::Error::InvalidArgument {
            name: "steps",
            reason: "must be at least 1".into(),
        });
    }
    let params = ThetaFamilyParams::new(a.n, a.m)?;
    let eval = |t: f64| -> Result<TruncatedSum> {
        match a.function {
            ThetaFunction::R => riemann_r(t, a.big_n),
            ThetaFunction::Phi => duistermaat_phi(t, a.big_n),
            ThetaFunction::Nm => riemann_nm(t, params, a.big_n),
            ThetaFunction::RTilde => r_tilde(t, a.gamma, a.omega, a.big_n),
            ThetaFunction::Helix => helix_integral(t, a.omega, a.big_n),
        }
    };
    let mut out = table(&[("t", ColumnKind::Real), ("value", ColumnKind::Complex), ("tail_bound", ColumnKind::Real)])?;
    let mut points = Vec::with_capacity(a.steps + 1);
    let mut worst_tail: f64 = 0.0;
    for k in 0..=a.steps {
        let t = a.t0 + (a.t1 - a.t0) * k as f64 / a.steps as f64;
        let s = eval(t)?;
        worst_tail = worst_tail.max(s.tail_bound);
        points.push([s.value.re, s.value.im]);
        out.push_row(vec![t.into(), s.value.into(), s.tail_bound.into()])?;
    }
    run.csv(".csv", &out)?;
    run.svg(&points)?;
    run.tolerance("max_tail_bound", worst_tail);
    Ok(())
}

fn gauss_sum_cmd(a: &GaussSum, run: &mut Run) -> Result<()> {
    let tau = gauss_sum(a.p, a.q, a.m, a.n)?;
    run.json(
        ".json",
        &json!({ "tau": { "re": tau.re, "im": tau.im }, "modulus": tau.norm(), "sqrt_q": (a.q as f64).sqrt() }),
    )?;
    run.tolerance("arithmetic", "exact phases reduced modulo q");
    Ok(())
}

fn gauss_talbot(a: &GaussTalbot, run: &mut Run) -> Result<()> {
    let coeffs = talbot_coefficients(a.p, a.q)?;
    let mut out = table(&[("j", ColumnKind::Integer), ("tau", ColumnKind::Complex), ("modulus", ColumnKind::Real)])?;
    for (j, c) in coeffs.iter().enumerate() {
        out.push_row(vec![(j as i64).into(), (*c).into(), c.norm().into()])?;
    }
    run.csv(".csv", &out)?;
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    run.tolerance("sum_modulus_squared_minus_one_over_q", total - 1.0 / a.q as f64);
    Ok(())
}

fn ss_profile(a: &SsProfile, run: &mut Run) -> Result<()> {
    let profile = integrate_profile(a.c, a.s_max, a.step)?;
    let mut columns: Vec<(String, ColumnKind)> = vec![("s".into(), ColumnKind::Real)];
    for name in ["G", "T", "n", "b"] {
        for k in 1..=3 {
            columns.push((format!("{name}_{k}"), ColumnKind::Real));
        }
    }
    let mut out = Table::new(&columns)?;
    let mut points = Vec::new();
    let stride = a.stride.max(1);
    for (i, p) in profile.samples.iter().enumerate() {
        if i % stride != 0 && i + 1 != profile.samples.len() {
            continue;
        }
        let mut row: Vec<Cell> = vec![p.s.into()];
        for v in [p.g, p.t, p.n, p.b] {
            row.extend(v.iter().map(|&x| Cell::from(x)));
        }
        out.push_row(row)?;
        points.push([p.g[0], p.g[1]]);
    }
    run.csv(".csv", &out)?;
    let asym = profile_asymptotics(a.c, a.s_max, a.step)?;
    run.json(
        ".asymptotics.json",
        &json!({
            "c": asym.c,
            "a_plus": asym.a_plus,
            "a_minus": asym.a_minus,
            "b_plus": asym.b_plus.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "angle_law_a_plus_1": (-PI * a.c * a.c / 2.0).exp(),
            "tangent_residual": asym.tangent_residual,
            "normal_residual": asym.normal_residual,
        }),
    )?;
    run.svg(&points)?;
    run.tolerance("step", a.step);
    run.tolerance("tangent_fit_residual", asym.tangent_residual);
    run.tolerance("normal_fit_residual", asym.normal_residual);
    Ok(())
}

/// Geometric output times in `(ε, T]`.
fn output_times(eps: f64, t_end: f64, count: usize) -> Vec<f64> {
    let lo = (10.0 * eps).min(0.5 * t_end).max(1e-3f64.min(0.5 * t_end));
    if count < 2 || !(lo > eps && lo < t_end) {
        return vec![t_end];
    }
    geometric_grid(lo, t_end, count)
}

fn nls_run(a: &NlsRun, run: &mut Run) -> Result<()> {
    let c = &a.corners;
    let alpha = build_alpha(c.n, c.nu, c.gamma, c.omega)?;
    let mut opts = RemainderOptions::new(a.eps, a.t_end, a.tol);
    opts.sample_times = output_times(a.eps, a.t_end, a.samples);
    let traj = integrate_remainder(&alpha, &opts)?;
    let mut out = table(&[("t", ColumnKind::Real), ("k", ColumnKind::Integer), ("R", ColumnKind::Complex)])?;
    let r = traj.k_max as i64;
    for (t, values) in traj.times.iter().zip(&traj.values) {
        for (i, v) in values.iter().enumerate() {
            out.push_row(vec![(*t).into(), (i as i64 - r).into(), (*v).into()])?;
        }
    }
    run.csv(".csv", &out)?;
    run.json(
        ".diagnostics.json",
        &json!({
            "k_max": traj.k_max,
            "initial_mass": traj.initial_mass,
            "max_relative_mass_drift": traj.max_relative_mass_drift,
            "sup_weighted_l1": traj.sup_weighted_l1,
            "sup_scaled_derivative_l1": traj.sup_scaled_derivative_l1,
            "sup_weighted_l11": traj.sup_weighted_l11,
            "stats": traj.stats,
        }),
    )?;
    run.tolerance("integrator_tol", a.tol);
    run.tolerance("max_relative_mass_drift", traj.max_relative_mass_drift);
    Ok(())
}

fn nls_decay(a: &NlsDecay, run: &mut Run) -> Result<()> {
    let config = DecayConfig {
        nu: a.nu,
        gamma_turn: a.gamma,
        torsion: a.omega,
        gamma: a.weight,
        q: a.q,
        eps: a.eps,
        t_end: a.t_end,
        tol: a.tol,
        range_factor: 1,
    };
    let decay = decay_study(&a.n_list, &config)?;
    let mut out = table(&[
        ("n", ColumnKind::Integer),
        ("weighted_l1", ColumnKind::Real),
        ("scaled_derivative_l1", ColumnKind::Real),
        ("weighted_l11", ColumnKind::Real),
        ("mass_drift", ColumnKind::Real),
    ])?;
    for r in &decay.rows {
        out.push_row(vec![
            r.n.into(),
            r.weighted_l1.into(),
            r.scaled_derivative_l1.into(),
            r.weighted_l11.into(),
            r.mass_drift.into(),
        ])?;
    }
    run.csv(".csv", &out)?;
    run.json(".fit.json", &json!({ "fitted": decay.fitted, "predicted": decay.predicted }))?;
    let drift = decay.rows.iter().map(|r| r.mass_drift).fold(0.0, f64::max);
    run.tolerance("integrator_tol", a.tol);
    run.tolerance("max_relative_mass_drift", drift);
    Ok(())
}

fn frame_trajectory(a: &FrameTrajectory, run: &mut Run) -> Result<()> {
    let c = &a.corners;
    let mut opts = FrameOptions::new(a.eps, a.t_end, a.tol);
    opts.sample_times = output_times(a.eps, a.t_end, a.samples);
    let report = frame_limit_error(c.n, c.nu, c.gamma, c.omega, &opts)?;
    let nf = c.n as f64;
    let mut traj = table(&[("t", ColumnKind::Real), ("chi_1", ColumnKind::Real), ("chi_2", ColumnKind::Real), ("chi_3", ColumnKind::Real)])?;
    let mut contrib = table(&[
        ("t", ColumnKind::Real),
        ("scaled_1", ColumnKind::Real),
        ("scaled_2", ColumnKind::Real),
        ("scaled_3", ColumnKind::Real),
        ("target_1", ColumnKind::Real),
        ("target_2", ColumnKind::Real),
        ("target_3", ColumnKind::Real),
        ("distance", ColumnKind::Real),
    ])?;
    let mut points = Vec::new();
    for s in &report.samples {
        traj.push_row(vec![s.t.into(), (s.scaled[0] / nf).into(), (s.scaled[1] / nf).into(), (s.scaled[2] / nf).into()])?;
        let d = (0..3).map(|k| (s.scaled[k] - s.target[k]).powi(2)).sum::<f64>().sqrt();
        let mut row: Vec<Cell> = vec![s.t.into()];
        row.extend(s.scaled.iter().chain(&s.target).map(|&x| Cell::from(x)));
        row.push(d.into());
        contrib.push_row(row)?;
        points.push([s.scaled[1], s.scaled[2]]);
    }
    run.csv(".csv", &traj)?;
    run.csv(".error.csv", &contrib)?;
    run.json(
        ".json",
        &json!({
            "n": report.n,
            "error": report.error,
            "error_unrotated_target": report.error_literal,
            "modulated_integral": report.modulated_integral,
            "orthonormality_drift": report.orthonormality_drift,
            "stats": report.stats,
        }),
    )?;
    run.svg(&points)?;
    run.tolerance("integrator_tol", a.tol);
    run.tolerance("orthonormality_drift", report.orthonormality_drift);
    Ok(())
}

fn bf_simulate(a: &BfSimulate, run: &mut Run) -> Result<()> {
    let c = &a.corners;
    let alpha = build_alpha(c.n, c.nu, c.gamma, c.omega)?;
    let params = *alpha.params().expect("built data carry parameters");
    let spec = PolygonalLineSpec::from_params(&params, None);
    let grid = GridSpec {
        cells_per_edge: a.grid.cells,
        half_length_edges: spec.radius() as usize + a.grid.margin,
    };
    let line = mollify(&build_polygonal_line(&spec, &grid)?, a.grid.w)?;
    let mut opts = MapOptions::to_time(line.h, a.grid.t_end);
    opts.output_every = (opts.steps / a.dumps.max(1)).max(1);
    let result = run_schrodinger_map(&line, &opts)?;
    for (i, curve) in result.snapshots.iter().enumerate() {
        let mut out = table(&[
            ("x", ColumnKind::Real),
            ("chi_1", ColumnKind::Real),
            ("chi_2", ColumnKind::Real),
            ("chi_3", ColumnKind::Real),
        ])?;
        for (k, p) in curve.chi.iter().enumerate() {
            out.push_row(vec![curve.x(k).into(), p[0].into(), p[1].into(), p[2].into()])?;
        }
        run.csv(&format!(".curve_{i:04}.csv"), &out)?;
    }
    let mut corner = table(&[
        ("t", ColumnKind::Real),
        ("chi_1", ColumnKind::Real),
        ("chi_2", ColumnKind::Real),
        ("chi_3", ColumnKind::Real),
    ])?;
    for (t, p) in result.times.iter().zip(&result.corner) {
        corner.push_row(vec![(*t).into(), p[0].into(), p[1].into(), p[2].into()])?;
    }
    run.csv(".corner.csv", &corner)?;
    let times: Vec<f64> = result.snapshots.iter().map(|s| s.t).collect();
    run.json(
        ".config.json",
        &json!({
            "spec": spec,
            "grid": grid,
            "mollify_cells": a.grid.w,
            "map": opts,
            "snapshot_times": times,
        }),
    )?;
    let last = result.snapshots.last().expect("runs keep the final curve");
    run.svg(&last.chi.iter().map(|p| [p[0], p[1]]).collect::<Vec<_>>())?;
    run.tolerance("dt", opts.dt);
    run.tolerance("max_norm_drift", result.max_norm_drift);
    run.tolerance("far_field_change", result.far_field_change);
    Ok(())
}

fn bf_compare(a: &BfCompare, run: &mut Run) -> Result<()> {
    let c = &a.corners;
    let radius = riemannlab_core::theta_sums::support_radius(c.n, c.nu);
    let mut opts = CompareOptions::new(a.grid.cells, radius);
    opts.grid.half_length_edges = radius as usize + a.grid.margin;
    opts.mollify_cells = a.grid.w;
    let grid = geometric_grid(a.t_min, a.grid.t_end, a.samples.max(2));
    let report = compare_with_frame(c.n, c.nu, c.gamma, c.omega, None, &grid, &opts)?;
    let mut out = table(&[
        ("t", ColumnKind::Real),
        ("pde_1", ColumnKind::Real),
        ("pde_2", ColumnKind::Real),
        ("pde_3", ColumnKind::Real),
        ("frame_1", ColumnKind::Real),
        ("frame_2", ColumnKind::Real),
        ("frame_3", ColumnKind::Real),
    ])?;
    for ((t, p), f) in report.times.iter().zip(&report.pde).zip(&report.frame) {
        let mut row: Vec<Cell> = vec![(*t).into()];
        row.extend(p.iter().chain(f).map(|&x| Cell::from(x)));
        out.push_row(row)?;
    }
    run.csv(".csv", &out)?;
    run.json(
        ".json",
        &json!({
            "max_distance": report.max_distance,
            "diameter": report.diameter,
            "normalized": report.normalized,
        }),
    )?;
    run.tolerance("frame_integrator_tol", opts.frame.tol);
    run.tolerance("normalized_distance", report.normalized);
    Ok(())
}

fn mf_structure(a: &MfStructure, run: &mut Run) -> Result<()> {
    let params = ThetaFamilyParams::new(a.n, a.m)?;
    let fits = eta_fits(&a.p_list, &a.n_list, params)?;
    let mut out = table(&[
        ("N", ColumnKind::Integer),
        ("p", ColumnKind::Real),
        ("I", ColumnKind::Real),
        ("slope", ColumnKind::Real),
        ("predicted_slope", ColumnKind::Real),
    ])?;
    for f in &fits {
        for (n, v) in f.n_list.iter().zip(&f.values) {
            out.push_row(vec![(*n).into(), f.p.into(), (*v).into(), f.fitted_slope.into(), f.predicted_slope.into()])?;
        }
    }
    run.csv(".csv", &out)?;
    run.tolerance("riemann_sum_step", "1/(256 N^2)");
    Ok(())
}

fn mf_spectrum(a: &MfSpectrum, run: &mut Run) -> Result<()> {
    if a.steps == 0 || !(a.beta_min <= a.beta_max) {
        return Err(riemannlab_core::Error::InvalidArgument {
            name: "beta-min",
            reason: "need beta-min ≤ beta-max and steps ≥ 1".into(),
        });
    }
    let betas: Vec<f64> = (0..=a.steps)
        .map(|k| a.beta_min + (a.beta_max - a.beta_min) * k as f64 / a.steps as f64)
        .collect();
    let result = spectrum(analytic_eta, &betas);
    let mut out = table(&[("beta", ColumnKind::Real), ("d", ColumnKind::Real)])?;
    for (b, d) in result.beta.iter().zip(&result.d) {
        out.push_row(vec![(*b).into(), (*d).into()])?;
    }
    run.csv(".csv", &out)?;
    run.svg(&result.beta.iter().zip(&result.d).map(|(b, d)| [*b, *d]).collect::<Vec<_>>())?;
    run.tolerance("p_grid", "k/100, k = 1..4000");
    Ok(())
}
