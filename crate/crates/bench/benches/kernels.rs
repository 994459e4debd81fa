//! Throughput of the hot kernels: truncated sums, the remainder force, the
//! structure-function transform, and one Schrödinger-map run.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use riemannlab_core::bf_simulator::{build_polygonal_line, mollify, run_schrodinger_map, GridSpec, MapOptions};
use riemannlab_core::multifractal::structure_functions;
use riemannlab_core::nls_remainder::{build_alpha, ForceEvaluator};
use riemannlab_core::theta_sums::{riemann_nm, riemann_r};
use riemannlab_core::{Complex64, PolygonalLineSpec, RationalTorsion, ThetaFamilyParams};

fn truncated_sums(c: &mut Criterion) {
    let mut group = c.benchmark_group("truncated_sums");
    for n_terms in [10_000u64, 100_000] {
        group.bench_with_input(BenchmarkId::new("riemann_r", n_terms), &n_terms, |b, &n| {
            b.iter(|| riemann_r(black_box(1.234), n).unwrap())
        });
        let params = ThetaFamilyParams::new(1, 3).unwrap();
        group.bench_with_input(BenchmarkId::new("riemann_nm", n_terms), &n_terms, |b, &n| {
            b.iter(|| riemann_nm(black_box(0.3127), params, n).unwrap())
        });
    }
    group.finish();
}

fn remainder_force(c: &mut Criterion) {
    let mut group = c.benchmark_group("remainder_force");
    for n in [16u64, 64, 256] {
        let alpha = build_alpha(n, 1.0, 1.0, RationalTorsion::zero()).unwrap();
        let alpha_sq: Vec<f64> = alpha.values().iter().map(|a| a.norm_sqr()).collect();
        let z: Vec<Complex64> = alpha.values().to_vec();
        let mut eval = ForceEvaluator::new(&alpha_sq);
        let mut out = vec![Complex64::new(0.0, 0.0); z.len()];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| eval.evaluate(black_box(0.0173), &z, &mut out))
        });
    }
    group.finish();
}

fn structure_transform(c: &mut Criterion) {
    let mut group = c.benchmark_group("structure_functions");
    group.sample_size(10);
    let params = ThetaFamilyParams::new(0, 1).unwrap();
    for n in [16u64, 32] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| structure_functions(n, &[2.0, 4.0, 6.0], params).unwrap())
        });
    }
    group.finish();
}

fn schrodinger_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("schrodinger_map");
    group.sample_size(10);
    let alpha = build_alpha(4, 1.0, 1.0, RationalTorsion::zero()).unwrap();
    let spec = PolygonalLineSpec::from_params(alpha.params().unwrap(), None);
    let grid = GridSpec {
        cells_per_edge: 16,
        half_length_edges: 8,
    };
    let line = mollify(&build_polygonal_line(&spec, &grid).unwrap(), 4).unwrap();
    let opts = MapOptions::to_time(line.h, 0.002);
    group.bench_function("n4_h16_t0.002", |b| b.iter(|| run_schrodinger_map(black_box(&line), &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, truncated_sums, remainder_force, structure_transform, schrodinger_map);
criterion_main!(benches);
