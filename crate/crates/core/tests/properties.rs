//! Property tests of the invariants each module maintains.

use std::f64::consts::PI;

use proptest::prelude::*;
use riemannlab_core::bf_simulator::{build_polygonal_line, mollify, GridSpec};
use riemannlab_core::io::{read_csv, write_csv, Cell, ColumnKind, Table};
use riemannlab_core::multifractal::{analytic_eta, continued_fraction, cutoff_mass, frisch_parisi, smoothed_sum};
use riemannlab_core::nls_remainder::{nonresonant_force, ForceEvaluator};
use riemannlab_core::theta_sums::{
    corner_integral_limit, duistermaat_phi, gauss_sum, gcd, helix_integral, riemann_r,
};
use riemannlab_core::{Complex64, PolygonalLineSpec, RationalTorsion};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn riemann_tail_bound_covers_doubling(t in -20.0..20.0f64, n in 10u64..3000) {
        let a = riemann_r(t, n).unwrap();
        let b = riemann_r(t, 2 * n).unwrap();
        prop_assert!((a.value - b.value).norm() <= a.tail_bound);
    }

    #[test]
    fn duistermaat_real_part_is_the_sine_series(t in -20.0..20.0f64, n in 1u64..2000) {
        let phi = duistermaat_phi(t, n).unwrap().value;
        let sines: f64 = (1..=n).rev().map(|j| {
            let j2 = (j * j) as f64;
            (t * j2).sin() / j2
        }).sum();
        prop_assert!((phi.re - sines).abs() < 1e-12);
    }

    #[test]
    fn riemann_is_periodic_up_to_its_linear_term(t in -5.0..5.0f64, n in 1u64..2000) {
        let a = riemann_r(t, n).unwrap().value;
        let b = riemann_r(t + 2.0 * PI, n).unwrap().value;
        prop_assert!((b - a - Complex64::new(2.0 * PI, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn gauss_sum_modulus_for_odd_denominators(q in (1u64..100).prop_map(|k| 2 * k + 1), p in -500i64..500, m in 1u64..20, n in 0u64..20) {
        prop_assume!(gcd(p.unsigned_abs(), q) == 1 && gcd(m, q) == 1);
        let tau = gauss_sum(p, q, m, n).unwrap();
        prop_assert!((tau.norm() - (q as f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn convergents_satisfy_the_approximation_bound(x in 0.01..0.99f64) {
        let cf = continued_fraction(x, 8).unwrap();
        for k in 0..cf.convergents.len().saturating_sub(1) {
            let (p, q) = cf.convergents[k];
            let q_next = cf.convergents[k + 1].1 as f64;
            let gap = (x - p as f64 / q as f64).abs();
            prop_assert!(gap <= 1.0 / (q as f64 * q_next) * (1.0 + 1e-9) + 1e-15);
        }
    }

    #[test]
    fn smoothed_sum_obeys_triangle_inequality(n in 2u64..200, t in -1.0..1.0f64, x in -1.0..1.0f64) {
        prop_assert!(smoothed_sum(n, t, x).unwrap().norm() <= cutoff_mass(n) * (1.0 + 1e-12));
    }

    #[test]
    fn frisch_parisi_line_on_the_plateau(k in 0u32..=250) {
        let beta = 0.5 + 0.001 * k as f64;
        prop_assert!((frisch_parisi(analytic_eta, beta) - (4.0 * beta - 2.0)).abs() < 1e-6);
    }

    #[test]
    fn fast_force_matches_double_loop(
        z in prop::collection::vec(complex(), 1..=9),
        a_seed in prop::collection::vec(0.0..1.0f64, 9),
        t in 1e-3..1.0f64,
    ) {
        let len = if z.len() % 2 == 0 { z.len() - 1 } else { z.len() };
        let z = &z[..len];
        let a = &a_seed[..len];
        let mut eval = ForceEvaluator::new(a);
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        eval.evaluate(t, z, &mut out);
        let r = (len as i64 - 1) / 2;
        for (i, fast) in out.iter().enumerate() {
            let slow = nonresonant_force(i as i64 - r, t, z, a);
            prop_assert!((fast - slow).norm() <= 1e-11 * (1.0 + slow.norm()));
        }
    }

    #[test]
    fn torsion_text_round_trips(a in 0u64..50, b in 1u64..50) {
        prop_assume!(gcd(a, b) == 1);
        let t = RationalTorsion::new(a, b).unwrap();
        let back: RationalTorsion = t.to_string().parse().unwrap();
        prop_assert_eq!(t, back);
        prop_assert!((t.omega0() - a as f64 * PI / b as f64).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn csv_round_trip_is_bit_exact(rows in prop::collection::vec((any::<f64>(), any::<f64>(), any::<i64>()), 0..20)) {
        let dir = std::env::temp_dir().join(format!("riemannlab-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let columns = [("x", ColumnKind::Real), ("z", ColumnKind::Complex), ("k", ColumnKind::Integer)];
        let mut table = Table::new(&columns).unwrap();
        for &(x, y, k) in &rows {
            table.push_row(vec![Cell::Real(x), Cell::Complex(Complex64::new(y, x)), Cell::Integer(k)]).unwrap();
        }
        let path = dir.join(format!("rows-{}.csv", rows.len()));
        write_csv(&table, &path).unwrap();
        let back = read_csv(&path, &columns).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        let same = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        for (r, &(x, y, k)) in back.rows().iter().zip(&rows) {
            match (&r[0], &r[1], &r[2]) {
                (Cell::Real(a), Cell::Complex(z), Cell::Integer(j)) => {
                    prop_assert!(same(*a, x) && same(z.re, y) && same(z.im, x));
                    prop_assert_eq!(*j, k);
                }
                other => prop_assert!(false, "unexpected cells {:?}", other),
            }
        }
    }

    #[test]
    fn zero_twist_helix_matches_the_planar_limit(t in 0.01..0.3f64) {
        let h = helix_integral(t, RationalTorsion::zero(), 100_000).unwrap();
        let l = corner_integral_limit(t, 100_000).unwrap();
        prop_assert!((h.value - l.value).norm() <= h.tail_bound + l.tail_bound);
    }

    #[test]
    fn mollified_line_keeps_unit_tangents_and_far_field(n in 2u64..6, theta in 0.5..3.0f64, a in 0u64..4, w in 2usize..8) {
        let torsion = RationalTorsion::new(a, 4).unwrap_or(RationalTorsion::zero());
        let spec = PolygonalLineSpec { n, nu: 1.0, theta, torsion, mu: None };
        let grid = GridSpec { cells_per_edge: 16, half_length_edges: n as usize + 3 };
        let line = build_polygonal_line(&spec, &grid).unwrap();
        let smooth = mollify(&line, w).unwrap();
        prop_assert!(smooth.norm_defect() < 1e-12);
        let last = line.len() - 1;
        prop_assert_eq!(smooth.tangent[0], line.tangent[0]);
        prop_assert_eq!(smooth.tangent[last], line.tangent[last]);
    }
}
