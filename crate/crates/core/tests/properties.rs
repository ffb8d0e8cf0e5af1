//! Cross-module invariants on randomly drawn inputs.

use proptest::prelude::*;
use surface_flows::exact::ExactScalar;
use surface_flows::iet::{Iet, Interval};
use surface_flows::induction::{induce, tcut_partition, towers};
use surface_flows::orbit::iterate;
use surface_flows::roof::{birkhoff_sum, RoofFunction, TermKind};
use surface_flows::weakmix::{weyl_diagnostic, DiagnosticConfig};

fn q(n: i64, d: i64) -> ExactScalar {
    ExactScalar::from_ratio(n, d)
}

/// Rotation by `(a + b√5)/c`, reduced into `(0, 1)`.
fn quadratic_rotation(a: i64, b: i64, c: i64) -> Option<Iet> {
    let beta = &q(a, c) + &ExactScalar::from_parts(0, 1, b, c, 5);
    let f = beta.to_f64().floor() as i64;
    let beta = &beta - &ExactScalar::from_int(f);
    Iet::rotation(&beta).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn birkhoff_cocycle(p in 1i64..1000, m in 1usize..400, n in 1usize..400, cl in 0.5f64..3.0, cr in 0.5f64..3.0) {
        let g = Iet::golden_rotation();
        let f = RoofFunction::kochergin(&g, TermKind::Log, cl, cr, 10.0).unwrap();
        let x = q(p, 1009);
        let whole = birkhoff_sum(&g, &f, &x, m + n, 2).unwrap();
        let head = birkhoff_sum(&g, &f, &x, m, 2).unwrap();
        let tail = birkhoff_sum(&g, &f, &iterate(&g, &x, m), n, 2).unwrap();
        for k in 0..3 {
            let sum = head[k] + tail[k];
            prop_assert!((whole[k] - sum).abs() <= 1e-11 * whole[k].abs().max(1.0), "order {}: {} vs {}", k, whole[k], sum);
        }
    }

    #[test]
    fn induced_rotation_is_three_interval_exchange(a in -20i64..20, b in 1i64..20, c in 2i64..30, r in 1i64..99) {
        let Some(t) = quadratic_rotation(a, b, c) else { return Ok(()) };
        let base = Interval::new(ExactScalar::zero(), q(r, 100)).unwrap();
        let ind = induce(&t, &base, 1_000_000).unwrap();
        prop_assert!(ind.cells.len() <= 3);
        prop_assert!(ind.rescaled(5).is_ok());
        // Kac: Σ return_time · length = 1 exactly
        let mut total = ExactScalar::zero();
        for cell in &ind.cells {
            total = &total + &(&ExactScalar::from_int(cell.return_time as i64) * &cell.interval.length());
        }
        prop_assert_eq!(total, ExactScalar::one());
    }

    #[test]
    fn towers_tile_the_circle(a in -20i64..20, b in 1i64..20, c in 2i64..30) {
        let Some(t) = quadratic_rotation(a, b, c) else { return Ok(()) };
        let p = tcut_partition(&t, &q(1, 4), 10_000, 1_000_000).unwrap();
        prop_assert!(p.all_certified());
        for cell in p.partition.cells() {
            let set = towers(&t, &cell, &t.discontinuities(), 1_000_000).unwrap();
            let mut area = ExactScalar::zero();
            for tw in &set.towers {
                prop_assert!(tw.disjoint_floors);
                area = &area + &(&ExactScalar::from_int(tw.height as i64) * &tw.width());
            }
            prop_assert_eq!(area, ExactScalar::one());
        }
    }

    #[test]
    fn weyl_statistic_in_unit_interval(s in -5.0f64..5.0, seed in 0u64..1000) {
        prop_assume!(s.abs() > 1e-3);
        let g = Iet::golden_rotation();
        let f = RoofFunction::canonical_log(&g).unwrap();
        let out = weyl_diagnostic(&g, &f, &DiagnosticConfig::new(s, 2000, 2, seed)).unwrap();
        for smp in &out {
            prop_assert_eq!(smp.values[0], (1, 1.0));
            for &(_, w) in &smp.values {
                prop_assert!((0.0..=1.0).contains(&w));
            }
        }
    }
}
