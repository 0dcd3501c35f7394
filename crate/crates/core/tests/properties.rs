use std::f64::consts::FRAC_PI_2;

use latrem_core::detlab::{coset_count, det_exact};
use latrem_core::exponents::{hlawka_exponent, sigma, theorem_exponent, to_f64, zeta, Omega};
use latrem_core::expsum::{weyl_step, LatticeSeq};
use latrem_core::geometry::{ConvexBody, Rotation};
use latrem_core::harness::{from_csv, haar_rotation, to_csv, ScanRow};
use latrem_core::lattice::{count_points, remainder};
use num_bigint::BigInt;
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weyl_inequality_always_holds(
        vals in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 12..=48),
        h in 1usize..=6,
        axis in 0usize..2,
    ) {
        let n0 = vals.len() / 4;
        let seq = LatticeSeq::new(vec![0, 0], vec![n0, 4], vals[..n0 * 4].iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
        let r = if axis == 0 { [1i64, 0] } else { [0, 1] };
        let w = weyl_step(&seq, h.min(seq.dims[axis]), &r).unwrap();
        prop_assert!(w.holds, "{} > {}", w.lhs, w.rhs);
    }

    #[test]
    fn count_respects_lattice_symmetry(phi in 0.0f64..6.28, t in 1.0f64..40.0, omega in prop::sample::select(vec![2u32, 4, 6])) {
        let b = ConvexBody::supersphere(2, omega).unwrap();
        let a = count_points(&b, &Rotation::from_angle(phi), t).unwrap();
        let c = count_points(&b, &Rotation::from_angle(phi + FRAC_PI_2), t).unwrap();
        prop_assert_eq!(a, c);
        prop_assert_eq!(a % 2, 1);
    }

    #[test]
    fn count_is_monotone(seed in 0u64..1000, t in 1.0f64..15.0, dt in 0.0f64..3.0) {
        let b = ConvexBody::ellipsoid(&[1.2, 0.7, 0.9]).unwrap();
        let th = haar_rotation(seed, 3).unwrap();
        prop_assert!(count_points(&b, &th, t).unwrap() <= count_points(&b, &th, t + dt).unwrap());
    }

    #[test]
    fn gauge_is_positively_homogeneous(x in prop::collection::vec(-5.0f64..5.0, 3), s in 0.01f64..50.0) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let b = ConvexBody::supersphere(3, 6).unwrap();
        let sx: Vec<f64> = x.iter().map(|v| v * s).collect();
        let (g, gs) = (b.gauge(&x), b.gauge(&sx));
        prop_assert!((gs - s * g).abs() <= 1e-12 * gs.max(1.0));
    }

    #[test]
    fn lattice_index_matches_determinant(a in -4i64..=4, b in -4i64..=4, c in -4i64..=4, d in -4i64..=4) {
        let v = vec![vec![a, b], vec![c, d]];
        let det = det_exact(&v);
        prop_assert_eq!(det.clone(), BigInt::from(a * d - b * c));
        if det != BigInt::from(0) {
            prop_assert_eq!(BigInt::from(coset_count(&v, 1000).unwrap()), BigInt::from((a * d - b * c).abs()));
        }
    }

    #[test]
    fn theorem_exponent_improves_on_hlawka(d in 3u32..=12, w in prop::sample::select(vec![4u32, 6, 8, 10, 20])) {
        let th = theorem_exponent(d, Omega::Finite(w)).unwrap();
        let gain = to_f64(&hlawka_exponent(d)) - to_f64(&th);
        prop_assert!(gain > 0.0);
        let want = to_f64(&zeta(d).unwrap()) + to_f64(&sigma(d, Omega::Finite(w)).unwrap());
        prop_assert!((gain - want).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip(seed in 0u64..500, ts in prop::collection::vec(1.0f64..60.0, 1..6)) {
        let b = ConvexBody::supersphere(3, 4).unwrap();
        let th = haar_rotation(seed, 3).unwrap();
        let rows: Vec<ScanRow> = ts
            .iter()
            .enumerate()
            .map(|(i, &t)| ScanRow { rotation: i % 2, sample: remainder(&b, &th, t).unwrap() })
            .collect();
        prop_assert_eq!(from_csv(&to_csv(&rows)).unwrap(), rows);
    }
}
