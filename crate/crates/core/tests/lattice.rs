use std::f64::consts::PI;

use latrem_core::geometry::{ConvexBody, Rotation};
use latrem_core::harness::haar_rotation;
use latrem_core::lattice::*;

#[test]
fn small_counts() {
    let b = ConvexBody::ball(2);
    let id = Rotation::identity(2);
    assert_eq!(count_points(&b, &id, 0.5).unwrap(), 1);
    assert_eq!(count_points(&b, &id, 10.0).unwrap(), 317);
    let b3 = ConvexBody::ball(3);
    let mut brute = 0;
    for x in -2i64..=2 {
        for y in -2i64..=2 {
            for z in -2i64..=2 {
                if x * x + y * y + z * z <= 4 {
                    brute += 1;
                }
            }
        }
    }
    assert_eq!(count_points(&b3, &Rotation::identity(3), 2.0).unwrap(), brute);
}

#[test]
fn remainder_examples() {
    let b = ConvexBody::ball(2);
    let r = remainder(&b, &Rotation::identity(2), 10.0).unwrap();
    assert!((r.remainder - (317.0 - 100.0 * PI)).abs() < 1e-9);
    for body in [ConvexBody::supersphere(3, 4).unwrap(), ConvexBody::ellipsoid(&[0.5, 2.0]).unwrap()] {
        let rot = Rotation::identity(body.dim());
        let r = remainder(&body, &rot, 0.0).unwrap();
        assert_eq!(r.count, 1);
        assert_eq!(r.remainder, 1.0);
    }
    let base = remainder(&b, &Rotation::identity(2), 23.7).unwrap().remainder;
    for s in 0..10 {
        assert_eq!(remainder(&b, &haar_rotation(s, 2).unwrap(), 23.7).unwrap().remainder, base);
    }
}

#[test]
fn volumes() {
    assert!((volume(&ConvexBody::ball(2)).unwrap().value - PI).abs() < 1e-12);
    assert!((volume(&ConvexBody::supersphere(2, 2).unwrap()).unwrap().value - PI).abs() < 1e-12);
    let s4 = ConvexBody::supersphere(2, 4).unwrap();
    let exact = volume(&s4).unwrap().value;
    let mc = volume_monte_carlo(&s4, 10_000_000, 42);
    assert!((mc.value - exact).abs() <= 3.0 * mc.error_bound, "{} vs {exact} ± {}", mc.value, mc.error_bound);
}

#[test]
fn monotone_in_t() {
    let b = ConvexBody::supersphere(2, 6).unwrap();
    let th = haar_rotation(8, 2).unwrap();
    let mut prev = 0;
    for k in 0..200 {
        let c = count_points(&b, &th, 0.37 * k as f64).unwrap();
        assert!(c >= prev);
        prev = c;
    }
}

#[test]
fn inclusion_in_circumscribed_ball() {
    let b = ConvexBody::ellipsoid(&[1.3, 0.7, 0.9]).unwrap();
    let th = haar_rotation(2, 3).unwrap();
    let outer = ConvexBody::ball(3);
    for t in [3.0, 7.5, 12.25] {
        let c = count_points(&b, &th, t).unwrap();
        let cb = count_points(&outer, &Rotation::identity(3), t * b.circumradius()).unwrap();
        assert!(c <= cb);
    }
}

#[test]
fn sign_flip_symmetry() {
    // boundary points at integer t are resolved exactly for superspheres
    let b = ConvexBody::supersphere(2, 4).unwrap();
    let id = Rotation::identity(2);
    let c = count_points(&b, &id, 2.0).unwrap();
    let mut brute = 0;
    for x in -2i64..=2 {
        for y in -2i64..=2 {
            if x.pow(4) + y.pow(4) <= 16 {
                brute += 1;
            }
        }
    }
    assert_eq!(c, brute);
    assert_eq!(brute % 4, 1);
}
