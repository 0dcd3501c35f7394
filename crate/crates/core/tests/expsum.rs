use std::f64::consts::PI;
use std::sync::Arc;

use latrem_core::exponents::to_f64;
use latrem_core::expsum::*;
use num_complex::Complex64;

fn quad_1d(t: f64, m: f64) -> ExpSumInstance {
    ExpSumInstance {
        t,
        m_star: m,
        g: Arc::new(Bump { center: vec![0.1], radius: 0.7, height: 1.0 }),
        f: Arc::new(Quadratic { a: vec![1.4], b: vec![0.3], c: 0.05 }),
        k: 0.9,
        q: 1,
        omega_radius: 1.0,
    }
}

#[test]
fn one_dimensional_quadratic_against_brute_force() {
    let inst = quad_1d(37.0, 50.0);
    let s = eval_sum(&inst).unwrap();
    let mut want = Complex64::new(0.0, 0.0);
    for m in -100i64..=100 {
        let y = [m as f64 / 50.0];
        let g = inst.g.value(&y);
        if g != 0.0 {
            want += g * Complex64::from_polar(1.0, 2.0 * PI * 37.0 * inst.f.value(&y));
        }
    }
    assert!((s - want).norm() < 1e-10 * want.norm().max(1.0), "{s} vs {want}");
}

#[test]
fn flat_phase_is_a_positive_amplitude_sum() {
    let mut inst = ExpSumInstance::supersphere_support(3, 4, 2, 1.0, 9.0, 0.9).unwrap();
    inst.f = Arc::new(Quadratic { a: vec![0.0; 9], b: vec![0.0; 3], c: 0.0 });
    let s = eval_sum(&inst).unwrap();
    assert!(s.re > 0.0 && s.im == 0.0);
}

#[test]
fn weyl_with_unit_shift_is_cauchy_schwarz() {
    let vals: Vec<Complex64> = (0..60).map(|k| Complex64::from_polar(1.0 + (k % 7) as f64, 0.37 * (k * k) as f64)).collect();
    let seq = LatticeSeq::new(vec![-3, 2], vec![10, 6], vals.clone()).unwrap();
    for (r, n_r) in [([1i64, 0], 10usize), ([0, -1], 6)] {
        let w = weyl_step(&seq, 1, &r).unwrap();
        let energy: f64 = vals.iter().map(|z| z.norm_sqr()).sum();
        assert!((w.rhs - w.n_perp as f64 * (n_r as f64 + 1.0) * energy).abs() < 1e-9 * w.rhs);
        assert!(w.holds);
    }
    assert!(weyl_step(&seq, 11, &[1, 0]).is_err());
    assert!(weyl_step(&seq, 2, &[1, 1]).is_err());
}

#[test]
fn zero_amplitude_gives_zero() {
    let mut inst = quad_1d(20.0, 30.0);
    inst.g = Arc::new(Bump { center: vec![0.1], radius: 0.7, height: 0.0 });
    assert_eq!(eval_sum(&inst).unwrap(), Complex64::new(0.0, 0.0));
    let b = b_process(&inst, &BOptions::default()).unwrap();
    assert_eq!(b.transformed, Complex64::new(0.0, 0.0));
}

#[test]
fn exponent_sanity_and_monotonicity() {
    for d in 3..=7u32 {
        for q in 1..=3u32 {
            let e = proposition_exponents(d, q).unwrap();
            assert!(exponents_are_finite(&e));
            assert!(window_matches_restriction(d, q).unwrap(), "d={d} q={q}");
            assert!(to_f64(&e.outer) > 0.0 && to_f64(&e.m_exponent) > 0.0);
        }
    }
    let e = proposition_exponents(5, 1).unwrap();
    assert_eq!(e.outer.to_string(), "5/14");
    let base = ExpSumInstance::supersphere_support(3, 4, 2, 5000.0, 12.0, 0.99).unwrap();
    let b0 = proposition_bound(&base).unwrap().0;
    let mut more_t = base.clone();
    more_t.t *= 2.0;
    let mut more_m = base.clone();
    more_m.m_star *= 1.5;
    more_m.t *= 1.5f64.powi(3);
    assert!(proposition_bound(&more_t).unwrap().0 > b0);
    let b_m = proposition_report(&more_m).unwrap();
    assert!(b_m.holds && b_m.bound > b0);
    let mut small_t = base.clone();
    small_t.t = 1.0;
    assert!(proposition_bound(&small_t).is_err());
    assert!(!proposition_report(&small_t).unwrap().holds);
}

#[test]
fn calibrated_comparison_on_supersphere_family() {
    let (d, q, k) = (3usize, 2u32, 0.99f64);
    let e = proposition_exponents(d as u32, q).unwrap();
    let (rk, rm) = (to_f64(&e.restriction_k), to_f64(&e.restriction_m));
    let mut ratios = Vec::new();
    for m in [10.0f64, 14.0, 20.0, 28.0, 40.0] {
        for mult in [2.0, 8.0, 32.0] {
            let t = mult * k.powf(rk) * m.powf(rm);
            let inst = ExpSumInstance::supersphere_support(d, 4, q, t, m, k).unwrap();
            let (bound, rep) = proposition_bound(&inst).unwrap();
            assert!(rep.holds);
            let s = eval_sum(&inst).unwrap().norm();
            ratios.push((m, mult, s / bound));
        }
    }
    let c = ratios[0].2;
    for (m, mult, r) in &ratios {
        assert!(*r <= c * (1.0 + 1e-9), "M={m} mult={mult}: {r} exceeds {c}");
    }
}

#[test]
fn process_on_small_supersphere_instance() {
    let inst = ExpSumInstance::supersphere_support(3, 4, 1, 300.0, 8.0, 0.9).unwrap();
    let trace = run_process(&inst, 3, &BOptions::default()).unwrap();
    assert_eq!(trace.d, 3);
    assert!(!trace.a_stages.is_empty());
    for s in &trace.a_stages {
        assert!(s.step.holds);
        assert!((s.differenced_sum - s.correlation).norm() <= 1e-9 * (1.0 + s.correlation.norm()));
    }
    assert!((trace.direct - eval_sum(&inst).unwrap()).norm() < 1e-9 * trace.direct.norm().max(1.0));
    assert!(trace.b_stage.is_some() || trace.b_error.is_some());
    assert!(trace.proposition.is_some());
}
