use latrem_core::exponents::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn printed_planar_constants() {
    assert_eq!(zeta(2).unwrap(), q(1, 2859));
    assert_eq!(schedules(2, Omega::Infinity).unwrap().alpha, q(318, 953));
    assert_eq!(sigma(2, Omega::Finite(3)).unwrap(), q(616, 963483));
    assert_eq!(schedules(2, Omega::Finite(4)).unwrap().beta, q(1, 982));
}

#[test]
fn zeta_branches() {
    assert_eq!(zeta(3).unwrap(), q(3, 11794));
    // d >= 5: (d-3)(d-1)d / (2d^6+49d^5+123d^4-9d^3-167d^2-52d+30)
    let d: i64 = 5;
    let den = 2 * d.pow(6) + 49 * d.pow(5) + 123 * d.pow(4) - 9 * d.pow(3) - 167 * d * d - 52 * d + 30;
    assert_eq!(zeta(5).unwrap(), q((d - 3) * (d - 1) * d, den));
    for d in 2..=20u32 {
        let z = zeta(d).unwrap();
        assert!(z > BigRational::zero());
        assert!(z < q(2, d as i64 + 1));
        assert!(theorem_exponent(d, Omega::Infinity).unwrap() < hlawka_exponent(d));
    }
    assert!(zeta(1).is_err());
}

#[test]
fn table_invariants() {
    for d in 2..=10u32 {
        let omegas = (3..=20).map(Omega::Finite).chain([Omega::Infinity]);
        for omega in omegas {
            let t = ExponentTable::new(d, omega).unwrap();
            match omega {
                Omega::Finite(_) => assert!(t.sigma_d_omega > BigRational::zero(), "d={d} {omega}"),
                Omega::Infinity => assert!(t.sigma_d_omega.is_zero()),
            }
            assert!(t.beta_d_omega > BigRational::zero(), "d={d} {omega}");
            assert!(t.beta_d_omega < t.alpha_d_omega, "d={d} {omega}");
            assert!(t.alpha_d_omega < BigRational::one());
            for (name, v) in t.rows().unwrap() {
                let f = to_f64(&v);
                assert!(f.is_finite(), "{name}");
            }
        }
    }
}

#[test]
fn sigma_large_omega_limit() {
    let w = 1_000_000i64;
    let s = sigma(2, Omega::Finite(w as u32)).unwrap() * BigRational::from_integer(BigInt::from(w));
    let lim = q(616, 953 * 953);
    let rel = to_f64(&((s - &lim) / &lim)).abs();
    assert!(rel < 1e-5, "{rel}");
}

#[test]
fn alpha_converges_monotonically() {
    for d in [2u32, 3, 4, 5, 7] {
        let lim = schedules(d, Omega::Infinity).unwrap().alpha;
        let mut prev: Option<BigRational> = None;
        for w in [3u32, 5, 10, 30, 100, 1000, 10000] {
            let a = schedules(d, Omega::Finite(w)).unwrap().alpha;
            let gap = (&a - &lim).abs();
            if let Some(p) = prev {
                assert!(gap <= p, "d={d} w={w}");
            }
            prev = Some(gap);
        }
        assert!(to_f64(prev.as_ref().unwrap()) < 1e-3);
    }
}

#[test]
fn randol_values() {
    assert_eq!(randol_exponent(2, 8).unwrap(), q(7, 8));
    assert_eq!(randol_exponent(3, 4).unwrap(), q(3, 2));
    for d in 2..=10u32 {
        let dd = d as i64;
        assert_eq!(randol_exponent(d, d + 1).unwrap(), q(dd * dd - dd, dd + 1));
    }
}

#[test]
fn floats_agree_with_rationals() {
    let t = ExponentTable::new(4, Omega::Finite(6)).unwrap();
    for (_, v) in t.rows().unwrap() {
        let s = rational_string(&v);
        let (n, d) = s.split_once('/').unwrap_or((&s, "1"));
        let f = n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap();
        assert!((f - to_f64(&v)).abs() <= 1e-12 * f.abs().max(1.0));
    }
}

#[test]
fn omega_parsing() {
    assert_eq!("inf".parse::<Omega>().unwrap(), Omega::Infinity);
    assert_eq!("8".parse::<Omega>().unwrap(), Omega::Finite(8));
    assert!("x".parse::<Omega>().is_err());
    assert!(sigma(3, Omega::Finite(2)).is_err());
}
