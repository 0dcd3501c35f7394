//! Closed-form exponents and schedules, evaluated exactly over `BigRational`.
//!
//! Dimension two uses its own planar constants; the polynomial branches
//! below apply to `3 <= d <= 4` and `d >= 5`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Finite-type order of a boundary, or the "no finite type" limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Omega {
    Finite(u32),
    Infinity,
}

impl fmt::Display for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Omega::Finite(w) => write!(f, "{w}"),
            Omega::Infinity => write!(f, "infinity"),
        }
    }
}

impl FromStr for Omega {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "oo" => Ok(Omega::Infinity),
            other => other
                .parse::<u32>()
                .map(Omega::Finite)
                .map_err(|_| Error::Parse(format!("bad omega '{s}'"))),
        }
    }
}

fn r(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn frac(n: i64, m: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(m))
}

/// Evaluate `sum c_k x^k` (coefficients from degree 0 upward).
fn poly(coeffs: &[i64], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + r(*c);
    }
    acc
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn check_d(d: u32) -> Result<()> {
    if d < 2 {
        return domain(format!("dimension must be >= 2, got {d}"));
    }
    Ok(())
}

fn check_omega(omega: Omega) -> Result<()> {
    match omega {
        Omega::Finite(w) if w < 3 => domain(format!("finite type must be >= 3, got {w}")),
        _ => Ok(()),
    }
}

// 6d^5+118d^4+109d^3-210d^2-119d+82
fn p34(d: &BigRational) -> BigRational {
    poly(&[82, -119, -210, 109, 118, 6], d)
}

// 2d^5+47d^4+76d^3-85d^2-82d+30
fn p5(d: &BigRational) -> BigRational {
    poly(&[30, -82, -85, 76, 47, 2], d)
}

/// The improvement over the Hlawka exponent for almost every rotation.
pub fn zeta(d: u32) -> Result<BigRational> {
    check_d(d)?;
    let x = r(d as i64);
    Ok(match d {
        2 => frac(1, 2859),
        3 | 4 => {
            let num = r(2) * (&x - r(2)) * (&x - r(1)) * &x;
            num / ((&x + r(1)) * p34(&x))
        }
        _ => {
            let num = (&x - r(3)) * (&x - r(1)) * &x;
            num / poly(&[30, -52, -167, -9, 123, 49, 2], &x)
        }
    })
}

/// The "square" polynomial, defined for `3 <= d <= 4`.
pub fn box_poly(d: u32, omega: u32) -> BigRational {
    let x = r(d as i64);
    let w = r(omega as i64);
    let w2 = &w - r(2);
    r(6) * &w2 * x.pow(5) + r(118) * &w2 * x.pow(4) + r(109) * &w2 * x.pow(3)
        - r(6) * (r(35) * &w - r(71)) * x.pow(2)
        + (r(246) - r(119) * &w) * &x
        + (r(82) * &w - r(156))
}

/// The "triangle" polynomial, defined for `d >= 5`.
pub fn triangle_poly(d: u32, omega: u32) -> BigRational {
    let x = r(d as i64);
    let w = r(omega as i64);
    let w2 = &w - r(2);
    r(2) * &w2 * x.pow(5) + r(47) * &w2 * x.pow(4) + r(76) * &w2 * x.pow(3)
        + (r(172) - r(85) * &w) * x.pow(2)
        + (r(166) - r(82) * &w) * &x
        + (r(30) * &w - r(56))
}

/// Extra gain for bodies of finite type `omega`. At `Infinity` this is the
/// limit value zero.
pub fn sigma(d: u32, omega: Omega) -> Result<BigRational> {
    check_d(d)?;
    check_omega(omega)?;
    let w = match omega {
        Omega::Infinity => return Ok(BigRational::zero()),
        Omega::Finite(w) => w,
    };
    let x = r(d as i64);
    Ok(match d {
        2 => frac(616, 953) / (r(953) * r(w as i64) - r(1848)),
        3 | 4 => {
            let num = r(4) * &x * poly(&[-172, 496, -193, -230, 100, 6], &x);
            num / (p34(&x) * box_poly(d, w))
        }
        _ => {
            let num = r(2) * &x * poly(&[-96, 377, -205, -105, 39, 2], &x);
            num / (p5(&x) * triangle_poly(d, w))
        }
    })
}

/// Mollifier and curvature-threshold exponents: `eps = 2^{-j alpha}`,
/// `delta = 2^{-j beta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedules {
    pub alpha: BigRational,
    pub beta: BigRational,
}

impl Schedules {
    pub fn alpha_f64(&self) -> f64 {
        to_f64(&self.alpha)
    }
    pub fn beta_f64(&self) -> f64 {
        to_f64(&self.beta)
    }
}

pub fn schedules(d: u32, omega: Omega) -> Result<Schedules> {
    check_d(d)?;
    check_omega(omega)?;
    let x = r(d as i64);
    let one = BigRational::one();
    let (alpha, beta) = match (d, omega) {
        (2, Omega::Infinity) => (frac(318, 953), frac(1, 953)),
        (2, Omega::Finite(w)) => {
            let den = r(953) * r(w as i64) - r(1848);
            (
                (r(318) * r(w as i64) - r(616)) / &den,
                r(w as i64 - 2) / den,
            )
        }
        (3 | 4, Omega::Infinity) => {
            let den = p34(&x);
            let num = poly(&[164, -406, -8, 224, 12], &x);
            let beta = r(2) * &x * (&x - r(1)) * (&x - r(2)) / &den;
            (&one - num / &den, beta)
        }
        (3 | 4, Omega::Finite(w)) => {
            let sq = box_poly(d, w);
            let w2 = r(w as i64 - 2);
            let wr = r(w as i64);
            let inner = r(6) * &w2 * x.pow(4) + r(112) * &w2 * x.pow(3)
                - r(4) * &w2 * x.pow(2)
                + (r(410) - r(203) * &wr) * &x
                + r(82) * &wr
                - r(156);
            let beta = r(2) * &w2 * &x * (&x - r(1)) * (&x - r(2)) / &sq;
            (&one - r(2) * inner / &sq, beta)
        }
        (_, Omega::Infinity) => {
            let den = p5(&x);
            let num = poly(&[60, -227, 61, 90, 4], &x);
            let beta = &x * (&x - r(1)) * (&x - r(3)) / &den;
            (&one - num / &den, beta)
        }
        (_, Omega::Finite(w)) => {
            let tr = triangle_poly(d, w);
            let w2 = r(w as i64 - 2);
            let wr = r(w as i64);
            let inner = r(4) * &w2 * x.pow(4) + r(90) * &w2 * x.pow(3) + r(61) * &w2 * x.pow(2)
                - (r(227) * &wr - r(456)) * &x
                + r(60) * &wr
                - r(112);
            let beta = &w2 * &x * (&x - r(1)) * (&x - r(3)) / &tr;
            (&one - inner / &tr, beta)
        }
    };
    Ok(Schedules { alpha, beta })
}

/// Exponent of the Randol bound for superspheres of type `omega`.
pub fn randol_exponent(d: u32, omega: u32) -> Result<BigRational> {
    check_d(d)?;
    if omega < 2 {
        return domain(format!("omega must be >= 2, got {omega}"));
    }
    if omega > d + 1 {
        Ok(r(d as i64 - 1) * (BigRational::one() - frac(1, omega as i64)))
    } else {
        Ok(hlawka_exponent(d))
    }
}

/// `d - 2 + 2/(d+1)`.
pub fn hlawka_exponent(d: u32) -> BigRational {
    r(d as i64 - 2) + frac(2, d as i64 + 1)
}

/// Exponent of the main theorem: Hlawka minus `zeta_d` minus `sigma(d, omega)`.
pub fn theorem_exponent(d: u32, omega: Omega) -> Result<BigRational> {
    Ok(hlawka_exponent(d) - zeta(d)? - sigma(d, omega)?)
}

/// Every exponent for one `(d, omega)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub d: u32,
    pub omega: Omega,
    pub zeta_d: BigRational,
    pub sigma_d_omega: BigRational,
    pub alpha_d_omega: BigRational,
    pub beta_d_omega: BigRational,
    /// Only present for `3 <= d <= 4` and finite omega.
    pub box_value: Option<BigRational>,
    /// Only present for `d >= 5` and finite omega.
    pub triangle_value: Option<BigRational>,
}

impl ExponentTable {
    pub fn new(d: u32, omega: Omega) -> Result<Self> {
        let s = schedules(d, omega)?;
        let (box_value, triangle_value) = match omega {
            Omega::Finite(w) if (3..=4).contains(&d) => (Some(box_poly(d, w)), None),
            Omega::Finite(w) if d >= 5 => (None, Some(triangle_poly(d, w))),
            _ => (None, None),
        };
        Ok(ExponentTable {
            d,
            omega,
            zeta_d: zeta(d)?,
            sigma_d_omega: sigma(d, omega)?,
            alpha_d_omega: s.alpha,
            beta_d_omega: s.beta,
            box_value,
            triangle_value,
        })
    }

    /// `(name, value)` rows, including the reference exponents.
    pub fn rows(&self) -> Result<Vec<(String, BigRational)>> {
        let mut out = vec![
            ("zeta_d".to_string(), self.zeta_d.clone()),
            ("sigma_d_omega".to_string(), self.sigma_d_omega.clone()),
            ("alpha_d_omega".to_string(), self.alpha_d_omega.clone()),
            ("beta_d_omega".to_string(), self.beta_d_omega.clone()),
        ];
        if let Some(b) = &self.box_value {
            out.push(("box".to_string(), b.clone()));
        }
        if let Some(t) = &self.triangle_value {
            out.push(("triangle".to_string(), t.clone()));
        }
        out.push(("trivial".to_string(), r(self.d as i64 - 1)));
        out.push(("hlawka".to_string(), hlawka_exponent(self.d)));
        out.push(("theorem".to_string(), theorem_exponent(self.d, self.omega)?));
        if let Omega::Finite(w) = self.omega {
            out.push(("randol".to_string(), randol_exponent(self.d, w)?));
        }
        Ok(out)
    }
}

/// Exact `a/b` string for a rational.
pub fn rational_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_constants() {
        assert_eq!(zeta(2).unwrap(), frac(1, 2859));
        assert_eq!(schedules(2, Omega::Infinity).unwrap().alpha, frac(318, 953));
        assert_eq!(schedules(2, Omega::Finite(4)).unwrap().beta, frac(1, 982));
        assert_eq!(sigma(2, Omega::Finite(3)).unwrap(), frac(616, 963483));
    }

    #[test]
    fn zeta_three_by_hand() {
        // 2*1*2*3 / (4 * (1458+9558+2943-1890-357+82))
        assert_eq!(zeta(3).unwrap(), frac(3, 11794));
        assert!(zeta(5).unwrap() > BigRational::zero());
        assert!(zeta(1).is_err());
    }

    #[test]
    fn sigma_rejects_type_two() {
        assert!(sigma(3, Omega::Finite(2)).is_err());
        assert!(sigma(2, Omega::Finite(2)).is_err());
    }

    #[test]
    fn randol_threshold() {
        for d in 2..=10u32 {
            let v = randol_exponent(d, d + 1).unwrap();
            assert_eq!(v, hlawka_exponent(d));
            assert_eq!(v, frac((d * d - d) as i64, d as i64 + 1));
        }
        assert_eq!(randol_exponent(2, 8).unwrap(), frac(7, 8));
        assert_eq!(randol_exponent(3, 4).unwrap(), frac(3, 2));
    }

    #[test]
    fn infinite_limits_match_large_omega() {
        for d in 2..=9u32 {
            let inf = schedules(d, Omega::Infinity).unwrap();
            let big = schedules(d, Omega::Finite(1_000_000)).unwrap();
            assert!((inf.alpha_f64() - big.alpha_f64()).abs() < 1e-5, "d={d}");
            assert!((inf.beta_f64() - big.beta_f64()).abs() < 1e-5, "d={d}");
            let s = to_f64(&sigma(d, Omega::Finite(1_000_000)).unwrap());
            assert!(s.abs() < 1e-5);
        }
    }
}
