use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::geometry::Rotation;
use crate::jet::Jet;

pub type GaugeFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// User-supplied smooth gauge.
#[derive(Clone)]
pub struct CustomGauge {
    pub name: String,
    pub gauge: GaugeFn,
    /// Lipschitz constant of the gauge, i.e. one over the inradius.
    pub lipschitz: Option<f64>,
    pub finite_type: Option<u32>,
    pub symmetric: bool,
}

#[derive(Clone)]
pub enum BodyKind {
    Ball,
    Supersphere { omega: u32 },
    Ellipsoid { axes: Vec<f64> },
    Custom(CustomGauge),
}

impl fmt::Debug for BodyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyKind::Ball => write!(f, "Ball"),
            BodyKind::Supersphere { omega } => write!(f, "Supersphere({omega})"),
            BodyKind::Ellipsoid { axes } => write!(f, "Ellipsoid({axes:?})"),
            BodyKind::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

/// Compact convex body containing the origin, given by its gauge.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    dim: usize,
    kind: BodyKind,
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

impl ConvexBody {
    pub fn ball(d: usize) -> ConvexBody {
        ConvexBody { dim: d, kind: BodyKind::Ball }
    }

    /// `|x_1|^ω + ... + |x_d|^ω <= 1` for even `ω >= 2`.
    pub fn supersphere(d: usize, omega: u32) -> Result<ConvexBody> {
        if d < 2 {
            return domain("dimension must be >= 2");
        }
        if omega < 2 || omega % 2 != 0 {
            return domain(format!("supersphere parameter must be an even integer >= 2, got {omega}"));
        }
        Ok(ConvexBody { dim: d, kind: BodyKind::Supersphere { omega } })
    }

    pub fn ellipsoid(axes: &[f64]) -> Result<ConvexBody> {
        if axes.len() < 2 {
            return domain("ellipsoid needs at least two semi-axes");
        }
        if axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return domain("semi-axes must be positive and finite");
        }
        Ok(ConvexBody { dim: axes.len(), kind: BodyKind::Ellipsoid { axes: axes.to_vec() } })
    }

    pub fn custom(d: usize, g: CustomGauge) -> ConvexBody {
        ConvexBody { dim: d, kind: BodyKind::Custom(g) }
    }

    /// `supersphere:OMEGA | ellipsoid:a1,a2,... | ball`; `d` is required
    /// except for ellipsoids, where it must match the axis count if given.
    pub fn parse(spec: &str, d: Option<usize>) -> Result<ConvexBody> {
        let spec = spec.trim();
        let (head, tail) = match spec.split_once(':') {
            Some((h, t)) => (h.trim(), Some(t.trim())),
            None => (spec, None),
        };
        match (head, tail) {
            ("ball", None) => Ok(ConvexBody::ball(d.unwrap_or(2))),
            ("supersphere", Some(w)) => {
                let omega: u32 = w.parse().map_err(|_| Error::Parse(format!("bad supersphere parameter '{w}'")))?;
                ConvexBody::supersphere(d.unwrap_or(2), omega)
            }
            ("ellipsoid", Some(a)) => {
                let axes: Vec<f64> = a
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad semi-axis '{s}'"))))
                    .collect::<Result<_>>()?;
                if let Some(d) = d {
                    if d != axes.len() {
                        return domain(format!("ellipsoid has {} axes but d = {d}", axes.len()));
                    }
                }
                ConvexBody::ellipsoid(&axes)
            }
            _ => Err(Error::Parse(format!("unrecognised body '{spec}'"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            BodyKind::Ball => "ball".into(),
            BodyKind::Supersphere { omega } => format!("supersphere:{omega}"),
            BodyKind::Ellipsoid { axes } => {
                format!("ellipsoid:{}", axes.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","))
            }
            BodyKind::Custom(c) => format!("custom:{}", c.name),
        }
    }

    /// Finite-type order when known (2 means nonvanishing curvature).
    pub fn finite_type(&self) -> Option<u32> {
        match &self.kind {
            BodyKind::Ball | BodyKind::Ellipsoid { .. } => Some(2),
            BodyKind::Supersphere { omega } => Some(*omega),
            BodyKind::Custom(c) => c.finite_type,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            BodyKind::Custom(c) => c.symmetric,
            _ => true,
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.kind, BodyKind::Custom(_))
    }

    /// Gauge `ρ(x)` of the unrotated body.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Ball => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            BodyKind::Supersphere { omega } => {
                let m = sup_norm(x);
                if m == 0.0 {
                    return 0.0;
                }
                let s: f64 = x.iter().map(|v| (v / m).powi(*omega as i32)).sum();
                m * s.powf(1.0 / *omega as f64)
            }
            BodyKind::Ellipsoid { axes } => {
                x.iter().zip(axes).map(|(v, a)| (v / a) * (v / a)).sum::<f64>().sqrt()
            }
            BodyKind::Custom(c) => (c.gauge)(x),
        }
    }

    /// Exponent `p` such that [`level`](Self::level) is `ρ^p`.
    pub fn level_exponent(&self) -> u32 {
        match &self.kind {
            BodyKind::Ball | BodyKind::Ellipsoid { .. } => 2,
            BodyKind::Supersphere { omega } => *omega,
            BodyKind::Custom(_) => 1,
        }
    }

    /// `ρ(x)^p` computed without roots; cheap membership test.
    #[inline]
    pub fn level(&self, x: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Ball => x.iter().map(|v| v * v).sum(),
            BodyKind::Supersphere { omega } => {
                let w = *omega as i32;
                x.iter().map(|v| v.powi(w)).sum()
            }
            BodyKind::Ellipsoid { axes } => x.iter().zip(axes).map(|(v, a)| (v / a) * (v / a)).sum(),
            BodyKind::Custom(c) => (c.gauge)(x),
        }
    }

    /// Exact comparison of `ρ(θᵗ m)` with `t`, treating the stored f64
    /// rotation entries and `t` as exact dyadic rationals. `None` for
    /// custom bodies.
    pub fn exact_compare(&self, m: &[i64], rot: &Rotation, t: f64) -> Option<Ordering> {
        let d = self.dim;
        let q = |v: f64| BigRational::from_float(v).expect("finite float");
        let y: Vec<BigRational> = (0..d)
            .map(|i| {
                let mut acc = BigRational::zero();
                for (j, mj) in m.iter().enumerate() {
                    if *mj != 0 {
                        acc += q(rot.entry(j, i)) * BigRational::from_integer(BigInt::from(*mj));
                    }
                }
                acc
            })
            .collect();
        let tq = q(t);
        let (lhs, rhs) = match &self.kind {
            BodyKind::Ball => (y.iter().map(|v| v * v).fold(BigRational::zero(), |a, b| a + b), &tq * &tq),
            BodyKind::Supersphere { omega } => {
                let w = *omega as i32;
                (y.iter().map(|v| num_traits::pow::Pow::pow(v.abs(), w)).fold(BigRational::zero(), |a, b| a + b), num_traits::pow::Pow::pow(tq.clone(), w))
            }
            BodyKind::Ellipsoid { axes } => {
                let s = y
                    .iter()
                    .zip(axes)
                    .map(|(v, a)| {
                        let aq = q(*a);
                        (v * v) / (&aq * &aq)
                    })
                    .fold(BigRational::zero(), |a, b| a + b);
                (s, &tq * &tq)
            }
            BodyKind::Custom(_) => return None,
        };
        Some(lhs.cmp(&rhs))
    }

    /// Support function `H(ξ)` of the unrotated body.
    pub fn support(&self, xi: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Ball => xi.iter().map(|v| v * v).sum::<f64>().sqrt(),
            BodyKind::Supersphere { omega } => {
                let m = sup_norm(xi);
                if m == 0.0 {
                    return 0.0;
                }
                let p = *omega as f64 / (*omega as f64 - 1.0);
                let s: f64 = xi.iter().map(|v| (v.abs() / m).powf(p)).sum();
                m * s.powf(1.0 / p)
            }
            BodyKind::Ellipsoid { axes } => {
                xi.iter().zip(axes).map(|(v, a)| (v * a) * (v * a)).sum::<f64>().sqrt()
            }
            BodyKind::Custom(_) => self.custom_support_point(xi).0,
        }
    }

    /// Jet of the gauge; `None` for custom bodies.
    pub fn gauge_jet(&self, x: &[Jet]) -> Option<Jet> {
        match &self.kind {
            BodyKind::Ball => Some(crate::jet::sum(&x.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt()),
            BodyKind::Supersphere { omega } => {
                let s = crate::jet::sum(&x.iter().map(|v| v.powi(*omega)).collect::<Vec<_>>());
                Some(s.powf(1.0 / *omega as f64))
            }
            BodyKind::Ellipsoid { axes } => {
                let terms: Vec<Jet> = x.iter().zip(axes).map(|(v, a)| (v * v).scale(1.0 / (a * a))).collect();
                Some(crate::jet::sum(&terms).sqrt())
            }
            BodyKind::Custom(_) => None,
        }
    }

    /// Jet of the support function; `None` for custom bodies.
    pub fn support_jet(&self, xi: &[Jet]) -> Option<Jet> {
        match &self.kind {
            BodyKind::Ball => Some(crate::jet::sum(&xi.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt()),
            BodyKind::Supersphere { omega } => {
                let p = *omega as f64 / (*omega as f64 - 1.0);
                let s = crate::jet::sum(&xi.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>());
                Some(s.powf(1.0 / p))
            }
            BodyKind::Ellipsoid { axes } => {
                let terms: Vec<Jet> = xi.iter().zip(axes).map(|(v, a)| (v * v).scale(a * a)).collect();
                Some(crate::jet::sum(&terms).sqrt())
            }
            BodyKind::Custom(_) => None,
        }
    }

    /// Radius of the largest centred ball inside the body.
    pub fn inradius(&self) -> f64 {
        match &self.kind {
            BodyKind::Ball | BodyKind::Supersphere { .. } => 1.0,
            BodyKind::Ellipsoid { axes } => axes.iter().cloned().fold(f64::INFINITY, f64::min),
            BodyKind::Custom(c) => match c.lipschitz {
                Some(l) => 1.0 / l,
                None => self.sampled_radii().0,
            },
        }
    }

    /// Radius of the smallest centred ball containing the body.
    pub fn circumradius(&self) -> f64 {
        match &self.kind {
            BodyKind::Ball => 1.0,
            BodyKind::Supersphere { omega } => (self.dim as f64).powf(0.5 - 1.0 / *omega as f64),
            BodyKind::Ellipsoid { axes } => axes.iter().cloned().fold(0.0, f64::max),
            BodyKind::Custom(_) => self.sampled_radii().1 * 1.05,
        }
    }

    /// Lipschitz constant of the gauge (one over the inradius), when known.
    pub fn gauge_lipschitz(&self) -> Option<f64> {
        match &self.kind {
            BodyKind::Custom(c) => c.lipschitz,
            _ => Some(1.0 / self.inradius()),
        }
    }

    fn sampled_radii(&self) -> (f64, f64) {
        let dirs = crate::geometry::sphere_points(self.dim, 4096);
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for u in &dirs {
            let r = 1.0 / self.gauge(u);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }

    /// Closed-form volume where available.
    pub fn volume_closed(&self) -> Option<f64> {
        let d = self.dim as f64;
        match &self.kind {
            BodyKind::Ball => Some(std::f64::consts::PI.powf(d / 2.0) / gamma(d / 2.0 + 1.0)),
            BodyKind::Supersphere { omega } => {
                let w = *omega as f64;
                Some((2.0 * gamma(1.0 + 1.0 / w)).powf(d) / gamma(1.0 + d / w))
            }
            BodyKind::Ellipsoid { axes } => {
                let unit = std::f64::consts::PI.powf(d / 2.0) / gamma(d / 2.0 + 1.0);
                Some(unit * axes.iter().product::<f64>())
            }
            BodyKind::Custom(_) => None,
        }
    }

    /// Numerical support point for custom bodies: maximises `<ξ, u>/ρ(u)`
    /// over unit `u`. Returns `(H(ξ), x(ξ))`.
    pub(crate) fn custom_support_point(&self, xi: &[f64]) -> (f64, Vec<f64>) {
        let d = self.dim;
        let f = |u: &[f64]| -> f64 {
            let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = self.gauge(u) / n;
            u.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() / n / r
        };
        let best = if d == 2 {
            let g = |phi: f64| f(&[phi.cos(), phi.sin()]);
            let n = 720;
            let mut bi = 0;
            let mut bv = f64::NEG_INFINITY;
            for i in 0..n {
                let v = g(2.0 * std::f64::consts::PI * i as f64 / n as f64);
                if v > bv {
                    bv = v;
                    bi = i;
                }
            }
            let h = 2.0 * std::f64::consts::PI / n as f64;
            let c = h * bi as f64;
            let phi = golden_max(&g, c - h, c + h, 1e-13);
            vec![phi.cos(), phi.sin()]
        } else {
            let pts = crate::geometry::sphere_points(d, 2000);
            let mut u = pts
                .iter()
                .max_by(|a, b| f(a).partial_cmp(&f(b)).unwrap_or(Ordering::Equal))
                .cloned()
                .unwrap_or_else(|| xi.to_vec());
            // projected coordinate ascent with shrinking geodesic steps
            let mut step = 0.05;
            for _ in 0..200 {
                let fu = f(&u);
                let mut grad = vec![0.0; d];
                let h = 1e-6;
                for k in 0..d {
                    let mut up = u.clone();
                    up[k] += h;
                    let mut dn = u.clone();
                    dn[k] -= h;
                    grad[k] = (f(&up) - f(&dn)) / (2.0 * h);
                }
                let gu: f64 = grad.iter().zip(&u).map(|(a, b)| a * b).sum();
                let tang: Vec<f64> = grad.iter().zip(&u).map(|(g, x)| g - gu * x).collect();
                let tn = tang.iter().map(|v| v * v).sum::<f64>().sqrt();
                if tn < 1e-14 {
                    break;
                }
                let dir: Vec<f64> = tang.iter().map(|v| v / tn).collect();
                let along = |s: f64| -> f64 {
                    let p: Vec<f64> = u.iter().zip(&dir).map(|(x, t)| x * s.cos() + t * s.sin()).collect();
                    f(&p)
                };
                let s = golden_max(&along, 0.0, step, 1e-14);
                let next: Vec<f64> = u.iter().zip(&dir).map(|(x, t)| x * s.cos() + t * s.sin()).collect();
                if f(&next) <= fu {
                    step *= 0.5;
                    if step < 1e-12 {
                        break;
                    }
                    continue;
                }
                u = next;
            }
            u
        };
        let r = self.gauge(&best);
        let x: Vec<f64> = best.iter().map(|v| v / r).collect();
        let h = x.iter().zip(xi).map(|(a, b)| a * b).sum();
        (h, x)
    }
}

/// Golden-section maximisation of a unimodal function on `[a, b]`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
