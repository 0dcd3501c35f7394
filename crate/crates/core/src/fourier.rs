//! Fourier transforms of rotated body indicators and their two-term
//! stationary-phase main parts.
//!
//! Convention: `f̂(ζ) = ∫ f(x) e^{-2πi⟨x,ζ⟩} dx`. For `B_θ = θB` one has
//! `χ̂_{B_θ}(ζ) = χ̂_B(θᵗζ)`, so all work happens in body coordinates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{self, norm, BodyKind, ConvexBody, Rotation};
use crate::quadrature::{filon_panel_tail, graded_breaks, spherical_bessel, GaussLegendre};

/// Direct quadrature value next to the asymptotic main term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierEval {
    pub lambda: f64,
    pub direct: Complex64,
    pub main_term: Complex64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub xi: Vec<f64>,
    pub phi: f64,
    pub r_at: f64,
    pub r_max: f64,
}

/// Quadrature controls for [`chi_hat_direct_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilonOptions {
    pub nodes: usize,
    pub grading: f64,
    pub depth: usize,
    /// Absolute tolerance relative to `|B|`.
    pub rel_tol: f64,
}

impl Default for FilonOptions {
    fn default() -> Self {
        FilonOptions { nodes: 16, grading: 0.5, depth: 36, rel_tol: 1e-8 }
    }
}

fn unit(xi: &[f64]) -> Result<Vec<f64>> {
    let n = norm(xi);
    if !(n > 0.0 && n.is_finite()) {
        return domain("direction must be nonzero and finite");
    }
    if (n - 1.0).abs() > 1e-9 {
        return domain(format!("direction must be a unit vector, |ξ| = {n}"));
    }
    Ok(xi.iter().map(|v| v / n).collect())
}

fn check(body: &ConvexBody, rot: &Rotation, xi: &[f64]) -> Result<()> {
    if rot.dim() != body.dim() || xi.len() != body.dim() {
        return domain("dimension mismatch");
    }
    Ok(())
}

/// Boundary point of the unrotated body with outer normal along `eta`.
pub(crate) fn support_point(body: &ConvexBody, eta: &[f64]) -> Vec<f64> {
    match body.kind() {
        BodyKind::Ball => {
            let n = norm(eta);
            eta.iter().map(|v| v / n).collect()
        }
        BodyKind::Ellipsoid { axes } => {
            let h = body.support(eta);
            eta.iter().zip(axes).map(|(v, a)| a * a * v / h).collect()
        }
        BodyKind::Supersphere { omega } => {
            let p = *omega as f64 / (*omega as f64 - 1.0);
            let h = body.support(eta);
            eta.iter().map(|v| v.signum() * (v.abs() / h).powf(p - 1.0)).collect()
        }
        BodyKind::Custom(_) => body.custom_support_point(eta).1,
    }
}

/// Unit-ball transform as a function of `r = |ζ|`: `r^{-d/2} J_{d/2}(2πr)`.
pub fn ball_transform(d: usize, r: f64) -> f64 {
    let r = r.abs();
    let x = 2.0 * PI * r;
    if x < 1e-6 {
        let vol = PI.powf(d as f64 / 2.0) / statrs::function::gamma::gamma(d as f64 / 2.0 + 1.0);
        return vol * (1.0 - x * x / (2.0 * (d as f64 + 2.0)));
    }
    let j = if d % 2 == 0 {
        libm::jn((d / 2) as i32, x)
    } else {
        let k = (d - 1) / 2;
        (2.0 * x / PI).sqrt() * spherical_bessel(k + 1, x)[k]
    };
    j / r.powf(d as f64 / 2.0)
}

/// Closed-form `χ̂_{B_θ}(ζ)` for balls and ellipsoids.
pub fn chi_hat_closed_form(body: &ConvexBody, rot: &Rotation, zeta: &[f64]) -> Option<Complex64> {
    let eta = rot.apply_t(zeta);
    let d = body.dim();
    match body.kind() {
        BodyKind::Ball => Some(Complex64::new(ball_transform(d, norm(&eta)), 0.0)),
        BodyKind::Supersphere { omega: 2 } => Some(Complex64::new(ball_transform(d, norm(&eta)), 0.0)),
        BodyKind::Ellipsoid { axes } => {
            let scaled: Vec<f64> = eta.iter().zip(axes).map(|(v, a)| v * a).collect();
            let det: f64 = axes.iter().product();
            Some(Complex64::new(det * ball_transform(d, norm(&scaled)), 0.0))
        }
        _ => None,
    }
}

fn unit_ball_volume(k: usize) -> f64 {
    PI.powf(k as f64 / 2.0) / statrs::function::gamma::gamma(k as f64 / 2.0 + 1.0)
}

/// Cross-section volume `A(s)` of the unrotated body on `⟨y, η⟩ = s`.
struct Sections<'a> {
    body: &'a ConvexBody,
    lo: f64,
    hi: f64,
    x_lo: Vec<f64>,
    x_hi: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl<'a> Sections<'a> {
    fn new(body: &'a ConvexBody, eta: Vec<f64>) -> Sections<'a> {
        let neg: Vec<f64> = eta.iter().map(|v| -v).collect();
        let hi = body.support(&eta);
        let lo = -body.support(&neg);
        let x_hi = support_point(body, &eta);
        let x_lo = support_point(body, &neg);
        let basis = geometry::complement_basis(&eta);
        Sections { body, lo, hi, x_lo, x_hi, basis }
    }

    fn area(&self, s: f64) -> f64 {
        let d = self.body.dim();
        match self.body.kind() {
            BodyKind::Ball => unit_ball_volume(d - 1) * (1.0 - s * s).max(0.0).powf((d - 1) as f64 / 2.0),
            BodyKind::Ellipsoid { axes } => {
                let u = self.hi;
                let det: f64 = axes.iter().product();
                det / u * unit_ball_volume(d - 1) * (1.0 - (s / u) * (s / u)).max(0.0).powf((d - 1) as f64 / 2.0)
            }
            _ => self.general_area(s),
        }
    }

    fn interior(&self, s: f64) -> Vec<f64> {
        let w = ((s - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0);
        self.x_lo.iter().zip(&self.x_hi).map(|(a, b)| a + w * (b - a)).collect()
    }

    /// Largest `r >= 0` with `c + r u` in the body (`c` inside), by a
    /// safeguarded Illinois iteration on `level(c + r u) − 1`.
    fn ray(&self, c: &[f64], u: &[f64]) -> f64 {
        let mut p = vec![0.0; c.len()];
        let mut f = |r: f64| -> f64 {
            for i in 0..p.len() {
                p[i] = c[i] + r * u[i];
            }
            self.body.level(&p) - 1.0
        };
        let (mut a, mut b) = (0.0, 2.0 * self.body.circumradius() * (1.0 + 1e-9) + 1e-12);
        let (mut fa, mut fb) = (f(a), f(b));
        if fa >= 0.0 {
            return 0.0;
        }
        let mut side = 0i8;
        for _ in 0..200 {
            let mut x = (a * fb - b * fa) / (fb - fa);
            if !(x > a && x < b) {
                x = 0.5 * (a + b);
            }
            let fx = f(x);
            if fx <= 0.0 {
                a = x;
                fa = fx;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = x;
                fb = fx;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
            if fa == 0.0 {
                return a;
            }
            if b - a <= 4.0 * f64::EPSILON * b {
                break;
            }
        }
        0.5 * (a + b)
    }

    fn chord(&self, c: &[f64], u: &[f64]) -> (f64, f64) {
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        (self.ray(c, u), self.ray(c, &neg))
    }

    fn general_area(&self, s: f64) -> f64 {
        let d = self.body.dim();
        let mut c = self.interior(s);
        if d == 2 {
            let (a, b) = self.chord(&c, &self.basis[0]);
            return a + b;
        }
        // recentre on chord midpoints before the polar integration
        for _ in 0..2 {
            for e in &self.basis {
                let (a, b) = self.chord(&c, e);
                let shift = 0.5 * (a - b);
                for (ci, ei) in c.iter_mut().zip(e) {
                    *ci += shift * ei;
                }
            }
        }
        let m = 128;
        let mut acc = 0.0;
        for k in 0..m {
            let phi = 2.0 * PI * k as f64 / m as f64;
            let (sn, cs) = phi.sin_cos();
            let u: Vec<f64> = (0..d).map(|i| cs * self.basis[0][i] + sn * self.basis[1][i]).collect();
            let r = self.ray(&c, &u);
            acc += r * r;
        }
        0.5 * acc * 2.0 * PI / m as f64
    }
}

/// One Filon panel of `A(s) e(λs)` with its Legendre-tail estimate.
fn filon_piece(sec: &Sections<'_>, a: f64, b: f64, lambda: f64, n: usize) -> (Complex64, f64) {
    let g = GaussLegendre::get(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let vals: Vec<f64> = g.nodes.iter().map(|x| sec.area(c + h * x)).collect();
    filon_panel_tail(a, b, lambda, &vals)
}

/// `χ̂_{B_θ}(λξ)` by cross-section reduction and Filon-Legendre quadrature.
pub fn chi_hat_direct(body: &ConvexBody, rot: &Rotation, xi: &[f64], lambda: f64) -> Result<Complex64> {
    chi_hat_direct_with(body, rot, xi, lambda, FilonOptions::default())
}

pub fn chi_hat_direct_with(
    body: &ConvexBody,
    rot: &Rotation,
    xi: &[f64],
    lambda: f64,
    opts: FilonOptions,
) -> Result<Complex64> {
    check(body, rot, xi)?;
    let u = unit(xi)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return domain(format!("λ must be finite and >= 0, got {lambda}"));
    }
    let d = body.dim();
    if d > 3 && !matches!(body.kind(), BodyKind::Ball | BodyKind::Ellipsoid { .. }) {
        return Err(Error::Unsupported("cross sections of general bodies need d <= 3".into()));
    }
    let sec = Sections::new(body, rot.apply_t(&u));
    let scale = crate::lattice::volume(body).map(|v| v.value).unwrap_or(1.0);
    let interior = 4 + (lambda * (sec.hi - sec.lo) / 64.0).ceil() as usize;
    let breaks = graded_breaks(sec.lo, sec.hi, opts.grading, opts.depth, interior);
    let mut pieces: Vec<(f64, f64, Complex64, f64)> = breaks
        .windows(2)
        .map(|w| {
            let (v, e) = filon_piece(&sec, w[0], w[1], lambda, opts.nodes);
            (w[0], w[1], v, e)
        })
        .collect();
    let target = opts.rel_tol * scale;
    // bisect the panels whose tail exceeds their share of the budget
    for _ in 0..24 {
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= target {
            return Ok(pieces.iter().map(|p| p.2).sum());
        }
        let share = target / pieces.len() as f64;
        let mut next = Vec::with_capacity(pieces.len() + 8);
        for p in pieces {
            if p.3 > share && p.1 - p.0 > 1e-14 * (sec.hi - sec.lo) {
                let m = 0.5 * (p.0 + p.1);
                let (v1, e1) = filon_piece(&sec, p.0, m, lambda, opts.nodes);
                let (v2, e2) = filon_piece(&sec, m, p.1, lambda, opts.nodes);
                next.push((p.0, m, v1, e1));
                next.push((m, p.1, v2, e2));
            } else {
                next.push(p);
            }
        }
        pieces = next;
        if pieces.len() > 20_000 {
            break;
        }
    }
    let err: f64 = pieces.iter().map(|p| p.3).sum();
    Err(Error::Quadrature { achieved: err / scale, target: opts.rel_tol })
}

/// `(K_ξ, H(ξ))` with a flat-direction error.
fn curvature_and_support(body: &ConvexBody, rot: &Rotation, xi: &[f64]) -> Result<(f64, f64)> {
    let k = match geometry::curvature_at_direction(body, rot, xi) {
        Ok(k) => k,
        Err(Error::FlatDirection { curvature, .. }) => {
            return Err(Error::Inapplicable(format!(
                "main-term hypotheses violated: curvature {curvature:e} at ξ = {xi:?}"
            )))
        }
        Err(e) => return Err(e),
    };
    Ok((k, geometry::support(body, rot, xi)?))
}

/// Two-term main part of `χ̂_{B_θ}(λξ)`:
/// `(2π)^{-1} λ^{-(d+1)/2} [e^{πi(d+1)/4} K_ξ^{-1/2} e^{-2πiλH(ξ)}
///  + e^{-πi(d+1)/4} K_{-ξ}^{-1/2} e^{2πiλH(-ξ)}]`.
pub fn chi_hat_asymptotic(body: &ConvexBody, rot: &Rotation, xi: &[f64], lambda: f64) -> Result<Complex64> {
    check(body, rot, xi)?;
    let u = unit(xi)?;
    if !(lambda > 0.0) {
        return domain("λ must be positive");
    }
    let neg: Vec<f64> = u.iter().map(|v| -v).collect();
    let (kp, hp) = curvature_and_support(body, rot, &u)?;
    let (km, hm) = curvature_and_support(body, rot, &neg)?;
    let d = body.dim() as f64;
    let a = PI * (d + 1.0) / 4.0;
    let t1 = Complex64::from_polar(kp.powf(-0.5), a - 2.0 * PI * lambda * hp);
    let t2 = Complex64::from_polar(km.powf(-0.5), -a + 2.0 * PI * lambda * hm);
    Ok((t1 + t2) * (lambda.powf(-(d + 1.0) / 2.0) / (2.0 * PI)))
}

/// Main part of `∫_{∂B_θ} n_l e(⟨x, λξ⟩) dS`, of size `λ^{-(d-1)/2}`.
pub fn surface_measure_hat(body: &ConvexBody, rot: &Rotation, l: usize, xi: &[f64], lambda: f64) -> Result<Complex64> {
    check(body, rot, xi)?;
    let u = unit(xi)?;
    if l >= body.dim() {
        return domain(format!("coordinate index {l} out of range"));
    }
    if !(lambda > 0.0) {
        return domain("λ must be positive");
    }
    let neg: Vec<f64> = u.iter().map(|v| -v).collect();
    let (kp, hp) = curvature_and_support(body, rot, &u)?;
    let (km, hm) = curvature_and_support(body, rot, &neg)?;
    let d = body.dim() as f64;
    let a = PI * (d - 1.0) / 4.0;
    let t1 = Complex64::from_polar(u[l] * kp.powf(-0.5), a - 2.0 * PI * lambda * hp);
    let t2 = Complex64::from_polar(-u[l] * km.powf(-0.5), -a + 2.0 * PI * lambda * hm);
    Ok((t1 + t2) * lambda.powf(-(d - 1.0) / 2.0))
}

/// Gauss-Green residual of the main terms:
/// `|Σ_l ξ_l S_l + 2πiλ χ̂_main| / |Σ_l ξ_l S_l|`.
pub fn gauss_green_residual(body: &ConvexBody, rot: &Rotation, xi: &[f64], lambda: f64) -> Result<f64> {
    let u = unit(xi)?;
    let mut s = Complex64::new(0.0, 0.0);
    for (l, ul) in u.iter().enumerate() {
        s += surface_measure_hat(body, rot, l, &u, lambda)? * *ul;
    }
    let m = chi_hat_asymptotic(body, rot, &u, lambda)?;
    let r = s + Complex64::new(0.0, 2.0 * PI * lambda) * m;
    Ok(r.norm() / s.norm().max(f64::MIN_POSITIVE))
}

/// Direct value and main term at one `λ`.
pub fn fourier_eval(body: &ConvexBody, rot: &Rotation, xi: &[f64], lambda: f64) -> Result<FourierEval> {
    let direct = chi_hat_direct(body, rot, xi, lambda)?;
    let main_term = chi_hat_asymptotic(body, rot, xi, lambda)?;
    Ok(FourierEval { lambda, direct, main_term, discrepancy: (direct - main_term).norm() })
}

/// `max |direct − main|` over `samples` equally spaced points of `[λ, λ+1)`.
/// Integer `λ` alone can hide the next-order term (e.g. the `sin` part of
/// the d = 3 ball transform vanishes there).
pub fn windowed_discrepancy(body: &ConvexBody, rot: &Rotation, xi: &[f64], lambda: f64, samples: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..samples.max(1) {
        let l = lambda + k as f64 / samples.max(1) as f64;
        worst = worst.max(fourier_eval(body, rot, xi, l)?.discrepancy);
    }
    Ok(worst)
}

/// `Φ(ξ) ≈ max_{r ∈ grid} r^{(d+1)/2} |χ̂(rξ)|` over `grid` equally spaced
/// radii in `(0, r_max]`.
pub fn envelope_phi(body: &ConvexBody, rot: &Rotation, xi: &[f64], r_max: f64, grid: usize) -> Result<EnvelopeSample> {
    check(body, rot, xi)?;
    let u = unit(xi)?;
    if !(r_max > 0.0 && r_max.is_finite()) || grid == 0 {
        return domain("r_max must be positive and finite, grid nonempty");
    }
    let neg: Vec<f64> = u.iter().map(|v| -v).collect();
    let width = geometry::support(body, rot, &u)? + geometry::support(body, rot, &neg)?;
    let step = r_max / grid as f64;
    // fastest oscillation has period 1/width in r
    if step > 1.0 / (8.0 * width) {
        return Err(Error::Resolution(format!(
            "grid step {step:e} exceeds 1/8 of the oscillation period {:e}",
            1.0 / width
        )));
    }
    let d = body.dim() as f64;
    let mut best = (0.0, 0.0);
    for k in 1..=grid {
        let r = k as f64 * step;
        let zeta: Vec<f64> = u.iter().map(|v| v * r).collect();
        let v = match chi_hat_closed_form(body, rot, &zeta) {
            Some(v) => v,
            None => chi_hat_direct(body, rot, &u, r)?,
        };
        let p = r.powf((d + 1.0) / 2.0) * v.norm();
        if p > best.0 {
            best = (p, r);
        }
    }
    Ok(EnvelopeSample { xi: u, phi: best.0, r_at: best.1, r_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball3_direct_matches_closed_form() {
        let b = ConvexBody::ball(3);
        let r = Rotation::identity(3);
        for &l in &[0.3, 2.0, 10.5, 41.25] {
            let v = chi_hat_direct(&b, &r, &[0.0, 0.6, 0.8], l).unwrap();
            let w = 2.0 * PI * l;
            let want = (w.sin() - w * w.cos()) / (2.0 * PI * PI * l * l * l);
            assert!((v.re - want).abs() < 1e-9 && v.im.abs() < 1e-9, "λ={l}: {v} vs {want}");
        }
    }

    #[test]
    fn disk_direct_matches_bessel() {
        let b = ConvexBody::supersphere(2, 4).unwrap();
        let r = Rotation::identity(2);
        // supersphere at λ → 0 recovers the volume
        let v = chi_hat_direct(&b, &r, &[1.0, 0.0], 0.0).unwrap();
        let vol = crate::lattice::volume(&b).unwrap().value;
        assert!((v.re - vol).abs() < 1e-8);
        let disk = ConvexBody::ball(2);
        let x = chi_hat_direct(&disk, &r, &[0.6, -0.8], 7.3).unwrap();
        let want = libm::j1(2.0 * PI * 7.3) / 7.3;
        assert!((x.re - want).abs() < 1e-9);
    }

    #[test]
    fn ellipsoid_amplitude() {
        let e = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap();
        let r = Rotation::identity(2);
        let l = 50.0;
        let m = chi_hat_asymptotic(&e, &r, &[1.0, 0.0], l).unwrap();
        // both terms have K = 2 and H = 2: amplitude 2·(2π)^{-1}2^{-1/2}λ^{-3/2}|cos|
        let amp = (2.0f64).powf(-0.5) / (2.0 * PI) * l.powf(-1.5);
        let want = 2.0 * amp * (3.0 * PI / 4.0 - 2.0 * PI * l * 2.0).cos();
        assert!((m.re - want).abs() < 1e-12 && m.im.abs() < 1e-12);
    }

    #[test]
    fn main_term_gauss_green() {
        let e = ConvexBody::ellipsoid(&[1.5, 1.0, 0.7]).unwrap();
        let r = Rotation::identity(3);
        let xi = [0.48, 0.6, 0.64];
        assert!(gauss_green_residual(&e, &r, &xi, 17.3).unwrap() < 1e-12);
    }

    #[test]
    fn flat_direction_rejected() {
        let s = ConvexBody::supersphere(2, 4).unwrap();
        let r = Rotation::identity(2);
        assert!(matches!(chi_hat_asymptotic(&s, &r, &[1.0, 0.0], 10.0), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn hermitian_symmetry() {
        let s = ConvexBody::supersphere(3, 4).unwrap();
        let r = Rotation::identity(3);
        let a = chi_hat_direct(&s, &r, &[0.48, 0.6, 0.64], 3.3).unwrap();
        let b = chi_hat_direct(&s, &r, &[-0.48, -0.6, -0.64], 3.3).unwrap();
        assert!((a - b.conj()).norm() < 1e-10);
    }
}
