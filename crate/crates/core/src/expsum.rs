//! Exponential sums `S(T, M; G, F) = Σ_m G(m/M) e(T F(m/M))`: direct
//! evaluation, Weyl–van der Corput differencing (the A-step), Poisson
//! summation with stationary phase (the B-step), and the closed-form bound
//! of the proposition together with its hypothesis checks.
//!
//! `e(x) = exp(2πix)`. The Weyl shift length is called `h_weyl` so that
//! `H` stays free for support functions.

use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exponents::to_f64;
use crate::geometry::{dotp, norm, random_unit, ConvexBody, Rotation};
use crate::jet::{Jet, JetSpace};
use crate::poisson::pairwise;
use crate::quadrature::GaussLegendre;

/// Largest number of lattice terms evaluated directly.
pub const MAX_TERMS: u128 = 100_000_000;

/// A smooth real function of `d` variables with forward-mode derivatives.
pub trait SmoothFn: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn value(&self, y: &[f64]) -> f64;
    fn jet(&self, y: &[Jet]) -> Jet;
    /// A ball `(center, radius)` outside which the function vanishes.
    fn support(&self) -> Option<(Vec<f64>, f64)> {
        None
    }
    /// `(A, b, c)` with `f(y) = yᵗAy/2 + b·y + c`, row-major `A`.
    fn quadratic(&self) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        None
    }
}

pub type Smooth = Arc<dyn SmoothFn>;

fn jet_at(y: &[f64], order: usize) -> Vec<Jet> {
    let space = JetSpace::get(y.len(), order);
    (0..y.len()).map(|i| Jet::variable(&space, i, y[i])).collect()
}

fn dist2(y: &[f64], c: &[f64]) -> f64 {
    y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `height · exp(-|y-c|²/(2w²))`, cut to zero beyond `cutoff · w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: Vec<f64>,
    pub width: f64,
    pub cutoff: f64,
    pub height: f64,
}

impl SmoothFn for Gaussian {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let r2 = dist2(y, &self.center);
        if r2 > (self.cutoff * self.width).powi(2) {
            return 0.0;
        }
        self.height * (-r2 / (2.0 * self.width * self.width)).exp()
    }
    fn jet(&self, y: &[Jet]) -> Jet {
        let terms: Vec<Jet> = y.iter().zip(&self.center).map(|(v, c)| {
            let s = v.add_scalar(-c);
            &s * &s
        }).collect();
        crate::jet::sum(&terms).scale(-1.0 / (2.0 * self.width * self.width)).exp().scale(self.height)
    }
    fn support(&self) -> Option<(Vec<f64>, f64)> {
        Some((self.center.clone(), self.cutoff * self.width))
    }
}

/// `height · exp(1 - 1/(1 - |y-c|²/R²))` on `B(c, R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub height: f64,
}

impl SmoothFn for Bump {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let s = dist2(y, &self.center) / (self.radius * self.radius);
        if s >= 1.0 {
            return 0.0;
        }
        self.height * (1.0 - 1.0 / (1.0 - s)).exp()
    }
    fn jet(&self, y: &[Jet]) -> Jet {
        let terms: Vec<Jet> = y.iter().zip(&self.center).map(|(v, c)| {
            let s = v.add_scalar(-c);
            &s * &s
        }).collect();
        let s = crate::jet::sum(&terms).scale(1.0 / (self.radius * self.radius));
        if s.value() >= 1.0 {
            return Jet::constant(s.space(), 0.0);
        }
        let inv = s.scale(-1.0).add_scalar(1.0).recip();
        inv.scale(-1.0).add_scalar(1.0).exp().scale(self.height)
    }
    fn support(&self) -> Option<(Vec<f64>, f64)> {
        Some((self.center.clone(), self.radius))
    }
}

/// `yᵗAy/2 + b·y + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl SmoothFn for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let d = self.b.len();
        let mut acc = self.c + dotp(&self.b, y);
        for i in 0..d {
            for j in 0..d {
                acc += 0.5 * self.a[i * d + j] * y[i] * y[j];
            }
        }
        acc
    }
    fn jet(&self, y: &[Jet]) -> Jet {
        let d = self.b.len();
        let mut acc = crate::jet::dot(&self.b, y).add_scalar(self.c);
        for i in 0..d {
            for j in 0..d {
                if self.a[i * d + j] != 0.0 {
                    acc = acc + (&y[i] * &y[j]).scale(0.5 * self.a[i * d + j]);
                }
            }
        }
        acc
    }
    fn quadratic(&self) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        Some((self.a.clone(), self.b.clone(), self.c))
    }
}

/// `H_θ(base + y)` for a convex body with closed-form support jets.
#[derive(Debug, Clone)]
pub struct SupportPhase {
    pub body: ConvexBody,
    pub rot: Rotation,
    pub base: Vec<f64>,
}

impl SmoothFn for SupportPhase {
    fn dim(&self) -> usize {
        self.base.len()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let x: Vec<f64> = self.base.iter().zip(y).map(|(a, b)| a + b).collect();
        self.body.support(&self.rot.apply_t(&x))
    }
    fn jet(&self, y: &[Jet]) -> Jet {
        let d = self.base.len();
        let x: Vec<Jet> = y.iter().zip(&self.base).map(|(v, b)| v.add_scalar(*b)).collect();
        let rows: Vec<Jet> = (0..d)
            .map(|i| {
                let w: Vec<f64> = (0..d).map(|j| self.rot.entry(j, i)).collect();
                crate::jet::dot(&w, &x)
            })
            .collect();
        self.body.support_jet(&rows).expect("support phase needs a closed-form body")
    }
}

/// `scale · (F(y + s) - F(y))`.
#[derive(Debug, Clone)]
pub struct Differenced {
    pub inner: Smooth,
    pub shift: Vec<f64>,
    pub scale: f64,
}

impl SmoothFn for Differenced {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let ys: Vec<f64> = y.iter().zip(&self.shift).map(|(a, b)| a + b).collect();
        self.scale * (self.inner.value(&ys) - self.inner.value(y))
    }
    fn jet(&self, y: &[Jet]) -> Jet {
        let ys: Vec<Jet> = y.iter().zip(&self.shift).map(|(v, s)| v.add_scalar(*s)).collect();
        (self.inner.jet(&ys) - self.inner.jet(y)).scale(self.scale)
    }
    fn quadratic(&self) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let (a, b, c) = self.inner.quadratic()?;
        let d = b.len();
        let q = Quadratic { a: a.clone(), b: b.clone(), c };
        let base = q.value(&self.shift) - c;
        let mut lin = vec![0.0; d];
        for i in 0..d {
            lin[i] = self.scale * (0..d).map(|j| a[i * d + j] * self.shift[j]).sum::<f64>();
        }
        Some((vec![0.0; d * d], lin, self.scale * base))
    }
}

/// `G(y + s) G(y)`.
#[derive(Debug, Clone)]
pub struct ShiftedProduct {
    pub inner: Smooth,
    pub shift: Vec<f64>,
}

impl SmoothFn for ShiftedProduct {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, y: &[f64]) -> f64 {
        let a = self.inner.value(y);
        if a == 0.0 {
            return 0.0;
        }
        let ys: Vec<f64> = y.iter().zip(&self.shift).map(|(a, b)| a + b).collect();
        a * self.inner.value(&ys)
    }
    fn jet(&self, y: &[Jet]) -> Jet {
        let ys: Vec<Jet> = y.iter().zip(&self.shift).map(|(v, s)| v.add_scalar(*s)).collect();
        &self.inner.jet(&ys) * &self.inner.jet(y)
    }
    fn support(&self) -> Option<(Vec<f64>, f64)> {
        let (c, r) = self.inner.support()?;
        let s = norm(&self.shift);
        if s >= 2.0 * r {
            return Some((c, 0.0));
        }
        let center = c.iter().zip(&self.shift).map(|(a, b)| a - b / 2.0).collect();
        Some((center, (r * r - s * s / 4.0).sqrt()))
    }
}

/// `S(T, M; G, F)` with the parameters of the proposition.
#[derive(Debug, Clone)]
pub struct ExpSumInstance {
    pub t: f64,
    pub m_star: f64,
    pub g: Smooth,
    pub f: Smooth,
    /// Curvature-scale parameter in `(0, 1)`.
    pub k: f64,
    pub q: u32,
    /// Radius `c_0` of the ball containing the phase domain `Ω`.
    pub omega_radius: f64,
}

impl ExpSumInstance {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return domain("T must be positive");
        }
        if !(self.m_star > 1.0 && self.m_star.is_finite()) {
            return domain("M_* must exceed 1");
        }
        if !(self.k > 0.0 && self.k < 1.0) {
            return domain("K must lie in (0, 1)");
        }
        if self.q == 0 {
            return domain("q must be >= 1");
        }
        if self.g.dim() != self.f.dim() {
            return domain("amplitude and phase dimensions differ");
        }
        let (c, r) = self.g.support().ok_or_else(|| Error::Domain("amplitude needs compact support".into()))?;
        if norm(&c) + r > self.omega_radius {
            return domain("supp(G) is not inside Ω");
        }
        Ok(())
    }

    /// Family used by the CLI: `F(y) = H_ω(1 + y)` for the supersphere of
    /// type `omega`, bump amplitude of radius `0.4` in `Ω = B(0, 0.5)`.
    pub fn supersphere_support(d: usize, omega: u32, q: u32, t: f64, m_star: f64, k: f64) -> Result<Self> {
        let body = ConvexBody::supersphere(d, omega)?;
        let inst = ExpSumInstance {
            t,
            m_star,
            g: Arc::new(Bump { center: vec![0.0; d], radius: 0.4, height: 1.0 }),
            f: Arc::new(SupportPhase { body, rot: Rotation::identity(d), base: vec![1.0; d] }),
            k,
            q,
            omega_radius: 0.5,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// `Q = 2^q`.
    pub fn big_q(&self) -> u64 {
        1u64 << self.q
    }

    fn lattice_box(&self) -> Result<(Vec<i64>, Vec<usize>)> {
        let (c, r) = self.g.support().ok_or_else(|| Error::Domain("amplitude needs compact support".into()))?;
        let mut lo = Vec::new();
        let mut dims = Vec::new();
        let mut total: u128 = 1;
        for ci in &c {
            let a = ((ci - r) * self.m_star).ceil() as i64;
            let b = ((ci + r) * self.m_star).floor() as i64;
            let n = (b - a + 1).max(0) as usize;
            total = total.saturating_mul(n as u128);
            lo.push(a);
            dims.push(n);
        }
        if total > MAX_TERMS {
            return Err(Error::Size(total));
        }
        Ok((lo, dims))
    }

    fn term(&self, m: &[i64]) -> Complex64 {
        let y: Vec<f64> = m.iter().map(|&v| v as f64 / self.m_star).collect();
        let g = self.g.value(&y);
        if g == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ph = 2.0 * PI * frac(self.t * self.f.value(&y));
        Complex64::from_polar(g, ph)
    }
}

/// Fractional part, used to keep `e(x)` accurate for large arguments.
fn frac(x: f64) -> f64 {
    x - x.floor()
}

fn unflatten(mut idx: usize, lo: &[i64], dims: &[usize], out: &mut [i64]) {
    for k in (0..dims.len()).rev() {
        out[k] = lo[k] + (idx % dims[k]) as i64;
        idx /= dims[k];
    }
}

/// A complex sequence on a lattice box, row-major with the last index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSeq {
    pub lo: Vec<i64>,
    pub dims: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl LatticeSeq {
    pub fn new(lo: Vec<i64>, dims: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        if lo.len() != dims.len() || dims.iter().product::<usize>() != values.len() {
            return domain("sequence shape mismatch");
        }
        Ok(LatticeSeq { lo, dims, values })
    }

    pub fn sum(&self) -> Complex64 {
        pairwise(&self.values)
    }

    fn stride(&self, k: usize) -> usize {
        self.dims[k + 1..].iter().product()
    }

    /// `Σ_m z_{m+h e_k} conj(z_m)` over `m` with both points in the box.
    pub fn correlation(&self, axis: usize, h: i64) -> Complex64 {
        let n = self.dims[axis] as i64;
        if h.abs() >= n {
            return Complex64::new(0.0, 0.0);
        }
        let stride = self.stride(axis);
        let outer: usize = self.dims[..axis].iter().product();
        let mut parts = Vec::with_capacity(outer);
        for o in 0..outer {
            let mut acc = Vec::with_capacity((n as usize) * stride);
            for i in 0..n {
                let j = i + h;
                if j < 0 || j >= n {
                    continue;
                }
                let bi = (o * self.dims[axis] + i as usize) * stride;
                let bj = (o * self.dims[axis] + j as usize) * stride;
                for s in 0..stride {
                    acc.push(self.values[bj + s] * self.values[bi + s].conj());
                }
            }
            parts.push(pairwise(&acc));
        }
        pairwise(&parts)
    }
}

/// Materialises `z_m = G(m/M) e(T F(m/M))` on the bounding box of `supp G`.
pub fn sequence(inst: &ExpSumInstance) -> Result<LatticeSeq> {
    let (lo, dims) = inst.lattice_box()?;
    let total: usize = dims.iter().product();
    let d = dims.len();
    let values: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map_init(
            || vec![0i64; d],
            |m, idx| {
                unflatten(idx, &lo, &dims, m);
                inst.term(m)
            },
        )
        .collect();
    LatticeSeq::new(lo, dims, values)
}

/// Direct lattice sum.
pub fn eval_sum(inst: &ExpSumInstance) -> Result<Complex64> {
    let (lo, dims) = inst.lattice_box()?;
    let d = dims.len();
    if dims.iter().any(|&n| n == 0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let inner: usize = dims[1..].iter().product();
    let rows: Vec<Complex64> = (0..dims[0])
        .into_par_iter()
        .map(|r| {
            let mut m = vec![0i64; d];
            let mut acc = Vec::with_capacity(inner);
            for idx in 0..inner {
                unflatten(r * inner + idx, &lo, &dims, &mut m);
                acc.push(inst.term(&m));
            }
            pairwise(&acc)
        })
        .collect();
    Ok(pairwise(&rows))
}

/// One Weyl–van der Corput step along a unit lattice direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylStep {
    pub axis: usize,
    pub h_weyl: usize,
    pub n_r: usize,
    pub n_perp: usize,
    /// `(h, Σ_m z_{m+hr} conj(z_m))` for `0 <= h < h_weyl`.
    pub correlations: Vec<(i64, Complex64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn axis_of(r: &[i64]) -> Result<usize> {
    let nz: Vec<usize> = (0..r.len()).filter(|&k| r[k] != 0).collect();
    if nz.len() != 1 || r[nz[0]].abs() != 1 {
        return domain(format!("shift direction {r:?} is not a unit lattice vector"));
    }
    Ok(nz[0])
}

/// Checks `|Σ z|² <= N_⊥ (N_r + H)/H · Σ_{|h|<H} (1 - |h|/H) |Σ_m z_{m+hr} conj(z_m)|`,
/// where `N_r` is the box extent along `r` and `N_⊥` the number of lines
/// parallel to `r`.
pub fn weyl_step(seq: &LatticeSeq, h_weyl: usize, r: &[i64]) -> Result<WeylStep> {
    if h_weyl < 1 {
        return domain("Weyl shift length must be >= 1");
    }
    if r.len() != seq.dims.len() {
        return domain("shift direction has the wrong dimension");
    }
    let axis = axis_of(r)?;
    let n_r = seq.dims[axis];
    if h_weyl > n_r {
        return domain(format!("Weyl shift length {h_weyl} exceeds box side {n_r}"));
    }
    let n_perp: usize = seq.dims.iter().enumerate().filter(|(k, _)| *k != axis).map(|(_, n)| *n).product();
    let correlations: Vec<(i64, Complex64)> = (0..h_weyl as i64)
        .into_par_iter()
        .map(|h| (h, seq.correlation(axis, h)))
        .collect();
    let hw = h_weyl as f64;
    let mut weighted = 0.0;
    for (h, c) in &correlations {
        let w = 1.0 - *h as f64 / hw;
        weighted += if *h == 0 { w * c.norm() } else { 2.0 * w * c.norm() };
    }
    let lhs = seq.sum().norm_sqr();
    let rhs = n_perp as f64 * (n_r as f64 + hw) / hw * weighted;
    let holds = lhs <= rhs * (1.0 + 1e-12) + 1e-300;
    Ok(WeylStep { axis, h_weyl, n_r, n_perp, correlations, lhs, rhs, holds })
}

/// The differenced instance for shift `h` along axis `k`:
/// `G_1(y) = G(y+s)G(y)`, `F_1(y) = (M/h)(F(y+s) - F(y))`, `T_1 = hT/M`
/// with `s = h e_k / M`; its sum equals the correlation at `h`.
pub fn difference(inst: &ExpSumInstance, axis: usize, h: i64) -> Result<ExpSumInstance> {
    if h == 0 {
        return domain("difference needs a nonzero shift");
    }
    let d = inst.dim();
    let mut s = vec![0.0; d];
    s[axis] = h as f64 / inst.m_star;
    Ok(ExpSumInstance {
        t: inst.t * h.abs() as f64 / inst.m_star,
        m_star: inst.m_star,
        g: Arc::new(ShiftedProduct { inner: inst.g.clone(), shift: s.clone() }),
        f: Arc::new(Differenced { inner: inst.f.clone(), shift: s, scale: inst.m_star / h.abs() as f64 }),
        k: inst.k,
        q: inst.q,
        omega_radius: inst.omega_radius,
    })
}

/// One A-step of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AStage {
    pub step: WeylStep,
    pub shift: i64,
    /// Sum of the differenced instance and the correlation it must equal.
    pub differenced_sum: Complex64,
    pub correlation: Complex64,
}

/// Shift directions `r_1 = e_1`, `r_j = e_d`.
pub fn default_direction(d: usize, j: usize) -> Vec<i64> {
    let mut r = vec![0i64; d];
    if j == 0 {
        r[0] = 1;
    } else {
        r[d - 1] = 1;
    }
    r
}

/// `steps` A-steps with the default directions; each keeps the shift
/// `1 <= h < h_weyl` of largest correlation (smallest on ties).
pub fn a_process(inst: &ExpSumInstance, steps: usize, h_weyl: usize) -> Result<(Vec<AStage>, ExpSumInstance)> {
    let d = inst.dim();
    let mut cur = inst.clone();
    let mut stages = Vec::with_capacity(steps);
    for j in 0..steps {
        let seq = sequence(&cur)?;
        let r = default_direction(d, j);
        let axis = axis_of(&r)?;
        let hw = h_weyl.min(seq.dims[axis]).max(1);
        let step = weyl_step(&seq, hw, &r)?;
        if hw < 2 {
            return Err(Error::Inapplicable("box too thin for a nonzero shift".into()));
        }
        let mut best = (1i64, -1.0);
        for (h, c) in &step.correlations {
            if *h >= 1 && c.norm() > best.1 {
                best = (*h, c.norm());
            }
        }
        let shift = best.0;
        let correlation = step.correlations[shift as usize].1;
        let next = difference(&cur, axis, shift)?;
        let differenced_sum = eval_sum(&next)?;
        stages.push(AStage { step, shift, differenced_sum, correlation });
        cur = next;
    }
    Ok((stages, cur))
}

/// Settings of the B-step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BOptions {
    /// Number of stationary-phase terms (only quadratic phases use more than one).
    pub order: usize,
    /// Extra room around the gradient image when enumerating `p`.
    pub p_margin: f64,
    /// Newton seeds per axis for non-quadratic phases.
    pub seeds: usize,
    pub max_p: usize,
}

impl Default for BOptions {
    fn default() -> Self {
        BOptions { order: 1, p_margin: 1.0, seeds: 3, max_p: 2_000_000 }
    }
}

/// A critical point `y*` of `T F(y) - M⟨p, y⟩` (reported as `z = y/K^8`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub p: Vec<i64>,
    pub z: Vec<f64>,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BStep {
    pub lambda1: f64,
    /// The printed frequency radius `A_1 K^{-8} λ_1 / M`.
    pub p_radius: f64,
    pub p_count: usize,
    pub order_used: usize,
    pub critical_points: Vec<CriticalPoint>,
    /// Terms answered by direct quadrature after Newton failed.
    pub fallbacks: usize,
    /// Near-stationary terms left out (no quadrature route for `d > 2`).
    pub unresolved: usize,
    pub ift_r1: f64,
    pub ift_r2: f64,
    pub transformed: Complex64,
    pub direct: Complex64,
    pub residual: f64,
    pub relative_residual: f64,
}

struct PhaseBounds {
    grad_lo: Vec<f64>,
    grad_hi: Vec<f64>,
    grad_max: f64,
    r1: f64,
    r2: f64,
}

fn support_samples(c: &[f64], r: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let d = c.len();
    let n = per_axis.max(2);
    let total = n.pow(d as u32);
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let y: Vec<f64> = (0..d).map(|k| c[k] + r * (2.0 * idx[k] as f64 / (n - 1) as f64 - 1.0)).collect();
        if dist2(&y, c) <= r * r * (1.0 + 1e-12) {
            out.push(y);
        }
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
    out.push(c.to_vec());
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

fn phase_bounds(f: &dyn SmoothFn, c: &[f64], r: f64) -> PhaseBounds {
    let d = c.len();
    let mut grad_lo = vec![f64::INFINITY; d];
    let mut grad_hi = vec![f64::NEG_INFINITY; d];
    let mut grad_max: f64 = 0.0;
    let mut big_c: f64 = 0.0;
    let mut small_c = f64::INFINITY;
    let mut hess_max: f64 = 0.0;
    for y in support_samples(c, r, if d <= 2 { 17 } else { 7 }) {
        let j = f.jet(&jet_at(&y, 3));
        let g = j.gradient();
        for k in 0..d {
            grad_lo[k] = grad_lo[k].min(g[k]);
            grad_hi[k] = grad_hi[k].max(g[k]);
        }
        grad_max = grad_max.max(norm(&g));
        let h = j.hessian();
        hess_max = hess_max.max(h.iter().map(|v| v.abs()).fold(0.0, f64::max));
        small_c = small_c.min(DMatrix::from_row_slice(d, d, &h).determinant().abs());
        for ord in 1..=3 {
            for (_, v) in j.derivatives_of_order(ord) {
                big_c = big_c.max(v.abs());
            }
        }
    }
    // gradients between samples move by at most the Hessian bound times the spacing
    let slack = hess_max * 2.0 * r / 6.0;
    for k in 0..d {
        grad_lo[k] -= slack;
        grad_hi[k] += slack;
    }
    let dd = d as f64;
    let r1 = small_c / (2.0 * dd * dd * factorial(d) * big_c.powi(d as i32));
    let r2 = small_c / (4.0 * factorial(d) * big_c.powi(d as i32 - 1)) * r1;
    PhaseBounds { grad_lo, grad_hi, grad_max, r1, r2 }
}

fn sym_parts(h: &[f64], d: usize) -> Result<(f64, i32)> {
    let e = SymmetricEigen::new(DMatrix::from_row_slice(d, d, h));
    let mut det = 1.0;
    let mut sig = 0;
    for v in e.eigenvalues.iter() {
        if *v == 0.0 || !v.is_finite() {
            return Err(Error::Inapplicable("phase Hessian is singular".into()));
        }
        det *= v.abs();
        sig += if *v > 0.0 { 1 } else { -1 };
    }
    Ok((det, sig))
}

/// `L^j u(0)` for `L = Σ B_{kl} ∂_k ∂_l`, from a jet of `u`.
fn apply_l_power(u: &Jet, b: &[f64], d: usize, j: usize) -> f64 {
    fn rec(u: &Jet, b: &[f64], d: usize, left: usize, multi: &mut Vec<u8>, weight: f64) -> f64 {
        if left == 0 {
            return weight * u.derivative(multi);
        }
        let mut acc = 0.0;
        for k in 0..d {
            for l in 0..d {
                let w = b[k * d + l];
                if w == 0.0 {
                    continue;
                }
                multi[k] += 1;
                multi[l] += 1;
                acc += rec(u, b, d, left - 1, multi, weight * w);
                multi[k] -= 1;
                multi[l] -= 1;
            }
        }
        acc
    }
    let mut multi = vec![0u8; d];
    rec(u, b, d, j, &mut multi, 1.0)
}

fn enumerate_box(lo: &[i64], hi: &[i64], max: usize) -> Result<Vec<Vec<i64>>> {
    let d = lo.len();
    let mut total: u128 = 1;
    for k in 0..d {
        total = total.saturating_mul((hi[k] - lo[k] + 1).max(0) as u128);
    }
    if total > max as u128 {
        return Err(Error::Size(total));
    }
    let mut out = Vec::with_capacity(total as usize);
    if total == 0 {
        return Ok(out);
    }
    let mut m = lo.to_vec();
    loop {
        out.push(m.clone());
        let mut k = d;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            m[k] += 1;
            if m[k] <= hi[k] {
                break;
            }
            m[k] = lo[k];
        }
    }
}

/// Damped Newton on `∇F(y) = w`; returns the root and the final residual.
pub fn critical_point(f: &dyn SmoothFn, w: &[f64], start: &[f64]) -> (Vec<f64>, f64, bool) {
    let d = w.len();
    let resid = |y: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let j = f.jet(&jet_at(y, 2));
        let g: Vec<f64> = j.gradient().iter().zip(w).map(|(a, b)| a - b).collect();
        (g, j.hessian())
    };
    let scale = 1.0 + norm(w);
    let mut y = start.to_vec();
    let (mut g, mut h) = resid(&y);
    let mut rn = norm(&g);
    for _ in 0..60 {
        if rn <= 1e-14 * scale {
            return (y, rn, true);
        }
        let hm = DMatrix::from_row_slice(d, d, &h);
        let step = match hm.lu().solve(&DVector::from_column_slice(&g)) {
            Some(s) => s,
            None => return (y, rn, false),
        };
        let mut a = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let yn: Vec<f64> = (0..d).map(|k| y[k] - a * step[k]).collect();
            let (gn, hn) = resid(&yn);
            let n = norm(&gn);
            if n.is_finite() && n < rn * (1.0 - 1e-4 * a) {
                y = yn;
                g = gn;
                h = hn;
                rn = n;
                improved = true;
                break;
            }
            a *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (y, rn, rn <= 1e-10 * scale)
}

/// `M^d ∫ G(y) e(T F(y) - M⟨p, y⟩) dy` by tensor Gauss–Legendre over the
/// support box (`d <= 2`), with panels resolving the local frequency.
pub fn oscillatory_integral(inst: &ExpSumInstance, p: &[i64]) -> Result<Complex64> {
    let d = inst.dim();
    if d > 2 {
        return Err(Error::Unsupported("direct oscillatory quadrature only for d <= 2".into()));
    }
    let (c, r) = inst.g.support().ok_or_else(|| Error::Domain("amplitude needs compact support".into()))?;
    let pb = phase_bounds(inst.f.as_ref(), &c, r);
    let pm: Vec<f64> = p.iter().map(|&v| v as f64 * inst.m_star).collect();
    let freq = inst.t * pb.grad_max + norm(&pm);
    let panels = ((freq * 2.0 * r).ceil() as usize + 8).min(20_000);
    let rule = GaussLegendre::get(16);
    let h = 2.0 * r / panels as f64;
    let axis: Vec<(f64, f64)> = (0..panels)
        .flat_map(|k| {
            let a = -r + k as f64 * h;
            rule.nodes.iter().zip(&rule.weights).map(move |(x, w)| (a + 0.5 * h * (x + 1.0), 0.5 * h * w))
        })
        .collect();
    let md = inst.m_star.powi(d as i32);
    let point = |y: &[f64]| -> Complex64 {
        let g = inst.g.value(y);
        if g == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ph = inst.t * inst.f.value(y) - dotp(&pm, y);
        Complex64::from_polar(g, 2.0 * PI * frac(ph))
    };
    let total = if d == 1 {
        let v: Vec<Complex64> = axis.iter().map(|(x, w)| point(&[c[0] + x]) * *w).collect();
        pairwise(&v)
    } else {
        let rows: Vec<Complex64> = axis
            .par_iter()
            .map(|(x0, w0)| {
                let v: Vec<Complex64> = axis.iter().map(|(x1, w1)| point(&[c[0] + x0, c[1] + x1]) * (w0 * w1)).collect();
                pairwise(&v)
            })
            .collect();
        pairwise(&rows)
    };
    Ok(total * md)
}

/// Poisson summation followed by stationary phase on every retained `p`.
pub fn b_process(inst: &ExpSumInstance, opts: &BOptions) -> Result<BStep> {
    let direct = eval_sum(inst)?;
    b_process_with_direct(inst, opts, direct)
}

pub fn b_process_with_direct(inst: &ExpSumInstance, opts: &BOptions, direct: Complex64) -> Result<BStep> {
    let d = inst.dim();
    let (c, r) = inst.g.support().ok_or_else(|| Error::Domain("amplitude needs compact support".into()))?;
    let t = inst.t;
    let m = inst.m_star;
    let md = m.powi(d as i32);
    let k8 = inst.k.powi(8);
    let lambda1 = inst.k.powf(3.0 - 8.0 * inst.q as f64) * t;
    let pb = phase_bounds(inst.f.as_ref(), &c, r);
    let a1 = 2.0 * k8 * pb.grad_max / inst.k.powf(3.0 - 8.0 * inst.q as f64);
    let p_radius = a1 / k8 * lambda1 / m;

    let zero = Complex64::new(0.0, 0.0);
    let mut lo = vec![0i64; d];
    let mut hi = vec![0i64; d];
    for k in 0..d {
        lo[k] = ((t * pb.grad_lo[k]) / m - opts.p_margin).floor() as i64;
        hi[k] = ((t * pb.grad_hi[k]) / m + opts.p_margin).ceil() as i64;
    }
    let ps = enumerate_box(&lo, &hi, opts.max_p)?;
    let quad = inst.f.quadratic();
    let order_used = if quad.is_some() { opts.order.max(1) } else { 1 };

    if let Some((a, b, c0)) = quad {
        let (det_a, sig) = sym_parts(&a, d)?;
        let am = DMatrix::from_row_slice(d, d, &a);
        let ainv = am.clone().try_inverse().ok_or_else(|| Error::Inapplicable("phase Hessian is singular".into()))?;
        // L = Σ (B^{-1})_{kl} ∂_k ∂_l with B = 2πT A
        let binv: Vec<f64> = (0..d * d).map(|i| ainv[(i / d, i % d)] / (2.0 * PI * t)).collect();
        let pref = Complex64::from_polar(1.0 / (t.powi(d as i32) * det_a).sqrt(), PI * sig as f64 / 4.0);
        let results: Vec<Option<CriticalPoint>> = ps
            .par_iter()
            .map(|p| {
                let w: Vec<f64> = (0..d).map(|k| m * p[k] as f64 / t - b[k]).collect();
                let y = ainv.clone() * DVector::from_column_slice(&w);
                let y: Vec<f64> = y.iter().cloned().collect();
                if dist2(&y, &c) > r * r {
                    return None;
                }
                let u = inst.g.jet(&jet_at(&y, 2 * (order_used - 1)));
                let mut series = Complex64::new(0.0, 0.0);
                let mut coef = Complex64::new(1.0, 0.0);
                for j in 0..order_used {
                    series += coef * apply_l_power(&u, &binv, d, j);
                    coef *= Complex64::new(0.0, 0.5) / (j as f64 + 1.0);
                }
                let fq = Quadratic { a: a.clone(), b: b.clone(), c: c0 }.value(&y);
                let pm: Vec<f64> = p.iter().map(|&v| v as f64 * m).collect();
                let ph = t * fq - dotp(&pm, &y);
                let value = Complex64::from_polar(md, 2.0 * PI * frac(ph)) * pref * series;
                Some(CriticalPoint { p: p.clone(), z: y.iter().map(|v| v / k8).collect(), value })
            })
            .collect();
        let critical_points: Vec<CriticalPoint> = results.into_iter().flatten().collect();
        let vals: Vec<Complex64> = critical_points.iter().map(|c| c.value).collect();
        let transformed = pairwise(&vals);
        return Ok(finish_b(lambda1, p_radius, ps.len(), order_used, critical_points, 0, &pb, transformed, direct));
    }

    let seeds = support_samples(&c, r * 0.9, opts.seeds);
    let dedup = pb.r1.max(1e-9 * r.max(1e-300));
    let results: Vec<Result<(Vec<CriticalPoint>, usize, usize)>> = ps
        .par_iter()
        .map(|p| {
            let w: Vec<f64> = p.iter().map(|&v| m * v as f64 / t).collect();
            let mut found: Vec<Vec<f64>> = Vec::new();
            let mut best = f64::INFINITY;
            for s in &seeds {
                let (y, res, ok) = critical_point(inst.f.as_ref(), &w, s);
                if dist2(&y, &c) <= 2.25 * r * r {
                    best = best.min(res);
                }
                if ok && dist2(&y, &c) <= r * r && !found.iter().any(|z| dist2(z, &y).sqrt() < dedup) {
                    found.push(y);
                }
            }
            let mut pts = Vec::new();
            if found.is_empty() {
                if best <= 1e-3 * (1.0 + norm(&w)) {
                    if d > 2 {
                        return Ok((pts, 0, 1));
                    }
                    let v = oscillatory_integral(inst, p)?;
                    pts.push(CriticalPoint { p: p.clone(), z: Vec::new(), value: v });
                    return Ok((pts, 1, 0));
                }
                return Ok((pts, 0, 0));
            }
            let pm: Vec<f64> = p.iter().map(|&v| v as f64 * m).collect();
            for y in found {
                let j = inst.f.jet(&jet_at(&y, 2));
                let (det_h, sig) = sym_parts(&j.hessian(), d)?;
                let g = inst.g.value(&y);
                let ph = t * j.value() - dotp(&pm, &y);
                let amp = md * g / (t.powi(d as i32) * det_h).sqrt();
                let value = Complex64::from_polar(amp, 2.0 * PI * frac(ph) + PI * sig as f64 / 4.0);
                pts.push(CriticalPoint { p: p.clone(), z: y.iter().map(|v| v / k8).collect(), value });
            }
            Ok((pts, 0, 0))
        })
        .collect();
    let mut critical_points = Vec::new();
    let mut fallbacks = 0;
    let mut unresolved = 0;
    for r in results {
        let (pts, fb, un) = r?;
        fallbacks += fb;
        unresolved += un;
        critical_points.extend(pts);
    }
    let vals: Vec<Complex64> = critical_points.iter().map(|c| c.value).collect();
    let transformed = if vals.is_empty() { zero } else { pairwise(&vals) };
    let mut out = finish_b(lambda1, p_radius, ps.len(), order_used, critical_points, fallbacks, &pb, transformed, direct);
    out.unresolved = unresolved;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn finish_b(
    lambda1: f64,
    p_radius: f64,
    p_count: usize,
    order_used: usize,
    critical_points: Vec<CriticalPoint>,
    fallbacks: usize,
    pb: &PhaseBounds,
    transformed: Complex64,
    direct: Complex64,
) -> BStep {
    let residual = (direct - transformed).norm();
    let relative_residual = if direct.norm() > 0.0 { residual / direct.norm() } else { residual };
    BStep {
        lambda1,
        p_radius,
        p_count,
        order_used,
        critical_points,
        fallbacks,
        unresolved: 0,
        ift_r1: pb.r1,
        ift_r2: pb.r2,
        transformed,
        direct,
        residual,
        relative_residual,
    }
}

fn r(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// The exponents of the proposition, exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionExponents {
    pub d: u32,
    pub q: u32,
    /// `K`-exponent inside the bracket of the bound.
    pub k_exponent: BigRational,
    /// `M_*`-exponent inside the bracket.
    pub m_exponent: BigRational,
    /// Outer power `d / (2Q + 2(Q-1)d)`.
    pub outer: BigRational,
    /// `M_* >= K^{res_m}`.
    pub res_m: BigRational,
    pub i_value: BigRational,
    /// `T >= K^{restriction_k} M_*^{restriction_m}`.
    pub restriction_k: BigRational,
    pub restriction_m: BigRational,
    /// `H_weyl <= c_5 K^{h_window_k} M_*`.
    pub h_window_k: BigRational,
    /// `H_weyl = c_5 (K^{h_choice_k} T^{-d/2} M_*^{(q/2+1)d})^{h_choice_outer}`.
    pub h_choice_k: BigRational,
    pub h_choice_outer: BigRational,
}

pub fn proposition_exponents(d: u32, q: u32) -> Result<PropositionExponents> {
    if d < 3 {
        return Err(Error::Inapplicable(format!("the proposition needs d >= 3, got {d}")));
    }
    if q == 0 || q > 30 {
        return domain("q must lie in 1..=30");
    }
    let x = r(d as i64);
    let qq = r(q as i64);
    let big_q = r(1i64 << q);
    let one = BigRational::one();
    let five_q4 = r(5) * &qq + r(4);
    let bracket = r(2) * &five_q4 * x.pow(3) + (r(3) * &qq + r(19)) * x.pow(2)
        - (r(13) * &qq + r(24)) * &x
        - r(6);
    let k_exponent = -(&bracket) / (&x * (&x - &one));
    let m_exponent = r(2) * (&big_q - &one) * &x + r(2) * &big_q - &qq - r(2);
    let outer = &x / (r(2) * &big_q + r(2) * (&big_q - &one) * &x);
    let res_m = -(r(4) * &five_q4 * &x) - r(37) + r(4) / (&x - &one);
    let i_value = r(2) * &five_q4 * (r(2) * &big_q - r(3)) * x.pow(4)
        + (r(-35) + r(25) * &qq + r(40) * &big_q + r(2) * &qq * &big_q) * x.pow(3)
        + (r(60) + r(5) * &qq - &big_q - r(17) * &qq * &big_q) * x.pow(2)
        + (r(6) - r(60) * &big_q - r(5) * &qq * &big_q) * &x
        - r(6) * &big_q;
    let restriction_k = -(&i_value) / (&big_q * (&x - &one) * x.pow(2));
    let restriction_m = &qq + r(2) / &big_q - r(2) / &x;
    let h_window_k = (r(6) * &five_q4 * x.pow(3) - r(5) * (r(5) * &qq - r(7)) * x.pow(2)
        - r(5) * (&qq + r(12)) * &x
        - r(6))
        / (r(2) * (&x - &one) * &x);
    let h_choice_k = &bracket / (r(2) * (&x - &one));
    let h_choice_outer = &big_q / (&big_q + (&big_q - &one) * &x);
    Ok(PropositionExponents {
        d,
        q,
        k_exponent,
        m_exponent,
        outer,
        res_m,
        i_value,
        restriction_k,
        restriction_m,
        h_window_k,
        h_choice_k,
        h_choice_outer,
    })
}

/// Hypothesis checks of the proposition, in logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionReport {
    pub exponents: PropositionExponents,
    /// `ln M_* - res_m ln K` (nonnegative when the hypothesis holds).
    pub res_m_margin: f64,
    /// `ln T - restriction_k ln K - restriction_m ln M_*`.
    pub restriction_margin: f64,
    pub holds: bool,
    pub bound: f64,
}

/// Bound of the proposition without its implicit constant.
pub fn proposition_bound(inst: &ExpSumInstance) -> Result<(f64, PropositionReport)> {
    inst.validate()?;
    let e = proposition_exponents(inst.dim() as u32, inst.q)?;
    let lk = inst.k.ln();
    let lm = inst.m_star.ln();
    let lt = inst.t.ln();
    let res_m_margin = lm - to_f64(&e.res_m) * lk;
    let restriction_margin = lt - to_f64(&e.restriction_k) * lk - to_f64(&e.restriction_m) * lm;
    let log_bound = to_f64(&e.outer) * (to_f64(&e.k_exponent) * lk + lt + to_f64(&e.m_exponent) * lm);
    let bound = log_bound.exp();
    let holds = res_m_margin >= 0.0 && restriction_margin >= 0.0;
    let report = PropositionReport { exponents: e, res_m_margin, restriction_margin, holds, bound };
    if !holds {
        return Err(Error::Inapplicable(format!(
            "hypotheses violated: ln M_* margin {res_m_margin:.4}, ln T margin {restriction_margin:.4}"
        )));
    }
    Ok((bound, report))
}

/// Same as [`proposition_bound`] but returns the report even when the
/// hypotheses fail.
pub fn proposition_report(inst: &ExpSumInstance) -> Result<PropositionReport> {
    match proposition_bound(inst) {
        Ok((_, rep)) => Ok(rep),
        Err(Error::Inapplicable(_)) if inst.dim() >= 3 => {
            let e = proposition_exponents(inst.dim() as u32, inst.q)?;
            let lk = inst.k.ln();
            let lm = inst.m_star.ln();
            let lt = inst.t.ln();
            let res_m_margin = lm - to_f64(&e.res_m) * lk;
            let restriction_margin = lt - to_f64(&e.restriction_k) * lk - to_f64(&e.restriction_m) * lm;
            let bound = (to_f64(&e.outer) * (to_f64(&e.k_exponent) * lk + lt + to_f64(&e.m_exponent) * lm)).exp();
            Ok(PropositionReport { exponents: e, res_m_margin, restriction_margin, holds: false, bound })
        }
        Err(e) => Err(e),
    }
}

/// The Weyl shift length chosen in the proof and the upper end of its window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HWeylWindow {
    pub choice: f64,
    pub upper: f64,
    pub inside: bool,
}

pub fn h_weyl_window(d: u32, q: u32, k: f64, t: f64, m_star: f64, c5: f64) -> Result<HWeylWindow> {
    let e = proposition_exponents(d, q)?;
    let df = d as f64;
    let qf = q as f64;
    let inner = to_f64(&e.h_choice_k) * k.ln() - df / 2.0 * t.ln() + (qf / 2.0 + 1.0) * df * m_star.ln();
    let choice = c5 * (to_f64(&e.h_choice_outer) * inner).exp();
    let upper = c5 * (to_f64(&e.h_window_k) * k.ln()).exp() * m_star;
    Ok(HWeylWindow { choice, upper, inside: choice > 1.0 && choice <= upper })
}

/// Whether the restriction on `T` is exactly the condition that the proof's
/// choice of `H_weyl` sits below the upper end of its window (same `c_5`),
/// checked on the exponents of `K` and `M_*` in rational arithmetic.
pub fn window_matches_restriction(d: u32, q: u32) -> Result<bool> {
    let e = proposition_exponents(d, q)?;
    let x = r(d as i64);
    let s = &e.h_choice_outer;
    let two = r(2);
    let k_needed = &two / &x * &e.h_choice_k - &two * &e.h_window_k / (&x * s);
    let m_needed = &two / (&x * s) * ((r(e.q as i64) / &two + BigRational::one()) * &x * s - BigRational::one());
    Ok(k_needed == e.restriction_k && m_needed == e.restriction_m)
}

/// Upper bound on `T` below which the proof's bound beats the trivial one:
/// `T < c_7 K^{-k_exponent} M_*^{q+2}`.
pub fn remove1_limit(d: u32, q: u32, k: f64, m_star: f64, c7: f64) -> Result<f64> {
    let e = proposition_exponents(d, q)?;
    Ok(c7 * (-to_f64(&e.k_exponent) * k.ln()).exp() * m_star.powi(q as i32 + 2))
}

/// Measured implicit constants of the instance hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub boundary_distance: f64,
    /// `dist(supp G, Ω^c) / K^{d+2q+13-1/(d-1)}`.
    pub boundary_ratio: f64,
    /// `max |D^ν G| K^{(d+2q+13-1/(d-1))|ν|}` over sampled points, `|ν| <= 2`.
    pub amplitude_constant: f64,
    /// `max |D^ν F| / K^{-6|ν|}` (`|ν| <= 1`) or `/ K^{3-8|ν|}` (`2 <= |ν| <= 3`).
    pub phase_constant: f64,
    /// `min |det ∇² D^μ F| / K^{-3(q+3)d+5-1/(d-1)}`.
    pub lower_constant: f64,
    pub samples: usize,
}

pub fn check_hypotheses(inst: &ExpSumInstance, samples: usize, seed: u64) -> Result<HypothesisReport> {
    inst.validate()?;
    let d = inst.dim();
    if d < 2 {
        return domain("hypothesis checks need d >= 2");
    }
    let df = d as f64;
    let q = inst.q as usize;
    let k = inst.k;
    let (c, rad) = inst.g.support().unwrap();
    let boundary_distance = inst.omega_radius - (norm(&c) + rad);
    let amp_exp = df + 2.0 * q as f64 + 13.0 - 1.0 / (df - 1.0);
    let boundary_ratio = boundary_distance / k.powf(amp_exp);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amplitude_constant: f64 = 0.0;
    let mut phase_constant: f64 = 0.0;
    let mut lower_constant = f64::INFINITY;
    let lower_scale = k.powf(-3.0 * (q as f64 + 3.0) * df + 5.0 - 1.0 / (df - 1.0));
    let order = (q + 2).max(3);
    for _ in 0..samples {
        let dir = random_unit(&mut rng, d);
        let s: f64 = rng.random::<f64>().powf(1.0 / df);
        let yg: Vec<f64> = (0..d).map(|i| c[i] + s * rad * dir[i]).collect();
        let gj = inst.g.jet(&jet_at(&yg, 2));
        for ord in 0..=2 {
            for (_, v) in gj.derivatives_of_order(ord) {
                amplitude_constant = amplitude_constant.max(v.abs() * k.powf(amp_exp * ord as f64));
            }
        }
        let yf: Vec<f64> = dir.iter().map(|v| v * s * inst.omega_radius * 0.999).collect();
        let fj = inst.f.jet(&jet_at(&yf, order));
        for ord in 0..=3 {
            let scale = if ord <= 1 { k.powf(-6.0 * ord as f64) } else { k.powf(3.0 - 8.0 * ord as f64) };
            for (_, v) in fj.derivatives_of_order(ord) {
                phase_constant = phase_constant.max(v.abs() / scale);
            }
        }
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut m = vec![0u8; d];
                m[0] += 1;
                m[d - 1] += (q - 1) as u8;
                m[i] += 1;
                m[j] += 1;
                h[i * d + j] = fj.derivative(&m);
            }
        }
        let det = DMatrix::from_row_slice(d, d, &h).determinant().abs();
        lower_constant = lower_constant.min(det / lower_scale);
    }
    Ok(HypothesisReport {
        boundary_distance,
        boundary_ratio,
        amplitude_constant,
        phase_constant,
        lower_constant,
        samples,
    })
}

/// Full record of one run: direct sum, A-steps, B-step and the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessTrace {
    pub d: usize,
    pub q: u32,
    pub t: f64,
    pub m_star: f64,
    pub k: f64,
    pub direct: Complex64,
    pub a_stages: Vec<AStage>,
    pub b_stage: Option<BStep>,
    pub b_error: Option<String>,
    pub proposition: Option<PropositionReport>,
    pub hypotheses: Option<HypothesisReport>,
}

/// `q` A-steps with shift length `h_weyl`, then the B-step on the result.
pub fn run_process(inst: &ExpSumInstance, h_weyl: usize, opts: &BOptions) -> Result<ProcessTrace> {
    inst.validate()?;
    let direct = eval_sum(inst)?;
    let (a_stages, last) = a_process(inst, inst.q as usize, h_weyl)?;
    let (b_stage, b_error) = match b_process(&last, opts) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let proposition = if inst.dim() >= 3 { proposition_report(inst).ok() } else { None };
    let hypotheses = check_hypotheses(inst, 64, 1).ok();
    Ok(ProcessTrace {
        d: inst.dim(),
        q: inst.q,
        t: inst.t,
        m_star: inst.m_star,
        k: inst.k,
        direct,
        a_stages,
        b_stage,
        b_error,
        proposition,
        hypotheses,
    })
}

/// True when every exponent is a finite rational with nonzero denominator.
pub fn exponents_are_finite(e: &PropositionExponents) -> bool {
    [&e.k_exponent, &e.m_exponent, &e.outer, &e.res_m, &e.i_value, &e.restriction_k, &e.restriction_m, &e.h_window_k, &e.h_choice_k, &e.h_choice_outer]
        .iter()
        .all(|v| to_f64(v).is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_instance(t: f64, m: f64) -> ExpSumInstance {
        ExpSumInstance {
            t,
            m_star: m,
            g: Arc::new(Gaussian { center: vec![0.05, -0.02], width: 0.12, cutoff: 8.6, height: 1.0 }),
            f: Arc::new(Quadratic { a: vec![1.0, 0.3, 0.3, 1.6], b: vec![0.2, -0.1], c: 0.0 }),
            k: 0.9,
            q: 1,
            omega_radius: 1.2,
        }
    }

    #[test]
    fn flat_phase_sums_amplitude() {
        let mut inst = quad_instance(1.0, 20.0);
        inst.f = Arc::new(Quadratic { a: vec![0.0; 4], b: vec![0.0; 2], c: 0.0 });
        let s = eval_sum(&inst).unwrap();
        assert!(s.im.abs() < 1e-12 && s.re > 0.0);
        // integer-frequency linear phase is trivial on the lattice
        inst.t = 1.0;
        inst.f = Arc::new(Quadratic { a: vec![0.0; 4], b: vec![3.0 * 20.0, -20.0], c: 0.0 });
        let s2 = eval_sum(&inst).unwrap();
        assert!((s2 - s).norm() < 1e-9 * s.norm());
    }

    #[test]
    fn weyl_inequality_on_constant_and_random() {
        let seq = LatticeSeq::new(vec![0, 0], vec![12, 7], vec![Complex64::new(1.0, 0.0); 84]).unwrap();
        for h in 1..=7 {
            let w = weyl_step(&seq, h, &[1, 0]).unwrap();
            assert!(w.holds && w.lhs >= w.rhs / 2.0, "{h}: {} {}", w.lhs, w.rhs);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<Complex64> = (0..400).map(|_| Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0)).collect();
        let seq = LatticeSeq::new(vec![0], vec![400], vals).unwrap();
        let w = weyl_step(&seq, 20, &[1]).unwrap();
        assert!(w.holds && w.rhs > 10.0 * w.lhs);
        assert!(weyl_step(&seq, 0, &[1]).is_err());
    }

    #[test]
    fn differencing_matches_correlation() {
        let inst = ExpSumInstance::supersphere_support(2, 4, 1, 40.0, 12.0, 0.9).unwrap();
        let (stages, _) = a_process(&inst, 2, 4).unwrap();
        for s in stages {
            assert!(s.step.holds);
            assert!((s.differenced_sum - s.correlation).norm() <= 1e-9 * (1.0 + s.correlation.norm()));
        }
    }

    #[test]
    fn quadratic_b_process_converges_with_order() {
        let inst = quad_instance(900.0, 40.0);
        let direct = eval_sum(&inst).unwrap();
        let mut prev = f64::INFINITY;
        for order in 1..=3 {
            let b = b_process_with_direct(&inst, &BOptions { order, ..Default::default() }, direct).unwrap();
            assert!(b.relative_residual < prev);
            prev = b.relative_residual;
        }
        assert!(prev < 1e-4, "{prev}");
    }

    #[test]
    fn proposition_exponents_d5() {
        let e = proposition_exponents(5, 1).unwrap();
        assert!(exponents_are_finite(&e));
        assert!(proposition_exponents(2, 1).is_err());
    }
}
