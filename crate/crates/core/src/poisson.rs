//! Mollified Poisson-summation estimator of `P(t)` and its split into
//! Sum I (curved directions) and Sum II (nearly flat directions).
//!
//! With `ρ_ε(x) = ε^{-d} ρ(x/ε)` the smoothed count satisfies
//! `Σ_k (χ_{tB_θ} * ρ_ε)(k) − |B|t^d = t^d Σ_{k≠0} χ̂_{B_θ}(tk) ρ̂(εk)`.
//! The left side is the spatial route, the right side the spectral one.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exponents::{schedules, Omega};
use crate::fourier;
use crate::geometry::{self, golden_max, ConvexBody, Rotation, FLAT_TOL};
use crate::quadrature::{adaptive, spherical_bessel, GaussLegendre};

/// Frequency `t|k|` above which Sum I terms use the asymptotic main term.
pub const HYBRID_SWITCH: f64 = 30.0;

/// Mollifier tail below which dual terms are dropped.
pub const TAIL: f64 = 1e-10;

const TABLE_STEP: f64 = 1.0 / 64.0;
const TABLE_MAX: f64 = 96.0;

/// The bump `ρ(x) = c_d exp(−1/(1−|x|²))` on the unit ball, and its
/// radial Fourier profile on a table.
#[derive(Debug)]
pub struct Mollifier {
    d: usize,
    c: f64,
    table: Vec<f64>,
}

fn surface_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / statrs::function::gamma::gamma(d as f64 / 2.0)
}

/// `Γ(d/2)(2/x)^{d/2−1} J_{d/2−1}(x)`, equal to 1 at `x = 0`.
fn radial_kernel(d: usize, x: f64) -> f64 {
    if x < 1e-4 {
        return 1.0 - x * x / (2.0 * d as f64);
    }
    match d {
        1 => x.cos(),
        2 => libm::j0(x),
        3 => x.sin() / x,
        _ if d % 2 == 0 => {
            let nu = d / 2 - 1;
            statrs::function::gamma::gamma(d as f64 / 2.0) * (2.0 / x).powi(nu as i32) * libm::jn(nu as i32, x)
        }
        _ => {
            // J_{k+1/2}(x) = sqrt(2x/π) j_k(x)
            let k = (d - 3) / 2;
            let j = spherical_bessel(k + 1, x)[k];
            statrs::function::gamma::gamma(d as f64 / 2.0) * (2.0 / x).powf(d as f64 / 2.0 - 1.0) * (2.0 * x / PI).sqrt() * j
        }
    }
}

fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

impl Mollifier {
    fn build(d: usize) -> Mollifier {
        let g = GaussLegendre::get(16);
        let panels = 64;
        let mut nodes = Vec::with_capacity(panels * 16);
        let mut weights = Vec::with_capacity(panels * 16);
        for p in 0..panels {
            let a = p as f64 / panels as f64;
            let h = 0.5 / panels as f64;
            for (x, w) in g.nodes.iter().zip(&g.weights) {
                let r = a + h * (1.0 + x);
                nodes.push(r);
                weights.push(w * h * bump(r) * r.powi(d as i32 - 1));
            }
        }
        let mass: f64 = surface_area(d) * weights.iter().sum::<f64>();
        let c = 1.0 / mass;
        let n = (TABLE_MAX / TABLE_STEP) as usize + 1;
        let table: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let v = i as f64 * TABLE_STEP;
                let s: f64 =
                    nodes.iter().zip(&weights).map(|(r, w)| w * radial_kernel(d, 2.0 * PI * v * r)).sum();
                c * surface_area(d) * s
            })
            .collect();
        Mollifier { d, c, table }
    }

    /// Cached mollifier for dimension `d`.
    pub fn get(d: usize) -> Arc<Mollifier> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Mollifier>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut g = cache.lock().expect("mollifier cache poisoned");
        g.entry(d).or_insert_with(|| Arc::new(Mollifier::build(d))).clone()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `ρ(x)` as a function of `r = |x|`.
    pub fn density(&self, r: f64) -> f64 {
        self.c * bump(r)
    }

    /// `ρ̂(v)` as a function of `v = |ξ|`, by local degree-7 interpolation.
    pub fn hat(&self, v: f64) -> f64 {
        let v = v.abs();
        if v >= TABLE_MAX - 4.0 * TABLE_STEP {
            return 0.0;
        }
        let x = v / TABLE_STEP;
        let i0 = (x.floor() as isize - 3).max(0) as usize;
        let mut s = 0.0;
        for i in i0..i0 + 8 {
            let mut l = 1.0;
            for j in i0..i0 + 8 {
                if j != i {
                    l *= (x - j as f64) / (i as f64 - j as f64);
                }
            }
            s += l * self.table[i];
        }
        s
    }

    /// `sup{v : |ρ̂(v)| >= tol}` on the table.
    pub fn decay_radius(&self, tol: f64) -> f64 {
        let i = self.table.iter().rposition(|v| v.abs() >= tol).unwrap_or(0);
        (i + 1) as f64 * TABLE_STEP
    }

    /// `G(r) = ∫_0^r ρ(s) s ds` for d = 2, via `∫_0^x e^{−1/w} dw = x e^{−1/x} − E_1(1/x)`.
    fn planar_mass(&self, r: f64) -> f64 {
        let e = |x: f64| -> f64 {
            if x <= 1.0 / 700.0 {
                0.0
            } else {
                x * (-1.0 / x).exp() - statrs::function::exponential::integral(1.0 / x, 1).unwrap_or(0.0)
            }
        };
        let r = r.clamp(0.0, 1.0);
        0.5 * self.c * (e(1.0) - e(1.0 - r * r))
    }
}

/// `ρ̂(εk)` for the standard bump.
pub fn mollifier_hat(eps: f64, k: &[f64]) -> Result<f64> {
    if !(eps > 0.0) {
        return domain("ε must be positive");
    }
    Ok(Mollifier::get(k.len()).hat(eps * geometry::norm(k)))
}

/// Which evaluator produces `χ̂(tk)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evaluator {
    /// Direct quadrature below [`HYBRID_SWITCH`] or on D2, asymptotic main
    /// term otherwise.
    Hybrid,
    DirectOnly,
    /// Closed forms only (balls, ellipsoids).
    ExactOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluatorCounts {
    pub exact: u64,
    pub direct: u64,
    pub asymptotic: u64,
}

impl EvaluatorCounts {
    fn add(&mut self, o: &EvaluatorCounts) {
        self.exact += o.exact;
        self.direct += o.direct;
        self.asymptotic += o.asymptotic;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    D1,
    D2,
}

/// Curvature threshold classifying dual directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionSplit {
    pub delta: f64,
}

impl DirectionSplit {
    /// D1 when `min(K_k, K_{−k}) >= δ`.
    pub fn classify(&self, body: &ConvexBody, rot: &Rotation, k: &[f64]) -> Result<Region> {
        let neg: Vec<f64> = k.iter().map(|v| -v).collect();
        let kp = geometry::curvature_or_zero(body, rot, k)?;
        if kp < self.delta {
            return Ok(Region::D2);
        }
        let km = geometry::curvature_or_zero(body, rot, &neg)?;
        Ok(if km < self.delta { Region::D2 } else { Region::D1 })
    }

    /// Fraction of nonzero `k` with `|k| <= radius` classified D2.
    pub fn d2_fraction(&self, body: &ConvexBody, rot: &Rotation, radius: f64) -> Result<f64> {
        let mut total = 0u64;
        let mut d2 = 0u64;
        for k in ball_points(body.dim(), radius) {
            total += 1;
            if self.classify(body, rot, &k)? == Region::D2 {
                d2 += 1;
            }
        }
        Ok(d2 as f64 / total.max(1) as f64)
    }
}

fn ball_points(d: usize, radius: f64) -> Vec<Vec<f64>> {
    let r = radius.floor() as i64;
    let mut out = Vec::new();
    let mut k = vec![-r; d];
    loop {
        let n2: i64 = k.iter().map(|v| v * v).sum();
        if n2 > 0 && (n2 as f64) <= radius * radius {
            out.push(k.iter().map(|&v| v as f64).collect());
        }
        let mut i = 0;
        loop {
            if i == d {
                return out;
            }
            k[i] += 1;
            if k[i] > r {
                k[i] = -r;
                i += 1;
            } else {
                break;
            }
        }
    }
}

/// Options shared by [`spectral_estimate`] and [`split_sums`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumOptions {
    pub evaluator: Evaluator,
    /// Defaults to `sup{v : |ρ̂(v)| >= TAIL}/ε`.
    pub truncation_radius: Option<f64>,
    /// Also accumulate the stationary-phase form of Sum I.
    pub stationary_form: bool,
    /// Skip evaluating D1 terms (Sum I reported as 0).
    pub skip_d1: bool,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions { evaluator: Evaluator::Hybrid, truncation_radius: None, stationary_form: false, skip_d1: false }
    }
}

impl SumOptions {
    pub fn with(evaluator: Evaluator) -> SumOptions {
        SumOptions { evaluator, ..SumOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifiedEstimate {
    pub t: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    /// `t^d Σ_{0<|k|<=R} χ̂(tk) ρ̂(εk)`.
    pub spectral_sum: Complex64,
    pub sum_i: Complex64,
    pub sum_ii: Complex64,
    /// `t^d Σ_{D1}` of the two-term main part, when requested.
    pub sum_i_stationary: Option<Complex64>,
    pub truncation_radius: f64,
    pub terms: u64,
    pub d2_terms: u64,
    pub counts: EvaluatorCounts,
    /// `Σ_k (χ_{tB_θ} * ρ_ε)(k) − |B|t^d`, when computed.
    pub spatial_value: Option<f64>,
}

impl MollifiedEstimate {
    /// Adds the spatial route (d = 2).
    pub fn with_spatial(mut self, body: &ConvexBody, rot: &Rotation) -> Result<Self> {
        let n = smoothed_count(body, rot, self.t, self.epsilon)?;
        let vol = crate::lattice::volume(body)?.value;
        self.spatial_value = Some(n - vol * self.t.powi(body.dim() as i32));
        Ok(self)
    }
}

pub(crate) fn pairwise(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 8 {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b);
    }
    let m = xs.len() / 2;
    pairwise(&xs[..m]) + pairwise(&xs[m..])
}

struct RowSum {
    i: Vec<Complex64>,
    ii: Vec<Complex64>,
    stat: Vec<Complex64>,
    terms: u64,
    d2: u64,
    counts: EvaluatorCounts,
}

fn term_value(
    body: &ConvexBody,
    rot: &Rotation,
    k: &[f64],
    t: f64,
    region: Region,
    positive: bool,
    ev: Evaluator,
    counts: &mut EvaluatorCounts,
) -> Result<Complex64> {
    let nk = geometry::norm(k);
    let xi: Vec<f64> = k.iter().map(|v| v / nk).collect();
    let lambda = t * nk;
    match ev {
        Evaluator::ExactOnly => {
            let zeta: Vec<f64> = k.iter().map(|v| v * t).collect();
            counts.exact += 1;
            fourier::chi_hat_closed_form(body, rot, &zeta)
                .ok_or_else(|| Error::Unsupported(format!("no closed-form transform for {}", body.name())))
        }
        Evaluator::DirectOnly => {
            counts.direct += 1;
            fourier::chi_hat_direct(body, rot, &xi, lambda)
        }
        Evaluator::Hybrid => {
            if region == Region::D1 && positive && lambda >= HYBRID_SWITCH {
                if let Ok(v) = fourier::chi_hat_asymptotic(body, rot, &xi, lambda) {
                    counts.asymptotic += 1;
                    return Ok(v);
                }
            }
            counts.direct += 1;
            fourier::chi_hat_direct(body, rot, &xi, lambda)
        }
    }
}

fn check_inputs(body: &ConvexBody, rot: &Rotation, t: f64, eps: f64) -> Result<()> {
    if rot.dim() != body.dim() {
        return domain("rotation and body dimensions differ");
    }
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("t must be positive, got {t}"));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return domain(format!("ε must be positive, got {eps}"));
    }
    Ok(())
}

fn run_sums(
    body: &ConvexBody,
    rot: &Rotation,
    t: f64,
    eps: f64,
    split: Option<DirectionSplit>,
    opts: SumOptions,
) -> Result<MollifiedEstimate> {
    check_inputs(body, rot, t, eps)?;
    let d = body.dim();
    let moll = Mollifier::get(d);
    let radius = match opts.truncation_radius {
        Some(r) if r > 0.0 => r,
        Some(r) => return domain(format!("truncation radius must be positive, got {r}")),
        None => moll.decay_radius(TAIL) / eps,
    };
    let rk = radius.floor() as i64;
    let td = t.powi(d as i32);
    let rows: Vec<i64> = (-rk..=rk).collect();
    let results: Vec<Result<RowSum>> = rows
        .par_iter()
        .map(|&k0| {
            let mut row = RowSum { i: Vec::new(), ii: Vec::new(), stat: Vec::new(), terms: 0, d2: 0, counts: EvaluatorCounts::default() };
            let rest = radius * radius - (k0 * k0) as f64;
            if rest < 0.0 {
                return Ok(row);
            }
            let sub: Vec<Vec<f64>> = if d == 1 {
                vec![vec![]]
            } else {
                let mut pts = ball_points(d - 1, rest.sqrt());
                pts.push(vec![0.0; d - 1]);
                pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                pts
            };
            for s in sub {
                let mut k = Vec::with_capacity(d);
                k.push(k0 as f64);
                k.extend_from_slice(&s);
                if k.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let w = moll.hat(eps * geometry::norm(&k));
                if w == 0.0 {
                    continue;
                }
                row.terms += 1;
                let (region, positive) = match split {
                    Some(sp) => (sp.classify(body, rot, &k)?, true),
                    None => {
                        let pos = matches!(opts.evaluator, Evaluator::Hybrid)
                            && DirectionSplit { delta: FLAT_TOL }.classify(body, rot, &k)? == Region::D1;
                        (Region::D1, pos)
                    }
                };
                if region == Region::D2 {
                    row.d2 += 1;
                } else if opts.skip_d1 {
                    continue;
                }
                let v = term_value(body, rot, &k, t, region, positive, opts.evaluator, &mut row.counts)? * (w * td);
                match region {
                    Region::D1 => {
                        row.i.push(v);
                        if opts.stationary_form {
                            let nk = geometry::norm(&k);
                            let xi: Vec<f64> = k.iter().map(|x| x / nk).collect();
                            row.stat.push(fourier::chi_hat_asymptotic(body, rot, &xi, t * nk)? * (w * td));
                        }
                    }
                    Region::D2 => row.ii.push(v),
                }
            }
            Ok(row)
        })
        .collect();
    let mut i_rows = Vec::new();
    let mut ii_rows = Vec::new();
    let mut stat_rows = Vec::new();
    let mut terms = 0;
    let mut d2 = 0;
    let mut counts = EvaluatorCounts::default();
    for r in results {
        let r = r?;
        i_rows.push(pairwise(&r.i));
        ii_rows.push(pairwise(&r.ii));
        stat_rows.push(pairwise(&r.stat));
        terms += r.terms;
        d2 += r.d2;
        counts.add(&r.counts);
    }
    let sum_i = pairwise(&i_rows);
    let sum_ii = pairwise(&ii_rows);
    Ok(MollifiedEstimate {
        t,
        epsilon: eps,
        delta: split.map(|s| s.delta),
        spectral_sum: sum_i + sum_ii,
        sum_i,
        sum_ii,
        sum_i_stationary: if opts.stationary_form { Some(pairwise(&stat_rows)) } else { None },
        truncation_radius: radius,
        terms,
        d2_terms: d2,
        counts,
        spatial_value: None,
    })
}

/// Truncated spectral sum `t^d Σ_{0<|k|<=R} χ̂_{B_θ}(tk) ρ̂(εk)`.
pub fn spectral_estimate(body: &ConvexBody, rot: &Rotation, t: f64, eps: f64, opts: SumOptions) -> Result<MollifiedEstimate> {
    run_sums(body, rot, t, eps, None, opts)
}

/// Spectral sum split by the curvature threshold `δ`.
pub fn split_sums(
    body: &ConvexBody,
    rot: &Rotation,
    t: f64,
    eps: f64,
    delta: f64,
    opts: SumOptions,
) -> Result<MollifiedEstimate> {
    check_inputs(body, rot, t, eps)?;
    let kmax = geometry::max_curvature(body)?;
    if !(delta > 0.0 && delta < kmax) {
        return domain(format!("δ = {delta} must lie in (0, {kmax}) (the maximal curvature)"));
    }
    run_sums(body, rot, t, eps, Some(DirectionSplit { delta }), opts)
}

/// `(ε, δ)` for dilation `t`: dyadic `2^{−jα}, 2^{−jβ}` with `j = ⌊log₂ t⌋`,
/// or the continuous `t^{−α}, t^{−β}`.
pub fn schedule_parameters(d: u32, omega: Omega, t: f64, continuous: bool) -> Result<(f64, f64)> {
    if !(t >= 1.0) {
        return domain("schedules need t >= 1");
    }
    let s = schedules(d, omega)?;
    let x = if continuous { t } else { 2f64.powi(t.log2().floor() as i32) };
    Ok((x.powf(-s.alpha_f64()), x.powf(-s.beta_f64())))
}

/// Smoothed count `Σ_k (χ_{tB_θ} * ρ_ε)(k)` evaluated in space (d = 2).
pub fn smoothed_count(body: &ConvexBody, rot: &Rotation, t: f64, eps: f64) -> Result<f64> {
    if body.dim() != 2 || rot.dim() != 2 {
        return Err(Error::Unsupported("spatial smoothed count is implemented for d = 2".into()));
    }
    if !(eps > 0.0) {
        return domain("ε must be positive");
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let l = body
        .gauge_lipschitz()
        .ok_or_else(|| Error::Inapplicable("gauge Lipschitz constant unknown".into()))?;
    let moll = Mollifier::get(2);
    let box_r = (body.circumradius() * t + eps).ceil() as i64 + 1;
    let mut inner = 0u64;
    let mut shell = Vec::new();
    for x in -box_r..=box_r {
        for y in -box_r..=box_r {
            let p = [x as f64, y as f64];
            let g = body.gauge(&rot.apply_t(&p));
            if g <= t - l * eps {
                inner += 1;
            } else if g < t + l * eps {
                shell.push(p);
            }
        }
    }
    let vals: Vec<f64> = shell.par_iter().map(|p| shell_value(body, rot, &moll, t, eps, p)).collect();
    Ok(inner as f64 + vals.iter().sum::<f64>())
}

/// `(χ_{tB_θ} * ρ_ε)(p)` at a point near the boundary shell (d = 2).
pub fn smoothed_point_value(body: &ConvexBody, rot: &Rotation, t: f64, eps: f64, p: [f64; 2]) -> f64 {
    shell_value(body, rot, &Mollifier::get(2), t, eps, &p)
}

/// Hit interval `[r1, r2] ⊂ [0, 1]` of `p − εr u` with `tB_θ`.
fn segment(body: &ConvexBody, rot: &Rotation, t: f64, eps: f64, p: &[f64; 2], phi: f64) -> Option<(f64, f64)> {
    let (s, c) = phi.sin_cos();
    let f = |r: f64| -> f64 {
        let q = [p[0] - eps * r * c, p[1] - eps * r * s];
        body.gauge(&rot.apply_t(&q)) - t
    };
    let root = |mut a: f64, mut b: f64, inside_at_a: bool| -> f64 {
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if (f(m) <= 0.0) == inside_at_a {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    if f(0.0) <= 0.0 {
        let r2 = if f(1.0) <= 0.0 { 1.0 } else { root(0.0, 1.0, true) };
        return Some((0.0, r2));
    }
    let neg = |r: f64| -f(r);
    let rs = golden_max(&neg, 0.0, 1.0, 1e-12);
    if f(rs) > 0.0 {
        return None;
    }
    let r1 = root(rs, 0.0, true);
    let r2 = if f(1.0) <= 0.0 { 1.0 } else { root(rs, 1.0, true) };
    Some((r1, r2))
}

fn shell_value(body: &ConvexBody, rot: &Rotation, moll: &Mollifier, t: f64, eps: f64, p: &[f64; 2]) -> f64 {
    let integrand = |phi: f64| -> f64 {
        match segment(body, rot, t, eps, p, phi) {
            Some((r1, r2)) => moll.planar_mass(r2) - moll.planar_mass(r1),
            None => 0.0,
        }
    };
    let inside = body.gauge(&rot.apply_t(p)) <= t;
    if inside {
        // kinks appear at tangent directions when p sits on the boundary
        return adaptive(integrand, 0.0, 2.0 * PI, 1e-13, 16, 4000).0;
    }
    // adaptive rule over the angular interval of hits
    let grid = 720;
    let hit = |phi: f64| segment(body, rot, t, eps, p, phi).is_some_and(|(a, b)| b > a);
    let flags: Vec<bool> = (0..grid).map(|i| hit(2.0 * PI * i as f64 / grid as f64)).collect();
    let Some(miss) = flags.iter().position(|h| !h) else {
        return 0.0;
    };
    let idx = |j: usize| (miss + j) % grid;
    let Some(first) = (0..grid).find(|&j| flags[idx(j)]) else {
        return 0.0;
    };
    let last = (first..grid).take_while(|&j| flags[idx(j)]).last().unwrap_or(first);
    let ang = |j: usize| 2.0 * PI * (miss + j) as f64 / grid as f64;
    let refine = |mut out: f64, mut inn: f64| -> f64 {
        for _ in 0..50 {
            let m = 0.5 * (out + inn);
            if hit(m) {
                inn = m;
            } else {
                out = m;
            }
        }
        0.5 * (out + inn)
    };
    let a = refine(ang(first - 1), ang(first));
    let b = refine(ang(last + 1), ang(last));
    adaptive(integrand, a, b, 1e-13, 16, 4000).0
}

/// Mollifier sandwich around the exact remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    /// Shell constant (gauge Lipschitz bound).
    pub c: f64,
}

/// `N_ε(t − cε) − |B|t^d <= P(t) <= N_ε(t + cε) − |B|t^d`.
pub fn sandwich_bounds(body: &ConvexBody, rot: &Rotation, t: f64, eps: f64) -> Result<Sandwich> {
    let c = body
        .gauge_lipschitz()
        .ok_or_else(|| Error::Inapplicable("shell constant needs the gauge Lipschitz bound".into()))?;
    if !(t >= 0.0) {
        return domain("t must be >= 0");
    }
    let vol = crate::lattice::volume(body)?.value * t.powi(body.dim() as i32);
    let lo = smoothed_count(body, rot, t - c * eps, eps)?;
    let hi = smoothed_count(body, rot, t + c * eps, eps)?;
    Ok(Sandwich { lower: lo - vol, upper: hi - vol, c })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mollifier_basics() {
        let m = Mollifier::get(2);
        assert!((m.hat(0.0) - 1.0).abs() < 1e-12);
        assert!((m.planar_mass(1.0) * 2.0 * PI - 1.0).abs() < 1e-12);
        let r = m.decay_radius(TAIL);
        assert!(r > 30.0 && r < 90.0, "decay radius {r}");
    }

    #[test]
    fn spatial_and_spectral_agree_disk() {
        let b = ConvexBody::ball(2);
        let rot = Rotation::from_angle(0.3);
        let e = spectral_estimate(&b, &rot, 5.0, 0.25, SumOptions::with(Evaluator::ExactOnly))
            .unwrap()
            .with_spatial(&b, &rot)
            .unwrap();
        let s = e.spatial_value.unwrap();
        assert!((e.spectral_sum.re - s).abs() < 1e-6 * s.abs().max(1.0), "{} vs {s}", e.spectral_sum);
    }
}
