//! Exact lattice-point counts in `tθB` and the remainder `P(t)`.
//!
//! Counting recurses over coordinates; the innermost coordinate is the one
//! with the widest support interval. On each line the body is an interval
//! (convexity), so its integer endpoints are located by galloping plus
//! integer bisection on the membership predicate, which is monotone on
//! either side of any interior point.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{golden_max, BodyKind, ConvexBody, Rotation};

/// Relative width of the boundary guard band.
pub const GUARD: f64 = 1e-9;

/// Largest supported `t·max H` (coordinates stay exact in f64 products).
const COORD_LIMIT: f64 = (1u64 << 40) as f64;

/// One remainder record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderSample {
    pub theta: Rotation,
    pub t: f64,
    pub count: u64,
    pub volume_term: f64,
    pub remainder: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolumeMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub method: VolumeMethod,
    pub error_bound: f64,
}

struct Counter<'a> {
    body: &'a ConvexBody,
    rot: &'a Rotation,
    t: f64,
    tp: f64,
    guard: f64,
    exact: bool,
}

enum Member {
    In,
    Out,
}

impl Counter<'_> {
    fn level_at(&self, base: &[f64], dir: &[f64], s: f64, buf: &mut [f64]) -> f64 {
        for i in 0..buf.len() {
            buf[i] = base[i] + s * dir[i];
        }
        self.body.level(buf)
    }

    /// Membership of the lattice point `prefix + n e_c`.
    fn member(
        &self,
        base: &[f64],
        dir: &[f64],
        n: i64,
        point: &mut Vec<i64>,
        inner: usize,
        buf: &mut [f64],
        ties: &mut Vec<Vec<i64>>,
    ) -> Member {
        let l = self.level_at(base, dir, n as f64, buf);
        if (l - self.tp).abs() > self.guard {
            return if l < self.tp { Member::In } else { Member::Out };
        }
        point[inner] = n;
        if point.iter().all(|&v| v == 0) {
            return Member::In;
        }
        if self.exact {
            match self.body.exact_compare(point, self.rot, self.t) {
                Some(Ordering::Greater) => Member::Out,
                Some(_) => Member::In,
                None => {
                    ties.push(point.clone());
                    if l <= self.tp {
                        Member::In
                    } else {
                        Member::Out
                    }
                }
            }
        } else {
            ties.push(point.clone());
            if l <= self.tp {
                Member::In
            } else {
                Member::Out
            }
        }
    }
}

/// Per-line warm-start state.
struct LineState {
    hint: Option<i64>,
}

#[allow(clippy::too_many_arguments)]
fn count_line(
    c: &Counter<'_>,
    base: &[f64],
    dir: &[f64],
    lo: i64,
    hi: i64,
    point: &mut Vec<i64>,
    inner: usize,
    buf: &mut [f64],
    ties: &mut Vec<Vec<i64>>,
    state: &mut LineState,
) -> u64 {
    let is_in = |n: i64, point: &mut Vec<i64>, buf: &mut [f64], ties: &mut Vec<Vec<i64>>| {
        matches!(c.member(base, dir, n, point, inner, buf, ties), Member::In)
    };
    // find an interior integer
    let mut start = None;
    if let Some(h) = state.hint {
        if h >= lo && h <= hi && is_in(h, point, buf, ties) {
            start = Some(h);
        }
    }
    if start.is_none() {
        let tmp = std::cell::RefCell::new(vec![0.0; buf.len()]);
        let f = |s: f64| -c.level_at(base, dir, s, &mut tmp.borrow_mut());
        let s_star = golden_max(&f, lo as f64, hi as f64, 1e-7);
        let r = s_star.round() as i64;
        for n in [r, r - 1, r + 1] {
            if n >= lo && n <= hi && is_in(n, point, buf, ties) {
                start = Some(n);
                break;
            }
        }
    }
    let Some(n0) = start else {
        state.hint = None;
        return 0;
    };
    // gallop + bisect upward: largest n with member(n)
    let mut good = n0;
    let mut step = 1i64;
    let mut bad = loop {
        let probe = good.saturating_add(step);
        if probe > hi {
            if is_in(hi, point, buf, ties) {
                good = hi;
                break hi + 1;
            }
            break hi;
        }
        if is_in(probe, point, buf, ties) {
            good = probe;
            step *= 2;
        } else {
            break probe;
        }
    };
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if is_in(mid, point, buf, ties) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    let upper = good;
    let mut good = n0;
    let mut step = 1i64;
    bad = loop {
        let probe = good.saturating_sub(step);
        if probe < lo {
            if is_in(lo, point, buf, ties) {
                good = lo;
                break lo - 1;
            }
            break lo;
        }
        if is_in(probe, point, buf, ties) {
            good = probe;
            step *= 2;
        } else {
            break probe;
        }
    };
    while good - bad > 1 {
        let mid = good - (good - bad) / 2;
        if is_in(mid, point, buf, ties) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    let lower = good;
    state.hint = Some(lower + (upper - lower) / 2);
    (upper - lower + 1) as u64
}

fn coordinate_bounds(body: &ConvexBody, rot: &Rotation, t: f64) -> Vec<(i64, i64)> {
    let d = body.dim();
    (0..d)
        .map(|k| {
            let up = body.support(rot.row(k));
            let neg: Vec<f64> = rot.row(k).iter().map(|v| -v).collect();
            let down = body.support(&neg);
            (-((t * down).floor() as i64) - 1, (t * up).floor() as i64 + 1)
        })
        .collect()
}

/// Exact number of `m ∈ Z^d` with `ρ(θᵗ m) <= t`.
pub fn count_points(body: &ConvexBody, rot: &Rotation, t: f64) -> Result<u64> {
    let d = body.dim();
    if rot.dim() != d {
        return domain("rotation and body dimensions differ");
    }
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("dilation must be finite and >= 0, got {t}"));
    }
    let bounds = coordinate_bounds(body, rot, t);
    let maxc = bounds.iter().map(|(a, b)| a.unsigned_abs().max(b.unsigned_abs())).max().unwrap_or(0) as f64;
    if maxc > COORD_LIMIT {
        return Err(Error::Overflow(format!("t = {t} puts coordinates beyond 2^40")));
    }
    let p = body.level_exponent() as i32;
    let tp = t.powi(p);
    let counter = Counter {
        body,
        rot,
        t,
        tp,
        guard: p as f64 * GUARD * tp,
        exact: !matches!(body.kind(), BodyKind::Custom(_)),
    };
    // innermost coordinate = widest range
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&k| bounds[k].1 - bounds[k].0);
    let inner = order[d - 1];
    let outer = order[0];
    let outer_vals: Vec<i64> = (bounds[outer].0..=bounds[outer].1).collect();
    let chunk = (outer_vals.len() / 64).max(1);
    let results: Vec<(u64, Vec<Vec<i64>>)> = outer_vals
        .par_chunks(chunk)
        .map(|vals| {
            let mut total = 0u64;
            let mut ties = Vec::new();
            let mut point = vec![0i64; d];
            let mut buf = vec![0.0; d];
            let mut base = vec![0.0; d];
            let dir = rot.row(inner).to_vec();
            let mut states: Vec<LineState> = Vec::new();
            for &v in vals {
                point[outer] = v;
                recurse(
                    &counter, &order, 1, &bounds, &mut point, &mut base, &dir, inner, &mut buf, &mut ties,
                    &mut states, &mut total,
                );
            }
            (total, ties)
        })
        .collect();
    let mut total = 0u64;
    let mut ties = Vec::new();
    for (c, t) in results {
        total = total.checked_add(c).ok_or_else(|| Error::Overflow("count exceeds u64".into()))?;
        ties.extend(t);
    }
    if !ties.is_empty() && !counter.exact {
        ties.sort();
        return Err(Error::Tie { points: ties });
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    c: &Counter<'_>,
    order: &[usize],
    depth: usize,
    bounds: &[(i64, i64)],
    point: &mut Vec<i64>,
    base: &mut Vec<f64>,
    dir: &[f64],
    inner: usize,
    buf: &mut [f64],
    ties: &mut Vec<Vec<i64>>,
    states: &mut Vec<LineState>,
    total: &mut u64,
) {
    let d = order.len();
    if depth == d - 1 || d == 1 {
        // base = θᵗ(prefix)
        for b in base.iter_mut() {
            *b = 0.0;
        }
        for &k in &order[..d - 1] {
            let row = c.rot.row(k);
            let m = point[k] as f64;
            for i in 0..base.len() {
                base[i] += m * row[i];
            }
        }
        if states.len() < d {
            states.resize_with(d, || LineState { hint: None });
        }
        let (lo, hi) = bounds[inner];
        let n = count_line(c, base, dir, lo, hi, point, inner, buf, ties, &mut states[depth]);
        point[inner] = 0;
        *total += n;
        return;
    }
    let k = order[depth];
    for v in bounds[k].0..=bounds[k].1 {
        point[k] = v;
        recurse(c, order, depth + 1, bounds, point, base, dir, inner, buf, ties, states, total);
    }
    point[k] = 0;
}

/// Volume by the closed form where available, else by radial quadrature.
pub fn volume(body: &ConvexBody) -> Result<VolumeEstimate> {
    if let Some(v) = body.volume_closed() {
        return Ok(VolumeEstimate { value: v, method: VolumeMethod::ClosedForm, error_bound: 1e-13 * v });
    }
    volume_quadrature(body)
}

/// `|B| = (1/d) ∫_{S^{d-1}} ρ(u)^{-d} dσ(u)` for d = 2, 3.
pub fn volume_quadrature(body: &ConvexBody) -> Result<VolumeEstimate> {
    let d = body.dim();
    let eval = |n: usize| -> f64 {
        match d {
            2 => {
                let h = 2.0 * std::f64::consts::PI / n as f64;
                (0..n)
                    .map(|i| {
                        let a = i as f64 * h;
                        body.gauge(&[a.cos(), a.sin()]).powi(-2)
                    })
                    .sum::<f64>()
                    * h
                    / 2.0
            }
            _ => {
                let np = 2 * n;
                let hp = 2.0 * std::f64::consts::PI / np as f64;
                let g = crate::quadrature::GaussLegendre::get(64);
                let panels = (n / 64).max(1);
                let mut s = 0.0;
                for p in 0..panels {
                    let a = std::f64::consts::PI * p as f64 / panels as f64;
                    let b = std::f64::consts::PI * (p + 1) as f64 / panels as f64;
                    s += g.integrate(a, b, |th| {
                        let (st, ct) = th.sin_cos();
                        (0..np)
                            .map(|j| {
                                let ph = j as f64 * hp;
                                body.gauge(&[st * ph.cos(), st * ph.sin(), ct]).powi(-3)
                            })
                            .sum::<f64>()
                            * hp
                            * st
                    });
                }
                s / 3.0
            }
        }
    };
    if d != 2 && d != 3 {
        return Err(Error::Unsupported("radial quadrature only for d = 2, 3; use Monte Carlo".into()));
    }
    let mut n = if d == 2 { 256 } else { 64 };
    let mut prev = eval(n);
    for _ in 0..8 {
        n *= 2;
        let cur = eval(n);
        let err = (cur - prev).abs();
        if err <= 1e-11 * cur.abs() {
            return Ok(VolumeEstimate { value: cur, method: VolumeMethod::Quadrature, error_bound: err.max(1e-14 * cur) });
        }
        prev = cur;
    }
    let last = eval(n * 2);
    Err(Error::Quadrature { achieved: (last - prev).abs() / last.abs(), target: 1e-11 })
}

/// Monte Carlo volume over the circumscribed box; error bound is one
/// standard error.
pub fn volume_monte_carlo(body: &ConvexBody, samples: usize, seed: u64) -> VolumeEstimate {
    let d = body.dim();
    let r = body.circumradius() * 1.0000001;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..samples {
        for v in x.iter_mut() {
            *v = rng.random_range(-r..r);
        }
        if body.gauge(&x) <= 1.0 {
            hits += 1;
        }
    }
    let boxv = (2.0 * r).powi(d as i32);
    let p = hits as f64 / samples as f64;
    VolumeEstimate {
        value: p * boxv,
        method: VolumeMethod::MonteCarlo,
        error_bound: boxv * (p * (1.0 - p) / samples as f64).sqrt(),
    }
}

/// `P(t) = #(tθB ∩ Z^d) − |B| t^d`.
pub fn remainder(body: &ConvexBody, rot: &Rotation, t: f64) -> Result<RemainderSample> {
    let count = count_points(body, rot, t)?;
    let vol = volume(body)?;
    Ok(remainder_from(rot, t, count, vol.value, body.dim()))
}

pub(crate) fn remainder_from(rot: &Rotation, t: f64, count: u64, vol: f64, d: usize) -> RemainderSample {
    let volume_term = vol * t.powi(d as i32);
    RemainderSample { theta: rot.clone(), t, count, volume_term, remainder: count as f64 - volume_term }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_counts() {
        let b = ConvexBody::ball(2);
        let i = Rotation::identity(2);
        assert_eq!(count_points(&b, &i, 0.5).unwrap(), 1);
        assert_eq!(count_points(&b, &i, 10.0).unwrap(), 317);
        assert_eq!(count_points(&b, &i, 0.0).unwrap(), 1);
        // exactly on the boundary: (1,0),(0,1),...
        assert_eq!(count_points(&b, &i, 1.0).unwrap(), 5);
        assert_eq!(count_points(&b, &i, 5.0).unwrap(), 81);
    }

    #[test]
    fn ball3_small() {
        let b = ConvexBody::ball(3);
        let i = Rotation::identity(3);
        let mut want = 0;
        for x in -2i64..=2 {
            for y in -2i64..=2 {
                for z in -2i64..=2 {
                    if x * x + y * y + z * z <= 4 {
                        want += 1;
                    }
                }
            }
        }
        assert_eq!(count_points(&b, &i, 2.0).unwrap(), want);
    }

    #[test]
    fn supersphere_boundary_points_counted() {
        // 1^4 + 1^4 = 2 = t^4 at t = 2^{1/4}: f64 t is not exactly 2^{1/4},
        // so the exact retest decides.
        let b = ConvexBody::supersphere(2, 4).unwrap();
        let i = Rotation::identity(2);
        assert_eq!(count_points(&b, &i, 2.0).unwrap(), count_brute(&b, &i, 2.0));
        assert_eq!(count_points(&b, &i, 1.0).unwrap(), 5);
    }

    fn count_brute(b: &ConvexBody, r: &Rotation, t: f64) -> u64 {
        let m = (t * b.circumradius()).ceil() as i64 + 1;
        let mut n = 0;
        for x in -m..=m {
            for y in -m..=m {
                let p = r.apply_t(&[x as f64, y as f64]);
                if b.gauge(&p) <= t {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn custom_body_tie_reported() {
        use crate::geometry::CustomGauge;
        use std::sync::Arc;
        let g = CustomGauge {
            name: "l2".into(),
            gauge: Arc::new(|x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt()),
            lipschitz: Some(1.0),
            finite_type: Some(2),
            symmetric: true,
        };
        let b = ConvexBody::custom(2, g);
        let r = count_points(&b, &Rotation::identity(2), 5.0);
        assert!(matches!(r, Err(Error::Tie { .. })));
        assert_eq!(count_points(&b, &Rotation::identity(2), 5.5).unwrap(), count_brute(&b, &Rotation::identity(2), 5.5));
    }

    #[test]
    fn volumes() {
        let v = volume(&ConvexBody::supersphere(2, 2).unwrap()).unwrap();
        assert!((v.value - std::f64::consts::PI).abs() < 1e-12);
        let s4 = ConvexBody::supersphere(2, 4).unwrap();
        let q = volume_quadrature(&s4).unwrap();
        assert!((q.value - volume(&s4).unwrap().value).abs() < 1e-10);
    }
}
