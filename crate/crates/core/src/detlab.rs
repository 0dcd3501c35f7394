//! Integer witnesses for the non-vanishing determinant lemmas: the matrix
//! `h_q = det(g_ij)` of order-(q+2) mixed partials of
//! `F(u) = H_θ(y + Σ u_l v_l)`, the tilted eigen-frame construction for
//! `d >= 3`, the orthogonal planar pair for `d = 2`, and the scaling
//! quantities they are meant to satisfy.

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{self, dotp, norm, random_unit, ConvexBody, Rotation};

/// Smallest curvature at which a construction is attempted.
pub const MIN_CURVATURE: f64 = 1e-6;

/// Integer coordinates are kept below this so they stay exact in `f64`.
pub const COORD_LIMIT: f64 = 9.007_199_254_740_992e15;

/// Differencing depth used by default in dimension `d`.
pub fn default_q(d: usize) -> u32 {
    if d == 3 || d == 4 {
        2
    } else {
        1
    }
}

/// Existential constants of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetCalibration {
    /// `α = c_alpha K^{-3}` (tilt of `w_1`, `d >= 3`).
    pub c_alpha: f64,
    /// `N = ceil(c_n K^{e})` with the lemma's exponent `e`.
    pub c_n: f64,
    /// Floor constant for `|h_q|`.
    pub floor: f64,
    /// Radius constant of the stability ball.
    pub c_stab: f64,
}

impl DetCalibration {
    pub fn default_for(d: usize) -> DetCalibration {
        if d == 2 {
            DetCalibration { c_alpha: 0.0, c_n: 8.0, floor: 1e-3, c_stab: 1.0 / 16.0 }
        } else {
            DetCalibration { c_alpha: 4.0, c_n: 4.0, floor: 1e-3, c_stab: 1.0 / 32.0 }
        }
    }
}

/// One entry `g_ij` of the matrix behind `h_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPartialRequest {
    pub y: Vec<f64>,
    pub dirs: Vec<Vec<f64>>,
    pub i: usize,
    pub j: usize,
    pub q: u32,
}

impl MixedPartialRequest {
    /// Multi-index of `∂u_1 ∂u_i ∂u_j ∂u_d^{q-1}` (0-based `i`, `j`).
    pub fn multi_index(&self) -> Vec<u8> {
        let d = self.dirs.len();
        let mut m = vec![0u8; d];
        m[0] += 1;
        m[self.i] += 1;
        m[self.j] += 1;
        m[d - 1] += (self.q - 1) as u8;
        m
    }

    pub fn order(&self) -> usize {
        self.q as usize + 2
    }

    pub fn evaluate(&self, body: &ConvexBody, rot: &Rotation) -> Result<f64> {
        let jet = geometry::support_jet_along(body, rot, &self.y, &self.dirs, self.order())?;
        Ok(jet.derivative(&self.multi_index()))
    }
}

fn check_q(q: u32) -> Result<()> {
    if q == 0 || q > 20 {
        return domain(format!("differencing depth q = {q} outside 1..=20"));
    }
    Ok(())
}

/// The matrix `(g_ij)` for `F(u) = H_θ(y + Σ u_l v_l)`, row-major.
pub fn g_matrix(body: &ConvexBody, rot: &Rotation, y: &[f64], vectors: &[Vec<f64>], q: u32) -> Result<Vec<f64>> {
    check_q(q)?;
    let d = body.dim();
    if vectors.len() != d || vectors.iter().any(|v| v.len() != d) {
        return domain(format!("h_q needs {d} vectors of length {d}"));
    }
    if norm(y) == 0.0 {
        return domain("h_q needs a nonzero base point");
    }
    let cols = DMatrix::from_fn(d, d, |r, c| vectors[c][r]);
    let scale: f64 = vectors.iter().map(|v| norm(v)).product();
    if scale == 0.0 || cols.determinant().abs() <= 1e-12 * scale {
        return domain("h_q needs linearly independent vectors");
    }
    let jet = geometry::support_jet_along(body, rot, y, vectors, q as usize + 2)?;
    let mut g = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let req = MixedPartialRequest { y: Vec::new(), dirs: vectors.to_vec(), i, j, q };
            let v = jet.derivative(&req.multi_index());
            g[i * d + j] = v;
            g[j * d + i] = v;
        }
    }
    Ok(g)
}

/// `h_q^θ(y, v_1, …, v_d)`.
pub fn h_q(body: &ConvexBody, rot: &Rotation, y: &[f64], vectors: &[Vec<f64>], q: u32) -> Result<f64> {
    let d = body.dim();
    let g = g_matrix(body, rot, y, vectors, q)?;
    Ok(DMatrix::from_row_slice(d, d, &g).determinant())
}

/// Exact determinant of integer columns (fraction-free elimination).
pub fn det_exact(vectors: &[Vec<i64>]) -> BigInt {
    let d = vectors.len();
    let mut a: Vec<Vec<BigInt>> = (0..d).map(|r| (0..d).map(|c| BigInt::from(vectors[c][r])).collect()).collect();
    let mut sign = 1i32;
    let mut prev = BigInt::from(1);
    for k in 0..d {
        if a[k][k].is_zero() {
            match (k + 1..d).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..d {
            for j in k + 1..d {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[d - 1][d - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// Number of integer points in the half-open parallelepiped `V[0,1)^d`,
/// i.e. the number of cosets of `Σ ℤ v_l` in `ℤ^d`. Exhaustive; refuses
/// boxes with more than `limit` points.
pub fn coset_count(vectors: &[Vec<i64>], limit: u64) -> Result<u64> {
    let d = vectors.len();
    let det = det_exact(vectors);
    if det.is_zero() {
        return domain("coset count needs independent vectors");
    }
    let mut lo = vec![0i64; d];
    let mut hi = vec![0i64; d];
    for k in 0..d {
        for v in vectors {
            if v[k] < 0 {
                lo[k] += v[k];
            } else {
                hi[k] += v[k];
            }
        }
    }
    let size: f64 = (0..d).map(|k| (hi[k] - lo[k] + 1) as f64).product();
    if size > limit as f64 {
        return Err(Error::Size(size as u128));
    }
    // adj(V) m / det(V) gives the coordinates of m in the basis
    let adj = adjugate(vectors);
    let abs_det = det.abs();
    let neg = det.is_negative();
    let mut m = lo.clone();
    let mut count = 0u64;
    loop {
        let inside = (0..d).all(|r| {
            let mut s = BigInt::zero();
            for c in 0..d {
                s += &adj[r][c] * BigInt::from(m[c]);
            }
            if neg {
                s = -s;
            }
            !s.is_negative() && s < abs_det
        });
        if inside {
            count += 1;
        }
        let mut k = 0;
        loop {
            if k == d {
                return Ok(count);
            }
            m[k] += 1;
            if m[k] <= hi[k] {
                break;
            }
            m[k] = lo[k];
            k += 1;
        }
    }
}

fn adjugate(vectors: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    let d = vectors.len();
    let mut out = vec![vec![BigInt::zero(); d]; d];
    for r in 0..d {
        for c in 0..d {
            // cofactor of entry (c, r) of V, whose columns are `vectors`
            let minor: Vec<Vec<i64>> = (0..d)
                .filter(|&col| col != r)
                .map(|col| (0..d).filter(|&row| row != c).map(|row| vectors[col][row]).collect())
                .collect();
            let v = if d == 1 { BigInt::from(1) } else { det_exact(&minor) };
            out[r][c] = if (r + c) % 2 == 0 { v } else { -v };
        }
    }
    out
}

/// A constructed witness together with the quantities the lemmas bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetWitness {
    pub xi: Vec<f64>,
    pub q: u32,
    pub vectors: Vec<Vec<i64>>,
    #[serde(rename = "N")]
    pub n: u64,
    pub h_q_value: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub v_norms: Vec<f64>,
    /// Exact `det V` in decimal.
    pub det: String,
    pub det_abs: f64,
    pub inverse_norm: f64,
    pub condition: f64,
    /// Lower bound `floor · K^{exponent}` that `|h_q|` was checked against.
    pub floor_bound: f64,
    pub floor_exponent: f64,
    pub calibration: DetCalibration,
}

impl DetWitness {
    /// Columns as real vectors.
    pub fn real_vectors(&self) -> Vec<Vec<f64>> {
        self.vectors.iter().map(|v| v.iter().map(|&x| x as f64).collect()).collect()
    }

    /// Radius of the ball on which the lower bound is claimed to persist.
    pub fn stability_radius(&self) -> f64 {
        let d = self.xi.len() as f64;
        let q = self.q as f64;
        let p = if self.xi.len() == 2 { 2.0 * q + 4.0 } else { d + 2.0 * q + 7.0 - 1.0 / (d - 1.0) };
        self.calibration.c_stab * self.k.min(1.0).powf(p)
    }
}

/// Exponent `e = -d - 2q - 5 + 1/(d-1)` of `N` and `|v_l|`, `l >= 2`.
pub fn scale_exponent(d: usize, q: u32) -> f64 {
    let d = d as f64;
    -d - 2.0 * q as f64 - 5.0 + 1.0 / (d - 1.0)
}

/// Exponent of the lower bound on `|h_q|`.
pub fn floor_exponent(d: usize, q: u32) -> f64 {
    let q = q as f64;
    if d == 2 {
        return -4.0 * q * q - 12.0 * q - 10.0;
    }
    let e = scale_exponent(d, q as u32);
    let df = d as f64;
    e * df * (q + 2.0) - 3.0 * df + 5.0 - 1.0 / (df - 1.0)
}

fn unit(xi: &[f64]) -> Result<Vec<f64>> {
    let n = norm(xi);
    if !(n > 0.0 && n.is_finite()) {
        return domain("direction must be nonzero and finite");
    }
    Ok(xi.iter().map(|v| v / n).collect())
}

fn curvature_checked(body: &ConvexBody, rot: &Rotation, xi: &[f64]) -> Result<f64> {
    let k = geometry::curvature_at_direction(body, rot, xi)?;
    if k <= MIN_CURVATURE {
        return Err(Error::Inapplicable(format!("curvature {k:e} below {MIN_CURVATURE:e}")));
    }
    Ok(k)
}

fn round_vector(v: &[f64]) -> Result<Vec<i64>> {
    if v.iter().any(|x| !(x.abs() < COORD_LIMIT)) {
        return Err(Error::Overflow(format!("witness coordinate beyond 2^53: {v:?}")));
    }
    Ok(v.iter().map(|x| x.round() as i64).collect())
}

fn finish(
    body: &ConvexBody,
    rot: &Rotation,
    xi: Vec<f64>,
    q: u32,
    vectors: Vec<Vec<i64>>,
    n: u64,
    k: f64,
    alpha: f64,
    betas: Vec<f64>,
    cal: DetCalibration,
) -> Result<DetWitness> {
    let d = body.dim();
    let det = det_exact(&vectors);
    if det.is_zero() {
        return Err(Error::Construction("rounded vectors are linearly dependent".into()));
    }
    let real: Vec<Vec<f64>> = vectors.iter().map(|v| v.iter().map(|&x| x as f64).collect()).collect();
    let h = h_q(body, rot, &xi, &real, q)?;
    let vm = DMatrix::from_fn(d, d, |r, c| real[c][r]);
    let sv = vm.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let fexp = floor_exponent(d, q);
    let floor_bound = cal.floor * k.powf(fexp);
    let w = DetWitness {
        v_norms: real.iter().map(|v| norm(v)).collect(),
        det_abs: det.abs().to_f64().unwrap_or(f64::INFINITY),
        det: det.to_string(),
        inverse_norm: 1.0 / smin,
        condition: smax / smin,
        xi,
        q,
        vectors,
        n,
        h_q_value: h,
        k,
        alpha,
        betas,
        floor_bound,
        floor_exponent: fexp,
        calibration: cal,
    };
    if !(h.abs() >= floor_bound) {
        return Err(Error::Construction(format!(
            "|h_q| = {:e} below floor {:e} (K = {:e}, N = {}, alpha = {:e})",
            h.abs(),
            floor_bound,
            k,
            n,
            alpha
        )));
    }
    Ok(w)
}

/// Tilted eigen-frame construction for `d >= 3`.
pub fn construct_witness(
    body: &ConvexBody,
    rot: &Rotation,
    xi: &[f64],
    q: u32,
    cal: &DetCalibration,
) -> Result<DetWitness> {
    check_q(q)?;
    let d = body.dim();
    if d < 3 {
        return domain("construct_witness needs d >= 3; use construct_witness_2d");
    }
    if xi.len() != d {
        return domain("direction has the wrong dimension");
    }
    let xi = unit(xi)?;
    let k = curvature_checked(body, rot, &xi)?;

    // P = (xi, p_2, ..., p_d) and A = P^t ∇²H_θ(ξ) P
    let p = geometry::orthogonal_completion(&xi);
    let (_, hess) = geometry::support_grad_hessian(body, rot, &xi)?;
    let hm = DMatrix::from_row_slice(d, d, &hess);
    let pm = DMatrix::from_fn(d, d, |r, c| p[c][r]);
    let a = pm.transpose() * &hm * &pm;
    let block = a.view((1, 1), (d - 1, d - 1)).into_owned();
    let block = (&block + block.transpose()) * 0.5;
    let eig = SymmetricEigen::new(block);
    let mut order: Vec<usize> = (0..d - 1).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let betas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::Construction(format!("eigen-frame degenerate: {betas:?}")));
    }

    // frame vectors w'_l in P-coordinates (first component zero)
    let wp: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let mut w = vec![0.0; d];
            for r in 0..d - 1 {
                w[r + 1] = eig.eigenvectors[(r, i)];
            }
            w
        })
        .collect();
    let alpha = cal.c_alpha * k.powi(-3);
    let mut w: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut w1 = wp[0].clone();
    w1[0] += alpha;
    w.push(w1);
    w.extend(wp[1..].iter().cloned());
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    w.push(e1);

    let to_world = |v: &[f64]| -> Vec<f64> { (0..d).map(|r| (0..d).map(|c| p[c][r] * v[c]).sum()).collect() };
    let vstar: Vec<Vec<f64>> = w.iter().map(|v| to_world(v)).collect();
    let n_real = (cal.c_n * k.powf(scale_exponent(d, q))).ceil().max(1.0);
    if n_real > COORD_LIMIT {
        return Err(Error::Overflow(format!("denominator N = {n_real:e}")));
    }
    let n = n_real as u64;
    let vectors = vstar
        .iter()
        .map(|v| round_vector(&v.iter().map(|x| x * n_real).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    finish(body, rot, xi, q, vectors, n, k, alpha, betas, *cal)
}

/// Orthogonal integer pair `(a, b)`, `(-b, a)` for `d = 2`. The direction
/// is the maximiser of the normalised `|h_q|` over a 1440-angle grid.
pub fn construct_witness_2d(
    body: &ConvexBody,
    rot: &Rotation,
    xi: &[f64],
    q: u32,
    cal: &DetCalibration,
) -> Result<DetWitness> {
    check_q(q)?;
    if body.dim() != 2 || xi.len() != 2 {
        return domain("construct_witness_2d needs d = 2");
    }
    let xi = unit(xi)?;
    let k = curvature_checked(body, rot, &xi)?;
    let (_, hess) = geometry::support_grad_hessian(body, rot, &xi)?;
    let beta = hess[0] + hess[3];

    let grid = 1440;
    let mut best = (0.0, 0.0f64);
    for s in 0..grid {
        let phi = std::f64::consts::PI * s as f64 / grid as f64;
        let (sn, cs) = phi.sin_cos();
        let h = h_q(body, rot, &xi, &[vec![cs, sn], vec![-sn, cs]], q)?;
        if h.abs() > best.1 {
            best = (phi, h.abs());
        }
    }
    if best.1 == 0.0 {
        return Err(Error::Construction("h_q vanishes for every orthogonal frame".into()));
    }
    let n_real = (cal.c_n * k.powf(-2.0 * q as f64 - 2.0)).ceil().max(1.0);
    if n_real > COORD_LIMIT {
        return Err(Error::Overflow(format!("denominator N = {n_real:e}")));
    }
    let (sn, cs) = best.0.sin_cos();
    let v1 = round_vector(&[n_real * cs, n_real * sn])?;
    let v2 = vec![-v1[1], v1[0]];
    finish(body, rot, xi, q, vec![v1, v2], n_real as u64, k, 0.0, vec![beta], *cal)
}

/// Dispatches on the dimension.
pub fn construct(body: &ConvexBody, rot: &Rotation, xi: &[f64], q: u32, cal: &DetCalibration) -> Result<DetWitness> {
    if body.dim() == 2 {
        construct_witness_2d(body, rot, xi, q, cal)
    } else {
        construct_witness(body, rot, xi, q, cal)
    }
}

/// Extremes of `h_q(η, v) / h_q(ξ, v)` over random `η` in the stability ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub radius: f64,
    pub probes: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl StabilityReport {
    pub fn within_factor(&self, f: f64) -> bool {
        self.min_ratio >= 1.0 / f && self.max_ratio <= f
    }
}

pub fn stability_check(
    body: &ConvexBody,
    rot: &Rotation,
    w: &DetWitness,
    probes: usize,
    seed: u64,
) -> Result<StabilityReport> {
    let d = body.dim();
    let radius = w.stability_radius();
    let v = w.real_vectors();
    let h0 = w.h_q_value;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..probes {
        let dir = random_unit(&mut rng, d);
        let s = rng.random::<f64>().powf(1.0 / d as f64) * radius;
        let eta: Vec<f64> = w.xi.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
        let r = h_q(body, rot, &eta, &v, w.q)? / h0;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(StabilityReport { radius, probes, min_ratio: lo, max_ratio: hi })
}

/// One-time calibration on the unit ball: the smallest power-of-two
/// `c_alpha` and `c_n` (from 1) for which the floor holds with the given
/// floor constant, and the largest power-of-two `c_stab` (from 1) for which
/// the stability ball keeps `h_q` within a factor 2.
pub fn calibrate(d: usize, q: u32, floor: f64, seed: u64) -> Result<DetCalibration> {
    let body = ConvexBody::ball(d);
    let rot = Rotation::identity(d);
    let mut xi = vec![0.0; d];
    xi[0] = 1.0;
    let mut cal = DetCalibration { c_alpha: if d == 2 { 0.0 } else { 1.0 }, c_n: 1.0, floor, c_stab: 1.0 };
    let witness = loop {
        match construct(&body, &rot, &xi, q, &cal) {
            Ok(w) => break w,
            Err(Error::Construction(_)) if cal.c_n < 1e6 => {
                cal.c_n *= 2.0;
                if d > 2 {
                    cal.c_alpha *= 2.0;
                }
            }
            Err(e) => return Err(e),
        }
    };
    let mut w = witness;
    for _ in 0..60 {
        w.calibration.c_stab = cal.c_stab;
        if stability_check(&body, &rot, &w, 64, seed)?.within_factor(2.0) {
            return Ok(cal);
        }
        cal.c_stab *= 0.5;
    }
    Err(Error::Construction("stability constant collapsed".into()))
}

/// Per-vector scaling degrees of `h_q`: `(d+2, 2, …, 2, d(q-1)+2)`.
pub fn vector_degrees(d: usize, q: u32) -> Vec<u32> {
    let mut out = vec![2u32; d];
    out[0] = d as u32 + 2;
    out[d - 1] = d as u32 * (q - 1) + 2;
    out
}

/// `‖V^{-1}‖` (spectral) for real columns.
pub fn inverse_norm(vectors: &[Vec<f64>]) -> f64 {
    let d = vectors.len();
    let vm = DMatrix::from_fn(d, d, |r, c| vectors[c][r]);
    let sv = vm.singular_values();
    1.0 / sv.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Cosine of the angle between two real vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dotp(a, b) / (norm(a) * norm(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_determinant_and_cosets() {
        let v = vec![vec![2, 1], vec![1, 3]];
        assert_eq!(det_exact(&v), BigInt::from(5));
        assert_eq!(coset_count(&v, 1000).unwrap(), 5);
        let v3 = vec![vec![2, 0, 1], vec![1, 3, 0], vec![0, 1, 2]];
        let det = det_exact(&v3);
        assert_eq!(det, BigInt::from(13));
        assert_eq!(coset_count(&v3, 100_000).unwrap(), 13);
        let swapped = vec![v3[1].clone(), v3[0].clone(), v3[2].clone()];
        assert_eq!(det_exact(&swapped), BigInt::from(-13));
        assert_eq!(coset_count(&swapped, 100_000).unwrap(), 13);
    }

    #[test]
    fn ball_third_partials_closed_form() {
        // H(x) = |x|; at e_1, the third derivative along (e_1, e_2, e_2) is -1
        let b = ConvexBody::ball(3);
        let r = Rotation::identity(3);
        let dirs = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let y = [1.0, 0.0, 0.0];
        let g = g_matrix(&b, &r, &y, &dirs, 1).unwrap();
        // D^3|x| at e_1: T[a,b,c] = -(a1 b·c + b1 a·c + c1 a·b) + 3 a1 b1 c1
        let t = |a: &[f64], bb: &[f64], c: &[f64]| {
            -(a[0] * dotp(bb, c) + bb[0] * dotp(a, c) + c[0] * dotp(a, bb)) + 3.0 * a[0] * bb[0] * c[0]
        };
        for i in 0..3 {
            for j in 0..3 {
                let want = t(&dirs[0], &dirs[i], &dirs[j]);
                assert!((g[i * 3 + j] - want).abs() < 1e-12, "{i}{j}");
            }
        }
    }

    #[test]
    fn homogeneity_in_vectors() {
        let b = ConvexBody::ellipsoid(&[0.7, 1.0, 1.3]).unwrap();
        let r = Rotation::identity(3);
        let y = [0.6, 0.3, 0.74];
        let v = vec![vec![1.0, 2.0, 0.5], vec![-1.0, 0.3, 1.0], vec![0.2, -0.4, 1.0]];
        for q in 1..=2u32 {
            let h = h_q(&b, &r, &y, &v, q).unwrap();
            let n = 7.0;
            let vn: Vec<Vec<f64>> = v.iter().map(|x| x.iter().map(|c| c * n).collect()).collect();
            let hn = h_q(&b, &r, &y, &vn, q).unwrap();
            assert!((hn / (h * n.powi(3 * (q as i32 + 2))) - 1.0).abs() < 1e-8);
            let degs = vector_degrees(3, q);
            for l in 0..3 {
                let mut vs = v.clone();
                vs[l] = vs[l].iter().map(|c| c * 3.0).collect();
                let hs = h_q(&b, &r, &y, &vs, q).unwrap();
                assert!((hs / (h * 3f64.powi(degs[l] as i32)) - 1.0).abs() < 1e-9, "q={q} l={l}");
            }
        }
    }

    #[test]
    fn ball_witness_three_dims() {
        let b = ConvexBody::ball(3);
        let r = Rotation::identity(3);
        let cal = DetCalibration::default_for(3);
        let w = construct_witness(&b, &r, &[0.0, 0.6, 0.8], 1, &cal).unwrap();
        let nd = (w.n as f64).powi(3);
        assert!(w.det_abs > nd / 10.0 && w.det_abs < nd * 10.0, "{} vs {}", w.det_abs, nd);
        assert!(w.h_q_value.abs() > 0.0);
    }

    #[test]
    fn circle_pair_is_orthogonal() {
        let b = ConvexBody::ball(2);
        let r = Rotation::identity(2);
        let w = construct_witness_2d(&b, &r, &[1.0, 0.0], 1, &DetCalibration::default_for(2)).unwrap();
        let (a, c) = (&w.vectors[0], &w.vectors[1]);
        assert_eq!(a[0] * c[0] + a[1] * c[1], 0);
        assert_eq!(a[0] * a[0] + a[1] * a[1], c[0] * c[0] + c[1] * c[1]);
        assert!(w.h_q_value != 0.0);
    }
}
