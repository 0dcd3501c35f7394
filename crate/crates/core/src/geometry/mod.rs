//! Convex-body kernels: gauge, support function and its derivatives, the
//! Gauss map and its inverse, curvatures, and boundary-mesh measures.
//!
//! All rotated quantities follow `H_θ(ξ) = H(θᵗξ)` and `x^θ(ξ) = θ x(θᵗξ)`.

mod body;
mod rotation;

pub use body::{BodyKind, ConvexBody, CustomGauge, GaugeFn};
#[allow(unused_imports)]
pub(crate) use body::golden_max;
pub use rotation::Rotation;

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::jet::{Jet, JetSpace};

/// Curvature below which a direction is treated as flat.
pub const FLAT_TOL: f64 = 1e-10;

/// A boundary point together with its normal and curvatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: Vec<f64>,
    pub normal: Vec<f64>,
    #[serde(rename = "K")]
    pub k: f64,
    pub principal_curvatures: Vec<f64>,
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dotp(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dims(body: &ConvexBody, rot: &Rotation, v: &[f64]) -> Result<()> {
    if rot.dim() != body.dim() || v.len() != body.dim() {
        return domain(format!(
            "dimension mismatch: body {}, rotation {}, vector {}",
            body.dim(),
            rot.dim(),
            v.len()
        ));
    }
    Ok(())
}

/// Deterministic well-spread points on the unit sphere.
pub fn sphere_points(d: usize, n: usize) -> Vec<Vec<f64>> {
    match d {
        2 => (0..n)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + d as u64);
            (0..n).map(|_| random_unit(&mut rng, d)).collect()
        }
    }
}

/// Uniform random unit vector.
pub fn random_unit<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Support function of the rotated body.
pub fn support(body: &ConvexBody, rot: &Rotation, xi: &[f64]) -> Result<f64> {
    check_dims(body, rot, xi)?;
    if norm(xi) == 0.0 {
        return domain("support function needs a nonzero direction");
    }
    Ok(body.support(&rot.apply_t(xi)))
}

/// Flat-direction pre-check for superspheres: `H` is not twice
/// differentiable where a coordinate of `θᵗξ` vanishes.
fn supersphere_flat_check(body: &ConvexBody, eta: &[f64]) -> Result<()> {
    if let BodyKind::Supersphere { omega } = body.kind() {
        if *omega > 2 {
            let n = norm(eta);
            if eta.iter().any(|v| v.abs() <= 1e-12 * n) {
                return Err(Error::FlatDirection { curvature: 0.0, tolerance: FLAT_TOL });
            }
        }
    }
    Ok(())
}

/// Jet of `H_θ` expanded at `ξ` in the `d` coordinates of `ξ`, to `order`.
pub fn support_jet(body: &ConvexBody, rot: &Rotation, xi: &[f64], order: usize) -> Result<Jet> {
    check_dims(body, rot, xi)?;
    let eta = rot.apply_t(xi);
    supersphere_flat_check(body, &eta)?;
    let d = body.dim();
    let space = JetSpace::get(d, order);
    let vars: Vec<Jet> = (0..d).map(|i| Jet::variable(&space, i, xi[i])).collect();
    let rows: Vec<Jet> = (0..d)
        .map(|i| {
            let w: Vec<f64> = (0..d).map(|j| rot.entry(j, i)).collect();
            crate::jet::dot(&w, &vars)
        })
        .collect();
    body.support_jet(&rows)
        .ok_or_else(|| Error::Unsupported("no closed-form support jet for custom bodies".into()))
}

/// Jet of `H_θ(y + Σ u_l v_l)` in the variables `u`, to `order`.
pub fn support_jet_along(
    body: &ConvexBody,
    rot: &Rotation,
    y: &[f64],
    dirs: &[Vec<f64>],
    order: usize,
) -> Result<Jet> {
    check_dims(body, rot, y)?;
    let eta = rot.apply_t(y);
    supersphere_flat_check(body, &eta)?;
    let space = JetSpace::get(dirs.len(), order);
    let rdirs: Vec<Vec<f64>> = dirs.iter().map(|v| rot.apply_t(v)).collect();
    let args = Jet::affine(&space, &eta, &rdirs);
    body.support_jet(&args)
        .ok_or_else(|| Error::Unsupported("no closed-form support jet for custom bodies".into()))
}

/// Gradient and Hessian (row-major) of `H_θ` at `ξ`.
pub fn support_grad_hessian(body: &ConvexBody, rot: &Rotation, xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(body, rot, xi)?;
    if norm(xi) == 0.0 {
        return domain("zero direction");
    }
    if body.is_custom() {
        return custom_support_grad_hessian(body, rot, xi);
    }
    let j = support_jet(body, rot, xi, 2)?;
    Ok((j.gradient(), j.hessian()))
}

fn custom_support_grad_hessian(body: &ConvexBody, rot: &Rotation, xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = body.dim();
    let h = |v: &[f64]| body.support(&rot.apply_t(v));
    let (_, x) = body.custom_support_point(&rot.apply_t(xi));
    let grad = rot.apply(&x);
    // nested central differences with one Richardson step
    let hess_at = |s: f64| -> Vec<f64> {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0;
                for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    let mut p = xi.to_vec();
                    p[i] += si * s;
                    p[j] += sj * s;
                    acc += w * h(&p);
                }
                let v = acc / (4.0 * s * s);
                m[i * d + j] = v;
                m[j * d + i] = v;
            }
        }
        m
    };
    let s = 1e-3 * norm(xi);
    let a = hess_at(s);
    let b = hess_at(s / 2.0);
    let hess = a.iter().zip(&b).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
    Ok((grad, hess))
}

fn sym_eigen(m: &[f64], d: usize) -> (Vec<f64>, DMatrix<f64>) {
    let a = DMatrix::from_row_slice(d, d, m);
    let a = (&a + a.transpose()) * 0.5;
    let e = SymmetricEigen::new(a);
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].partial_cmp(&e.eigenvalues[j]).unwrap());
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(d, d, |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Sorted eigenvalues of `∇²H_θ(ξ)`. The smallest is 0 (radial direction);
/// the others equal `1/(|ξ| κ_j)`.
pub fn hessian_eigs(body: &ConvexBody, rot: &Rotation, xi: &[f64]) -> Result<Vec<f64>> {
    let (_, h) = support_grad_hessian(body, rot, xi)?;
    let (vals, _) = sym_eigen(&h, body.dim());
    let n = norm(xi);
    let k: f64 = vals[1..].iter().map(|v| 1.0 / (v * n)).product();
    if !(k.is_finite() && k > FLAT_TOL) || vals[1..].iter().any(|v| *v <= 0.0) {
        return Err(Error::FlatDirection { curvature: if k.is_finite() { k } else { 0.0 }, tolerance: FLAT_TOL });
    }
    Ok(vals)
}

/// Gaussian curvature `K_ξ^θ` at the boundary point with normal `ξ/|ξ|`,
/// or a flat-direction error.
pub fn curvature_at_direction(body: &ConvexBody, rot: &Rotation, xi: &[f64]) -> Result<f64> {
    let n = norm(xi);
    let vals = hessian_eigs(body, rot, xi)?;
    Ok(vals[1..].iter().map(|v| 1.0 / (v * n)).product())
}

/// Same as [`curvature_at_direction`] but maps flat directions to `0`.
pub fn curvature_or_zero(body: &ConvexBody, rot: &Rotation, xi: &[f64]) -> Result<f64> {
    match curvature_at_direction(body, rot, xi) {
        Ok(k) => Ok(k),
        Err(Error::FlatDirection { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Unit exterior normal `∇ρ(x)/|∇ρ(x)|` at a boundary point of the
/// unrotated body.
pub fn gauss_map(body: &ConvexBody, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != body.dim() {
        return domain("dimension mismatch");
    }
    let r = body.gauge(x);
    if (r - 1.0).abs() > 1e-8 {
        return domain(format!("point is not on the boundary: ρ(x) = {r}"));
    }
    let g = gauge_gradient(body, x)?;
    let n = norm(&g);
    if n < 1e-14 {
        return Err(Error::Degenerate(n));
    }
    Ok(g.into_iter().map(|v| v / n).collect())
}

/// `∇ρ(x)`.
pub fn gauge_gradient(body: &ConvexBody, x: &[f64]) -> Result<Vec<f64>> {
    let d = body.dim();
    let space = JetSpace::get(d, 1);
    let vars: Vec<Jet> = (0..d).map(|i| Jet::variable(&space, i, x[i])).collect();
    match body.gauge_jet(&vars) {
        Some(j) => Ok(j.gradient()),
        None => {
            let s = 1e-6 * norm(x).max(1e-3);
            Ok((0..d)
                .map(|k| {
                    let mut p = x.to_vec();
                    let mut m = x.to_vec();
                    p[k] += s;
                    m[k] -= s;
                    (body.gauge(&p) - body.gauge(&m)) / (2.0 * s)
                })
                .collect())
        }
    }
}

fn gauge_grad_hessian(body: &ConvexBody, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = body.dim();
    let space = JetSpace::get(d, 2);
    let vars: Vec<Jet> = (0..d).map(|i| Jet::variable(&space, i, x[i])).collect();
    if let Some(j) = body.gauge_jet(&vars) {
        return (j.gradient(), j.hessian());
    }
    let g = |p: &[f64]| body.gauge(p);
    let s = 1e-4;
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    for i in 0..d {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        p[i] += s;
        m[i] -= s;
        grad[i] = (g(&p) - g(&m)) / (2.0 * s);
        for j in i..d {
            let mut acc = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut q = x.to_vec();
                q[i] += si * s;
                q[j] += sj * s;
                acc += w * g(&q);
            }
            hess[i * d + j] = acc / (4.0 * s * s);
            hess[j * d + i] = hess[i * d + j];
        }
    }
    (grad, hess)
}

/// Orthonormal basis of the complement of the unit vector `n`
/// (Householder reflection of the coordinate frame).
pub fn complement_basis(n: &[f64]) -> Vec<Vec<f64>> {
    let d = n.len();
    let full = orthogonal_completion(n);
    full.into_iter().skip(1).take(d - 1).collect()
}

/// Orthonormal frame whose first vector is the unit vector `n`.
pub fn orthogonal_completion(n: &[f64]) -> Vec<Vec<f64>> {
    let d = n.len();
    // Householder: H e_1 = n, with v = e_1 - n (or its sign-flipped variant)
    let s = if n[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut v: Vec<f64> = n.iter().map(|x| -s * x).collect();
    v[0] += 1.0;
    let vv = dotp(&v, &v);
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        if vv > 1e-300 {
            let c = 2.0 * v[k] / vv;
            for i in 0..d {
                e[i] -= c * v[i];
            }
        }
        out.push(e);
    }
    // column 0 is now s*n; fix signs so that the frame starts with n
    if s < 0.0 {
        for x in out[0].iter_mut() {
            *x = -*x;
        }
    }
    out
}

/// Principal curvatures at the boundary point `x` of the rotated body,
/// from the shape operator `Tᵀ ∇²ρ T / |∇ρ|` on the tangent space.
pub fn shape_operator_curvatures(body: &ConvexBody, rot: &Rotation, x: &[f64]) -> Result<Vec<f64>> {
    check_dims(body, rot, x)?;
    let d = body.dim();
    let y = rot.apply_t(x);
    let (g, h) = gauge_grad_hessian(body, &y);
    let gn = norm(&g);
    if gn < 1e-14 {
        return Err(Error::Degenerate(gn));
    }
    let nrm: Vec<f64> = g.iter().map(|v| v / gn).collect();
    let t = complement_basis(&nrm);
    let mut s = vec![0.0; (d - 1) * (d - 1)];
    for a in 0..d - 1 {
        for b in 0..d - 1 {
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    acc += t[a][i] * h[i * d + j] * t[b][j];
                }
            }
            s[a * (d - 1) + b] = acc / gn;
        }
    }
    let (vals, _) = sym_eigen(&s, d - 1);
    Ok(vals)
}

/// Gaussian curvature at a boundary point of the unrotated body.
pub fn gaussian_curvature_at_point(body: &ConvexBody, x: &[f64]) -> Result<f64> {
    let rot = Rotation::identity(body.dim());
    Ok(shape_operator_curvatures(body, &rot, x)?.iter().product())
}

/// Boundary point with exterior normal `ξ/|ξ|` and its curvature data:
/// `x^θ(ξ) = ∇H_θ(ξ)`.
pub fn inverse_gauss(body: &ConvexBody, rot: &Rotation, xi: &[f64]) -> Result<SurfacePoint> {
    check_dims(body, rot, xi)?;
    let n = norm(xi);
    if n == 0.0 {
        return domain("zero direction");
    }
    let u: Vec<f64> = xi.iter().map(|v| v / n).collect();
    let (grad, hess) = support_grad_hessian(body, rot, &u)?;
    let (vals, _) = sym_eigen(&hess, body.dim());
    let kappas: Vec<f64> = vals[1..].iter().rev().map(|v| 1.0 / v).collect();
    let k: f64 = kappas.iter().product();
    if !(k.is_finite() && k > FLAT_TOL) || kappas.iter().any(|v| *v <= 0.0) {
        return Err(Error::FlatDirection { curvature: if k.is_finite() { k.max(0.0) } else { 0.0 }, tolerance: FLAT_TOL });
    }
    let y = rot.apply_t(&grad);
    let ny = gauss_map(body, &y).or_else(|_| {
        // tolerate tiny boundary drift from the support maximiser
        let r = body.gauge(&y);
        let ys: Vec<f64> = y.iter().map(|v| v / r).collect();
        gauss_map(body, &ys)
    })?;
    let normal = rot.apply(&ny);
    Ok(SurfacePoint { x: grad, normal, k, principal_curvatures: kappas })
}

/// `(|{x in ∂B : K(x) < δ}|, |n({K < δ})|)` on a boundary mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SublevelMeasure {
    pub area: f64,
    pub normal_image_area: f64,
    pub cells: usize,
}

/// Measure of the low-curvature set and of its normal image, integrated
/// over a radial boundary mesh with `resolution` cells per angular unit
/// direction (d = 2: `resolution` angles; d = 3: `resolution` x `2*resolution`).
pub fn curvature_sublevel_measure(body: &ConvexBody, delta: f64, resolution: usize) -> Result<SublevelMeasure> {
    let d = body.dim();
    if !(delta > 0.0) {
        return domain("δ must be positive");
    }
    let max_k = max_curvature(body)?;
    if delta >= max_k && body.finite_type() != Some(2) {
        return domain(format!("δ = {delta} is not below the maximal curvature {max_k}"));
    }
    let mut area = 0.0;
    let mut nimg = 0.0;
    let mut cells = 0usize;
    let mut visit = |u: &[f64], dsigma: f64| -> Result<()> {
        let r = body.gauge(u);
        let x: Vec<f64> = u.iter().map(|v| v / r).collect();
        let nrm = gauss_map(body, &x)?;
        let k = gaussian_curvature_at_point(body, &x)?;
        if k < delta {
            // radial graph: dA = r^{d-1} / <u, n> dσ with r = 1/ρ(u)
            let rr = 1.0 / r;
            let da = rr.powi(d as i32 - 1) / dotp(u, &nrm) * dsigma;
            area += da;
            nimg += k.max(0.0) * da;
            cells += 1;
        }
        Ok(())
    };
    match d {
        2 => {
            let h = 2.0 * PI / resolution as f64;
            for i in 0..resolution {
                let a = (i as f64 + 0.5) * h;
                visit(&[a.cos(), a.sin()], h)?;
            }
        }
        3 => {
            let nt = resolution;
            let np = 2 * resolution;
            let ht = PI / nt as f64;
            let hp = 2.0 * PI / np as f64;
            for i in 0..nt {
                let th = (i as f64 + 0.5) * ht;
                let (st, ct) = th.sin_cos();
                for j in 0..np {
                    let ph = (j as f64 + 0.5) * hp;
                    visit(&[st * ph.cos(), st * ph.sin(), ct], st * ht * hp)?;
                }
            }
        }
        _ => return Err(Error::Unsupported("boundary mesh only for d = 2, 3".into())),
    }
    let needs_cells = cells > 0 || body.finite_type() != Some(2);
    if needs_cells && cells < 16 {
        return Err(Error::Resolution(format!("only {cells} mesh cells with K < {delta}; refine the mesh")));
    }
    Ok(SublevelMeasure { area, normal_image_area: nimg, cells })
}

/// Largest Gaussian curvature over a boundary sample.
pub fn max_curvature(body: &ConvexBody) -> Result<f64> {
    let d = body.dim();
    let n = if d == 2 { 2048 } else { 4096 };
    let mut best: f64 = 0.0;
    for u in sphere_points(d, n) {
        let r = body.gauge(&u);
        let x: Vec<f64> = u.iter().map(|v| v / r).collect();
        if let Ok(k) = gaussian_curvature_at_point(body, &x) {
            best = best.max(k);
        }
    }
    Ok(best)
}

/// Largest `c` (halving from `c0`) such that every sampled `η` in
/// `B(ξ, c K_ξ²)` satisfies `K_ξ/2 <= K_η <= 3K_ξ/2` for all sample
/// directions `ξ`.
pub fn calibrate_stability_constant(
    body: &ConvexBody,
    rot: &Rotation,
    directions: &[Vec<f64>],
    probes: usize,
    c0: f64,
    seed: u64,
) -> Result<f64> {
    let d = body.dim();
    let mut c = c0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'outer: for _ in 0..60 {
        for xi in directions {
            let kx = curvature_or_zero(body, rot, xi)?;
            if kx <= FLAT_TOL {
                continue;
            }
            let radius = c * kx * kx;
            for _ in 0..probes {
                let dir = random_unit(&mut rng, d);
                let s: f64 = rng.random::<f64>().powf(1.0 / d as f64) * radius;
                let eta: Vec<f64> = xi.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
                let ke = curvature_or_zero(body, rot, &eta)?;
                if !(ke >= 0.5 * kx && ke <= 1.5 * kx) {
                    c *= 0.5;
                    continue 'outer;
                }
            }
        }
        return Ok(c);
    }
    Err(Error::Construction("stability constant collapsed below 2^-60".into()))
}

/// `max_{|ν| = order} |D^ν H_θ(ξ)| / K_ξ^{3 - 2 order}` at a unit direction.
pub fn derivative_bound_ratio(body: &ConvexBody, rot: &Rotation, xi: &[f64], order: usize) -> Result<f64> {
    let k = curvature_at_direction(body, rot, xi)?;
    let j = support_jet(body, rot, xi, order)?;
    let m = j
        .derivatives_of_order(order)
        .into_iter()
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    Ok(m / k.powf(3.0 - 2.0 * order as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supersphere_support_closed_form() {
        let b = ConvexBody::supersphere(2, 4).unwrap();
        let i = Rotation::identity(2);
        let h = support(&b, &i, &[1.0, 1.0]).unwrap();
        assert!((h - 2f64.powf(0.75)).abs() < 1e-14);
        // direct maximisation over a fine boundary grid
        let mut best: f64 = 0.0;
        for k in 0..200_000 {
            let a = 2.0 * PI * k as f64 / 200_000.0;
            let u = [a.cos(), a.sin()];
            let r = b.gauge(&u);
            best = best.max((u[0] + u[1]) / r);
        }
        assert!((best - h).abs() < 1e-9);
        assert!((support(&b, &i, &[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_map_examples() {
        let b = ConvexBody::ellipsoid(&[2.0, 1.0]).unwrap();
        let n = gauss_map(&b, &[2.0, 0.0]).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-15 && n[1].abs() < 1e-15);
        let s = ConvexBody::supersphere(3, 4).unwrap();
        let n = gauss_map(&s, &[1.0, 0.0, 0.0]).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-15);
        assert!(gauss_map(&s, &[0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn inverse_gauss_ellipsoid_axis() {
        let (a, bb) = (1.5, 0.8);
        let e = ConvexBody::ellipsoid(&[a, bb, bb]).unwrap();
        let sp = inverse_gauss(&e, &Rotation::identity(3), &[1.0, 0.0, 0.0]).unwrap();
        assert!((sp.x[0] - a).abs() < 1e-14);
        for k in &sp.principal_curvatures {
            assert!((k - a / (bb * bb)).abs() < 1e-12);
        }
        assert!((sp.k - a * a / bb.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn flat_axis_direction() {
        let s = ConvexBody::supersphere(2, 4).unwrap();
        let r = inverse_gauss(&s, &Rotation::identity(2), &[1.0, 0.0]);
        assert!(matches!(r, Err(Error::FlatDirection { .. })));
    }

    #[test]
    fn ball_hessian_scaling() {
        let b = ConvexBody::ball(3);
        let e = hessian_eigs(&b, &Rotation::identity(3), &[0.0, 2.0, 0.0]).unwrap();
        assert!(e[0].abs() < 1e-12);
        assert!((e[1] - 0.5).abs() < 1e-12 && (e[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn completion_is_orthonormal() {
        let n = [0.3, -0.5, 0.81];
        let l = norm(&n);
        let n: Vec<f64> = n.iter().map(|v| v / l).collect();
        let f = orthogonal_completion(&n);
        for i in 0..3 {
            assert!((f[0][i] - n[i]).abs() < 1e-15);
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dotp(&f[i], &f[j]) - want).abs() < 1e-14);
            }
        }
    }
}
