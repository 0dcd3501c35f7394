//! Gauss-Legendre rules, spherical Bessel functions, and a Filon-type
//! panel rule for `int f(s) exp(-2 pi i lambda s) ds`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn build(n: usize) -> GaussLegendre {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Cached rule with `n` points.
    pub fn get(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut g = cache.lock().expect("quadrature cache poisoned");
        g.entry(n).or_insert_with(|| Arc::new(GaussLegendre::build(n))).clone()
    }

    /// `int_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomials `P_0..P_{n-1}` at `x`.
pub fn legendre_values(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(1.0);
    if n == 1 {
        return out;
    }
    out.push(x);
    for k in 2..n {
        let v = ((2 * k - 1) as f64 * x * out[k - 1] - (k - 1) as f64 * out[k - 2]) / k as f64;
        out.push(v);
    }
    out
}

/// Composite Gauss-Legendre over `[a, b]` with `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, n: usize, mut f: F) -> f64 {
    let g = GaussLegendre::get(n);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        s += g.integrate(lo, lo + h, &mut f);
    }
    s
}

/// Spherical Bessel functions `j_0(w)..j_{n-1}(w)`.
pub fn spherical_bessel(n: usize, w: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    let w = w.abs();
    if w < 1e-8 {
        // leading series term w^k/(2k+1)!!
        let mut term = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            *o = term;
            term *= w / (2 * k + 3) as f64;
        }
        return out;
    }
    let (s, c) = w.sin_cos();
    if w >= n as f64 {
        out[0] = s / w;
        if n > 1 {
            out[1] = s / (w * w) - c / w;
        }
        for k in 2..n {
            out[k] = (2 * k - 1) as f64 / w * out[k - 1] - out[k - 2];
        }
        return out;
    }
    // Miller's downward recurrence, normalised by sum (2k+1) j_k^2 = 1.
    let start = n + 20 + w as usize;
    let mut jp = 0.0;
    let mut jc = 1.0;
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        if k < n {
            out[k] = jc;
        }
        norm += (2 * k + 1) as f64 * jc * jc;
        if k == 0 {
            break;
        }
        let jm = (2 * k + 1) as f64 / w * jc - jp;
        jp = jc;
        jc = jm;
        if jc.abs() > 1e100 {
            jp *= 1e-100;
            jc *= 1e-100;
            norm *= 1e-200;
            for o in out.iter_mut() {
                *o *= 1e-100;
            }
        }
    }
    let scale = 1.0 / norm.sqrt();
    let j0 = s / w;
    let j1 = s / (w * w) - c / w;
    let agree = if j0.abs() >= j1.abs() {
        (out[0] > 0.0) == (j0 > 0.0)
    } else {
        n < 2 || (out[1] > 0.0) == (j1 > 0.0)
    };
    let sign = if agree { 1.0 } else { -1.0 };
    for o in out.iter_mut() {
        *o *= scale * sign;
    }
    out
}

/// Filon-Legendre rule on one panel: `int_lo^hi f(s) exp(-2 pi i lambda s) ds`
/// where `f` is sampled at the `n` Gauss nodes of the panel.
pub fn filon_panel(lo: f64, hi: f64, lambda: f64, values: &[f64]) -> Complex64 {
    filon_panel_tail(lo, hi, lambda, values).0
}

/// As [`filon_panel`], also returning `(hi − lo)(|c_{n−2}| + |c_{n−1}|)`,
/// the size of the last two Legendre coefficients of the interpolant.
pub fn filon_panel_tail(lo: f64, hi: f64, lambda: f64, values: &[f64]) -> (Complex64, f64) {
    let n = values.len();
    let g = GaussLegendre::get(n);
    let h = 0.5 * (hi - lo);
    let c = 0.5 * (hi + lo);
    // Legendre coefficients of the interpolant.
    let mut coef = vec![0.0; n];
    let mut p = vec![0.0; n];
    for (i, (&x, &w)) in g.nodes.iter().zip(&g.weights).enumerate() {
        p[0] = 1.0;
        if n > 1 {
            p[1] = x;
        }
        for k in 2..n {
            p[k] = ((2 * k - 1) as f64 * x * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
        }
        for k in 0..n {
            coef[k] += w * values[i] * p[k];
        }
    }
    for (k, a) in coef.iter_mut().enumerate() {
        *a *= (2 * k + 1) as f64 / 2.0;
    }
    let omega = 2.0 * PI * lambda * h;
    let jn = spherical_bessel(n, omega);
    let sgn = if omega < 0.0 { -1.0 } else { 1.0 };
    // int_{-1}^{1} P_k(x) e^{-i w x} dx = 2 (-i)^k j_k(w)
    let mut acc = Complex64::new(0.0, 0.0);
    let mut ipow = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let jk = if k % 2 == 1 { sgn * jn[k] } else { jn[k] };
        acc += ipow * (2.0 * coef[k] * jk);
        ipow *= Complex64::new(0.0, -1.0);
    }
    let phase = Complex64::from_polar(1.0, -2.0 * PI * lambda * c);
    let tail = if n >= 2 { 2.0 * h * (coef[n - 1].abs() + coef[n - 2].abs()) } else { f64::INFINITY };
    (acc * phase * h, tail)
}

const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for i in 0..7 {
        let v = f(c - h * GK_X[i]) + f(c + h * GK_X[i]);
        k += GK_WK[i] * v;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * v;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature. Starts from `initial`
/// equal pieces and bisects the worst piece until the summed error
/// estimate is below `tol` or `max_pieces` is reached. Returns
/// `(value, error estimate)`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, initial: usize, max_pieces: usize) -> (f64, f64) {
    let n = initial.max(1);
    let mut pieces: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / n as f64;
            let hi = a + (b - a) * (i + 1) as f64 / n as f64;
            let (v, e) = gk15(&mut f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= tol || pieces.len() >= max_pieces {
            let val: f64 = pieces.iter().map(|p| p.2).sum();
            return (val, err);
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            let val: f64 = pieces.iter().map(|p| p.2).sum();
            return (val, err);
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// Breakpoints on `[a, b]` graded geometrically toward both ends with ratio
/// `sigma` and `depth` levels; the middle is split into `interior` panels.
pub fn graded_breaks(a: f64, b: f64, sigma: f64, depth: usize, interior: usize) -> Vec<f64> {
    let half = 0.5 * (b - a);
    let inner = half * sigma;
    let mut left = vec![a];
    for k in (1..=depth).rev() {
        left.push(a + inner * sigma.powi(k as i32 - 1));
    }
    let mut out = left.clone();
    // interior panels between a + inner and b - inner
    let lo = a + inner;
    let hi = b - inner;
    for i in 1..interior {
        out.push(lo + (hi - lo) * i as f64 / interior as f64);
    }
    let mut right: Vec<f64> = left.iter().map(|x| a + b - x).collect();
    right.reverse();
    out.extend(right);
    out.dedup_by(|x, y| (*x - *y).abs() <= 0.0);
    out
}
