//! Truncated multivariate Taylor polynomials (forward-mode jets).
//!
//! A [`Jet`] stores the Taylor coefficients of a function of `n` variables
//! up to total degree `order`, in graded monomial order. Arithmetic truncates
//! products; univariate functions are applied by composing their Taylor
//! series with the non-constant part. Mixed partials are recovered as
//! `coefficient * nu!`.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    monos: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<(u32, u32, u32)>,
    factorials: Vec<f64>,
}

fn graded_monomials(nvars: usize, order: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for deg in 0..=order {
        let mut cur = vec![0u8; nvars];
        fill(&mut out, &mut cur, 0, deg);
    }
    out
}

fn fill(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, left: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = left as u8;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k as u8;
        fill(out, cur, pos + 1, left - k);
    }
}

impl JetSpace {
    fn build(nvars: usize, order: usize) -> JetSpace {
        assert!(nvars >= 1, "jet space needs at least one variable");
        let monos = graded_monomials(nvars, order);
        let index: HashMap<Vec<u8>, usize> =
            monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let deg: Vec<usize> = monos.iter().map(|m| m.iter().map(|&v| v as usize).sum()).collect();
        let mut products = Vec::new();
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                if deg[i] + deg[j] > order {
                    continue;
                }
                let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, index[&s] as u32));
            }
        }
        let factorials = monos
            .iter()
            .map(|m| m.iter().map(|&v| (1..=v as u64).product::<u64>() as f64).product())
            .collect();
        JetSpace { nvars, order, monos, index, products, factorials }
    }

    /// Shared space for `(nvars, order)`; built once per process.
    pub fn get(nvars: usize, order: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet cache poisoned");
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(JetSpace::build(nvars, order)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn index_of(&self, multi: &[u8]) -> Option<usize> {
        self.index.get(multi).copied()
    }
}

#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, v: f64) -> Jet {
        let mut c = vec![0.0; space.len()];
        c[0] = v;
        Jet { space: space.clone(), c }
    }

    /// The `i`-th coordinate variable expanded at `v`.
    pub fn variable(space: &Arc<JetSpace>, i: usize, v: f64) -> Jet {
        let mut j = Jet::constant(space, v);
        let mut m = vec![0u8; space.nvars];
        m[i] = 1;
        if let Some(k) = space.index_of(&m) {
            j.c[k] = 1.0;
        }
        j
    }

    /// Affine jet `base + sum_l u_l dirs[l]`, one per output coordinate.
    pub fn affine(space: &Arc<JetSpace>, base: &[f64], dirs: &[Vec<f64>]) -> Vec<Jet> {
        (0..base.len())
            .map(|k| {
                let mut j = Jet::constant(space, base[k]);
                for (l, v) in dirs.iter().enumerate() {
                    let mut m = vec![0u8; space.nvars];
                    m[l] = 1;
                    if let Some(idx) = space.index_of(&m) {
                        j.c[idx] = v[k];
                    }
                }
                j
            })
            .collect()
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn coeff(&self, multi: &[u8]) -> f64 {
        self.space.index_of(multi).map(|k| self.c[k]).unwrap_or(0.0)
    }

    /// Mixed partial derivative for multi-index `multi`.
    pub fn derivative(&self, multi: &[u8]) -> f64 {
        match self.space.index_of(multi) {
            Some(k) => self.c[k] * self.space.factorials[k],
            None => 0.0,
        }
    }

    pub fn gradient(&self) -> Vec<f64> {
        let n = self.space.nvars;
        (0..n)
            .map(|i| {
                let mut m = vec![0u8; n];
                m[i] = 1;
                self.derivative(&m)
            })
            .collect()
    }

    /// Row-major Hessian.
    pub fn hessian(&self) -> Vec<f64> {
        let n = self.space.nvars;
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut m = vec![0u8; n];
                m[i] += 1;
                m[j] += 1;
                h[i * n + j] = self.derivative(&m);
            }
        }
        h
    }

    /// Every mixed partial of total order `k`, paired with its multi-index.
    pub fn derivatives_of_order(&self, k: usize) -> Vec<(Vec<u8>, f64)> {
        self.space
            .monos
            .iter()
            .enumerate()
            .filter(|(_, m)| m.iter().map(|&v| v as usize).sum::<usize>() == k)
            .map(|(i, m)| (m.clone(), self.c[i] * self.space.factorials[i]))
            .collect()
    }

    fn same_space(&self, other: &Jet) {
        debug_assert!(
            Arc::ptr_eq(&self.space, &other.space)
                || (self.space.nvars == other.space.nvars && self.space.order == other.space.order)
        );
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { space: self.space.clone(), c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    /// `sum_k t[k] (self - self(0))^k`: composes a univariate Taylor series.
    pub fn compose(&self, t: &[f64]) -> Jet {
        let mut h = self.clone();
        h.c[0] = 0.0;
        let n = t.len().min(self.space.order + 1);
        let mut acc = Jet::constant(&self.space, t[n - 1]);
        for k in (0..n - 1).rev() {
            acc = &acc * &h;
            acc.c[0] += t[k];
        }
        acc
    }

    /// `self^p` for real `p`; requires a positive constant term unless `p`
    /// is a nonnegative integer.
    pub fn powf(&self, p: f64) -> Jet {
        let a = self.c[0];
        let n = self.space.order;
        let mut t = Vec::with_capacity(n + 1);
        let mut binom = 1.0;
        for k in 0..=n {
            t.push(binom * a.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&t)
    }

    /// Integer power by repeated squaring (exact polynomial arithmetic).
    pub fn powi(&self, e: u32) -> Jet {
        let mut result = Jet::constant(&self.space, 1.0);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Jet {
        let a = self.c[0];
        let n = self.space.order;
        let t: Vec<f64> = (0..=n)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / a.powi(k as i32 + 1))
            .collect();
        self.compose(&t)
    }

    /// Sign-flip according to the constant term; not differentiable at 0.
    pub fn abs(&self) -> Jet {
        if self.c[0] < 0.0 {
            -self
        } else {
            self.clone()
        }
    }

    pub fn exp(&self) -> Jet {
        let ea = self.c[0].exp();
        let mut t = Vec::with_capacity(self.space.order + 1);
        let mut f = 1.0;
        for k in 0..=self.space.order {
            if k > 0 {
                f *= k as f64;
            }
            t.push(ea / f);
        }
        self.compose(&t)
    }

    pub fn ln(&self) -> Jet {
        let a = self.c[0];
        let mut t = vec![a.ln()];
        for k in 1..=self.space.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (k as f64 * a.powi(k as i32)));
        }
        self.compose(&t)
    }

    pub fn sin(&self) -> Jet {
        let a = self.c[0];
        let (s, c) = a.sin_cos();
        let cyc = [s, c, -s, -c];
        let mut t = Vec::new();
        let mut f = 1.0;
        for k in 0..=self.space.order {
            if k > 0 {
                f *= k as f64;
            }
            t.push(cyc[k % 4] / f);
        }
        self.compose(&t)
    }

    pub fn cos(&self) -> Jet {
        let a = self.c[0];
        let (s, c) = a.sin_cos();
        let cyc = [c, -s, -c, s];
        let mut t = Vec::new();
        let mut f = 1.0;
        for k in 0..=self.space.order {
            if k > 0 {
                f *= k as f64;
            }
            t.push(cyc[k % 4] / f);
        }
        self.compose(&t)
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        self.same_space(o);
        Jet { space: self.space.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        self.same_space(o);
        Jet { space: self.space.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        self.same_space(o);
        let mut c = vec![0.0; self.c.len()];
        for &(i, j, k) in &self.space.products {
            c[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        Jet { space: self.space.clone(), c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        &self + &o
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        &self - &o
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        &self * &o
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// `sum_i a_i x_i` for jets `x` and real weights.
pub fn dot(weights: &[f64], xs: &[Jet]) -> Jet {
    let mut acc = Jet::constant(xs[0].space(), 0.0);
    for (w, x) in weights.iter().zip(xs) {
        if *w != 0.0 {
            acc = &acc + &x.scale(*w);
        }
    }
    acc
}

pub fn sum(xs: &[Jet]) -> Jet {
    let mut acc = Jet::constant(xs[0].space(), 0.0);
    for x in xs {
        acc = &acc + x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_count() {
        let s = JetSpace::get(3, 4);
        assert_eq!(s.len(), 35);
        let s = JetSpace::get(5, 3);
        assert_eq!(s.len(), 56);
    }

    #[test]
    fn product_rule() {
        let s = JetSpace::get(2, 3);
        let x = Jet::variable(&s, 0, 0.7);
        let y = Jet::variable(&s, 1, -0.3);
        let f = &(&x * &x) * &y; // x^2 y
        assert!((f.derivative(&[2, 1]) - 2.0).abs() < 1e-15);
        assert!((f.derivative(&[1, 1]) - 1.4).abs() < 1e-15);
        assert!((f.derivative(&[1, 0]) - 2.0 * 0.7 * -0.3).abs() < 1e-15);
    }

    #[test]
    fn univariate_functions() {
        let s = JetSpace::get(1, 6);
        let x = Jet::variable(&s, 0, 0.4);
        let e = x.exp();
        for k in 0..=6u8 {
            assert!((e.derivative(&[k]) - 0.4f64.exp()).abs() < 1e-12);
        }
        let p = x.powf(2.5);
        // d^3 x^2.5 = 2.5*1.5*0.5 x^-0.5
        assert!((p.derivative(&[3]) - 2.5 * 1.5 * 0.5 * 0.4f64.powf(-0.5)).abs() < 1e-12);
        let r = x.recip();
        assert!((r.derivative(&[2]) - 2.0 / 0.4f64.powi(3)).abs() < 1e-9);
        let l = x.ln();
        assert!((l.derivative(&[3]) - 2.0 / 0.4f64.powi(3)).abs() < 1e-9);
        let sn = x.sin();
        assert!((sn.derivative(&[3]) + 0.4f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn euclidean_norm_hessian() {
        let s = JetSpace::get(3, 2);
        let xi = [1.0, 2.0, 2.0];
        let xs: Vec<Jet> = (0..3).map(|i| Jet::variable(&s, i, xi[i])).collect();
        let n = sum(&xs.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
        let h = n.hessian();
        // (I - xi xi^T/9)/3
        for i in 0..3 {
            for j in 0..3 {
                let want = ((i == j) as u8 as f64 - xi[i] * xi[j] / 9.0) / 3.0;
                assert!((h[i * 3 + j] - want).abs() < 1e-14);
            }
        }
    }
}
