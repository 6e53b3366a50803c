//! Truncated multivariate Taylor polynomials (forward-mode jets).
//!
//! Used to differentiate chart-based frames exactly: a jet of order K in
//! `nv` variables stores the Taylor coefficients of all monomials of total
//! degree <= K around an expansion point.

use std::collections::HashMap;
use std::sync::Arc;

/// Monomial bookkeeping shared by all jets of one (nvars, order).
#[derive(Debug)]
pub struct JetSpace {
    pub nvars: usize,
    pub order: usize,
    pub monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    mul_table: Vec<(u32, u32, u32)>,
    /// `deriv[k]` lists (source, target, factor) for ∂/∂x_k.
    deriv: Vec<Vec<(u32, u32, f64)>>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> Arc<Self> {
        let mut monomials = Vec::new();
        for deg in 0..=order {
            let mut cur = vec![0u8; nvars];
            gen_deg(nvars, deg, 0, &mut cur, &mut monomials);
        }
        let index: HashMap<Vec<u8>, usize> =
            monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let deg = |m: &Vec<u8>| m.iter().map(|&e| e as usize).sum::<usize>();
        let mut mul_table = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if deg(a) + deg(b) <= order {
                    let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    mul_table.push((i as u32, j as u32, index[&s] as u32));
                }
            }
        }
        let mut deriv = vec![Vec::new(); nvars];
        for (k, dk) in deriv.iter_mut().enumerate() {
            for (src, mono) in monomials.iter().enumerate() {
                if mono[k] > 0 {
                    let mut t = mono.clone();
                    t[k] -= 1;
                    dk.push((src as u32, index[&t] as u32, mono[k] as f64));
                }
            }
        }
        Arc::new(JetSpace { nvars, order, monomials, index, mul_table, deriv })
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn index_of(&self, mono: &[u8]) -> Option<usize> {
        self.index.get(mono).copied()
    }
}

fn gen_deg(nv: usize, deg: usize, pos: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos == nv - 1 {
        cur[pos] = deg as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for e in (0..=deg).rev() {
        cur[pos] = e as u8;
        gen_deg(nv, deg - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

#[derive(Clone, Debug)]
pub struct Jet {
    pub space: Arc<JetSpace>,
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, v: f64) -> Self {
        let mut c = vec![0.0; space.len()];
        c[0] = v;
        Jet { space: space.clone(), c }
    }

    /// The coordinate function `x_k` expanded around `x0`.
    pub fn variable(space: &Arc<JetSpace>, k: usize, x0: f64) -> Self {
        let mut j = Jet::constant(space, x0);
        if space.order >= 1 {
            let mut mono = vec![0u8; space.nvars];
            mono[k] = 1;
            j.c[space.index_of(&mono).unwrap()] = 1.0;
        }
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let mut c = vec![0.0; self.c.len()];
        for &(i, j, k) in &self.space.mul_table {
            c[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        Jet { space: self.space.clone(), c }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet { space: self.space.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        Jet { space: self.space.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { space: self.space.clone(), c: self.c.iter().map(|a| a * s).collect() }
    }

    pub fn add_scaled(&mut self, o: &Jet, s: f64) {
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a += s * b;
        }
    }

    /// `f(self)` given the derivatives `f^{(k)}(a)` at the constant term, k = 0..=order.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = Jet::constant(&self.space, derivs[0]);
        let mut pow = Jet::constant(&self.space, 1.0);
        let mut fact = 1.0;
        for (k, dk) in derivs.iter().enumerate().skip(1) {
            pow = pow.mul(&h);
            fact *= k as f64;
            out.add_scaled(&pow, dk / fact);
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.c[0];
        let mut d = Vec::with_capacity(self.space.order + 1);
        let mut v = 1.0 / a;
        for k in 0..=self.space.order {
            d.push(v);
            v *= -((k + 1) as f64) / a;
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Jet {
        let a = self.c[0];
        let mut d = Vec::with_capacity(self.space.order + 1);
        let mut coef = 1.0;
        let mut p = 0.5f64;
        for _ in 0..=self.space.order {
            d.push(coef * a.powf(p));
            coef *= p;
            p -= 1.0;
        }
        self.compose(&d)
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self.mul(&o.recip())
    }

    /// ∂/∂x_k; the result is exact up to order `order - 1`.
    pub fn deriv(&self, k: usize) -> Jet {
        let mut c = vec![0.0; self.c.len()];
        for &(src, dst, f) in &self.space.deriv[k] {
            c[dst as usize] += f * self.c[src as usize];
        }
        Jet { space: self.space.clone(), c }
    }

    /// First partial derivatives at the expansion point.
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.space.nvars).map(|k| self.deriv(k).value()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient() {
        let sp = JetSpace::new(2, 3);
        let x = Jet::variable(&sp, 0, 0.5);
        let y = Jet::variable(&sp, 1, -0.25);
        // f = x*y/(1+x^2)
        let one = Jet::constant(&sp, 1.0);
        let f = x.mul(&y).div(&one.add(&x.mul(&x)));
        let fx = |x: f64, y: f64| x * y / (1.0 + x * x);
        let h = 1e-4;
        let dfx = (fx(0.5 + h, -0.25) - fx(0.5 - h, -0.25)) / (2.0 * h);
        assert!((f.deriv(0).value() - dfx).abs() < 1e-8);
        let dxy = (fx(0.5 + h, -0.25 + h) - fx(0.5 + h, -0.25 - h) - fx(0.5 - h, -0.25 + h)
            + fx(0.5 - h, -0.25 - h))
            / (4.0 * h * h);
        assert!((f.deriv(0).deriv(1).value() - dxy).abs() < 1e-6);
    }

    #[test]
    fn sqrt_series() {
        let sp = JetSpace::new(1, 4);
        let x = Jet::variable(&sp, 0, 2.0);
        let s = x.sqrt();
        // d^3/dx^3 sqrt(x) = 3/8 x^{-5/2}
        let d3 = s.deriv(0).deriv(0).deriv(0).value();
        assert!((d3 - 0.375 * 2f64.powf(-2.5)).abs() < 1e-14);
        assert!((s.mul(&s).c[1] - 1.0).abs() < 1e-14);
    }
}
