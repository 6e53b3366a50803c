//! Differential operators with polynomial coefficients in `(x, z)`.

use crate::error::{HtypeError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Polynomial: exponent vector → coefficient.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub d: usize,
    pub terms: BTreeMap<Vec<u8>, f64>,
}

impl Poly {
    pub fn zero(d: usize) -> Self {
        Poly { d, terms: BTreeMap::new() }
    }

    pub fn constant(d: usize, c: f64) -> Self {
        let mut p = Poly::zero(d);
        p.add_term(vec![0; d], c);
        p
    }

    pub fn var(d: usize, k: usize) -> Self {
        let mut e = vec![0u8; d];
        e[k] = 1;
        let mut p = Poly::zero(d);
        p.add_term(e, 1.0);
        p
    }

    pub fn add_term(&mut self, e: Vec<u8>, c: f64) {
        if c == 0.0 {
            return;
        }
        let v = self.terms.entry(e.clone()).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), *c);
        }
        p
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut p = Poly::zero(self.d);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), c * s);
        }
        p
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut p = Poly::zero(self.d);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u8> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }

    pub fn deriv(&self, k: usize) -> Poly {
        let mut p = Poly::zero(self.d);
        for (e, c) in &self.terms {
            if e[k] > 0 {
                let mut e2 = e.clone();
                e2[k] -= 1;
                p.add_term(e2, c * e[k] as f64);
            }
        }
        p
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(y).map(|(k, v)| v.powi(*k as i32)).product::<f64>())
            .sum()
    }
}

/// One term `coef · y^mono · ∂^deriv`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Term {
    pub mono: Vec<u8>,
    pub deriv: Vec<u8>,
    pub coef: f64,
}

/// `Σ coef · y^mono ∂^deriv`, with weights 1 on `x`, 2 on `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyDiffOp {
    pub n: usize,
    pub m: usize,
    pub order: i32,
    terms: BTreeMap<(Vec<u8>, Vec<u8>), f64>,
}

fn binom(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl PolyDiffOp {
    pub fn zero(n: usize, m: usize, order: i32) -> Self {
        PolyDiffOp { n, m, order, terms: BTreeMap::new() }
    }

    fn d(&self) -> usize {
        self.n + self.m
    }

    pub fn weight(&self, k: usize) -> i32 {
        if k < self.n {
            1
        } else {
            2
        }
    }

    /// Weighted order of one term.
    pub fn term_order(&self, mono: &[u8], deriv: &[u8]) -> i32 {
        (0..self.d()).map(|k| self.weight(k) * (mono[k] as i32 - deriv[k] as i32)).sum()
    }

    pub fn add_term(&mut self, mono: Vec<u8>, deriv: Vec<u8>, c: f64) {
        if c == 0.0 {
            return;
        }
        let key = (mono, deriv);
        let v = self.terms.entry(key.clone()).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&key);
        }
    }

    /// Vector field `Σ_k v_k ∂_k`.
    pub fn vector_field(n: usize, m: usize, order: i32, comps: &[Poly]) -> Self {
        let mut op = PolyDiffOp::zero(n, m, order);
        for (k, p) in comps.iter().enumerate() {
            let mut dv = vec![0u8; n + m];
            dv[k] = 1;
            for (e, c) in &p.terms {
                op.add_term(e.clone(), dv.clone(), *c);
            }
        }
        op
    }

    /// Multiplication by a polynomial (zeroth-order operator).
    pub fn multiply(n: usize, m: usize, order: i32, p: &Poly) -> Self {
        let mut op = PolyDiffOp::zero(n, m, order);
        for (e, c) in &p.terms {
            op.add_term(e.clone(), vec![0; n + m], *c);
        }
        op
    }

    pub fn terms(&self) -> Vec<Term> {
        self.terms.iter().map(|((mo, de), c)| Term { mono: mo.clone(), deriv: de.clone(), coef: *c }).collect()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    pub fn add(&self, o: &PolyDiffOp) -> PolyDiffOp {
        let mut r = self.clone();
        for ((mo, de), c) in &o.terms {
            r.add_term(mo.clone(), de.clone(), *c);
        }
        r
    }

    pub fn scale(&self, s: f64) -> PolyDiffOp {
        let mut r = PolyDiffOp::zero(self.n, self.m, self.order);
        for ((mo, de), c) in &self.terms {
            r.add_term(mo.clone(), de.clone(), c * s);
        }
        r
    }

    /// `self ∘ other`, by the Leibniz rule.
    pub fn compose(&self, other: &PolyDiffOp, order: i32) -> PolyDiffOp {
        let d = self.d();
        let mut r = PolyDiffOp::zero(self.n, self.m, order);
        for ((m1, d1), c1) in &self.terms {
            for ((m2, d2), c2) in &other.terms {
                // ∂^{d1} (y^{m2} ∂^{d2}) = Σ_{γ ≤ d1} C(d1,γ) ∂^γ(y^{m2}) ∂^{d1-γ+d2}
                let mut gamma = vec![0u8; d];
                loop {
                    let mut coef = c1 * c2;
                    let mut mono = Vec::with_capacity(d);
                    let mut ok = true;
                    for k in 0..d {
                        if gamma[k] > m2[k] {
                            ok = false;
                            break;
                        }
                        coef *= binom(d1[k], gamma[k]);
                        // falling factorial from differentiating y_k^{m2_k}
                        for i in 0..gamma[k] {
                            coef *= (m2[k] - i) as f64;
                        }
                        mono.push(m1[k] + m2[k] - gamma[k]);
                    }
                    if ok {
                        let deriv: Vec<u8> = (0..d).map(|k| d1[k] - gamma[k] + d2[k]).collect();
                        r.add_term(mono, deriv, coef);
                    }
                    // next γ ≤ d1
                    let mut k = 0;
                    loop {
                        if k == d {
                            break;
                        }
                        if gamma[k] < d1[k] {
                            gamma[k] += 1;
                            break;
                        }
                        gamma[k] = 0;
                        k += 1;
                    }
                    if k == d {
                        break;
                    }
                }
            }
        }
        r
    }

    /// Formal adjoint with respect to Lebesgue measure.
    pub fn adjoint(&self) -> PolyDiffOp {
        let (n, m) = (self.n, self.m);
        let d = self.d();
        let mut r = PolyDiffOp::zero(n, m, self.order);
        for ((mo, de), c) in &self.terms {
            let sign = if de.iter().map(|v| *v as u32).sum::<u32>() % 2 == 0 { 1.0 } else { -1.0 };
            let mut dop = PolyDiffOp::zero(n, m, 0);
            dop.add_term(vec![0; d], de.clone(), sign);
            let mut mul = PolyDiffOp::zero(n, m, 0);
            mul.add_term(mo.clone(), vec![0; d], *c);
            r = r.add(&dop.compose(&mul, self.order));
        }
        r
    }

    /// Largest deviation of a term's weighted order from the declared order.
    pub fn homogeneity_defect(&self) -> i32 {
        self.terms.keys().map(|(mo, de)| (self.term_order(mo, de) - self.order).abs()).max().unwrap_or(0)
    }

    pub fn max_derivative_order(&self) -> u32 {
        self.terms.keys().map(|(_, de)| de.iter().map(|v| *v as u32).sum()).max().unwrap_or(0)
    }

    /// Apply to a function known through value, gradient and Hessian at `y`.
    pub fn apply(&self, y: &[f64], value: f64, grad: &[f64], hess: &nalgebra::DMatrix<f64>) -> Result<f64> {
        let mut s = 0.0;
        for ((mo, de), c) in &self.terms {
            let mono: f64 = mo.iter().zip(y).map(|(k, v)| v.powi(*k as i32)).product();
            let idx: Vec<usize> = de.iter().enumerate().flat_map(|(k, &p)| std::iter::repeat(k).take(p as usize)).collect();
            let dv = match idx.len() {
                0 => value,
                1 => grad[idx[0]],
                2 => hess[(idx[0], idx[1])],
                _ => return Err(HtypeError::InvalidArgument("operator order above 2".into())),
            };
            s += c * mono * dv;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_fields_bracket() {
        // X = ∂_x - y/2 ∂_z, Y = ∂_y + x/2 ∂_z: [X, Y] = ∂_z
        let x = PolyDiffOp::vector_field(2, 1, -1, &[Poly::constant(3, 1.0), Poly::zero(3), Poly::var(3, 1).scale(-0.5)]);
        let y = PolyDiffOp::vector_field(2, 1, -1, &[Poly::zero(3), Poly::constant(3, 1.0), Poly::var(3, 0).scale(0.5)]);
        let br = x.compose(&y, -2).add(&y.compose(&x, -2).scale(-1.0));
        let terms = br.terms();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].deriv, vec![0, 0, 1]);
        assert_eq!(terms[0].coef, 1.0);
        assert_eq!(br.homogeneity_defect(), 0);
    }

    #[test]
    fn adjoint_of_first_order() {
        // (x ∂_x)* = -∂_x ∘ x = -1 - x ∂_x
        let mut op = PolyDiffOp::zero(1, 1, 0);
        op.add_term(vec![1, 0], vec![1, 0], 1.0);
        let adj = op.adjoint();
        let t = adj.terms();
        assert_eq!(t.len(), 2);
        assert!(t.iter().any(|t| t.deriv == vec![0, 0] && t.coef == -1.0));
        assert!(t.iter().any(|t| t.deriv == vec![1, 0] && t.coef == -1.0));
        assert_eq!(adj.adjoint(), op);
    }
}
