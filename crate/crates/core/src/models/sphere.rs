//! The quaternionic Hopf foliation of the 7-sphere in an affine chart.
//!
//! The sphere of radius `2·scale` is written as unit vectors `ŷ = (a, b)` of
//! `H²` (scaled), with chart `p ∈ R⁷ ↦ ŷ = (1, p)/|(1, p)|`. Leaves are the
//! orbits `ŷ·Sp(1)`. With round horizontal length scale `λ = 2·scale` and
//! vertical scale `μ = λ²/2` the frame below is orthonormal and H-type.

use super::ChartFrame;
use crate::error::{HtypeError, Result};
use crate::jet::{Jet, JetSpace};

#[derive(Clone, Debug)]
pub struct QuaternionicHopf {
    pub scale: f64,
    lambda: f64,
    mu: f64,
}

impl QuaternionicHopf {
    pub fn new(scale: f64) -> Self {
        let lambda = 2.0 * scale;
        QuaternionicHopf { scale, lambda, mu: 0.5 * lambda * lambda }
    }
}

type Q = [Jet; 4];

fn qmul(a: &Q, b: &Q) -> Q {
    let m = |x: &Jet, y: &Jet| x.mul(y);
    [
        m(&a[0], &b[0]).sub(&m(&a[1], &b[1])).sub(&m(&a[2], &b[2])).sub(&m(&a[3], &b[3])),
        m(&a[0], &b[1]).add(&m(&a[1], &b[0])).add(&m(&a[2], &b[3])).sub(&m(&a[3], &b[2])),
        m(&a[0], &b[2]).sub(&m(&a[1], &b[3])).add(&m(&a[2], &b[0])).add(&m(&a[3], &b[1])),
        m(&a[0], &b[3]).add(&m(&a[1], &b[2])).sub(&m(&a[2], &b[1])).add(&m(&a[3], &b[0])),
    ]
}

/// `q · e_k` for a basis quaternion `e_k`.
fn qmul_basis(q: &Q, k: usize) -> Q {
    let sp = &q[0].space;
    let e: Q = std::array::from_fn(|r| Jet::constant(sp, if r == k { 1.0 } else { 0.0 }));
    qmul(q, &e)
}

fn conj(q: &Q) -> Q {
    [q[0].clone(), q[1].scale(-1.0), q[2].scale(-1.0), q[3].scale(-1.0)]
}

fn dot(u: &[Jet], v: &[Jet]) -> Jet {
    let mut s = u[0].mul(&v[0]);
    for k in 1..u.len() {
        s = s.add(&u[k].mul(&v[k]));
    }
    s
}

impl ChartFrame for QuaternionicHopf {
    fn dims(&self) -> (usize, usize) {
        (4, 3)
    }

    fn in_domain(&self, p: &[f64]) -> bool {
        p.len() == 7 && p.iter().all(|x| x.is_finite() && x.abs() < 1e3)
    }

    fn base_point(&self) -> Vec<f64> {
        vec![0.0; 7]
    }

    fn frame_jet(&self, p: &[f64], order: usize) -> Result<Vec<Vec<Jet>>> {
        if !self.in_domain(p) {
            return Err(HtypeError::OutOfDomain(format!("qhopf chart at {p:?}")));
        }
        let sp = JetSpace::new(7, order);
        let one = Jet::constant(&sp, 1.0);
        let ps: Vec<Jet> = (0..7).map(|k| Jet::variable(&sp, k, p[k])).collect();
        let mut r2 = one.clone();
        for x in &ps {
            r2 = r2.add(&x.mul(x));
        }
        let inv_r = r2.sqrt().recip();
        let mut y: Vec<Jet> = vec![inv_r.clone()];
        y.extend(ps.iter().map(|x| x.mul(&inv_r)));
        let a: Q = [y[0].clone(), y[1].clone(), y[2].clone(), y[3].clone()];
        let b: Q = [y[4].clone(), y[5].clone(), y[6].clone(), y[7].clone()];

        // ambient tangent vectors (unit-sphere round metric)
        let mut ambient: Vec<Vec<Jet>> = Vec::with_capacity(7);
        let ab = qmul(&a, &conj(&b));
        let inv_a2 = dot(&a, &a).recip();
        let mut horiz: Vec<Vec<Jet>> = Vec::with_capacity(4);
        for h in 0..4 {
            let abh = qmul_basis(&ab, h);
            let mut v: Vec<Jet> = abh.iter().map(|x| x.mul(&inv_a2).scale(-1.0)).collect();
            for k in 0..4 {
                v.push(Jet::constant(&sp, if k == h { 1.0 } else { 0.0 }));
            }
            // Gram-Schmidt
            for u in &horiz {
                let pr = dot(&v, u);
                v = v.iter().zip(u).map(|(vi, ui)| vi.sub(&pr.mul(ui))).collect();
            }
            let nrm = dot(&v, &v).sqrt().recip();
            v = v.iter().map(|vi| vi.mul(&nrm)).collect();
            horiz.push(v);
        }
        for v in &horiz {
            ambient.push(v.iter().map(|x| x.scale(1.0 / self.lambda)).collect());
        }
        for i in 1..4 {
            let ai = qmul_basis(&a, i);
            let bi = qmul_basis(&b, i);
            let w: Vec<Jet> = ai.iter().chain(bi.iter()).map(|x| x.scale(1.0 / self.mu)).collect();
            ambient.push(w);
        }
        // chart components: p_k = y_{k+1}/y_0
        let inv_y0 = y[0].recip();
        let inv_y02 = inv_y0.mul(&inv_y0);
        let mut out = vec![vec![Jet::constant(&sp, 0.0); 7]; 7];
        for (col, w) in ambient.iter().enumerate() {
            for k in 0..7 {
                out[k][col] = w[k + 1].mul(&y[0]).sub(&y[k + 1].mul(&w[0])).mul(&inv_y02);
            }
        }
        Ok(out)
    }
}
