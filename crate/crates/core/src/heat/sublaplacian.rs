//! Sub-Laplacian `Δ_sub f = -(Σ Y_α Y_α f + div(Y_α) Y_α f)` of a model,
//! symmetric and non-negative for the Popp measure.

use crate::error::Result;
use crate::models::FoliationModel;
use nalgebra::DMatrix;

pub struct SubLaplacian<'a> {
    model: &'a FoliationModel,
}

impl<'a> SubLaplacian<'a> {
    pub fn new(model: &'a FoliationModel) -> Self {
        SubLaplacian { model }
    }

    /// `div Y_α = Σ_b c^b_{bα}` for the coframe volume at `p`.
    pub fn divergence(&self, p: &[f64]) -> Result<Vec<f64>> {
        let s = self.model.structure(p, false)?;
        let d = self.model.dim();
        Ok((0..self.model.n).map(|a| (0..d).map(|b| s.c.get(b, a, b)).sum()).collect())
    }

    /// `Δ_sub f(p)` from the chart gradient and Hessian of `f` at `p`.
    pub fn apply(&self, p: &[f64], grad: &[f64], hess: &DMatrix<f64>) -> Result<f64> {
        let d = self.model.dim();
        let fj = self.model.frame_jet(p, 1)?;
        let div = self.divergence(p)?;
        let mut acc = 0.0;
        for a in 0..self.model.n {
            let y: Vec<f64> = (0..d).map(|k| fj[k][a].value()).collect();
            for k in 0..d {
                // Y_α(Y_α^k) ∂_k f
                let dyk = fj[k][a].gradient();
                let drift: f64 = (0..d).map(|l| y[l] * dyk[l]).sum();
                acc += (drift + div[a] * y[k]) * grad[k];
                for l in 0..d {
                    acc += y[k] * y[l] * hess[(k, l)];
                }
            }
        }
        Ok(-acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::hopf_s3;
    use crate::quad::gauss_legendre_on;

    fn bump(p: &[f64], c: &[f64], s: f64) -> (f64, Vec<f64>, DMatrix<f64>) {
        let d = p.len();
        let u: Vec<f64> = (0..d).map(|k| (p[k] - c[k]) / s).collect();
        let e = (-0.5 * u.iter().map(|v| v * v).sum::<f64>()).exp();
        let g: Vec<f64> = u.iter().map(|v| -e * v / s).collect();
        let h = DMatrix::from_fn(d, d, |k, l| e * (u[k] * u[l] - if k == l { 1.0 } else { 0.0 }) / (s * s));
        (e, g, h)
    }

    #[test]
    fn symmetric_and_nonnegative_for_popp() {
        let model = hopf_s3(1.0).unwrap();
        let lap = SubLaplacian::new(&model);
        let (ca, cb) = ([0.2, -0.1, 0.1], [-0.1, 0.15, -0.2]);
        let (x, w) = gauss_legendre_on(36, -1.9, 1.9);
        let (mut fg, mut gf, mut ff) = (0.0, 0.0, 0.0);
        for (i, xi) in x.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                for (k, xk) in x.iter().enumerate() {
                    let p = [*xi, *xj, *xk];
                    let wt = w[i] * w[j] * w[k] / model.frame_coords(&p).unwrap().determinant().abs();
                    let (f, f1, f2) = bump(&p, &ca, 0.35);
                    let (g, g1, g2) = bump(&p, &cb, 0.3);
                    let lf = lap.apply(&p, &f1, &f2).unwrap();
                    let lg = lap.apply(&p, &g1, &g2).unwrap();
                    fg += wt * f * lg;
                    gf += wt * g * lf;
                    ff += wt * f * lf;
                }
            }
        }
        assert!((fg - gf).abs() < 1e-8 * fg.abs().max(1e-3), "{fg} vs {gf}");
        assert!(ff > 0.0);
    }
}
