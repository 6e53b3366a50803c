//! Adapted orthonormal frames of H-type foliations.
//!
//! Frame index convention: `0..n` horizontal (`X_α`), `n..n+m` vertical
//! (`Z_i`). Structure functions are stored as `c[a][b][e] = c^e_{ab}` with
//! `[Y_a, Y_b] = Σ_e c^e_{ab} Y_e`.

mod registry;
mod sphere;

pub use registry::{model_from_id, ModelId};
pub use sphere::QuaternionicHopf;

use crate::clifford::{verify_htype, CliffordRep};
use crate::error::{HtypeError, Result};
use crate::jet::{Jet, JetSpace};
use crate::tensor::{T3, T4, T5};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Group,
    ConstantStructure,
    ChartBased,
}

/// A frame given by coordinate-component functions on a chart.
pub trait ChartFrame: Send + Sync + std::fmt::Debug {
    fn dims(&self) -> (usize, usize);
    /// `out[k][a]` is the k-th chart component of `Y_a`, as a jet of the
    /// given order around `p`.
    fn frame_jet(&self, p: &[f64], order: usize) -> Result<Vec<Vec<Jet>>>;
    fn in_domain(&self, p: &[f64]) -> bool;
    /// Chart coordinates of the default base point.
    fn base_point(&self) -> Vec<f64>;
}

#[derive(Clone, Debug)]
enum Body {
    Group(CliffordRep),
    Constant(T3),
    Chart(Arc<dyn ChartFrame>),
}

#[derive(Clone, Debug)]
pub struct FoliationModel {
    pub n: usize,
    pub m: usize,
    pub kind: ModelKind,
    pub label: String,
    body: Body,
}

/// Structure functions and their frame derivatives at a point.
#[derive(Clone, Debug)]
pub struct StructureData {
    pub c: T3,
    /// `dc[d][a][b][e] = Y_d(c^e_{ab})`.
    pub dc: T4,
    /// `ddc[f][d][a][b][e] = Y_f Y_d (c^e_{ab})`, when requested.
    pub ddc: Option<T5>,
}

impl FoliationModel {
    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn constant_structure(n: usize, m: usize, c: T3, label: impl Into<String>) -> Self {
        assert_eq!(c.d, n + m);
        FoliationModel { n, m, kind: ModelKind::ConstantStructure, label: label.into(), body: Body::Constant(c) }
    }

    pub fn chart_based(frame: Arc<dyn ChartFrame>, label: impl Into<String>) -> Self {
        let (n, m) = frame.dims();
        FoliationModel { n, m, kind: ModelKind::ChartBased, label: label.into(), body: Body::Chart(frame) }
    }

    pub fn rep(&self) -> Option<&CliffordRep> {
        match &self.body {
            Body::Group(r) => Some(r),
            _ => None,
        }
    }

    /// True when structure functions do not depend on the point.
    pub fn is_homogeneous_table(&self) -> bool {
        !matches!(self.body, Body::Chart(_))
    }

    pub fn base_point(&self) -> Vec<f64> {
        match &self.body {
            Body::Chart(f) => f.base_point(),
            _ => vec![0.0; self.dim()],
        }
    }

    pub fn in_domain(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() || p.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match &self.body {
            Body::Group(_) => true,
            Body::Constant(c) => ad_norm(c, p) < 0.9 * 2.0 * std::f64::consts::PI,
            Body::Chart(f) => f.in_domain(p),
        }
    }

    fn check_domain(&self, p: &[f64]) -> Result<()> {
        if self.in_domain(p) {
            Ok(())
        } else {
            Err(HtypeError::OutOfDomain(format!("{} at {:?}", self.label, p)))
        }
    }

    /// Structure functions with first derivatives (and second if `second`).
    pub fn structure(&self, p: &[f64], second: bool) -> Result<StructureData> {
        self.check_domain(p)?;
        let d = self.dim();
        match &self.body {
            Body::Group(rep) => Ok(StructureData {
                c: group_structure(rep),
                dc: T4::zeros(d),
                ddc: second.then(|| T5::zeros(d)),
            }),
            Body::Constant(c) => Ok(StructureData { c: c.clone(), dc: T4::zeros(d), ddc: second.then(|| T5::zeros(d)) }),
            Body::Chart(f) => {
                let order = if second { 3 } else { 2 };
                let fj = f.frame_jet(p, order)?;
                Ok(structure_from_frame_jet(&fj, d, second))
            }
        }
    }

    /// Structure functions recomputed from frame jets (all model kinds).
    pub fn structure_via_jets(&self, p: &[f64], second: bool) -> Result<StructureData> {
        let fj = self.frame_jet(p, if second { 3 } else { 2 })?;
        Ok(structure_from_frame_jet(&fj, self.dim(), second))
    }

    /// Chart components of the frame at `p`; column `a` is `Y_a`.
    pub fn frame_coords(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check_domain(p)?;
        let (n, m) = (self.n, self.m);
        match &self.body {
            Body::Group(rep) => {
                let mut f = DMatrix::zeros(n + m, n + m);
                for a in 0..n {
                    f[(a, a)] = 1.0;
                    for i in 0..m {
                        let mut s = 0.0;
                        for b in 0..n {
                            s += rep.comp(i, a, b) * p[b];
                        }
                        f[(n + i, a)] = s;
                    }
                }
                for i in 0..m {
                    f[(n + i, n + i)] = 2.0;
                }
                Ok(f)
            }
            Body::Constant(c) => exp_coordinate_frame(c, p),
            Body::Chart(fr) => {
                let fj = fr.frame_jet(p, 0)?;
                Ok(DMatrix::from_fn(n + m, n + m, |k, a| fj[k][a].value()))
            }
        }
    }

    /// Frame as jets of the chart coordinates.
    pub fn frame_jet(&self, p: &[f64], order: usize) -> Result<Vec<Vec<Jet>>> {
        self.check_domain(p)?;
        let d = self.dim();
        match &self.body {
            Body::Group(rep) => {
                let sp = JetSpace::new(d, order);
                let xs: Vec<Jet> = (0..d).map(|k| Jet::variable(&sp, k, p[k])).collect();
                let zero = Jet::constant(&sp, 0.0);
                let mut out = vec![vec![zero.clone(); d]; d];
                for a in 0..self.n {
                    out[a][a] = Jet::constant(&sp, 1.0);
                    for i in 0..self.m {
                        let mut s = zero.clone();
                        for b in 0..self.n {
                            s.add_scaled(&xs[b], rep.comp(i, a, b));
                        }
                        out[self.n + i][a] = s;
                    }
                }
                for i in 0..self.m {
                    out[self.n + i][self.n + i] = Jet::constant(&sp, 2.0);
                }
                Ok(out)
            }
            Body::Chart(f) => f.frame_jet(p, order),
            Body::Constant(c) => Ok(exp_coordinate_frame_jet(c, p, order)),
        }
    }

    /// `J^i_{ab} = -c^{n+i}_{ab}` at a point, as a Clifford representation.
    pub fn j_at(&self, c: &T3) -> CliffordRep {
        let (n, m) = (self.n, self.m);
        let j = (0..m)
            .map(|i| DMatrix::from_fn(n, n, |b, a| -c.get(a, b, n + i)))
            .collect();
        CliffordRep { n, m, j }
    }

    /// Group product (group models only).
    pub fn group_mul(&self, w: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let rep = self.rep().ok_or_else(|| HtypeError::InvalidArgument("not a group model".into()))?;
        let n = self.n;
        let mut out: Vec<f64> = w.iter().zip(v).map(|(a, b)| a + b).collect();
        for i in 0..self.m {
            out[n + i] += bilinear(rep, i, &w[..n], &v[..n]);
        }
        Ok(out)
    }

    pub fn group_inverse(&self, w: &[f64]) -> Vec<f64> {
        w.iter().map(|x| -x).collect()
    }

    /// Parabolic dilation `(x, z) ↦ (t x, t² z)`.
    pub fn dilate(&self, w: &[f64], t: f64) -> Vec<f64> {
        w.iter().enumerate().map(|(k, x)| if k < self.n { t * x } else { t * t * x }).collect()
    }

    /// Raw structure table for constant models.
    pub fn table(&self) -> Option<&T3> {
        match &self.body {
            Body::Constant(c) => Some(c),
            _ => None,
        }
    }
}

/// `B^i(x, x') = x · (J_i x')`.
pub fn bilinear(rep: &CliffordRep, i: usize, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for a in 0..rep.n {
        for b in 0..rep.n {
            s += x[a] * rep.j[i][(a, b)] * y[b];
        }
    }
    s
}

pub fn group_structure(rep: &CliffordRep) -> T3 {
    let (n, m) = (rep.n, rep.m);
    let mut c = T3::zeros(n + m);
    for i in 0..m {
        for a in 0..n {
            for b in 0..n {
                c.set(a, b, n + i, -rep.comp(i, a, b));
            }
        }
    }
    c
}

pub fn htype_group(rep: CliffordRep) -> FoliationModel {
    let label = format!("group:{},{}", rep.n, rep.m);
    FoliationModel { n: rep.n, m: rep.m, kind: ModelKind::Group, label, body: Body::Group(rep) }
}

/// The constant of the su(2)-type completion at a given scale.
pub fn hopf_s3_constant(scale: f64) -> f64 {
    -1.0 / (scale * scale)
}

pub fn hopf_s3(scale: f64) -> Result<FoliationModel> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(HtypeError::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let a = hopf_s3_constant(scale);
    let mut c = T3::zeros(3);
    let mut put = |x: usize, y: usize, e: usize, v: f64| {
        c.set(x, y, e, v);
        c.set(y, x, e, -v);
    };
    put(0, 1, 2, -1.0);
    put(1, 2, 0, a);
    put(2, 0, 1, a);
    Ok(FoliationModel::constant_structure(2, 1, c, format!("hopf-s3@{scale} (a={a})")))
}

pub fn quaternionic_hopf_s7(scale: f64) -> Result<FoliationModel> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(HtypeError::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let frame = Arc::new(QuaternionicHopf::new(scale));
    let label = format!("qhopf-s7@{scale} (radius {})", 2.0 * scale);
    Ok(FoliationModel::chart_based(frame, label))
}

fn ad_matrix(c: &T3, u: &[f64]) -> DMatrix<f64> {
    let d = c.d;
    // (ad_u)_{eb} = Σ_a u^a c^e_{ab}
    DMatrix::from_fn(d, d, |e, b| (0..d).map(|a| u[a] * c.get(a, b, e)).sum())
}

fn ad_norm(c: &T3, u: &[f64]) -> f64 {
    ad_matrix(c, u).norm()
}

/// Left-invariant frame in exponential coordinates: `F(u) = φ(ad_u)^{-1}`
/// with `φ(A) = (1 - e^{-A}) / A`.
fn exp_coordinate_frame(c: &T3, u: &[f64]) -> Result<DMatrix<f64>> {
    let a = ad_matrix(c, u);
    let d = c.d;
    let mut phi = DMatrix::<f64>::identity(d, d);
    let mut term = DMatrix::<f64>::identity(d, d);
    for k in 1..60 {
        term = &term * &a * (-1.0 / (k as f64 + 1.0));
        phi += &term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    phi.try_inverse().ok_or_else(|| HtypeError::OutOfDomain("exponential chart is singular here".into()))
}

/// Jets of `φ(ad_u)^{-1}` around `u = p`.
fn exp_coordinate_frame_jet(c: &T3, p: &[f64], order: usize) -> Vec<Vec<Jet>> {
    let d = c.d;
    let sp = JetSpace::new(d, order);
    let us: Vec<Jet> = (0..d).map(|k| Jet::variable(&sp, k, p[k])).collect();
    let zero = Jet::constant(&sp, 0.0);
    let mut a = vec![vec![zero.clone(); d]; d];
    for e in 0..d {
        for b in 0..d {
            for (k, u) in us.iter().enumerate() {
                let v = c.get(k, b, e);
                if v != 0.0 {
                    a[e][b].add_scaled(u, v);
                }
            }
        }
    }
    let mut phi: Vec<Vec<Jet>> =
        (0..d).map(|r| (0..d).map(|s| Jet::constant(&sp, if r == s { 1.0 } else { 0.0 })).collect()).collect();
    let mut term = phi.clone();
    for k in 1..80 {
        let mut next = vec![vec![zero.clone(); d]; d];
        for r in 0..d {
            for s in 0..d {
                for t in 0..d {
                    next[r][s].add_scaled(&term[r][t].mul(&a[t][s]), -1.0 / (k as f64 + 1.0));
                }
            }
        }
        term = next;
        let mut big = 0.0f64;
        for r in 0..d {
            for s in 0..d {
                phi[r][s] = phi[r][s].add(&term[r][s]);
                big = big.max(term[r][s].c.iter().fold(0.0f64, |m, x| m.max(x.abs())));
            }
        }
        if big < 1e-20 {
            break;
        }
    }
    jet_inverse(&phi, d)
}

/// Structure functions and derivatives from frame jets of order >= 2 (3 if `second`).
fn structure_from_frame_jet(fj: &[Vec<Jet>], d: usize, second: bool) -> StructureData {
    // inverse frame as jets via Gauss-Jordan
    let inv = jet_inverse(fj, d);
    // brackets [Y_a, Y_b]^k = Σ_j F_ja ∂_j F_kb - F_jb ∂_j F_ka
    let dfj: Vec<Vec<Vec<Jet>>> =
        (0..d).map(|j| (0..d).map(|k| (0..d).map(|a| fj[k][a].deriv(j)).collect()).collect()).collect();
    let sp = fj[0][0].space.clone();
    let zero = Jet::constant(&sp, 0.0);
    let mut cj: Vec<Jet> = vec![zero.clone(); d * d * d];
    for a in 0..d {
        for b in (a + 1)..d {
            let mut br = vec![zero.clone(); d];
            for (k, brk) in br.iter_mut().enumerate() {
                for j in 0..d {
                    *brk = brk.add(&fj[j][a].mul(&dfj[j][k][b])).sub(&fj[j][b].mul(&dfj[j][k][a]));
                }
            }
            for e in 0..d {
                let mut s = zero.clone();
                for k in 0..d {
                    s = s.add(&inv[e][k].mul(&br[k]));
                }
                cj[(a * d + b) * d + e] = s.clone();
                cj[(b * d + a) * d + e] = s.scale(-1.0);
            }
        }
    }
    let fval: Vec<Vec<f64>> = (0..d).map(|k| (0..d).map(|a| fj[k][a].value()).collect()).collect();
    // dfv[l][k][a] = ∂_l F_ka
    let dfv: Vec<Vec<Vec<f64>>> =
        (0..d).map(|l| (0..d).map(|k| (0..d).map(|a| dfj[l][k][a].value()).collect()).collect()).collect();
    let mut c = T3::zeros(d);
    let mut dc = T4::zeros(d);
    let mut ddc = second.then(|| T5::zeros(d));
    for a in 0..d {
        for b in 0..d {
            for e in 0..d {
                let jet = &cj[(a * d + b) * d + e];
                c.set(a, b, e, jet.value());
                let partial: Vec<Jet> = (0..d).map(|k| jet.deriv(k)).collect();
                let grad: Vec<f64> = partial.iter().map(|p| p.value()).collect();
                for dd in 0..d {
                    let g: f64 = (0..d).map(|k| fval[k][dd] * grad[k]).sum();
                    dc.set(dd, a, b, e, g);
                }
                if let Some(t) = ddc.as_mut() {
                    let hess: Vec<Vec<f64>> =
                        (0..d).map(|l| (0..d).map(|k| partial[k].deriv(l).value()).collect()).collect();
                    for f in 0..d {
                        for dd in 0..d {
                            let mut s = 0.0;
                            for l in 0..d {
                                for k in 0..d {
                                    s += fval[l][f] * (dfv[l][k][dd] * grad[k] + fval[k][dd] * hess[l][k]);
                                }
                            }
                            t.set(f, dd, a, b, e, s);
                        }
                    }
                }
            }
        }
    }
    StructureData { c, dc, ddc }
}

fn jet_inverse(f: &[Vec<Jet>], d: usize) -> Vec<Vec<Jet>> {
    let sp = f[0][0].space.clone();
    let mut a: Vec<Vec<Jet>> = f.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..d)
        .map(|r| (0..d).map(|c| Jet::constant(&sp, if r == c { 1.0 } else { 0.0 })).collect())
        .collect();
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&x, &y| a[x][col].value().abs().total_cmp(&a[y][col].value().abs()))
            .unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let r = a[col][col].recip();
        for k in 0..d {
            a[col][k] = a[col][k].mul(&r);
            inv[col][k] = inv[col][k].mul(&r);
        }
        for row in 0..d {
            if row != col {
                let fac = a[row][col].clone();
                if fac.c.iter().all(|x| *x == 0.0) {
                    continue;
                }
                for k in 0..d {
                    a[row][k] = a[row][k].sub(&fac.mul(&a[col][k]));
                    inv[row][k] = inv[row][k].sub(&fac.mul(&inv[col][k]));
                }
            }
        }
    }
    inv
}

/// Residuals of the model axioms at one point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointResiduals {
    pub point: Vec<f64>,
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub vertical_integrability: f64,
    pub htype: f64,
    /// Smallest singular value of the horizontal-plus-brackets span matrix.
    pub bracket_generation_sv: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub model: String,
    pub tol: f64,
    pub points: Vec<PointResiduals>,
    pub max_antisymmetry: f64,
    pub max_jacobi: f64,
    pub max_vertical_integrability: f64,
    pub max_htype: f64,
    pub min_bracket_generation_sv: f64,
    pub pass: bool,
}

pub fn point_residuals(model: &FoliationModel, s: &StructureData, p: &[f64]) -> PointResiduals {
    let d = model.dim();
    let (n, m) = (model.n, model.m);
    let c = &s.c;
    let mut anti = 0.0f64;
    let mut jac = 0.0f64;
    let mut vint = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            for e in 0..d {
                anti = anti.max((c.get(a, b, e) + c.get(b, a, e)).abs());
            }
        }
    }
    // Σ_cyc Y_a(c^e_{bc}) + c^f_{bc} c^e_{af}
    for a in 0..d {
        for b in 0..d {
            for cc in 0..d {
                for e in 0..d {
                    let mut r = 0.0;
                    for (x, y, z) in [(a, b, cc), (b, cc, a), (cc, a, b)] {
                        r += s.dc.get(x, y, z, e);
                        for f in 0..d {
                            r += c.get(y, z, f) * c.get(x, f, e);
                        }
                    }
                    jac = jac.max(r.abs());
                }
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            for g in 0..n {
                vint = vint.max(c.get(n + i, n + j, g).abs());
            }
        }
    }
    let rep = model.j_at(c);
    let htype = verify_htype(&rep, 0.0).max();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
    let mut span = DMatrix::zeros(d, n + pairs.len());
    for a in 0..n {
        span[(a, a)] = 1.0;
    }
    for (k, &(a, b)) in pairs.iter().enumerate() {
        for e in 0..d {
            span[(e, n + k)] = c.get(a, b, e);
        }
    }
    let sv = span.singular_values();
    let min_sv = if sv.len() < d { 0.0 } else { sv.iter().cloned().fold(f64::INFINITY, f64::min) };
    PointResiduals {
        point: p.to_vec(),
        antisymmetry: anti,
        jacobi: jac,
        vertical_integrability: vint,
        htype,
        bracket_generation_sv: min_sv,
    }
}

pub fn validate_model(model: &FoliationModel, points: &[Vec<f64>], tol: f64) -> Result<ValidationReport> {
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let s = model.structure(p, false)?;
        out.push(point_residuals(model, &s, p));
    }
    let mx = |f: fn(&PointResiduals) -> f64| out.iter().map(f).fold(0.0f64, f64::max);
    let max_antisymmetry = mx(|r| r.antisymmetry);
    let max_jacobi = mx(|r| r.jacobi);
    let max_vertical_integrability = mx(|r| r.vertical_integrability);
    let max_htype = mx(|r| r.htype);
    let min_sv = out.iter().map(|r| r.bracket_generation_sv).fold(f64::INFINITY, f64::min);
    let pass = [max_antisymmetry, max_jacobi, max_vertical_integrability, max_htype].iter().all(|&x| x <= tol)
        && min_sv > tol.max(1e-9);
    Ok(ValidationReport {
        model: model.label.clone(),
        tol,
        points: out,
        max_antisymmetry,
        max_jacobi,
        max_vertical_integrability,
        max_htype,
        min_bracket_generation_sv: min_sv,
        pass,
    })
}

/// Deterministic sample points near the base point.
pub fn sample_points(model: &FoliationModel, count: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let base = model.base_point();
    (0..count)
        .map(|_| base.iter().map(|b| b + radius * (2.0 * rng.gen::<f64>() - 1.0)).collect())
        .collect()
}

/// Matrix-vector helper used by several modules.
pub fn frame_apply(f: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (f * DVector::from_column_slice(v)).as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_rep;

    #[test]
    fn group_brackets_from_frame_fields() {
        for (n, m) in [(2, 1), (4, 3), (8, 5)] {
            let model = htype_group(build_rep(n, m).unwrap());
            let p: Vec<f64> = (0..n + m).map(|k| 0.3 * k as f64 - 0.7).collect();
            let fj = model.frame_jet(&p, 2).unwrap();
            let s = structure_from_frame_jet(&fj, n + m, false);
            assert!(s.c.max_diff(&group_structure(model.rep().unwrap())) < 1e-13);
            assert!(s.dc.max_abs() < 1e-13);
        }
    }

    #[test]
    fn heisenberg_bracket_sign() {
        let model = htype_group(build_rep(2, 1).unwrap());
        let s = model.structure(&[0.0; 3], false).unwrap();
        // [X1, X2] = -J^1_{12} Z1 with J^1_{12} = g(J e1, e2) = 1
        assert_eq!(s.c.get(0, 1, 2), -1.0);
    }

    #[test]
    fn hopf_tables() {
        let m = hopf_s3(2.0).unwrap();
        let r = validate_model(&m, &[vec![0.0; 3]], 1e-12).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_jacobi, 0.0);
        let mut c = m.table().unwrap().clone();
        c.set(0, 1, 2, -2.0);
        c.set(1, 0, 2, 2.0);
        let t = FoliationModel::constant_structure(2, 1, c, "tampered");
        let r = validate_model(&t, &[vec![0.0; 3]], 1e-12).unwrap();
        assert_eq!(r.max_htype, 3.0);
    }

    #[test]
    fn exp_frame_jets_reproduce_constants() {
        let m = hopf_s3(1.5).unwrap();
        let p = [0.3, -0.4, 0.7];
        let s = m.structure_via_jets(&p, true).unwrap();
        assert!(s.c.max_diff(m.table().unwrap()) < 1e-13);
        assert!(s.dc.max_abs() < 1e-12);
        assert!(s.ddc.unwrap().max_abs() < 1e-11);
        let f = m.frame_coords(&p).unwrap();
        let fj = m.frame_jet(&p, 0).unwrap();
        for k in 0..3 {
            for a in 0..3 {
                assert!((fj[k][a].value() - f[(k, a)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn exp_frame_at_origin_is_identity() {
        let m = hopf_s3(1.0).unwrap();
        let f = m.frame_coords(&[0.0; 3]).unwrap();
        assert!((f - DMatrix::<f64>::identity(3, 3)).norm() < 1e-15);
    }
}
