//! Privileged coordinates built from parabolic geodesics and special frames.
//!
//! A ray `y = (x, z)` (special-frame components at `q`) is the parabolic
//! geodesic with `γ̇(0) = x`, `D_tγ̇ = z`; the chart is `φ(y) = γ_y(1)` and
//! `φ(δ_t y) = γ_y(t)`. Along each ray we integrate, in components of the
//! model frame `Y`, the velocity `v`, the parallel acceleration `w`, the
//! special frame `E`, and the first variations `ξ_b = ∂γ/∂y^b · t^{w_b}`,
//! `δv_b`, `δw_b`, `δE_b`. Pullbacks of co-frame, frame and connection forms
//! under `δ_t` are then read off as power series in `t`.

use crate::connection::{bott_from_structure, PointGeometry};
use crate::error::{HtypeError, Result};
use crate::models::FoliationModel;
use crate::ode::{integrate, OdeOptions, Solution};
use crate::tensor::{T3, T4};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

#[derive(Clone, Debug)]
struct Coeffs {
    c: T3,
    gamma: T3,
    dgamma: Option<T4>,
}

fn coeffs_at(model: &FoliationModel, p: &[f64]) -> Result<Coeffs> {
    let (n, m) = (model.n, model.m);
    let s = model.structure(p, false)?;
    let gamma = bott_from_structure(&s.c, n, m);
    if model.is_homogeneous_table() {
        return Ok(Coeffs { c: s.c, gamma, dgamma: None });
    }
    let conn = crate::connection::solve_bott_from(&s, n, m);
    Ok(Coeffs { c: s.c, gamma, dgamma: Some(conn.dgamma) })
}

/// `Γ(v)[e][k] = Σ_c v^c Γ^e_{ck}`, row-major.
fn gamma_v(g: &T3, v: &[f64], out: &mut [f64]) {
    let d = g.d;
    out.iter_mut().for_each(|x| *x = 0.0);
    for (c, vc) in v.iter().enumerate() {
        if *vc == 0.0 {
            continue;
        }
        for k in 0..d {
            for e in 0..d {
                out[e * d + k] += vc * g.get(c, k, e);
            }
        }
    }
}

/// `Σ_{d,c} ξ^d v^c Y_d(Γ^e_{ck})`, row-major `[e][k]`.
fn dgamma_v(dg: &T4, xi: &[f64], v: &[f64], out: &mut [f64]) {
    let d = dg.d;
    out.iter_mut().for_each(|x| *x = 0.0);
    for (dd, xd) in xi.iter().enumerate() {
        if *xd == 0.0 {
            continue;
        }
        for (c, vc) in v.iter().enumerate() {
            let s = xd * vc;
            if s == 0.0 {
                continue;
            }
            for k in 0..d {
                for e in 0..d {
                    out[e * d + k] += s * dg.get(dd, c, k, e);
                }
            }
        }
    }
}

fn mat_vec_sub(mtx: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for e in 0..d {
        let mut s = 0.0;
        for k in 0..d {
            s += mtx[e * d + k] * x[k];
        }
        out[e] -= s;
    }
}

#[derive(Clone, Copy, Debug)]
struct Layout {
    d: usize,
    p: Option<usize>,
    v: usize,
    w: usize,
    xi: Option<usize>,
    dv: usize,
    dw: usize,
    e: Option<usize>,
    de: Option<usize>,
    len: usize,
}

impl Layout {
    fn new(d: usize, positions: bool, variations: bool, transport: bool, connection: bool) -> Self {
        let mut off = 0;
        let mut take = |k: usize| {
            let o = off;
            off += k;
            o
        };
        let p = positions.then(|| take(d));
        let v = take(d);
        let w = take(d);
        let variations = variations || connection;
        let xi = variations.then(|| take(d * d));
        let dv = if variations { take(d * d) } else { 0 };
        let dw = if variations { take(d * d) } else { 0 };
        let transport = transport || connection;
        let e = transport.then(|| take(d * d));
        let de = connection.then(|| take(d * d * d));
        Layout { d, p, v, w, xi, dv, dw, e, de, len: off }
    }
}

/// What to carry along a ray.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Carry {
    pub positions: bool,
    pub variations: bool,
    pub transport: bool,
    pub connection: bool,
}

impl Carry {
    pub const ALL: Carry = Carry { positions: true, variations: true, transport: true, connection: true };
}

/// Geodesic state at one time along a ray, in model-frame components.
#[derive(Clone, Debug)]
pub struct ParabolicState {
    pub t: f64,
    pub p: Option<Vec<f64>>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    /// Column `a` is the special frame vector `E_a`.
    pub e: Option<DMatrix<f64>>,
    /// Column `b` is `ξ_b`.
    pub xi: Option<DMatrix<f64>>,
    /// `omega[c]` is the matrix `[b][a] = ω^b_a(ξ_c)`.
    pub omega: Option<Vec<DMatrix<f64>>>,
}

/// Privileged chart at `q` for a model.
#[derive(Clone, Debug)]
pub struct PrivilegedChart {
    pub model: FoliationModel,
    pub q: Vec<f64>,
    /// Special frame at `q` in model-frame components (block orthogonal).
    pub frame0: DMatrix<f64>,
    pub tol: f64,
    fixed: Option<Coeffs>,
    frames: Arc<RwLock<HashMap<Vec<u64>, DMatrix<f64>>>>,
}

impl PrivilegedChart {
    pub fn new(model: &FoliationModel, q: &[f64], tol: f64) -> Result<Self> {
        let d = model.dim();
        Self::with_frame(model, q, DMatrix::identity(d, d), tol)
    }

    /// Chart built from the rotated frame `Y · rot` at `q`; `rot` must be in
    /// `O(n) × O(m)`.
    pub fn with_frame(model: &FoliationModel, q: &[f64], rot: DMatrix<f64>, tol: f64) -> Result<Self> {
        let d = model.dim();
        if q.len() != d || !model.in_domain(q) {
            return Err(HtypeError::OutOfDomain(format!("base point {q:?} for {}", model.label)));
        }
        let orth = (rot.transpose() * &rot - DMatrix::identity(d, d)).abs().max();
        let mut mixed = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                if (a < model.n) != (b < model.n) {
                    mixed = mixed.max(rot[(a, b)].abs());
                }
            }
        }
        if orth > 1e-12 || mixed > 0.0 {
            return Err(HtypeError::InvalidArgument("frame rotation must be block orthogonal".into()));
        }
        let fixed = if model.is_homogeneous_table() { Some(coeffs_at(model, q)?) } else { None };
        Ok(PrivilegedChart { model: model.clone(), q: q.to_vec(), frame0: rot, tol, fixed, frames: Default::default() })
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    fn needs_positions(&self, carry: Carry) -> bool {
        carry.positions || self.fixed.is_none()
    }

    fn initial(&self, y: &[f64], lay: &Layout) -> Vec<f64> {
        let d = lay.d;
        let n = self.model.n;
        let mut s = vec![0.0; lay.len];
        if let Some(o) = lay.p {
            s[o..o + d].copy_from_slice(&self.q);
        }
        for k in 0..d {
            let mut vk = 0.0;
            let mut wk = 0.0;
            for b in 0..d {
                if b < n {
                    vk += self.frame0[(k, b)] * y[b];
                } else {
                    wk += self.frame0[(k, b)] * y[b];
                }
            }
            s[lay.v + k] = vk;
            s[lay.w + k] = wk;
        }
        if lay.xi.is_some() {
            for b in 0..d {
                for k in 0..d {
                    let col = self.frame0[(k, b)];
                    if b < n {
                        s[lay.dv + b * d + k] = col;
                    } else {
                        s[lay.dw + b * d + k] = col;
                    }
                }
            }
        }
        if let Some(o) = lay.e {
            for a in 0..d {
                for k in 0..d {
                    s[o + a * d + k] = self.frame0[(k, a)];
                }
            }
        }
        s
    }

    fn coeffs(&self, p: Option<&[f64]>) -> Result<std::borrow::Cow<'_, Coeffs>> {
        match (&self.fixed, p) {
            (Some(c), _) => Ok(std::borrow::Cow::Borrowed(c)),
            (None, Some(p)) => Ok(std::borrow::Cow::Owned(coeffs_at(&self.model, p)?)),
            (None, None) => Err(HtypeError::InvalidArgument("position required".into())),
        }
    }

    fn rhs(&self, lay: &Layout, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let d = lay.d;
        let p = lay.p.map(|o| &y[o..o + d]);
        if let Some(pp) = p {
            if !self.model.in_domain(pp) {
                return Err(HtypeError::OutOfDomain(format!("ray left the chart domain at {pp:?}")));
            }
        }
        let co = self.coeffs(p)?;
        let v = &y[lay.v..lay.v + d];
        let w = &y[lay.w..lay.w + d];
        let mut gv = vec![0.0; d * d];
        gamma_v(&co.gamma, v, &mut gv);
        if let (Some(o), Some(pp)) = (lay.p, p) {
            let f = self.model.frame_coords(pp)?;
            for k in 0..d {
                dy[o + k] = (0..d).map(|a| f[(k, a)] * v[a]).sum();
            }
        }
        dy[lay.v..lay.v + d].copy_from_slice(w);
        mat_vec_sub(&gv, v, &mut dy[lay.v..lay.v + d]);
        dy[lay.w..lay.w + d].iter_mut().for_each(|x| *x = 0.0);
        mat_vec_sub(&gv, w, &mut dy[lay.w..lay.w + d]);

        let mut gdv = vec![vec![0.0; d * d]; if lay.xi.is_some() { d } else { 0 }];
        let mut dgx = vec![vec![0.0; d * d]; if lay.xi.is_some() && co.dgamma.is_some() { d } else { 0 }];
        if let Some(ox) = lay.xi {
            for b in 0..d {
                let xi = &y[ox + b * d..ox + (b + 1) * d];
                let dvb = &y[lay.dv + b * d..lay.dv + (b + 1) * d];
                let dwb = &y[lay.dw + b * d..lay.dw + (b + 1) * d];
                // ξ̇ = δv + c(ξ, v)
                for e in 0..d {
                    let mut s = dvb[e];
                    for (a, xa) in xi.iter().enumerate() {
                        if *xa == 0.0 {
                            continue;
                        }
                        for (c, vc) in v.iter().enumerate() {
                            s += xa * vc * co.c.get(a, c, e);
                        }
                    }
                    dy[ox + b * d + e] = s;
                }
                gamma_v(&co.gamma, dvb, &mut gdv[b]);
                let out_v = lay.dv + b * d;
                let out_w = lay.dw + b * d;
                dy[out_v..out_v + d].copy_from_slice(dwb);
                mat_vec_sub(&gdv[b], v, &mut dy[out_v..out_v + d]);
                mat_vec_sub(&gv, dvb, &mut dy[out_v..out_v + d]);
                dy[out_w..out_w + d].iter_mut().for_each(|x| *x = 0.0);
                mat_vec_sub(&gdv[b], w, &mut dy[out_w..out_w + d]);
                mat_vec_sub(&gv, dwb, &mut dy[out_w..out_w + d]);
                if let Some(dg) = &co.dgamma {
                    dgamma_v(dg, xi, v, &mut dgx[b]);
                    mat_vec_sub(&dgx[b], v, &mut dy[out_v..out_v + d]);
                    mat_vec_sub(&dgx[b], w, &mut dy[out_w..out_w + d]);
                }
            }
        }
        if let Some(oe) = lay.e {
            for a in 0..d {
                let ea = &y[oe + a * d..oe + (a + 1) * d];
                let out = oe + a * d;
                dy[out..out + d].iter_mut().for_each(|x| *x = 0.0);
                mat_vec_sub(&gv, ea, &mut dy[out..out + d]);
            }
        }
        if let (Some(ode), Some(oe)) = (lay.de, lay.e) {
            for c in 0..d {
                for a in 0..d {
                    let ea = &y[oe + a * d..oe + (a + 1) * d];
                    let idx = ode + (c * d + a) * d;
                    let dea = &y[idx..idx + d];
                    dy[idx..idx + d].iter_mut().for_each(|x| *x = 0.0);
                    mat_vec_sub(&gdv[c], ea, &mut dy[idx..idx + d]);
                    mat_vec_sub(&gv, dea, &mut dy[idx..idx + d]);
                    if !dgx.is_empty() {
                        mat_vec_sub(&dgx[c], ea, &mut dy[idx..idx + d]);
                    }
                }
            }
        }
        Ok(())
    }

    fn unpack(&self, lay: &Layout, t: f64, s: &[f64]) -> Result<ParabolicState> {
        let d = lay.d;
        let p = lay.p.map(|o| s[o..o + d].to_vec());
        let e = lay.e.map(|o| DMatrix::from_fn(d, d, |k, a| s[o + a * d + k]));
        let xi = lay.xi.map(|o| DMatrix::from_fn(d, d, |k, b| s[o + b * d + k]));
        let omega = match (lay.de, &e, &xi) {
            (Some(ode), Some(em), Some(xm)) => {
                let co = self.coeffs(p.as_deref())?;
                let mut out = Vec::with_capacity(d);
                let mut g = vec![0.0; d * d];
                for c in 0..d {
                    let xc: Vec<f64> = xm.column(c).iter().cloned().collect();
                    gamma_v(&co.gamma, &xc, &mut g);
                    let gm = DMatrix::from_fn(d, d, |r, k| g[r * d + k]);
                    let de = DMatrix::from_fn(d, d, |k, a| s[ode + (c * d + a) * d + k]);
                    out.push(em.transpose() * (de + gm * em));
                }
                Some(out)
            }
            _ => None,
        };
        Ok(ParabolicState {
            t,
            p,
            v: s[lay.v..lay.v + d].to_vec(),
            w: s[lay.w..lay.w + d].to_vec(),
            e,
            xi,
            omega,
        })
    }

    fn layout(&self, carry: Carry) -> Layout {
        Layout::new(self.dim(), self.needs_positions(carry), carry.variations, carry.transport, carry.connection)
    }

    fn opts(&self) -> OdeOptions {
        OdeOptions { rtol: self.tol, atol: self.tol * 1e-2, ..Default::default() }
    }

    /// States along the ray `y` at each requested time (monotone, same sign).
    pub fn integrate(&self, y: &[f64], times: &[f64], carry: Carry) -> Result<Vec<ParabolicState>> {
        if y.len() != self.dim() {
            return Err(HtypeError::InvalidArgument(format!("ray needs {} components", self.dim())));
        }
        let lay = self.layout(carry);
        let y0 = self.initial(y, &lay);
        let mut out = Vec::with_capacity(times.len());
        integrate(|_, s, ds| self.rhs(&lay, s, ds), 0.0, &y0, times, &self.opts(), false, |_, t, s| {
            out.push(self.unpack(&lay, t, s)?);
            Ok(())
        })?;
        Ok(out)
    }

    /// Integrate to `t_max` keeping dense output; returns the solution and
    /// the offset of `ξ` in the state vector.
    pub fn integrate_dense(&self, y: &[f64], t_max: f64) -> Result<(Solution, usize)> {
        let carry = Carry { positions: false, variations: true, transport: false, connection: false };
        let lay = self.layout(carry);
        let y0 = self.initial(y, &lay);
        let sol = integrate(|_, s, ds| self.rhs(&lay, s, ds), 0.0, &y0, &[t_max], &self.opts(), true, |_, _, _| Ok(()))?;
        Ok((sol, lay.xi.unwrap()))
    }

    /// `φ(y)` in model chart coordinates.
    pub fn forward(&self, y: &[f64]) -> Result<Vec<f64>> {
        let carry = Carry { positions: true, variations: false, transport: false, connection: false };
        let st = self.integrate(y, &[1.0], carry)?;
        Ok(st[0].p.clone().unwrap())
    }

    /// Special frame at `φ(δ_t y)` (columns in model-frame components).
    /// Results are cached per `(y, t)`.
    pub fn special_frame(&self, y: &[f64], t: f64) -> Result<DMatrix<f64>> {
        let key: Vec<u64> = y.iter().chain(std::iter::once(&t)).map(|v| v.to_bits()).collect();
        if let Some(e) = self.frames.read().unwrap().get(&key) {
            return Ok(e.clone());
        }
        let carry = Carry { positions: false, variations: false, transport: true, connection: false };
        let e = self.integrate(y, &[t], carry)?.remove(0).e.unwrap();
        self.frames.write().unwrap().insert(key, e.clone());
        Ok(e)
    }

    /// Co-frame matrix `θ^a(∂_b)` at `y`.
    pub fn coframe_at(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let carry = Carry { positions: false, variations: true, transport: true, connection: false };
        let st = &self.integrate(y, &[1.0], carry)?[0];
        Ok(st.e.as_ref().unwrap().transpose() * st.xi.as_ref().unwrap())
    }

    /// Popp density against Lebesgue measure in these coordinates.
    pub fn popp_density(&self, y: &[f64]) -> Result<f64> {
        if y.iter().all(|v| *v == 0.0) {
            return Ok(popp_factor(self.model.n, self.model.m) * 0.5f64.powi(self.model.m as i32));
        }
        let carry = Carry { positions: false, variations: true, transport: false, connection: false };
        let st = &self.integrate(y, &[1.0], carry)?[0];
        Ok(popp_factor(self.model.n, self.model.m) * st.xi.as_ref().unwrap().determinant().abs())
    }

    /// Newton/shooting inverse of `forward`.
    pub fn inverse(&self, p: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        let d = self.dim();
        let n = self.model.n;
        let fq = self.model.frame_coords(&self.q)?;
        let u = fq
            .clone()
            .lu()
            .solve(&DVector::from_iterator(d, p.iter().zip(&self.q).map(|(a, b)| a - b)))
            .ok_or(HtypeError::RankDeficient("frame at base point".into()))?;
        // nilpotent first guess: frame components, vertical part doubled, in special-frame axes
        let mut guess = DVector::from_iterator(d, (0..d).map(|k| if k < n { u[k] } else { 2.0 * u[k] }));
        guess = self.frame0.transpose() * guess;
        let mut y: Vec<f64> = guess.iter().cloned().collect();
        let carry = Carry { positions: true, variations: true, transport: false, connection: false };
        let mut last = f64::INFINITY;
        for _ in 0..max_iter {
            let st = &self.integrate(&y, &[1.0], carry)?[0];
            let pp = st.p.as_ref().unwrap();
            let r = DVector::from_iterator(d, pp.iter().zip(p).map(|(a, b)| a - b));
            last = r.amax();
            if last <= tol {
                return Ok(y);
            }
            let f = self.model.frame_coords(pp)?;
            let jac = f * st.xi.as_ref().unwrap();
            let step = jac.lu().solve(&r).ok_or(HtypeError::RankDeficient("chart differential".into()))?;
            for k in 0..d {
                y[k] -= step[k];
            }
        }
        Err(HtypeError::NoConvergence { iterations: max_iter, residual: last })
    }
}

/// `n^{-m/2}`.
pub fn popp_factor(n: usize, m: usize) -> f64 {
    (n as f64).powf(-(m as f64) / 2.0)
}

/// Solve `D_t²γ̇ = 0` from `q` with `γ̇(0) = X`, `D_tγ̇(0) = Z` (model-frame
/// components) up to time `t`.
pub fn integrate_parabolic(model: &FoliationModel, q: &[f64], x: &[f64], z: &[f64], t: f64, tol: f64) -> Result<ParabolicState> {
    let chart = PrivilegedChart::new(model, q, tol)?;
    let mut y = x.to_vec();
    y.extend_from_slice(z);
    let carry = Carry { positions: true, variations: false, transport: true, connection: false };
    Ok(chart.integrate(&y, &[t], carry)?.remove(0))
}

/// Same flow started from an arbitrary point with full model-frame data
/// `v`, `w` (either may have horizontal and vertical parts). Negative `t`
/// integrates backwards.
pub fn integrate_parabolic_from(model: &FoliationModel, p: &[f64], v: &[f64], w: &[f64], t: f64, tol: f64) -> Result<ParabolicState> {
    let chart = PrivilegedChart::new(model, p, tol)?;
    let carry = Carry { positions: true, variations: false, transport: true, connection: false };
    let lay = chart.layout(carry);
    let mut y0 = chart.initial(&vec![0.0; chart.dim()], &lay);
    y0[lay.v..lay.v + v.len()].copy_from_slice(v);
    y0[lay.w..lay.w + w.len()].copy_from_slice(w);
    let mut out = None;
    integrate(|_, s, ds| chart.rhs(&lay, s, ds), 0.0, &y0, &[t], &chart.opts(), false, |_, t, s| {
        out = Some(chart.unpack(&lay, t, s)?);
        Ok(())
    })?;
    Ok(out.unwrap())
}

/// Weighted least-squares fit of `f(t) = Σ_{l=lo}^{hi} a_l t^l` to samples.
#[derive(Clone, Debug)]
pub struct SeriesFit {
    pub lo: usize,
    /// `coef[l - lo][component]`
    pub coef: Vec<Vec<f64>>,
    /// Difference against a fit with two more terms.
    pub err: Vec<Vec<f64>>,
    pub condition: f64,
}

impl SeriesFit {
    pub fn order(&self, l: usize) -> &[f64] {
        &self.coef[l - self.lo]
    }
    pub fn order_err(&self, l: usize) -> &[f64] {
        &self.err[l - self.lo]
    }
}

fn lsq(ts: &[f64], vals: &[Vec<f64>], lo: usize, hi: usize, scale: f64) -> Result<(DMatrix<f64>, f64)> {
    let k = hi - lo + 1;
    let a = DMatrix::from_fn(ts.len(), k, |r, c| (ts[r] / scale).powi((lo + c) as i32));
    let b = DMatrix::from_fn(ts.len(), vals[0].len(), |r, c| vals[r][c]);
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let cond = sv.max() / sv.min();
    let x = svd.solve(&b, 0.0).map_err(|e| HtypeError::RankDeficient(e.to_string()))?;
    Ok((x, cond))
}

/// Regression of the t-series on the sample times. Orders `lo..=need`
/// are reported; the truncation order is chosen in `need..=need + 6` to
/// minimise the error estimate on the reported orders.
pub fn fit_series(ts: &[f64], vals: &[Vec<f64>], lo: usize, need: usize) -> Result<SeriesFit> {
    let scale = ts.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let ncomp = vals[0].len();
    let mut best: Option<(f64, SeriesFit)> = None;
    for hi in need..=need + 6 {
        if ts.len() < hi - lo + 3 {
            break;
        }
        let (x, cond) = lsq(ts, vals, lo, hi, scale)?;
        let (x2, _) = lsq(ts, vals, lo, hi + 2, scale)?;
        let mut coef = Vec::new();
        let mut err = Vec::new();
        let mut worst = 0.0f64;
        for l in lo..=need {
            let s = scale.powi(l as i32);
            coef.push((0..ncomp).map(|c| x[(l - lo, c)] / s).collect::<Vec<f64>>());
            let e: Vec<f64> = (0..ncomp).map(|c| (x[(l - lo, c)] - x2[(l - lo, c)]).abs() / s).collect();
            worst = worst.max(e.iter().cloned().fold(0.0, f64::max));
            err.push(e);
        }
        if best.as_ref().map_or(true, |(w, _)| worst < *w) {
            best = Some((worst, SeriesFit { lo, coef, err, condition: cond }));
        }
    }
    best.map(|b| b.1).ok_or_else(|| HtypeError::InvalidArgument("not enough sample times for the fit".into()))
}

/// Sample grid `±t0 ρ^k`, `k < count`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DilationGrid {
    pub t0: f64,
    pub ratio: f64,
    pub count: usize,
    pub mirrored: bool,
}

impl Default for DilationGrid {
    fn default() -> Self {
        DilationGrid { t0: 0.2, ratio: 0.7, count: 8, mirrored: true }
    }
}

impl DilationGrid {
    fn positive(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.count).map(|k| self.t0 * self.ratio.powi(k as i32)).collect();
        v.reverse();
        v
    }
}

/// Homogeneous parts along one ray.
#[derive(Clone, Debug)]
pub struct RayExpansion {
    pub y: Vec<f64>,
    /// `coframe.order(l)` flattened `[a][b]`: coefficient of `dy^b` in `ν^{a(l)}(y)`.
    pub coframe: SeriesFit,
    /// `frame.order(l + 2)` flattened `[b][a]`: `∂_b` component of `E_a^{(l)}(y)`.
    pub frame: SeriesFit,
    /// `connection.order(l)` flattened `[c][b][a]`: `ω^{b(l)}_a(y)(∂_c)`.
    pub connection: SeriesFit,
    /// `jtilde.order(l)` flattened `[i][a][b]`: order-l part of the special-frame `J^i_{ab}`.
    pub jtilde: SeriesFit,
    /// Max of `|θ(P) − x|, |η(P) − z|` over the samples (scaled by t).
    pub generator_residual: f64,
    /// Max of `|ω(P)|` over the samples.
    pub connection_on_p: f64,
}

impl PrivilegedChart {
    /// Extract homogeneous parts of co-frame, frame, connection forms and `J`
    /// along the ray `y` by regression on the dilation grid.
    pub fn expand_ray(&self, y: &[f64], grid: &DilationGrid, max_order: usize) -> Result<RayExpansion> {
        let d = self.dim();
        let n = self.model.n;
        let m = self.model.m;
        let wts: Vec<f64> = (0..d).map(|b| if b < n { 1.0 } else { 2.0 }).collect();
        let mut samples = Vec::new();
        let pos = grid.positive();
        samples.extend(self.integrate(y, &pos, Carry::ALL)?);
        if grid.mirrored {
            let neg: Vec<f64> = pos.iter().map(|t| -t).collect();
            samples.extend(self.integrate(y, &neg, Carry::ALL)?);
        }
        let mut ts = Vec::new();
        let (mut cf, mut fr, mut cn, mut jt) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut gen_res = 0.0f64;
        let mut omp = 0.0f64;
        for st in &samples {
            let t = st.t;
            ts.push(t);
            let e = st.e.as_ref().unwrap();
            let xi = st.xi.as_ref().unwrap();
            let g = e.transpose() * xi;
            cf.push(g.transpose().iter().cloned().collect::<Vec<f64>>());
            let ginv = g.clone().try_inverse().ok_or(HtypeError::RankDeficient("chart differential".into()))?;
            let t2 = ginv * (t * t);
            fr.push(t2.iter().cloned().collect::<Vec<f64>>()); // column-major: [a][b] -> flattened a*d + b
            let om = st.omega.as_ref().unwrap();
            let mut flat = Vec::with_capacity(d * d * d);
            for c in 0..d {
                for b in 0..d {
                    for a in 0..d {
                        flat.push(om[c][(b, a)]);
                    }
                }
            }
            cn.push(flat);
            // θ(P), η(P), ω(P) with P^b = w_b y_b t^{w_b} in coordinates
            let py = DVector::from_iterator(d, (0..d).map(|b| wts[b] * y[b]));
            let gp = &g * &py;
            for a in 0..d {
                let target = if a < n { t * y[a] } else { t * t * y[a] };
                gen_res = gen_res.max((gp[a] - target).abs() / t.abs());
            }
            for b in 0..d {
                for a in 0..d {
                    let s: f64 = (0..d).map(|c| om[c][(b, a)] * py[c]).sum();
                    omp = omp.max(s.abs() / t.abs());
                }
            }
            // J in the special frame
            let co = self.coeffs(st.p.as_deref())?;
            let tor = crate::connection::torsion(&co.gamma, &co.c);
            let mut jf = Vec::with_capacity(m * n * n);
            for i in 0..m {
                for a in 0..n {
                    for b in 0..n {
                        let mut s = 0.0;
                        for k in 0..n {
                            for l in 0..n {
                                let ekl = e[(k, a)] * e[(l, b)];
                                if ekl == 0.0 {
                                    continue;
                                }
                                for f in n..d {
                                    s += ekl * e[(f, n + i)] * tor.get(k, l, f);
                                }
                            }
                        }
                        jf.push(s);
                    }
                }
            }
            jt.push(jf);
        }
        Ok(RayExpansion {
            y: y.to_vec(),
            coframe: fit_series(&ts, &cf, 0, max_order)?,
            frame: fit_series(&ts, &fr, 0, max_order + 2)?,
            connection: fit_series(&ts, &cn, 0, max_order)?,
            jtilde: fit_series(&ts, &jt, 0, max_order)?,
            generator_residual: gen_res,
            connection_on_p: omp,
        })
    }
}

/// `J`, `∇J` and `R` at a point in a block-rotated orthonormal frame.
#[derive(Clone, Debug)]
pub struct FrameTensors {
    pub n: usize,
    pub m: usize,
    /// `[i][a][b] = J^i_{ab}`
    j: Vec<f64>,
    /// `[c][i][a][b] = (∇_{c} J)^i_{ab}`
    dj: Vec<f64>,
    /// `[a][b][c][d] = R^d_{abc}`
    r: Vec<f64>,
}

impl FrameTensors {
    /// Components in the frame `Y · rot`.
    pub fn new(geo: &PointGeometry, rot: &DMatrix<f64>) -> Self {
        let (n, m) = (geo.n, geo.m);
        let d = n + m;
        let nz = |k: usize, a: usize| rot[(k, a)] != 0.0;
        let mut j = vec![0.0; m * n * n];
        for i in 0..m {
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for i1 in 0..m {
                        if !nz(n + i1, n + i) {
                            continue;
                        }
                        for a1 in 0..n {
                            for b1 in 0..n {
                                s += rot[(n + i1, n + i)] * rot[(a1, a)] * rot[(b1, b)] * geo.j(i1, a1, b1);
                            }
                        }
                    }
                    j[(i * n + a) * n + b] = s;
                }
            }
        }
        let mut dj = vec![0.0; d * m * n * n];
        for c in 0..d {
            for i in 0..m {
                for a in 0..n {
                    for b in 0..n {
                        let mut s = 0.0;
                        for c1 in 0..d {
                            if !nz(c1, c) {
                                continue;
                            }
                            for i1 in 0..m {
                                if !nz(n + i1, n + i) {
                                    continue;
                                }
                                for a1 in 0..n {
                                    for b1 in 0..n {
                                        s += rot[(c1, c)] * rot[(n + i1, n + i)] * rot[(a1, a)] * rot[(b1, b)] * geo.dj(c1, i1, a1, b1);
                                    }
                                }
                            }
                        }
                        dj[((c * m + i) * n + a) * n + b] = s;
                    }
                }
            }
        }
        // R in two half-contractions
        let mut tmp = vec![0.0; d * d * d * d];
        for a1 in 0..d {
            for b1 in 0..d {
                for c in 0..d {
                    for dd in 0..d {
                        let mut s = 0.0;
                        for c1 in 0..d {
                            if !nz(c1, c) {
                                continue;
                            }
                            for d1 in 0..d {
                                if nz(d1, dd) {
                                    s += rot[(c1, c)] * rot[(d1, dd)] * geo.curvature.get(a1, b1, c1, d1);
                                }
                            }
                        }
                        tmp[((a1 * d + b1) * d + c) * d + dd] = s;
                    }
                }
            }
        }
        let mut r = vec![0.0; d * d * d * d];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for dd in 0..d {
                        let mut s = 0.0;
                        for a1 in 0..d {
                            if !nz(a1, a) {
                                continue;
                            }
                            for b1 in 0..d {
                                if nz(b1, b) {
                                    s += rot[(a1, a)] * rot[(b1, b)] * tmp[((a1 * d + b1) * d + c) * d + dd];
                                }
                            }
                        }
                        r[((a * d + b) * d + c) * d + dd] = s;
                    }
                }
            }
        }
        FrameTensors { n, m, j, dj, r }
    }

    pub fn at(model: &FoliationModel, q: &[f64]) -> Result<Self> {
        let d = model.dim();
        Ok(Self::new(&PointGeometry::at(model, q)?, &DMatrix::identity(d, d)))
    }

    pub fn j(&self, i: usize, a: usize, b: usize) -> f64 {
        self.j[(i * self.n + a) * self.n + b]
    }

    pub fn dj(&self, c: usize, i: usize, a: usize, b: usize) -> f64 {
        self.dj[((c * self.m + i) * self.n + a) * self.n + b]
    }

    pub fn r(&self, a: usize, b: usize, c: usize, dd: usize) -> f64 {
        let d = self.n + self.m;
        self.r[((a * d + b) * d + c) * d + dd]
    }
}

/// Closed-form homogeneous parts at `q`, built from `J`, `∇J` and `R` in
/// the chart's frame. Second horizontal derivatives of `J` are taken to
/// vanish, which holds under horizontally parallel torsion.
#[derive(Clone, Debug)]
pub struct Predictions {
    pub n: usize,
    pub m: usize,
    geo: PointGeometry,
    ft: FrameTensors,
}

impl Predictions {
    pub fn new(chart: &PrivilegedChart) -> Result<Self> {
        let geo = PointGeometry::at(&chart.model, &chart.q)?;
        let ft = FrameTensors::new(&geo, &chart.frame0);
        Ok(Predictions { n: chart.model.n, m: chart.model.m, geo, ft })
    }

    pub fn geometry(&self) -> &PointGeometry {
        &self.geo
    }

    pub fn tensors(&self) -> &FrameTensors {
        &self.ft
    }

    fn r(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.ft.r(a, b, c, d)
    }

    /// `J^i_{ab}` at `q`.
    pub fn j(&self, i: usize, a: usize, b: usize) -> f64 {
        self.ft.j(i, a, b)
    }

    /// `(∇_{Y_c} J)^i_{ab}` at `q`.
    pub fn dj(&self, c: usize, i: usize, a: usize, b: usize) -> f64 {
        self.ft.dj(c, i, a, b)
    }

    pub fn j1(&self, x: &[f64], i: usize, a: usize, b: usize) -> f64 {
        (0..self.n).map(|g| x[g] * self.dj(g, i, a, b)).sum()
    }

    pub fn j2(&self, z: &[f64], i: usize, a: usize, b: usize) -> f64 {
        (0..self.m).map(|j| 0.5 * z[j] * self.dj(self.n + j, i, a, b)).sum()
    }

    /// `θ^{α(3)}` coefficient of `dx^δ`.
    fn theta3(&self, x: &[f64], al: usize, de: usize) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for be in 0..n {
            for ga in 0..n {
                s += self.r(ga, de, be, al) * x[be] * x[ga];
            }
        }
        s / 6.0
    }

    /// Co-frame part of order `l` at `y`, `[a][b]`.
    pub fn coframe(&self, y: &[f64], l: usize) -> DMatrix<f64> {
        let (n, m) = (self.n, self.m);
        let d = n + m;
        let (x, z) = y.split_at(n);
        let mut out = DMatrix::zeros(d, d);
        match l {
            1 => {
                for a in 0..n {
                    out[(a, a)] = 1.0;
                }
            }
            2 => {
                for i in 0..m {
                    out[(n + i, n + i)] = 0.5;
                    for be in 0..n {
                        out[(n + i, be)] = 0.5 * (0..n).map(|al| self.j(i, al, be) * x[al]).sum::<f64>();
                    }
                }
            }
            3 => {
                for al in 0..n {
                    for de in 0..n {
                        out[(al, de)] = self.theta3(x, al, de);
                    }
                }
                for i in 0..m {
                    for be in 0..n {
                        out[(n + i, be)] = (0..n).map(|al| self.j1(x, i, al, be) * x[al]).sum::<f64>() / 3.0;
                    }
                }
            }
            4 => {
                for i in 0..m {
                    for de in 0..n {
                        let mut s = 0.0;
                        for j in 0..m {
                            for ga in 0..n {
                                s += z[j] * 0.5 * self.r(ga, de, n + j, n + i) * x[ga];
                            }
                        }
                        for al in 0..n {
                            for be in 0..n {
                                s += self.j(i, al, be) * x[al] * self.theta3(x, be, de);
                            }
                            s += self.j2(z, i, al, de) * x[al];
                        }
                        out[(n + i, de)] = 0.25 * s;
                    }
                }
            }
            _ => {}
        }
        out
    }

    /// Which co-frame rows have a closed form at order `l`.
    pub fn coframe_rows(&self, l: usize) -> std::ops::Range<usize> {
        if l == 4 {
            self.n..self.n + self.m
        } else {
            0..self.n + self.m
        }
    }

    /// Frame part of order `l` (`l ∈ {-2,-1,0,1}`), `[b][a]` = `∂_b` component of `E_a`.
    pub fn frame(&self, y: &[f64], l: i32) -> DMatrix<f64> {
        let (n, m) = (self.n, self.m);
        let d = n + m;
        let (x, z) = y.split_at(n);
        let mut out = DMatrix::zeros(d, d);
        match l {
            -2 => {
                for i in 0..m {
                    out[(n + i, n + i)] = 2.0;
                }
            }
            -1 => {
                for al in 0..n {
                    out[(al, al)] = 1.0;
                    for i in 0..m {
                        out[(n + i, al)] = (0..n).map(|be| self.j(i, al, be) * x[be]).sum();
                    }
                }
            }
            0 => {
                for al in 0..n {
                    for i in 0..m {
                        out[(n + i, al)] = 2.0 / 3.0 * (0..n).map(|be| self.j1(x, i, al, be) * x[be]).sum::<f64>();
                    }
                }
            }
            1 => {
                for al in 0..n {
                    for be in 0..n {
                        let mut f = 0.0;
                        for ga in 0..n {
                            for de in 0..n {
                                f += x[ga] * x[de] * self.r(al, ga, de, be);
                            }
                        }
                        f /= 6.0;
                        out[(be, al)] += f;
                        for i in 0..m {
                            out[(n + i, al)] += f * (0..n).map(|g| self.j(i, be, g) * x[g]).sum::<f64>();
                        }
                    }
                    for i in 0..m {
                        let mut h = 0.0;
                        for be in 0..n {
                            for j in 0..m {
                                h += self.r(al, be, n + j, n + i) * z[j] * x[be] / 8.0;
                            }
                            for ga in 0..n {
                                let jbg = self.j(i, be, ga);
                                if jbg == 0.0 {
                                    continue;
                                }
                                for b2 in 0..n {
                                    for g2 in 0..n {
                                        h += jbg * self.r(al, b2, g2, ga) * x[be] * x[b2] * x[g2] / 24.0;
                                    }
                                }
                            }
                            h += 0.25 * x[be] * self.j2(z, i, al, be);
                        }
                        out[(n + i, al)] += 2.0 * h;
                    }
                }
            }
            _ => {}
        }
        out
    }

    /// `ω^{b(2)}_a(∂_c)` as `[c][b][a]` flattened.
    pub fn connection2(&self, y: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let d = n + m;
        let mut out = vec![0.0; d * d * d];
        for c in 0..n {
            for b in 0..d {
                for a in 0..d {
                    out[(c * d + b) * d + a] = 0.5 * (0..n).map(|al| self.r(al, c, a, b) * y[al]).sum::<f64>();
                }
            }
        }
        out
    }

    /// Order-1 and order-2 parts of the special-frame `J`, `[i][a][b]`.
    pub fn jtilde(&self, y: &[f64], l: usize) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let (x, z) = y.split_at(n);
        let mut out = Vec::with_capacity(m * n * n);
        for i in 0..m {
            for a in 0..n {
                for b in 0..n {
                    out.push(match l {
                        0 => self.j(i, a, b),
                        1 => self.j1(x, i, a, b),
                        2 => self.j2(z, i, a, b),
                        _ => 0.0,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaylorRow {
    pub name: String,
    pub residual: f64,
    /// Fit error estimate for the extracted side.
    pub fit_error: f64,
    pub applicable: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaylorReport {
    pub model: String,
    pub base_point: Vec<f64>,
    pub tol: f64,
    pub grid: DilationGrid,
    pub rays: Vec<Vec<f64>>,
    pub parallel_torsion_residual: f64,
    pub rows: Vec<TaylorRow>,
    pub max_condition: f64,
    pub pass: bool,
}

impl TaylorReport {
    pub fn row(&self, name: &str) -> Option<&TaylorRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

fn maxdiff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn maxabs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Default sample rays: deterministic, moderate gauge.
/// Random element of `O(n) × O(m)` (Haar, via QR of Gaussian blocks).
pub fn random_block_rotation(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n + m, n + m);
    for (off, k) in [(0, n), (n, m)] {
        let g = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng));
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for j in 0..k {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        out.view_mut((off, off), (k, k)).copy_from(&q);
    }
    out
}

pub fn sample_rays(n: usize, m: usize, count: usize, gauge: f64, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut y: Vec<f64> = (0..n + m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let x2: f64 = y[..n].iter().map(|v| v * v).sum();
            let z2: f64 = y[n..].iter().map(|v| v * v).sum();
            let g = (x2 * x2 + z2).powf(0.25);
            for (k, v) in y.iter_mut().enumerate() {
                *v *= if k < n { gauge / g } else { (gauge / g).powi(2) };
            }
            y
        })
        .collect()
}

/// Compare extracted homogeneous parts against the closed forms.
pub fn taylor_check(model: &FoliationModel, q: &[f64], tol: f64, rays: &[Vec<f64>], grid: &DilationGrid) -> Result<TaylorReport> {
    let chart = PrivilegedChart::new(model, q, 1e-13)?;
    let pred = Predictions::new(&chart)?;
    let (n, m) = (model.n, model.m);
    let d = n + m;
    let pt = pred.geometry().parallel_torsion_residual();
    let parallel = pt <= 1e-10;
    let expansions: Vec<RayExpansion> = rays.iter().map(|y| chart.expand_ray(y, grid, 4)).collect::<Result<_>>()?;
    let mut rows: Vec<TaylorRow> = Vec::new();
    let mut add = |name: String, residual: f64, fit_error: f64, applicable: bool| {
        rows.push(TaylorRow { name, residual, fit_error, applicable })
    };
    let mut max_cond = 0.0f64;
    for ex in &expansions {
        max_cond = max_cond.max(ex.coframe.condition);
    }
    // co-frame rows l = 1..4
    for l in 1..=4usize {
        let (mut r, mut e) = (0.0f64, 0.0f64);
        for ex in &expansions {
            let p = pred.coframe(&ex.y, l);
            let got = ex.coframe.order(l);
            let err = ex.coframe.order_err(l);
            for a in pred.coframe_rows(l) {
                for b in 0..d {
                    r = r.max((got[a * d + b] - p[(a, b)]).abs());
                    e = e.max(err[a * d + b]);
                }
            }
        }
        add(format!("coframe_order_{l}"), r, e, l < 3 || parallel || l == 3);
    }
    // co-frame order 0 vanishes
    let mut r0 = 0.0f64;
    for ex in &expansions {
        r0 = r0.max(maxabs(ex.coframe.order(0)));
    }
    add("coframe_order_0".into(), r0, 0.0, true);
    // frame parts
    for l in [-2i32, -1, 0, 1] {
        let (mut r, mut e) = (0.0f64, 0.0f64);
        for ex in &expansions {
            let p = pred.frame(&ex.y, l);
            let idx = (l + 2) as usize;
            let got = ex.frame.order(idx);
            let err = ex.frame.order_err(idx);
            for a in 0..d {
                if l == 1 && a >= n {
                    // vertical frame order 1 has no closed form
                    continue;
                }
                for b in 0..d {
                    // fitted matrix is t²G⁻¹ flattened column-major: entry (b, a) at a*d + b
                    r = r.max((got[a * d + b] - p[(b, a)]).abs());
                    e = e.max(err[a * d + b]);
                }
            }
        }
        add(format!("frame_order_{l}"), r, e, l <= 0 || parallel);
    }
    // connection forms: order 1 and vertical columns of order 2 vanish (ω(q) = 0), order 2 closed form
    let (mut rq, mut r2, mut e2) = (0.0f64, 0.0f64, 0.0f64);
    for ex in &expansions {
        rq = rq.max(maxabs(ex.connection.order(0))).max(maxabs(ex.connection.order(1)));
        let got = ex.connection.order(2);
        let err = ex.connection.order_err(2);
        let p = pred.connection2(&ex.y);
        for c in 0..d {
            for k in 0..d * d {
                let idx = c * d * d + k;
                if c >= n {
                    rq = rq.max(got[idx].abs());
                } else {
                    r2 = r2.max((got[idx] - p[idx]).abs());
                    e2 = e2.max(err[idx]);
                }
            }
        }
    }
    add("connection_at_base".into(), rq, 0.0, true);
    add("connection_order_2".into(), r2, e2, true);
    // generator identities
    let gres = expansions.iter().fold(0.0f64, |a, ex| a.max(ex.generator_residual));
    let ores = expansions.iter().fold(0.0f64, |a, ex| a.max(ex.connection_on_p));
    add("generator_coframe".into(), gres, 0.0, true);
    add("generator_connection".into(), ores, 0.0, true);
    // J in the special frame: order 0, 1 (horizontal derivatives = ∇_X T), order 2
    for l in 0..=2usize {
        let (mut r, mut e) = (0.0f64, 0.0f64);
        for ex in &expansions {
            r = r.max(maxdiff(ex.jtilde.order(l), &pred.jtilde(&ex.y, l)));
            e = e.max(maxabs(ex.jtilde.order_err(l)));
        }
        add(format!("jtilde_order_{l}"), r, e, l < 2 || parallel);
    }
    // X_γ(J^i_{αβ})(q) = g(Z_i, (∇_{X_γ}T)(X_α, X_β))
    let nt = pred.geometry().nabla_torsion();
    let mut r34 = 0.0f64;
    for g in 0..n {
        for i in 0..m {
            for a in 0..n {
                for b in 0..n {
                    r34 = r34.max((pred.dj(g, i, a, b) - nt.get(g, a, b, n + i)).abs());
                }
            }
        }
    }
    add("horizontal_derivative_of_j".into(), r34, 0.0, true);

    let pass = rows.iter().filter(|r| r.applicable).all(|r| r.residual <= tol);
    Ok(TaylorReport {
        model: model.label.clone(),
        base_point: q.to_vec(),
        tol,
        grid: *grid,
        rays: rays.to_vec(),
        parallel_torsion_residual: pt,
        rows,
        max_condition: max_cond,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_rep;
    use crate::models::{hopf_s3, htype_group};

    #[test]
    fn group_chart_is_identity() {
        let model = htype_group(build_rep(4, 3).unwrap());
        let chart = PrivilegedChart::new(&model, &[0.0; 7], 1e-12).unwrap();
        let y = [0.3, -0.2, 0.1, 0.5, 0.2, -0.4, 0.7];
        let p = chart.forward(&y).unwrap();
        assert!(maxdiff(&p, &y) < 1e-12);
        let back = chart.inverse(&p, 1e-12, 20).unwrap();
        assert!(maxdiff(&back, &y) < 1e-12);
    }

    #[test]
    fn hopf_scaling_and_reversibility() {
        let model = hopf_s3(1.0).unwrap();
        let chart = PrivilegedChart::new(&model, &[0.0; 3], 1e-12).unwrap();
        let y = [0.4, -0.3, 0.5];
        let t = 0.6;
        let a = chart.forward(&[t * y[0], t * y[1], t * t * y[2]]).unwrap();
        let carry = Carry { positions: true, variations: false, transport: false, connection: false };
        let b = chart.integrate(&y, &[t], carry).unwrap()[0].p.clone().unwrap();
        assert!(maxdiff(&a, &b) < 1e-9);
        let back = chart.inverse(&a, 1e-12, 30).unwrap();
        assert!(maxdiff(&back, &[t * y[0], t * y[1], t * t * y[2]]) < 1e-9);
    }

    #[test]
    fn popp_density_at_origin() {
        let model = hopf_s3(1.0).unwrap();
        let chart = PrivilegedChart::new(&model, &[0.0; 3], 1e-12).unwrap();
        let small = chart.popp_density(&[1e-6, 0.0, 0.0]).unwrap();
        assert!((small - 0.5 / 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn series_fit_recovers_polynomial() {
        let grid = DilationGrid::default();
        let mut ts = grid.positive();
        ts.extend(grid.positive().iter().map(|t| -t));
        let vals: Vec<Vec<f64>> = ts.iter().map(|t| vec![t.sin()]).collect();
        let f = fit_series(&ts, &vals, 0, 5).unwrap();
        assert!((f.order(3)[0] + 1.0 / 6.0).abs() < 1e-9);
        assert!(f.order(4)[0].abs() < 1e-9);
    }

    #[test]
    fn taylor_rows_on_models() {
        for model in [hopf_s3(1.0).unwrap(), crate::models::quaternionic_hopf_s7(1.0).unwrap()] {
            let q = model.base_point();
            let rays = sample_rays(model.n, model.m, 3, 0.5, 7);
            let rep = taylor_check(&model, &q, 1e-5, &rays, &DilationGrid::default()).unwrap();
            for r in &rep.rows {
                eprintln!("{} {:<28} {:.3e} fit {:.2e} {}", model.label, r.name, r.residual, r.fit_error, r.applicable);
            }
            eprintln!("cond {:e}", rep.max_condition);
            assert!(rep.pass);
        }
    }

    #[test]
    fn group_taylor_terminates() {
        let model = htype_group(build_rep(4, 3).unwrap());
        let rays = sample_rays(4, 3, 2, 0.5, 3);
        let rep = taylor_check(&model, &[0.0; 7], 1e-12, &rays, &DilationGrid::default()).unwrap();
        for r in &rep.rows {
            assert!(r.residual <= 1e-12, "{} {:e}", r.name, r.residual);
        }
    }

    #[test]
    fn special_frame_stays_orthonormal() {
        let model = crate::models::quaternionic_hopf_s7(1.0).unwrap();
        let chart = PrivilegedChart::new(&model, &model.base_point(), 1e-12).unwrap();
        let y = sample_rays(4, 3, 1, 0.8, 11).remove(0);
        let e = chart.special_frame(&y, 1.0).unwrap();
        let drift = (e.transpose() * &e - DMatrix::identity(7, 7)).amax();
        assert!(drift <= 1e-10, "{drift:e}");
        let again = chart.special_frame(&y, 1.0).unwrap();
        assert_eq!(e, again);
    }

    #[test]
    fn reversibility() {
        let model = hopf_s3(1.0).unwrap();
        let chart = PrivilegedChart::new(&model, &[0.0; 3], 1e-12).unwrap();
        let carry = Carry { positions: true, variations: false, transport: false, connection: false };
        let st = chart.integrate(&[0.5, 0.2, -0.3], &[0.8], carry).unwrap().remove(0);
        // flip time: start at the end point with reversed velocity, same acceleration
        let back = integrate_parabolic_from(&model, st.p.as_ref().unwrap(), &st.v.iter().map(|v| -v).collect::<Vec<_>>(), &st.w, 0.8, 1e-12).unwrap();
        assert!(maxabs(back.p.as_ref().unwrap()) < 1e-9);
    }

    #[test]
    fn rotated_frame_rotates_coordinates() {
        let model = crate::models::quaternionic_hopf_s7(1.0).unwrap();
        let q = model.base_point();
        let (c, s) = (0.6f64, 0.8f64);
        let mut rot = DMatrix::identity(7, 7);
        rot[(0, 0)] = c;
        rot[(0, 2)] = -s;
        rot[(2, 0)] = s;
        rot[(2, 2)] = c;
        rot[(5, 5)] = c;
        rot[(5, 6)] = s;
        rot[(6, 5)] = -s;
        rot[(6, 6)] = c;
        let a = PrivilegedChart::new(&model, &q, 1e-12).unwrap();
        let b = PrivilegedChart::with_frame(&model, &q, rot.clone(), 1e-12).unwrap();
        let y = sample_rays(4, 3, 1, 0.5, 5).remove(0);
        let p = a.forward(&y).unwrap();
        let yb = b.inverse(&p, 1e-13, 30).unwrap();
        let expect = rot.transpose() * DVector::from_vec(y.clone());
        assert!(maxdiff(&yb, expect.as_slice()) < 1e-8);
    }

    #[test]
    fn horizontal_bracket_has_order_minus_two() {
        // [X^(-1)_α, X^(-1)_β] has constant ∂_z coefficients −2J
        let model = hopf_s3(1.0).unwrap();
        let chart = PrivilegedChart::new(&model, &[0.0; 3], 1e-13).unwrap();
        let grid = DilationGrid::default();
        let y = [0.3, -0.2, 0.1];
        let h = 1e-3;
        let coef = |y: &[f64]| chart.expand_ray(y, &grid, 2).unwrap().frame.order(1).to_vec();
        let ya = coef(&[y[0] + h, y[1], y[2]]);
        let yb = coef(&[y[0] - h, y[1], y[2]]);
        let za = coef(&[y[0], y[1] + h, y[2]]);
        let zb = coef(&[y[0], y[1] - h, y[2]]);
        // ∂_x0 of the z-component of X_1 minus ∂_x1 of the z-component of X_0
        let d = 3;
        let bracket = (ya[d + 2] - yb[d + 2]) / (2.0 * h) - (za[2] - zb[2]) / (2.0 * h);
        let j = PointGeometry::at(&model, &[0.0; 3]).unwrap().j(0, 0, 1);
        assert!((bracket + 2.0 * j).abs() < 1e-7, "{bracket} vs {}", -2.0 * j);
    }
}
