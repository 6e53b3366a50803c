//! Operators `A⁽⁻¹⁾`, `A⁽⁰⁾` of the sub-Laplacian in privileged coordinates
//! and the second heat invariant
//! `c₁ = ∫₀¹∫ K̂(s; ξ) (A⁽⁰⁾ K̂(1-s; ·))(ξ) dξ ds`.
//!
//! The generator is `L = ΣX_α² + ω_α X_α` (so `Δ_sub = -L`), expanded as
//! `L̂ + A⁽⁻¹⁾ + A⁽⁰⁾ + …` with `X_α = X̂_α + X_α⁽⁰⁾ + X_α⁽¹⁾ + …`.

use super::kernel::{d_y_coth, dlog_y_over_sinh, y_coth, y_over_sinh, GroupKernel};
use super::polyop::{Poly, PolyDiffOp, Term};
use crate::connection::PointGeometry;
use crate::error::{HtypeError, Result};
use crate::models::FoliationModel;
use crate::parallel;
use crate::privileged::FrameTensors;
use crate::quad::gauss_legendre;
use crate::volume::Estimate;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Parallel-torsion residual above which `c₁` is refused.
pub const PARALLEL_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct AOperators {
    pub a_minus1: PolyDiffOp,
    pub a0: PolyDiffOp,
}

/// Assemble `A⁽⁻¹⁾` and `A⁽⁰⁾` from frame tensors at the base point.
pub fn assemble_a_ops_from(ft: &FrameTensors) -> AOperators {
    let (n, m) = (ft.n, ft.m);
    let d = n + m;
    let x = |k: usize| Poly::var(d, k);
    let z = |i: usize| Poly::var(d, n + i);
    let jx = |i: usize, a: usize| {
        let mut p = Poly::zero(d);
        for b in 0..n {
            p = p.add(&x(b).scale(ft.j(i, a, b)));
        }
        p
    };
    let mut a_m1 = PolyDiffOp::zero(n, m, -1);
    let mut a0 = PolyDiffOp::zero(n, m, 0);
    for al in 0..n {
        // X̂_α
        let mut comps = vec![Poly::zero(d); d];
        comps[al] = Poly::constant(d, 1.0);
        for i in 0..m {
            comps[n + i] = jx(i, al);
        }
        let xhat = PolyDiffOp::vector_field(n, m, -1, &comps);
        // X_α⁽⁰⁾ = ⅔ J⁽¹⁾_{αβ} x^β ∂_{z_i}
        let mut c0 = vec![Poly::zero(d); d];
        for i in 0..m {
            let mut p = Poly::zero(d);
            for be in 0..n {
                for ga in 0..n {
                    p = p.add(&x(ga).mul(&x(be)).scale(2.0 / 3.0 * ft.dj(ga, i, al, be)));
                }
            }
            c0[n + i] = p;
        }
        let x0 = PolyDiffOp::vector_field(n, m, 0, &c0);
        // X_α⁽¹⁾ = f^β_α (∂_β + J^i_{βγ}x^γ ∂_{z_i}) + 2 h^i_α ∂_{z_i}
        let mut c1 = vec![Poly::zero(d); d];
        let f: Vec<Poly> = (0..n)
            .map(|be| {
                let mut p = Poly::zero(d);
                for ga in 0..n {
                    for de in 0..n {
                        p = p.add(&x(ga).mul(&x(de)).scale(ft.r(al, ga, de, be) / 6.0));
                    }
                }
                p
            })
            .collect();
        for be in 0..n {
            c1[be] = f[be].clone();
        }
        for i in 0..m {
            let mut h = Poly::zero(d);
            for be in 0..n {
                for j in 0..m {
                    h = h.add(&z(j).mul(&x(be)).scale(ft.r(al, be, n + j, n + i) / 8.0));
                }
                for ga in 0..n {
                    let jbg = ft.j(i, be, ga);
                    if jbg == 0.0 {
                        continue;
                    }
                    for b2 in 0..n {
                        for g2 in 0..n {
                            h = h.add(&x(be).mul(&x(b2)).mul(&x(g2)).scale(jbg * ft.r(al, b2, g2, ga) / 24.0));
                        }
                    }
                }
                for j in 0..m {
                    h = h.add(&x(be).mul(&z(j)).scale(0.125 * ft.dj(n + j, i, al, be)));
                }
            }
            let mut v = h.scale(2.0);
            for be in 0..n {
                v = v.add(&f[be].mul(&jx(i, be)));
            }
            c1[n + i] = v;
        }
        let x1 = PolyDiffOp::vector_field(n, m, 1, &c1);
        // ω_α = ½ R^β_{γβα} x^γ
        let mut om = Poly::zero(d);
        for be in 0..n {
            for ga in 0..n {
                om = om.add(&x(ga).scale(0.5 * ft.r(ga, be, al, be)));
            }
        }
        a_m1 = a_m1.add(&xhat.compose(&x0, -1)).add(&x0.compose(&xhat, -1));
        a0 = a0
            .add(&xhat.compose(&x1, 0))
            .add(&x1.compose(&xhat, 0))
            .add(&x0.compose(&x0, 0))
            .add(&PolyDiffOp::multiply(n, m, 1, &om).compose(&xhat, 0));
    }
    AOperators { a_minus1: a_m1, a0 }
}

pub fn assemble_a_ops(model: &FoliationModel, q: &[f64]) -> Result<AOperators> {
    Ok(assemble_a_ops_from(&FrameTensors::at(model, q)?))
}

/// `(4n)^{m/2}`: converts Lebesgue-normalized kernel values to the Popp normalization.
pub fn popp_normalization(n: usize, m: usize) -> f64 {
    (4.0 * n as f64).powf(m as f64 / 2.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct C0Report {
    pub n: usize,
    pub m: usize,
    pub kernel_at_origin: f64,
    pub popp_factor: f64,
    pub c0: f64,
    pub justification: String,
}

pub fn c0_for(n: usize, m: usize) -> Result<C0Report> {
    let k = GroupKernel::new(n, m).value(1.0, &vec![0.0; n], &vec![0.0; m])?;
    let f = popp_normalization(n, m);
    Ok(C0Report {
        n,
        m,
        kernel_at_origin: k,
        popp_factor: f,
        c0: f * k,
        justification: "nilpotentized Popp density in privileged coordinates is (4n)^{-m/2} = n^{-m/2} * 2^{-m} against Lebesgue; kernels w.r.t. Popp are Lebesgue kernels times (4n)^{m/2}".into(),
    })
}

pub fn c0(model: &FoliationModel, _q: &[f64]) -> Result<C0Report> {
    c0_for(model.n, model.m)
}

/// Radial Fourier data of the kernel at time `s`:
/// `c_s(ρ) = (4πs)^{-n/2}(2ρs/sinh 2ρs)^{n/2}`, `a_s(ρ) = ρ coth(2ρs)/2`, and ρ-derivatives.
fn radial(n: usize, s: f64, rho: f64) -> [f64; 4] {
    let y = 2.0 * rho * s;
    let c = (4.0 * PI * s).powf(-(n as f64) / 2.0) * y_over_sinh(y).powf(n as f64 / 2.0);
    let dc = c * (n as f64 / 2.0) * dlog_y_over_sinh(y) * 2.0 * s;
    let a = y_coth(y) / (4.0 * s);
    let da = d_y_coth(y) / 2.0;
    [c, dc, a, da]
}

/// `∫ x^p ∂_x^c(e^{-Bx²}) e^{-Ax²} dx`.
fn gauss1(p: usize, c: usize, a: f64, b: f64) -> f64 {
    // ∂^c e^{-Bx²} = P_c(x) e^{-Bx²}
    let mut poly = vec![1.0];
    for _ in 0..c {
        let mut next = vec![0.0; poly.len() + 1];
        for (k, v) in poly.iter().enumerate() {
            if k > 0 {
                next[k - 1] += k as f64 * v;
            }
            next[k + 1] -= 2.0 * b * v;
        }
        poly = next;
    }
    let s = a + b;
    poly.iter()
        .enumerate()
        .map(|(k, v)| {
            let e = p + k;
            if e % 2 == 1 || *v == 0.0 {
                0.0
            } else {
                v * gamma((e as f64 + 1.0) / 2.0) * s.powf(-(e as f64 + 1.0) / 2.0)
            }
        })
        .sum()
}

/// `∫_{S^{m-1}} ω^γ dω`.
fn sphere_moment(g: &[u32]) -> f64 {
    if g.iter().any(|k| k % 2 == 1) {
        return 0.0;
    }
    let tot: u32 = g.iter().sum();
    2.0 * g.iter().map(|&k| gamma((k as f64 + 1.0) / 2.0)).product::<f64>() / gamma((tot as f64 + g.len() as f64) / 2.0)
}

/// A term prepared for the spectral formula.
struct SpectralTerm {
    coef: f64,
    a: Vec<usize>,
    c: Vec<usize>,
    /// radial power of ρ beyond `ρ^{m-1}` from the λ-monomial
    rho_pow: i32,
    /// sphere moment times the real phase
    angular: f64,
    /// `Some(j)` when the term carries `z_j`
    z_index: Option<usize>,
}

fn prepare(t: &Term, n: usize) -> Result<Option<SpectralTerm>> {
    let a: Vec<usize> = t.mono[..n].iter().map(|v| *v as usize).collect();
    let b: Vec<u32> = t.mono[n..].iter().map(|v| *v as u32).collect();
    let c: Vec<usize> = t.deriv[..n].iter().map(|v| *v as usize).collect();
    let e: Vec<u32> = t.deriv[n..].iter().map(|v| *v as u32).collect();
    let bsum: u32 = b.iter().sum();
    let esum: u32 = e.iter().sum();
    if bsum > 1 {
        return Err(HtypeError::InvalidArgument("spectral c1 supports coefficients at most linear in z".into()));
    }
    let mut g = e.clone();
    let z_index = b.iter().position(|v| *v == 1);
    if let Some(j) = z_index {
        g[j] += 1;
    }
    let total = esum + bsum;
    let mom = sphere_moment(&g);
    if mom == 0.0 {
        return Ok(None);
    }
    // i^{|e|+|b|} is real here since |g| is even
    let phase = if (total / 2) % 2 == 0 { 1.0 } else { -1.0 };
    // the z-term derivative ∂_{μ_j}φ(|μ|) at μ = -λ is -φ'(ρ)λ_j/ρ
    let sign = if z_index.is_some() { -1.0 } else { 1.0 };
    Ok(Some(SpectralTerm { coef: t.coef, a, c, rho_pow: total as i32 - bsum as i32, angular: phase * mom * sign, z_index }))
}

/// Deterministic evaluation by Parseval in `z`, Gaussian moments in `x`,
/// radial ρ-quadrature and Gauss–Legendre in `s`.
pub fn c1_spectral(op: &PolyDiffOp, s_nodes: usize) -> Result<f64> {
    let (n, m) = (op.n, op.m);
    let terms: Vec<SpectralTerm> = op.terms().iter().map(|t| prepare(t, n)).collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    if terms.is_empty() {
        return Ok(0.0);
    }
    let (ux, uw) = gauss_legendre(s_nodes);
    let (rx, rw) = gauss_legendre(16);
    let span = 80.0 / n as f64;
    let panels = 48usize;
    let h = span / panels as f64;
    let mut total = 0.0;
    for (u, wu) in ux.iter().zip(&uw) {
        // s = (1 - cos πv)/2, v ∈ [0, 1]
        let v = 0.5 * (u + 1.0);
        let s = 0.5 * (1.0 - (PI * v).cos());
        let ds = 0.5 * wu * 0.5 * PI * (PI * v).sin();
        let t = 1.0 - s;
        if s <= 0.0 || t <= 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for p in 0..panels {
            for (g, wg) in rx.iter().zip(&rw) {
                let rho = h * (p as f64 + 0.5 * (g + 1.0));
                let wr = 0.5 * h * wg;
                let [cs, dcs, as_, das] = radial(n, s, rho);
                let [ct, _, at, _] = radial(n, t, rho);
                let base = wr * rho.powi(m as i32 - 1);
                for term in &terms {
                    let gx: f64 = (0..n).map(|k| gauss1(term.a[k], term.c[k], as_, at)).product();
                    let val = match term.z_index {
                        None => cs * ct * gx,
                        Some(_) => {
                            // ∂_A of the x-integral
                            let mut dga = 0.0;
                            for k in 0..n {
                                let mut prod = -gauss1(term.a[k] + 2, term.c[k], as_, at);
                                for l in 0..n {
                                    if l != k {
                                        prod *= gauss1(term.a[l], term.c[l], as_, at);
                                    }
                                }
                                dga += prod;
                            }
                            ct * (dcs * gx + cs * das * dga)
                        }
                    };
                    inner += base * term.coef * term.angular * rho.powi(term.rho_pow) * val;
                }
            }
        }
        total += ds * inner;
    }
    Ok((2.0 * PI).powi(-(m as i32)) * total)
}

/// Monte Carlo evaluation with importance sampling from a proposal shaped
/// like `K̂(τ; ·)`; for `s > ½` the adjoint moves `A⁽⁰⁾` onto `K̂(s)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub s_nodes: usize,
    /// Largest per-node sample variance of the weighted integrand.
    pub max_node_variance: f64,
}

fn laplace<R: Rng>(rng: &mut R, b: f64) -> f64 {
    let u: f64 = rng.gen::<f64>() - 0.5;
    -b * u.signum() * (1.0 - 2.0 * u.abs()).max(1e-300).ln()
}

pub fn c1_monte_carlo(op: &PolyDiffOp, budget: u64, seed: u64, s_nodes: usize) -> Result<McEstimate> {
    let (n, m) = (op.n, op.m);
    let kernel = GroupKernel::new(n, m);
    let adj = op.adjoint();
    let (ux, uw) = gauss_legendre(s_nodes);
    let per_node = (budget / s_nodes as u64).max(parallel_min());
    let strata = crate::volume::STRATA;
    let mut value = 0.0;
    let mut var = 0.0;
    let mut max_var = 0.0f64;
    for (k, (u, wu)) in ux.iter().zip(&uw).enumerate() {
        let v = 0.5 * (u + 1.0);
        let s = 0.5 * (1.0 - (PI * v).cos());
        let ds = 0.5 * wu * 0.5 * PI * (PI * v).sin();
        let t = 1.0 - s;
        let (tau, use_adj) = if s <= 0.5 { (s, false) } else { (t, true) };
        let sx = (3.0 * tau).sqrt();
        let bz = tau * (m as f64).sqrt();
        let parts = parallel::map_strata(strata, parallel::threads(), |st| -> Result<(u64, f64, f64)> {
            let mut rng = parallel::stratum_rng(seed, (k * strata + st) as u64);
            let count = per_node / strata as u64 + u64::from((st as u64) < per_node % strata as u64);
            let normal = Normal::new(0.0, sx).unwrap();
            let (mut sum, mut sumsq) = (0.0, 0.0);
            for _ in 0..count {
                let x: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
                let z: Vec<f64> = (0..m).map(|_| laplace(&mut rng, bz)).collect();
                let mut logq = 0.0;
                for xv in &x {
                    logq += -0.5 * (xv / sx).powi(2) - (sx * (2.0 * PI).sqrt()).ln();
                }
                for zv in &z {
                    logq += -zv.abs() / bz - (2.0 * bz).ln();
                }
                let y: Vec<f64> = x.iter().chain(&z).cloned().collect();
                let f = if !use_adj {
                    let ks = kernel.value(s, &x, &z)?;
                    let kt = kernel.jet(t, &x, &z, 2)?;
                    ks * op.apply(&y, kt.value, &kt.grad, &kt.hess)?
                } else {
                    let ks = kernel.jet(s, &x, &z, 2)?;
                    let kt = kernel.value(t, &x, &z)?;
                    adj.apply(&y, ks.value, &ks.grad, &ks.hess)? * kt
                };
                let w = f / logq.exp();
                sum += w;
                sumsq += w * w;
            }
            Ok((count, sum, sumsq))
        });
        let (mut cnt, mut sum, mut sumsq) = (0u64, 0.0, 0.0);
        for p in parts {
            let (c, a, b) = p?;
            cnt += c;
            sum += a;
            sumsq += b;
        }
        let mean = sum / cnt as f64;
        let nv = (sumsq / cnt as f64 - mean * mean).max(0.0) * cnt as f64 / (cnt as f64 - 1.0);
        max_var = max_var.max(nv);
        value += ds * mean;
        var += ds * ds * nv / cnt as f64;
    }
    Ok(McEstimate { value, stderr: var.sqrt(), samples: per_node * s_nodes as u64, s_nodes, max_node_variance: max_var })
}

fn parallel_min() -> u64 {
    2 * crate::volume::STRATA as u64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct C1Options {
    pub s_nodes: usize,
    /// Monte Carlo cross-check budget (0 disables it).
    pub mc_budget: u64,
    pub mc_s_nodes: usize,
    pub seed: u64,
}

impl Default for C1Options {
    fn default() -> Self {
        C1Options { s_nodes: 48, mc_budget: 0, mc_s_nodes: 12, seed: 42 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct C1Report {
    pub model: String,
    pub base_point: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub parallel_torsion_residual: f64,
    pub kappa_h: f64,
    pub tau_v: f64,
    pub a_minus1_terms: usize,
    pub a0_terms: usize,
    pub a0_homogeneity_defect: i32,
    /// Against Lebesgue measure in privileged coordinates.
    pub c1_lebesgue: Estimate,
    pub popp_factor: f64,
    /// Popp-normalized.
    pub c1: Estimate,
    pub c0: f64,
    pub strategy: String,
    pub monte_carlo: Option<McEstimate>,
    /// Monte Carlo and spectral values agree within 3 combined standard errors.
    pub strategies_agree: Option<bool>,
    pub conventions: Vec<String>,
}

pub fn conventions() -> Vec<String> {
    vec![
        "generator L = sum X_a^2 + omega_a X_a, Delta_sub = -L".into(),
        "kernels against Lebesgue measure in privileged coordinates; Popp factor (4n)^{m/2} applied at the report boundary".into(),
        "both kernels in the Duhamel integral are the nilpotent-approximation kernel".into(),
        "A0 acts on the first spatial argument of K(1-s, xi, 0)".into(),
        "A(-1) double-Duhamel term not included (requires horizontally parallel torsion)".into(),
    ]
}

/// `c₁` at `q` in the frame `Y · rot`.
pub fn c1_estimate_in_frame(model: &FoliationModel, q: &[f64], rot: &DMatrix<f64>, opts: &C1Options) -> Result<C1Report> {
    let geo = PointGeometry::at(model, q)?;
    let pt = geo.parallel_torsion_residual();
    if pt > PARALLEL_TOL {
        return Err(HtypeError::Hypothesis(format!("horizontally parallel torsion fails (residual {pt:e})")));
    }
    let ft = FrameTensors::new(&geo, rot);
    let ops = assemble_a_ops_from(&ft);
    let (n, m) = (model.n, model.m);
    let v1 = c1_spectral(&ops.a0, opts.s_nodes)?;
    let v2 = c1_spectral(&ops.a0, opts.s_nodes / 2)?;
    let err = (v1 - v2).abs() + 1e-14 * v1.abs();
    let pf = popp_normalization(n, m);
    let mc = if opts.mc_budget > 0 { Some(c1_monte_carlo(&ops.a0, opts.mc_budget, opts.seed, opts.mc_s_nodes)?) } else { None };
    let agree = mc.as_ref().map(|e| (e.value - v1).abs() <= 3.0 * (e.stderr * e.stderr + err * err).sqrt() + 1e-14);
    Ok(C1Report {
        model: model.label.clone(),
        base_point: q.to_vec(),
        n,
        m,
        parallel_torsion_residual: pt,
        kappa_h: geo.kappa_h(),
        tau_v: geo.tau_v(),
        a_minus1_terms: ops.a_minus1.len(),
        a0_terms: ops.a0.len(),
        a0_homogeneity_defect: ops.a0.homogeneity_defect(),
        c1_lebesgue: Estimate { value: v1, stderr: err },
        popp_factor: pf,
        c1: Estimate { value: pf * v1, stderr: pf * err },
        c0: c0_for(n, m)?.c0,
        strategy: "spectral (Parseval in z, Gaussian moments in x, radial lambda quadrature, Gauss-Legendre in s)".into(),
        monte_carlo: mc.map(|e| McEstimate { value: pf * e.value, stderr: pf * e.stderr, ..e }),
        strategies_agree: agree,
        conventions: conventions(),
    })
}

pub fn c1_estimate(model: &FoliationModel, q: &[f64], opts: &C1Options) -> Result<C1Report> {
    let d = model.dim();
    c1_estimate_in_frame(model, q, &DMatrix::identity(d, d), opts)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct C1Site {
    pub label: String,
    pub n: usize,
    pub m: usize,
    pub kappa_h: f64,
    pub tau_v: f64,
    pub c1: Estimate,
}

impl From<&C1Report> for C1Site {
    fn from(r: &C1Report) -> Self {
        C1Site { label: r.model.clone(), n: r.n, m: r.m, kappa_h: r.kappa_h, tau_v: r.tau_v, c1: r.c1.clone() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniversalFit {
    pub sites: Vec<C1Site>,
    pub c_1: Estimate,
    pub c_2: Estimate,
    pub relative_residual: f64,
    /// Sites come from different `(n, m)`; the constants are only universal per `(n, m)`.
    pub mixed_dimensions: bool,
    pub singular_values: [f64; 2],
}

/// Least squares `c₁ ≈ C₁ κ_H + C₂ τ_V`.
pub fn fit_universal_constants(sites: &[C1Site]) -> Result<UniversalFit> {
    if sites.len() < 3 {
        return Err(HtypeError::InvalidArgument("fit needs at least 3 sites".into()));
    }
    let k = sites.len();
    let a = DMatrix::from_fn(k, 2, |i, j| if j == 0 { sites[i].kappa_h } else { sites[i].tau_v });
    let y = DVector::from_iterator(k, sites.iter().map(|s| s.c1.value));
    let svd = a.clone().svd(false, false);
    let mut sv = [svd.singular_values[0], svd.singular_values[1]];
    sv.sort_by(|p, q| q.partial_cmp(p).unwrap());
    if sv[1] <= 1e-9 * sv[0].max(1e-300) {
        return Err(HtypeError::RankDeficient(format!(
            "rank {} with singular values {:e}, {:e}",
            if sv[0] > 0.0 { 1 } else { 0 },
            sv[0],
            sv[1]
        )));
    }
    let ata_inv = (a.transpose() * &a).try_inverse().ok_or_else(|| HtypeError::RankDeficient("normal equations".into()))?;
    let pinv = &ata_inv * a.transpose();
    let c = &pinv * &y;
    let resid = &a * &c - &y;
    let rel = resid.norm() / y.norm().max(1e-300);
    let sig = DMatrix::from_diagonal(&DVector::from_iterator(k, sites.iter().map(|s| s.c1.stderr.powi(2))));
    let cov = &pinv * sig * pinv.transpose();
    let first = (sites[0].n, sites[0].m);
    Ok(UniversalFit {
        sites: sites.to_vec(),
        c_1: Estimate { value: c[0], stderr: cov[(0, 0)].sqrt() },
        c_2: Estimate { value: c[1], stderr: cov[(1, 1)].sqrt() },
        relative_residual: rel,
        mixed_dimensions: sites.iter().any(|s| (s.n, s.m) != first),
        singular_values: sv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_rep;
    use crate::models::{hopf_s3, htype_group};

    #[test]
    fn flat_operators_vanish() {
        let model = htype_group(build_rep(4, 3).unwrap());
        let ops = assemble_a_ops(&model, &[0.0; 7]).unwrap();
        assert!(ops.a_minus1.is_empty());
        assert!(ops.a0.is_empty());
        assert_eq!(c1_spectral(&ops.a0, 16).unwrap(), 0.0);
    }

    #[test]
    fn curved_operators_are_homogeneous() {
        for model in [hopf_s3(1.0).unwrap(), crate::models::quaternionic_hopf_s7(1.0).unwrap()] {
            let ops = assemble_a_ops(&model, &model.base_point()).unwrap();
            assert!(ops.a_minus1.max_abs_coef() < 1e-12);
            assert!(!ops.a0.is_empty());
            assert_eq!(ops.a0.homogeneity_defect(), 0);
            assert!(ops.a0.max_derivative_order() <= 2);
        }
    }

    #[test]
    fn zero_coefficient_operator_gives_zero() {
        let mut op = PolyDiffOp::zero(2, 1, 0);
        op.add_term(vec![2, 0, 0], vec![2, 0, 0], 0.0);
        assert_eq!(c1_spectral(&op, 8).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_moment_integrals() {
        // ∫ x² e^{-x²} dx = √π/2 ; ∫ x ∂(e^{-x²}) e^{-x²} dx = ∫ -2x² e^{-2x²} = -√(π/2)/2
        assert!((gauss1(2, 0, 0.5, 0.5) - PI.sqrt() / 2.0).abs() < 1e-14);
        assert!((gauss1(1, 1, 1.0, 1.0) + (PI / 2.0).sqrt() / 2.0).abs() < 1e-14);
        assert!((sphere_moment(&[2, 0, 0]) - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn mixed_fit_rank_checks() {
        let site = |k: f64, t: f64, c: f64| C1Site { label: String::new(), n: 2, m: 1, kappa_h: k, tau_v: t, c1: Estimate { value: c, stderr: 0.0 } };
        let e = fit_universal_constants(&[site(0.0, 0.0, 0.0), site(2.0, 0.0, 1.0), site(0.5, 0.0, 0.25)]);
        assert!(matches!(e, Err(HtypeError::RankDeficient(_))));
        let f = fit_universal_constants(&[site(0.0, 0.0, 0.0), site(2.0, 0.0, 1.0), site(1.0, -1.0, 1.5)]).unwrap();
        assert!((f.c_1.value - 0.5).abs() < 1e-12 && (f.c_2.value + 1.0).abs() < 1e-12);
    }
}
