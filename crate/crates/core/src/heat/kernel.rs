//! Heat kernel of the H-type group `ΣX̂_α²`, `X̂_α = ∂_α + J^i_{αβ}x^β ∂_{z_i}`.
//!
//! `K(t; x, z) = (2π)^{-m} ∫ e^{i⟨λ,z⟩} M_t^λ(x) dλ` with the Mehler factor
//! `M_t^λ(x) = (4πt)^{-n/2} (2|λ|t / sinh 2|λ|t)^{n/2} exp(-|λ| coth(2|λ|t) |x|² / 2)`.
//! The λ-integral is reduced to a radial one; the sphere average of
//! `e^{i⟨λ,z⟩}` is `A_m(|λ||z|)`. Values at `t ≠ 1` come from `t = 1` by
//! parabolic scaling.

use crate::error::{HtypeError, Result};
use crate::quad::gauss_legendre;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// `y / sinh y`, stable for all `y ≥ 0`.
pub fn y_over_sinh(y: f64) -> f64 {
    if y < 1e-3 {
        let y2 = y * y;
        1.0 - y2 / 6.0 + 7.0 * y2 * y2 / 360.0
    } else {
        let e = (-y).exp();
        2.0 * y * e / (1.0 - e * e)
    }
}

/// `y coth y`.
pub fn y_coth(y: f64) -> f64 {
    if y < 1e-3 {
        let y2 = y * y;
        1.0 + y2 / 3.0 - y2 * y2 / 45.0
    } else {
        let e = (-2.0 * y).exp();
        y * (1.0 + e) / (1.0 - e)
    }
}

/// `d/dy ln(y / sinh y) = 1/y - coth y`.
pub fn dlog_y_over_sinh(y: f64) -> f64 {
    if y < 1e-3 {
        -y / 3.0 + y * y * y / 45.0
    } else {
        let e = (-2.0 * y).exp();
        1.0 / y - (1.0 + e) / (1.0 - e)
    }
}

/// `d/dy (y coth y) = coth y - y / sinh² y`.
pub fn d_y_coth(y: f64) -> f64 {
    if y < 1e-3 {
        2.0 * y / 3.0 - 4.0 * y * y * y / 45.0
    } else {
        let e = (-2.0 * y).exp();
        let coth = (1.0 + e) / (1.0 - e);
        let csch = 2.0 * (-y).exp() / (1.0 - e);
        coth - y * csch * csch
    }
}

/// Area of the unit sphere `S^{k-1} ⊂ ℝ^k`.
pub fn sphere_area(k: usize) -> f64 {
    let k = k as f64;
    2.0 * PI.powf(k / 2.0) / gamma(k / 2.0)
}

/// Sphere average data: `A(s) = ∫_{S^{m-1}} e^{i s ω_1} dω` with `A'`, `A''`
/// and `A'(s)/s`.
///
/// `A = |S^{m-1}| F_ν(s)` with `ν = m/2 - 1` and the normalized Bessel
/// function `F_ν(s) = Γ(ν+1)(2/s)^ν J_ν(s)`, `F_ν' = -s F_{ν+1} / (2(ν+1))`.
#[derive(Clone, Debug)]
pub struct SphereFourier {
    m: usize,
    area: f64,
}

impl SphereFourier {
    pub fn new(m: usize) -> Self {
        let area = if m >= 2 { sphere_area(m) } else { 2.0 };
        SphereFourier { m, area }
    }

    /// `[F_ν, F_{ν+1}, F_{ν+2}]`.
    fn bessel3(&self, s: f64) -> [f64; 3] {
        let nu = self.m as f64 / 2.0 - 1.0;
        let series_below = (nu + 4.0).max(8.0);
        if s < series_below {
            let f = |v: f64| {
                let q = -0.25 * s * s;
                let (mut term, mut sum) = (1.0, 1.0);
                for k in 1..200 {
                    term *= q / (k as f64 * (v + k as f64));
                    sum += term;
                    if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                        break;
                    }
                }
                sum
            };
            return [f(nu), f(nu + 1.0), f(nu + 2.0)];
        }
        // upward recurrence F_{v+1} = 4v(v+1)(F_v - F_{v-1})/s², stable for s > v
        let (mut v, mut lo, mut hi) = if self.m % 2 == 1 {
            (-0.5, s.cos(), s.sin() / s)
        } else {
            let (j0, j1) = bessel_j01(s);
            (0.0, j0, 2.0 * j1 / s)
        };
        while v + 1e-9 < nu {
            let next = 4.0 * (v + 1.0) * (v + 2.0) * (hi - lo) / (s * s);
            // shift by one order: hi is F_{v+1}
            lo = hi;
            hi = next;
            v += 1.0;
        }
        let f2 = 4.0 * (v + 1.0) * (v + 2.0) * (hi - lo) / (s * s);
        [lo, hi, f2]
    }

    /// `(A, A', A'', A'/s)`.
    pub fn eval(&self, s: f64) -> [f64; 4] {
        let nu = self.m as f64 / 2.0 - 1.0;
        let [f0, f1, f2] = self.bessel3(s);
        let q = -f1 / (2.0 * (nu + 1.0));
        let a2 = q + s * s * f2 / (4.0 * (nu + 1.0) * (nu + 2.0));
        [self.area * f0, self.area * q * s, self.area * a2, self.area * q]
    }
}

/// `J_0(s), J_1(s)` by the periodic trapezoid rule on Bessel's integral.
fn bessel_j01(s: f64) -> (f64, f64) {
    let count = s.ceil() as usize + 48;
    let h = 2.0 * PI / count as f64;
    let (mut j0, mut j1) = (0.0, 0.0);
    for k in 0..count {
        let th = k as f64 * h;
        let arg = s * th.sin();
        j0 += arg.cos();
        j1 += (th - arg).cos();
    }
    (j0 / count as f64, j1 / count as f64)
}

/// Radial quadrature settings for the λ-integral.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelQuadrature {
    pub rule: String,
    pub nodes_per_panel: usize,
    /// Panel width is `min(decay_width / κ, oscillation_width / |z|)`, `κ = n + |x|²/2`.
    pub decay_width: f64,
    pub oscillation_width: f64,
    /// Truncation tail bound relative to the integral at the origin.
    pub tail_tol: f64,
    pub max_panels: usize,
}

impl Default for KernelQuadrature {
    fn default() -> Self {
        KernelQuadrature {
            rule: "composite Gauss-Legendre".into(),
            nodes_per_panel: 16,
            decay_width: 4.0,
            oscillation_width: 6.0,
            tail_tol: 1e-17,
            max_panels: 40_000,
        }
    }
}

/// Value, gradient and Hessian in `(x, z)`.
#[derive(Clone, Debug)]
pub struct KernelJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct GroupKernel {
    pub n: usize,
    pub m: usize,
    pub quad: KernelQuadrature,
    sphere: SphereFourier,
    gl: (Vec<f64>, Vec<f64>),
    /// Unnormalized λ-integral at the origin, the reference for truncation.
    origin: f64,
}

impl GroupKernel {
    pub fn new(n: usize, m: usize) -> Self {
        let quad = KernelQuadrature::default();
        let gl = gauss_legendre(quad.nodes_per_panel);
        let sphere = SphereFourier::new(m);
        let mut origin = 0.0;
        let h = 0.5;
        for p in 0..(80.0 / (n as f64 * h)).ceil() as usize {
            for (g, w) in gl.0.iter().zip(&gl.1) {
                let rho = h * (p as f64 + 0.5 * (g + 1.0));
                origin += 0.5 * h * w * rho.powi(m as i32 - 1) * y_over_sinh(2.0 * rho).powi(n as i32 / 2);
            }
        }
        origin *= sphere.area;
        GroupKernel { n, m, quad, sphere, gl, origin }
    }

    pub fn hausdorff_dim(&self) -> usize {
        self.n + 2 * self.m
    }

    /// `K(t; x, z)`.
    pub fn value(&self, t: f64, x: &[f64], z: &[f64]) -> Result<f64> {
        Ok(self.jet(t, x, z, 0)?.value)
    }

    /// Value with first and second derivatives (`order ≤ 2`).
    pub fn jet(&self, t: f64, x: &[f64], z: &[f64], order: usize) -> Result<KernelJet> {
        if !(t > 0.0) {
            return Err(HtypeError::InvalidArgument(format!("kernel time must be positive, got {t}")));
        }
        if x.len() != self.n || z.len() != self.m {
            return Err(HtypeError::InvalidArgument("kernel point has wrong dimensions".into()));
        }
        let st = t.sqrt();
        let xs: Vec<f64> = x.iter().map(|v| v / st).collect();
        let zs: Vec<f64> = z.iter().map(|v| v / t).collect();
        let mut j = self.unit_jet(&xs, &zs, order)?;
        let q = self.hausdorff_dim() as f64;
        let s0 = t.powf(-q / 2.0);
        j.value *= s0;
        let d = self.n + self.m;
        let w = |k: usize| if k < self.n { st } else { t };
        for a in 0..j.grad.len() {
            j.grad[a] *= s0 / w(a);
        }
        if order >= 2 {
            for a in 0..d {
                for b in 0..d {
                    j.hess[(a, b)] *= s0 / (w(a) * w(b));
                }
            }
        }
        Ok(j)
    }

    fn unit_jet(&self, x: &[f64], z: &[f64], order: usize) -> Result<KernelJet> {
        let (n, m) = (self.n, self.m);
        let x2: f64 = x.iter().map(|v| v * v).sum();
        let r: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u: Vec<f64> = if r > 0.0 { z.iter().map(|v| v / r).collect() } else { vec![0.0; m] };
        let kappa = n as f64 + 0.5 * x2;
        let norm = (2.0 * PI).powi(-(m as i32)) * (4.0 * PI).powf(-(n as f64) / 2.0);
        let lam = self.truncation(kappa);
        let mut h = self.quad.decay_width / kappa;
        if r > 0.0 {
            h = h.min(self.quad.oscillation_width / r);
        }
        let panels = (lam / h).ceil() as usize;
        if panels > self.quad.max_panels {
            return Err(HtypeError::InvalidArgument(format!("kernel quadrature needs {panels} panels at |z|={r}")));
        }
        let h = lam / panels as f64;
        // accumulators: [value, gx-factor, hxx-factor(a²), hxx-factor(a), z-grad(q1), z-hess(A''-q1), mixed]
        let mut acc = [0.0f64; 7];
        for p in 0..panels {
            let lo = p as f64 * h;
            for (g, w) in self.gl.0.iter().zip(&self.gl.1) {
                let rho = lo + 0.5 * h * (g + 1.0);
                let wt = 0.5 * h * w;
                let f = self.integrand_parts(rho, x2, r, order);
                for k in 0..7 {
                    acc[k] += wt * f[k];
                }
            }
        }
        Ok(self.assemble(acc, norm, x, &u, r, order))
    }

    /// Smallest `Λ` whose tail bound for all accumulated pieces is below
    /// `tail_tol` times the origin integral. Uses `y/sinh y ≤ 2.5 y e^{-y}`
    /// for `y ≥ 1` and `a(ρ) ≥ ρ/2`, so pieces decay like `e^{-κρ}`.
    fn truncation(&self, kappa: f64) -> f64 {
        let (n, m) = (self.n as i32, self.m as i32);
        let env = |rho: f64| {
            let y = 2.0 * rho;
            self.sphere.area * rho.powi(m - 1) * (2.5 * y).powi(n / 2) * (1.0 + rho * rho).powi(2) * (-kappa * rho).exp()
        };
        let deg = (m - 1 + n / 2 + 4) as f64;
        let mut lam = (2.0 * deg / kappa).max(1.0);
        while env(lam) * 2.0 / kappa > self.quad.tail_tol * self.origin {
            lam += 0.5 / kappa;
        }
        lam
    }

    /// Radial integrand pieces at `ρ` (t = 1).
    fn integrand_parts(&self, rho: f64, x2: f64, r: f64, order: usize) -> [f64; 7] {
        let (n, m) = (self.n, self.m);
        let y = 2.0 * rho;
        let c = y_over_sinh(y).powi(n as i32 / 2) * rho.powi(m as i32 - 1);
        let a = y_coth(y) / 4.0;
        let e = (-a * x2).exp();
        let [s0, _s1, s2, sq] = self.sphere.eval(rho * r);
        let base = c * e;
        let mut out = [0.0; 7];
        out[0] = base * s0;
        if order >= 1 {
            out[1] = -2.0 * a * base * s0;
            out[4] = base * rho * rho * sq;
        }
        if order >= 2 {
            out[2] = 4.0 * a * a * base * s0;
            out[5] = base * rho * rho * (s2 - sq);
            out[6] = -2.0 * a * base * rho * rho * sq;
        }
        out
    }

    fn assemble(&self, acc: [f64; 7], norm: f64, x: &[f64], u: &[f64], r: f64, order: usize) -> KernelJet {
        let (n, m) = (self.n, self.m);
        let d = n + m;
        let value = norm * acc[0];
        let mut grad = vec![0.0; d];
        let mut hess = DMatrix::zeros(d, d);
        let z: Vec<f64> = u.iter().map(|v| v * r).collect();
        if order >= 1 {
            for a in 0..n {
                grad[a] = norm * acc[1] * x[a];
            }
            for i in 0..m {
                grad[n + i] = norm * acc[4] * z[i];
            }
        }
        if order >= 2 {
            for a in 0..n {
                for b in 0..n {
                    hess[(a, b)] = norm * (acc[2] * x[a] * x[b] + if a == b { acc[1] } else { 0.0 });
                }
                for i in 0..m {
                    let v = norm * acc[6] * x[a] * z[i];
                    hess[(a, n + i)] = v;
                    hess[(n + i, a)] = v;
                }
            }
            for i in 0..m {
                for j in 0..m {
                    hess[(n + i, n + j)] = norm * (acc[5] * u[i] * u[j] + if i == j { acc[4] } else { 0.0 });
                }
            }
        }
        KernelJet { value, grad, hess }
    }
}

/// Heisenberg-group kernel `(n, m) = (2, 1)` by the trapezoid rule in
/// `τ = 2λt`: `K = (16π²t²)^{-1} ∫ (τ/sinh τ) e^{-τ coth τ |x|²/(4t)} cos(τz/(2t)) dτ`.
pub fn heisenberg_kernel(t: f64, x: &[f64; 2], z: f64) -> f64 {
    let x2 = x[0] * x[0] + x[1] * x[1];
    let h = 0.02;
    let steps = (60.0 / h) as usize;
    let f = |tau: f64| {
        let a = tau.abs();
        let s = if a < 1e-8 { 1.0 } else { a / a.sinh() };
        let ct = if a < 1e-8 { 1.0 } else { a / a.tanh() };
        s * (-ct * x2 / (4.0 * t)).exp() * (tau * z / (2.0 * t)).cos()
    };
    let mut sum = 0.5 * f(0.0);
    for k in 1..=steps {
        sum += f(k as f64 * h);
    }
    2.0 * h * sum / (16.0 * PI * PI * t * t)
}

/// Group-law-free contract results.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelContracts {
    pub n: usize,
    pub m: usize,
    /// `max |K(4;2x,4z) - 4^{-Q/2} K(1;x,z)|` over the test grid.
    pub homogeneity: f64,
    /// `|∫K(1;·) - 1|`
    pub normalization: f64,
    /// `max |(∂_t - ΣX̂²)K|` over the test grid.
    pub pde_residual: f64,
    /// `max |K(t₁+t₂) - K(t₁)*K(t₂)|` on a coarse grid; `(2,1)` only.
    pub semigroup: Option<f64>,
    /// `max |K - K_Heisenberg| / K` for `(2,1)`.
    pub heisenberg_rel: Option<f64>,
}

fn test_points(n: usize, m: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let xs = [0.0, 0.4, 1.3];
    let zs = [0.0, 0.35, 1.1, 2.5];
    let mut out = Vec::new();
    for (k, xr) in xs.iter().enumerate() {
        for (l, zr) in zs.iter().enumerate() {
            let x: Vec<f64> = (0..n).map(|a| xr * ((a + k + 1) as f64).cos()).collect();
            let z: Vec<f64> = (0..m).map(|i| zr * ((i + 2 * l + 1) as f64).sin()).collect();
            out.push((x, z));
        }
    }
    out
}

impl GroupKernel {
    /// `∫ K(1; ·) dx dz` by radial reduction and 2-D Gauss–Legendre.
    pub fn total_mass(&self) -> Result<f64> {
        let (n, m) = (self.n, self.m);
        let (gx, gw) = gauss_legendre(16);
        let rr = 10.0 + n as f64;
        // the z-tail widens with n + m; 40 is enough up to (4, 3)
        let zz = (5.0 * (n + m) as f64).max(40.0);
        let (pr, pz) = ((rr / 2.0).ceil() as usize, (zz / 2.0).ceil() as usize);
        let mut sum = 0.0;
        for a in 0..pr {
            for (g1, w1) in gx.iter().zip(&gw) {
                let r = (a as f64 + 0.5 * (g1 + 1.0)) * rr / pr as f64;
                let wr = 0.5 * w1 * rr / pr as f64;
                let mut x = vec![0.0; n];
                x[0] = r;
                for b in 0..pz {
                    for (g2, w2) in gx.iter().zip(&gw) {
                        let zeta = (b as f64 + 0.5 * (g2 + 1.0)) * zz / pz as f64;
                        let wz = 0.5 * w2 * zz / pz as f64;
                        let mut z = vec![0.0; m];
                        z[0] = zeta;
                        sum += wr * wz * r.powi(n as i32 - 1) * zeta.powi(m as i32 - 1) * self.value(1.0, &x, &z)?;
                    }
                }
            }
        }
        let sz = if m == 1 { 2.0 } else { sphere_area(m) };
        Ok(sum * sphere_area(n) * sz)
    }

    /// `(∂_t - ΣX̂_α²) K` at one point, with `∂_t` from the scaling identity
    /// and `X̂` built from `j[i][(α, β)] = J^i_{αβ}`.
    pub fn heat_residual(&self, j: &[DMatrix<f64>], t: f64, x: &[f64], z: &[f64]) -> Result<f64> {
        let (n, m) = (self.n, self.m);
        let k = self.jet(t, x, z, 2)?;
        let q = self.hausdorff_dim() as f64;
        let mut euler = q / 2.0 * k.value;
        for a in 0..n {
            euler += 0.5 * x[a] * k.grad[a];
        }
        for i in 0..m {
            euler += z[i] * k.grad[n + i];
        }
        let dt = -euler / t;
        let mut lap = 0.0;
        for al in 0..n {
            // b^i = J^i_{αβ} x^β
            let b: Vec<f64> = (0..m).map(|i| (0..n).map(|be| j[i][(al, be)] * x[be]).sum()).collect();
            lap += k.hess[(al, al)];
            for i in 0..m {
                lap += 2.0 * b[i] * k.hess[(al, n + i)];
                for l in 0..m {
                    lap += b[i] * b[l] * k.hess[(n + i, n + l)];
                }
                lap += j[i][(al, al)] * k.grad[n + i];
            }
        }
        Ok(dt - lap)
    }

    /// All contracts; `j` are the group's `J^i` matrices and `mul` its law.
    pub fn contracts(&self, j: &[DMatrix<f64>], mul: &dyn Fn(&[f64], &[f64]) -> Vec<f64>) -> Result<KernelContracts> {
        let (n, m) = (self.n, self.m);
        let q = self.hausdorff_dim() as i32;
        let mut homog = 0.0f64;
        let mut pde = 0.0f64;
        let mut heis: Option<f64> = None;
        for (x, z) in test_points(n, m) {
            let k1 = self.value(1.0, &x, &z)?;
            let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            let z4: Vec<f64> = z.iter().map(|v| 4.0 * v).collect();
            let k4 = self.value(4.0, &x2, &z4)?;
            homog = homog.max((k4 - 2f64.powi(-q) * k1).abs());
            for t in [0.5, 1.0, 2.0] {
                pde = pde.max(self.heat_residual(j, t, &x, &z)?.abs());
            }
            if n == 2 && m == 1 {
                for t in [0.5, 1.0, 2.0] {
                    let a = self.value(t, &x, &z)?;
                    let b = heisenberg_kernel(t, &[x[0], x[1]], z[0]);
                    heis = Some(heis.unwrap_or(0.0).max((a - b).abs() / b.abs()));
                }
            }
        }
        let normalization = (self.total_mass()? - 1.0).abs();
        let semigroup = if n == 2 && m == 1 { Some(self.semigroup_residual(mul)?) } else { None };
        Ok(KernelContracts { n, m, homogeneity: homog, normalization, pde_residual: pde, semigroup, heisenberg_rel: heis })
    }

    /// `max_w |K(1; w) - ∫ K(½; v) K(½; v⁻¹w) dv|` on a few `w` (3-D product rule).
    pub fn semigroup_residual(&self, mul: &dyn Fn(&[f64], &[f64]) -> Vec<f64>) -> Result<f64> {
        let (n, m) = (self.n, self.m);
        if n + m != 3 {
            return Err(HtypeError::InvalidArgument("semigroup check is implemented for (2,1)".into()));
        }
        let panel = |count: usize, half: f64| {
            let (mut xs, mut ws) = (Vec::new(), Vec::new());
            let h = 2.0 * half / count as f64;
            for p in 0..count {
                let (x, w) = crate::quad::gauss_legendre_on(16, -half + p as f64 * h, -half + (p + 1) as f64 * h);
                xs.extend(x);
                ws.extend(w);
            }
            (xs, ws)
        };
        let (gx, wx) = panel(3, 8.0);
        let (gz, wz) = panel(4, 10.0);
        let mut grid = Vec::with_capacity(gx.len() * gx.len() * gz.len());
        for (a, wa) in gx.iter().zip(&wx) {
            for (b, wb) in gx.iter().zip(&wx) {
                for (c, wc) in gz.iter().zip(&wz) {
                    let v = [*a, *b, *c];
                    grid.push((v, wa * wb * wc * self.value(0.5, &v[..2], &v[2..])?));
                }
            }
        }
        let mut worst = 0.0f64;
        for w in [[0.0, 0.0, 0.0], [0.5, -0.2, 0.3]] {
            let mut sum = 0.0;
            for (v, wk) in &grid {
                let u = mul(&[-v[0], -v[1], -v[2]], &w);
                sum += wk * self.value(0.5, &u[..2], &u[2..])?;
            }
            worst = worst.max((sum - self.value(1.0, &w[..2], &w[2..])?).abs());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_origin_value() {
        // ∫ τ/sinh τ dτ = π²/2
        assert!((heisenberg_kernel(1.0, &[0.0, 0.0], 0.0) - 1.0 / 32.0).abs() < 1e-13);
        let k = GroupKernel::new(2, 1);
        assert!((k.value(1.0, &[0.0, 0.0], &[0.0]).unwrap() - 1.0 / 32.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_fourier_matches_angular_quadrature() {
        for m in 2..=9usize {
            let sf = SphereFourier::new(m);
            let (x, w) = gauss_legendre(200);
            let outer = if m == 2 { 2.0 } else { sphere_area(m - 1) };
            for s in [0.0, 0.3, 2.0, 7.9, 8.1, 13.0, 40.0] {
                let (mut a0, mut a1, mut a2) = (0.0, 0.0, 0.0);
                for (u, wu) in x.iter().zip(&w) {
                    let phi = 0.5 * PI * (u + 1.0);
                    let wt = 0.5 * PI * wu * phi.sin().powi(m as i32 - 2) * outer;
                    let c = phi.cos();
                    a0 += wt * (s * c).cos();
                    a1 -= wt * c * (s * c).sin();
                    a2 -= wt * c * c * (s * c).cos();
                }
                let e = sf.eval(s);
                assert!((e[0] - a0).abs() < 1e-11, "m={m} s={s}: {} vs {a0}", e[0]);
                assert!((e[1] - a1).abs() < 1e-11, "m={m} s={s}");
                assert!((e[2] - a2).abs() < 1e-11, "m={m} s={s}");
            }
        }
        let sf = SphereFourier::new(1);
        assert!((sf.eval(0.7)[0] - 2.0 * 0.7f64.cos()).abs() < 1e-15);
        // A_2(s) = 2π J_0(s); J_0(1) = 0.7651976865579666
        assert!((SphereFourier::new(2).eval(1.0)[0] - 2.0 * PI * 0.7651976865579666).abs() < 1e-12);
        assert!((bessel_j01(20.0).0 - 0.16702466434058316).abs() < 1e-14);
    }

    #[test]
    fn homogeneity_is_exact() {
        let k = GroupKernel::new(4, 3);
        let x = [0.3, -0.1, 0.2, 0.5];
        let z = [0.2, 0.4, -0.3];
        let a = k.value(1.0, &x, &z).unwrap();
        let b = k.value(4.0, &x.map(|v| 2.0 * v), &z.map(|v| 4.0 * v)).unwrap();
        assert_eq!(b, 2f64.powi(-10) * a);
    }
}
