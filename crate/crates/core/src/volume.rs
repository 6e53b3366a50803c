//! Popp measure and small Korányi balls in privileged coordinates.
//!
//! Ball volumes are computed in gauge-polar form: for `u = δ_s ω` with `ω`
//! on the unit gauge sphere, `du = s^{Q-1} ds dσ(ω)`, so
//! `r^{-Q} vol(B(q, r)) = Q·|B̂| · E_ω[r^{-Q} ∫_0^r t^{Q-1} ρ(δ_t ω) dt]`.
//! One ray integration per direction gives `ρ(δ_t ω)` for every radius; the
//! radial integral is done by Gauss–Legendre on dense output and only the
//! direction is sampled.

use crate::connection::PointGeometry;
use crate::error::{HtypeError, Result};
use crate::models::FoliationModel;
use crate::parallel;
use crate::privileged::{popp_factor, Carry, PrivilegedChart};
use crate::quad;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

/// Radial Gauss–Legendre nodes per radius interval.
const RADIAL_NODES: usize = 12;
/// Number of random strata; fixed so results do not depend on worker count.
pub const STRATA: usize = 64;

pub fn hausdorff_dim(n: usize, m: usize) -> usize {
    n + 2 * m
}

/// `(|x|⁴ + |z|²)^{1/4}`.
pub fn gauge(n: usize, y: &[f64]) -> f64 {
    let x2: f64 = y[..n].iter().map(|v| v * v).sum();
    let z2: f64 = y[n..].iter().map(|v| v * v).sum();
    (x2 * x2 + z2).powf(0.25)
}

/// Popp density against Lebesgue measure in the chart's coordinates.
pub fn popp_density(chart: &PrivilegedChart, y: &[f64]) -> Result<f64> {
    chart.popp_density(y)
}

/// Constants of the volume expansion of the tangent group.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoreticalConstants {
    pub n: usize,
    pub m: usize,
    pub q: usize,
    /// Lebesgue volume of the unit Korányi ball.
    pub unit_ball_volume: f64,
    /// `∫_{B̂(0,1)} (x¹)²`.
    pub second_moment: f64,
    /// `(4n)^{-m/2}`
    pub density_factor: f64,
    pub a: f64,
    pub b: f64,
    /// Same two integrals by 1-D Gauss–Legendre.
    pub unit_ball_volume_quad: f64,
    pub second_moment_quad: f64,
}

fn unit_ball(m: usize) -> f64 {
    std::f64::consts::PI.powf(m as f64 / 2.0) / gamma(m as f64 / 2.0 + 1.0)
}

fn sphere_area(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

/// `∫_0^1 ρ^{k} (1-ρ⁴)^{m/2} dρ` with `ρ = 1 - s²` to remove the endpoint singularity.
fn radial_quad(k: usize, m: usize) -> f64 {
    quad::integrate(64, 0.0, 1.0, |s| {
        let r = 1.0 - s * s;
        let rest = ((1.0 + r) * (1.0 + r * r)).powf(m as f64 / 2.0);
        r.powi(k as i32) * s.powi(m as i32) * rest * 2.0 * s
    })
}

pub fn theoretical_constants(n: usize, m: usize) -> TheoreticalConstants {
    let (nf, mf) = (n as f64, m as f64);
    let pre = unit_ball(m) * sphere_area(n);
    let vol = pre * beta(nf / 4.0, mf / 2.0 + 1.0) / 4.0;
    let mom = pre * beta((nf + 2.0) / 4.0, mf / 2.0 + 1.0) / (4.0 * nf);
    let factor = (4.0 * nf).powf(-mf / 2.0);
    TheoreticalConstants {
        n,
        m,
        q: hausdorff_dim(n, m),
        unit_ball_volume: vol,
        second_moment: mom,
        density_factor: factor,
        a: factor * vol,
        b: factor * mom / 6.0,
        unit_ball_volume_quad: pre * radial_quad(n - 1, m),
        second_moment_quad: pre * radial_quad(n + 1, m) / nf,
    }
}

/// Uniform point of the unit gauge sphere under the cone measure.
fn sample_direction<R: Rng>(rng: &mut R, n: usize, m: usize) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..n + m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let x2: f64 = u[..n].iter().map(|v| v * v).sum();
        let z2: f64 = u[n..].iter().map(|v| v * v).sum();
        let g4 = x2 * x2 + z2;
        if g4 > 1.0 || g4 < 1e-12 {
            continue;
        }
        let g = g4.powf(0.25);
        return u.iter().enumerate().map(|(k, v)| if k < n { v / g } else { v / (g * g) }).collect();
    }
}

/// `r^{-Q}` times the Popp volume of the cone over `ω`, per radius, divided by `Q|B̂|`.
fn direction_profile(chart: &PrivilegedChart, omega: &[f64], radii: &[f64]) -> Result<Vec<f64>> {
    let d = chart.dim();
    let (n, m) = (chart.model.n, chart.model.m);
    let q = hausdorff_dim(n, m) as i32;
    let rmax = radii[radii.len() - 1];
    let (sol, off) = chart.integrate_dense(omega, rmax).map_err(|e| match e {
        HtypeError::OutOfDomain(_) => {
            let exit = exit_time(chart, omega, rmax);
            HtypeError::OutOfDomain(format!("Korányi ball leaves the chart domain; max admissible r ≈ {exit:.4}"))
        }
        other => other,
    })?;
    let comps: Vec<usize> = (off..off + d * d).collect();
    let (gx, gw) = quad::gauss_legendre(RADIAL_NODES);
    let mut times = Vec::with_capacity(radii.len() * RADIAL_NODES);
    let mut weights = Vec::with_capacity(times.capacity());
    let mut lo = 0.0;
    for &r in radii {
        let h = 0.5 * (r - lo);
        for (x, w) in gx.iter().zip(&gw) {
            times.push(lo + h * (x + 1.0));
            weights.push(w * h);
        }
        lo = r;
    }
    let mut vals = vec![0.0; times.len()];
    sol.eval_sorted(&times, &comps, |idx, xi| {
        let det = DMatrix::from_column_slice(d, d, xi).determinant().abs();
        vals[idx] = det / times[idx];
    });
    let pf = popp_factor(n, m);
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        for j in 0..RADIAL_NODES {
            acc += weights[k * RADIAL_NODES + j] * vals[k * RADIAL_NODES + j];
        }
        out.push(pf * acc / r.powi(q));
    }
    Ok(out)
}

/// Time at which the ray through `omega` leaves the chart domain (bisection).
fn exit_time(chart: &PrivilegedChart, omega: &[f64], hi: f64) -> f64 {
    let carry = Carry { positions: true, variations: false, transport: false, connection: false };
    let (mut a, mut b) = (0.0, hi);
    for _ in 0..30 {
        let mid = 0.5 * (a + b);
        if chart.integrate(omega, &[mid], carry).is_ok() {
            a = mid;
        } else {
            b = mid;
        }
    }
    a
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeFit {
    /// Coefficients of `r^{-Q} vol` on `1, r², r³`.
    pub r0: Estimate,
    pub r2: Estimate,
    pub r3: Estimate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeReport {
    pub model: String,
    pub base_point: Vec<f64>,
    pub q: usize,
    pub radii: Vec<f64>,
    pub volumes: Vec<Estimate>,
    /// `r^{-Q} vol` per radius.
    pub normalized: Vec<Estimate>,
    pub fit: VolumeFit,
    pub kappa_h: f64,
    pub theoretical: TheoreticalConstants,
    /// `-b κ_H(q)`
    pub expected_r2: f64,
    pub r0_rel_error: f64,
    pub r2_rel_error: f64,
    pub budget: u64,
    pub directions: u64,
    pub radial_nodes: usize,
    pub strata: usize,
    pub seed: u64,
    /// False when the r² standard error exceeds 1% of its expected value.
    pub budget_sufficient: bool,
    /// Budget that would bring the r² standard error to 1% of its expected value.
    pub required_budget: f64,
}

/// Samples of the per-direction profile, with design `1, r², r³` fitted per direction.
struct Accum {
    count: u64,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl Accum {
    fn new(k: usize) -> Self {
        Accum { count: 0, sum: vec![0.0; k], sumsq: vec![0.0; k] }
    }
    fn add(&mut self, v: &[f64]) {
        self.count += 1;
        for (k, x) in v.iter().enumerate() {
            self.sum[k] += x;
            self.sumsq[k] += x * x;
        }
    }
    fn merge(&mut self, o: &Accum) {
        self.count += o.count;
        for k in 0..self.sum.len() {
            self.sum[k] += o.sum[k];
            self.sumsq[k] += o.sumsq[k];
        }
    }
    fn estimate(&self, k: usize, scale: f64) -> Estimate {
        let n = self.count as f64;
        let mean = self.sum[k] / n;
        let var = ((self.sumsq[k] / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
        Estimate { value: scale * mean, stderr: scale * (var / n).sqrt() }
    }
}

/// Least-squares map from per-radius values to coefficients on `1, r², r³`.
fn fit_matrix(radii: &[f64]) -> Result<DMatrix<f64>> {
    let a = DMatrix::from_fn(radii.len(), 3, |i, j| [1.0, radii[i].powi(2), radii[i].powi(3)][j]);
    let ata = a.transpose() * &a;
    let inv = ata.try_inverse().ok_or_else(|| HtypeError::RankDeficient("radius grid".into()))?;
    Ok(inv * a.transpose())
}

/// Monte Carlo ball volumes on a radius grid at `q` in the chart `chart`.
pub fn expansion_fit_in_chart(chart: &PrivilegedChart, radii: &[f64], budget: u64, seed: u64) -> Result<VolumeReport> {
    let (n, m) = (chart.model.n, chart.model.m);
    if radii.len() < 4 {
        return Err(HtypeError::InvalidArgument("expansion fit needs at least 4 radii".into()));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if radii[0] <= 0.0 {
        return Err(HtypeError::InvalidArgument("radii must be positive".into()));
    }
    let theo = theoretical_constants(n, m);
    let q = theo.q;
    let per_dir = (radii.len() * RADIAL_NODES) as u64;
    let directions = (budget / per_dir).max(2 * STRATA as u64);
    let fitm = fit_matrix(&radii)?;
    let k = radii.len();
    let scale = q as f64 * theo.unit_ball_volume;
    let results = parallel::map_strata(STRATA, parallel::threads(), |s| -> Result<Accum> {
        let mut rng = parallel::stratum_rng(seed, s as u64);
        let count = directions / STRATA as u64 + u64::from((s as u64) < directions % STRATA as u64);
        let mut acc = Accum::new(k + 3);
        for _ in 0..count {
            let omega = sample_direction(&mut rng, n, m);
            let mut prof = direction_profile(chart, &omega, &radii)?;
            let c = &fitm * DVector::from_column_slice(&prof);
            prof.extend(c.iter());
            acc.add(&prof);
        }
        Ok(acc)
    });
    let mut acc = Accum::new(k + 3);
    for r in results {
        acc.merge(&r?);
    }
    let normalized: Vec<Estimate> = (0..k).map(|i| acc.estimate(i, scale)).collect();
    let volumes = normalized
        .iter()
        .zip(&radii)
        .map(|(e, r)| Estimate { value: e.value * r.powi(q as i32), stderr: e.stderr * r.powi(q as i32) })
        .collect();
    let fit = VolumeFit { r0: acc.estimate(k, scale), r2: acc.estimate(k + 1, scale), r3: acc.estimate(k + 2, scale) };
    let kappa_h = PointGeometry::at(&chart.model, &chart.q)?.kappa_h();
    let expected_r2 = -theo.b * kappa_h;
    let r0_rel_error = (fit.r0.value - theo.a).abs() / theo.a;
    let r2_rel_error = if expected_r2 != 0.0 { (fit.r2.value - expected_r2).abs() / expected_r2.abs() } else { fit.r2.value.abs() };
    let target = 0.01 * expected_r2.abs().max(theo.b * 1e-3);
    let required_budget = budget as f64 * (fit.r2.stderr / target).powi(2);
    Ok(VolumeReport {
        model: chart.model.label.clone(),
        base_point: chart.q.clone(),
        q,
        radii,
        volumes,
        normalized,
        budget_sufficient: fit.r2.stderr <= target,
        required_budget,
        fit,
        kappa_h,
        theoretical: theo,
        expected_r2,
        r0_rel_error,
        r2_rel_error,
        budget,
        directions,
        radial_nodes: RADIAL_NODES,
        strata: STRATA,
        seed,
    })
}

/// Expansion fit in the standard privileged chart at `q`.
pub fn expansion_fit(model: &FoliationModel, q: &[f64], radii: &[f64], budget: u64, seed: u64) -> Result<VolumeReport> {
    let chart = PrivilegedChart::new(model, q, 1e-10)?;
    expansion_fit_in_chart(&chart, radii, budget, seed)
}

/// Popp volume of the Korányi ball of radius `r` at `q`.
pub fn ball_volume(model: &FoliationModel, q: &[f64], r: f64, budget: u64, seed: u64) -> Result<Estimate> {
    if r <= 0.0 {
        return Err(HtypeError::InvalidArgument("radius must be positive".into()));
    }
    let chart = PrivilegedChart::new(model, q, 1e-10)?;
    let theo = theoretical_constants(model.n, model.m);
    let scale = theo.q as f64 * theo.unit_ball_volume * r.powi(theo.q as i32);
    let directions = (budget / RADIAL_NODES as u64).max(2 * STRATA as u64);
    let results = parallel::map_strata(STRATA, parallel::threads(), |s| -> Result<Accum> {
        let mut rng = parallel::stratum_rng(seed, s as u64);
        let count = directions / STRATA as u64 + u64::from((s as u64) < directions % STRATA as u64);
        let mut acc = Accum::new(1);
        for _ in 0..count {
            let omega = sample_direction(&mut rng, model.n, model.m);
            acc.add(&direction_profile(&chart, &omega, &[r])?);
        }
        Ok(acc)
    });
    let mut acc = Accum::new(1);
    for r in results {
        acc.merge(&r?);
    }
    Ok(acc.estimate(0, scale))
}

/// Hit-or-miss estimates of `∫_{B̂(0,1)} y^a y^b` over the full coordinate
/// box, returned as `(value, stderr)` matrices.
pub fn unit_ball_moments(n: usize, m: usize, samples: u64, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = n + m;
    let per = samples / STRATA as u64;
    let parts = parallel::map_strata(STRATA, parallel::threads(), |s| {
        let mut rng = parallel::stratum_rng(seed, s as u64);
        let mut acc = Accum::new(d * d);
        let mut buf = vec![0.0; d * d];
        for _ in 0..per {
            let u: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let inside = gauge(n, &u) <= 1.0;
            for a in 0..d {
                for b in 0..d {
                    buf[a * d + b] = if inside { u[a] * u[b] } else { 0.0 };
                }
            }
            acc.add(&buf);
        }
        acc
    });
    let mut acc = Accum::new(d * d);
    for p in &parts {
        acc.merge(p);
    }
    let boxv = 2f64.powi(d as i32);
    let mut val = DMatrix::zeros(d, d);
    let mut err = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let e = acc.estimate(a * d + b, boxv);
            val[(a, b)] = e.value;
            err[(a, b)] = e.stderr;
        }
    }
    (val, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_rep;
    use crate::models::{hopf_s3, htype_group};

    #[test]
    fn heisenberg_constants() {
        let c = theoretical_constants(2, 1);
        let pi = std::f64::consts::PI;
        assert!((c.a - pi * pi / (4.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!((c.b - pi / (36.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!((c.unit_ball_volume - c.unit_ball_volume_quad).abs() < 1e-12);
        assert!((c.second_moment - pi / 3.0).abs() < 1e-12);
        assert!((c.second_moment - c.second_moment_quad).abs() < 1e-12);
        let c = theoretical_constants(4, 3);
        assert_eq!(c.q, 10);
        assert!((c.unit_ball_volume - c.unit_ball_volume_quad).abs() < 1e-11);
        assert!((c.second_moment - c.second_moment_quad).abs() < 1e-11);
    }

    #[test]
    fn group_volume_is_exact() {
        let model = htype_group(build_rep(2, 1).unwrap());
        let c = theoretical_constants(2, 1);
        let v1 = ball_volume(&model, &[0.0; 3], 0.3, 20_000, 1).unwrap();
        let v2 = ball_volume(&model, &[0.0; 3], 0.6, 20_000, 1).unwrap();
        assert!((v1.value - c.a * 0.3f64.powi(4)).abs() < 1e-9);
        assert!((v2.value / v1.value - 16.0).abs() < 1e-8);
        let rho = PrivilegedChart::new(&model, &[0.0; 3], 1e-12).unwrap().popp_density(&[0.3, 0.1, -0.2]).unwrap();
        assert!((rho - 0.5 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hopf_volume_below_flat() {
        let model = hopf_s3(1.0).unwrap();
        let c = theoretical_constants(2, 1);
        let v = ball_volume(&model, &[0.0; 3], 0.3, 50_000, 2).unwrap();
        assert!(v.value + 3.0 * v.stderr < c.a * 0.3f64.powi(4));
    }

    #[test]
    fn odd_moments_vanish() {
        let (val, err) = unit_ball_moments(2, 1, 200_000, 5);
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert!(val[(a, b)].abs() <= 3.0 * err[(a, b)] + 1e-12);
                }
            }
        }
        assert!((val[(0, 0)] - std::f64::consts::PI / 3.0).abs() < 4.0 * err[(0, 0)]);
    }
}
