//! Bott connection, torsion, curvature and the scalar invariants.
//!
//! Array conventions (all frame components, 0-based, horizontal first):
//! - `gamma[c][a][b] = Γ^b_{ca} = ω^b_a(Y_c)`,
//! - `r[a][b][c][d] = R^d_{abc} = ν^d(R(Y_a, Y_b) Y_c)`,
//! - `dj[c][i][a][b] = (∇_{Y_c} J)^i_{ab}` with `J^i_{ab} = -c^{n+i}_{ab}`.

use crate::error::Result;
use crate::models::{FoliationModel, StructureData};
use crate::tensor::{T3, T4};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Connection coefficients with their frame derivatives.
#[derive(Clone, Debug)]
pub struct ConnectionCoeffs {
    pub n: usize,
    pub m: usize,
    pub gamma: T3,
    /// `dgamma[d][c][a][b] = Y_d(Γ^b_{ca})`.
    pub dgamma: T4,
}

/// Closed-form Bott connection from structure functions `c` (and the same
/// linear map applied to their derivatives).
pub fn bott_from_structure(c: &T3, n: usize, m: usize) -> T3 {
    let d = n + m;
    let mut g = T3::zeros(d);
    let hz = 0..n;
    let vt = n..d;
    for x in hz.clone() {
        for a in hz.clone() {
            for b in hz.clone() {
                g.set(x, a, b, 0.5 * (c.get(x, a, b) - c.get(a, b, x) + c.get(b, x, a)));
            }
        }
    }
    for i in vt.clone() {
        for a in hz.clone() {
            for b in hz.clone() {
                g.set(i, a, b, c.get(i, a, b));
            }
        }
    }
    for a in hz.clone() {
        for i in vt.clone() {
            for j in vt.clone() {
                g.set(a, i, j, c.get(a, i, j));
            }
        }
    }
    for k in vt.clone() {
        for i in vt.clone() {
            for j in vt.clone() {
                g.set(k, i, j, 0.5 * (c.get(k, i, j) - c.get(i, j, k) + c.get(j, k, i)));
            }
        }
    }
    g
}

pub fn solve_bott_from(s: &StructureData, n: usize, m: usize) -> ConnectionCoeffs {
    let d = n + m;
    let gamma = bott_from_structure(&s.c, n, m);
    let mut dgamma = T4::zeros(d);
    for e in 0..d {
        // slice dc[e] as a structure table
        let mut ce = T3::zeros(d);
        ce.data.copy_from_slice(&s.dc.data[e * d * d * d..(e + 1) * d * d * d]);
        let ge = bott_from_structure(&ce, n, m);
        dgamma.data[e * d * d * d..(e + 1) * d * d * d].copy_from_slice(&ge.data);
    }
    ConnectionCoeffs { n, m, gamma, dgamma }
}

pub fn solve_bott(model: &FoliationModel, p: &[f64]) -> Result<ConnectionCoeffs> {
    let s = model.structure(p, false)?;
    Ok(solve_bott_from(&s, model.n, model.m))
}

/// Torsion components `t[a][b][e] = T^e_{ab}`.
pub fn torsion(gamma: &T3, c: &T3) -> T3 {
    let d = c.d;
    let mut t = T3::zeros(d);
    for a in 0..d {
        for b in 0..d {
            for e in 0..d {
                t.set(a, b, e, gamma.get(a, b, e) - gamma.get(b, a, e) - c.get(a, b, e));
            }
        }
    }
    t
}

/// Max residuals of the connection axioms for an arbitrary coefficient array.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AxiomResiduals {
    pub metricity: f64,
    pub compatibility: f64,
    pub torsion_hh_horizontal: f64,
    pub torsion_hv: f64,
    pub torsion_vv: f64,
}

impl AxiomResiduals {
    pub fn max(&self) -> f64 {
        self.metricity
            .max(self.compatibility)
            .max(self.torsion_hh_horizontal)
            .max(self.torsion_hv)
            .max(self.torsion_vv)
    }
}

pub fn axiom_residuals(gamma: &T3, c: &T3, n: usize) -> AxiomResiduals {
    let d = c.d;
    let is_h = |a: usize| a < n;
    let t = torsion(gamma, c);
    let mut r = AxiomResiduals { metricity: 0.0, compatibility: 0.0, torsion_hh_horizontal: 0.0, torsion_hv: 0.0, torsion_vv: 0.0 };
    for x in 0..d {
        for a in 0..d {
            for b in 0..d {
                r.metricity = r.metricity.max((gamma.get(x, a, b) + gamma.get(x, b, a)).abs());
                if is_h(a) != is_h(b) {
                    r.compatibility = r.compatibility.max(gamma.get(x, a, b).abs());
                }
            }
        }
    }
    for a in 0..d {
        for b in 0..d {
            for e in 0..d {
                let v = t.get(a, b, e).abs();
                match (is_h(a), is_h(b)) {
                    (true, true) if is_h(e) => r.torsion_hh_horizontal = r.torsion_hh_horizontal.max(v),
                    (true, true) => {}
                    (false, false) => r.torsion_vv = r.torsion_vv.max(v),
                    _ => r.torsion_hv = r.torsion_hv.max(v),
                }
            }
        }
    }
    r
}

/// Perturbation test: every single-entry and skew-pair perturbation of size
/// `eps` raises some axiom residual above `eps/2`. Returns the smallest
/// residual seen over all perturbations.
pub fn uniqueness_margin(gamma: &T3, c: &T3, n: usize, eps: f64) -> f64 {
    let d = c.d;
    let mut worst = f64::INFINITY;
    for x in 0..d {
        for a in 0..d {
            for b in 0..d {
                let mut g = gamma.clone();
                g.add(x, a, b, eps);
                worst = worst.min(axiom_residuals(&g, c, n).max());
                if a != b {
                    let mut g = gamma.clone();
                    g.add(x, a, b, eps);
                    g.add(x, b, a, -eps);
                    worst = worst.min(axiom_residuals(&g, c, n).max());
                }
            }
        }
    }
    worst
}

/// Curvature `R^d_{abc} = Y_a(Γ^d_{bc}) − Y_b(Γ^d_{ac}) + Γ^e_{bc}Γ^d_{ae} − Γ^e_{ac}Γ^d_{be} − c^e_{ab}Γ^d_{ec}`.
pub fn curvature_from(conn: &ConnectionCoeffs, c: &T3) -> T4 {
    let d = c.d;
    let g = &conn.gamma;
    let dg = &conn.dgamma;
    let mut r = T4::zeros(d);
    for a in 0..d {
        for b in 0..d {
            for cc in 0..d {
                for dd in 0..d {
                    let mut v = dg.get(a, b, cc, dd) - dg.get(b, a, cc, dd);
                    for e in 0..d {
                        v += g.get(b, cc, e) * g.get(a, e, dd) - g.get(a, cc, e) * g.get(b, e, dd)
                            - c.get(a, b, e) * g.get(e, cc, dd);
                    }
                    r.set(a, b, cc, dd, v);
                }
            }
        }
    }
    r
}

/// `J^i_{ab}` as an array `[i][a][b]`.
pub fn j_components(c: &T3, n: usize, m: usize) -> Vec<f64> {
    let mut j = vec![0.0; m * n * n];
    for i in 0..m {
        for a in 0..n {
            for b in 0..n {
                j[(i * n + a) * n + b] = -c.get(a, b, n + i);
            }
        }
    }
    j
}

/// `(∇_{Y_c} J)^i_{ab}` for every frame direction `c`, stored `[c][i][a][b]`.
pub fn nabla_j_from(s: &StructureData, conn: &ConnectionCoeffs) -> Vec<f64> {
    let (n, m) = (conn.n, conn.m);
    let d = n + m;
    let g = &conn.gamma;
    let j = j_components(&s.c, n, m);
    let jc = |i: usize, a: usize, b: usize| j[(i * n + a) * n + b];
    let mut out = vec![0.0; d * m * n * n];
    for cc in 0..d {
        for i in 0..m {
            for a in 0..n {
                for b in 0..n {
                    let mut v = -s.dc.get(cc, a, b, n + i);
                    for jj in 0..m {
                        v -= g.get(cc, n + i, n + jj) * jc(jj, a, b);
                    }
                    for e in 0..n {
                        v -= g.get(cc, a, e) * jc(i, e, b) + g.get(cc, b, e) * jc(i, a, e);
                    }
                    out[((cc * m + i) * n + a) * n + b] = v;
                }
            }
        }
    }
    out
}

/// Everything computed at one point.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub n: usize,
    pub m: usize,
    pub structure: StructureData,
    pub conn: ConnectionCoeffs,
    pub curvature: T4,
    pub torsion: T3,
    /// `[c][i][a][b]`
    pub nabla_j: Vec<f64>,
}

impl PointGeometry {
    pub fn at(model: &FoliationModel, p: &[f64]) -> Result<Self> {
        let s = model.structure(p, false)?;
        Ok(Self::from_structure(s, model.n, model.m))
    }

    pub fn from_structure(s: StructureData, n: usize, m: usize) -> Self {
        let conn = solve_bott_from(&s, n, m);
        let curvature = curvature_from(&conn, &s.c);
        let torsion = torsion(&conn.gamma, &s.c);
        let nabla_j = nabla_j_from(&s, &conn);
        PointGeometry { n, m, structure: s, conn, curvature, torsion, nabla_j }
    }

    pub fn d(&self) -> usize {
        self.n + self.m
    }

    #[inline]
    pub fn j(&self, i: usize, a: usize, b: usize) -> f64 {
        -self.structure.c.get(a, b, self.n + i)
    }

    #[inline]
    pub fn dj(&self, c: usize, i: usize, a: usize, b: usize) -> f64 {
        let (n, m) = (self.n, self.m);
        self.nabla_j[((c * m + i) * n + a) * n + b]
    }

    /// Matrix of `J_{Z_i}` acting on horizontal components: `[b][a] = J^i_{ab}`.
    pub fn j_matrix(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |b, a| self.j(i, a, b))
    }

    /// Matrix of `(∇_{Y_c} J)_{Z_i}`.
    pub fn dj_matrix(&self, c: usize, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |b, a| self.dj(c, i, a, b))
    }

    pub fn kappa_h(&self) -> f64 {
        let mut k = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                k += self.curvature.get(a, b, b, a);
            }
        }
        k
    }

    /// `M(Z_i, Z_j) = J_{Z_j} J_{Z_i} (∇_{Z_i} J)_{Z_j}`.
    pub fn m_operator(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.j_matrix(j) * self.j_matrix(i) * self.dj_matrix(self.n + i, j)
    }

    /// `M(Z, W)` for vertical vectors given in frame components.
    pub fn m_operator_zw(&self, z: &[f64], w: &[f64]) -> DMatrix<f64> {
        self.j_vec(w) * self.j_vec(z) * self.dj_vec(z, w)
    }

    pub fn j_vec(&self, z: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (i, zi) in z.iter().enumerate() {
            out += self.j_matrix(i) * *zi;
        }
        out
    }

    /// `(∇_Z J)_W` for vertical `Z, W`.
    pub fn dj_vec(&self, z: &[f64], w: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (i, zi) in z.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                out += self.dj_matrix(self.n + i, j) * (zi * wj);
            }
        }
        out
    }

    /// Symmetric part `N(Z,W) = M(Z,W) + ⟨Z,W⟩ (∇_Z J)_W`.
    pub fn n_operator_zw(&self, z: &[f64], w: &[f64]) -> DMatrix<f64> {
        let zw: f64 = z.iter().zip(w).map(|(a, b)| a * b).sum();
        self.m_operator_zw(z, w) + self.dj_vec(z, w) * zw
    }

    pub fn tau_v(&self) -> f64 {
        let mut t = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                t += self.m_operator(i, j).trace();
            }
        }
        t
    }

    /// `⟨R(Z,W)W, Z⟩` for vertical vectors in frame components.
    pub fn vertical_sectional(&self, z: &[f64], w: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for (i, zi) in z.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                for (k, wk) in w.iter().enumerate() {
                    for (l, zl) in z.iter().enumerate() {
                        s += zi * wj * wk * zl * self.curvature.get(n + i, n + j, n + k, n + l);
                    }
                }
            }
        }
        s
    }

    /// Max over horizontal `c` of `|(∇_{X_c} T)|`.
    pub fn parallel_torsion_residual(&self) -> f64 {
        let nt = self.nabla_torsion();
        let d = self.d();
        let mut r = 0.0f64;
        for c in 0..self.n {
            for a in 0..d {
                for b in 0..d {
                    for e in 0..d {
                        r = r.max(nt.get(c, a, b, e).abs());
                    }
                }
            }
        }
        r
    }

    /// `nt[c][a][b][e] = (∇_{Y_c} T)^e_{ab}`.
    pub fn nabla_torsion(&self) -> T4 {
        let d = self.d();
        let g = &self.conn.gamma;
        let t = &self.torsion;
        // Y_c(T^e_{ab}) from derivatives of Γ and c
        let mut out = T4::zeros(d);
        for c in 0..d {
            for a in 0..d {
                for b in 0..d {
                    for e in 0..d {
                        let mut v = self.conn.dgamma.get(c, a, b, e) - self.conn.dgamma.get(c, b, a, e)
                            - self.structure.dc.get(c, a, b, e);
                        for f in 0..d {
                            v += g.get(c, f, e) * t.get(a, b, f) - g.get(c, a, f) * t.get(f, b, e)
                                - g.get(c, b, f) * t.get(a, f, e);
                        }
                        out.set(c, a, b, e, v);
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.curvature.max_abs()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SigmaEntry {
    pub i: usize,
    pub j: usize,
    pub sigma: i64,
    pub indeterminate: bool,
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantsReport {
    pub model: String,
    pub point: Vec<f64>,
    pub kappa_h: f64,
    pub tau_v: f64,
    pub kappa_v: Option<f64>,
    pub sigma: Vec<Vec<i64>>,
    pub sigma_entries: Vec<SigmaEntry>,
    pub parallel_torsion_residual: f64,
}

pub const SIGMA_ZERO_REL: f64 = 1e-8;
const SIGMA_AMBIGUOUS_REL: f64 = 1e-6;

/// Signature of a symmetric matrix with the relative zero threshold.
pub fn signature(nmat: &DMatrix<f64>) -> (i64, bool, Vec<f64>) {
    let sym = (nmat + nmat.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    let norm = ev.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if norm == 0.0 {
        return (0, false, ev);
    }
    let zero = SIGMA_ZERO_REL * norm;
    let amb = SIGMA_AMBIGUOUS_REL * norm;
    let pos = ev.iter().filter(|&&x| x > zero).count() as i64;
    let neg = ev.iter().filter(|&&x| x < -zero).count() as i64;
    let indeterminate = ev.iter().any(|&x| x.abs() >= zero && x.abs() < amb);
    (pos - neg, indeterminate, ev)
}

pub fn invariants_at(model: &FoliationModel, p: &[f64]) -> Result<InvariantsReport> {
    let g = PointGeometry::at(model, p)?;
    Ok(invariants_from(&g, &model.label, p))
}

pub fn invariants_from(g: &PointGeometry, label: &str, p: &[f64]) -> InvariantsReport {
    let m = g.m;
    let mut sigma = vec![vec![0i64; m]; m];
    let mut entries = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let (s, ind, ev) = signature(&g.m_operator(i, j));
            sigma[i][j] = s;
            entries.push(SigmaEntry { i, j, sigma: s, indeterminate: ind, eigenvalues: ev });
        }
    }
    InvariantsReport {
        model: label.to_string(),
        point: p.to_vec(),
        kappa_h: g.kappa_h(),
        tau_v: g.tau_v(),
        kappa_v: kappa_v(g),
        sigma,
        sigma_entries: entries,
        parallel_torsion_residual: g.parallel_torsion_residual(),
    }
}

/// Constant vertical sectional curvature, if all sampled planes agree.
pub fn kappa_v(g: &PointGeometry) -> Option<f64> {
    use rand::{Rng, SeedableRng};
    let m = g.m;
    if m < 2 {
        return None;
    }
    let mut vals = Vec::new();
    let unit = |k: usize| (0..m).map(|i| if i == k { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    for i in 0..m {
        for j in (i + 1)..m {
            vals.push(g.vertical_sectional(&unit(i), &unit(j)));
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6b76);
    for _ in 0..8 {
        let z: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() - 0.5).collect();
        let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() - 0.5).collect();
        let zz: f64 = z.iter().map(|x| x * x).sum();
        let ww: f64 = w.iter().map(|x| x * x).sum();
        let zw: f64 = z.iter().zip(&w).map(|(a, b)| a * b).sum();
        vals.push(g.vertical_sectional(&z, &w) / (zz * ww - zw * zw));
    }
    let k0 = vals[0];
    let scale = vals.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    if vals.iter().all(|v| (v - k0).abs() <= 1e-8 * scale) {
        Some(k0)
    } else {
        None
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub model: String,
    pub flat: bool,
    pub max_abs_curvature: f64,
    pub max_parallel_torsion_residual: f64,
    /// False when the parallel-torsion hypothesis fails at some sample.
    pub applicable: bool,
    pub tol: f64,
}

pub fn flatness_check(model: &FoliationModel, points: &[Vec<f64>], tol: f64) -> Result<FlatnessReport> {
    let mut max_r = 0.0f64;
    let mut max_pt = 0.0f64;
    for p in points {
        let g = PointGeometry::at(model, p)?;
        max_r = max_r.max(g.max_abs_curvature());
        max_pt = max_pt.max(g.parallel_torsion_residual());
    }
    let applicable = max_pt <= tol.max(1e-10);
    Ok(FlatnessReport {
        model: model.label.clone(),
        flat: applicable && max_r <= tol,
        max_abs_curvature: max_r,
        max_parallel_torsion_residual: max_pt,
        applicable,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_rep;
    use crate::models::{hopf_s3, htype_group, quaternionic_hopf_s7};

    #[test]
    fn group_is_flat() {
        let model = htype_group(build_rep(4, 3).unwrap());
        let g = PointGeometry::at(&model, &[0.1; 7]).unwrap();
        assert_eq!(g.conn.gamma.max_abs(), 0.0);
        assert_eq!(g.curvature.max_abs(), 0.0);
    }

    #[test]
    fn hopf_kappa_scaling() {
        // hand Koszul oracle for the su(2) frame: κ_H = -2a = 2/s²
        for s in [0.5, 1.0, 2.0] {
            let g = PointGeometry::at(&hopf_s3(s).unwrap(), &[0.0; 3]).unwrap();
            assert!((g.kappa_h() * s * s - 2.0).abs() < 1e-14);
            assert_eq!(g.tau_v(), 0.0);
        }
    }

    #[test]
    fn uniqueness_by_perturbation() {
        let model = hopf_s3(1.0).unwrap();
        let s = model.structure(&[0.0; 3], false).unwrap();
        let conn = solve_bott_from(&s, 2, 1);
        assert_eq!(axiom_residuals(&conn.gamma, &s.c, 2).max(), 0.0);
        assert!(uniqueness_margin(&conn.gamma, &s.c, 2, 1e-6) > 0.5e-6);
    }

    #[test]
    fn seven_sphere_invariants() {
        // round sphere of radius 2: expected values from the Hopf fibration geometry
        let model = quaternionic_hopf_s7(1.0).unwrap();
        for p in [vec![0.0; 7], vec![0.1, -0.2, 0.05, 0.3, -0.1, 0.2, 0.15]] {
            let r = invariants_at(&model, &p).unwrap();
            assert!((r.kappa_h - 12.0).abs() < 1e-10, "{}", r.kappa_h);
            assert!((r.tau_v + 12.0).abs() < 1e-10, "{}", r.tau_v);
            assert!((r.kappa_v.unwrap() - 0.25).abs() < 1e-10);
            assert!(r.parallel_torsion_residual < 1e-10);
            for e in &r.sigma_entries {
                assert_eq!(e.sigma, -4);
            }
        }
    }
}
