//! Residual checks for the structure equations, Bianchi identity and the
//! algebraic relations between J, ∇J, curvature, τ_V and σ.

use crate::connection::{signature, PointGeometry};
use crate::error::Result;
use crate::models::FoliationModel;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

/// One named residual.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    /// False when the identity only holds under a hypothesis that fails here.
    pub applicable: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceValues {
    pub kappa_h: f64,
    pub tau_v: f64,
    /// `J^i_{αγ} J^i_{βδ} R^β_{αδγ}`
    pub trace1: f64,
    /// `J^i_{αγ} J^i_{βδ} R^β_{αγδ}`
    pub trace2: f64,
    /// `J^i_{αβ} X_γX_γ(J^i_{αβ})`
    pub trace3: f64,
    /// `J^i_{αβ} X_βX_γ(J^i_{αγ})`
    pub trace4: f64,
    /// `J^i_{αβ} X_γX_β(J^i_{αγ})`
    pub trace5: f64,
    /// Residuals of the alternative right-hand sides `κ_H + 2τ_V`, `2κ_H + 4τ_V`,
    /// `0`, `τ_V/2`, `−τ_V/2`.
    pub m_free_form_residuals: [f64; 5],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityReport {
    pub model: String,
    pub point: Vec<f64>,
    pub tol: f64,
    pub parallel_torsion_residual: f64,
    pub residuals: Vec<Residual>,
    pub traces: TraceValues,
    pub pass: bool,
}

impl IdentityReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.value)
    }

    pub fn max_applicable(&self) -> f64 {
        self.residuals.iter().filter(|r| r.applicable).map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> Vec<&Residual> {
        self.residuals.iter().filter(|r| r.applicable && !(r.value <= self.tol)).collect()
    }
}

fn maxabs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// `D2[i][b][g][a][c] = X_b X_g (J̃^i_{ac})(q)` in a special frame at `q`,
/// valid under horizontally parallel torsion: only the bracket part
/// `½ J^j_{gb} (∇_{Z_j} J)^i_{ac}` survives.
pub fn second_frame_derivative_of_j(g: &PointGeometry, i: usize, b: usize, gg: usize, a: usize, c: usize) -> f64 {
    let n = g.n;
    let mut s = 0.0;
    for j in 0..g.m {
        s += 0.5 * g.j(j, gg, b) * g.dj(n + j, i, a, c);
    }
    s
}

/// The five trace identities. The right-hand sides used for the pass/fail
/// residuals are `m κ_H + 2τ_V`, `2m κ_H + 4τ_V`, `0`, `−τ_V/2`, `τ_V/2`.
pub fn trace_values(g: &PointGeometry) -> TraceValues {
    let (n, m) = (g.n, g.m);
    let r = &g.curvature;
    let (mut t1, mut t2, mut t3, mut t4, mut t5) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..m {
        for al in 0..n {
            for ga in 0..n {
                let jag = g.j(i, al, ga);
                if jag != 0.0 {
                    for be in 0..n {
                        for de in 0..n {
                            let jbd = g.j(i, be, de);
                            t1 += jag * jbd * r.get(al, de, ga, be);
                            t2 += jag * jbd * r.get(al, ga, de, be);
                        }
                    }
                }
            }
            for be in 0..n {
                let jab = g.j(i, al, be);
                if jab == 0.0 {
                    continue;
                }
                for ga in 0..n {
                    t3 += jab * second_frame_derivative_of_j(g, i, ga, ga, al, be);
                    t4 += jab * second_frame_derivative_of_j(g, i, be, ga, al, ga);
                    t5 += jab * second_frame_derivative_of_j(g, i, ga, be, al, ga);
                }
            }
        }
    }
    let k = g.kappa_h();
    let tau = g.tau_v();
    TraceValues {
        kappa_h: k,
        tau_v: tau,
        trace1: t1,
        trace2: t2,
        trace3: t3,
        trace4: t4,
        trace5: t5,
        m_free_form_residuals: [
            (t1 - (k + 2.0 * tau)).abs(),
            (t2 - (2.0 * k + 4.0 * tau)).abs(),
            t3.abs(),
            (t4 - 0.5 * tau).abs(),
            (t5 + 0.5 * tau).abs(),
        ],
    }
}

pub fn check_identities(model: &FoliationModel, p: &[f64], tol: f64, seed: u64) -> Result<IdentityReport> {
    let g = PointGeometry::at(model, p)?;
    Ok(check_identities_from(&g, &model.label, p, tol, seed))
}

pub fn check_identities_from(g: &PointGeometry, label: &str, p: &[f64], tol: f64, seed: u64) -> IdentityReport {
    let (n, m) = (g.n, g.m);
    let d = n + m;
    let c = &g.structure.c;
    let gm = &g.conn.gamma;
    let is_h = |a: usize| a < n;
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let pt = g.parallel_torsion_residual();
    let parallel = pt <= tol.max(1e-10);
    let mut res = Vec::new();
    let mut push = |name: &str, value: f64, applicable: bool| {
        res.push(Residual { name: name.to_string(), value, applicable })
    };

    // structure equations
    let (mut ra, mut rb, mut rc) = (0.0f64, 0.0f64, 0.0f64);
    for a in 0..d {
        for b in 0..d {
            for al in 0..n {
                let rhs = ind(is_h(a)) * gm.get(b, a, al) - ind(is_h(b)) * gm.get(a, b, al);
                ra = ra.max((-c.get(a, b, al) - rhs).abs());
            }
            for i in 0..m {
                let jterm = if is_h(a) && is_h(b) { g.j(i, a, b) } else { 0.0 };
                let rhs = jterm + ind(!is_h(a)) * gm.get(b, a, n + i) - ind(!is_h(b)) * gm.get(a, b, n + i);
                rb = rb.max((-c.get(a, b, n + i) - rhs).abs());
            }
        }
    }
    let dg = &g.conn.dgamma;
    for cc in 0..d {
        for dd in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let mut lhs = dg.get(cc, dd, a, b) - dg.get(dd, cc, a, b);
                    let mut rhs = g.curvature.get(cc, dd, a, b);
                    for e in 0..d {
                        lhs -= c.get(cc, dd, e) * gm.get(e, a, b);
                        rhs += gm.get(cc, a, e) * gm.get(dd, e, b) - gm.get(dd, a, e) * gm.get(cc, e, b);
                    }
                    rc = rc.max((lhs - rhs).abs());
                }
            }
        }
    }
    push("structure_a", ra, true);
    push("structure_b", rb, true);
    push("structure_c", rc, true);

    // first Bianchi with torsion: ↻R(a,b)c = ↻[(∇_a T)(b,c) + T(T(a,b),c)]
    let nt = g.nabla_torsion();
    let t = &g.torsion;
    let mut rbi = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            for cc in 0..d {
                for e in 0..d {
                    let mut v = 0.0;
                    for (x, y, z) in [(a, b, cc), (b, cc, a), (cc, a, b)] {
                        v += g.curvature.get(x, y, z, e) - nt.get(x, y, z, e);
                        for f in 0..d {
                            v -= t.get(x, y, f) * t.get(f, z, e);
                        }
                    }
                    rbi = rbi.max(v.abs());
                }
            }
        }
    }
    push("first_bianchi", rbi, true);

    // curvature preserves the splitting
    let mut rblock = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            for cc in 0..d {
                for e in 0..d {
                    if is_h(cc) != is_h(e) {
                        rblock = rblock.max(g.curvature.get(a, b, cc, e).abs());
                    }
                }
            }
        }
    }
    push("curvature_block", rblock, true);

    // [X, J_Z X]_V = −|X|² Z, random X and Z
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rsb = 0.0f64;
    for _ in 0..8 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let z: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let jz = g.j_vec(&z);
        let jx: Vec<f64> = (0..n).map(|b| (0..n).map(|a| jz[(b, a)] * x[a]).sum()).collect();
        let xx: f64 = x.iter().map(|v| v * v).sum();
        for i in 0..m {
            let mut br = 0.0;
            for a in 0..n {
                for b in 0..n {
                    br += x[a] * jx[b] * c.get(a, b, n + i);
                }
            }
            rsb = rsb.max((br + xx * z[i]).abs());
        }
    }
    push("strong_bracket_generation", rsb, true);

    // B = n·Id
    let mut rbm = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += c.get(a, b, n + i) * c.get(a, b, n + j);
                }
            }
            rbm = rbm.max((s - if i == j { n as f64 } else { 0.0 }).abs());
        }
    }
    push("b_matrix", rbm, true);

    // relations for ∇_V J under parallel torsion
    let (mut r_anti, mut r_skew, mut r_acw, mut r_acz, mut r_norm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut r_sym, mut r_tr, mut r_ev, mut r_mod4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let unit = |k: usize| (0..m).map(|i| if i == k { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for i in 0..m {
        for j in 0..m {
            pairs.push((unit(i), unit(j)));
        }
    }
    for _ in 0..4 {
        let z: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        pairs.push((z, w));
    }
    for (z, w) in &pairs {
        let dzw = g.dj_vec(z, w);
        let dwz = g.dj_vec(w, z);
        let jz = g.j_vec(z);
        let jw = g.j_vec(w);
        let zz: f64 = z.iter().map(|v| v * v).sum();
        let ww: f64 = w.iter().map(|v| v * v).sum();
        let zw: f64 = z.iter().zip(w).map(|(a, b)| a * b).sum();
        let rzw = g.vertical_sectional(z, w);
        r_anti = r_anti.max(maxabs(&(&dzw + &dwz)));
        r_skew = r_skew.max(maxabs(&(&dzw + dzw.transpose())));
        r_acw = r_acw.max(maxabs(&(&dzw * &jw + &jw * &dzw)));
        if zw.abs() < 1e-14 {
            r_acz = r_acz.max(maxabs(&(&dzw * &jz + &jz * &dzw)));
        }
        let gram = zz * ww - zw * zw;
        // ‖(∇_Z J)_W X‖² = ⟨R(Z,W)W,Z⟩‖X‖² for orthonormal Z, W; general form scales by the Gram determinant
        if (zz - 1.0).abs() < 1e-14 && (ww - 1.0).abs() < 1e-14 && zw.abs() < 1e-14 {
            let dd = dzw.transpose() * &dzw - DMatrix::identity(n, n) * rzw;
            r_norm = r_norm.max(maxabs(&dd));
        }
        let mm = g.m_operator_zw(z, w);
        let nn = g.n_operator_zw(z, w);
        r_sym = r_sym.max(maxabs(&(&nn - (&mm + mm.transpose()) * 0.5)));
        r_tr = r_tr.max((mm.trace() - nn.trace()).abs());
        let target = (gram * rzw).max(0.0).sqrt();
        let (sig, _, ev) = signature(&nn);
        for e in &ev {
            r_ev = r_ev.max((e.abs() - target).abs());
        }
        let _ = sig;
        if gram > 1e-12 {
            let (s, indet, _) = signature(&nn);
            if !indet && m >= 2 {
                r_mod4 = r_mod4.max((s.rem_euclid(4)) as f64);
            }
        }
    }
    push("nabla_j_antisymmetry", r_anti, parallel);
    push("nabla_j_skew", r_skew, parallel);
    push("nabla_j_anticommutes_jw", r_acw, parallel);
    push("nabla_j_anticommutes_jz", r_acz, parallel);
    push("nabla_j_norm", r_norm, parallel);
    push("n_is_symmetric_part_of_m", r_sym, parallel);
    push("trace_m_equals_trace_n", r_tr, parallel);
    push("n_eigenvalue_formula", r_ev, parallel);
    push("sigma_mod_4", r_mod4, parallel && m >= 2);

    let tv = trace_values(g);
    let mf = m as f64;
    push("trace_1", (tv.trace1 - (mf * tv.kappa_h + 2.0 * tv.tau_v)).abs(), parallel);
    push("trace_2", (tv.trace2 - (2.0 * mf * tv.kappa_h + 4.0 * tv.tau_v)).abs(), parallel);
    push("trace_3", tv.trace3.abs(), parallel);
    push("trace_4", (tv.trace4 + 0.5 * tv.tau_v).abs(), parallel);
    push("trace_5", (tv.trace5 - 0.5 * tv.tau_v).abs(), parallel);
    push("parallel_torsion", pt, true);

    let pass = res.iter().filter(|r| r.applicable && r.name != "parallel_torsion").all(|r| r.value <= tol);
    IdentityReport {
        model: label.to_string(),
        point: p.to_vec(),
        tol,
        parallel_torsion_residual: pt,
        residuals: res,
        traces: tv,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_rep;
    use crate::models::{hopf_s3, htype_group, quaternionic_hopf_s7};

    #[test]
    fn group_residuals_vanish() {
        let model = htype_group(build_rep(4, 3).unwrap());
        let r = check_identities(&model, &[0.2; 7], 1e-12, 1).unwrap();
        assert!(r.pass, "{:?}", r.failures());
        assert_eq!(r.get("first_bianchi").unwrap(), 0.0);
    }

    #[test]
    fn sphere_traces() {
        let model = quaternionic_hopf_s7(1.0).unwrap();
        let r = check_identities(&model, &[0.1, 0.0, -0.2, 0.05, 0.0, 0.1, 0.3], 1e-10, 2).unwrap();
        assert!(r.pass, "{:?}", r.failures());
        let t = &r.traces;
        // the alternative trace 1 drops the factor m
        assert!(r.traces.m_free_form_residuals[0] > 1.0);
        assert!((t.trace4 - 6.0).abs() < 1e-10, "{}", t.trace4);
    }

    #[test]
    fn hopf_bianchi() {
        let r = check_identities(&hopf_s3(1.0).unwrap(), &[0.0; 3], 1e-12, 3).unwrap();
        assert!(r.get("first_bianchi").unwrap() <= 1e-12);
        assert!(r.pass, "{:?}", r.failures());
    }
}
