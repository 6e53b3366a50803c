//! The acceptance battery: eleven criteria, each with its own checks.

use crate::clifford::{admissible, build_rep, verify_htype};
use crate::connection::{axiom_residuals, flatness_check, invariants_at, kappa_v, uniqueness_margin, PointGeometry};
use crate::error::{HtypeError, Result};
use crate::heat::duhamel::{assemble_a_ops, c1_estimate, c1_estimate_in_frame, fit_universal_constants, C1Options, C1Site};
use crate::heat::GroupKernel;
use crate::identities::check_identities;
use crate::models::{model_from_id, sample_points, FoliationModel};
use crate::parallel;
use crate::privileged::{random_block_rotation, sample_rays, taylor_check, DilationGrid};
use crate::report::Check;
use crate::volume::{expansion_fit, theoretical_constants};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

pub const BUILTINS: [&str; 4] = ["group:2,1", "group:4,3", "hopf-s3", "qhopf-s7"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Fails for a structural reason documented with the criterion.
    KnownUnattainable,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub status: Status,
    pub checks: Vec<Check>,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::KnownUnattainable => "KNOWN_UNATTAINABLE",
        };
        format!("criterion {:>2} [{tag}] {} ({:.1}s) {}", self.id, self.title, self.seconds, self.detail)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub volume_budget: u64,
    pub seed: u64,
    pub c1_s_nodes: usize,
    pub rotations: usize,
    pub identity_points: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { volume_budget: 100_000_000, seed: 42, c1_s_nodes: 48, rotations: 3, identity_points: 20 }
    }
}

fn finish(id: u32, title: &str, started: Instant, checks: Vec<Check>, detail: String) -> CriterionResult {
    let status = if checks.iter().all(|c| c.pass) { Status::Pass } else { Status::Fail };
    CriterionResult { id, title: title.into(), status, checks, detail, seconds: started.elapsed().as_secs_f64() }
}

fn errored(id: u32, title: &str, started: Instant, e: HtypeError) -> CriterionResult {
    CriterionResult { id, title: title.into(), status: Status::Fail, checks: vec![], detail: format!("error: {e}"), seconds: started.elapsed().as_secs_f64() }
}

fn wrap(id: u32, title: &str, f: impl FnOnce() -> Result<(Vec<Check>, String)>) -> CriterionResult {
    let t = Instant::now();
    match f() {
        Ok((checks, detail)) => finish(id, title, t, checks, detail),
        Err(e) => errored(id, title, t, e),
    }
}

fn builtin(id: &str) -> Result<FoliationModel> {
    model_from_id(id)
}

pub fn clifford_suite() -> CriterionResult {
    wrap(1, "Clifford modules for all admissible n+m <= 24", || {
        let mut worst = 0.0f64;
        let mut count = 0;
        for m in 1..24 {
            for n in 1..=(24 - m) {
                if admissible(n, m) {
                    worst = worst.max(verify_htype(&build_rep(n, m)?, 1e-12).max());
                    count += 1;
                }
            }
        }
        Ok((vec![Check::at_most("max_htype_residual", worst, 1e-12)], format!("{count} pairs, max residual {worst:e}")))
    })
}

pub fn bott_suite() -> CriterionResult {
    wrap(2, "Bott connection axioms and uniqueness", || {
        let mut checks = Vec::new();
        for id in BUILTINS {
            let model = builtin(id)?;
            let q = model.base_point();
            let s = model.structure(&q, false)?;
            let g = PointGeometry::from_structure(s, model.n, model.m);
            let ax = axiom_residuals(&g.conn.gamma, &g.structure.c, model.n).max();
            checks.push(Check::at_most(format!("{id}:axioms"), ax, 1e-12));
            let eps = 1e-6;
            let margin = uniqueness_margin(&g.conn.gamma, &g.structure.c, model.n, eps);
            checks.push(Check::flag(format!("{id}:unique"), margin > 0.5 * eps));
        }
        Ok((checks, String::new()))
    })
}

pub fn identity_suite(points: usize, seed: u64) -> CriterionResult {
    wrap(3, "identity battery on builtins", || {
        let mut checks = Vec::new();
        for id in BUILTINS {
            let model = builtin(id)?;
            let mut worst = 0.0f64;
            for (k, p) in sample_points(&model, points, 0.5, seed).iter().enumerate() {
                let r = check_identities(&model, p, 1e-10, seed + k as u64)?;
                worst = worst.max(r.max_applicable());
            }
            checks.push(Check::at_most(format!("{id}:max_residual"), worst, 1e-10));
        }
        Ok((checks, format!("{points} points per model")))
    })
}

pub fn qhopf_values() -> CriterionResult {
    wrap(4, "signature and tau_V on qhopf-s7", || {
        let model = builtin("qhopf-s7")?;
        let mut checks = Vec::new();
        let mut pts = vec![model.base_point()];
        pts.extend(sample_points(&model, 3, 0.4, 5));
        let (mut sig, mut tau) = (0.0f64, 0.0f64);
        for p in &pts {
            let inv = invariants_at(&model, p)?;
            for e in inv.sigma_entries.iter().filter(|e| e.i != e.j) {
                sig = sig.max((e.sigma + 4).abs() as f64 + if e.indeterminate { 1.0 } else { 0.0 });
            }
            let g = PointGeometry::at(&model, p)?;
            let kv = kappa_v(&g).ok_or_else(|| HtypeError::Hypothesis("vertical curvature not constant".into()))?;
            tau = tau.max((g.tau_v() + 24.0 * kv.sqrt()).abs());
        }
        checks.push(Check::at_most("sigma_offdiag_plus_4", sig, 0.0));
        checks.push(Check::at_most("tau_v_plus_24_sqrt_kappa_v", tau, 1e-10));
        Ok((checks, format!("{} points", pts.len())))
    })
}

pub fn taylor_suite() -> CriterionResult {
    wrap(5, "privileged-coordinate Taylor checks", || {
        let mut checks = Vec::new();
        for (id, tol) in [("group:2,1", 1e-12), ("group:4,3", 1e-12), ("hopf-s3", 1e-5), ("qhopf-s7", 1e-5)] {
            let model = builtin(id)?;
            let rays = sample_rays(model.n, model.m, 3, 0.5, 7);
            let rep = taylor_check(&model, &model.base_point(), tol, &rays, &DilationGrid::default())?;
            let worst = rep.rows.iter().filter(|r| r.applicable).map(|r| r.residual).fold(0.0, f64::max);
            checks.push(Check::at_most(format!("{id}:max_row_residual"), worst, tol));
        }
        Ok((checks, String::new()))
    })
}

pub fn volume_suite(budget: u64, seed: u64) -> CriterionResult {
    wrap(6, "Korányi-ball Popp volume expansion on hopf-s3", || {
        let model = builtin("hopf-s3@1")?;
        let radii: Vec<f64> = (0..7).map(|k| 0.1 + 0.05 * k as f64).collect();
        let rep = expansion_fit(&model, &model.base_point(), &radii, budget, seed)?;
        // closed forms for (2, 1)
        let a = PI * PI / (4.0 * 2f64.sqrt());
        let b = PI / (36.0 * 2f64.sqrt());
        let th = theoretical_constants(2, 1);
        let oracle = ((th.a - a).abs() / a).max((th.b - b).abs() / b);
        let r0 = (rep.fit.r0.value - a).abs() / a;
        let r2 = (rep.fit.r2.value + b * rep.kappa_h).abs() / (b * rep.kappa_h).abs();
        let checks = vec![
            Check::at_most("closed_form_constants", oracle, 1e-12),
            Check::at_most("r0_rel_error", r0, 0.005),
            Check::at_most("r2_rel_error", r2, 0.05),
        ];
        Ok((checks, format!("r0 {:.6}±{:.1e}, r2 {:.5}±{:.1e}, budget {budget}", rep.fit.r0.value, rep.fit.r0.stderr, rep.fit.r2.value, rep.fit.r2.stderr)))
    })
}

pub fn kernel_suite() -> CriterionResult {
    wrap(7, "group heat kernel contracts", || {
        let mut checks = Vec::new();
        for (n, m) in [(2usize, 1usize), (4, 1), (4, 3), (8, 7)] {
            let model = builtin(&format!("group:{n},{m}"))?;
            let rep = model.rep().expect("group model").clone();
            let js: Vec<DMatrix<f64>> = (0..m).map(|i| DMatrix::from_fn(n, n, |a, b| rep.comp(i, a, b))).collect();
            let mul = |a: &[f64], b: &[f64]| model.group_mul(a, b).expect("group law");
            let c = GroupKernel::new(n, m).contracts(&js, &mul)?;
            checks.push(Check::at_most(format!("({n},{m}):homogeneity"), c.homogeneity, 0.0));
            checks.push(Check::at_most(format!("({n},{m}):normalization"), c.normalization, 1e-8));
            checks.push(Check::at_most(format!("({n},{m}):pde"), c.pde_residual, 1e-6));
            if let Some(s) = c.semigroup {
                checks.push(Check::at_most(format!("({n},{m}):semigroup"), s, 1e-6));
            }
            if let Some(h) = c.heisenberg_rel {
                checks.push(Check::at_most(format!("({n},{m}):heisenberg_rel"), h, 1e-8));
            }
        }
        Ok((checks, String::new()))
    })
}

pub fn flat_heat_suite(s_nodes: usize) -> CriterionResult {
    wrap(8, "flat-case heat chain", || {
        let mut checks = Vec::new();
        for id in ["group:2,1", "group:4,3", "group:8,7"] {
            let model = builtin(id)?;
            let q = model.base_point();
            let ops = assemble_a_ops(&model, &q)?;
            checks.push(Check::flag(format!("{id}:operators_vanish"), ops.a_minus1.is_empty() && ops.a0.is_empty()));
            let r = c1_estimate(&model, &q, &C1Options { s_nodes, ..Default::default() })?;
            checks.push(Check::at_most(format!("{id}:c1"), r.c1.value.abs() + r.c1.stderr, 1e-8));
        }
        Ok((checks, String::new()))
    })
}

/// Sites used for the linear-law fit.
pub const LINEAR_LAW_SITES: [&str; 4] = ["group:4,3", "qhopf-s7@1", "qhopf-s7@2", "qhopf-s7@1.5"];

pub fn linear_law_suite(s_nodes: usize, rotations: usize, seed: u64) -> CriterionResult {
    let t = Instant::now();
    let title = "linear law c1 = C1 kappa_H + C2 tau_V";
    let opts = C1Options { s_nodes, ..Default::default() };
    let mut sites = Vec::new();
    let mut checks = Vec::new();
    let mut rot_drift = 0.0f64;
    for id in LINEAR_LAW_SITES {
        let model = match builtin(id) {
            Ok(m) => m,
            Err(e) => return errored(9, title, t, e),
        };
        let q = model.base_point();
        let r = match c1_estimate(&model, &q, &opts) {
            Ok(r) => r,
            Err(e) => return errored(9, title, t, e),
        };
        for k in 0..rotations {
            let rot = random_block_rotation(model.n, model.m, seed + k as u64);
            match c1_estimate_in_frame(&model, &q, &rot, &opts) {
                Ok(rr) => rot_drift = rot_drift.max((rr.c1.value - r.c1.value).abs() - 3.0 * (rr.c1.stderr + r.c1.stderr)),
                Err(e) => return errored(9, title, t, e),
            }
        }
        sites.push(C1Site::from(&r));
    }
    checks.push(Check::at_most("c1_frame_rotation_excess", rot_drift.max(0.0), 1e-12));
    let mut detail = String::new();
    let mut status;
    match fit_universal_constants(&sites) {
        Ok(fit) => {
            checks.push(Check::at_most("relative_residual", fit.relative_residual, 0.05));
            status = if checks.iter().all(|c| c.pass) { Status::Pass } else { Status::Fail };
            detail.push_str(&format!("C1 {:.6e}±{:.1e} C2 {:.6e}±{:.1e}", fit.c_1.value, fit.c_1.stderr, fit.c_2.value, fit.c_2.stderr));
        }
        Err(e @ HtypeError::RankDeficient(_)) => {
            checks.push(Check::flag("design_full_rank", false));
            // every curved (4,3) site has tau_V = -kappa_H, so only C1 - C2 is identifiable
            let ratio_fixed = sites.iter().filter(|s| s.kappa_h != 0.0).all(|s| (s.tau_v + s.kappa_h).abs() <= 1e-9 * s.kappa_h.abs());
            status = if ratio_fixed { Status::KnownUnattainable } else { Status::Fail };
            let slope: Vec<String> = sites.iter().filter(|s| s.kappa_h != 0.0).map(|s| format!("{:.10e}", s.c1.value / s.kappa_h)).collect();
            detail.push_str(&format!("{e}; c1/kappa_H per curved site = [{}]", slope.join(", ")));
        }
        Err(e) => return errored(9, title, t, e),
    }
    if status == Status::Pass && rot_drift > 1e-12 {
        status = Status::Fail;
    }
    CriterionResult { id: 9, title: title.into(), status, checks, detail, seconds: t.elapsed().as_secs_f64() }
}

pub fn flatness_suite() -> CriterionResult {
    wrap(10, "flatness criterion", || {
        let mut checks = Vec::new();
        for id in BUILTINS {
            let model = builtin(id)?;
            let pts = sample_points(&model, 5, 0.4, 3);
            let r = flatness_check(&model, &pts, 1e-10)?;
            let expect_flat = id.starts_with("group:");
            checks.push(Check::flag(format!("{id}:flat=={expect_flat}"), r.flat == expect_flat));
            checks.push(Check::flag(format!("{id}:hypothesis_flag"), r.applicable == (r.max_parallel_torsion_residual <= 1e-10)));
        }
        Ok((checks, String::new()))
    })
}

/// Seeded experiments rerun with 1 and 4 workers must serialize identically.
pub fn determinism_suite(seed: u64) -> CriterionResult {
    wrap(11, "determinism across thread counts", || {
        let model = builtin("hopf-s3")?;
        let q = model.base_point();
        let radii = [0.1, 0.2, 0.3, 0.4];
        let run = |w: usize| -> Result<String> {
            parallel::with_pool(w, || {
                let v = expansion_fit(&model, &q, &radii, 200_000, seed)?;
                let c = c1_estimate(&model, &q, &C1Options { s_nodes: 16, mc_budget: 4096, mc_s_nodes: 4, seed })?;
                Ok(serde_json::to_string(&(v, c))?)
            })
        };
        let (a, b, c) = (run(1)?, run(4)?, run(1)?);
        let checks = vec![Check::flag("one_vs_four_workers", a == b), Check::flag("rerun", a == c)];
        Ok((checks, format!("{} payload bytes", a.len())))
    })
}

pub fn run_acceptance(opts: &SuiteOptions, mut on_result: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    let mut push = |r: CriterionResult| {
        on_result(&r);
        out.push(r);
    };
    push(clifford_suite());
    push(bott_suite());
    push(identity_suite(opts.identity_points, opts.seed));
    push(qhopf_values());
    push(taylor_suite());
    push(volume_suite(opts.volume_budget, opts.seed));
    push(kernel_suite());
    push(flat_heat_suite(opts.c1_s_nodes));
    push(linear_law_suite(opts.c1_s_nodes, opts.rotations, opts.seed));
    push(flatness_suite());
    push(determinism_suite(opts.seed));
    out
}
