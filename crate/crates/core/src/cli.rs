//! Command-line front end. Exit codes: 0 all checks pass, 1 a check or
//! computation failed, 2 bad usage or configuration.

use crate::clifford::{build_rep, verify_htype};
use crate::config::ExperimentConfig;
use crate::connection::{axiom_residuals, flatness_check, invariants_at, uniqueness_margin, PointGeometry};
use crate::error::{HtypeError, Result};
use crate::heat::duhamel::{c0, c1_estimate, conventions, fit_universal_constants, C1Options, C1Site};
use crate::heat::GroupKernel;
use crate::identities::check_identities;
use crate::models::{model_from_id, sample_points, validate_model, FoliationModel, ModelId};
use crate::privileged::{sample_rays, taylor_check, DilationGrid};
use crate::report::{write_atomic, Check, Report};
use crate::suite::{run_acceptance, Status, SuiteOptions};
use crate::volume::expansion_fit;
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "htype", version, about = "H-type foliations: connection, privileged coordinates, volume and heat invariants")]
pub struct Cli {
    /// Key-value config file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report to this path (`-` or no value: stdout).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "-")]
    pub json: Option<String>,
    /// Write a CSV table to this path.
    #[arg(long, global = true)]
    pub csv: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    /// Model id: `group:n,m`, `hopf-s3[@s]`, `qhopf-s7[@s]`.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub scale: Option<f64>,
    /// Base point as comma-separated chart coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the J-matrices of an H-type algebra.
    Clifford {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        check: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Model registry.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Curvature invariants at a point.
    Invariants {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run a check suite: identities, bott, flatness, model.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Taylor expansion checks in privileged coordinates.
    TaylorCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        rays: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Korányi-ball Popp volumes and the small-radius fit.
    BallVolume {
        #[command(flatten)]
        model: ModelArgs,
        /// `lo:hi:count` or a comma list.
        #[arg(long)]
        radii: Option<String>,
        /// Density evaluations (accepts `1e8`).
        #[arg(long)]
        budget: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate the group heat kernel.
    HeatKernel {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        /// Point `x..., z...`.
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
        /// Also run the kernel contracts.
        #[arg(long)]
        contracts: bool,
    },
    /// Second heat invariant at a point.
    C1 {
        #[command(flatten)]
        model: ModelArgs,
        /// Monte Carlo cross-check budget (0 disables).
        #[arg(long)]
        budget: Option<String>,
        #[arg(long)]
        s_nodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit c1 against (kappa_H, tau_V) across models.
    FitC1 {
        #[arg(long, num_args = 1..)]
        models: Vec<String>,
        #[arg(long)]
        s_nodes: Option<usize>,
    },
    /// Run the acceptance battery.
    Suite {
        #[arg(long)]
        acceptance: bool,
        /// Volume budget for the ball-volume criterion.
        #[arg(long)]
        budget: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ModelAction {
    /// Structure-constant table at the base point.
    Info {
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
}

/// Failure that maps to an exit code.
enum Exit {
    Usage(String),
    Failed(String),
}

impl From<HtypeError> for Exit {
    fn from(e: HtypeError) -> Self {
        match e {
            HtypeError::Config(_) | HtypeError::UnknownModel(_) => Exit::Usage(e.to_string()),
            e => Exit::Failed(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Exit>;

fn usage(msg: impl Into<String>) -> Exit {
    Exit::Usage(msg.into())
}

/// Outcome of a subcommand: its report plus optional text and CSV outputs.
struct Outcome {
    report: Report,
    text: String,
    csv: Option<String>,
    /// Primary artifact written by `--out`.
    artifact: Option<String>,
}

fn flags_of(cli: &Cli) -> Result<ExperimentConfig> {
    let mut f = ExperimentConfig::new();
    let model = |f: &mut ExperimentConfig, a: &ModelArgs| -> Result<()> {
        f.set_opt("model", a.model.clone())?;
        f.set_opt("scale", a.scale)?;
        f.set_opt("point", a.point.clone())
    };
    match &cli.command {
        Command::Clifford { n, m, check, out } => {
            f.set("operation", "clifford")?;
            f.set_opt("n", *n)?;
            f.set_opt("m", *m)?;
            if *check {
                f.set("check", "true")?;
            }
            f.set_opt("out", out.clone())?;
        }
        Command::Model { action: ModelAction::Info { name, scale, points } } => {
            f.set("operation", "model-info")?;
            f.set_opt("model", name.clone())?;
            f.set_opt("scale", *scale)?;
            f.set_opt("points", *points)?;
        }
        Command::Invariants { model: a } => {
            f.set("operation", "invariants")?;
            model(&mut f, a)?;
        }
        Command::Check { model: a, suite, tol, points, seed } => {
            f.set("operation", "check")?;
            model(&mut f, a)?;
            f.set_opt("suite", suite.clone())?;
            f.set_opt("tol", *tol)?;
            f.set_opt("points", *points)?;
            f.set_opt("seed", *seed)?;
        }
        Command::TaylorCheck { model: a, tol, rays, seed } => {
            f.set("operation", "taylor-check")?;
            model(&mut f, a)?;
            f.set_opt("tol", *tol)?;
            f.set_opt("rays", *rays)?;
            f.set_opt("seed", *seed)?;
        }
        Command::BallVolume { model: a, radii, budget, seed } => {
            f.set("operation", "ball-volume")?;
            model(&mut f, a)?;
            f.set_opt("radii", radii.clone())?;
            f.set_opt("budget", budget.clone())?;
            f.set_opt("seed", *seed)?;
        }
        Command::HeatKernel { n, m, t, at, contracts } => {
            f.set("operation", "heat-kernel")?;
            f.set_opt("n", *n)?;
            f.set_opt("m", *m)?;
            f.set_opt("t", *t)?;
            f.set_opt("at", at.clone())?;
            if *contracts {
                f.set("contracts", "true")?;
            }
        }
        Command::C1 { model: a, budget, s_nodes, seed } => {
            f.set("operation", "c1")?;
            model(&mut f, a)?;
            f.set_opt("mc_budget", budget.clone())?;
            f.set_opt("s_nodes", *s_nodes)?;
            f.set_opt("seed", *seed)?;
        }
        Command::FitC1 { models, s_nodes } => {
            f.set("operation", "fit-c1")?;
            if !models.is_empty() {
                f.set("models", &models.join(" "))?;
            }
            f.set_opt("s_nodes", *s_nodes)?;
        }
        Command::Suite { acceptance, budget, seed } => {
            f.set("operation", "suite")?;
            f.set("suite", if *acceptance { "acceptance" } else { "quick" })?;
            f.set_opt("budget", budget.clone())?;
            f.set_opt("seed", *seed)?;
        }
    }
    f.set_opt("json", cli.json.clone())?;
    f.set_opt("csv", cli.csv.clone())?;
    Ok(f)
}

fn model_of(cfg: &ExperimentConfig) -> CliResult<(FoliationModel, Vec<f64>)> {
    let id = cfg.str("model").ok_or_else(|| usage("--model is required"))?;
    let id: ModelId = id.parse::<ModelId>().map_err(|e| usage(e.to_string()))?.with_scale(cfg.f64("scale"));
    let model = id.build()?;
    let point = match cfg.f64_list("point") {
        Some(p) if p.len() != model.dim() => return Err(usage(format!("--point needs {} coordinates", model.dim()))),
        Some(p) => p,
        None => model.base_point(),
    };
    Ok((model, point))
}

fn clifford_cmd(cfg: &ExperimentConfig, r: &mut Report) -> CliResult<(String, Option<String>)> {
    let n = cfg.usize("n").ok_or_else(|| usage("--n is required"))?;
    let m = cfg.usize("m").ok_or_else(|| usage("--m is required"))?;
    let rep = build_rep(n, m)?;
    let rep_json = serde_json::to_string(&rep).map_err(HtypeError::from)?;
    let res = verify_htype(&rep, 1e-12);
    if cfg.bool("check").unwrap_or(false) {
        r.check(Check::at_most("skew", res.skew, 1e-12));
        r.check(Check::at_most("orthogonal", res.orthogonal, 1e-12));
        r.check(Check::at_most("square", res.square, 1e-12));
        r.check(Check::at_most("polarization", res.polarization, 1e-12));
    }
    r.payload = json!({ "representation": rep, "residuals": res });
    let text = if cfg.raw("out").is_some() { format!("n={n} m={m} max residual {:e}", res.max()) } else { rep_json.clone() };
    Ok((text, Some(rep_json)))
}

fn model_info_cmd(cfg: &ExperimentConfig, r: &mut Report) -> CliResult<String> {
    let (model, q) = model_of(cfg)?;
    let s = model.structure(&q, false)?;
    let d = model.dim();
    let table: Vec<Vec<Vec<f64>>> = (0..d).map(|a| (0..d).map(|b| (0..d).map(|e| s.c.get(a, b, e)).collect()).collect()).collect();
    let pts = sample_points(&model, cfg.usize("points").unwrap_or(5), 0.4, 1);
    let v = validate_model(&model, &pts, 1e-10)?;
    r.check(Check::flag("validate_model", v.pass));
    let payload = json!({
        "model": model.label, "n": model.n, "m": model.m, "base_point": q,
        "structure_constants": table,
        "index_convention": "c[a][b][e] is c^e_{ab} with [Y_a, Y_b] = c^e_{ab} Y_e; indices < n horizontal",
        "validation": v,
    });
    let text = serde_json::to_string_pretty(&payload).map_err(HtypeError::from)?;
    r.payload = payload;
    Ok(text)
}

fn invariants_cmd(cfg: &ExperimentConfig, r: &mut Report) -> CliResult<String> {
    let (model, q) = model_of(cfg)?;
    let inv = invariants_at(&model, &q)?;
    let text = format!("{}: kappa_H = {:.12}, tau_V = {:.12}, kappa_V = {:?}", inv.model, inv.kappa_h, inv.tau_v, inv.kappa_v);
    r.payload = serde_json::to_value(&inv).map_err(HtypeError::from)?;
    Ok(text)
}

fn check_cmd(cfg: &ExperimentConfig, r: &mut Report) -> CliResult<String> {
    let (model, q) = model_of(cfg)?;
    let suite = cfg.str("suite").unwrap_or_else(|| "identities".into());
    let tol = cfg.f64("tol").unwrap_or(1e-10);
    let seed = cfg.u64("seed").unwrap_or(42);
    let count = cfg.usize("points").unwrap_or(20);
    let mut pts = vec![q.clone()];
    pts.extend(sample_points(&model, count.saturating_sub(1), 0.4, seed));
    match suite.as_str() {
        "identities" => {
            let mut reports = Vec::new();
            for (k, p) in pts.iter().enumerate() {
                let rep = check_identities(&model, p, tol, seed + k as u64)?;
                for res in rep.residuals.iter().filter(|x| x.applicable) {
                    let prior = r.checks.iter_mut().find(|c| c.name == res.name);
                    match prior {
                        Some(c) => {
                            c.value = c.value.max(res.value);
                            c.pass = c.value <= tol;
                        }
                        None => r.checks.push(Check::at_most(res.name.clone(), res.value, tol)),
                    }
                }
                reports.push(rep);
            }
            r.pass = r.checks.iter().all(|c| c.pass);
            r.payload = serde_json::to_value(&reports).map_err(HtypeError::from)?;
        }
        "bott" => {
            let mut rows = Vec::new();
            for p in &pts {
                let g = PointGeometry::at(&model, p)?;
                let ax = axiom_residuals(&g.conn.gamma, &g.structure.c, model.n);
                let margin = uniqueness_margin(&g.conn.gamma, &g.structure.c, model.n, 1e-6);
                rows.push(json!({ "point": p, "axioms": ax, "uniqueness_margin": margin }));
                r.check(Check::at_most("axioms", ax.max(), tol));
                r.check(Check::flag("uniqueness", margin > 0.5e-6));
            }
            r.payload = json!(rows);
        }
        "flatness" => {
            let f = flatness_check(&model, &pts, tol)?;
            r.payload = serde_json::to_value(&f).map_err(HtypeError::from)?;
            r.check(Check::flag("flat", f.flat));
        }
        "model" => {
            let v = validate_model(&model, &pts, tol)?;
            r.check(Check::at_most("jacobi", v.max_jacobi, tol));
            r.check(Check::at_most("htype", v.max_htype, tol));
            r.check(Check::flag("validate_model", v.pass));
            r.payload = serde_json::to_value(&v).map_err(HtypeError::from)?;
        }
        other => return Err(usage(format!("unknown suite '{other}' (identities, bott, flatness, model)"))),
    }
    Ok(format!("{} suite on {} at {} points: {}", suite, model.label, pts.len(), if r.pass { "pass" } else { "FAIL" }))
}

fn taylor_cmd(cfg: &ExperimentConfig, r: &mut Report) -> CliResult<String> {
    let (model, q) = model_of(cfg)?;
    let tol = cfg.f64("tol").unwrap_or(1e-5);
    let rays = sample_rays(model.n, model.m, cfg.usize("rays").unwrap_or(3), 0.5, cfg.u64("seed").unwrap_or(7));
    let rep = taylor_check(&model, &q, tol, &rays, &DilationGrid::default())?;
    let mut text = String::new();
    for row in &rep.rows {
        if row.applicable {
            r.check(Check::at_most(row.name.clone(), row.residual, tol));
        }
        text.push_str(&format!("{:<28} {:>10.3e} (fit {:.1e}){}\n", row.name, row.residual, row.fit_error, if row.applicable { "" } else { " n/a" }));
    }
    r.payload = serde_json::to_value(&rep).map_err(HtypeError::from)?;
    Ok(text)
}

fn volume_cmd(cfg: &ExperimentConfig, r: &mut Report) -> CliResult<(String, String)> {
    let (model, q) = model_of(cfg)?;
    let radii = cfg.radii().unwrap_or_else(|| (0..7).map(|k| 0.1 + 0.05 * k as f64).collect());
    let budget = cfg.u64("budget").unwrap_or(10_000_000);
    let seed = cfg.u64("seed").unwrap_or(42);
    let rep = expansion_fit(&model, &q, &radii, budget, seed)?;
    let mut csv = String::from("r,vol,stderr\n");
    for (rr, v) in rep.radii.iter().zip(&rep.volumes) {
        csv.push_str(&format!("{rr},{:e},{:e}\n", v.value, v.stderr));
    }
    r.check(Check::at_most("r0_rel_error", rep.r0_rel_error, 0.005));
    r.check(Check::at_most("r2_rel_error", rep.r2_rel_error, 0.05));
    r.check(Check::flag("budget_sufficient", rep.budget_sufficient));
    let text = format!(
        "r^0: {:.6} ± {:.1e} (a = {:.6}), r^2: {:.5} ± {:.1e} (expected {:.5})",
        rep.fit.r0.value, rep.fit.r0.stderr, rep.theoretical.a, rep.fit.r2.value, rep.fit.r2.stderr, rep.expected_r2
    );
    r.payload = serde_json::to_value(&rep).map_err(HtypeError::from)?;
    Ok((text, csv))
}

fn heat_kernel_cmd(cfg: &ExperimentConfig, r: &mut Report) -> CliResult<String> {
    let n = cfg.usize("n").ok_or_else(|| usage("--n is required"))?;
    let m = cfg.usize("m").ok_or_else(|| usage("--m is required"))?;
    let rep = build_rep(n, m)?;
    let t = cfg.f64("t").unwrap_or(1.0);
    let at = cfg.f64_list("at").unwrap_or_else(|| vec![0.0; n + m]);
    if at.len() != n + m {
        return Err(usage(format!("--at needs {} coordinates", n + m)));
    }
    let k = GroupKernel::new(n, m);
    let jet = k.jet(t, &at[..n], &at[n..], 2)?;
    let mut payload = json!({
        "n": n, "m": m, "t": t, "at": at, "value": jet.value, "gradient": jet.grad,
        "quadrature": k.quad, "measure": "Lebesgue in exponential coordinates",
        "popp_value": jet.value * crate::heat::duhamel::popp_normalization(n, m),
    });
    if cfg.bool("contracts").unwrap_or(false) {
        let model = crate::models::htype_group(rep.clone());
        let js: Vec<DMatrix<f64>> = (0..m).map(|i| DMatrix::from_fn(n, n, |a, b| rep.comp(i, a, b))).collect();
        let mul = |a: &[f64], b: &[f64]| model.group_mul(a, b).expect("group law is total");
        let c = k.contracts(&js, &mul)?;
        r.check(Check::at_most("homogeneity", c.homogeneity, 0.0));
        r.check(Check::at_most("normalization", c.normalization, 1e-8));
        r.check(Check::at_most("pde_residual", c.pde_residual, 1e-6));
        if let Some(s) = c.semigroup {
            r.check(Check::at_most("semigroup", s, 1e-6));
        }
        if let Some(h) = c.heisenberg_rel {
            r.check(Check::at_most("heisenberg_rel", h, 1e-8));
        }
        payload["contracts"] = serde_json::to_value(&c).map_err(HtypeError::from)?;
    }
    r.payload = payload;
    Ok(format!("K({t}; {at:?}) = {:.16e}", jet.value))
}

fn c1_cmd(cfg: &ExperimentConfig, r: &mut Report) -> CliResult<String> {
    let (model, q) = model_of(cfg)?;
    let opts = C1Options {
        s_nodes: cfg.usize("s_nodes").unwrap_or(48),
        mc_budget: cfg.u64("mc_budget").unwrap_or(0),
        mc_s_nodes: cfg.usize("mc_s_nodes").unwrap_or(12),
        seed: cfg.u64("seed").unwrap_or(42),
    };
    let rep = c1_estimate(&model, &q, &opts)?;
    let c0r = c0(&model, &q)?;
    if let Some(agree) = rep.strategies_agree {
        r.check(Check::flag("monte_carlo_agrees", agree));
    }
    r.conventions = rep.conventions.clone();
    let text = format!(
        "{}: c1 = {:.12e} ± {:.1e} (Popp), c0 = {:.12e}, kappa_H = {}, tau_V = {}",
        rep.model, rep.c1.value, rep.c1.stderr, c0r.c0, rep.kappa_h, rep.tau_v
    );
    r.payload = json!({ "c1": rep, "c0": c0r });
    Ok(text)
}

fn fit_cmd(cfg: &ExperimentConfig, r: &mut Report) -> CliResult<String> {
    let ids = cfg.str_list("models").ok_or_else(|| usage("--models is required"))?;
    let opts = C1Options { s_nodes: cfg.usize("s_nodes").unwrap_or(48), ..Default::default() };
    let mut sites = Vec::new();
    for id in &ids {
        let model = model_from_id(id).map_err(|e| usage(e.to_string()))?;
        let rep = c1_estimate(&model, &model.base_point(), &opts)?;
        sites.push(C1Site::from(&rep));
    }
    r.conventions = conventions();
    r.payload = json!({ "sites": sites });
    let fit = fit_universal_constants(&sites)?;
    r.check(Check::at_most("relative_residual", fit.relative_residual, 0.05));
    let text = format!(
        "C1 = {:.8e} ± {:.1e}, C2 = {:.8e} ± {:.1e}, relative residual {:.2e}{}",
        fit.c_1.value,
        fit.c_1.stderr,
        fit.c_2.value,
        fit.c_2.stderr,
        fit.relative_residual,
        if fit.mixed_dimensions { " (sites mix (n, m); constants are only universal per (n, m))" } else { "" }
    );
    r.payload = serde_json::to_value(&fit).map_err(HtypeError::from)?;
    Ok(text)
}

fn suite_cmd(cfg: &ExperimentConfig, r: &mut Report) -> CliResult<String> {
    let acceptance = cfg.str("suite").as_deref() == Some("acceptance");
    let mut opts = SuiteOptions::default();
    if let Some(b) = cfg.u64("budget") {
        opts.volume_budget = b;
    } else if !acceptance {
        opts.volume_budget = 2_000_000;
    }
    if let Some(s) = cfg.u64("seed") {
        opts.seed = s;
    }
    let results = run_acceptance(&opts, |res| say(&format!("{}\n", res.line())));
    for res in &results {
        let ok = res.status != Status::Fail;
        r.check(Check::flag(format!("criterion_{}", res.id), ok));
    }
    r.payload = serde_json::to_value(&results).map_err(HtypeError::from)?;
    let unattainable = results.iter().filter(|x| x.status == Status::KnownUnattainable).count();
    Ok(format!("{} criteria, {} known unattainable", results.len(), unattainable))
}

fn execute(cli: &Cli, cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let op = cfg.str("operation").unwrap_or_default();
    let mut report = Report::new(&op, cfg);
    let mut csv = None;
    let mut artifact = None;
    let text = match &cli.command {
        Command::Clifford { .. } => {
            let (t, a) = clifford_cmd(cfg, &mut report)?;
            artifact = a;
            t
        }
        Command::Model { .. } => model_info_cmd(cfg, &mut report)?,
        Command::Invariants { .. } => invariants_cmd(cfg, &mut report)?,
        Command::Check { .. } => check_cmd(cfg, &mut report)?,
        Command::TaylorCheck { .. } => taylor_cmd(cfg, &mut report)?,
        Command::BallVolume { .. } => {
            let (t, c) = volume_cmd(cfg, &mut report)?;
            csv = Some(c);
            t
        }
        Command::HeatKernel { .. } => heat_kernel_cmd(cfg, &mut report)?,
        Command::C1 { .. } => c1_cmd(cfg, &mut report)?,
        Command::FitC1 { .. } => fit_cmd(cfg, &mut report)?,
        Command::Suite { .. } => suite_cmd(cfg, &mut report)?,
    };
    Ok(Outcome { report, text, csv, artifact })
}

/// Print to stdout, ignoring a closed pipe.
fn say(s: &str) {
    use std::io::Write;
    let mut o = std::io::stdout().lock();
    let _ = o.write_all(s.as_bytes()).and_then(|_| o.flush());
}

fn emit(path: &str, contents: &str) -> Result<()> {
    if path == "-" {
        say(contents);
        Ok(())
    } else {
        write_atomic(Path::new(path), contents)
    }
}

/// Parse `argv`, run, write outputs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let started = Instant::now();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = (|| -> Result<ExperimentConfig> {
        let file = match &cli.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::new(),
        };
        Ok(file.merged(&flags_of(&cli)?))
    })();
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match execute(&cli, &cfg) {
        Err(Exit::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun `htype --help` for usage.");
            2
        }
        Err(Exit::Failed(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Ok(mut out) => {
            out.report.stamp(started);
            let json_to_stdout = cfg.raw("json") == Some("-");
            if !json_to_stdout {
                say(&format!("{}\n", out.text.trim_end()));
            }
            let written = (|| -> Result<()> {
                if let (Some(path), Some(a)) = (cfg.raw("out"), &out.artifact) {
                    emit(path, &format!("{a}\n"))?;
                }
                if let Some(path) = cfg.raw("json") {
                    emit(path, &out.report.to_json()?)?;
                }
                if let Some(path) = cfg.raw("csv") {
                    emit(path, out.csv.as_deref().unwrap_or(&out.report.checks_csv()))?;
                }
                Ok(())
            })();
            if let Err(e) = written {
                eprintln!("error: {e}");
                return 1;
            }
            if out.report.pass {
                0
            } else {
                for c in out.report.failures() {
                    eprintln!("check failed: {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
                }
                1
            }
        }
    }
}
