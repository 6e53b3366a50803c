use htype::clifford::{admissible, build_rep, verify_htype};
use htype::config::ExperimentConfig;
use htype::connection::{axiom_residuals, PointGeometry};
use htype::heat::duhamel::{fit_universal_constants, C1Site};
use htype::heat::polyop::{Poly, PolyDiffOp};
use htype::heat::GroupKernel;
use htype::models::{hopf_s3, htype_group, quaternionic_hopf_s7};
use htype::privileged::PrivilegedChart;
use htype::volume::{theoretical_constants, Estimate};
use proptest::prelude::*;

fn g0_kappa() -> f64 {
    let h = hopf_s3(1.0).unwrap();
    PointGeometry::at(&h, &h.base_point()).unwrap().kappa_h()
}

fn admissible_pair() -> impl Strategy<Value = (usize, usize)> {
    (1usize..10, 1usize..=16).prop_filter_map("admissible", |(m, k)| {
        let n = 2 * k;
        (admissible(n, m) && n + m <= 24).then_some((n, m))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn clifford_relations_hold((n, m) in admissible_pair()) {
        let rep = build_rep(n, m).unwrap();
        prop_assert!(verify_htype(&rep, 1e-12).pass);
    }

    #[test]
    fn group_law_is_a_group(a in prop::collection::vec(-2.0f64..2.0, 7), b in prop::collection::vec(-2.0f64..2.0, 7), c in prop::collection::vec(-2.0f64..2.0, 7), t in 0.1f64..3.0) {
        let g = htype_group(build_rep(4, 3).unwrap());
        let ab_c = g.group_mul(&g.group_mul(&a, &b).unwrap(), &c).unwrap();
        let a_bc = g.group_mul(&a, &g.group_mul(&b, &c).unwrap()).unwrap();
        for k in 0..7 {
            prop_assert!((ab_c[k] - a_bc[k]).abs() < 1e-12);
        }
        let e = g.group_mul(&a, &g.group_inverse(&a)).unwrap();
        prop_assert!(e.iter().all(|v| v.abs() < 1e-14));
        // dilations are automorphisms
        let lhs = g.dilate(&g.group_mul(&a, &b).unwrap(), t);
        let rhs = g.group_mul(&g.dilate(&a, t), &g.dilate(&b, t)).unwrap();
        for k in 0..7 {
            prop_assert!((lhs[k] - rhs[k]).abs() < 1e-12 * (1.0 + lhs[k].abs()));
        }
    }

    #[test]
    fn bott_axioms_on_curved_models(p in prop::collection::vec(-0.5f64..0.5, 7), s in 0.5f64..3.0) {
        let q = quaternionic_hopf_s7(s).unwrap();
        let base = q.base_point();
        let p: Vec<f64> = base.iter().zip(&p).map(|(b, d)| b + 0.3 * d).collect();
        let g = PointGeometry::at(&q, &p).unwrap();
        prop_assert!(axiom_residuals(&g.conn.gamma, &g.structure.c, 4).max() <= 1e-12);
        let h = hopf_s3(s).unwrap();
        let hp: Vec<f64> = h.base_point().iter().zip(&p).map(|(b, d)| b + 0.3 * d).collect();
        let g = PointGeometry::at(&h, &hp).unwrap();
        prop_assert!(axiom_residuals(&g.conn.gamma, &g.structure.c, 2).max() <= 1e-12);
        prop_assert!((g.kappa_h() * s * s - g0_kappa()).abs() < 1e-10);
    }

    #[test]
    fn kernel_scaling_and_symmetry(x in prop::collection::vec(-2.0f64..2.0, 4), z in prop::collection::vec(-2.0f64..2.0, 3), t in 0.2f64..4.0, lam in 0.3f64..3.0) {
        let k = GroupKernel::new(4, 3);
        let a = k.value(t, &x, &z).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| lam * v).collect();
        let zs: Vec<f64> = z.iter().map(|v| lam * lam * v).collect();
        let b = k.value(lam * lam * t, &xs, &zs).unwrap();
        prop_assert!((b - lam.powi(-10) * a).abs() <= 1e-12 * b.abs());
        let xn: Vec<f64> = x.iter().map(|v| -v).collect();
        let zn: Vec<f64> = z.iter().map(|v| -v).collect();
        prop_assert!((k.value(t, &xn, &zn).unwrap() - a).abs() <= 1e-13 * a.abs());
        prop_assert!(a > 0.0);
    }

    #[test]
    fn config_round_trips(seed in any::<u32>(), tol in 1e-14f64..1.0, budget in 1u64..1_000_000_000, model in "(hopf-s3|qhopf-s7)@[1-9]", pts in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let mut c = ExperimentConfig::new();
        c.set("seed", &seed.to_string()).unwrap();
        c.set("tol", &format!("{tol:e}")).unwrap();
        c.set("budget", &budget.to_string()).unwrap();
        c.set("model", &model).unwrap();
        let p: Vec<String> = pts.iter().map(|v| v.to_string()).collect();
        c.set("point", &p.join(",")).unwrap();
        let back = ExperimentConfig::parse(&c.to_string()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.f64_list("point").unwrap(), pts);
        prop_assert_eq!(back.f64("tol").unwrap(), tol);
    }

    #[test]
    fn adjoint_is_an_involution(c in prop::collection::vec(-3.0f64..3.0, 6)) {
        let d = 3;
        let x = |k| Poly::var(d, k);
        let comps = vec![x(0).mul(&x(1)).scale(c[0]), x(2).scale(c[1]), x(0).mul(&x(0)).scale(c[2])];
        let v = PolyDiffOp::vector_field(2, 1, 0, &comps);
        let w = PolyDiffOp::vector_field(2, 1, 0, &[x(1).scale(c[3]), x(0).scale(c[4]), x(1).mul(&x(0)).scale(c[5])]);
        let op = v.compose(&w, 0);
        let back = op.adjoint().adjoint();
        prop_assert!(back.add(&op.scale(-1.0)).max_abs_coef() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_constants(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, k in prop::collection::vec(-5.0f64..5.0, 4), t in prop::collection::vec(-5.0f64..5.0, 4)) {
        let sites: Vec<C1Site> = (0..4).map(|i| C1Site { label: String::new(), n: 4, m: 3, kappa_h: k[i], tau_v: t[i], c1: Estimate { value: c1 * k[i] + c2 * t[i], stderr: 0.0 } }).collect();
        if let Ok(f) = fit_universal_constants(&sites) {
            prop_assert!((f.c_1.value - c1).abs() < 1e-6 && (f.c_2.value - c2).abs() < 1e-6);
            prop_assert!(f.relative_residual < 1e-8 || (c1 * c1 + c2 * c2) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn privileged_chart_inverts(y in prop::collection::vec(-0.3f64..0.3, 3)) {
        let model = hopf_s3(1.0).unwrap();
        let chart = PrivilegedChart::new(&model, &model.base_point(), 1e-12).unwrap();
        let p = chart.forward(&y).unwrap();
        let back = chart.inverse(&p, 1e-13, 40).unwrap();
        for k in 0..3 {
            prop_assert!((back[k] - y[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn ball_constants_match_quadrature((n, m) in admissible_pair()) {
        let c = theoretical_constants(n, m);
        prop_assert!((c.unit_ball_volume - c.unit_ball_volume_quad).abs() <= 1e-10 * c.unit_ball_volume);
        prop_assert!((c.second_moment - c.second_moment_quad).abs() <= 1e-10 * c.second_moment);
    }
}
