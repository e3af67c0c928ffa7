use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::test_support::ladder;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn mvt_simple_cases() {
    let s = spec();
    let c = mvt_node(|x| 2.0 * x + 1.0, 0.0, 1.0, &s).unwrap();
    assert!((c - 0.5).abs() < 1e-12);
    let c = mvt_node(|x: f64| x.sin().powi(2), 0.0, PI, &s).unwrap();
    assert!((c - PI / 4.0).abs() < 1e-10, "{c}");
    assert_eq!(mvt_node(|_| 3.0, 2.0, 5.0, &s).unwrap(), 3.5);
    assert!(matches!(
        mvt_node(|x| x, 1.0, 1.0, &s),
        Err(LabError::InvalidInterval { .. })
    ));
}

#[test]
fn mvt_meets_mean_value_tolerance() {
    let g = |x: f64| 1.0 + x.sin().powi(2) * (3.0 * x).cos().powi(2);
    let (a, b) = (0.3, 2.9);
    let c = mvt_node(g, a, b, &spec()).unwrap();
    let integral = integrate(
        g,
        a,
        b,
        &QuadratureSpec {
            rel_tol: 1e-13,
            ..spec()
        },
    )
    .unwrap()
    .value;
    assert!((g(c) * (b - a) - integral).abs() <= 1e-10 * integral);
    // leftmost: no earlier grid crossing
    let mean = integral / (b - a);
    let h0 = g(a) - mean;
    for i in 0..200 {
        let x = a + (c - a) * i as f64 / 200.0;
        assert_eq!((g(x) - mean) < 0.0, h0 < 0.0, "earlier crossing near {x}");
    }
}

#[test]
fn named_means_match_closed_forms() {
    let t = PI * 1000.0;
    let half_pi = PI / 2.0;
    let f1 = f_mean(
        &AdmissibleFunction::named(FunctionId::F1, t),
        t,
        half_pi,
        &spec(),
    )
    .unwrap();
    let f2 = f_mean(
        &AdmissibleFunction::named(FunctionId::F2, t),
        t,
        half_pi,
        &spec(),
    )
    .unwrap();
    assert!((f1 - (PI / 8.0 + 1.0 / (2.0 * PI))).abs() < 1e-9);
    assert!((f2 - (PI / 8.0 - 1.0 / (2.0 * PI))).abs() < 1e-9);
    assert!((f1 + f2 - half_pi / 2.0).abs() < 1e-9);
    assert!((closed_form_mean(FunctionId::F3, half_pi) - (PI * PI / 24.0 + 0.25)).abs() < 1e-14);
    assert!((closed_form_mean(FunctionId::F4, half_pi) - (PI * PI / 24.0 - 0.25)).abs() < 1e-14);
    assert!((closed_form_mean(FunctionId::F5, PI / 4.0) - (0.5 - 1.0 / PI)).abs() < 1e-14);
    let u = 1e-3;
    let small = closed_form_mean(FunctionId::F1, u);
    assert!((small / (u * u * u / 4.0) - 1.0).abs() < 1e-5);
}

#[test]
fn inadmissible_functions_are_rejected() {
    let neg = AdmissibleFunction::custom("neg", |t: f64| t.sin());
    assert!(matches!(
        neg.certify(0.0, 6.0),
        Err(LabError::NotAdmissible { .. })
    ));
    let zero = AdmissibleFunction::custom("zero", |_| 0.0);
    assert!(zero.certify(0.0, 1.0).is_err());
    assert_eq!("f4".parse::<FunctionId>().unwrap(), FunctionId::F4);
    assert!("f7".parse::<FunctionId>().is_err());
}

#[test]
fn nodes_sit_in_their_intervals_and_identity_holds() {
    let m = ladder();
    let (t, u) = (PI * 1000.0, PI / 4.0);
    let f = AdmissibleFunction::named(FunctionId::F1, t);
    for k in 1..=2 {
        let nodes = generate_nodes(m, &f, t, u, k, &spec()).unwrap();
        let set = m.disconnected_set(t, u, k).unwrap();
        assert!(nodes_in_place(&nodes, &set.components));
        // alpha_r = phi_1^{k-r}(d)
        for r in 0..=k {
            assert_eq!(nodes.alpha[r], m.forward(nodes.d, k - r).unwrap());
        }
        assert!(nodes.f_alpha0 > 0.0);
        let report = factorization_check(m, &f, t, u, k, &spec()).unwrap();
        assert!(
            report.residual_exact.abs() <= 1e-6,
            "k={k}: {}",
            report.residual_exact
        );
    }
}

#[test]
fn betas_do_not_depend_on_f() {
    let m = ladder();
    let (t, u) = (PI * 1000.0, PI / 4.0);
    let a = generate_nodes(
        m,
        &AdmissibleFunction::named(FunctionId::F1, t),
        t,
        u,
        1,
        &spec(),
    )
    .unwrap();
    let b = generate_nodes(
        m,
        &AdmissibleFunction::named(FunctionId::F2, t),
        t,
        u,
        1,
        &spec(),
    )
    .unwrap();
    assert_eq!(a.beta, b.beta);
    assert_eq!(a.e, b.e);
    assert_ne!(a.d, b.d);
}

#[test]
fn lemma_one_right_side() {
    let m = ladder();
    let (l, u) = (1000.0, PI / 4.0);
    let report = lemma_family(m, FunctionId::F1, l, u, 1, &spec()).unwrap();
    let d = report.detail.as_ref().unwrap();
    let a0 = report.alpha0;
    let expected = (0.25 * u - 0.25 * (2.0 * u).sin() + 0.25 * u.sin().powi(2) / u)
        / ((a0 - PI * l) * a0.sin().powi(2));
    assert!((d.rhs / expected - 1.0).abs() < 1e-12);
    assert!(report.residual_exact.abs() <= 1e-6);
    assert!(report.deviation_zeta.abs() < 3.0 * (PI * l).ln().ln() / (PI * l).ln());
}

#[test]
fn level_bounds() {
    let m = ladder();
    let f = AdmissibleFunction::named(FunctionId::F5, PI * 1000.0);
    assert!(matches!(
        generate_nodes(m, &f, PI * 1000.0, 0.5, 0, &spec()),
        Err(LabError::LevelMismatch(_))
    ));
    assert!(matches!(
        generate_nodes(m, &f, PI * 1000.0, 0.5, 9, &spec()),
        Err(LabError::LevelTooLarge { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn identity_holds_for_polynomial_times_sin_squared(
        c0 in 0.0f64..2.0,
        c1 in 0.0f64..2.0,
        c2 in 0.0f64..2.0,
        shift in 0.0f64..1.0,
        l in 1000u32..1400,
    ) {
        let t = PI * l as f64;
        let u = PI / 4.0;
        // nonnegative coefficients in s = t - base keep the product nonnegative
        let f = AdmissibleFunction::custom("poly", move |x: f64| {
            let s = x - t;
            (c0 + c1 * s + c2 * s * s) * (x + shift).sin().powi(2) + 1e-3
        });
        let report = factorization_check(ladder(), &f, t, u, 1, &spec()).unwrap();
        prop_assert!(report.residual_exact.abs() <= 1e-6, "{}", report.residual_exact);
    }
}
