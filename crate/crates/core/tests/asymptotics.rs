use std::sync::OnceLock;

use balancelab_core::asymptotics::{
    anchor, anchor_t, compare_models, concentration, gap_report, lambda_at, lambda_moments, moment_families,
    omega_estimate, shift_identities, u_moments, KNormalization,
};
use balancelab_core::numerics::derivative;
use balancelab_core::solver::{solve, BalancedModel};
use proptest::prelude::*;
use statrs::function::gamma::{digamma, ln_gamma};

fn half() -> &'static BalancedModel {
    static M: OnceLock<BalancedModel> = OnceLock::new();
    M.get_or_init(|| solve(0.5, 400, 300.0, 1e-10, 500, None).unwrap())
}

fn exp_model() -> BalancedModel {
    BalancedModel::exponential(400, 300.0)
}

/// ψ'(x) by upward recurrence and the asymptotic series.
fn trigamma(mut x: f64) -> f64 {
    let mut s = 0.0;
    while x < 30.0 {
        s += 1.0 / (x * x);
        x += 1.0;
    }
    let y = 1.0 / x;
    let y2 = y * y;
    s + y + y2 / 2.0 + y * y2 * (1.0 / 6.0 - y2 * (1.0 / 30.0 - y2 * (1.0 / 42.0 - y2 / 30.0)))
}

/// ψ''(x), same construction.
fn tetragamma(mut x: f64) -> f64 {
    let mut s = 0.0;
    while x < 30.0 {
        s -= 2.0 / (x * x * x);
        x += 1.0;
    }
    let y = 1.0 / x;
    let y2 = y * y;
    s - y2 - y2 * y - y2 * y2 * (0.5 - y2 * (1.0 / 6.0 - y2 * (1.0 / 6.0 - y2 * 0.3)))
}

#[test]
fn polygamma_oracles_are_sane() {
    assert!((trigamma(1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
    assert!((tetragamma(1.0) + 2.0 * 1.2020569031595942).abs() < 1e-12);
}

#[test]
fn factorial_potential_and_its_derivatives() {
    let m = exp_model();
    let l = lambda_moments(&m, 100.0).unwrap();
    assert!((l.lambda - ln_gamma(101.0)).abs() < 1e-9);
    assert!((l.lambda - 363.73937555556347).abs() < 1e-8);
    assert!((l.d1 - digamma(101.0)).abs() < 1e-10);
    assert!((l.d2 - trigamma(101.0)).abs() < 1e-11, "{}", l.d2);
    assert!((l.d3 - tetragamma(101.0)).abs() < 1e-11, "{}", l.d3);
    assert!((tetragamma(101.0) + 9.90050e-5).abs() < 1e-9);
    let l10 = lambda_moments(&m, 10.0).unwrap();
    assert!((l10.d1 - 2.351_752_589_066_721).abs() < 1e-10);
}

#[test]
fn curvature_of_solved_potential_by_two_paths() {
    let m = half();
    let direct = lambda_moments(m, 100.0).unwrap().d2;
    let fd = derivative(|a| lambda_at(m, a).unwrap(), 100.0, 2, 0.5).unwrap();
    assert!(((direct - fd) / direct).abs() < 1e-4, "{direct} {fd}");
}

#[test]
fn index_variance_of_solved_model() {
    let m = half();
    let t = 100f64.ln();
    let u = u_moments(m, t).unwrap();
    assert!(u.u2 / 100.0 > 0.98 && u.u2 / 100.0 < 1.02, "{}", u.u2);
    let fd = derivative(|t| m.log_f_t(t), t, 2, 0.02).unwrap();
    assert!(((u.u2 - fd) / u.u2).abs() < 1e-6, "{} {fd}", u.u2);
}

#[test]
fn anchors_of_the_exponential() {
    let m = exp_model();
    let r = anchor(&m, 10.0).unwrap();
    assert!((r.x_a - 10.0).abs() < 1e-9);
    let stirling = (ln_gamma(11.0) + 10.0 - 10.0 * 10f64.ln()).exp() / 10f64.sqrt();
    assert!((r.nu_classic - stirling).abs() < 1e-9);
    assert!((r.nu_classic - 2.5275).abs() < 1e-3);

    let r = anchor(&m, 100.0).unwrap();
    // n with ψ(n+1) = ln 100 sits at 99.4995833.
    assert!((r.sigma_small - 0.5004167).abs() < 1e-6, "{}", r.sigma_small);
    let target = -1.0 / (2.0 * 101.0);
    let dt = -r.delta_small;
    assert!(((dt - target) / target).abs() < 0.1, "{dt}");
    assert!((dt - (digamma(101.0) - 101f64.ln())).abs() < 1e-10);
}

#[test]
fn anchor_rows_are_consistent() {
    let m = half();
    let rows: Vec<_> = [20.0, 40.0, 60.0, 80.0, 100.0, 120.0]
        .iter()
        .map(|&a| anchor(m, a).unwrap())
        .collect();
    for r in &rows {
        assert!(r.lambda_d2 > 0.0 && r.u_d2 > 0.0);
        assert!((u_moments(m, r.t_a).unwrap().u - r.a).abs() < 1e-8);
        assert!(r.trusted);
    }
    assert!(rows.windows(2).all(|w| w[1].x_a > w[0].x_a));
}

#[test]
fn gap_ratio_of_the_exponential() {
    let g = gap_report(&exp_model(), 100.0, 150.0).unwrap();
    assert!((g.m1_cont - 1.0).abs() < 1e-12 && (g.m2_cont - 1.0).abs() < 1e-12);
    let lo = (g.b - g.b.sqrt() * g.b.ln()).max(1.0);
    // (a + ½)ψ'(a + 1) rises toward 1 from below.
    let at = |a: f64| (a + 0.5) * trigamma(a + 1.0);
    assert!(g.m1_disc <= g.m2_disc);
    assert!((g.m1_disc - at(lo)).abs() < 1e-9, "{} {}", g.m1_disc, at(lo));
    assert!((g.m2_disc - at(150.0)).abs() < 1e-9, "{} {}", g.m2_disc, at(150.0));
    assert!(g.m_of_b >= 1.0);
    assert!(g.m_of_b - 1.0 < 4.0 * 100f64.ln() / 10.0, "{}", g.m_of_b);
}

#[test]
fn gap_ratio_of_solved_model_shrinks() {
    let m = half();
    let v: Vec<f64> = [25.0, 50.0, 100.0]
        .iter()
        .map(|&b| gap_report(m, b, 150.0).unwrap().m_of_b)
        .collect();
    assert!(v.iter().all(|x| *x >= 1.0));
    assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
}

#[test]
fn shift_identities_hold() {
    for model in [exp_model(), half().clone()] {
        for a in [25.0, 50.0, 100.0] {
            let row = anchor(&model, a).unwrap();
            let fam = moment_families(&model, &row).unwrap();
            let r = shift_identities(&row, &fam);
            assert!(r.j3 < 1e-8 && r.h3 < 1e-8, "a = {a}: {r:?}");
        }
    }
    let m = exp_model();
    let row = anchor(&m, 100.0).unwrap();
    let fam = moment_families(&m, &row).unwrap();
    assert!((fam.j[3] - tetragamma(101.0)).abs() < 1e-9);
    assert!(shift_identities(&row, &fam).j3 < 1e-9);
}

#[test]
fn exponent_of_solved_model() {
    let e = omega_estimate(half(), &[50.0, 100.0, 200.0, 270.0]).unwrap();
    assert!(e.omega_hat > 0.0 && e.omega_hat < 1.0);
    assert!(e.c_beta_hat > 0.0);
    assert_eq!(e.sequence.len(), 4);
    let xe = omega_estimate(&BalancedModel::x_exponential(400, 300.0), &[50.0, 100.0, 200.0, 270.0]).unwrap();
    assert!((xe.omega_hat - 1.0).abs() < 1e-3 && (xe.c_beta_hat - 1.0).abs() < 1e-3);
}

#[test]
fn equal_models_have_unit_ratio() {
    let p = compare_models(half(), half(), 150, KNormalization::AsSolved).unwrap();
    assert!(p.k.iter().all(|k| *k == 1.0));
    let q = compare_models(
        &exp_model(),
        &BalancedModel::x_exponential(400, 300.0),
        150,
        KNormalization::UnitLinear,
    )
    .unwrap();
    for (i, k) in q.indices.iter().zip(&q.k) {
        assert!((k - *i as f64).abs() < 1e-9 * *i as f64);
    }
}

#[test]
fn concentration_at_one_hundred() {
    let c = concentration(half(), 100.0).unwrap();
    assert!(c.tail_fraction < 1e-6, "{}", c.tail_fraction);
    assert!(c.min_g_second_diff > 0.0 && c.min_big_g_second_diff > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn anchor_inverts_index_mean(a in 2.0f64..150.0) {
        let m = half();
        let t = anchor_t(m, a).unwrap();
        prop_assert!((u_moments(m, t).unwrap().u - a).abs() < 1e-8);
    }

    #[test]
    fn potential_curvature_is_positive(a in 1.0f64..150.0) {
        prop_assert!(lambda_moments(half(), a).unwrap().d2 > 0.0);
    }
}
