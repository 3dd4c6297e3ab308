use std::sync::OnceLock;

use balancelab_core::solver::persist::{from_document, to_document};
use balancelab_core::solver::{
    check_e1, finalize_normalization, load_model, max_balance_residual, save_model, solve, t_step, BalancedModel,
};
use balancelab_core::Error;
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

const TOL: f64 = 1e-10;

fn solved(beta: f64) -> &'static BalancedModel {
    static CACHE: OnceLock<Vec<BalancedModel>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        let mut out: Vec<BalancedModel> = Vec::new();
        for b in [0.0, 0.25, 0.5] {
            let m = solve(b, 400, 300.0, TOL, 500, out.last()).unwrap();
            out.push(m);
        }
        out
    });
    all.iter().find(|m| m.beta == beta).expect("cached beta")
}

fn factorials(n: usize) -> Vec<f64> {
    (0..=n).map(|i| ln_gamma(i as f64 + 1.0)).collect()
}

/// Composite Simpson on `[0, b]` of `x^i / Σ_{j ≤ n} x^j`.
fn rational_moment(i: usize, n: usize, b: f64) -> f64 {
    let steps = 400_000;
    let h = b / steps as f64;
    let g = |x: f64| {
        if x == 0.0 {
            return if i == 0 { 1.0 } else { 0.0 };
        }
        let lx = x.ln();
        let terms: Vec<f64> = (0..=n).map(|j| j as f64 * lx).collect();
        let mx = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln();
        (i as f64 * lx - lse).exp()
    };
    let mut s = g(0.0) + g(b);
    for k in 1..steps {
        s += g(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn factorials_are_a_fixed_point_of_the_step() {
    let m = BalancedModel::exponential(400, 300.0);
    let next = t_step(&m, 1.0).unwrap();
    for i in 0..=m.trusted_degree {
        assert!((next.lambda[i] - m.lambda[i]).abs() < 1e-9, "i = {i}");
    }
}

#[test]
fn one_step_from_flat_coefficients_matches_direct_quadrature() {
    let m = BalancedModel::from_coefficients(0.0, vec![0.0; 31], 80.0).unwrap();
    let next = t_step(&m, 1.0).unwrap();
    for i in [0, 1, 5, 15, 29, 30] {
        let oracle = rational_moment(i, 30, 80.0).ln();
        assert!((next.lambda[i] - oracle).abs() < 1e-8, "i = {i}: {} vs {oracle}", next.lambda[i]);
    }
    assert!(next.lambda.iter().all(|l| l.is_finite()));
    // Log-moments are convex in i (Hölder); they dip before rising.
    assert!(next.lambda.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] > 0.0));
    assert!(next.lambda[30] > next.lambda[0]);
}

#[test]
fn near_one_beta_inflates_the_constant_term() {
    let base = BalancedModel::from_coefficients(0.0, vec![0.0; 31], 80.0).unwrap();
    let near = BalancedModel::from_coefficients(1.0 - 1e-9, vec![0.0; 31], 80.0).unwrap();
    let a = t_step(&base, 1.0).unwrap();
    let b = t_step(&near, 1.0).unwrap();
    let jump = b.lambda[0] - a.lambda[0];
    assert!((jump - 20.7232658).abs() < 1e-6, "{jump}");
    assert!(b.lambda[0].is_finite());
    assert_eq!(a.lambda[1..], b.lambda[1..]);
}

#[test]
fn step_rejects_bad_damping() {
    let m = BalancedModel::exponential(400, 300.0);
    assert!(t_step(&m, 0.0).is_err());
    assert!(t_step(&m, 1.5).is_err());
}

#[test]
fn beta_zero_solve_reproduces_factorials() {
    let m = solved(0.0);
    let exact = factorials(400);
    let err = (0..=200).map(|i| (m.lambda[i] - exact[i]).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn solved_models_are_balanced() {
    for b in [0.0, 0.25, 0.5] {
        let m = solved(b);
        assert_eq!(m.lambda[0], 0.0);
        assert!(m.solve_report.final_sup_delta < TOL);
        assert!(max_balance_residual(m) < 10.0 * TOL, "beta {b}");
        assert_eq!(m.solve_report.e1_residuals.len(), 9);
        let d: Vec<f64> = m.lambda.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(d[2..m.trusted_degree].windows(2).all(|w| w[1] > w[0]), "log-convexity at beta {b}");
    }
}

#[test]
fn generating_identity_on_solved_models() {
    let r = check_e1(solved(0.5), 0.5).unwrap();
    assert!((r.lhs - 1.5).abs() < 1e-4, "{r:?}");
    let r = check_e1(solved(0.25), 0.8).unwrap();
    assert!((r.rhs - 4.75).abs() < 1e-12);
    assert!(r.residual < 1e-4, "{r:?}");
}

#[test]
fn generating_identity_closed_forms() {
    let r = check_e1(&BalancedModel::exponential(400, 300.0), 0.5).unwrap();
    assert!((r.lhs - 2.0).abs() < 1e-10 && r.rhs == 2.0);
    let r = check_e1(&BalancedModel::x_exponential(400, 300.0), 0.5).unwrap();
    assert!((r.lhs - 1.0).abs() < 1e-10, "{r:?}");
}

#[test]
fn e1_rejects_slowly_decaying_integrands() {
    let m = BalancedModel::exponential(60, 40.0);
    assert!(matches!(check_e1(&m, 0.95), Err(Error::TailNotConverged { .. })));
    assert!(check_e1(&m, 0.97).is_err());
}

#[test]
fn normalization_fixes_gauge() {
    let m = BalancedModel::exponential(400, 300.0);
    let same = finalize_normalization(&m);
    for (a, b) in same.lambda.iter().zip(&m.lambda) {
        assert!((a - b).abs() < 1e-12);
    }

    let halved = BalancedModel {
        lambda: m.lambda.iter().map(|l| l + 2f64.ln()).collect(),
        ..m.clone()
    };
    let back = finalize_normalization(&halved);
    assert_eq!(back.lambda[0], 0.0);
    assert!(max_balance_residual(&back) < 1e-10);

    // f(2x): c_i = 2^i / i!, balance constant 1/2.
    let doubled = BalancedModel {
        lambda: m.lambda.iter().enumerate().map(|(i, l)| l - i as f64 * 2f64.ln()).collect(),
        ..m.clone()
    };
    let back = finalize_normalization(&doubled);
    for i in 0..=200 {
        assert!((back.lambda[i] - m.lambda[i]).abs() < 1e-9, "i = {i}");
    }
}

#[test]
fn doubled_initial_guess_reaches_the_same_model() {
    let reference = solved(0.5);
    let lambda: Vec<f64> = factorials(400)
        .iter()
        .enumerate()
        .map(|(i, l)| l - i as f64 * 2f64.ln())
        .collect();
    let guess = BalancedModel::from_coefficients(0.5, lambda, 300.0).unwrap();
    let m = solve(0.5, 400, 300.0, TOL, 500, Some(&guess)).unwrap();
    let gap = (0..=m.trusted_degree)
        .map(|i| (m.lambda[i] - reference.lambda[i]).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-6, "{gap}");
}

#[test]
fn near_one_approaches_x_exponential() {
    let m99 = solve(0.99, 400, 300.0, TOL, 500, Some(solved(0.5))).unwrap();
    let m = solve(0.999, 400, 300.0, TOL, 500, Some(&m99)).unwrap();
    let d: Vec<f64> = (50..=150).map(|i| m.lambda[i] - ln_gamma(i as f64)).collect();
    let spread = d.iter().copied().fold(f64::NEG_INFINITY, f64::max) - d.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.01, "{spread}");
}

#[test]
fn warm_start_does_not_cost_iterations() {
    let cold = solve(0.5, 400, 300.0, TOL, 500, None).unwrap();
    assert!(solved(0.5).solve_report.iterations <= cold.solve_report.iterations);
}

#[test]
fn solve_rejects_bad_arguments() {
    assert!(solve(1.0, 400, 300.0, TOL, 500, None).is_err());
    assert!(solve(-0.1, 400, 300.0, TOL, 500, None).is_err());
    assert!(solve(0.5, 100, 300.0, TOL, 500, None).is_err());
    assert!(solve(0.5, 400, 300.0, 0.0, 500, None).is_err());
}

#[test]
fn running_out_of_iterations_returns_the_last_iterate() {
    match solve(0.5, 400, 300.0, TOL, 3, None) {
        Err(Error::MaxIterExceeded { model, report }) => {
            assert_eq!(report.iterations, 3);
            assert_eq!(model.lambda.len(), 401);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn persisted_model_checks_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let m = solved(0.25);
    save_model(m, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(&back, m);
    assert_eq!(check_e1(&back, 0.5).unwrap(), check_e1(m, 0.5).unwrap());
}

#[test]
fn old_format_version_is_refused() {
    let text = to_document(solved(0.0)).unwrap().replacen("\"format_version\": 1", "\"format_version\": 0", 1);
    assert!(matches!(from_document(&text), Err(Error::FormatVersionMismatch { found: 0, expected: 1 })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn normalization_undoes_any_rescale(log_kappa in -5.0f64..5.0, log_mu in -0.7f64..0.7) {
        let m = BalancedModel::exponential(400, 300.0);
        let moved = BalancedModel {
            lambda: m.lambda.iter().enumerate().map(|(i, l)| l + log_kappa + i as f64 * log_mu).collect(),
            ..m.clone()
        };
        let back = finalize_normalization(&moved);
        for i in 0..=150 {
            prop_assert!((back.lambda[i] - m.lambda[i]).abs() < 1e-8);
        }
    }
}
