use proptest::prelude::*;
use qbm_core::bath::BathSpec;
use qbm_core::decoherence::{EvolutionContext, EvolutionOptions};
use qbm_core::green::solve_green;
use qbm_core::moments::{
    compute_moments, fit_derivative_factor, high_t_moments_ohmic_exact, pointer_basis, MomentSeries,
};

fn series(p: f64, zeta: f64, beta: f64, horizon: f64) -> MomentSeries {
    let spec = BathSpec::exponential(p, zeta, beta, 20.0).unwrap();
    let opts = EvolutionOptions {
        horizon: Some(horizon),
        ..EvolutionOptions::default()
    };
    EvolutionContext::build(&spec, opts).unwrap().moments
}

fn assert_psd(s: &MomentSeries) {
    for i in 0..s.len() {
        let m = s.matrix(i);
        let tol = -1e-12 * m.trace().abs().max(f64::MIN_POSITIVE);
        assert!(m.min_eigenvalue() >= tol, "t = {}: {:?}", s.t[i], m);
        assert!(s.a[i] >= 0.0 && s.b[i] >= 0.0);
    }
}

#[test]
fn moment_matrix_is_psd_across_the_test_matrix() {
    for p in [0.5, 1.0, 1.5] {
        for zeta in [0.1, 1.0] {
            for beta in [1.0, 0.01] {
                assert_psd(&series(p, zeta, beta, 10.0));
            }
        }
    }
}

#[test]
fn high_temperature_ohmic_position_variance() {
    let spec = BathSpec::exponential(1.0, 1.0, 0.01, 20.0).unwrap();
    let green = solve_green(&spec, 4.0, 800).unwrap();
    let s = compute_moments(&green, &spec).unwrap();
    let a = s.at(3.0).unwrap().a;
    let oracle = high_t_moments_ohmic_exact(1.0, 3.0).unwrap().a / spec.beta;
    assert!((a / oracle - 1.0).abs() < 0.1, "A(3) = {a}, white noise {oracle}");
}

#[test]
fn position_growth_is_twice_the_covariance() {
    for p in [0.5, 1.0, 1.5] {
        let s = series(p, 1.0, 0.01, 100.0);
        let kappa = fit_derivative_factor(&s).unwrap();
        assert!((kappa - 2.0).abs() < 0.01 * 2.0, "p = {p}: kappa = {kappa}");
        let h = s.spacing();
        let n = s.len();
        for i in n / 2..n - 1 {
            let a_dot = (s.a[i + 1] - s.a[i - 1]) / (2.0 * h);
            assert!((a_dot / (kappa * s.c[i]) - 1.0).abs() < 0.01, "p = {p}, t = {}", s.t[i]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pointer_covariance_has_unit_determinant(b in 1e-3..1e3f64) {
        let basis = pointer_basis(b).unwrap();
        prop_assert!((basis.gamma_inf.det() - 1.0).abs() <= f64::EPSILON);
        prop_assert_eq!(basis.gamma_inf.a, 1.0 / basis.gamma_inf.d);
        prop_assert_eq!(basis.gamma_inf.b, 0.0);
        prop_assert!((basis.alpha_sq + 0.5 * b.ln()).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn moments_psd_for_random_baths(p in 0.3..1.7f64, zeta in 0.05..2.0f64, beta in 0.01..5.0f64) {
        let s = series(p, zeta, beta, 5.0);
        prop_assert_eq!((s.a[0], s.b[0], s.c[0]), (0.0, 0.0, 0.0));
        assert_psd(&s);
    }
}
