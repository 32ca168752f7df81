use proptest::prelude::*;
use qbm_core::bath::BathSpec;
use qbm_core::decoherence::{
    find_tc, pointer_weight, positivity_criterion, propagate, propagate_gaussian, EvolutionContext, EvolutionOptions,
};
use qbm_core::linalg::Mat2;
use qbm_core::moments::pointer_basis;
use qbm_core::phase_space::{cat_wigner, gaussian_wigner, GaussianState, GridSpec};
use qbm_core::Error;

fn ctx(p: f64, zeta: f64, beta: f64, horizon: f64) -> EvolutionContext {
    let spec = BathSpec::exponential(p, zeta, beta, 20.0).unwrap();
    let opts = EvolutionOptions {
        horizon: Some(horizon),
        ..EvolutionOptions::default()
    };
    EvolutionContext::build(&spec, opts).unwrap()
}

#[test]
fn propagation_at_zero_is_identity() {
    let c = ctx(1.0, 1.0, 0.1, 2.0);
    let w = cat_wigner(2.0, Mat2::diag(0.5, 0.5), GridSpec::symmetric(128, 8.0, 8.0).unwrap()).unwrap();
    let out = propagate(&w, &c, 0.0).unwrap();
    assert_eq!(out.spec, w.spec);
    assert_eq!(out.l1_distance(&w).unwrap(), 0.0);
}

#[test]
fn localization_is_a_state_independent_crossing() {
    let c = ctx(1.0, 1.0, 0.1, 5.0);
    let report = find_tc(&c).unwrap();
    let tc = report.t_c.expect("t_c inside the horizon");
    assert!(tc > 0.0 && tc < c.horizon);
    assert!(c.criterion_eigenvalue(0.5 * tc).unwrap() < 0.0);
    for k in 1..=10 {
        let t = tc + (c.horizon - tc) * k as f64 / 10.0;
        assert!(c.criterion_eigenvalue(t).unwrap() >= -c.tolerance(), "t = {t}");
    }
}

#[test]
fn pointer_states_stay_broader_than_half_the_pointer_covariance() {
    let c = ctx(0.5, 1.0, 0.5, 6.0);
    let tc = find_tc(&c).unwrap().t_c.unwrap();
    let state = GaussianState::pointer([1.0, -0.5], &c.basis);
    for k in 0..=8 {
        let t = tc + (c.horizon - tc) * k as f64 / 8.0;
        let out = propagate_gaussian(&state, &c, t).unwrap();
        let excess = out.sigma.sub(&c.basis.gamma_inf.scale(0.5));
        assert!(excess.min_eigenvalue() >= -c.tolerance(), "t = {t}: {excess:?}");
    }
}

#[test]
fn momentum_variance_relaxes_to_its_stationary_value() {
    // the moment quadrature is second order in the step; 0.25/ω_c lands within 4e-4
    let spec = BathSpec::exponential(1.0, 1.0, 0.1, 20.0).unwrap();
    let opts = EvolutionOptions {
        horizon: Some(20.0),
        step: Some(0.25 / 20.0),
        ..EvolutionOptions::default()
    };
    let c = EvolutionContext::build(&spec, opts).unwrap();
    let late = propagate_gaussian(&GaussianState::vacuum(), &c, 20.0).unwrap();
    let b_inf = c.basis.b_inf;
    assert!((late.sigma.d / b_inf - 1.0).abs() < 1e-3, "Σpp = {}, B∞ = {b_inf}", late.sigma.d);
    assert!((b_inf * c.spec.beta - 1.0).abs() < 0.05);
}

#[test]
fn pointer_weight_is_undefined_before_and_nonnegative_after() {
    let c = ctx(1.0, 1.0, 0.1, 5.0);
    let tc = find_tc(&c).unwrap().t_c.unwrap();
    let w = cat_wigner(2.0, Mat2::diag(0.5, 0.5), GridSpec::symmetric(128, 8.0, 8.0).unwrap()).unwrap();
    assert!(matches!(pointer_weight(&w, &c, 0.5 * tc), Err(Error::NotYetDefined { .. })));
    let w1 = pointer_weight(&w, &c, 2.0 * tc).unwrap();
    assert!(w1.min_value() >= -1e-9 * w1.max_value());
    assert!((w1.integral() - 1.0).abs() < 1e-4);
}

#[test]
fn gaussian_pointer_weight_is_nonnegative_long_after_localization() {
    let c = ctx(1.5, 1.0, 1.0, 8.0);
    let tc = find_tc(&c).unwrap().t_c.unwrap();
    let state = GaussianState::new([0.5, 0.0], Mat2::diag(0.25, 1.0)).unwrap();
    let w = gaussian_wigner(&state, GridSpec::symmetric(128, 8.0, 8.0).unwrap()).unwrap();
    let w1 = pointer_weight(&w, &c, c.horizon.min(4.0 * tc)).unwrap();
    assert!(w1.min_value() >= -1e-9 * w1.max_value());
}

#[test]
fn weak_coupling_is_nearly_a_free_shear() {
    let c = ctx(1.0, 1e-4, 1.0, 2.0);
    let state = GaussianState::new([0.0, 1.0], Mat2::diag(0.5, 0.5)).unwrap();
    let out = propagate_gaussian(&state, &c, 1.0).unwrap();
    assert!((out.d[0] - 1.0).abs() < 1e-3 && (out.d[1] - 1.0).abs() < 1e-3, "{:?}", out.d);
    // free flight: Σxx(t) = Σxx + t² Σpp
    assert!((out.sigma.a - 1.0).abs() < 1e-2, "{:?}", out.sigma);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn criterion_accepts_pointer_covariance_plus_psd(
        b in 0.1..10.0f64, u in 0.0..2.0f64, v in 0.0..2.0f64, rho in -1.0..1.0f64,
    ) {
        let basis = pointer_basis(b).unwrap();
        let extra = Mat2::symmetric(u, rho * (u * v).sqrt(), v);
        let (ok, min_eig) = positivity_criterion(&basis.gamma_inf.scale(0.5).add(&extra), &basis).unwrap();
        prop_assert!(ok, "min eig {}", min_eig);
    }

    #[test]
    fn criterion_rejects_anything_narrower(b in 0.1..10.0f64, eps in 1e-6..0.1f64) {
        let basis = pointer_basis(b).unwrap();
        let m = basis.gamma_inf.scale(0.5).sub(&Mat2::diag(eps, 0.0));
        let (ok, min_eig) = positivity_criterion(&m, &basis).unwrap();
        prop_assert!(!ok);
        prop_assert!(min_eig < 0.0);
    }
}

#[test]
fn criterion_rejects_asymmetric_matrices() {
    let basis = pointer_basis(1.0).unwrap();
    let m = Mat2::new(1.0, 0.2, 0.0, 1.0);
    assert!(matches!(positivity_criterion(&m, &basis), Err(Error::Domain(_))));
}
