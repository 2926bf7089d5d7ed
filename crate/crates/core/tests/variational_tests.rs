use cotangent_lab::catalog;
use cotangent_lab::error::Error;
use cotangent_lab::paths::{Admissibility, CotangentPath};
use cotangent_lab::sampling::{random_connection, random_smooth_path, random_variation, rng};
use cotangent_lab::scenario::Scenario;
use cotangent_lab::variational::{
    clef_residual, compare_differentials, dh_ode_check, differential_by_parts, differential_exact, differential_fd,
    lagrangian, stationary_residual, stationary_solve, StationarySolveConfig,
};
use nalgebra::DVector;
use proptest::prelude::*;

#[test]
fn functional_on_a_straight_path() {
    // X_H = (p, −q); on x = (t, 0), a = (0, 1) the integrand is ⟨X_H − ẋ, a⟩ = −t
    let s = catalog::load("symplectic2d").unwrap();
    let alpha = CotangentPath::from_fn(
        64,
        |t| DVector::from_column_slice(&[t, 0.0]),
        |_| DVector::from_column_slice(&[0.0, 1.0]),
    )
    .unwrap();
    assert!((lagrangian(&s.system, &alpha).unwrap() + 0.5).abs() < 1e-14);
}

#[test]
fn stationary_paths_are_critical_for_fixed_endpoint_variations() {
    let mut r = rng(1);
    for id in ["linear_so3", "conformal_times_symplectic", "r4_weak_i1"] {
        let s = catalog::load(id).unwrap();
        let n = s.chart.dim();
        let m: Vec<f64> = (0..n).map(|i| 0.3 - 0.1 * i as f64).collect();
        let a0: Vec<f64> = (0..n).map(|i| 0.5 + 0.2 * i as f64).collect();
        let alpha = stationary_solve(&s.system, &s.connection, &StationarySolveConfig { m, a0, steps: 512 }).unwrap();
        for class in [Admissibility::FixedEndpoints, Admissibility::InitiallyCotangent] {
            let v = random_variation(n, 512, class, 1.0, &mut r).unwrap();
            let fd = differential_fd(&s.system, &alpha, &v, 1e-5).unwrap();
            assert!(fd.abs() <= 1e-6 * v.norm(), "{id} {class:?}: {fd}");
        }
        // free variations pick up the boundary term
        let v = random_variation(n, 512, Admissibility::Free, 1.0, &mut r).unwrap();
        assert!(differential_fd(&s.system, &alpha, &v, 1e-5).unwrap().abs() > 1e-3);
    }
}

#[test]
fn covector_equation_is_solved_to_discretisation_error() {
    let s = catalog::load("conformal_times_symplectic").unwrap();
    let conn = random_connection(&s.chart, 0.3, false, &mut rng(2)).unwrap();
    let cfg = StationarySolveConfig { m: vec![0.1, 0.2, -0.3, 0.4], a0: vec![1.0, -0.5, 0.25, 0.0], steps: 1024 };
    let alpha = stationary_solve(&s.system, &conn, &cfg).unwrap();
    let res = stationary_residual(&s.system, &conn, &alpha).unwrap();
    assert!(res.base < 1e-5 && res.covector < 1e-5, "{res:?}");
    let clef = clef_residual(&s.system, &conn, &alpha).unwrap();
    assert!(clef.full_sup() < 1e-5, "{}", clef.full_sup());
}

#[test]
fn dh_transport_needs_a_torsion_free_connection() {
    let s = catalog::load("linear_so3").unwrap();
    let torsion = random_connection(&s.chart, 0.3, false, &mut rng(3)).unwrap();
    assert!(dh_ode_check(&s.system, &torsion, &[0.1, 0.2, 0.3], 64).is_err());
    let ok = dh_ode_check(&s.system, &s.connection, &[0.1, 0.2, 0.3], 256).unwrap();
    assert!(ok.ode_residual < 1e-12 && ok.fd_residual < 1e-4, "{ok:?}");
}

#[test]
fn leaving_the_chart_is_reported() {
    let src = r#"{"schema": "cotangent-lab/scenario/v1", "name": "boxed",
        "chart": {"dim": 2, "coords": ["q", "p"], "bounds": [[-0.5, 0.5], [-0.5, 0.5]]},
        "pi": [["1"]], "hamiltonian": "p"}"#;
    let s = Scenario::from_json(src).unwrap();
    let cfg = StationarySolveConfig { m: vec![0.0, 0.0], a0: vec![0.0, 1.0], steps: 64 };
    assert!(matches!(stationary_solve(&s.system, &s.connection, &cfg), Err(Error::LeftChart { .. })));
}

#[test]
fn finite_difference_step_is_range_checked() {
    let s = catalog::load("symplectic2d").unwrap();
    let mut r = rng(4);
    let alpha = random_smooth_path(&[0.0, 0.0], 0.2, 1.0, 64, &mut r).unwrap();
    let v = random_variation(2, 64, Admissibility::Free, 1.0, &mut r).unwrap();
    assert!(differential_fd(&s.system, &alpha, &v, 1e-1).is_err());
    assert!(differential_fd(&s.system, &alpha, &v, 1e-9).is_err());
}

#[test]
fn odd_grids_are_rejected() {
    let s = catalog::load("symplectic2d").unwrap();
    let alpha = random_smooth_path(&[0.0, 0.0], 0.2, 1.0, 65, &mut rng(5)).unwrap();
    assert!(lagrangian(&s.system, &alpha).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_differential_matches_finite_differences(seed in 0u64..10_000, k in 0usize..7, class in 0usize..3) {
        let mut r = rng(seed);
        let s = catalog::load(catalog::IDS[k]).unwrap();
        let n = s.chart.dim();
        let class = [Admissibility::Free, Admissibility::FixedEndpoints, Admissibility::InitiallyCotangent][class];
        let alpha = random_smooth_path(&vec![0.1; n], 0.3, 1.0, 128, &mut r).unwrap();
        let v = random_variation(n, 128, class, 1.0, &mut r).unwrap();
        let rep = compare_differentials(&s.system, &s.connection, &alpha, &v, 1e-5).unwrap();
        prop_assert!(rep.relative_error <= 1e-6, "{:?}", rep);
        let parts = differential_by_parts(&s.system, &s.connection, &alpha, &v).unwrap();
        prop_assert!((parts - rep.exact).abs() <= 1e-5 * rep.exact.abs().max(1.0));
        let conn = random_connection(&s.chart, 0.5, false, &mut r).unwrap();
        let other = differential_exact(&s.system, &conn, &alpha, &v).unwrap();
        prop_assert!((other - rep.exact).abs() <= 1e-10 * rep.exact.abs().max(1.0));
    }
}
