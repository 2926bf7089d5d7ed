use cotangent_lab::catalog;
use cotangent_lab::classify::{
    classify_points, jacobiator_in_image_at, rank_profile, sample_box, solve_c_h_at, weakly_foliated_at,
    DEFAULT_RANK_TOL,
};
use cotangent_lab::expr::ScalarExpr;
use cotangent_lab::geometry::{BivectorField, VectorField};
use cotangent_lab::sampling::{random_quadratic, rng};
use cotangent_lab::scenario::Scenario;
use nalgebra::DVector;
use proptest::prelude::*;

/// `π♯(Σ_a f_a dx_a)` as a vector field.
fn sharp_of(s: &Scenario, coeffs: &[ScalarExpr]) -> VectorField {
    let n = s.chart.dim();
    let comps = (0..n)
        .map(|i| (0..n).fold(ScalarExpr::zero(), |acc, a| acc + s.pi.get(i, a) * coeffs[a].clone()))
        .collect();
    VectorField::new(&s.chart, comps).unwrap()
}

/// Relative distance of `v` from the column space of `π♯_p`.
fn distance_from_image(s: &Scenario, p: &[f64], v: &DVector<f64>) -> f64 {
    let m = s.pi.matrix_at(p).unwrap();
    let svd = m.clone().svd(true, true);
    let eps = DEFAULT_RANK_TOL * svd.singular_values.max();
    let x = svd.solve(v, eps.max(f64::MIN_POSITIVE)).unwrap();
    (&m * x - v).norm() / v.norm().max(1.0)
}

#[test]
fn coordinate_test_implies_function_coefficient_brackets() {
    // brackets of π♯α, π♯β with arbitrary function coefficients stay in the image
    let mut r = rng(1);
    for id in ["r4_weak_i0", "r4_weak_i1", "conformal_times_symplectic", "linear_so3"] {
        let s = catalog::load(id).unwrap();
        let n = s.chart.dim();
        for _ in 0..5 {
            let f: Vec<_> = (0..n).map(|_| random_quadratic(&s.chart, 1.0, &mut r)).collect();
            let g: Vec<_> = (0..n).map(|_| random_quadratic(&s.chart, 1.0, &mut r)).collect();
            let bracket = sharp_of(&s, &f).bracket(&sharp_of(&s, &g));
            for p in sample_box(&s.region(), 10, &mut r) {
                assert!(weakly_foliated_at(&s.pi, &p, 1e-9).unwrap().holds);
                let v = bracket.value_at(&p).unwrap();
                assert!(distance_from_image(&s, &p, &v) < 1e-8, "{id} at {p:?}");
            }
        }
    }
}

#[test]
fn non_foliated_field_has_brackets_outside_the_image() {
    let s = catalog::load("r3_nonfoliated").unwrap();
    let mut r = rng(2);
    let dy = sharp_of(&s, &[ScalarExpr::zero(), ScalarExpr::one(), ScalarExpr::zero()]);
    let dz = sharp_of(&s, &[ScalarExpr::zero(), ScalarExpr::zero(), ScalarExpr::one()]);
    let b = dy.bracket(&dz);
    for p in sample_box(&s.region(), 20, &mut r) {
        assert!(distance_from_image(&s, &p, &b.value_at(&p).unwrap()) > 0.1);
        let verdict = weakly_foliated_at(&s.pi, &p, 1e-9).unwrap();
        assert!(!verdict.holds && verdict.failing_pairs.contains(&(1, 2)));
    }
}

#[test]
fn jacobiator_lies_in_the_image_off_the_axis_only_for_weak_fields() {
    let r4 = catalog::load("r4_weak_i0").unwrap();
    let solve = jacobiator_in_image_at(&r4.pi, &[0.5, -0.3, 0.1, 0.9], 1e-9).unwrap();
    assert!(solve.holds, "{solve:?}");
    let r3 = catalog::load("r3_nonfoliated").unwrap();
    assert!(!jacobiator_in_image_at(&r3.pi, &[0.5, -0.3, 0.1], 1e-9).unwrap().holds);
}

#[test]
fn quadratic_field_degenerates_only_at_the_origin() {
    let s = catalog::load("pia_pib_pair").unwrap();
    let prof = rank_profile(&s.pi, &[(-1.0, 1.0), (-1.0, 1.0)], &[5, 5], DEFAULT_RANK_TOL).unwrap();
    for ((p, rank), regular) in prof.points.iter().zip(&prof.ranks).zip(&prof.regular) {
        let at_origin = p.iter().all(|c| *c == 0.0);
        assert_eq!(*rank, if at_origin { 0 } else { 2 });
        let next_to_origin = p.iter().map(|c| c.abs()).sum::<f64>() <= 0.5;
        assert_eq!(*regular, !next_to_origin, "{p:?}");
    }
    // the companion field has the same pointwise rank everywhere sampled
    let pb = catalog::pi_b().unwrap();
    for p in &prof.points {
        let ra = cotangent_lab::classify::numerical_rank(&s.pi.matrix_at(p).unwrap(), DEFAULT_RANK_TOL);
        let rb = cotangent_lab::classify::numerical_rank(&pb.matrix_at(p).unwrap(), DEFAULT_RANK_TOL);
        assert_eq!(ra, rb);
    }
}

#[test]
fn lie_derivative_factorises_through_invertible_fields() {
    let s = catalog::load("conformal_times_symplectic").unwrap();
    let mut r = rng(3);
    for p in sample_box(&s.region(), 10, &mut r) {
        let c = solve_c_h_at(&s.system, &p, 1e-9).unwrap();
        assert!(c.holds, "{}", c.residual);
    }
}

#[test]
fn classification_records_witness_names() {
    let s = catalog::load("r3_nonfoliated").unwrap();
    let res = classify_points(&s.pi, &[vec![0.0, 0.0, 0.0]], 1e-9).unwrap();
    let w = res.records[0].witness.as_ref().unwrap();
    assert!(w.contains(&("dy".to_string(), "dz".to_string())));
    assert!(!res.summary.poisson && !res.summary.weakly_foliated);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn verdicts_are_invariant_under_constant_rescaling(k in 0usize..7, c in prop_oneof![-3.0f64..-0.25, 0.25f64..3.0], seed in 0u64..100) {
        let s = catalog::load(catalog::IDS[k]).unwrap();
        let scaled: BivectorField = s.pi.scaled(&ScalarExpr::constant(c)).unwrap();
        let points = sample_box(&s.region(), 5, &mut rng(seed));
        let a = classify_points(&s.pi, &points, 1e-9).unwrap();
        let b = classify_points(&scaled, &points, 1e-9).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            prop_assert_eq!(ra.rank, rb.rank);
            prop_assert_eq!(ra.weakly_foliated, rb.weakly_foliated);
            prop_assert!((rb.poisson_residual - c * c * ra.poisson_residual).abs() <= 1e-9 * (1.0 + rb.poisson_residual));
        }
    }
}
