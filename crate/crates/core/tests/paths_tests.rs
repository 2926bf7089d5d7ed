use cotangent_lab::catalog;
use cotangent_lab::geometry::{Chart, ConnectionSpec, VectorField};
use cotangent_lab::paths::{
    derivative_o2, flow, is_tangent_integral_curve, simpson, Admissibility, CotangentPath, PathVariation, TangentPath,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn harmonic_flow_is_a_rotation() {
    let s = catalog::load("symplectic2d").unwrap();
    let samples = flow(s.system.xh(), &[1.0, 0.0], 2.0, 1024).unwrap();
    for (i, y) in samples.iter().enumerate() {
        let t = 2.0 * i as f64 / 1024.0;
        assert!((y[0] - t.cos()).abs() < 1e-11 && (y[1] + t.sin()).abs() < 1e-11, "t = {t}: {y}");
    }
}

#[test]
fn flow_is_reversible() {
    let s = catalog::load("linear_so3").unwrap();
    let p = [0.4, -0.3, 0.6];
    let forward = flow(s.system.xh(), &p, 1.5, 256).unwrap().pop().unwrap();
    let back = flow(s.system.xh(), forward.as_slice(), -1.5, 256).unwrap().pop().unwrap();
    assert!((back - DVector::from_column_slice(&p)).amax() < 1e-9);
}

#[test]
fn pushforward_by_a_linear_flow_is_a_tangent_integral_curve() {
    let chart = Chart::new(["a", "b", "c"]).unwrap();
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.5, -1.0, 0.2, 0.0, 0.3, 0.0, -0.4]);
    let comps = (0..3)
        .map(|i| chart.parse(&format!("{}*a + {}*b + {}*c", a[(i, 0)], a[(i, 1)], a[(i, 2)])).unwrap())
        .collect();
    let field = VectorField::new(&chart, comps).unwrap();
    let conn = ConnectionSpec::flat(&chart);
    let x0 = DVector::from_column_slice(&[0.2, -0.1, 0.3]);
    let b0 = DVector::from_column_slice(&[1.0, 0.5, -0.5]);
    let n = 1024;
    let at = |i: usize| (&a * (i as f64 / n as f64)).exp();
    let xs: Vec<_> = (0..=n).map(|i| at(i) * &x0).collect();
    let bs: Vec<_> = (0..=n).map(|i| at(i) * &b0).collect();
    let good = TangentPath::new(xs.clone(), bs.clone()).unwrap();
    let check = is_tangent_integral_curve(&good, &field, &conn, 1e-5).unwrap();
    assert!(check.passed, "{check:?}");

    let bent: Vec<_> = bs.iter().enumerate().map(|(i, b)| b + DVector::from_element(3, 0.1 * i as f64 / n as f64)).collect();
    let bad = TangentPath::new(xs, bent).unwrap();
    assert!(!is_tangent_integral_curve(&bad, &field, &conn, 1e-5).unwrap().passed);
}

#[test]
fn simpson_integrates_cubics_exactly_and_needs_even_n() {
    let h = 0.1;
    let f: Vec<f64> = (0..=10).map(|i| (i as f64 * h).powi(3) - 2.0 * (i as f64 * h)).collect();
    assert!((simpson(&f, h).unwrap() - (0.25 - 1.0)).abs() < 1e-14);
    assert!(simpson(&f[..10], h).is_err());
}

#[test]
fn second_order_stencil_is_exact_on_quadratics() {
    let h = 0.125;
    let xs: Vec<_> = (0..=8).map(|i| DVector::from_element(1, (i as f64 * h).powi(2))).collect();
    for (i, d) in derivative_o2(&xs, h).iter().enumerate() {
        assert!((d[0] - 2.0 * i as f64 * h).abs() < 1e-13);
    }
}

#[test]
fn variations_are_validated_against_their_class() {
    let n = 8;
    let ones = vec![DVector::from_element(2, 1.0); n + 1];
    let zeros = vec![DVector::zeros(2); n + 1];
    assert!(PathVariation::new(ones.clone(), zeros.clone(), Admissibility::Free).is_ok());
    assert!(PathVariation::new(ones.clone(), zeros.clone(), Admissibility::FixedEndpoints).is_err());
    assert!(PathVariation::new(zeros.clone(), ones, Admissibility::InitiallyCotangent).is_err());
    assert!(PathVariation::new(zeros.clone(), zeros, Admissibility::InitiallyCotangent).is_ok());
}

#[test]
fn short_or_non_finite_paths_are_rejected() {
    let v = |x: f64| DVector::from_element(2, x);
    assert!(CotangentPath::new(vec![v(0.0); 4], vec![v(0.0); 4]).is_err());
    let mut xs = vec![v(0.0); 9];
    xs[3] = v(f64::NAN);
    assert!(CotangentPath::new(xs, vec![v(0.0); 9]).is_err());
}

fn path_from(values: &[f64]) -> CotangentPath {
    let n = 8;
    let pick = |i: usize, k: usize| values[(i * 4 + k) % values.len()];
    CotangentPath::new(
        (0..=n).map(|i| DVector::from_column_slice(&[pick(i, 0), pick(i, 1)])).collect(),
        (0..=n).map(|i| DVector::from_column_slice(&[pick(i, 2), pick(i, 3)])).collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn csv_and_json_round_trips_are_exact(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..40)) {
        let chart = Chart::new(["q", "p"]).unwrap();
        let path = path_from(&values);
        let (names, back) = CotangentPath::from_json(&path.to_json(&chart).unwrap()).unwrap();
        prop_assert_eq!(names, vec!["q".to_string(), "p".to_string()]);
        prop_assert_eq!(&back, &path);
        let mut buf = Vec::new();
        path.write_csv(&chart, &mut buf).unwrap();
        let (_, back) = CotangentPath::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &path);
    }
}
