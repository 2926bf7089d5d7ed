use cotangent_lab::catalog;
use cotangent_lab::sampling::{random_smooth_path, rng};
use cotangent_lab::sigma::{build_tilde_alpha, ks_lagrangian, verify_equality, SquareMorphism, SQUARE_SCHEMA};
use nalgebra::DVector;

#[test]
fn worldsheet_functional_of_an_explicit_square() {
    // X(t, y) = (t, y), β_t = 0, β_y = (1, 0): only −∫∫⟨β_y, ∂_t X⟩ = −1 survives
    let s = catalog::load("symplectic2d").unwrap();
    let m = 8;
    let grid = |f: &dyn Fn(f64, f64) -> DVector<f64>| -> Vec<Vec<DVector<f64>>> {
        (0..=m)
            .map(|i| (0..=m).map(|j| f(i as f64 / m as f64, j as f64 / m as f64)).collect())
            .collect()
    };
    let x = grid(&|t, y| DVector::from_column_slice(&[t, y]));
    let bt = grid(&|_, _| DVector::zeros(2));
    let by = grid(&|_, _| DVector::from_column_slice(&[1.0, 0.0]));
    let square = SquareMorphism::new(x, bt, by).unwrap();
    let ks = ks_lagrangian(&s.pi, &square).unwrap();
    assert!((ks.total + 1.0).abs() < 1e-14 && ks.first.abs() < 1e-14 && ks.third.abs() < 1e-14);
}

#[test]
fn flow_extension_reproduces_the_path_functional() {
    let s = catalog::load("symplectic2d").unwrap();
    let alpha = random_smooth_path(&[0.3, -0.2], 0.3, 1.0, 256, &mut rng(1)).unwrap();
    let rep = verify_equality(&s.system, &alpha, 64, 4).unwrap();
    assert!(rep.abs_gap < 1e-6, "{rep:?}");
    assert!(rep.first_integrand_sup < 1e-6 && rep.y_spread < 1e-5, "{rep:?}");
}

#[test]
fn square_edge_at_y_zero_is_the_path() {
    let s = catalog::load("linear_so3").unwrap();
    let alpha = random_smooth_path(&[0.1, 0.2, 0.3], 0.2, 1.0, 64, &mut rng(2)).unwrap();
    let square = build_tilde_alpha(&s.system, &alpha, 16, 2).unwrap();
    for i in 0..=16 {
        assert_eq!(square.x()[i][0], alpha.base()[4 * i]);
        assert_eq!(square.beta_y()[i][0], alpha.covectors()[4 * i]);
    }
    let doc: serde_json::Value = serde_json::from_str(&square.to_json()).unwrap();
    assert_eq!(doc["schema"], SQUARE_SCHEMA);
    assert_eq!(doc["intervals"], 16);
}

#[test]
fn square_size_must_divide_the_path() {
    let s = catalog::load("symplectic2d").unwrap();
    let alpha = random_smooth_path(&[0.0, 0.0], 0.2, 1.0, 64, &mut rng(3)).unwrap();
    assert!(build_tilde_alpha(&s.system, &alpha, 24, 2).is_err());
    assert!(build_tilde_alpha(&s.system, &alpha, 16, 0).is_err());
}
