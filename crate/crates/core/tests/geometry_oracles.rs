//! Tensor calculus checked against independent numerical oracles.

use cotangent_lab::catalog;
use cotangent_lab::classify::sample_box;
use cotangent_lab::geometry::{
    covariant_derivative_bivector, derivation_extension, increasing_tuples, lie_derivative_pi, n_tensor,
    schouten_pi_pi, wedge3_matrix, BivectorField, HamiltonianSystem, VectorField,
};
use cotangent_lab::paths::flow_with_tangent;
use cotangent_lab::sampling::{random_connection, random_quadratic, rng};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Central differences of the coefficient matrix.
fn fd_gradient(pi: &BivectorField, p: &[f64], h: f64) -> Vec<DMatrix<f64>> {
    (0..p.len())
        .map(|l| {
            let mut plus = p.to_vec();
            let mut minus = p.to_vec();
            plus[l] += h;
            minus[l] -= h;
            (pi.matrix_at(&plus).unwrap() - pi.matrix_at(&minus).unwrap()) / (2.0 * h)
        })
        .collect()
}

#[test]
fn schouten_is_twice_the_jacobiator_of_coordinate_brackets() {
    let mut r = rng(1);
    for id in catalog::IDS {
        let s = catalog::load(id).unwrap();
        let n = s.chart.dim();
        let bracket = schouten_pi_pi(&s.pi);
        for p in sample_box(&s.region(), 10, &mut r) {
            let pm = s.pi.matrix_at(&p).unwrap();
            let grad = fd_gradient(&s.pi, &p, 1e-5);
            // {x_i, {x_j, x_k}} = Σ_l π^{il} ∂_l π^{jk}
            let nested = |i: usize, j: usize, k: usize| (0..n).map(|l| pm[(i, l)] * grad[l][(j, k)]).sum::<f64>();
            for t in increasing_tuples(n, 3) {
                let (i, j, k) = (t[0], t[1], t[2]);
                let jac = nested(i, j, k) + nested(j, k, i) + nested(k, i, j);
                let got = bracket.get(&t).eval(&p).unwrap();
                assert!((got - 2.0 * jac).abs() <= 1e-6 * jac.abs().max(1.0), "{id} {t:?} at {p:?}: {got} vs 2·{jac}");
            }
        }
    }
}

#[test]
fn lie_derivative_matches_the_flow_pullback() {
    let mut r = rng(2);
    for id in catalog::IDS {
        let s = catalog::load(id).unwrap();
        let h = random_quadratic(&s.chart, 1.0, &mut r);
        let fields = [
            HamiltonianSystem::new(&s.pi, &h).unwrap().xh().clone(),
            VectorField::new(&s.chart, (0..s.chart.dim()).map(|_| random_quadratic(&s.chart, 1.0, &mut r)).collect()).unwrap(),
        ];
        for x in &fields {
            let lie = lie_derivative_pi(&s.pi, x).unwrap();
            for p in sample_box(&[(-0.5, 0.5); 4][..s.chart.dim()], 3, &mut r) {
                // (φ_t^* π)_p = Φ_t⁻¹ π(φ_t p) Φ_t⁻ᵀ, differentiated at t = 0
                let pull = |t: f64| {
                    let (q, phi) = flow_with_tangent(x, &p, t, 16).unwrap().pop().unwrap();
                    let inv = phi.try_inverse().unwrap();
                    &inv * s.pi.matrix_at(q.as_slice()).unwrap() * inv.transpose()
                };
                let dt = 1e-3;
                let fd = (pull(dt) - pull(-dt)) / (2.0 * dt);
                let exact = lie.matrix_at(&p).unwrap();
                assert!((&fd - &exact).amax() <= 1e-5 * exact.amax().max(1.0), "{id} at {p:?}:\n{fd}\n{exact}");
            }
        }
    }
}

#[test]
fn hamiltonian_fields_preserve_poisson_structures() {
    let mut r = rng(3);
    for id in catalog::POISSON_IDS {
        let s = catalog::load(id).unwrap();
        let h = random_quadratic(&s.chart, 1.0, &mut r);
        let sys = HamiltonianSystem::new(&s.pi, &h).unwrap();
        for p in sample_box(&s.region(), 20, &mut r) {
            assert!(sys.lie_derivative().matrix_at(&p).unwrap().amax() < 1e-12, "{id}");
        }
    }
    // and fail to on a field with nonzero Schouten bracket
    let s = catalog::load("r3_nonfoliated").unwrap();
    assert!(s.system.lie_derivative().matrix_at(&[0.3, 0.2, 0.1]).unwrap().amax() > 0.1);
}

#[test]
fn constant_coefficients_in_three_dimensions() {
    // π = ∂x∧∂y with v^i = π^{ij} ξ_j sends dy to ∂x
    let s = catalog::load("r3_nonfoliated").unwrap();
    let flat = BivectorField::parse_upper(&s.chart, &[vec!["1", "0"], vec!["0"]]).unwrap();
    let v = flat.matrix_at(&[0.0; 3]).unwrap() * DVector::from_column_slice(&[0.0, 1.0, 0.0]);
    assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0]);
    assert!(schouten_pi_pi(&flat).values_at(&[0.4, 0.1, 0.2]).unwrap().iter().all(|v| *v == 0.0));
}

fn antisym(n: usize, vals: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            m[(i, j)] = vals[k];
            m[(j, i)] = -vals[k];
            k += 1;
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wedge3_matches_naive_contraction(pv in prop::collection::vec(-2.0f64..2.0, 10), phiv in prop::collection::vec(-2.0f64..2.0, 4)) {
        let n = 4;
        let p = antisym(n, &pv);
        let tuples = increasing_tuples(n, 3);
        // fully antisymmetric φ from its increasing components
        let phi = |a: usize, b: usize, c: usize| -> f64 {
            if a == b || b == c || a == c {
                return 0.0;
            }
            let mut idx = [a, b, c];
            let mut sign = 1.0;
            for i in 0..3 {
                for j in 0..2 - i {
                    if idx[j] > idx[j + 1] {
                        idx.swap(j, j + 1);
                        sign = -sign;
                    }
                }
            }
            let k = tuples.iter().position(|t| t[..] == idx[..]).unwrap();
            sign * phiv[k]
        };
        let got = wedge3_matrix(&p) * DVector::from_column_slice(&phiv);
        for (r, t) in tuples.iter().enumerate() {
            let mut naive = 0.0;
            for a in 0..n { for b in 0..n { for c in 0..n {
                naive += p[(t[0], a)] * p[(t[1], b)] * p[(t[2], c)] * phi(a, b, c);
            }}}
            prop_assert!((got[r] - naive).abs() < 1e-10);
        }
    }

    #[test]
    fn hamiltonian_is_conserved_pointwise(seed in 0u64..1000, k in 0usize..7) {
        let mut r = rng(seed);
        let s = catalog::load(catalog::IDS[k]).unwrap();
        let h = random_quadratic(&s.chart, 1.0, &mut r);
        let sys = HamiltonianSystem::new(&s.pi, &h).unwrap();
        let p = sample_box(&s.region(), 1, &mut r).pop().unwrap();
        let dh = sys.dh_at(&p).unwrap();
        let x = sys.xh().value_at(&p).unwrap();
        prop_assert!(dh.dot(&x).abs() <= 1e-12 * dh.norm() * x.norm() + 1e-14);
    }

    #[test]
    fn coefficients_and_bracket_are_antisymmetric(seed in 0u64..1000, k in 0usize..7) {
        let mut r = rng(seed);
        let s = catalog::load(catalog::IDS[k]).unwrap();
        let p = sample_box(&s.region(), 1, &mut r).pop().unwrap();
        let m = s.pi.matrix_at(&p).unwrap();
        prop_assert_eq!(&m, &(-m.transpose()));
        let n = s.chart.dim();
        let bracket = schouten_pi_pi(&s.pi);
        for t in increasing_tuples(n, 3) {
            let v = bracket.get(&t).eval(&p).unwrap();
            let swapped = bracket.get(&[t[1], t[0], t[2]]).eval(&p).unwrap();
            let cycled = bracket.get(&[t[1], t[2], t[0]]).eval(&p).unwrap();
            prop_assert_eq!(v, -swapped);
            prop_assert_eq!(v, cycled);
        }
        prop_assert!(bracket.get(&[0, 0, 1.min(n - 1)]).is_zero());
    }

    #[test]
    fn derivation_identity_for_random_connections(seed in 0u64..1000, k in 0usize..7, torsion_free in any::<bool>()) {
        let mut r = rng(seed);
        let s = catalog::load(catalog::IDS[k]).unwrap();
        let conn = random_connection(&s.chart, 0.5, torsion_free, &mut r).unwrap();
        let u = VectorField::new(&s.chart, (0..s.chart.dim()).map(|_| random_quadratic(&s.chart, 1.0, &mut r)).collect()).unwrap();
        let p = sample_box(&s.region(), 1, &mut r).pop().unwrap();
        let pm = s.pi.matrix_at(&p).unwrap();
        let lie = lie_derivative_pi(&s.pi, &u).unwrap().matrix_at(&p).unwrap();
        let cov = covariant_derivative_bivector(&s.pi, &conn, &p, &u.value_at(&p).unwrap()).unwrap();
        let nbar = derivation_extension(&n_tensor(&u, &conn, &p).unwrap(), &pm);
        prop_assert!((&lie - (&cov - &nbar)).amax() <= 1e-10 * cov.amax().max(1.0));
    }
}
