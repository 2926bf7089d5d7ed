//! Seeded random draws of points, connections, paths and variations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::expr::ScalarExpr;
use crate::geometry::{Chart, ConnectionSpec};
use crate::paths::{Admissibility, CotangentPath, PathVariation};

/// The generator used for every seeded run.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sym<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    rng.gen_range(-scale..=scale)
}

/// Random polynomial of total degree at most two with coefficients in
/// `[-scale, scale]`.
pub fn random_quadratic<R: Rng>(chart: &Arc<Chart>, scale: f64, rng: &mut R) -> ScalarExpr {
    let n = chart.dim();
    let mut e = ScalarExpr::constant(sym(rng, scale));
    for i in 0..n {
        e = e + ScalarExpr::constant(sym(rng, scale)) * ScalarExpr::var(i);
        for j in i..n {
            e = e + ScalarExpr::constant(sym(rng, scale)) * ScalarExpr::var(i) * ScalarExpr::var(j);
        }
    }
    e
}

/// Connection with random quadratic Christoffel symbols; symmetric in the
/// lower indices when `torsion_free`.
pub fn random_connection<R: Rng>(
    chart: &Arc<Chart>,
    scale: f64,
    torsion_free: bool,
    rng: &mut R,
) -> Result<ConnectionSpec> {
    let n = chart.dim();
    let mut table: Vec<Option<ScalarExpr>> = vec![None; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let idx = k * n * n + i * n + j;
                let mirror = k * n * n + j * n + i;
                table[idx] = Some(match (&table[mirror], torsion_free && j < i) {
                    (Some(e), true) => e.clone(),
                    _ => random_quadratic(chart, scale, rng),
                });
            }
        }
    }
    ConnectionSpec::from_fn(chart, |k, i, j| table[k * n * n + i * n + j].clone().unwrap())
}

/// Smooth random path around `center`:
/// `x(t) = m + r (u t + v sin πt + w (t² − t))` and
/// `a(t) = s (p + q cos πt + r' t²)`.
pub fn random_smooth_path<R: Rng>(
    center: &[f64],
    radius: f64,
    covector_scale: f64,
    steps: usize,
    rng: &mut R,
) -> Result<CotangentPath> {
    let n = center.len();
    let draw = |rng: &mut R| DVector::from_fn(n, |_, _| sym(rng, 1.0));
    let (u, v, w) = (draw(rng), draw(rng), draw(rng));
    let (p, q, r) = (draw(rng), draw(rng), draw(rng));
    let m = DVector::from_column_slice(center);
    let pi = std::f64::consts::PI;
    CotangentPath::from_fn(
        steps,
        |t| &m + (&u * t + &v * (pi * t).sin() + &w * (t * t - t)) * radius,
        |t| (&p + &q * (pi * t).cos() + &r * (t * t)) * covector_scale,
    )
}

/// Random variation of the requested class.
///
/// Fixed endpoints use `γ0 = t(1−t)(g + g' t)`. Initially cotangent uses
/// `γ0 = t²(1−t)(g + g' t)`, `δ0 = t(d + d' t)`, with the sample at `t_1`
/// pinned to `γ0(t_2)/4` so the one-sided difference at `t = 0` vanishes.
pub fn random_variation<R: Rng>(
    n: usize,
    steps: usize,
    class: Admissibility,
    scale: f64,
    rng: &mut R,
) -> Result<PathVariation> {
    let draw = |rng: &mut R| DVector::from_fn(n, |_, _| sym(rng, scale));
    let (g0, g1, g2) = (draw(rng), draw(rng), draw(rng));
    let (d0, d1, d2) = (draw(rng), draw(rng), draw(rng));
    let ts: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let pi = std::f64::consts::PI;
    let mut gamma: Vec<DVector<f64>> = ts
        .iter()
        .map(|&t| match class {
            Admissibility::Free => &g0 + &g1 * t + &g2 * (pi * t).sin(),
            Admissibility::FixedEndpoints => (&g0 + &g1 * t) * (t * (1.0 - t)),
            Admissibility::InitiallyCotangent => (&g0 + &g1 * t) * (t * t * (1.0 - t)),
        })
        .collect();
    let delta: Vec<DVector<f64>> = ts
        .iter()
        .map(|&t| match class {
            Admissibility::InitiallyCotangent => (&d0 + &d1 * t) * t,
            _ => &d0 + &d1 * t + &d2 * (pi * t).cos(),
        })
        .collect();
    if class == Admissibility::InitiallyCotangent {
        gamma[1] = &gamma[2] / 4.0;
    }
    PathVariation::new(gamma, delta, class)
}

/// Orthonormal basis of `ker P` at relative threshold `tol`.
pub fn kernel_basis(p: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let n = p.ncols();
    let svd = p.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    (0..n)
        .filter(|&k| smax == 0.0 || svd.singular_values[k] <= tol * smax)
        .map(|k| vt.row(k).transpose())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torsion_free_connections_are_symmetric() {
        let chart = Chart::new(["a", "b", "c"]).unwrap();
        let mut r = rng(3);
        let c = random_connection(&chart, 0.5, true, &mut r).unwrap();
        assert!(c.is_torsion_free());
        let c = random_connection(&chart, 0.5, false, &mut r).unwrap();
        assert!(!c.is_torsion_free());
    }

    #[test]
    fn kernel_of_so3_matrix_is_the_point() {
        let x = [0.3, -0.5, 0.8];
        // π^{12} = x3, π^{23} = x1, π^{13} = −x2
        let p = DMatrix::from_row_slice(3, 3, &[0.0, x[2], -x[1], -x[2], 0.0, x[0], x[1], -x[0], 0.0]);
        let k = kernel_basis(&p, 1e-9);
        assert_eq!(k.len(), 1);
        let v = DVector::from_column_slice(&x).normalize();
        assert!((k[0].dot(&v).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variations_satisfy_their_class() {
        let mut r = rng(11);
        for class in [Admissibility::Free, Admissibility::FixedEndpoints, Admissibility::InitiallyCotangent] {
            let v = random_variation(4, 64, class, 1.0, &mut r).unwrap();
            assert_eq!(v.class(), class);
        }
    }
}
