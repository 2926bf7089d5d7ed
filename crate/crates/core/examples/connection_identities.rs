//! Pointwise tensor identities under a random torsion-free connection:
//! the Lie derivative as covariant derivative minus a derivation, and the
//! evolution of π along X_H.

use cotangent_lab::catalog;
use cotangent_lab::geometry::{covariant_derivative_bivector, derivation_extension, lie_derivative_pi, n_tensor};
use cotangent_lab::sampling::{random_connection, rng};

pub fn run() -> anyhow::Result<()> {
    let s = catalog::load("conformal_times_symplectic")?;
    let conn = random_connection(&s.chart, 0.5, true, &mut rng(3))?;
    let p = [0.3, -0.4, 0.2, 0.5];
    let xh = s.system.xh();
    let pm = s.pi.matrix_at(&p)?;
    let lie = s.system.lie_derivative().matrix_at(&p)?;
    let xval = xh.value_at(&p)?;
    let cov = covariant_derivative_bivector(&s.pi, &conn, &p, &xval)?;
    let n = n_tensor(xh, &conn, &p)?;
    let derivation = derivation_extension(&n, &pm);

    // L_X π = ∇_X π − N̄(π)
    let lemma = (&lie - (&cov - &derivation)).amax();
    // (∇_X π)♯ = K P + P Kᵀ + (L_X π)♯
    let evolution = (&cov - (&derivation + &lie)).amax();
    println!("derivation identity residual {lemma:.1e}, evolution residual {evolution:.1e}");
    anyhow::ensure!(lemma < 1e-10 && evolution < 1e-10);

    let direct = lie_derivative_pi(&s.pi, xh)?.matrix_at(&p)?;
    anyhow::ensure!((&direct - &lie).amax() < 1e-12);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
