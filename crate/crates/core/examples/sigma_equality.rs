//! Extending a path to a square by the Hamiltonian flow and comparing the
//! two functionals.

use cotangent_lab::catalog;
use cotangent_lab::sampling::{random_smooth_path, rng};
use cotangent_lab::sigma::{build_tilde_alpha, verify_equality};

pub fn run() -> anyhow::Result<()> {
    let s = catalog::load("linear_so3")?;
    let alpha = random_smooth_path(&[0.2, 0.1, -0.3], 0.2, 1.0, 256, &mut rng(9))?;
    let rep = verify_equality(&s.system, &alpha, 64, 4)?;
    println!(
        "L^H = {:.12}\nL^KS = {:.12}\ngap {:.2e}, sup ⟨β_t, ∂_y X⟩ = {:.2e}, y-spread {:.2e}",
        rep.l_h, rep.l_ks, rep.abs_gap, rep.first_integrand_sup, rep.y_spread
    );
    anyhow::ensure!(rep.abs_gap < 1e-5);

    let square = build_tilde_alpha(&s.system, &alpha, 16, 4)?;
    println!("a 17×17 square serialises to {} bytes of JSON", square.to_json().len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
