//! The first variation of the path functional: closed form, integrated by
//! parts, central differences, and the same closed form under a connection
//! with torsion.

use cotangent_lab::catalog;
use cotangent_lab::paths::Admissibility;
use cotangent_lab::sampling::{random_connection, random_smooth_path, random_variation, rng};
use cotangent_lab::variational::{differential_by_parts, differential_exact, differential_fd};

pub fn run() -> anyhow::Result<()> {
    let s = catalog::load("conformal_times_symplectic")?;
    let mut r = rng(5);
    let alpha = random_smooth_path(&[0.2, -0.1, 0.3, 0.0], 0.3, 1.0, 256, &mut r)?;
    let other = random_connection(&s.chart, 0.5, false, &mut r)?;
    for class in [Admissibility::Free, Admissibility::FixedEndpoints, Admissibility::InitiallyCotangent] {
        let v = random_variation(4, 256, class, 1.0, &mut r)?;
        let exact = differential_exact(&s.system, &s.connection, &alpha, &v)?;
        let parts = differential_by_parts(&s.system, &s.connection, &alpha, &v)?;
        let fd = differential_fd(&s.system, &alpha, &v, 1e-5)?;
        let twisted = differential_exact(&s.system, &other, &alpha, &v)?;
        println!("{class:?}: exact {exact:.10} by parts {parts:.10} fd {fd:.10} other connection {twisted:.10}");
        anyhow::ensure!((exact - fd).abs() <= 1e-5 * exact.abs().max(fd.abs()));
        anyhow::ensure!((exact - twisted).abs() <= 1e-8 * exact.abs());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
