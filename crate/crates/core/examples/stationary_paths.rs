//! Stationary paths of the Hamiltonian path functional on so(3)*: a
//! cotangent start stays cotangent, an arbitrary start is quasi-cotangent.

use cotangent_lab::catalog;
use cotangent_lab::harness::run_stationary;
use cotangent_lab::paths::CotangentPath;
use cotangent_lab::sampling::kernel_basis;
use cotangent_lab::variational::{stationary_solve, StationarySolveConfig};

pub fn run() -> anyhow::Result<()> {
    let s = catalog::load("linear_so3")?;
    let m = vec![0.3, -0.2, 0.4];
    let kernel = kernel_basis(&s.pi.matrix_at(&m)?, 1e-9);
    let a0: Vec<f64> = (s.system.dh_at(&m)? + &kernel[0] * 0.7).as_slice().to_vec();

    let report = run_stationary(&s, m.clone(), a0, 1024, 1e-6)?;
    println!("cotangent start:  defect {:.2e}", report.cotangent_defect);
    anyhow::ensure!(report.cotangent_defect < 1e-6);

    let report = run_stationary(&s, m.clone(), vec![1.0, 0.5, -0.25], 1024, 1e-6)?;
    let q = report.quasi_cotangent;
    println!(
        "arbitrary start:  defect {:.2e}, quasi-cotangent {} (transport {:.1e})",
        report.cotangent_defect, q.passed, q.transport_residual
    );
    anyhow::ensure!(q.passed);

    // Paths round-trip through CSV exactly.
    let path = stationary_solve(&s.system, &s.connection, &StationarySolveConfig { m, a0: vec![1.0, 0.5, -0.25], steps: 64 })?;
    let mut buf = Vec::new();
    path.write_csv(&s.chart, &mut buf)?;
    let (_, back) = CotangentPath::read_csv(buf.as_slice())?;
    anyhow::ensure!(back == path, "CSV round trip changed the path");
    println!("CSV: {} bytes, exact round trip", buf.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
