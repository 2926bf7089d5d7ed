//! A stationary path that starts cotangent and does not stay cotangent:
//! `π = ∂x∧∂u + (x²+y²)∂y∧∂v`, `H = u`, `x(t) = (t,0,0,0)`, `a = (0,1,1,0)`.

use cotangent_lab::harness::run_counterexample_ii;
use cotangent_lab::report::Report;

pub fn run() -> anyhow::Result<()> {
    let report = run_counterexample_ii(512, 10, 2)?;
    print!("{}", report.text());
    for (t, c) in report.defect_series.iter().step_by(128) {
        println!("  |c({t:.2})| = {c:.6}   t² = {:.6}", t * t);
    }
    anyhow::ensure!(report.passed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
