//! Seeded sweeps: cotangent initial data stay cotangent on foliated fields,
//! stationary paths are quasi-cotangent on Poisson fields, and a witness
//! that the Poisson condition matters.

use cotangent_lab::catalog;
use cotangent_lab::harness::{item1_suite, item3_suite, run_item1, run_item3_forward, search_item3_witness, InitialData, SweepConfig};
use cotangent_lab::report::Report;

pub fn run() -> anyhow::Result<()> {
    let cfg = SweepConfig { draws: 3, seed: 4, steps: 512, tol: 1e-5 };
    for s in item1_suite()? {
        let r = run_item1(&s, &cfg)?;
        print!("{}", r.text());
        anyhow::ensure!(r.passed);
    }
    for s in item3_suite()? {
        let r = run_item3_forward(&s, &cfg, InitialData::Arbitrary)?;
        print!("{}", r.text());
        anyhow::ensure!(r.passed);
    }
    let r = search_item3_witness(&catalog::load("r3_nonfoliated")?, &cfg)?;
    print!("{}", r.text());
    anyhow::ensure!(r.witness.is_some());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
