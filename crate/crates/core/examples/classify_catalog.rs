//! Poisson and weak-foliation verdicts for every catalog entry, with the
//! bracket witness for the non-foliated field on R³.

use cotangent_lab::catalog;
use cotangent_lab::harness::{run_classify, PointSet};

pub fn run() -> anyhow::Result<()> {
    for id in catalog::IDS {
        let scenario = catalog::load(id)?;
        let report = run_classify(&scenario, PointSet::Random { count: 40, seed: 11 }, 1e-9)?;
        let s = &report.result.summary;
        println!(
            "{id:28} poisson {:5} weakly-foliated {:5} rank {}..{}  labels agree: {}",
            s.poisson,
            s.weakly_foliated,
            s.min_rank,
            s.max_rank,
            report.consistent_with_labels.unwrap_or(true)
        );
        if let Some(w) = report.result.records.iter().find_map(|r| r.witness.as_ref()) {
            println!("{:28} bracket leaves the image for {w:?}", "");
        }
        anyhow::ensure!(report.passed, "{id} disagrees with its labels");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
