//! Rank stratification of π♯ on a grid: the singular locus of the
//! quadratic field on the plane and of the weakly foliated field on R⁴.

use cotangent_lab::catalog;
use cotangent_lab::classify::{rank_profile, DEFAULT_RANK_TOL};

pub fn run() -> anyhow::Result<()> {
    let plane = catalog::load("pia_pib_pair")?;
    let prof = rank_profile(&plane.pi, &[(-1.0, 1.0), (-1.0, 1.0)], &[9, 9], DEFAULT_RANK_TOL)?;
    for row in prof.ranks.chunks(9).rev() {
        println!("{}", row.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" "));
    }
    let singular: Vec<_> = prof
        .points
        .iter()
        .zip(&prof.ranks)
        .filter(|(_, &r)| r == 0)
        .map(|(p, _)| p.clone())
        .collect();
    println!("rank 0 at {singular:?}");
    anyhow::ensure!(singular == vec![vec![0.0, 0.0]], "the quadratic field vanishes only at the origin");

    let r4 = catalog::load("r4_weak_i1")?;
    let prof = rank_profile(&r4.pi, &[(-1.0, 1.0), (-1.0, 1.0), (0.0, 0.0), (0.0, 0.0)], &[5, 5, 2, 2], DEFAULT_RANK_TOL)?;
    let irregular = prof.regular.iter().filter(|r| !**r).count();
    println!("r4_weak_i1: ranks present {:?}, {irregular} irregular nodes", {
        let mut r = prof.ranks.clone();
        r.sort_unstable();
        r.dedup();
        r
    });
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
