//! Writing a scenario with a custom connection to disk, reloading it, and
//! running a check on it.

use cotangent_lab::harness::run_functional;
use cotangent_lab::scenario::{Scenario, ScenarioFile};

const SRC: &str = r#"{
  "schema": "cotangent-lab/scenario/v1",
  "name": "tilted_plane",
  "description": "(1 + x^2) dx∧dy with a connection that has torsion",
  "chart": {"dim": 2, "coords": ["x", "y"], "bounds": [["-0x1p+1", "0x1p+1"], [-2, 2]]},
  "pi": [["1 + x^2"]],
  "hamiltonian": "x*y + y^2/2",
  "connection": {"christoffels": [[["0", "y"], ["0", "0"]], [["x", "0"], ["0", "1"]]]},
  "sample": {"region": [[-0.5, 0.5], [-0.5, 0.5]], "count": 10}
}"#;

pub fn run() -> anyhow::Result<()> {
    let file = ScenarioFile::from_json(SRC)?;
    let dir = std::env::temp_dir().join(format!("cotangent-lab-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("tilted_plane.json");
    std::fs::write(&path, file.to_json())?;

    let back = Scenario::from_json(&std::fs::read_to_string(&path)?)?;
    anyhow::ensure!(back.file == file, "round trip changed the file");
    println!("reloaded `{}`; torsion-free connection: {}", back.name(), back.connection.is_torsion_free());

    let report = run_functional(&back, 3, 1, 128)?;
    println!("exact vs fd worst {:.1e}", report.max_relative_error);
    std::fs::remove_dir_all(&dir)?;
    anyhow::ensure!(report.passed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
