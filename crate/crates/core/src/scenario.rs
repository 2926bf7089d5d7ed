//! JSON scenario files: a chart, a bivector field, a Hamiltonian, an optional
//! connection and 3-form, ground-truth labels, and per-command settings.
//!
//! ```json
//! {
//!   "schema": "cotangent-lab/scenario/v1",
//!   "name": "r3_nonfoliated",
//!   "chart": { "dim": 3, "coords": ["x", "y", "z"] },
//!   "pi": [["x", "1"], ["-1"]],
//!   "hamiltonian": "y"
//! }
//! ```
//!
//! `pi[i]` lists `π^{i,i+1} … π^{i,n-1}`. Reals may be JSON numbers or
//! hex-float strings; writers always emit hex floats.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::geometry::{BivectorField, Chart, ConnectionSpec, HamiltonianSystem, ThreeForm};
use crate::hexfloat::HexF64;

pub const SCENARIO_SCHEMA: &str = "cotangent-lab/scenario/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub dim: usize,
    pub coords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[HexF64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionFile {
    /// `christoffels[k][i][j] = Γ^k_{ij}`.
    pub christoffels: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torsion_free: Option<bool>,
}

/// Declared ground truth, each with a note on where it comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Labels {
    pub poisson: bool,
    pub foliated: bool,
    pub weakly_foliated: bool,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    /// Box for random sample points; defaults to the chart bounds or `[-1, 1]ⁿ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Vec<[HexF64; 2]>>,
    /// Explicit points classified in addition to the random ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<HexF64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StationarySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<Vec<HexF64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<Vec<HexF64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

/// On-disk form of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub chart: ChartSpec,
    pub pi: Vec<Vec<String>>,
    pub hamiltonian: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionFile>,
    /// `"a,b,c" → φ_{abc}` by coordinate name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
    #[serde(default)]
    pub sample: SampleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<StationarySpec>,
}

impl ScenarioFile {
    /// Parses JSON, reporting the JSON path of any structural error.
    pub fn from_json(src: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(src);
        let file: ScenarioFile = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::invalid(format!("scenario JSON at `{}`: {}", e.path(), e.inner())))?;
        if file.schema != SCENARIO_SCHEMA {
            return Err(Error::invalid(format!(
                "scenario JSON at `schema`: expected `{SCENARIO_SCHEMA}`, got `{}`",
                file.schema
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialise")
    }
}

/// A loaded scenario with all expressions parsed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub chart: Arc<Chart>,
    pub pi: BivectorField,
    pub hamiltonian: ScalarExpr,
    pub system: HamiltonianSystem,
    pub connection: ConnectionSpec,
    pub phi: Option<ThreeForm>,
}

fn at_path(path: String) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::Parse { source, .. } => Error::Parse {
            context: format!("scenario JSON at `{path}`"),
            source,
        },
        Error::Invalid(msg) => Error::Invalid(format!("scenario JSON at `{path}`: {msg}")),
        other => other,
    }
}

impl Scenario {
    pub fn from_json(src: &str) -> Result<Self> {
        Self::from_file(ScenarioFile::from_json(src)?)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let spec = &file.chart;
        if spec.dim != spec.coords.len() {
            return Err(Error::invalid(format!(
                "scenario JSON at `chart.dim`: {} coordinates declared for dimension {}",
                spec.coords.len(),
                spec.dim
            )));
        }
        let chart = match &spec.bounds {
            None => Chart::new(spec.coords.clone()),
            Some(b) => Chart::with_bounds(spec.coords.clone(), b.iter().map(|[lo, hi]| (lo.0, hi.0)).collect()),
        }
        .map_err(at_path("chart".into()))?;
        let n = chart.dim();

        if file.pi.len() != n.saturating_sub(1) {
            return Err(Error::invalid(format!(
                "scenario JSON at `pi`: expected {} rows, got {}",
                n - 1,
                file.pi.len()
            )));
        }
        let mut upper = Vec::new();
        for (i, row) in file.pi.iter().enumerate() {
            if row.len() != n - 1 - i {
                return Err(Error::invalid(format!(
                    "scenario JSON at `pi[{i}]`: expected {} entries (j > {i}), got {}",
                    n - 1 - i,
                    row.len()
                )));
            }
            for (k, src) in row.iter().enumerate() {
                upper.push(chart.parse(src).map_err(at_path(format!("pi[{i}][{k}]")))?);
            }
        }
        let pi = BivectorField::new(&chart, upper)?;
        let hamiltonian = chart.parse(&file.hamiltonian).map_err(at_path("hamiltonian".into()))?;
        let system = HamiltonianSystem::new(&pi, &hamiltonian)?;

        let connection = match &file.connection {
            None => ConnectionSpec::flat(&chart),
            Some(c) => {
                let shape_ok = c.christoffels.len() == n
                    && c.christoffels.iter().all(|m| m.len() == n && m.iter().all(|r| r.len() == n));
                if !shape_ok {
                    return Err(Error::invalid(format!(
                        "scenario JSON at `connection.christoffels`: expected an {n}×{n}×{n} array"
                    )));
                }
                let mut parsed = Vec::with_capacity(n * n * n);
                for (k, m) in c.christoffels.iter().enumerate() {
                    for (i, r) in m.iter().enumerate() {
                        for (j, src) in r.iter().enumerate() {
                            parsed.push(
                                chart
                                    .parse(src)
                                    .map_err(at_path(format!("connection.christoffels[{k}][{i}][{j}]")))?,
                            );
                        }
                    }
                }
                let conn = ConnectionSpec::from_fn(&chart, |k, i, j| parsed[k * n * n + i * n + j].clone())?;
                if c.torsion_free == Some(true) && !conn.is_torsion_free() {
                    return Err(Error::invalid(
                        "scenario JSON at `connection.torsion_free`: Christoffel symbols are not symmetric",
                    ));
                }
                conn
            }
        };

        let phi = match &file.phi {
            None => None,
            Some(map) => {
                let mut entries = Vec::new();
                for (key, src) in map {
                    let path = format!("phi.{key}");
                    let idx: Vec<usize> = key
                        .split(',')
                        .map(|name| {
                            chart.coords().iter().position(|c| c == name.trim()).ok_or_else(|| {
                                Error::invalid(format!("scenario JSON at `{path}`: unknown coordinate `{name}`"))
                            })
                        })
                        .collect::<Result<_>>()?;
                    let idx: [usize; 3] = idx.try_into().map_err(|_| {
                        Error::invalid(format!("scenario JSON at `{path}`: a 3-form key names three coordinates"))
                    })?;
                    entries.push((idx, chart.parse(src).map_err(at_path(path.clone()))?));
                }
                Some(ThreeForm::from_entries(&chart, &entries).map_err(at_path("phi".into()))?)
            }
        };

        for (k, p) in file.sample.points.iter().enumerate() {
            if p.len() != n {
                return Err(Error::invalid(format!(
                    "scenario JSON at `sample.points[{k}]`: expected {n} coordinates"
                )));
            }
        }
        if let Some(r) = &file.sample.region {
            if r.len() != n || r.iter().any(|[lo, hi]| !lo.0.is_finite() || !hi.0.is_finite() || lo.0 > hi.0) {
                return Err(Error::invalid("scenario JSON at `sample.region`: need one [lo, hi] per coordinate"));
            }
        }

        Ok(Scenario {
            file,
            chart,
            pi,
            hamiltonian,
            system,
            connection,
            phi,
        })
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.file.labels.as_ref()
    }

    /// Sampling box: explicit region, else chart bounds, else `[-1, 1]ⁿ`.
    pub fn region(&self) -> Vec<(f64, f64)> {
        if let Some(r) = &self.file.sample.region {
            return r.iter().map(|[lo, hi]| (lo.0, hi.0)).collect();
        }
        match self.chart.bounds() {
            Some(b) => b.to_vec(),
            None => vec![(-1.0, 1.0); self.chart.dim()],
        }
    }

    pub fn fixed_points(&self) -> Vec<Vec<f64>> {
        self.file
            .sample
            .points
            .iter()
            .map(|p| crate::hexfloat::unwrap(p))
            .collect()
    }

    /// Same scenario with a different Hamiltonian.
    pub fn with_hamiltonian(&self, src: &str) -> Result<Scenario> {
        let mut file = self.file.clone();
        file.hamiltonian = src.to_string();
        Scenario::from_file(file)
    }

    /// Same scenario with a different sampling box.
    pub fn with_region(&self, region: &[(f64, f64)]) -> Result<Scenario> {
        let mut file = self.file.clone();
        file.sample.region = Some(region.iter().map(|&(lo, hi)| [HexF64(lo), HexF64(hi)]).collect());
        Scenario::from_file(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R3: &str = r#"{
        "schema": "cotangent-lab/scenario/v1",
        "name": "r3",
        "chart": {"dim": 3, "coords": ["x", "y", "z"]},
        "pi": [["x", "1"], ["-1"]],
        "hamiltonian": "y"
    }"#;

    #[test]
    fn loads_minimal_file() {
        let s = Scenario::from_json(R3).unwrap();
        assert_eq!(s.pi.matrix_at(&[2.0, 0.0, 0.0]).unwrap()[(0, 1)], 2.0);
        assert!(s.connection.is_flat());
        assert_eq!(s.region(), vec![(-1.0, 1.0); 3]);
    }

    #[test]
    fn expression_errors_carry_json_path() {
        let bad = R3.replace("\"-1\"", "\"w\"");
        let err = Scenario::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("pi[1][0]"), "{err}");
    }

    #[test]
    fn structural_errors_carry_json_path() {
        let bad = R3.replace("\"dim\": 3", "\"dim\": \"three\"");
        let err = Scenario::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("chart.dim"), "{err}");
        let bad = R3.replace("[\"-1\"]", "[\"-1\", \"0\"]");
        let err = Scenario::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("pi[1]"), "{err}");
    }

    #[test]
    fn hex_and_decimal_reals_both_load() {
        let src = R3.replace(
            "\"hamiltonian\": \"y\"",
            "\"hamiltonian\": \"y\", \"sample\": {\"region\": [[\"-0x1p+0\", 1], [0, 0.5], [0, \"0x1.8p+1\"]]}",
        );
        let s = Scenario::from_json(&src).unwrap();
        assert_eq!(s.region(), vec![(-1.0, 1.0), (0.0, 0.5), (0.0, 3.0)]);
    }
}
