//! Built-in example fields with declared ground truth.
//!
//! Coordinates of the two `r4_weak_*` entries are ordered `(x, y, u, v)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{classify_points, sample_box, ClassificationSummary};
use crate::error::{Error, Result};
use crate::geometry::BivectorField;
use crate::hexfloat::HexF64;
use crate::sampling;
use crate::scenario::{ChartSpec, Labels, SampleSpec, Scenario, ScenarioFile, SCENARIO_SCHEMA};

pub const IDS: [&str; 7] = [
    "symplectic2d",
    "linear_so3",
    "r3_nonfoliated",
    "r4_weak_i0",
    "r4_weak_i1",
    "pia_pib_pair",
    "conformal_times_symplectic",
];

/// The catalog entries declared Poisson.
pub const POISSON_IDS: [&str; 3] = ["symplectic2d", "linear_so3", "pia_pib_pair"];

fn strings(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

fn hex_points(points: &[&[f64]]) -> Vec<Vec<HexF64>> {
    points.iter().map(|p| crate::hexfloat::wrap(p)).collect()
}

fn labels(poisson: bool, foliated: bool, weakly_foliated: bool, provenance: &str) -> Option<Labels> {
    Some(Labels {
        poisson,
        foliated,
        weakly_foliated,
        provenance: provenance.to_string(),
    })
}

const AXIS_TWIST: &str = "2*x/(x^2 + y^2)^2";

/// The scenario file for a catalog id.
pub fn file(id: &str) -> Result<ScenarioFile> {
    let base = |name: &str, description: &str, coords: &[&str], pi: &[&[&str]], h: &str| ScenarioFile {
        schema: SCENARIO_SCHEMA.into(),
        name: name.into(),
        description: description.into(),
        chart: ChartSpec {
            dim: coords.len(),
            coords: coords.iter().map(|c| c.to_string()).collect(),
            bounds: None,
        },
        pi: strings(pi),
        hamiltonian: h.into(),
        connection: None,
        phi: None,
        labels: None,
        sample: SampleSpec::default(),
        stationary: None,
    };
    let mut f = match id {
        "symplectic2d" => {
            let mut f = base(
                id,
                "constant symplectic structure dq∧dp on the plane",
                &["q", "p"],
                &[&["1"]],
                "(q^2 + p^2)/2",
            );
            f.labels = labels(true, true, true, "constant coefficients, so [π,π] = 0 and π♯ is onto");
            f
        }
        "linear_so3" => {
            let mut f = base(
                id,
                "linear Poisson structure of so(3)*",
                &["x1", "x2", "x3"],
                &[&["x3", "-x2"], &["x1"]],
                "(x1^2 + 2*x2^2 + 3*x3^2)/2",
            );
            f.labels = labels(true, true, true, "Lie–Poisson structure; Jacobi identity of the cross product");
            f
        }
        "r3_nonfoliated" => {
            let mut f = base(
                id,
                "x ∂x∧∂y + ∂z∧∂y + ∂x∧∂z on R³",
                &["x", "y", "z"],
                &[&["x", "1"], &["-1"]],
                "y",
            );
            f.labels = labels(
                false,
                false,
                false,
                "the image of π♯ is the plane v_x + v_y − x v_z = 0, and the bracket of π♯(dy), π♯(dz) leaves it at every point",
            );
            f.sample.points = hex_points(&[&[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]]);
            f
        }
        "r4_weak_i0" | "r4_weak_i1" => {
            let xi = if id == "r4_weak_i0" { "1" } else { "x" };
            let h = if id == "r4_weak_i0" { "u" } else { "x + y + u" };
            let mut f = base(
                id,
                &format!("{xi}·∂x∧∂u + (x²+y²)·∂y∧∂v on R⁴, coordinates (x, y, u, v)"),
                &["x", "y", "u", "v"],
                &[&["0", xi, "0"], &["0", "x^2 + y^2"], &["0"]],
                h,
            );
            f.labels = labels(
                false,
                false,
                true,
                "[π,π] = ∧³π♯(ω) off the axis x = y = 0; on the axis the image is integrable or π vanishes; \
                 the coefficient 2x^{i+1}/(x²+y²) of the bracket relation has no continuous extension to the axis",
            );
            f.phi = Some(BTreeMap::from([("x,y,v".to_string(), AXIS_TWIST.to_string())]));
            f.sample.points = hex_points(&[&[0.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.5, -0.3], &[1.0, 0.0, 0.0, 0.0]]);
            f
        }
        "pia_pib_pair" => {
            let mut f = base(
                id,
                "π_A = (x²+y²) ∂x∧∂y; companion π_B = (x²+y²)² ∂x∧∂y shares its pointwise image",
                &["x", "y"],
                &[&["x^2 + y^2"]],
                "(x^2 + y^2)/2",
            );
            f.labels = labels(
                true,
                true,
                true,
                "every bivector field on a surface is Poisson; pointwise images of π_A and π_B agree while their module images differ",
            );
            f.sample.points = hex_points(&[&[0.0, 0.0]]);
            f
        }
        "conformal_times_symplectic" => {
            let mut f = base(
                id,
                "(1 + q1²)·(∂q1∧∂p1 + ∂q2∧∂p2) on R⁴",
                &["q1", "p1", "q2", "p2"],
                &[&["1 + q1^2", "0", "0"], &["0", "0"], &["1 + q1^2"]],
                "(q1^2 + p1^2 + q2^2 + p2^2)/2",
            );
            f.labels = labels(
                false,
                true,
                true,
                "conformally Poisson fields are foliated; here π♯ is invertible everywhere while [π,π] ≠ 0 where q1 ≠ 0",
            );
            f
        }
        _ => return Err(Error::invalid(format!("unknown catalog entry `{id}`"))),
    };
    if f.sample.count.is_none() {
        f.sample.count = Some(50);
    }
    Ok(f)
}

pub fn load(id: &str) -> Result<Scenario> {
    Scenario::from_file(file(id)?)
}

/// `π_B = (x²+y²)² ∂x∧∂y` on the chart of `pia_pib_pair`.
pub fn pi_b() -> Result<BivectorField> {
    let s = load("pia_pib_pair")?;
    BivectorField::parse_upper(&s.chart, &[vec!["(x^2 + y^2)^2"]])
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SelfCheck {
    pub id: String,
    pub consistent: bool,
    pub summary: ClassificationSummary,
}

/// Classifies random and fixed sample points and compares with the labels:
/// a `true` label must hold at every point, a `false` label must fail at
/// one or more.
pub fn self_check(scenario: &Scenario, count: usize, seed: u64, tol: f64) -> Result<SelfCheck> {
    let labels = scenario
        .labels()
        .ok_or_else(|| Error::invalid(format!("scenario `{}` has no labels", scenario.name())))?;
    let mut rng = sampling::rng(seed);
    let mut points = sample_box(&scenario.region(), count, &mut rng);
    points.extend(scenario.fixed_points());
    let result = classify_points(&scenario.pi, &points, tol)?;
    let s = &result.summary;
    let poisson_ok = if labels.poisson { s.poisson } else { s.poisson_points < s.samples };
    let weak_ok = if labels.weakly_foliated {
        s.weakly_foliated
    } else {
        s.weakly_foliated_points < s.samples
    };
    Ok(SelfCheck {
        id: scenario.name().to_string(),
        consistent: poisson_ok && weak_ok,
        summary: result.summary,
    })
}
