//! Seeded, repeatable theorem-level experiments.
//!
//! Initial data for every draw is generated sequentially from the seed, then
//! the draws are solved concurrently and reported in draw order, so a report
//! depends only on its inputs and seed.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::classify::{classify_points, grid_points, sample_box, twisted_check, ClassificationResult, TwistedReport, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::geometry::ConnectionSpec;
use crate::paths::{
    cotangent_defect, is_cotangent, is_quasi_cotangent, Admissibility, CotangentPath, TransportCheck,
};
use crate::report::{header_line, sci, Report, REPORT_SCHEMA};
use crate::sampling::{self, kernel_basis, random_connection, random_smooth_path, random_variation};
use crate::scenario::{Labels, Scenario};
use crate::sigma::{verify_equality, SigmaReport};
use crate::variational::{
    compare_differentials, differential_exact, differential_fd, stationary_residual, stationary_solve,
    StationarySolveConfig,
};

/// Settings shared by the sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub draws: usize,
    pub seed: u64,
    pub steps: usize,
    pub tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            draws: 20,
            seed: 0,
            steps: 2048,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DrawOutcome {
    Checked {
        /// The quantity compared with the tolerance.
        metric: f64,
        /// A second diagnostic, when the check has one.
        #[serde(skip_serializing_if = "Option::is_none")]
        secondary: Option<f64>,
        passed: bool,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub index: usize,
    pub m: Vec<f64>,
    pub a0: Vec<f64>,
    #[serde(flatten)]
    pub outcome: DrawOutcome,
}

impl DrawRecord {
    fn metric(&self) -> Option<f64> {
        match self.outcome {
            DrawOutcome::Checked { metric, .. } => Some(metric),
            DrawOutcome::Skipped { .. } => None,
        }
    }

    fn passed(&self) -> Option<bool> {
        match self.outcome {
            DrawOutcome::Checked { passed, .. } => Some(passed),
            DrawOutcome::Skipped { .. } => None,
        }
    }
}

/// Result of a theorem sweep over random initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: String,
    pub check: String,
    pub scenario: String,
    pub labels: Option<Labels>,
    pub seed: u64,
    pub steps: usize,
    pub tol: f64,
    pub draws: Vec<DrawRecord>,
    pub skipped: usize,
    /// Largest checked metric.
    pub worst: f64,
    /// For witness searches, the first draw that fails the check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<usize>,
    pub passed: bool,
}

impl Report for SweepReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn text(&self) -> String {
        let mut out = String::new();
        header_line(&mut out, &format!("{} on {}", self.check, self.scenario), self.passed);
        let checked = self.draws.len() - self.skipped;
        let _ = writeln!(
            out,
            "  draws {checked} checked, {} skipped; worst {} (tol {}); seed {}, N = {}",
            self.skipped,
            sci(self.worst),
            sci(self.tol),
            self.seed,
            self.steps
        );
        if let Some(w) = self.witness {
            let _ = writeln!(out, "  first failing draw: #{w}");
        }
        out
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = ["draw", "status", "metric", "secondary", "passed"].map(String::from).to_vec();
        let rows = self
            .draws
            .iter()
            .map(|d| match &d.outcome {
                DrawOutcome::Checked { metric, secondary, passed } => vec![
                    d.index.to_string(),
                    "checked".into(),
                    format!("{metric:?}"),
                    secondary.map_or(String::new(), |s| format!("{s:?}")),
                    passed.to_string(),
                ],
                DrawOutcome::Skipped { reason } => {
                    vec![d.index.to_string(), format!("skipped: {reason}"), String::new(), String::new(), String::new()]
                }
            })
            .collect();
        (header, rows)
    }
}

/// How covector initial data are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// `π♯(a0) = X_H(m)`: `dH(m)` plus a random kernel element.
    Cotangent,
    /// Uniform in `[-1, 1]ⁿ`.
    Arbitrary,
    /// Exactly `dH(m)`.
    Gradient,
}

fn draw_initial<R: Rng>(scenario: &Scenario, kind: InitialData, region: &[(f64, f64)], rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = scenario.chart.dim();
    let m = sample_box(region, 1, rng).pop().expect("one point");
    let a0 = match kind {
        InitialData::Arbitrary => (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        InitialData::Gradient | InitialData::Cotangent => {
            let mut a = scenario.system.dh_at(&m)?;
            if kind == InitialData::Cotangent {
                for k in kernel_basis(&scenario.pi.matrix_at(&m)?, DEFAULT_RANK_TOL) {
                    a += k * rng.gen_range(-1.0..=1.0);
                }
            }
            a.as_slice().to_vec()
        }
    };
    Ok((m, a0))
}

fn solve_draws<F>(
    scenario: &Scenario,
    cfg: &SweepConfig,
    kind: InitialData,
    check: F,
) -> Result<Vec<DrawRecord>>
where
    F: Fn(&CotangentPath) -> Result<(f64, Option<f64>, bool)> + Sync,
{
    let region = scenario.region();
    let mut rng = sampling::rng(cfg.seed);
    let initial = (0..cfg.draws)
        .map(|_| draw_initial(scenario, kind, &region, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(initial
        .into_par_iter()
        .enumerate()
        .map(|(index, (m, a0))| {
            let solved = stationary_solve(
                &scenario.system,
                &scenario.connection,
                &StationarySolveConfig {
                    m: m.clone(),
                    a0: a0.clone(),
                    steps: cfg.steps,
                },
            );
            let outcome = match solved.and_then(|path| check(&path)) {
                Ok((metric, secondary, passed)) => DrawOutcome::Checked { metric, secondary, passed },
                Err(e @ (Error::LeftChart { .. } | Error::Eval(_))) => DrawOutcome::Skipped { reason: e.to_string() },
                Err(e) => DrawOutcome::Skipped { reason: format!("solver failure: {e}") },
            };
            DrawRecord { index, m, a0, outcome }
        })
        .collect())
}

fn sweep_report(check: &str, scenario: &Scenario, cfg: &SweepConfig, draws: Vec<DrawRecord>, witness_mode: bool) -> SweepReport {
    let skipped = draws.iter().filter(|d| d.metric().is_none()).count();
    let worst = draws.iter().filter_map(DrawRecord::metric).fold(0.0, f64::max);
    let witness = draws.iter().find(|d| d.passed() == Some(false)).map(|d| d.index);
    let checked = draws.len() - skipped;
    let passed = if witness_mode {
        witness.is_some()
    } else {
        checked > 0 && witness.is_none()
    };
    SweepReport {
        schema: REPORT_SCHEMA.into(),
        check: check.into(),
        scenario: scenario.name().into(),
        labels: scenario.labels().cloned(),
        seed: cfg.seed,
        steps: cfg.steps,
        tol: cfg.tol,
        draws,
        skipped,
        worst,
        witness: if witness_mode { witness } else { None },
        passed,
    }
}

fn require_label(scenario: &Scenario, pick: fn(&Labels) -> bool, what: &str) -> Result<()> {
    match scenario.labels() {
        Some(l) if pick(l) => Ok(()),
        _ => Err(Error::invalid(format!("scenario `{}` is not labelled {what}", scenario.name()))),
    }
}

/// Stationary solves from cotangent initial data must stay cotangent.
pub fn run_item1(scenario: &Scenario, cfg: &SweepConfig) -> Result<SweepReport> {
    require_label(scenario, |l| l.foliated, "foliated")?;
    let draws = solve_draws(scenario, cfg, InitialData::Cotangent, |path| {
        let (ok, sup) = is_cotangent(path, &scenario.pi, cfg.tol)?;
        Ok((sup, None, ok))
    })?;
    Ok(sweep_report("item 1 (cotangent initial data stay cotangent)", scenario, cfg, draws, false))
}

/// Stationary solves from arbitrary (or gradient) initial data must be
/// quasi-cotangent; gradient data must additionally be cotangent.
pub fn run_item3_forward(scenario: &Scenario, cfg: &SweepConfig, kind: InitialData) -> Result<SweepReport> {
    require_label(scenario, |l| l.poisson, "Poisson")?;
    let draws = solve_draws(scenario, cfg, kind, |path| {
        let q = is_quasi_cotangent(path, &scenario.system, &scenario.connection, cfg.tol)?;
        let metric = q.base_residual.max(q.transport_residual);
        if kind == InitialData::Gradient {
            let (ok, sup) = is_cotangent(path, &scenario.pi, cfg.tol)?;
            Ok((metric, Some(sup), q.passed && ok))
        } else {
            Ok((metric, None, q.passed))
        }
    })?;
    let check = match kind {
        InitialData::Gradient => "item 3 (stationary paths from dH(m) are quasi-cotangent and cotangent)",
        _ => "item 3 (stationary paths are quasi-cotangent)",
    };
    Ok(sweep_report(check, scenario, cfg, draws, false))
}

/// Searches for a stationary solve that is not quasi-cotangent; passes when
/// one is found.
pub fn search_item3_witness(scenario: &Scenario, cfg: &SweepConfig) -> Result<SweepReport> {
    let draws = solve_draws(scenario, cfg, InitialData::Arbitrary, |path| {
        let q = is_quasi_cotangent(path, &scenario.system, &scenario.connection, cfg.tol)?;
        Ok((q.base_residual.max(q.transport_residual), None, q.passed))
    })?;
    Ok(sweep_report("item 3 witness (a stationary path that is not quasi-cotangent)", scenario, cfg, draws, true))
}

/// Scenarios used for the item-1 sweep: regions keep trajectories where
/// difference errors stay well under the tolerance.
pub fn item1_suite() -> Result<Vec<Scenario>> {
    let mut out = vec![
        catalog::load("symplectic2d")?,
        catalog::load("linear_so3")?.with_region(&[(-0.6, 0.6); 3])?,
        catalog::load("conformal_times_symplectic")?.with_region(&[(-0.6, 0.6); 4])?,
    ];
    // off the axis the field is invertible, hence foliated there
    let mut file = catalog::file("r4_weak_i1")?;
    file.name = "r4_weak_i1 (off-axis)".into();
    file.labels = Some(Labels {
        poisson: false,
        foliated: true,
        weakly_foliated: true,
        provenance: "π♯ is invertible where x ≠ 0 and x² + y² ≠ 0; the region keeps x > 0 along the flow".into(),
    });
    let off_axis = Scenario::from_file(file)?.with_region(&[(0.2, 0.4), (-0.3, 0.3), (-1.0, 1.0), (-1.0, 1.0)])?;
    out.push(off_axis);
    Ok(out)
}

/// Poisson scenarios used for the item-3 sweep.
pub fn item3_suite() -> Result<Vec<Scenario>> {
    Ok(vec![
        catalog::load("symplectic2d")?,
        catalog::load("linear_so3")?.with_region(&[(-0.6, 0.6); 3])?,
        catalog::load("pia_pib_pair")?.with_region(&[(-0.8, 0.8); 2])?,
    ])
}

/// Bounds used by the counterexample II checks.
pub const CE2_INITIAL_TOL: f64 = 1e-10;
pub const CE2_ODE_TOL: f64 = 1e-8;
pub const CE2_VARIATION_TOL: f64 = 1e-6;
/// The exact defect is `c(t) = −t² ∂v`, so the sup is 1.
pub const CE2_SUP_DEFECT_BOUND: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub schema: String,
    pub check: String,
    pub steps: usize,
    pub seed: u64,
    /// `|c(0)|`.
    pub initial_defect: f64,
    pub stationary_base_residual: f64,
    pub stationary_covector_residual: f64,
    /// Sup distance between the explicit path and the RK4 stationary solve.
    pub solver_deviation: f64,
    pub variations: usize,
    /// Largest `|dL(v)| / ‖v‖` by central differences.
    pub max_fd_ratio: f64,
    /// Largest `|dL(v)| / ‖v‖` from the exact formula.
    pub max_exact_ratio: f64,
    pub sup_defect: f64,
    pub sup_defect_bound: f64,
    /// `(t_i, |c_i|)` for plotting.
    pub defect_series: Vec<(f64, f64)>,
    pub initially_cotangent: bool,
    pub stationary: bool,
    pub not_cotangent: bool,
    pub passed: bool,
}

impl Report for CounterexampleReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn text(&self) -> String {
        let mut out = String::new();
        header_line(&mut out, &self.check, self.passed);
        let _ = writeln!(
            out,
            "  initially cotangent: {} (|c(0)| = {})",
            crate::report::verdict(self.initially_cotangent),
            sci(self.initial_defect)
        );
        let _ = writeln!(
            out,
            "  stationary: {} (ODE residuals {} / {}, max |dL(v)|/|v| = {} over {} variations)",
            crate::report::verdict(self.stationary),
            sci(self.stationary_base_residual),
            sci(self.stationary_covector_residual),
            sci(self.max_fd_ratio),
            self.variations
        );
        let _ = writeln!(
            out,
            "  not cotangent: {} (sup |c| = {} ≥ {})",
            crate::report::verdict(self.not_cotangent),
            sci(self.sup_defect),
            self.sup_defect_bound
        );
        out
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        (
            vec!["t".into(), "defect".into()],
            self.defect_series
                .iter()
                .map(|(t, c)| vec![format!("{t:?}"), format!("{c:?}")])
                .collect(),
        )
    }
}

/// The explicit path `a(t) = (0, 1, 1, 0)`, `x(t) = (t, 0, 0, 0)` for the
/// `r4_weak_i0` field with `H = u`.
pub fn counterexample_ii_path(steps: usize) -> Result<CotangentPath> {
    CotangentPath::from_fn(
        steps,
        |t| DVector::from_column_slice(&[t, 0.0, 0.0, 0.0]),
        |_| DVector::from_column_slice(&[0.0, 1.0, 1.0, 0.0]),
    )
}

pub fn run_counterexample_ii(steps: usize, variations: usize, seed: u64) -> Result<CounterexampleReport> {
    let scenario = catalog::load("r4_weak_i0")?;
    let sys = &scenario.system;
    let conn = &scenario.connection;
    let alpha = counterexample_ii_path(steps)?;

    let defect = cotangent_defect(&alpha, &scenario.pi)?;
    let initial_defect = defect.vectors()[0].norm();
    let sup_defect = defect.sup_norm();
    let defect_series = defect
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, c)| (alpha.t(i), c.norm()))
        .collect();

    let res = stationary_residual(sys, conn, &alpha)?;
    let solved = stationary_solve(
        sys,
        conn,
        &StationarySolveConfig {
            m: vec![0.0; 4],
            a0: vec![0.0, 1.0, 1.0, 0.0],
            steps,
        },
    )?;
    let solver_deviation = alpha
        .base()
        .iter()
        .zip(solved.base())
        .chain(alpha.covectors().iter().zip(solved.covectors()))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let mut rng = sampling::rng(seed);
    let vs = (0..variations)
        .map(|_| random_variation(4, steps, Admissibility::InitiallyCotangent, 1.0, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let ratios = vs
        .par_iter()
        .map(|v| {
            let norm = v.norm();
            let fd = differential_fd(sys, &alpha, v, 1e-5)?;
            let exact = differential_exact(sys, conn, &alpha, v)?;
            Ok((fd.abs() / norm, exact.abs() / norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_fd_ratio = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_exact_ratio = ratios.iter().map(|r| r.1).fold(0.0, f64::max);

    let initially_cotangent = initial_defect <= CE2_INITIAL_TOL;
    let stationary = res.base.max(res.covector) <= CE2_ODE_TOL
        && solver_deviation <= CE2_ODE_TOL
        && max_fd_ratio <= CE2_VARIATION_TOL;
    let not_cotangent = sup_defect >= CE2_SUP_DEFECT_BOUND;
    Ok(CounterexampleReport {
        schema: REPORT_SCHEMA.into(),
        check: "counterexample II (initially cotangent, stationary, not cotangent)".into(),
        steps,
        seed,
        initial_defect,
        stationary_base_residual: res.base,
        stationary_covector_residual: res.covector,
        solver_deviation,
        variations,
        max_fd_ratio,
        max_exact_ratio,
        sup_defect,
        sup_defect_bound: CE2_SUP_DEFECT_BOUND,
        defect_series,
        initially_cotangent,
        stationary,
        not_cotangent,
        passed: initially_cotangent && stationary && not_cotangent,
    })
}

/// One random draw of the differential checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalDraw {
    pub index: usize,
    pub exact: f64,
    pub fd: f64,
    pub relative_error: f64,
    /// Exact differential under a random connection with torsion.
    pub exact_other_connection: f64,
    pub connection_relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub schema: String,
    pub check: String,
    pub scenario: String,
    pub seed: u64,
    pub steps: usize,
    pub fd_tol: f64,
    pub connection_tol: f64,
    pub draws: Vec<FunctionalDraw>,
    pub max_relative_error: f64,
    pub max_connection_gap: f64,
    pub passed: bool,
}

impl Report for FunctionalReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn text(&self) -> String {
        let mut out = String::new();
        header_line(&mut out, &format!("{} on {}", self.check, self.scenario), self.passed);
        let _ = writeln!(
            out,
            "  {} draws; exact vs fd worst {} (tol {}); connection gap worst {} (tol {})",
            self.draws.len(),
            sci(self.max_relative_error),
            sci(self.fd_tol),
            sci(self.max_connection_gap),
            sci(self.connection_tol)
        );
        out
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = ["draw", "exact", "fd", "relative_error", "exact_other_connection", "connection_gap"]
            .map(String::from)
            .to_vec();
        let rows = self
            .draws
            .iter()
            .map(|d| {
                vec![
                    d.index.to_string(),
                    format!("{:?}", d.exact),
                    format!("{:?}", d.fd),
                    format!("{:?}", d.relative_error),
                    format!("{:?}", d.exact_other_connection),
                    format!("{:?}", d.connection_relative_gap),
                ]
            })
            .collect();
        (header, rows)
    }
}

pub const FD_RELATIVE_TOL: f64 = 1e-5;
pub const CONNECTION_RELATIVE_TOL: f64 = 1e-8;

/// Random smooth paths and free variations around the sampling region:
/// exact vs finite-difference differential, and flat vs random connection.
pub fn run_functional(scenario: &Scenario, draws: usize, seed: u64, steps: usize) -> Result<FunctionalReport> {
    let region = scenario.region();
    let n = scenario.chart.dim();
    let mut rng = sampling::rng(seed);
    let mut inputs = Vec::with_capacity(draws);
    for _ in 0..draws {
        let center: Vec<f64> = region.iter().map(|&(lo, hi)| 0.5 * (lo + hi) + 0.25 * (hi - lo) * rng.gen_range(-1.0..=1.0)).collect();
        let radius = 0.2 * region.iter().map(|&(lo, hi)| hi - lo).fold(f64::INFINITY, f64::min);
        let alpha = random_smooth_path(&center, radius, 1.0, steps, &mut rng)?;
        let v = random_variation(n, steps, Admissibility::Free, 1.0, &mut rng)?;
        let conn: ConnectionSpec = random_connection(&scenario.chart, 0.5, false, &mut rng)?;
        inputs.push((alpha, v, conn));
    }
    let records = inputs
        .par_iter()
        .enumerate()
        .map(|(index, (alpha, v, conn))| {
            let rep = compare_differentials(&scenario.system, &scenario.connection, alpha, v, 1e-5)?;
            let other = differential_exact(&scenario.system, conn, alpha, v)?;
            let scale = rep.exact.abs().max(other.abs());
            Ok(FunctionalDraw {
                index,
                exact: rep.exact,
                fd: rep.fd,
                relative_error: rep.relative_error,
                exact_other_connection: other,
                connection_relative_gap: if scale == 0.0 { 0.0 } else { (rep.exact - other).abs() / scale },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_relative_error = records.iter().map(|d| d.relative_error).fold(0.0, f64::max);
    let max_connection_gap = records.iter().map(|d| d.connection_relative_gap).fold(0.0, f64::max);
    Ok(FunctionalReport {
        schema: REPORT_SCHEMA.into(),
        check: "differential (exact vs finite differences, connection independence)".into(),
        scenario: scenario.name().into(),
        seed,
        steps,
        fd_tol: FD_RELATIVE_TOL,
        connection_tol: CONNECTION_RELATIVE_TOL,
        passed: max_relative_error <= FD_RELATIVE_TOL && max_connection_gap <= CONNECTION_RELATIVE_TOL,
        draws: records,
        max_relative_error,
        max_connection_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweepReport {
    pub schema: String,
    pub check: String,
    pub scenario: String,
    pub seed: u64,
    pub tol: f64,
    pub draws: Vec<SigmaReport>,
    pub max_gap: f64,
    pub max_first_integrand: f64,
    pub max_y_spread: f64,
    pub passed: bool,
}

impl Report for SigmaSweepReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn text(&self) -> String {
        let mut out = String::new();
        header_line(&mut out, &format!("{} on {}", self.check, self.scenario), self.passed);
        let _ = writeln!(
            out,
            "  {} draws; worst |L^H − L^KS| {} (tol {}); sup first integrand {}; y-spread {}",
            self.draws.len(),
            sci(self.max_gap),
            sci(self.tol),
            sci(self.max_first_integrand),
            sci(self.max_y_spread)
        );
        out
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = ["draw", "l_h", "l_ks", "abs_gap", "first_integrand_sup", "y_spread"]
            .map(String::from)
            .to_vec();
        let rows = self
            .draws
            .iter()
            .enumerate()
            .map(|(i, d)| {
                vec![
                    i.to_string(),
                    format!("{:?}", d.l_h),
                    format!("{:?}", d.l_ks),
                    format!("{:?}", d.abs_gap),
                    format!("{:?}", d.first_integrand_sup),
                    format!("{:?}", d.y_spread),
                ]
            })
            .collect();
        (header, rows)
    }
}

/// Discretisation budget for the sigma sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaConfig {
    pub draws: usize,
    pub seed: u64,
    pub path_steps: usize,
    pub square: usize,
    pub substeps: usize,
    pub tol: f64,
    /// Thresholds for the pointwise checks, which carry the square's
    /// difference error.
    pub pointwise_tol: f64,
}

impl Default for SigmaConfig {
    fn default() -> Self {
        SigmaConfig {
            draws: 5,
            seed: 0,
            path_steps: 512,
            square: 128,
            substeps: 4,
            tol: 1e-5,
            pointwise_tol: 1e-5,
        }
    }
}

pub fn run_sigma(scenario: &Scenario, cfg: &SigmaConfig) -> Result<SigmaSweepReport> {
    let region = scenario.region();
    let mut rng = sampling::rng(cfg.seed);
    let radius = 0.2 * region.iter().map(|&(lo, hi)| hi - lo).fold(f64::INFINITY, f64::min);
    let mut draws = Vec::with_capacity(cfg.draws);
    for _ in 0..cfg.draws {
        let center: Vec<f64> = region.iter().map(|&(lo, hi)| 0.5 * (lo + hi) + 0.25 * (hi - lo) * rng.gen_range(-1.0..=1.0)).collect();
        let alpha = random_smooth_path(&center, radius, 1.0, cfg.path_steps, &mut rng)?;
        draws.push(verify_equality(&scenario.system, &alpha, cfg.square, cfg.substeps)?);
    }
    let max_gap = draws.iter().map(|d| d.abs_gap).fold(0.0, f64::max);
    let max_first_integrand = draws.iter().map(|d| d.first_integrand_sup).fold(0.0, f64::max);
    let max_y_spread = draws.iter().map(|d| d.y_spread).fold(0.0, f64::max);
    Ok(SigmaSweepReport {
        schema: REPORT_SCHEMA.into(),
        check: "worldsheet equality L^H(α) = L^KS(α̃)".into(),
        scenario: scenario.name().into(),
        seed: cfg.seed,
        tol: cfg.tol,
        passed: max_gap <= cfg.tol && max_first_integrand <= cfg.pointwise_tol && max_y_spread <= cfg.pointwise_tol,
        draws,
        max_gap,
        max_first_integrand,
        max_y_spread,
    })
}

/// Point set for a classification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSet {
    Random { count: usize, seed: u64 },
    /// `per_axis` points along each axis of the region.
    Grid { per_axis: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub schema: String,
    pub scenario: String,
    pub labels: Option<Labels>,
    pub points: PointSet,
    /// `None` for unlabelled scenarios.
    pub consistent_with_labels: Option<bool>,
    /// Present when the scenario declares a 3-form; points where it is
    /// singular are left out.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub twisted: Option<TwistedReport>,
    pub result: ClassificationResult,
    pub passed: bool,
}

impl Report for ClassifyReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn text(&self) -> String {
        let s = &self.result.summary;
        let mut out = String::new();
        header_line(&mut out, &format!("classification of {}", self.scenario), self.passed);
        let _ = writeln!(
            out,
            "  {} points; Poisson at {} (max |[π,π]| {}); weakly foliated at {}; rank {}..{}",
            s.samples,
            s.poisson_points,
            sci(s.max_poisson_residual),
            s.weakly_foliated_points,
            s.min_rank,
            s.max_rank
        );
        if let Some(l) = &self.labels {
            let _ = writeln!(
                out,
                "  labels: poisson {}, foliated {}, weakly foliated {}; consistent: {}",
                l.poisson,
                l.foliated,
                l.weakly_foliated,
                self.consistent_with_labels.unwrap_or(true)
            );
        }
        if let Some(w) = self.result.records.iter().find_map(|r| r.witness.as_ref()) {
            let pairs: Vec<String> = w.iter().map(|(a, b)| format!("({a}, {b})")).collect();
            let _ = writeln!(out, "  first witness: {}", pairs.join(" "));
        }
        if let Some(t) = &self.twisted {
            let _ = writeln!(
                out,
                "  twisted: {} over {} points (bracket {}, dφ {})",
                crate::report::verdict(t.passed),
                t.samples,
                sci(t.bracket_residual),
                sci(t.closedness_residual)
            );
        }
        out
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let coords = self
            .result
            .records
            .first()
            .map_or(0, |r| r.point.len());
        let mut header: Vec<String> = (0..coords).map(|i| format!("p{i}")).collect();
        header.extend(["rank", "poisson_residual", "weakly_foliated", "witness"].map(String::from));
        let rows = self
            .result
            .records
            .iter()
            .map(|r| {
                let mut row: Vec<String> = r.point.iter().map(|v| format!("{v:?}")).collect();
                row.push(r.rank.to_string());
                row.push(format!("{:?}", r.poisson_residual));
                row.push(r.weakly_foliated.to_string());
                row.push(r.witness.as_ref().map_or(String::new(), |w| {
                    w.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(" ")
                }));
                row
            })
            .collect();
        (header, rows)
    }
}

/// Classifies the point set plus the scenario's fixed points. Passes when
/// the verdicts agree with the labels (and the twisted check holds, if any).
pub fn run_classify(scenario: &Scenario, points: PointSet, tol: f64) -> Result<ClassifyReport> {
    let region = scenario.region();
    let mut sample = match points {
        PointSet::Random { count, seed } => sample_box(&region, count, &mut sampling::rng(seed)),
        PointSet::Grid { per_axis } => grid_points(&region, &vec![per_axis; region.len()])?,
    };
    sample.extend(scenario.fixed_points());
    let result = classify_points(&scenario.pi, &sample, tol)?;
    let consistent_with_labels = scenario.labels().map(|l| {
        let s = &result.summary;
        let poisson_ok = if l.poisson { s.poisson } else { !s.poisson };
        let weak_ok = if l.weakly_foliated { s.weakly_foliated } else { !s.weakly_foliated };
        poisson_ok && weak_ok
    });
    let twisted = match &scenario.phi {
        Some(phi) => {
            let regular: Vec<Vec<f64>> = sample.iter().filter(|p| phi.values_at(p).is_ok()).cloned().collect();
            Some(twisted_check(&scenario.pi, phi, &regular, tol)?)
        }
        None => None,
    };
    let passed = consistent_with_labels.unwrap_or(true) && twisted.as_ref().is_none_or(|t| t.passed);
    Ok(ClassifyReport {
        schema: REPORT_SCHEMA.into(),
        scenario: scenario.name().into(),
        labels: scenario.labels().cloned(),
        points,
        consistent_with_labels,
        twisted,
        result,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub schema: String,
    pub scenario: String,
    pub m: Vec<f64>,
    pub a0: Vec<f64>,
    pub steps: usize,
    pub tol: f64,
    pub stationary_base_residual: f64,
    pub stationary_covector_residual: f64,
    /// `sup |π♯(a) − ẋ|`.
    pub cotangent_defect: f64,
    pub quasi_cotangent: TransportCheck,
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    /// The solve reproduces its own equations to `tol`.
    pub passed: bool,
}

impl Report for StationaryReport {
    fn passed(&self) -> bool {
        self.passed
    }

    fn text(&self) -> String {
        let mut out = String::new();
        header_line(&mut out, &format!("stationary path on {}", self.scenario), self.passed);
        let _ = writeln!(out, "  m = {:?}, a0 = {:?}, N = {}", self.m, self.a0, self.steps);
        let _ = writeln!(
            out,
            "  ODE residuals {} / {}; cotangent defect {}; quasi-cotangent {} (base {}, transport {})",
            sci(self.stationary_base_residual),
            sci(self.stationary_covector_residual),
            sci(self.cotangent_defect),
            self.quasi_cotangent.passed,
            sci(self.quasi_cotangent.base_residual),
            sci(self.quasi_cotangent.transport_residual)
        );
        if let (Some(x), Some(a)) = (self.x.last(), self.a.last()) {
            let _ = writeln!(out, "  x(1) = {x:?}, a(1) = {a:?}");
        }
        out
    }

    fn table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let n = self.m.len();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("a{i}")));
        let rows = self
            .t
            .iter()
            .zip(self.x.iter().zip(&self.a))
            .map(|(t, (x, a))| {
                std::iter::once(format!("{t:?}"))
                    .chain(x.iter().chain(a).map(|v| format!("{v:?}")))
                    .collect()
            })
            .collect();
        (header, rows)
    }
}

/// Initial data for `stationary`: explicit values, else the scenario's
/// `stationary` block, else the region centre and `dH(m)`.
pub fn stationary_initial(scenario: &Scenario, m: Option<Vec<f64>>, a0: Option<Vec<f64>>) -> Result<(Vec<f64>, Vec<f64>)> {
    let spec = scenario.file.stationary.clone().unwrap_or_default();
    let m = m
        .or_else(|| spec.from.as_deref().map(crate::hexfloat::unwrap))
        .unwrap_or_else(|| scenario.region().iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect());
    let a0 = match a0.or_else(|| spec.a0.as_deref().map(crate::hexfloat::unwrap)) {
        Some(a) => a,
        None => scenario.system.dh_at(&m)?.as_slice().to_vec(),
    };
    Ok((m, a0))
}

pub fn run_stationary(scenario: &Scenario, m: Vec<f64>, a0: Vec<f64>, steps: usize, tol: f64) -> Result<StationaryReport> {
    let alpha = stationary_solve(
        &scenario.system,
        &scenario.connection,
        &StationarySolveConfig {
            m: m.clone(),
            a0: a0.clone(),
            steps,
        },
    )?;
    let res = stationary_residual(&scenario.system, &scenario.connection, &alpha)?;
    let (_, cotangent_defect) = is_cotangent(&alpha, &scenario.pi, tol)?;
    let quasi_cotangent = is_quasi_cotangent(&alpha, &scenario.system, &scenario.connection, tol)?;
    Ok(StationaryReport {
        schema: REPORT_SCHEMA.into(),
        scenario: scenario.name().into(),
        m,
        a0,
        steps,
        tol,
        stationary_base_residual: res.base,
        stationary_covector_residual: res.covector,
        cotangent_defect,
        quasi_cotangent,
        t: (0..=steps).map(|i| alpha.t(i)).collect(),
        x: alpha.base().iter().map(|v| v.as_slice().to_vec()).collect(),
        a: alpha.covectors().iter().map(|v| v.as_slice().to_vec()).collect(),
        passed: res.base.max(res.covector) <= tol,
    })
}
