use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use cotangent_lab::catalog;
use cotangent_lab::error::Error;
use cotangent_lab::harness::{self, InitialData, PointSet, SigmaConfig, SweepConfig};
use cotangent_lab::report::{Format, Report, ReportSet};
use cotangent_lab::scenario::Scenario;

const THREADS_ENV: &str = "COTANGENT_LAB_THREADS";

#[derive(Parser)]
#[command(name = "cotangent-lab", version, about = "Bivector fields, cotangent paths and the Hamiltonian path functional")]
struct Cli {
    /// Discretisation size: grid points per axis for `classify`, path
    /// intervals for the path commands, square intervals for `verify --item sigma`.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance; each command has its own default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Poisson / weak-foliation verdicts at sample points.
    Classify {
        /// Catalog id or path to a scenario JSON file.
        scenario: String,
        /// Random points when `--grid` is not given.
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
    /// Solves the stationary equations from given initial data.
    Stationary {
        scenario: String,
        /// Base point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        m: Option<Vec<f64>>,
        /// Initial covector, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a0: Option<Vec<f64>>,
    },
    /// Exact vs finite-difference differential on random paths.
    Functional {
        scenario: String,
        #[arg(long, default_value_t = 10)]
        draws: usize,
    },
    /// Theorem-level checks.
    Verify {
        #[arg(long, value_enum)]
        item: Item,
        /// Restrict to one scenario; defaults to the built-in suite.
        scenario: Option<String>,
        #[arg(long, default_value_t = 20)]
        draws: usize,
    },
    /// The built-in catalog.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Item {
    /// Cotangent initial data stay cotangent.
    #[value(name = "1")]
    One,
    /// The initially-cotangent stationary path that is not cotangent.
    #[value(name = "2ce")]
    TwoCe,
    /// Stationary paths are quasi-cotangent on Poisson fields.
    #[value(name = "3")]
    Three,
    /// Worldsheet equality for the flow extension.
    Sigma,
}

#[derive(Subcommand)]
enum ExamplesAction {
    /// Catalog ids and descriptions.
    List,
    /// Prints an entry as a scenario file.
    Export { id: String },
    /// Classifies every entry and compares with its labels.
    Check,
}

fn load_scenario(spec: &str) -> anyhow::Result<Scenario> {
    let path = Path::new(spec);
    if path.exists() {
        let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Scenario::from_json(&src).with_context(|| format!("loading {}", path.display()))?)
    } else if catalog::IDS.contains(&spec) {
        Ok(catalog::load(spec)?)
    } else {
        Err(Error::invalid(format!(
            "`{spec}` is neither a file nor a catalog id ({})",
            catalog::IDS.join(", ")
        ))
        .into())
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

/// Rendered output and whether every check passed.
struct Outcome {
    body: String,
    passed: bool,
}

fn finish<R: Report>(r: &R, format: Format) -> Outcome {
    Outcome {
        body: r.render(format),
        passed: r.passed(),
    }
}

fn sweep(cli: &Cli, draws: usize, default_steps: usize) -> SweepConfig {
    SweepConfig {
        draws,
        seed: cli.seed,
        steps: cli.grid.unwrap_or(default_steps),
        tol: cli.tol.unwrap_or(1e-6),
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let fmt = cli.format;
    match &cli.command {
        Command::Classify { scenario, count } => {
            let s = load_scenario(scenario)?;
            let points = match cli.grid {
                Some(per_axis) => PointSet::Grid { per_axis },
                None => PointSet::Random {
                    count: *count,
                    seed: cli.seed,
                },
            };
            Ok(finish(&harness::run_classify(&s, points, cli.tol.unwrap_or(1e-9))?, fmt))
        }
        Command::Stationary { scenario, m, a0 } => {
            let s = load_scenario(scenario)?;
            let (m, a0) = harness::stationary_initial(&s, m.clone(), a0.clone())?;
            let steps = cli
                .grid
                .or(s.file.stationary.as_ref().and_then(|st| st.steps))
                .unwrap_or(2048);
            Ok(finish(&harness::run_stationary(&s, m, a0, steps, cli.tol.unwrap_or(1e-6))?, fmt))
        }
        Command::Functional { scenario, draws } => {
            let s = load_scenario(scenario)?;
            Ok(finish(&harness::run_functional(&s, *draws, cli.seed, cli.grid.unwrap_or(512))?, fmt))
        }
        Command::Verify { item, scenario, draws } => {
            let chosen = scenario.as_deref().map(load_scenario).transpose()?;
            match item {
                Item::One => {
                    let cfg = sweep(cli, *draws, 2048);
                    let suite = match chosen {
                        Some(s) => vec![s],
                        None => harness::item1_suite()?,
                    };
                    let reports = suite.iter().map(|s| harness::run_item1(s, &cfg)).collect::<Result<Vec<_>, _>>()?;
                    Ok(finish(&ReportSet::new("item 1", reports), fmt))
                }
                Item::Three => {
                    let cfg = sweep(cli, *draws, 2048);
                    let mut reports = Vec::new();
                    match chosen {
                        Some(s) if s.labels().is_some_and(|l| l.poisson) => {
                            reports.push(harness::run_item3_forward(&s, &cfg, InitialData::Arbitrary)?);
                        }
                        Some(s) => reports.push(harness::search_item3_witness(&s, &cfg)?),
                        None => {
                            for s in harness::item3_suite()? {
                                reports.push(harness::run_item3_forward(&s, &cfg, InitialData::Arbitrary)?);
                                reports.push(harness::run_item3_forward(&s, &cfg, InitialData::Gradient)?);
                            }
                            let r3 = catalog::load("r3_nonfoliated")?;
                            reports.push(harness::search_item3_witness(&r3, &cfg)?);
                        }
                    }
                    Ok(finish(&ReportSet::new("item 3", reports), fmt))
                }
                Item::TwoCe => {
                    let steps = cli.grid.unwrap_or(2048);
                    Ok(finish(&harness::run_counterexample_ii(steps, *draws, cli.seed)?, fmt))
                }
                Item::Sigma => {
                    let square = cli.grid.unwrap_or(128);
                    let cfg = SigmaConfig {
                        draws: *draws,
                        seed: cli.seed,
                        path_steps: 4 * square,
                        square,
                        tol: cli.tol.unwrap_or(1e-5),
                        ..SigmaConfig::default()
                    };
                    let suite = match chosen {
                        Some(s) => vec![s],
                        None => vec![catalog::load("symplectic2d")?, catalog::load("linear_so3")?],
                    };
                    let reports = suite.iter().map(|s| harness::run_sigma(s, &cfg)).collect::<Result<Vec<_>, _>>()?;
                    Ok(finish(&ReportSet::new("sigma", reports), fmt))
                }
            }
        }
        Command::Examples { action } => examples(cli, action),
    }
}

fn examples(cli: &Cli, action: &ExamplesAction) -> anyhow::Result<Outcome> {
    match action {
        ExamplesAction::List => {
            let entries = catalog::IDS
                .iter()
                .map(|id| catalog::file(id).map(|f| (f.name, f.description)))
                .collect::<Result<Vec<_>, _>>()?;
            let body = match cli.format {
                Format::Json => serde_json::to_string_pretty(
                    &entries
                        .iter()
                        .map(|(id, d)| serde_json::json!({"id": id, "description": d}))
                        .collect::<Vec<_>>(),
                )?,
                Format::Text => entries.iter().map(|(id, d)| format!("{id:28} {d}\n")).collect(),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["id", "description"])?;
                    for (id, d) in &entries {
                        w.write_record([id, d])?;
                    }
                    String::from_utf8(w.into_inner()?)?
                }
            };
            Ok(Outcome { body, passed: true })
        }
        ExamplesAction::Export { id } => Ok(Outcome {
            body: catalog::file(id)?.to_json(),
            passed: true,
        }),
        ExamplesAction::Check => {
            let tol = cli.tol.unwrap_or(1e-9);
            let reports = catalog::IDS
                .iter()
                .map(|id| {
                    harness::run_classify(
                        &catalog::load(id)?,
                        PointSet::Random {
                            count: 50,
                            seed: cli.seed,
                        },
                        tol,
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(finish(&ReportSet::new("catalog self-check", reports), cli.format))
        }
    }
}

/// 3 for evaluation singularities (including paths leaving the chart),
/// 2 for everything else that prevents a report.
fn failure_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Eval(_) | Error::LeftChart { .. }) => 3,
        _ => 2,
    }
}

/// The error chain, leaving out causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !parts.last().is_some_and(|prev| prev.contains(&msg)) {
            parts.push(msg);
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| run(&cli)).and_then(|outcome| {
        let mut body = outcome.body;
        if !body.ends_with('\n') {
            body.push('\n');
        }
        match &cli.out {
            Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
            None => print!("{body}"),
        }
        Ok(outcome.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(failure_code(&e))
        }
    }
}
