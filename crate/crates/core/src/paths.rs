//! Sampled paths in the cotangent chart, flows, and the path predicates.
//!
//! Every path lives on the uniform grid `t_i = i/N`, `i = 0..=N`, with
//! `N ≥ 8`. Predicates use second-order difference stencils: centred in the
//! interior and `(−3, 4, −1)/(2h)` at the ends.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{n_tensor, BivectorField, Chart, ConnectionSpec, HamiltonianSystem, VectorField};
use crate::hexfloat::{self, HexF64};

pub const MIN_STEPS: usize = 8;
pub const DEFAULT_STEPS: usize = 512;
pub const PATH_SCHEMA: &str = "cotangent-lab/path/v1";

/// Second-order derivative of uniformly spaced samples.
pub fn derivative_o2(samples: &[DVector<f64>], h: f64) -> Vec<DVector<f64>> {
    let m = samples.len();
    assert!(m >= 3, "need at least three samples");
    (0..m)
        .map(|i| {
            if i == 0 {
                (&samples[1] * 4.0 - &samples[0] * 3.0 - &samples[2]) / (2.0 * h)
            } else if i == m - 1 {
                (&samples[m - 1] * 3.0 - &samples[m - 2] * 4.0 + &samples[m - 3]) / (2.0 * h)
            } else {
                (&samples[i + 1] - &samples[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Weights of the fourth-order stencil for sample `i` of `m`, as
/// `(first index, weights over 12h)`.
fn stencil_o4(i: usize, m: usize) -> (usize, [f64; 5]) {
    const END: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const NEXT: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    const MID: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    let mirror = |w: [f64; 5]| {
        let mut r = w;
        r.reverse();
        r.map(|v| -v)
    };
    match i {
        0 => (0, END),
        1 => (0, NEXT),
        _ if i == m - 1 => (m - 5, mirror(END)),
        _ if i == m - 2 => (m - 5, mirror(NEXT)),
        _ => (i - 2, MID),
    }
}

/// Fourth-order derivative of uniformly spaced samples.
pub fn derivative_o4(samples: &[DVector<f64>], h: f64) -> Vec<DVector<f64>> {
    let m = samples.len();
    assert!(m >= 5, "need at least five samples");
    (0..m)
        .map(|i| {
            let (start, w) = stencil_o4(i, m);
            let mut d = DVector::zeros(samples[0].len());
            for (k, wk) in w.iter().enumerate() {
                if *wk != 0.0 {
                    d.axpy(*wk, &samples[start + k], 1.0);
                }
            }
            d / (12.0 * h)
        })
        .collect()
}

/// Composite Simpson weights for `m = N + 1` samples with `N` even.
pub fn simpson_weights(m: usize, h: f64) -> Result<Vec<f64>> {
    if m < 3 || !(m - 1).is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "Simpson quadrature needs an even number of intervals, got {}",
            m.saturating_sub(1)
        )));
    }
    Ok((0..m)
        .map(|i| {
            let w = if i == 0 || i == m - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect())
}

pub fn simpson(values: &[f64], h: f64) -> Result<f64> {
    Ok(simpson_weights(values.len(), h)?
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum())
}

/// Classical RK4 for `ẏ = f(t, y)` over `[t0, t1]`; returns `steps + 1`
/// samples. `guard` is called on every accepted sample.
pub fn rk4<F, G>(mut f: F, y0: DVector<f64>, t0: f64, t1: f64, steps: usize, mut guard: G) -> Result<Vec<DVector<f64>>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
    G: FnMut(usize, &DVector<f64>) -> Result<()>,
{
    if steps == 0 {
        return Err(Error::invalid("RK4 needs at least one step"));
    }
    let h = (t1 - t0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    guard(0, &y0)?;
    out.push(y0);
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let y = &out[s];
        let k1 = f(t, y)?;
        let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)))?;
        let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)))?;
        let k4 = f(t + h, &(y + &k3 * h))?;
        let next = y + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("integration blew up at step {}", s + 1)));
        }
        guard(s + 1, &next)?;
        out.push(next);
    }
    Ok(out)
}

fn chart_guard(chart: &Chart, n: usize) -> impl FnMut(usize, &DVector<f64>) -> Result<()> + '_ {
    move |index, y| {
        if chart.contains(&y.as_slice()[..n]) {
            Ok(())
        } else {
            Err(Error::LeftChart { index })
        }
    }
}

/// Integral curve of `X` from `p` over `[0, T]`, sampled at `steps + 1` points.
pub fn flow(x: &VectorField, p: &[f64], t: f64, steps: usize) -> Result<Vec<DVector<f64>>> {
    let n = x.chart().dim();
    check_dim(n, p.len())?;
    if steps < MIN_STEPS {
        return Err(Error::invalid(format!("flow needs at least {MIN_STEPS} steps")));
    }
    rk4(
        |_, y| x.value_at(y.as_slice()),
        DVector::from_column_slice(p),
        0.0,
        t,
        steps,
        chart_guard(x.chart(), n),
    )
}

/// Flow together with its linearisation `Φ_t = Tφ_t`, integrated from
/// `Φ̇ = J(x) Φ`, `Φ_0 = I`.
pub fn flow_with_tangent(
    x: &VectorField,
    p: &[f64],
    t: f64,
    steps: usize,
) -> Result<Vec<(DVector<f64>, DMatrix<f64>)>> {
    let n = x.chart().dim();
    check_dim(n, p.len())?;
    let mut y0 = DVector::zeros(n + n * n);
    y0.rows_mut(0, n).copy_from_slice(p);
    for i in 0..n {
        y0[n + i * n + i] = 1.0;
    }
    let samples = rk4(
        |_, y| {
            let pos = y.rows(0, n).into_owned();
            let phi = DMatrix::from_column_slice(n, n, &y.as_slice()[n..]);
            let jphi = x.jacobian_at(pos.as_slice())? * phi;
            let mut dy = DVector::zeros(n + n * n);
            dy.rows_mut(0, n).copy_from(&x.value_at(pos.as_slice())?);
            dy.rows_mut(n, n * n).copy_from_slice(jphi.as_slice());
            Ok(dy)
        },
        y0,
        0.0,
        t,
        steps,
        chart_guard(x.chart(), n),
    )?;
    Ok(samples
        .into_iter()
        .map(|y| {
            (
                y.rows(0, n).into_owned(),
                DMatrix::from_column_slice(n, n, &y.as_slice()[n..]),
            )
        })
        .collect())
}

fn validate_samples(steps: usize, a: &[DVector<f64>], b: &[DVector<f64>]) -> Result<usize> {
    if steps < MIN_STEPS {
        return Err(Error::invalid(format!("paths need N ≥ {MIN_STEPS}, got {steps}")));
    }
    check_dim(steps + 1, a.len())?;
    check_dim(steps + 1, b.len())?;
    let n = a[0].len();
    for v in a.iter().chain(b) {
        check_dim(n, v.len())?;
    }
    if a.iter().chain(b).any(|v| v.iter().any(|c| !c.is_finite())) {
        return Err(Error::invalid("path samples must be finite"));
    }
    Ok(n)
}

/// A path `α(t) = (x(t), a(t))` in `T*ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentPath {
    steps: usize,
    x: Vec<DVector<f64>>,
    a: Vec<DVector<f64>>,
}

impl CotangentPath {
    pub fn new(x: Vec<DVector<f64>>, a: Vec<DVector<f64>>) -> Result<Self> {
        let steps = x.len().saturating_sub(1);
        validate_samples(steps, &x, &a)?;
        Ok(CotangentPath { steps, x, a })
    }

    /// Samples `x(t_i)` and `a(t_i)` from closures.
    pub fn from_fn(
        steps: usize,
        mut x: impl FnMut(f64) -> DVector<f64>,
        mut a: impl FnMut(f64) -> DVector<f64>,
    ) -> Result<Self> {
        let ts = (0..=steps).map(|i| i as f64 / steps as f64);
        Self::new(ts.clone().map(&mut x).collect(), ts.map(&mut a).collect())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 / self.steps as f64
    }

    pub fn base(&self) -> &[DVector<f64>] {
        &self.x
    }

    pub fn covectors(&self) -> &[DVector<f64>] {
        &self.a
    }

    pub fn check_in_chart(&self, chart: &Chart) -> Result<()> {
        check_dim(chart.dim(), self.dim())?;
        match self.x.iter().position(|p| !chart.contains(p.as_slice())) {
            Some(index) => Err(Error::LeftChart { index }),
            None => Ok(()),
        }
    }

    /// `α + ε·v`, componentwise in chart coordinates.
    pub fn shifted(&self, v: &PathVariation, eps: f64) -> Result<Self> {
        check_dim(self.steps, v.steps)?;
        check_dim(self.dim(), v.dim())?;
        let x = self.x.iter().zip(&v.gamma).map(|(x, g)| x + g * eps).collect();
        let a = self.a.iter().zip(&v.delta).map(|(a, d)| a + d * eps).collect();
        Self::new(x, a)
    }

    /// Every `stride`-th sample; `stride` must divide `N`.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !self.steps.is_multiple_of(stride) {
            return Err(Error::invalid(format!("stride {stride} does not divide N = {}", self.steps)));
        }
        Self::new(
            self.x.iter().step_by(stride).cloned().collect(),
            self.a.iter().step_by(stride).cloned().collect(),
        )
    }

    pub fn to_json(&self, chart: &Chart) -> Result<String> {
        let doc = PathDoc {
            schema: PATH_SCHEMA.into(),
            coords: chart.coords().to_vec(),
            steps: self.steps,
            x: self.x.iter().map(|v| hexfloat::wrap(v.as_slice())).collect(),
            a: self.a.iter().map(|v| hexfloat::wrap(v.as_slice())).collect(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_json(src: &str) -> Result<(Vec<String>, Self)> {
        let doc: PathDoc = serde_json::from_str(src).map_err(|e| Error::invalid(format!("path JSON: {e}")))?;
        if doc.schema != PATH_SCHEMA {
            return Err(Error::invalid(format!("unexpected path schema `{}`", doc.schema)));
        }
        let conv = |rows: &[Vec<HexF64>]| -> Vec<DVector<f64>> {
            rows.iter().map(|r| DVector::from_vec(hexfloat::unwrap(r))).collect()
        };
        let path = Self::new(conv(&doc.x), conv(&doc.a))?;
        check_dim(doc.steps, path.steps)?;
        check_dim(doc.coords.len(), path.dim())?;
        Ok((doc.coords, path))
    }

    /// CSV with columns `t, x_1..x_n, a_1..a_n`; reals in shortest
    /// round-trip decimal form.
    pub fn write_csv<W: Write>(&self, chart: &Chart, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(chart.coords().iter().cloned());
        header.extend(chart.coords().iter().map(|c| format!("a_{c}")));
        let io = |e: csv::Error| Error::invalid(format!("CSV output: {e}"));
        w.write_record(&header).map_err(io)?;
        for i in 0..=self.steps {
            let row: Vec<String> = std::iter::once(self.t(i))
                .chain(self.x[i].iter().copied())
                .chain(self.a[i].iter().copied())
                .map(|v| format!("{v:?}"))
                .collect();
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::invalid(format!("CSV output: {e}")))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<(Vec<String>, Self)> {
        let mut r = csv::Reader::from_reader(input);
        let bad = |e: csv::Error| Error::invalid(format!("path CSV: {e}"));
        let header = r.headers().map_err(bad)?.clone();
        if header.len() < 3 || (header.len() - 1) % 2 != 0 || &header[0] != "t" {
            return Err(Error::invalid("path CSV header must be t, coordinates, covector components"));
        }
        let n = (header.len() - 1) / 2;
        let coords = header.iter().skip(1).take(n).map(str::to_string).collect();
        let (mut x, mut a) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec.map_err(bad)?;
            let vals = rec
                .iter()
                .map(|s| hexfloat::parse(s).ok_or_else(|| Error::invalid(format!("path CSV: bad real `{s}`"))))
                .collect::<Result<Vec<f64>>>()?;
            x.push(DVector::from_column_slice(&vals[1..=n]));
            a.push(DVector::from_column_slice(&vals[n + 1..]));
        }
        Ok((coords, Self::new(x, a)?))
    }
}

#[derive(Serialize, Deserialize)]
struct PathDoc {
    schema: String,
    coords: Vec<String>,
    steps: usize,
    x: Vec<Vec<HexF64>>,
    a: Vec<Vec<HexF64>>,
}

/// A path `b(t)` in `Tℝⁿ` over the base samples `x(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPath {
    steps: usize,
    x: Vec<DVector<f64>>,
    b: Vec<DVector<f64>>,
}

impl TangentPath {
    pub fn new(x: Vec<DVector<f64>>, b: Vec<DVector<f64>>) -> Result<Self> {
        let steps = x.len().saturating_sub(1);
        validate_samples(steps, &x, &b)?;
        Ok(TangentPath { steps, x, b })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn base(&self) -> &[DVector<f64>] {
        &self.x
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.b
    }

    pub fn sup_norm(&self) -> f64 {
        self.b.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Which variations are admissible for a stationarity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Admissibility {
    Free,
    FixedEndpoints,
    /// Fixed endpoints, `δ0(0) = 0`, and vanishing one-sided derivative of
    /// `γ0` at `t = 0`.
    InitiallyCotangent,
}

/// A variation `(γ0, δ0)` with chart-coordinate components.
#[derive(Debug, Clone, PartialEq)]
pub struct PathVariation {
    steps: usize,
    gamma: Vec<DVector<f64>>,
    delta: Vec<DVector<f64>>,
    class: Admissibility,
}

impl PathVariation {
    pub fn new(gamma: Vec<DVector<f64>>, delta: Vec<DVector<f64>>, class: Admissibility) -> Result<Self> {
        let steps = gamma.len().saturating_sub(1);
        validate_samples(steps, &gamma, &delta)?;
        let v = PathVariation { steps, gamma, delta, class };
        v.check_class()?;
        Ok(v)
    }

    pub fn zero(steps: usize, n: usize) -> Result<Self> {
        let z = vec![DVector::zeros(n); steps + 1];
        Self::new(z.clone(), z, Admissibility::InitiallyCotangent)
    }

    fn check_class(&self) -> Result<()> {
        let scale = self.norm().max(1.0) * 1e-12;
        let fixed = self.gamma[0].amax() <= scale && self.gamma[self.steps].amax() <= scale;
        let initial = self.delta[0].amax() <= scale
            && (&self.gamma[1] * 4.0 - &self.gamma[2] - &self.gamma[0] * 3.0).amax() <= scale;
        let ok = match self.class {
            Admissibility::Free => true,
            Admissibility::FixedEndpoints => fixed,
            Admissibility::InitiallyCotangent => fixed && initial,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("variation violates the {:?} conditions", self.class)))
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.gamma[0].len()
    }

    pub fn class(&self) -> Admissibility {
        self.class
    }

    pub fn gamma(&self) -> &[DVector<f64>] {
        &self.gamma
    }

    pub fn delta(&self) -> &[DVector<f64>] {
        &self.delta
    }

    /// Largest sample norm over both components.
    pub fn norm(&self) -> f64 {
        self.gamma
            .iter()
            .chain(&self.delta)
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// `c_i = π♯_{x_i}(a_i) − ẋ_i`.
pub fn cotangent_defect(alpha: &CotangentPath, pi: &BivectorField) -> Result<TangentPath> {
    check_dim(pi.dim(), alpha.dim())?;
    let xdot = derivative_o2(&alpha.x, alpha.h());
    let c = alpha
        .x
        .iter()
        .zip(&alpha.a)
        .zip(&xdot)
        .map(|((x, a), xd)| Ok(pi.matrix_at(x.as_slice())? * a - xd))
        .collect::<Result<Vec<_>>>()?;
    TangentPath::new(alpha.x.clone(), c)
}

/// Returns the verdict and `sup_i |c_i|`.
pub fn is_cotangent(alpha: &CotangentPath, pi: &BivectorField, tol: f64) -> Result<(bool, f64)> {
    let sup = cotangent_defect(alpha, pi)?.sup_norm();
    Ok((sup <= tol, sup))
}

/// Residuals of the two tangent-integral-curve conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportCheck {
    pub passed: bool,
    /// `sup |ẋ − X(x)|`.
    pub base_residual: f64,
    /// `sup |∇_ẋ b − ∇_b X − Tor(X, b)|`.
    pub transport_residual: f64,
}

fn base_residual(x: &[DVector<f64>], field: &VectorField, h: f64) -> Result<f64> {
    let xdot = derivative_o2(x, h);
    x.iter().zip(&xdot).try_fold(0.0f64, |m, (p, d)| {
        Ok(m.max((field.value_at(p.as_slice())? - d).norm()))
    })
}

/// `sup_i |D b_i + Γ(X, b_i) − N(b_i)|` with `N(v) = ∇_v X + Tor(X, v)`.
fn transport_residual(
    x: &[DVector<f64>],
    b: &[DVector<f64>],
    field: &VectorField,
    conn: &ConnectionSpec,
    h: f64,
) -> Result<f64> {
    let bdot = derivative_o2(b, h);
    let mut sup: f64 = 0.0;
    for ((p, bi), bd) in x.iter().zip(b).zip(&bdot) {
        let gamma = conn.at(p.as_slice())?;
        let xv = field.value_at(p.as_slice())?;
        let cov = gamma.along_vector(&xv, bi, bd);
        let r = cov - n_tensor(field, conn, p.as_slice())?.apply(bi);
        sup = sup.max(r.norm());
    }
    Ok(sup)
}

pub fn is_tangent_integral_curve(
    b: &TangentPath,
    field: &VectorField,
    conn: &ConnectionSpec,
    tol: f64,
) -> Result<TransportCheck> {
    let h = 1.0 / b.steps as f64;
    let base_residual = base_residual(&b.x, field, h)?;
    let transport_residual = transport_residual(&b.x, &b.b, field, conn, h)?;
    Ok(TransportCheck {
        passed: base_residual <= tol && transport_residual <= tol,
        base_residual,
        transport_residual,
    })
}

/// Checks that the base follows `X_H` and the defect
/// `c = π♯(α) − X_H` solves `∇_ẋ c = K^H(c)`.
pub fn is_quasi_cotangent(
    alpha: &CotangentPath,
    sys: &HamiltonianSystem,
    conn: &ConnectionSpec,
    tol: f64,
) -> Result<TransportCheck> {
    check_dim(sys.dim(), alpha.dim())?;
    let xh = sys.xh();
    let c = alpha
        .x
        .iter()
        .zip(&alpha.a)
        .map(|(x, a)| Ok(sys.pi().matrix_at(x.as_slice())? * a - xh.value_at(x.as_slice())?))
        .collect::<Result<Vec<_>>>()?;
    let base_residual = base_residual(&alpha.x, xh, alpha.h())?;
    let transport_residual = transport_residual(&alpha.x, &c, xh, conn, alpha.h())?;
    Ok(TransportCheck {
        passed: base_residual <= tol && transport_residual <= tol,
        base_residual,
        transport_residual,
    })
}
