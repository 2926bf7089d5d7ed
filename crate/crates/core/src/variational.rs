//! The functional `L^H(α) = ∫⟨X_H(x) − ẋ, α⟩ dt`, its first variation, and the
//! stationary-point equations.
//!
//! The functional and both forms of its differential share one discretisation:
//! fourth-order differences for `ẋ`, `γ̇0`, `α̇` and composite Simpson
//! quadrature. With chart-coordinate variations this makes
//! [`differential_exact`] the exact derivative of the discrete functional.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{ConnectionSpec, HamiltonianSystem};
use crate::paths::{
    derivative_o2, derivative_o4, rk4, simpson, Admissibility, CotangentPath,
    PathVariation, MIN_STEPS,
};

fn check_pair(sys: &HamiltonianSystem, alpha: &CotangentPath) -> Result<()> {
    check_dim(sys.dim(), alpha.dim())?;
    if !alpha.steps().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "the functional needs an even N, got {}",
            alpha.steps()
        )));
    }
    Ok(())
}

/// Pointwise integrand `⟨X_H(x_i) − ẋ_i, a_i⟩`.
pub fn lagrangian_density(sys: &HamiltonianSystem, alpha: &CotangentPath) -> Result<Vec<f64>> {
    check_pair(sys, alpha)?;
    let xdot = derivative_o4(alpha.base(), alpha.h());
    alpha
        .base()
        .iter()
        .zip(alpha.covectors())
        .zip(&xdot)
        .map(|((x, a), xd)| Ok((sys.xh().value_at(x.as_slice())? - xd).dot(a)))
        .collect()
}

pub fn lagrangian(sys: &HamiltonianSystem, alpha: &CotangentPath) -> Result<f64> {
    simpson(&lagrangian_density(sys, alpha)?, alpha.h())
}

/// First form of the differential:
/// `∫⟨δ0, X_H − ẋ⟩ + ∫⟨α, ∇_{γ0} X_H + Tor(ẋ, γ0) − ∇_ẋ γ0⟩`.
///
/// The variation stores chart-coordinate components. The connection-adapted
/// covector part is `δ0 = δ − Γ*(γ0, α)`, so the result does not depend on
/// the connection.
pub fn differential_exact(
    sys: &HamiltonianSystem,
    conn: &ConnectionSpec,
    alpha: &CotangentPath,
    v: &PathVariation,
) -> Result<f64> {
    check_pair(sys, alpha)?;
    check_dim(alpha.steps(), v.steps())?;
    let h = alpha.h();
    let xdot = derivative_o4(alpha.base(), h);
    let gdot = derivative_o4(v.gamma(), h);
    let mut density = Vec::with_capacity(alpha.steps() + 1);
    for i in 0..=alpha.steps() {
        let (x, a) = (&alpha.base()[i], &alpha.covectors()[i]);
        let (g, d) = (&v.gamma()[i], &v.delta()[i]);
        let p = x.as_slice();
        let gamma = conn.at(p)?;
        let xh = sys.xh().value_at(p)?;
        let delta_cov = d - gamma.dual_contract(g, a);
        let nabla_g_x = sys.xh().jacobian_at(p)? * g + gamma.contract(g, &xh);
        let tor = gamma.torsion(&xdot[i], g);
        let nabla_xdot_g = gamma.along_vector(&xdot[i], g, &gdot[i]);
        density.push(delta_cov.dot(&(&xh - &xdot[i])) + a.dot(&(nabla_g_x + tor - nabla_xdot_g)));
    }
    simpson(&density, h)
}

/// Second form, after integrating `⟨α, ∇_ẋ γ0⟩` by parts:
/// `∫⟨δ0, X_H − ẋ⟩ + ∫⟨α, ∇_{γ0} X_H + Tor(ẋ, γ0)⟩ + ∫⟨∇_ẋ α, γ0⟩
///  − ⟨α(1), γ0(1)⟩ + ⟨α(0), γ0(0)⟩`.
pub fn differential_by_parts(
    sys: &HamiltonianSystem,
    conn: &ConnectionSpec,
    alpha: &CotangentPath,
    v: &PathVariation,
) -> Result<f64> {
    check_pair(sys, alpha)?;
    check_dim(alpha.steps(), v.steps())?;
    let h = alpha.h();
    let n_last = alpha.steps();
    let xdot = derivative_o4(alpha.base(), h);
    let adot = derivative_o4(alpha.covectors(), h);
    let mut density = Vec::with_capacity(n_last + 1);
    for i in 0..=n_last {
        let (x, a) = (&alpha.base()[i], &alpha.covectors()[i]);
        let (g, d) = (&v.gamma()[i], &v.delta()[i]);
        let p = x.as_slice();
        let gamma = conn.at(p)?;
        let xh = sys.xh().value_at(p)?;
        let delta_cov = d - gamma.dual_contract(g, a);
        let nabla_g_x = sys.xh().jacobian_at(p)? * g + gamma.contract(g, &xh);
        let tor = gamma.torsion(&xdot[i], g);
        let nabla_xdot_a = gamma.along_covector(&xdot[i], a, &adot[i]);
        density.push(
            delta_cov.dot(&(&xh - &xdot[i])) + a.dot(&(nabla_g_x + tor)) + nabla_xdot_a.dot(g),
        );
    }
    let boundary = alpha.covectors()[n_last].dot(&v.gamma()[n_last]) - alpha.covectors()[0].dot(&v.gamma()[0]);
    Ok(simpson(&density, h)? - boundary)
}

/// Central difference `(L(α + εv) − L(α − εv)) / 2ε`.
pub fn differential_fd(
    sys: &HamiltonianSystem,
    alpha: &CotangentPath,
    v: &PathVariation,
    eps: f64,
) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::invalid(format!("fd step {eps:e} outside [1e-7, 1e-3]")));
    }
    let plus = lagrangian(sys, &alpha.shifted(v, eps)?)?;
    let minus = lagrangian(sys, &alpha.shifted(v, -eps)?)?;
    Ok((plus - minus) / (2.0 * eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub exact: f64,
    pub fd: f64,
    /// `|exact − fd| / max(|exact|, |fd|)`, zero when both vanish.
    pub relative_error: f64,
    pub class: Admissibility,
}

pub fn compare_differentials(
    sys: &HamiltonianSystem,
    conn: &ConnectionSpec,
    alpha: &CotangentPath,
    v: &PathVariation,
    eps: f64,
) -> Result<VariationReport> {
    let exact = differential_exact(sys, conn, alpha, v)?;
    let fd = differential_fd(sys, alpha, v, eps)?;
    let scale = exact.abs().max(fd.abs());
    Ok(VariationReport {
        exact,
        fd,
        relative_error: if scale == 0.0 { 0.0 } else { (exact - fd).abs() / scale },
        class: v.class(),
    })
}

/// Initial data for [`stationary_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolveConfig {
    pub m: Vec<f64>,
    pub a0: Vec<f64>,
    pub steps: usize,
}

/// Integrates `ẋ = X_H(x)`, `∇_ẋ a = −(K^H)* a` with RK4 over `[0, 1]`.
///
/// In coordinates the covector equation reads `ȧ = Γ*(ẋ, a) − Kᵀ a`; the
/// Christoffel terms cancel and leave `ȧ = −J(x)ᵀ a`.
pub fn stationary_solve(
    sys: &HamiltonianSystem,
    conn: &ConnectionSpec,
    cfg: &StationarySolveConfig,
) -> Result<CotangentPath> {
    let n = sys.dim();
    check_dim(n, cfg.m.len())?;
    check_dim(n, cfg.a0.len())?;
    if cfg.steps < MIN_STEPS {
        return Err(Error::invalid(format!("stationary solve needs at least {MIN_STEPS} steps")));
    }
    let chart = sys.chart().clone();
    let mut y0 = DVector::zeros(2 * n);
    y0.rows_mut(0, n).copy_from_slice(&cfg.m);
    y0.rows_mut(n, n).copy_from_slice(&cfg.a0);
    let samples = rk4(
        |_, y| {
            let x = y.rows(0, n).into_owned();
            let a = y.rows(n, n).into_owned();
            let p = x.as_slice();
            let xdot = sys.xh().value_at(p)?;
            let k = sys.k_tensor_at(conn, p)?;
            let adot = conn.at(p)?.dual_contract(&xdot, &a) - k.adjoint_apply(&a);
            let mut dy = DVector::zeros(2 * n);
            dy.rows_mut(0, n).copy_from(&xdot);
            dy.rows_mut(n, n).copy_from(&adot);
            Ok(dy)
        },
        y0,
        0.0,
        1.0,
        cfg.steps,
        |index, y| {
            if chart.contains(&y.as_slice()[..n]) {
                Ok(())
            } else {
                Err(Error::LeftChart { index })
            }
        },
    )?;
    let (x, a) = samples
        .into_iter()
        .map(|y| (y.rows(0, n).into_owned(), y.rows(n, n).into_owned()))
        .unzip();
    CotangentPath::new(x, a)
}

/// Residuals of both stationary equations on a sampled path, using
/// second-order differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryResidual {
    /// `sup |ẋ − X_H(x)|`.
    pub base: f64,
    /// `sup |∇_ẋ a + (K^H)* a|`.
    pub covector: f64,
}

pub fn stationary_residual(
    sys: &HamiltonianSystem,
    conn: &ConnectionSpec,
    alpha: &CotangentPath,
) -> Result<StationaryResidual> {
    check_dim(sys.dim(), alpha.dim())?;
    let h = alpha.h();
    let xdot = derivative_o2(alpha.base(), h);
    let adot = derivative_o2(alpha.covectors(), h);
    let (mut base, mut covector): (f64, f64) = (0.0, 0.0);
    for i in 0..=alpha.steps() {
        let p = alpha.base()[i].as_slice();
        let a = &alpha.covectors()[i];
        base = base.max((&xdot[i] - sys.xh().value_at(p)?).norm());
        let cov = conn.at(p)?.along_covector(&xdot[i], a, &adot[i]);
        covector = covector.max((cov + sys.k_tensor_at(conn, p)?.adjoint_apply(a)).norm());
    }
    Ok(StationaryResidual { base, covector })
}

/// Residual series of `∇_ẋ c = K^H(c) + (L_{X_H}π)♯(α − dH)` along a path whose
/// base follows `X_H`, where `c = π♯(α) − X_H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClefResidual {
    /// Residual of the full equation at each sample.
    pub full: Vec<f64>,
    /// Residual with the Lie-derivative term dropped.
    pub reduced: Vec<f64>,
}

impl ClefResidual {
    pub fn full_sup(&self) -> f64 {
        self.full.iter().copied().fold(0.0, f64::max)
    }

    pub fn reduced_sup(&self) -> f64 {
        self.reduced.iter().copied().fold(0.0, f64::max)
    }
}

pub fn clef_residual(
    sys: &HamiltonianSystem,
    conn: &ConnectionSpec,
    alpha: &CotangentPath,
) -> Result<ClefResidual> {
    check_dim(sys.dim(), alpha.dim())?;
    let xh = sys.xh();
    let c = alpha
        .base()
        .iter()
        .zip(alpha.covectors())
        .map(|(x, a)| Ok(sys.pi().matrix_at(x.as_slice())? * a - xh.value_at(x.as_slice())?))
        .collect::<Result<Vec<_>>>()?;
    let cdot = derivative_o2(&c, alpha.h());
    let mut full = Vec::with_capacity(c.len());
    let mut reduced = Vec::with_capacity(c.len());
    for i in 0..c.len() {
        let p = alpha.base()[i].as_slice();
        let a = &alpha.covectors()[i];
        let xv = xh.value_at(p)?;
        let lhs = conn.at(p)?.along_vector(&xv, &c[i], &cdot[i]);
        let r = lhs - sys.k_tensor_at(conn, p)?.apply(&c[i]);
        let lie = sys.lie_derivative().matrix_at(p)? * (a - sys.dh_at(p)?);
        full.push((&r - lie).norm());
        reduced.push(r.norm());
    }
    Ok(ClefResidual { full, reduced })
}

/// Two views of `∇_ẋ dH = −(K^H)* dH` along the flow of `X_H` from `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhOdeCheck {
    /// Sup of the second-order discrete residual with `a_i = dH(x_i)`.
    pub fd_residual: f64,
    /// Sup distance between `dH(x(t))` and the RK4 covector solution
    /// started at `dH(m)`.
    pub ode_residual: f64,
}

pub fn dh_ode_check(
    sys: &HamiltonianSystem,
    conn: &ConnectionSpec,
    m: &[f64],
    steps: usize,
) -> Result<DhOdeCheck> {
    if !conn.is_torsion_free() {
        return Err(Error::invalid("the dH transport check needs a torsion-free connection"));
    }
    let solved = stationary_solve(
        sys,
        conn,
        &StationarySolveConfig {
            m: m.to_vec(),
            a0: sys.dh_at(m)?.as_slice().to_vec(),
            steps,
        },
    )?;
    let dh = solved
        .base()
        .iter()
        .map(|x| sys.dh_at(x.as_slice()))
        .collect::<Result<Vec<_>>>()?;
    let ode_residual = dh
        .iter()
        .zip(solved.covectors())
        .map(|(d, a)| (d - a).norm())
        .fold(0.0, f64::max);
    let along = CotangentPath::new(solved.base().to_vec(), dh)?;
    let fd_residual = stationary_residual(sys, conn, &along)?.covector;
    Ok(DhOdeCheck {
        fd_residual,
        ode_residual,
    })
}

/// Observed order `log2(e_coarse / e_fine)` for a halving of the step.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}
