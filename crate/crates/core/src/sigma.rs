//! Flow extension of a path to a square and the worldsheet functional
//!
//! `L^KS(β) = ∫∫ (⟨β_t, ∂_y X⟩ − ⟨β_y, ∂_t X⟩) + ∫∫ π(β_t, β_y)`,
//!
//! with `π(ξ, η) = ⟨π♯ξ, η⟩`. Along `X(t, y) = φ_y(x(t))`,
//! `β_t = dH(X)` and `β_y = (Tφ_y)^{-T} α(t)` it equals `L^H(α)`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{BivectorField, HamiltonianSystem};
use crate::hexfloat::{self, HexF64};
use crate::paths::{derivative_o4, rk4, simpson_weights, CotangentPath};
use crate::variational::lagrangian;

pub const SQUARE_SCHEMA: &str = "cotangent-lab/square/v1";

/// A bundle morphism `T(I²) → T*ℝⁿ` sampled on an `(M+1)×(M+1)` grid,
/// indexed `[i_t][j_y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMorphism {
    m: usize,
    x: Vec<Vec<DVector<f64>>>,
    beta_t: Vec<Vec<DVector<f64>>>,
    beta_y: Vec<Vec<DVector<f64>>>,
}

impl SquareMorphism {
    pub fn new(
        x: Vec<Vec<DVector<f64>>>,
        beta_t: Vec<Vec<DVector<f64>>>,
        beta_y: Vec<Vec<DVector<f64>>>,
    ) -> Result<Self> {
        let rows = x.len();
        if rows < 5 {
            return Err(Error::invalid("square grids need at least 4 intervals"));
        }
        let n = x[0].first().map_or(0, |v| v.len());
        for grid in [&x, &beta_t, &beta_y] {
            check_dim(rows, grid.len())?;
            for row in grid.iter() {
                check_dim(rows, row.len())?;
                for v in row {
                    check_dim(n, v.len())?;
                }
            }
        }
        Ok(SquareMorphism {
            m: rows - 1,
            x,
            beta_t,
            beta_y,
        })
    }

    /// All-zero morphism at the origin.
    pub fn zero(m: usize, n: usize) -> Result<Self> {
        let z = vec![vec![DVector::zeros(n); m + 1]; m + 1];
        Self::new(z.clone(), z.clone(), z)
    }

    pub fn intervals(&self) -> usize {
        self.m
    }

    pub fn x(&self) -> &[Vec<DVector<f64>>] {
        &self.x
    }

    pub fn beta_t(&self) -> &[Vec<DVector<f64>>] {
        &self.beta_t
    }

    pub fn beta_y(&self) -> &[Vec<DVector<f64>>] {
        &self.beta_y
    }

    pub fn to_json(&self) -> String {
        let conv = |g: &[Vec<DVector<f64>>]| -> Vec<Vec<Vec<HexF64>>> {
            g.iter()
                .map(|row| row.iter().map(|v| hexfloat::wrap(v.as_slice())).collect())
                .collect()
        };
        serde_json::to_string(&SquareDoc {
            schema: SQUARE_SCHEMA.into(),
            intervals: self.m,
            x: conv(&self.x),
            beta_t: conv(&self.beta_t),
            beta_y: conv(&self.beta_y),
        })
        .expect("square dumps always serialise")
    }
}

#[derive(Serialize, Deserialize)]
struct SquareDoc {
    schema: String,
    intervals: usize,
    x: Vec<Vec<Vec<HexF64>>>,
    beta_t: Vec<Vec<Vec<HexF64>>>,
    beta_y: Vec<Vec<Vec<HexF64>>>,
}

/// Builds `α̃` on an `M × M` grid. The path is subsampled to `M` intervals in
/// `t` (so `M` must divide `N`); each column is integrated in `y` with
/// `M · substeps` RK4 steps of `Ẋ = X_H(X)`, `β̇ = −J(X)ᵀ β`, `β(0) = α(t)`.
pub fn build_tilde_alpha(
    sys: &HamiltonianSystem,
    alpha: &CotangentPath,
    m: usize,
    substeps: usize,
) -> Result<SquareMorphism> {
    let n = sys.dim();
    check_dim(n, alpha.dim())?;
    if m == 0 || !alpha.steps().is_multiple_of(m) {
        return Err(Error::invalid(format!(
            "square size {m} must divide the path's N = {}",
            alpha.steps()
        )));
    }
    if substeps == 0 {
        return Err(Error::invalid("substeps must be positive"));
    }
    let coarse = alpha.subsample(alpha.steps() / m)?;
    let chart = sys.chart().clone();
    let columns = (0..=m)
        .into_par_iter()
        .map(|i| {
            let mut y0 = DVector::zeros(2 * n);
            y0.rows_mut(0, n).copy_from(&coarse.base()[i]);
            y0.rows_mut(n, n).copy_from(&coarse.covectors()[i]);
            let samples = rk4(
                |_, y| {
                    let p = y.rows(0, n).into_owned();
                    let b = y.rows(n, n).into_owned();
                    let mut dy = DVector::zeros(2 * n);
                    dy.rows_mut(0, n).copy_from(&sys.xh().value_at(p.as_slice())?);
                    dy.rows_mut(n, n)
                        .copy_from(&-(sys.xh().jacobian_at(p.as_slice())?.tr_mul(&b)));
                    Ok(dy)
                },
                y0,
                0.0,
                1.0,
                m * substeps,
                |index, y| {
                    if chart.contains(&y.as_slice()[..n]) {
                        Ok(())
                    } else {
                        Err(Error::LeftChart { index })
                    }
                },
            )?;
            let mut xs = Vec::with_capacity(m + 1);
            let mut bt = Vec::with_capacity(m + 1);
            let mut by = Vec::with_capacity(m + 1);
            for y in samples.iter().step_by(substeps) {
                let p = y.rows(0, n).into_owned();
                bt.push(sys.dh_at(p.as_slice())?);
                by.push(y.rows(n, n).into_owned());
                xs.push(p);
            }
            Ok((xs, bt, by))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = Vec::with_capacity(m + 1);
    let mut beta_t = Vec::with_capacity(m + 1);
    let mut beta_y = Vec::with_capacity(m + 1);
    for (xs, bt, by) in columns {
        x.push(xs);
        beta_t.push(bt);
        beta_y.push(by);
    }
    SquareMorphism::new(x, beta_t, beta_y)
}

/// The three integrands of `L^KS` on the grid and their integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct KsBreakdown {
    pub total: f64,
    /// `∫∫ ⟨β_t, ∂_y X⟩`.
    pub first: f64,
    /// `−∫∫ ⟨β_y, ∂_t X⟩`.
    pub second: f64,
    /// `∫∫ π(β_t, β_y)`.
    pub third: f64,
    /// Pointwise `⟨β_t, ∂_y X⟩`, indexed `[i_t][j_y]`.
    pub first_density: Vec<Vec<f64>>,
    /// Pointwise sum of the second and third integrands.
    pub rest_density: Vec<Vec<f64>>,
}

pub fn ks_lagrangian(pi: &BivectorField, s: &SquareMorphism) -> Result<KsBreakdown> {
    let m = s.m;
    let h = 1.0 / m as f64;
    let w = simpson_weights(m + 1, h)?;
    if let Some(v) = s.x.first().and_then(|r| r.first()) {
        check_dim(pi.dim(), v.len())?;
    }
    // ∂_y X along each column, ∂_t X along each row
    let dy: Vec<Vec<DVector<f64>>> = s.x.iter().map(|col| derivative_o4(col, h)).collect();
    let mut dt = vec![Vec::with_capacity(m + 1); m + 1];
    for j in 0..=m {
        let row: Vec<DVector<f64>> = (0..=m).map(|i| s.x[i][j].clone()).collect();
        for (i, d) in derivative_o4(&row, h).into_iter().enumerate() {
            dt[i].push(d);
        }
    }
    let mut first_density = vec![vec![0.0; m + 1]; m + 1];
    let mut rest_density = vec![vec![0.0; m + 1]; m + 1];
    let (mut first, mut second, mut third) = (0.0, 0.0, 0.0);
    for i in 0..=m {
        for j in 0..=m {
            let bt = &s.beta_t[i][j];
            let by = &s.beta_y[i][j];
            let f1 = bt.dot(&dy[i][j]);
            let f2 = -by.dot(&dt[i][j]);
            let f3 = (pi.matrix_at(s.x[i][j].as_slice())? * bt).dot(by);
            let wij = w[i] * w[j];
            first += wij * f1;
            second += wij * f2;
            third += wij * f3;
            first_density[i][j] = f1;
            rest_density[i][j] = f2 + f3;
        }
    }
    Ok(KsBreakdown {
        total: first + second + third,
        first,
        second,
        third,
        first_density,
        rest_density,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub l_h: f64,
    pub l_ks: f64,
    pub abs_gap: f64,
    /// `abs_gap / max(1, |L^H|)`.
    pub rel_gap: f64,
    /// `sup |⟨β_t, ∂_y X⟩|`.
    pub first_integrand_sup: f64,
    /// Largest spread in `y` of the remaining integrand, over all `t`.
    pub y_spread: f64,
    pub path_steps: usize,
    pub square_intervals: usize,
}

pub fn verify_equality(
    sys: &HamiltonianSystem,
    alpha: &CotangentPath,
    m: usize,
    substeps: usize,
) -> Result<SigmaReport> {
    let l_h = lagrangian(sys, alpha)?;
    let square = build_tilde_alpha(sys, alpha, m, substeps)?;
    let ks = ks_lagrangian(sys.pi(), &square)?;
    let first_integrand_sup = ks
        .first_density
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let y_spread = ks
        .rest_density
        .iter()
        .map(|col| {
            let (lo, hi) = col
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
            hi - lo
        })
        .fold(0.0, f64::max);
    let abs_gap = (l_h - ks.total).abs();
    Ok(SigmaReport {
        l_h,
        l_ks: ks.total,
        abs_gap,
        rel_gap: abs_gap / l_h.abs().max(1.0),
        first_integrand_sup,
        y_spread,
        path_steps: alpha.steps(),
        square_intervals: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;

    #[test]
    fn zero_morphism_has_zero_action() {
        let chart = Chart::new(["q", "p"]).unwrap();
        let pi = BivectorField::parse_upper(&chart, &[vec!["1"]]).unwrap();
        let s = SquareMorphism::zero(8, 2).unwrap();
        assert_eq!(ks_lagrangian(&pi, &s).unwrap().total, 0.0);
    }

    #[test]
    fn odd_square_is_rejected() {
        let chart = Chart::new(["q", "p"]).unwrap();
        let pi = BivectorField::parse_upper(&chart, &[vec!["1"]]).unwrap();
        let s = SquareMorphism::zero(9, 2).unwrap();
        assert!(ks_lagrangian(&pi, &s).is_err());
    }
}
