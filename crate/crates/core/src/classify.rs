//! Pointwise classification of bivector fields.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    increasing_tuples, schouten_pi_pi, wedge3_matrix, BivectorField, HamiltonianSystem,
    OneOneTensor, ThreeForm,
};

/// Default relative singular-value threshold.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Number of singular values above `tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

fn rank_with_threshold(m: &DMatrix<f64>, threshold: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    m.singular_values().iter().filter(|&&s| s > threshold).count()
}

/// Maximal component of `[π,π]` at `p`, and whether it is within `tol`.
pub fn is_poisson_at(pi: &BivectorField, p: &[f64], tol: f64) -> Result<(bool, f64)> {
    let residual = schouten_pi_pi(pi)
        .values_at(p)?
        .into_iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((residual <= tol, residual))
}

/// Brackets keyed by coordinate index pair.
pub type BracketTable = Vec<((usize, usize), DVector<f64>)>;

/// `[π♯(dx_i), π♯(dx_j)]` at `p` for all `i < j`, from point values of `π` and
/// its first derivatives.
pub fn coordinate_brackets_at(pi: &BivectorField, p: &[f64]) -> Result<BracketTable> {
    let n = pi.dim();
    let pm = pi.matrix_at(p)?;
    let grad = pi.gradient_at(p)?;
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            // U = π♯dx_i has U^a = π^{ai}; [U, V]^a = U^l ∂_l V^a − V^l ∂_l U^a
            let b = DVector::from_fn(n, |a, _| {
                (0..n)
                    .map(|l| pm[(l, i)] * grad[l][(a, j)] - pm[(l, j)] * grad[l][(a, i)])
                    .sum()
            });
            out.push(((i, j), b));
        }
    }
    Ok(out)
}

/// Outcome of the pointwise weak-foliation test.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakFoliationVerdict {
    pub holds: bool,
    pub rank: usize,
    /// Every coordinate pair `(i, j)` whose bracket leaves the image.
    pub failing_pairs: Vec<(usize, usize)>,
}

/// Tests `[π♯dx_i, π♯dx_j]_p ∈ Im π♯_p` for every pair by comparing
/// `rank [P | B_ij]` with `rank P` at a shared threshold.
///
/// Coordinate differentials suffice: for function coefficients the extra
/// terms of `[π♯(fα), π♯(gβ)]` are multiples of `π♯α` and `π♯β`.
pub fn weakly_foliated_at(pi: &BivectorField, p: &[f64], tol: f64) -> Result<WeakFoliationVerdict> {
    let n = pi.dim();
    let pm = pi.matrix_at(p)?;
    let rank = numerical_rank(&pm, tol);
    let mut failing_pairs = Vec::new();
    for ((i, j), b) in coordinate_brackets_at(pi, p)? {
        let mut aug = DMatrix::zeros(n, n + 1);
        aug.view_mut((0, 0), (n, n)).copy_from(&pm);
        aug.set_column(n, &b);
        let smax = aug.singular_values().max();
        let threshold = tol * smax;
        if smax > 0.0 && rank_with_threshold(&aug, threshold) > rank_with_threshold(&pm, threshold) {
            failing_pairs.push((i, j));
        }
    }
    Ok(WeakFoliationVerdict {
        holds: failing_pairs.is_empty(),
        rank,
        failing_pairs,
    })
}

/// Least-squares solution of `∧³π♯_p(ω) = [π,π]_p`.
#[derive(Debug, Clone)]
pub struct JacobiatorSolve {
    pub holds: bool,
    /// `ω` in the order of `increasing_tuples(n, 3)`.
    pub omega: Vec<f64>,
    /// `max |∧³π♯ω − [π,π]|`.
    pub residual: f64,
}

/// The test passes when the residual is at most `tol · max(1, |[π,π]|_∞)`.
pub fn jacobiator_in_image_at(pi: &BivectorField, p: &[f64], tol: f64) -> Result<JacobiatorSolve> {
    let s = DVector::from_vec(schouten_pi_pi(pi).values_at(p)?);
    if s.is_empty() {
        return Ok(JacobiatorSolve {
            holds: true,
            omega: Vec::new(),
            residual: 0.0,
        });
    }
    let w = wedge3_matrix(&pi.matrix_at(p)?);
    let svd = w.clone().svd(true, true);
    let eps = DEFAULT_RANK_TOL * svd.singular_values.max();
    let omega = if eps > 0.0 {
        svd.solve(&s, eps).map_err(Error::invalid)?
    } else {
        DVector::zeros(s.len())
    };
    let residual = (&w * &omega - &s).amax();
    Ok(JacobiatorSolve {
        holds: residual <= tol * s.amax().max(1.0),
        omega: omega.as_slice().to_vec(),
        residual,
    })
}

/// Maxima of the two twisted-Poisson residuals over a sample.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TwistedReport {
    pub passed: bool,
    /// `max |½[π,π] − ∧³π♯φ|` over the sample.
    pub bracket_residual: f64,
    /// `max |dφ|` over the sample.
    pub closedness_residual: f64,
    pub worst_point: Option<Vec<f64>>,
    pub samples: usize,
}

pub fn twisted_check(
    pi: &BivectorField,
    phi: &ThreeForm,
    sample: &[Vec<f64>],
    tol: f64,
) -> Result<TwistedReport> {
    if phi.chart() != pi.chart() {
        return Err(Error::invalid("3-form and bivector live on different charts"));
    }
    let schouten = schouten_pi_pi(pi);
    let dphi = phi.exterior_derivative();
    let mut bracket_residual: f64 = 0.0;
    let mut closedness_residual: f64 = 0.0;
    let mut worst_point = None;
    for p in sample {
        let s = schouten.values_at(p)?;
        let w = crate::geometry::wedge3_pi_sharp(pi, phi, p)?;
        let r = s
            .iter()
            .zip(&w)
            .fold(0.0f64, |m, (a, b)| m.max((0.5 * a - b).abs()));
        if r > bracket_residual || worst_point.is_none() {
            worst_point = Some(p.clone());
        }
        bracket_residual = bracket_residual.max(r);
        closedness_residual = dphi
            .values_at(p)?
            .into_iter()
            .fold(closedness_residual, |m, v| m.max(v.abs()));
    }
    Ok(TwistedReport {
        passed: bracket_residual <= tol && closedness_residual <= tol,
        bracket_residual,
        closedness_residual,
        worst_point,
        samples: sample.len(),
    })
}

/// Pointwise factorisation `(L_{X_H}π)♯ = C · π♯` by least squares.
#[derive(Debug, Clone)]
pub struct CHSolve {
    pub tensor: OneOneTensor,
    /// Frobenius norm of `C·P − L`.
    pub residual: f64,
    pub holds: bool,
}

pub fn solve_c_h_at(sys: &HamiltonianSystem, p: &[f64], tol: f64) -> Result<CHSolve> {
    let pm = sys.pi().matrix_at(p)?;
    let lm = sys.lie_derivative().matrix_at(p)?;
    let smax = pm.singular_values().max();
    let c = if smax > 0.0 {
        let pinv = pm.clone().pseudo_inverse(DEFAULT_RANK_TOL * smax).map_err(Error::invalid)?;
        &lm * pinv
    } else {
        DMatrix::zeros(pm.nrows(), pm.ncols())
    };
    let residual = (&c * &pm - &lm).norm();
    Ok(CHSolve {
        tensor: OneOneTensor { matrix: c },
        residual,
        holds: residual <= tol,
    })
}

/// Rank at each node of a regular grid, with a regularity flag: a node is
/// regular when all its axis neighbours share its rank.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RankProfile {
    pub counts: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    pub ranks: Vec<usize>,
    pub regular: Vec<bool>,
}

/// Tensor grid with `counts[k]` nodes along axis `k`, endpoints included.
pub fn grid_points(bounds: &[(f64, f64)], counts: &[usize]) -> Result<Vec<Vec<f64>>> {
    check_dim(bounds.len(), counts.len())?;
    if counts.iter().any(|&c| c < 2) {
        return Err(Error::invalid("grid needs at least two nodes per axis"));
    }
    let total: usize = counts.iter().product();
    Ok((0..total)
        .map(|mut idx| {
            bounds
                .iter()
                .zip(counts)
                .map(|(&(lo, hi), &c)| {
                    let k = idx % c;
                    idx /= c;
                    lo + (hi - lo) * k as f64 / (c - 1) as f64
                })
                .collect()
        })
        .collect())
}

pub fn rank_profile(
    pi: &BivectorField,
    bounds: &[(f64, f64)],
    counts: &[usize],
    tol: f64,
) -> Result<RankProfile> {
    let points = grid_points(bounds, counts)?;
    let ranks = points
        .par_iter()
        .map(|p| Ok(numerical_rank(&pi.matrix_at(p)?, tol)))
        .collect::<Result<Vec<_>>>()?;
    let mut strides = Vec::with_capacity(counts.len());
    let mut s = 1;
    for &c in counts {
        strides.push(s);
        s *= c;
    }
    let regular = (0..points.len())
        .map(|idx| {
            counts.iter().zip(&strides).all(|(&c, &stride)| {
                let k = (idx / stride) % c;
                (k == 0 || ranks[idx - stride] == ranks[idx])
                    && (k + 1 == c || ranks[idx + stride] == ranks[idx])
            })
        })
        .collect();
    Ok(RankProfile {
        counts: counts.to_vec(),
        points,
        ranks,
        regular,
    })
}

/// Uniform random points in a box.
pub fn sample_box<R: Rng>(bounds: &[(f64, f64)], count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect())
        .collect()
}

/// One sampled point of a classification sweep.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointRecord {
    pub point: Vec<f64>,
    pub rank: usize,
    pub poisson_residual: f64,
    pub weakly_foliated: bool,
    /// Failing bracket pairs by coordinate name; present iff not weakly
    /// foliated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<(String, String)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassificationSummary {
    pub samples: usize,
    pub poisson_points: usize,
    pub weakly_foliated_points: usize,
    pub poisson: bool,
    pub weakly_foliated: bool,
    pub max_poisson_residual: f64,
    pub min_rank: usize,
    pub max_rank: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassificationResult {
    pub tol: f64,
    pub records: Vec<PointRecord>,
    pub summary: ClassificationSummary,
}

/// Classifies every point; the Poisson verdict uses `tol` as an absolute
/// bound on `[π,π]`, the rank tests use it as a relative threshold.
pub fn classify_points(pi: &BivectorField, points: &[Vec<f64>], tol: f64) -> Result<ClassificationResult> {
    let names = pi.chart().coords();
    let schouten = schouten_pi_pi(pi);
    let records = points
        .par_iter()
        .map(|p| {
            let poisson_residual = schouten
                .values_at(p)?
                .into_iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let wf = weakly_foliated_at(pi, p, tol.max(f64::EPSILON))?;
            let witness = (!wf.holds).then(|| {
                wf.failing_pairs
                    .iter()
                    .map(|&(i, j)| (format!("d{}", names[i]), format!("d{}", names[j])))
                    .collect()
            });
            Ok(PointRecord {
                point: p.clone(),
                rank: wf.rank,
                poisson_residual,
                weakly_foliated: wf.holds,
                witness,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let poisson_points = records.iter().filter(|r| r.poisson_residual <= tol).count();
    let weakly_foliated_points = records.iter().filter(|r| r.weakly_foliated).count();
    let summary = ClassificationSummary {
        samples: records.len(),
        poisson_points,
        weakly_foliated_points,
        poisson: poisson_points == records.len(),
        weakly_foliated: weakly_foliated_points == records.len(),
        max_poisson_residual: records.iter().fold(0.0, |m, r| m.max(r.poisson_residual)),
        min_rank: records.iter().map(|r| r.rank).min().unwrap_or(0),
        max_rank: records.iter().map(|r| r.rank).max().unwrap_or(0),
    };
    Ok(ClassificationResult {
        tol,
        records,
        summary,
    })
}

/// Labels for `ω` components, e.g. `x,y,v`, in solver order.
pub fn three_form_labels(pi: &BivectorField) -> Vec<String> {
    let names = pi.chart().coords();
    increasing_tuples(pi.dim(), 3)
        .iter()
        .map(|t| t.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(","))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;

    fn r3() -> BivectorField {
        let chart = Chart::new(["x", "y", "z"]).unwrap();
        BivectorField::parse_upper(&chart, &[vec!["x", "1"], vec!["-1"]]).unwrap()
    }

    #[test]
    fn r3_fails_with_dy_dz_witness() {
        let v = weakly_foliated_at(&r3(), &[1.0, 1.0, 1.0], 1e-9).unwrap();
        assert!(!v.holds);
        assert_eq!(v.rank, 2);
        assert!(v.failing_pairs.contains(&(1, 2)));
    }

    #[test]
    fn zero_field_is_weakly_foliated() {
        let chart = Chart::new(["a", "b", "c"]).unwrap();
        let v = weakly_foliated_at(&BivectorField::zero(&chart), &[0.1, 0.2, 0.3], 1e-9).unwrap();
        assert!(v.holds);
        assert_eq!(v.rank, 0);
    }

    #[test]
    fn r3_not_poisson_at_one_one_one() {
        let (ok, r) = is_poisson_at(&r3(), &[1.0, 1.0, 1.0], 1e-10).unwrap();
        assert!(!ok && r > 0.1);
    }

    #[test]
    fn grid_enumerates_first_axis_fastest() {
        let g = grid_points(&[(0.0, 1.0), (0.0, 2.0)], &[2, 3]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], vec![1.0, 0.0]);
        assert_eq!(g[2], vec![0.0, 1.0]);
    }

    #[test]
    fn pi_a_rank_drops_at_origin() {
        let chart = Chart::new(["x", "y"]).unwrap();
        let pi = BivectorField::parse_upper(&chart, &[vec!["x^2 + y^2"]]).unwrap();
        let prof = rank_profile(&pi, &[(-1.0, 1.0), (-1.0, 1.0)], &[5, 5], 1e-9).unwrap();
        for (p, r) in prof.points.iter().zip(&prof.ranks) {
            let expected = if p[0] == 0.0 && p[1] == 0.0 { 0 } else { 2 };
            assert_eq!(*r, expected, "{p:?}");
        }
        assert!(!prof.regular[12]);
        assert!(prof.regular[0]);
    }
}
