//! Charts, multivector fields and connections on open subsets of ℝⁿ.
//!
//! Sign convention, fixed once for the whole crate: the sharp map of a
//! bivector field is `⟨π♯(ξ), η⟩ = π(ξ, η)` with components
//! `π♯(ξ)^i = Σ_j π^{ij} ξ_j`. The Hamiltonian vector field is `X_H = π♯(dH)`
//! and every pairing `⟨ξ ∧ η, π⟩` below means `π(ξ, η) = ⟨π♯ξ, η⟩`.
//!
//! Christoffel symbols follow `∇_{∂_i} ∂_j = Γ^k_{ij} ∂_k`, torsion is
//! `T^k_{ij} = Γ^k_{ij} − Γ^k_{ji}`, and the dual connection on covectors is
//! `(∇_u α)(v) = u(α(v)) − α(∇_u v)`.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::expr::{self, ScalarExpr};

const RESERVED: [&str; 4] = ["sin", "cos", "exp", "pi"];

/// A coordinate chart: an open box (or all) of ℝⁿ with named coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    coords: Vec<String>,
    bounds: Option<Vec<(f64, f64)>>,
}

impl Chart {
    pub fn new<S: Into<String>>(coords: impl IntoIterator<Item = S>) -> Result<Arc<Chart>> {
        Self::build(coords.into_iter().map(Into::into).collect(), None)
    }

    pub fn with_bounds<S: Into<String>>(
        coords: impl IntoIterator<Item = S>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Arc<Chart>> {
        Self::build(coords.into_iter().map(Into::into).collect(), Some(bounds))
    }

    fn build(coords: Vec<String>, bounds: Option<Vec<(f64, f64)>>) -> Result<Arc<Chart>> {
        if coords.is_empty() {
            return Err(Error::invalid("a chart needs at least one coordinate"));
        }
        for (i, name) in coords.iter().enumerate() {
            let valid_ident = name
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid_ident || RESERVED.contains(&name.as_str()) {
                return Err(Error::invalid(format!("invalid coordinate name `{name}`")));
            }
            if coords[..i].contains(name) {
                return Err(Error::invalid(format!("duplicate coordinate `{name}`")));
            }
        }
        if let Some(b) = &bounds {
            check_dim(coords.len(), b.len())?;
            if b.iter().any(|&(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo >= hi) {
                return Err(Error::invalid("chart bounds must have positive volume"));
            }
        }
        Ok(Arc::new(Chart { coords, bounds }))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        self.bounds.as_deref()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().all(|v| v.is_finite())
            && self.bounds.as_ref().is_none_or(|b| {
                p.iter().zip(b).all(|(v, &(lo, hi))| lo <= *v && *v <= hi)
            })
    }

    pub fn parse(&self, src: &str) -> Result<ScalarExpr> {
        expr::parse(src, &self.coords).map_err(|source| Error::Parse {
            context: format!("expression `{src}`"),
            source,
        })
    }

    fn check_expr(&self, e: &ScalarExpr) -> Result<()> {
        match e.max_var() {
            Some(i) if i >= self.dim() => Err(Error::Dimension {
                expected: self.dim(),
                got: i + 1,
            }),
            _ => Ok(()),
        }
    }
}

fn eval_all(exprs: &[ScalarExpr], p: &[f64]) -> Result<Vec<f64>> {
    exprs.iter().map(|e| e.eval(p).map_err(Error::from)).collect()
}

fn gradient_exprs(exprs: &[ScalarExpr], n: usize) -> Vec<Vec<ScalarExpr>> {
    (0..n)
        .map(|l| exprs.iter().map(|e| e.differentiate(l)).collect())
        .collect()
}

/// A vector field `X = X^i ∂_i`.
#[derive(Debug, Clone)]
pub struct VectorField {
    chart: Arc<Chart>,
    comps: Vec<ScalarExpr>,
    grad: Arc<OnceLock<Vec<Vec<ScalarExpr>>>>,
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, comps: Vec<ScalarExpr>) -> Result<Self> {
        check_dim(chart.dim(), comps.len())?;
        comps.iter().try_for_each(|e| chart.check_expr(e))?;
        Ok(VectorField {
            chart: chart.clone(),
            comps,
            grad: Arc::default(),
        })
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        VectorField {
            chart: chart.clone(),
            comps: vec![ScalarExpr::zero(); chart.dim()],
            grad: Arc::default(),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn value_at(&self, p: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.chart.dim(), p.len())?;
        Ok(DVector::from_vec(eval_all(&self.comps, p)?))
    }

    fn grad(&self) -> &Vec<Vec<ScalarExpr>> {
        self.grad
            .get_or_init(|| gradient_exprs(&self.comps, self.chart.dim()))
    }

    /// `J[(i, j)] = ∂_j X^i` at `p`.
    pub fn jacobian_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.chart.dim(), p.len())?;
        let n = self.chart.dim();
        let grad = self.grad();
        let mut j = DMatrix::zeros(n, n);
        for (l, col) in grad.iter().enumerate() {
            for (i, e) in col.iter().enumerate() {
                j[(i, l)] = e.eval(p)?;
            }
        }
        Ok(j)
    }

    /// Symbolic Lie bracket `[self, other]`.
    pub fn bracket(&self, other: &VectorField) -> VectorField {
        let n = self.chart.dim();
        let comps = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        &self.comps[b] * other.comps[a].differentiate(b)
                            - &other.comps[b] * self.comps[a].differentiate(b)
                    })
                    .sum()
            })
            .collect();
        VectorField {
            chart: self.chart.clone(),
            comps,
            grad: Arc::default(),
        }
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// A bivector field stored by its components `π^{ij}`, `i < j`.
#[derive(Debug, Clone)]
pub struct BivectorField {
    chart: Arc<Chart>,
    upper: Vec<ScalarExpr>,
    grad: Arc<OnceLock<Vec<Vec<ScalarExpr>>>>,
}

impl BivectorField {
    /// `upper` lists `π^{ij}` for `i < j` in row-major order.
    pub fn new(chart: &Arc<Chart>, upper: Vec<ScalarExpr>) -> Result<Self> {
        let n = chart.dim();
        check_dim(n * (n - 1) / 2, upper.len())?;
        upper.iter().try_for_each(|e| chart.check_expr(e))?;
        Ok(BivectorField {
            chart: chart.clone(),
            upper,
            grad: Arc::default(),
        })
    }

    pub fn from_fn(chart: &Arc<Chart>, mut f: impl FnMut(usize, usize) -> ScalarExpr) -> Result<Self> {
        let n = chart.dim();
        let mut upper = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                upper.push(f(i, j));
            }
        }
        Self::new(chart, upper)
    }

    /// Parses the upper triangle given row by row: `rows[i]` holds
    /// `π^{i,i+1}, …, π^{i,n-1}`.
    pub fn parse_upper<S: AsRef<str>>(chart: &Arc<Chart>, rows: &[Vec<S>]) -> Result<Self> {
        let n = chart.dim();
        if rows.len() != n.saturating_sub(1) {
            return Err(Error::invalid(format!(
                "bivector upper triangle needs {} rows, got {}",
                n - 1,
                rows.len()
            )));
        }
        let mut upper = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n - 1 - i {
                return Err(Error::invalid(format!(
                    "bivector row {i} needs {} entries, got {}",
                    n - 1 - i,
                    row.len()
                )));
            }
            for src in row {
                upper.push(chart.parse(src.as_ref())?);
            }
        }
        Self::new(chart, upper)
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        let n = chart.dim();
        BivectorField {
            chart: chart.clone(),
            upper: vec![ScalarExpr::zero(); n * (n - 1) / 2],
            grad: Arc::default(),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// `π^{ij}` with antisymmetry applied.
    pub fn get(&self, i: usize, j: usize) -> ScalarExpr {
        let n = self.dim();
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.upper[pair_index(n, i, j)].clone(),
            std::cmp::Ordering::Greater => -&self.upper[pair_index(n, j, i)],
            std::cmp::Ordering::Equal => ScalarExpr::zero(),
        }
    }

    pub fn upper(&self) -> &[ScalarExpr] {
        &self.upper
    }

    /// Rows of the upper triangle rendered back to source text.
    pub fn upper_sources(&self) -> Vec<Vec<String>> {
        let n = self.dim();
        (0..n.saturating_sub(1))
            .map(|i| {
                (i + 1..n)
                    .map(|j| self.get(i, j).to_source(self.chart.coords()))
                    .collect()
            })
            .collect()
    }

    /// The matrix `P` of `π♯` at `p`: `P[(i, j)] = π^{ij}(p)`.
    pub fn matrix_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        check_dim(n, p.len())?;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = self.upper[pair_index(n, i, j)].eval(p)?;
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        Ok(m)
    }

    /// `∂_l π` as matrices, one per coordinate `l`.
    pub fn gradient_at(&self, p: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.dim();
        check_dim(n, p.len())?;
        let grad = self
            .grad
            .get_or_init(|| gradient_exprs(&self.upper, n));
        grad.iter()
            .map(|dl| {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i + 1..n {
                        let v = dl[pair_index(n, i, j)].eval(p)?;
                        m[(i, j)] = v;
                        m[(j, i)] = -v;
                    }
                }
                Ok(m)
            })
            .collect()
    }

    /// `f · π`.
    pub fn scaled(&self, f: &ScalarExpr) -> Result<Self> {
        Self::new(&self.chart, self.upper.iter().map(|c| f * c).collect())
    }

    /// The vector field `π♯(dx_i)`.
    pub fn sharp_coordinate(&self, i: usize) -> VectorField {
        let comps = (0..self.dim()).map(|a| self.get(a, i)).collect();
        VectorField {
            chart: self.chart.clone(),
            comps,
            grad: Arc::default(),
        }
    }
}

/// `π♯_p(ξ)` with `v^i = Σ_j π^{ij}(p) ξ_j`.
pub fn pi_sharp(pi: &BivectorField, p: &[f64], xi: &[f64]) -> Result<DVector<f64>> {
    check_dim(pi.dim(), xi.len())?;
    Ok(pi.matrix_at(p)? * DVector::from_column_slice(xi))
}

/// `π(ξ, η) = ⟨π♯ξ, η⟩`.
pub fn pi_pair(pi_matrix: &DMatrix<f64>, xi: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    (pi_matrix * xi).dot(eta)
}

/// Symbolic gradient `dH` as a list of partial derivatives.
pub fn gradient(h: &ScalarExpr, n: usize) -> Vec<ScalarExpr> {
    (0..n).map(|j| h.differentiate(j)).collect()
}

/// `X_H = π♯(dH)`.
pub fn hamiltonian_vf(pi: &BivectorField, h: &ScalarExpr) -> Result<VectorField> {
    pi.chart.check_expr(h)?;
    let n = pi.dim();
    let dh = gradient(h, n);
    let comps = (0..n)
        .map(|i| (0..n).map(|j| pi.get(i, j) * &dh[j]).sum())
        .collect();
    VectorField::new(&pi.chart, comps)
}

/// Enumerates strictly increasing index tuples of length `k` below `n`.
pub fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats.
fn sort_with_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 0..idx.len() {
        for j in 0..idx.len() - 1 - i {
            if idx[j] > idx[j + 1] {
                idx.swap(j, j + 1);
                sign = -sign;
            } else if idx[j] == idx[j + 1] {
                return None;
            }
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// Totally antisymmetric components indexed by increasing tuples.
#[derive(Debug, Clone)]
pub struct SkewComponents {
    chart: Arc<Chart>,
    tuples: Vec<Vec<usize>>,
    comps: Vec<ScalarExpr>,
}

impl SkewComponents {
    fn from_fn(
        chart: &Arc<Chart>,
        degree: usize,
        mut f: impl FnMut(&[usize]) -> ScalarExpr,
    ) -> Result<Self> {
        let tuples = increasing_tuples(chart.dim(), degree);
        let comps: Vec<ScalarExpr> = tuples.iter().map(|t| f(t)).collect();
        comps.iter().try_for_each(|e| chart.check_expr(e))?;
        Ok(SkewComponents {
            chart: chart.clone(),
            tuples,
            comps,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.comps
    }

    /// Component for an arbitrary index tuple, antisymmetry applied.
    pub fn get(&self, idx: &[usize]) -> ScalarExpr {
        let mut sorted = idx.to_vec();
        match sort_with_sign(&mut sorted) {
            None => ScalarExpr::zero(),
            Some(sign) => {
                let pos = self
                    .tuples
                    .iter()
                    .position(|t| *t == sorted)
                    .expect("index tuple within chart dimension");
                if sign > 0.0 {
                    self.comps[pos].clone()
                } else {
                    -&self.comps[pos]
                }
            }
        }
    }

    /// Values in the order of [`SkewComponents::tuples`].
    pub fn values_at(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.chart.dim(), p.len())?;
        eval_all(&self.comps, p)
    }

    /// Index tuple rendered with coordinate names, e.g. `x,y,v`.
    pub fn label(&self, tuple: &[usize]) -> String {
        tuple
            .iter()
            .map(|&i| self.chart.coords()[i].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }
}

macro_rules! skew_newtype {
    ($name:ident, $degree:expr) => {
        #[derive(Debug, Clone)]
        pub struct $name(SkewComponents);

        impl $name {
            pub const DEGREE: usize = $degree;

            pub fn from_fn(
                chart: &Arc<Chart>,
                f: impl FnMut(&[usize]) -> ScalarExpr,
            ) -> Result<Self> {
                SkewComponents::from_fn(chart, $degree, f).map($name)
            }

            pub fn zero(chart: &Arc<Chart>) -> Self {
                Self::from_fn(chart, |_| ScalarExpr::zero()).expect("zero field is valid")
            }
        }

        impl std::ops::Deref for $name {
            type Target = SkewComponents;
            fn deref(&self) -> &SkewComponents {
                &self.0
            }
        }
    };
}

skew_newtype!(TrivectorField, 3);
skew_newtype!(ThreeForm, 3);
skew_newtype!(FourForm, 4);

impl ThreeForm {
    /// Builds a 3-form from `(index triple, expression)` entries; unlisted
    /// components are zero. Triples may be given in any order.
    pub fn from_entries(chart: &Arc<Chart>, entries: &[([usize; 3], ScalarExpr)]) -> Result<Self> {
        let mut acc: Vec<(Vec<usize>, ScalarExpr)> = Vec::new();
        for (idx, e) in entries {
            if idx.iter().any(|&i| i >= chart.dim()) {
                return Err(Error::invalid("3-form index outside the chart"));
            }
            let mut sorted = idx.to_vec();
            let sign = sort_with_sign(&mut sorted)
                .ok_or_else(|| Error::invalid("3-form index repeats a coordinate"))?;
            let term = if sign > 0.0 { e.clone() } else { -e };
            match acc.iter_mut().find(|(t, _)| *t == sorted) {
                Some((_, sum)) => *sum = &*sum + term,
                None => acc.push((sorted, term)),
            }
        }
        Self::from_fn(chart, |t| {
            acc.iter()
                .find(|(s, _)| s.as_slice() == t)
                .map_or(ScalarExpr::zero(), |(_, e)| e.clone())
        })
    }

    /// `(dφ)_{abcd} = ∂_a φ_{bcd} − ∂_b φ_{acd} + ∂_c φ_{abd} − ∂_d φ_{abc}`.
    pub fn exterior_derivative(&self) -> FourForm {
        FourForm::from_fn(&self.0.chart, |t| {
            let (a, b, c, d) = (t[0], t[1], t[2], t[3]);
            self.get(&[b, c, d]).differentiate(a) - self.get(&[a, c, d]).differentiate(b)
                + self.get(&[a, b, d]).differentiate(c)
                - self.get(&[a, b, c]).differentiate(d)
        })
        .expect("derivative stays in chart")
    }
}

/// `[π,π]^{ijk} = 2 Σ_l (π^{il} ∂_l π^{jk} + π^{jl} ∂_l π^{ki} + π^{kl} ∂_l π^{ij})`,
/// normalised so that `[π,π]^{ijk}` is twice the Jacobiator of the coordinate
/// functions.
pub fn schouten_pi_pi(pi: &BivectorField) -> TrivectorField {
    let n = pi.dim();
    TrivectorField::from_fn(&pi.chart, |t| {
        let (i, j, k) = (t[0], t[1], t[2]);
        let sum: ScalarExpr = (0..n)
            .map(|l| {
                pi.get(i, l) * pi.get(j, k).differentiate(l)
                    + pi.get(j, l) * pi.get(k, i).differentiate(l)
                    + pi.get(k, l) * pi.get(i, j).differentiate(l)
            })
            .sum();
        ScalarExpr::constant(2.0) * sum
    })
    .expect("schouten bracket stays in chart")
}

/// `(L_X π)^{ij} = Σ_l (X^l ∂_l π^{ij} − π^{lj} ∂_l X^i − π^{il} ∂_l X^j)`.
pub fn lie_derivative_pi(pi: &BivectorField, x: &VectorField) -> Result<BivectorField> {
    if pi.chart != x.chart {
        return Err(Error::invalid("bivector and vector field live on different charts"));
    }
    let n = pi.dim();
    let xc = x.components();
    BivectorField::from_fn(&pi.chart, |i, j| {
        (0..n)
            .map(|l| {
                &xc[l] * pi.get(i, j).differentiate(l)
                    - pi.get(l, j) * xc[i].differentiate(l)
                    - pi.get(i, l) * xc[j].differentiate(l)
            })
            .sum()
    })
}

/// A `(1,1)` tensor at a point, `A^i_j` stored as `matrix[(i, j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneOneTensor {
    pub matrix: DMatrix<f64>,
}

impl OneOneTensor {
    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.matrix * u
    }

    /// The dual map on covectors, `⟨A*ξ, u⟩ = ⟨ξ, A u⟩`.
    pub fn adjoint_apply(&self, xi: &DVector<f64>) -> DVector<f64> {
        self.matrix.tr_mul(xi)
    }
}

/// Christoffel symbols of a connection, `Γ^k_{ij}` stored at `k·n² + i·n + j`.
#[derive(Debug, Clone)]
pub struct ConnectionSpec {
    chart: Arc<Chart>,
    gamma: Vec<ScalarExpr>,
}

impl ConnectionSpec {
    pub fn flat(chart: &Arc<Chart>) -> Self {
        let n = chart.dim();
        ConnectionSpec {
            chart: chart.clone(),
            gamma: vec![ScalarExpr::zero(); n * n * n],
        }
    }

    pub fn from_fn(
        chart: &Arc<Chart>,
        mut f: impl FnMut(usize, usize, usize) -> ScalarExpr,
    ) -> Result<Self> {
        let n = chart.dim();
        let mut gamma = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    gamma.push(f(k, i, j));
                }
            }
        }
        gamma.iter().try_for_each(|e| chart.check_expr(e))?;
        Ok(ConnectionSpec {
            chart: chart.clone(),
            gamma,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    /// `Γ^k_{ij}`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> &ScalarExpr {
        let n = self.chart.dim();
        &self.gamma[k * n * n + i * n + j]
    }

    pub fn is_flat(&self) -> bool {
        self.gamma.iter().all(ScalarExpr::is_zero)
    }

    /// Structural symmetry `Γ^k_{ij} ≡ Γ^k_{ji}`. Numerical torsion is
    /// always available through [`Christoffel::torsion`].
    pub fn is_torsion_free(&self) -> bool {
        let n = self.chart.dim();
        (0..n).all(|k| (0..n).all(|i| (i + 1..n).all(|j| self.get(k, i, j) == self.get(k, j, i))))
    }

    pub fn at(&self, p: &[f64]) -> Result<Christoffel> {
        check_dim(self.chart.dim(), p.len())?;
        Ok(Christoffel {
            n: self.chart.dim(),
            data: eval_all(&self.gamma, p)?,
        })
    }
}

/// Christoffel symbols evaluated at one point.
#[derive(Debug, Clone)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn flat(n: usize) -> Self {
        Christoffel {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[k * self.n * self.n + i * self.n + j]
    }

    /// `Γ(u, v)^k = Γ^k_{ij} u^i v^j`, so that `∇_u v = u(v) + Γ(u, v)`.
    pub fn contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s += self.get(k, i, j) * u[i] * v[j];
                }
            }
            s
        })
    }

    /// `Γ*(u, α)_j = Γ^k_{ij} u^i α_k`, so that `∇_u α = u(α) − Γ*(u, α)`.
    pub fn dual_contract(&self, u: &DVector<f64>, alpha: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |j, _| {
            let mut s = 0.0;
            for k in 0..n {
                for i in 0..n {
                    s += self.get(k, i, j) * u[i] * alpha[k];
                }
            }
            s
        })
    }

    /// `Tor(u, v)^k = (Γ^k_{ij} − Γ^k_{ji}) u^i v^j`.
    pub fn torsion(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.contract(u, v) - self.contract(v, u)
    }

    pub fn max_torsion(&self) -> f64 {
        let n = self.n;
        let mut m: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    m = m.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        m
    }

    /// Covariant derivative of a vector along a curve: `v̇ + Γ(ẋ, v)`.
    pub fn along_vector(
        &self,
        xdot: &DVector<f64>,
        v: &DVector<f64>,
        vdot: &DVector<f64>,
    ) -> DVector<f64> {
        vdot + self.contract(xdot, v)
    }

    /// Covariant derivative of a covector along a curve: `α̇ − Γ*(ẋ, α)`.
    pub fn along_covector(
        &self,
        xdot: &DVector<f64>,
        alpha: &DVector<f64>,
        alphadot: &DVector<f64>,
    ) -> DVector<f64> {
        alphadot - self.dual_contract(xdot, alpha)
    }
}

/// `N(v) = ∇_v u + Tor(u, v)` for the vector field `u`, as a matrix at `p`.
pub fn n_tensor(u: &VectorField, conn: &ConnectionSpec, p: &[f64]) -> Result<OneOneTensor> {
    let n = u.chart.dim();
    let jac = u.jacobian_at(p)?;
    let uval = u.value_at(p)?;
    let gamma = conn.at(p)?;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let ej = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
        let nabla = jac.column(j).into_owned() + gamma.contract(&ej, &uval);
        let col = nabla + gamma.torsion(&uval, &ej);
        m.set_column(j, &col);
    }
    Ok(OneOneTensor { matrix: m })
}

/// `K^H(u) = ∇_u X_H + Tor(X_H, u)` at `p`.
pub fn k_tensor(
    pi: &BivectorField,
    h: &ScalarExpr,
    conn: &ConnectionSpec,
    p: &[f64],
) -> Result<OneOneTensor> {
    n_tensor(&hamiltonian_vf(pi, h)?, conn, p)
}

/// `(∇_u v)` at `p` for a vector field `v`.
pub fn covariant_derivative_vector(
    v: &VectorField,
    conn: &ConnectionSpec,
    p: &[f64],
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    let gamma = conn.at(p)?;
    Ok(v.jacobian_at(p)? * u + gamma.contract(u, &v.value_at(p)?))
}

/// `(∇_u π)^{ij} = u^l ∂_l π^{ij} + Γ^i_{la} u^l π^{aj} + Γ^j_{la} u^l π^{ia}`.
pub fn covariant_derivative_bivector(
    pi: &BivectorField,
    conn: &ConnectionSpec,
    p: &[f64],
    u: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = pi.dim();
    let grad = pi.gradient_at(p)?;
    let pm = pi.matrix_at(p)?;
    let gamma = conn.at(p)?;
    let mut out = DMatrix::zeros(n, n);
    for (l, dl) in grad.iter().enumerate() {
        out += dl * u[l];
    }
    // A^i_a = Γ^i_{la} u^l
    let a = DMatrix::from_fn(n, n, |i, col| (0..n).map(|l| gamma.get(i, l, col) * u[l]).sum());
    out += &a * &pm + &pm * a.transpose();
    Ok(out)
}

/// Extension of a `(1,1)` tensor to bivectors by derivation:
/// `N̄(π)♯ = N π♯ + π♯ N*`.
pub fn derivation_extension(n: &OneOneTensor, pi_matrix: &DMatrix<f64>) -> DMatrix<f64> {
    &n.matrix * pi_matrix + pi_matrix * n.matrix.transpose()
}

/// `∧³π♯_p(φ)` in the order of [`increasing_tuples`]`(n, 3)`:
/// `(∧³π♯φ)^{ijk} = Σ_{a<b<c} det(P[{i,j,k}, {a,b,c}]) φ_{abc}`.
pub fn wedge3_pi_sharp(pi: &BivectorField, phi: &ThreeForm, p: &[f64]) -> Result<Vec<f64>> {
    let pm = pi.matrix_at(p)?;
    let phis = phi.values_at(p)?;
    Ok(wedge3_matrix(&pm) * DVector::from_vec(phis)).map(|v| v.as_slice().to_vec())
}

/// Matrix of `∧³P` acting on increasing-index components.
pub fn wedge3_matrix(pm: &DMatrix<f64>) -> DMatrix<f64> {
    let n = pm.nrows();
    let tuples = increasing_tuples(n, 3);
    let m = tuples.len();
    DMatrix::from_fn(m, m, |r, c| {
        let rows = &tuples[r];
        let cols = &tuples[c];
        let minor = DMatrix::from_fn(3, 3, |a, b| pm[(rows[a], cols[b])]);
        minor.determinant()
    })
}

/// A bivector field together with a Hamiltonian and the derived objects the
/// path computations need at every sample.
#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    pi: BivectorField,
    h: ScalarExpr,
    dh: Vec<ScalarExpr>,
    xh: VectorField,
    lie: Arc<OnceLock<BivectorField>>,
}

impl HamiltonianSystem {
    pub fn new(pi: &BivectorField, h: &ScalarExpr) -> Result<Self> {
        let xh = hamiltonian_vf(pi, h)?;
        Ok(HamiltonianSystem {
            pi: pi.clone(),
            h: h.clone(),
            dh: gradient(h, pi.dim()),
            xh,
            lie: Arc::default(),
        })
    }

    pub fn pi(&self) -> &BivectorField {
        &self.pi
    }

    pub fn hamiltonian(&self) -> &ScalarExpr {
        &self.h
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.pi.chart()
    }

    pub fn dim(&self) -> usize {
        self.pi.dim()
    }

    pub fn xh(&self) -> &VectorField {
        &self.xh
    }

    pub fn dh_at(&self, p: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(eval_all(&self.dh, p)?))
    }

    /// `L_{X_H} π`, computed symbolically once.
    pub fn lie_derivative(&self) -> &BivectorField {
        self.lie.get_or_init(|| {
            lie_derivative_pi(&self.pi, &self.xh).expect("same chart by construction")
        })
    }

    pub fn k_tensor_at(&self, conn: &ConnectionSpec, p: &[f64]) -> Result<OneOneTensor> {
        n_tensor(&self.xh, conn, p)
    }
}
