//! The plastic-strain history operator on finite histories.
//!
//! For a history `ε_t(τ) = ε(t − τ)`, `τ ∈ (0, T)`, the operator
//!
//! ```text
//! (S ε_t)(τ) = (1/ℂ) ∫_τ^T K(ρ − τ) ε_t(ρ) dρ
//! ```
//!
//! acts on `L²((0, T), w(τ) dτ)`. A Nyström discretization gives the raw
//! matrix `A`; with `W = diag(w(τⱼ) qⱼ)` the symmetrized `B = W^{1/2} A W^{−1/2}`
//! has the weighted-space singular values, so a Euclidean SVD of `B` yields
//! the singular system of `S`.

pub mod laguerre;
pub mod sls;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, svd_top};
use crate::material::{ScalarKernel, Weight};
use crate::quadrature::GaussLegendre;

pub use laguerre::LaguerreBasis;

/// Singular values below `RANK_TOL · s₁` count as zero.
pub const RANK_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryQuadrature {
    /// Composite trapezoid on equispaced nodes, second order.
    Trapezoid,
    /// Gauss-Legendre panels with product integration on the diagonal panel.
    GaussPanels { panels: usize, order: usize },
}

/// Nodes and quadrature weights on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    horizon: f64,
    rule: HistoryQuadrature,
}

impl HistoryGrid {
    /// `intervals + 1` equispaced nodes with trapezoid weights.
    pub fn trapezoid(horizon: f64, intervals: usize) -> Result<Self> {
        check_horizon(horizon)?;
        if intervals == 0 {
            return Err(Error::domain("history grid needs at least one interval"));
        }
        let h = horizon / intervals as f64;
        let nodes: Vec<f64> = (0..=intervals)
            .map(|j| if j == intervals { horizon } else { h * j as f64 })
            .collect();
        let mut weights = vec![h; intervals + 1];
        weights[0] = 0.5 * h;
        weights[intervals] = 0.5 * h;
        Ok(Self {
            nodes,
            weights,
            horizon,
            rule: HistoryQuadrature::Trapezoid,
        })
    }

    /// `panels` equal panels with `order` Gauss-Legendre nodes each.
    pub fn gauss_panels(horizon: f64, panels: usize, order: usize) -> Result<Self> {
        check_horizon(horizon)?;
        if panels == 0 || order == 0 {
            return Err(Error::domain("Gauss panels need positive panel count and order"));
        }
        let rule = GaussLegendre::new(order);
        let h = horizon / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            for (x, w) in rule.mapped(h * p as f64, h * (p + 1) as f64) {
                nodes.push(x);
                weights.push(w);
            }
        }
        Ok(Self {
            nodes,
            weights,
            horizon,
            rule: HistoryQuadrature::GaussPanels { panels, order },
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn rule(&self) -> HistoryQuadrature {
        self.rule
    }

    /// `w(τⱼ) qⱼ`, the diagonal of `W`.
    pub fn weighted(&self, w: Weight) -> Vec<f64> {
        self.nodes.iter().zip(&self.weights).map(|(&t, &q)| w.eval(t) * q).collect()
    }

    /// Discrete `(f, g)_w = Σ qⱼ w(τⱼ) fⱼ gⱼ`.
    pub fn inner(&self, f: &[f64], g: &[f64], w: Weight) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(f.iter().zip(g))
            .map(|((&t, &q), (a, b))| q * w.eval(t) * a * b)
            .sum()
    }

    pub fn norm(&self, f: &[f64], w: Weight) -> f64 {
        self.inner(f, f, w).sqrt()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&t| f(t)).collect()
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("history horizon must be positive and finite, got {horizon}")))
    }
}

/// Discretized history operator.
#[derive(Debug, Clone)]
pub struct DiscreteHistoryOperator {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    sqrt_w: Vec<f64>,
    grid: HistoryGrid,
    weight: Weight,
    total: f64,
    hs_norm: f64,
}

/// Barycentric weights of a node set.
fn barycentric(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            let p: f64 = (0..nodes.len())
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product();
            1.0 / p
        })
        .collect()
}

/// Values of all Lagrange basis polynomials of `nodes` at `y`.
fn lagrange_at(nodes: &[f64], bw: &[f64], y: f64) -> Vec<f64> {
    if let Some(j) = nodes.iter().position(|&x| x == y) {
        let mut e = vec![0.0; nodes.len()];
        e[j] = 1.0;
        return e;
    }
    let terms: Vec<f64> = nodes.iter().zip(bw).map(|(&x, &b)| b / (y - x)).collect();
    let s: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / s).collect()
}

/// One assembled row and its contribution `∫ |k(τᵢ, ρ)|² w(τᵢ)/w(ρ) dρ` to the
/// squared Hilbert-Schmidt norm, integrated with the same rule as the row.
type Row = (Vec<f64>, f64);

fn trapezoid_rows(kernel: &ScalarKernel, total: f64, w: Weight, grid: &HistoryGrid) -> Vec<Row> {
    let n = grid.len();
    let m = n - 1;
    let h = grid.horizon / m as f64;
    let lags: Vec<f64> = (0..n).map(|d| kernel.eval(h * d as f64) / total).collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            let mut hs = 0.0;
            if i < m {
                let wi = w.eval(grid.nodes[i]);
                for (j, r) in row.iter_mut().enumerate().skip(i) {
                    let q = if j == i || j == m { 0.5 * h } else { h };
                    let k = lags[j - i];
                    *r = k * q;
                    hs += q * k * k * wi / w.eval(grid.nodes[j]);
                }
            }
            (row, hs)
        })
        .collect()
}

fn panel_rows(kernel: &ScalarKernel, total: f64, w: Weight, grid: &HistoryGrid, panels: usize, order: usize) -> Vec<Row> {
    let n = grid.len();
    let h = grid.horizon / panels as f64;
    let sub = GaussLegendre::new(order);
    let bws: Vec<Vec<f64>> = (0..panels)
        .map(|p| barycentric(&grid.nodes[p * order..(p + 1) * order]))
        .collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let p = i / order;
            let ti = grid.nodes[i];
            let wi = w.eval(ti);
            let mut row = vec![0.0; n];
            let mut hs = 0.0;
            for j in (p + 1) * order..n {
                let k = kernel.eval(grid.nodes[j] - ti) / total;
                row[j] = k * grid.weights[j];
                hs += grid.weights[j] * k * k * wi / w.eval(grid.nodes[j]);
            }
            // Diagonal panel: integrate K(ρ − τᵢ) times the interpolant of the
            // history over [τᵢ, b_p] only.
            let local = &grid.nodes[p * order..(p + 1) * order];
            let end = if p + 1 == panels { grid.horizon } else { h * (p + 1) as f64 };
            for (y, wy) in sub.mapped(ti, end) {
                let k = kernel.eval(y - ti) / total;
                hs += wy * k * k * wi / w.eval(y);
                for (jj, l) in lagrange_at(local, &bws[p], y).into_iter().enumerate() {
                    row[p * order + jj] += k * wy * l;
                }
            }
            (row, hs)
        })
        .collect()
}

/// Builds the discrete operator. Trapezoid rows vanish left of the diagonal;
/// with Gauss panels causality holds panel by panel.
pub fn assemble_s(kernel: &ScalarKernel, total: f64, w: Weight, grid: &HistoryGrid) -> Result<DiscreteHistoryOperator> {
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::domain(format!("instantaneous modulus must be positive, got {total}")));
    }
    let n = grid.len();
    let rows = match grid.rule {
        HistoryQuadrature::Trapezoid => trapezoid_rows(kernel, total, w, grid),
        HistoryQuadrature::GaussPanels { panels, order } => panel_rows(kernel, total, w, grid, panels, order),
    };
    let a = DMatrix::from_fn(n, n, |i, j| rows[i].0[j]);
    let hs_norm = rows
        .iter()
        .zip(&grid.weights)
        .map(|((_, r), q)| q * r)
        .sum::<f64>()
        .sqrt();
    let sqrt_w: Vec<f64> = grid.weighted(w).into_iter().map(f64::sqrt).collect();
    let b = DMatrix::from_fn(n, n, |i, j| sqrt_w[i] * a[(i, j)] / sqrt_w[j]);
    Ok(DiscreteHistoryOperator {
        a,
        b,
        sqrt_w,
        grid: grid.clone(),
        weight: w,
        total,
        hs_norm,
    })
}

impl DiscreteHistoryOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn symmetrized(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn grid(&self) -> &HistoryGrid {
        &self.grid
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `S ε` for a history sampled on the grid.
    pub fn apply(&self, history: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(history);
        (&self.a * x).iter().copied().collect()
    }

    /// Discrete Hilbert-Schmidt norm: the grid quadrature of
    /// `∫∫ |k(τ, ρ)|² w(τ)/w(ρ) dρ dτ`. It differs from the Frobenius norm of
    /// `B` only through the diagonal, where rows integrate from `τᵢ` on.
    pub fn hs_norm(&self) -> f64 {
        self.hs_norm
    }

    /// Weighted operator norm `‖S‖`.
    pub fn operator_norm(&self) -> f64 {
        spectral_norm(&self.b)
    }

    /// Weighted operator norm of `S − S_N`.
    pub fn distance_to(&self, reduced: &RankNOperator) -> f64 {
        spectral_norm(&(&self.b - reduced.symmetrized()))
    }

    /// Error of the best operator with range restricted to the columns of
    /// `basis` (orthonormal, Euclidean, in symmetrized coordinates): `‖B − B Q Qᵀ‖`.
    pub fn subspace_error(&self, basis: &DMatrix<f64>) -> f64 {
        let bq = &self.b * basis;
        spectral_norm(&(&self.b - bq * basis.transpose()))
    }

    fn to_weighted(&self, v: nalgebra::DVectorView<f64>) -> Vec<f64> {
        v.iter().zip(&self.sqrt_w).map(|(x, s)| x / s).collect()
    }
}

/// Leading singular values and weighted-space singular functions.
#[derive(Debug, Clone)]
pub struct SingularSystem {
    pub values: Vec<f64>,
    /// Right singular functions `φₖ` sampled on the grid.
    pub phi: Vec<Vec<f64>>,
    /// Left singular functions `ψₖ = S φₖ / sₖ`.
    pub psi: Vec<Vec<f64>>,
    pub grid: HistoryGrid,
    pub weight: Weight,
    /// True when every singular value of the discretization was computed.
    pub complete: bool,
}

impl SingularSystem {
    /// Number of computed values above the rank tolerance.
    pub fn rank(&self) -> usize {
        let s1 = self.values.first().copied().unwrap_or(0.0);
        self.values.iter().filter(|&&s| s > 0.0 && s >= RANK_TOL * s1).count()
    }

    /// Eigenvalues `μₖ = sₖ²` of `S*S`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.values.iter().map(|s| s * s).collect()
    }

    /// Largest entry of `|G − I|` for the weighted Gram matrix of the `φₖ`.
    pub fn gram_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.phi.iter().enumerate() {
            for (j, b) in self.phi.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.grid.inner(a, b, self.weight) - target).abs());
            }
        }
        worst
    }

    /// `‖ε − Σ qₖ φₖ‖_w` on the grid.
    pub fn reconstruction_error(&self, history: &[f64], coeffs: &[f64]) -> f64 {
        let mut r = history.to_vec();
        for (q, phi) in coeffs.iter().zip(&self.phi) {
            for (x, p) in r.iter_mut().zip(phi) {
                *x -= q * p;
            }
        }
        self.grid.norm(&r, self.weight)
    }
}

/// The `count` leading singular triplets of the operator.
pub fn singular_system(op: &DiscreteHistoryOperator, count: usize) -> Result<SingularSystem> {
    if count > op.len() {
        return Err(Error::domain(format!(
            "requested {count} singular values of a {}-node discretization",
            op.len()
        )));
    }
    let svd = svd_top(&op.b, count);
    let mut phi = Vec::with_capacity(count);
    let mut psi = Vec::with_capacity(count);
    for k in 0..count {
        let v = svd.v.column(k);
        // Deterministic sign: largest entry of the right vector positive.
        let (mut imax, mut vmax) = (0, 0.0f64);
        for (i, x) in v.iter().enumerate() {
            if x.abs() > vmax.abs() + 1e-12 {
                imax = i;
                vmax = *x;
            }
        }
        let sign = if v[imax] < 0.0 { -1.0 } else { 1.0 };
        phi.push(op.to_weighted(v).into_iter().map(|x| sign * x).collect());
        psi.push(op.to_weighted(svd.u.column(k)).into_iter().map(|x| sign * x).collect());
    }
    Ok(SingularSystem {
        values: svd.s,
        phi,
        psi,
        grid: op.grid.clone(),
        weight: op.weight,
        complete: svd.complete && count == op.len(),
    })
}

/// Rank-N operator `ε ↦ Σₖ sₖ (ε, φₖ)_w ψₖ`.
#[derive(Debug, Clone)]
pub struct RankNOperator {
    pub values: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    /// `s_{N+1}`, the predicted error (0 when `N` reaches the rank).
    pub predicted_error: f64,
    grid: HistoryGrid,
    weight: Weight,
    sqrt_w: Vec<f64>,
}

impl RankNOperator {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn apply(&self, history: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; history.len()];
        for ((s, phi), psi) in self.values.iter().zip(&self.phi).zip(&self.psi) {
            let c = s * self.grid.inner(history, phi, self.weight);
            for (o, p) in out.iter_mut().zip(psi) {
                *o += c * p;
            }
        }
        out
    }

    /// History variables `qₖ = (ε, φₖ)_w`.
    pub fn history_variables(&self, history: &[f64]) -> Vec<f64> {
        self.phi.iter().map(|phi| self.grid.inner(history, phi, self.weight)).collect()
    }

    /// `Σ sₖ uₖ vₖᵀ` in symmetrized coordinates.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let n = self.sqrt_w.len();
        let mut m = DMatrix::zeros(n, n);
        for ((s, phi), psi) in self.values.iter().zip(&self.phi).zip(&self.psi) {
            let u = DVector::from_iterator(n, psi.iter().zip(&self.sqrt_w).map(|(p, w)| p * w));
            let v = DVector::from_iterator(n, phi.iter().zip(&self.sqrt_w).map(|(p, w)| p * w));
            m.ger(*s, &u, &v, 1.0);
        }
        m
    }
}

/// Optimal rank-N truncation.
pub fn truncate(op: &DiscreteHistoryOperator, n: usize) -> Result<RankNOperator> {
    if n > op.len() {
        return Err(Error::domain(format!("rank {n} exceeds the discretization size {}", op.len())));
    }
    let count = (n + 1).min(op.len());
    let sys = singular_system(op, count)?;
    let s1 = sys.values.first().copied().unwrap_or(0.0);
    let predicted_error = match sys.values.get(n) {
        Some(&s) if s >= RANK_TOL * s1 => s,
        _ => 0.0,
    };
    let SingularSystem {
        mut values,
        mut phi,
        mut psi,
        ..
    } = sys;
    values.truncate(n);
    phi.truncate(n);
    psi.truncate(n);
    Ok(RankNOperator {
        values,
        phi,
        psi,
        predicted_error,
        grid: op.grid.clone(),
        weight: op.weight,
        sqrt_w: op.sqrt_w.clone(),
    })
}

/// A strain history given by samples or by a function of the lag `τ`.
#[derive(Clone, Copy)]
pub enum History<'a> {
    /// Samples at increasing lags, linearly interpolated and zero outside.
    Samples { nodes: &'a [f64], values: &'a [f64] },
    Function(&'a dyn Fn(f64) -> f64),
}

impl History<'_> {
    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            History::Function(f) => f(tau),
            History::Samples { nodes, values } => interpolate(nodes, values, tau),
        }
    }

    fn check(&self) -> Result<()> {
        if let History::Samples { nodes, values } = self {
            if nodes.len() != values.len() || nodes.is_empty() {
                return Err(Error::domain("history samples need equal, nonzero numbers of nodes and values"));
            }
            if nodes.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::domain("history sample nodes must be strictly increasing"));
            }
        }
        Ok(())
    }
}

fn interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    if n == 1 {
        return if x == nodes[0] { values[0] } else { 0.0 };
    }
    let tol = 1e-12 * (nodes[n - 1] - nodes[0]).abs();
    if x < nodes[0] - tol || x > nodes[n - 1] + tol {
        return 0.0;
    }
    let j = nodes.partition_point(|&t| t <= x).clamp(1, n - 1);
    let (t0, t1) = (nodes[j - 1], nodes[j]);
    let s = ((x - t0) / (t1 - t0)).clamp(0.0, 1.0);
    values[j - 1] + s * (values[j] - values[j - 1])
}

/// Basis for history variables.
#[derive(Clone, Copy)]
pub enum HistoryBasis<'a> {
    Laguerre(&'a LaguerreBasis),
    Singular(&'a SingularSystem),
}

/// History variables `qₖ = (ε_t, φₖ)_w`. Samples on a different grid are
/// resampled by linear interpolation.
pub fn project_history(history: History<'_>, basis: HistoryBasis<'_>) -> Result<Vec<f64>> {
    history.check()?;
    match basis {
        HistoryBasis::Laguerre(l) => l.project(history),
        HistoryBasis::Singular(sys) => {
            let values = match history {
                History::Samples { nodes, values } if nodes == sys.grid.nodes() => values.to_vec(),
                h => sys.grid.sample(|t| h.eval(t)),
            };
            Ok(sys.phi.iter().map(|phi| sys.grid.inner(&values, phi, sys.weight)).collect())
        }
    }
}
