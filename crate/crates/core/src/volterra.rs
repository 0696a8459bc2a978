//! Sampled evolutions and the local stress-control problem
//! `σ = ℂ (I − P) ε`, `(Pε)(t) = (1/ℂ) ∫₀^t K(t − s) ε(s) ds`.
//!
//! Strains are reconstructed piecewise linearly between nodes and each
//! Prony mode carries the internal variable `qᵢ(t) = ∫₀^t λᵢ e^{−λᵢ(t−s)} ε(s) ds`,
//! advanced exactly over each step:
//!
//! ```text
//! q_{j+1} = e^{−x} q_j + α ε_j + β ε_{j+1},   x = λΔt,
//! β = 1 − (1 − e^{−x})/x,                     α = 1 − e^{−x} − β,
//! ```
//!
//! so that `Pε = Σ Cᵢ qᵢ / ℂ`. Histories before the first node are zero.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{HereditaryLaw, PronyMode, ScalarKernel, Weight};
use crate::wellposed::certify;

/// Strictly increasing time nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// `steps + 1` equispaced nodes on `[0, horizon]`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) || steps == 0 {
            return Err(Error::domain(format!(
                "uniform grid needs positive horizon and steps, got {horizon} and {steps}"
            )));
        }
        let h = horizon / steps as f64;
        Ok(Self {
            nodes: (0..=steps)
                .map(|j| if j == steps { horizon } else { h * j as f64 })
                .collect(),
        })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::domain("a time grid needs at least two nodes"));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("time nodes must be finite and strictly increasing"));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionKind {
    Strain,
    Stress,
}

impl EvolutionKind {
    pub fn name(self) -> &'static str {
        match self {
            EvolutionKind::Strain => "strain",
            EvolutionKind::Stress => "stress",
        }
    }
}

/// Scalar strain or stress samples on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evolution {
    grid: TimeGrid,
    values: Vec<f64>,
    kind: EvolutionKind,
}

impl Evolution {
    pub fn new(grid: TimeGrid, values: Vec<f64>, kind: EvolutionKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "{} values for {} time nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite value at node {j}")));
        }
        Ok(Self { grid, values, kind })
    }

    pub fn from_fn(grid: TimeGrid, kind: EvolutionKind, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes.iter().map(|&t| f(t)).collect();
        Self::new(grid, values, kind)
    }

    pub fn zeros(grid: TimeGrid, kind: EvolutionKind) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values, kind }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> EvolutionKind {
        self.kind
    }

    /// Largest absolute difference from another evolution on the same grid.
    pub fn max_difference(&self, other: &Evolution) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    fn map(&self, kind: EvolutionKind, f: impl Fn(f64) -> f64) -> Evolution {
        Evolution {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            kind,
        }
    }

    /// Two-column CSV `t,value` with a header row.
    pub fn read_csv(path: &Path, kind: EvolutionKind) -> Result<Self> {
        Self::read_csv_from(std::fs::File::open(path)?, kind)
    }

    pub fn read_csv_from<R: std::io::Read>(reader: R, kind: EvolutionKind) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::config(format!("row {}: expected 2 columns, found {}", line + 2, rec.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::config(format!("row {}: cannot parse {s:?} as a number", line + 2)))
            };
            nodes.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        Self::new(TimeGrid::from_nodes(nodes)?, values, kind)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", self.kind.name()])?;
        for (t, v) in self.grid.nodes.iter().zip(&self.values) {
            w.write_record([crate::output::format_float(*t), crate::output::format_float(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn expect_kind(e: &Evolution, kind: EvolutionKind) -> Result<()> {
    if e.kind == kind {
        Ok(())
    } else {
        Err(Error::KindMismatch {
            expected: kind.name(),
            found: e.kind.name(),
        })
    }
}

fn check_total(total: f64) -> Result<()> {
    if total.is_finite() && total > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("invalid moduli: instantaneous modulus {total} must be positive")))
    }
}

/// `(e^{−x}, α, β)` for one step of one mode.
fn step_coefficients(rate: f64, dt: f64) -> (f64, f64, f64) {
    let x = rate * dt;
    let decay = (-x).exp();
    let gain = -(-x).exp_m1();
    let beta = if x < 1e-3 {
        x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)))
    } else {
        1.0 - gain / x
    };
    (decay, gain - beta, beta)
}

/// Internal variables of all modes along the grid, driven by known strain.
struct ModeStates {
    modes: Vec<PronyMode>,
    q: Vec<f64>,
}

impl ModeStates {
    fn new(kernel: &ScalarKernel) -> Self {
        let modes = kernel.prony_modes();
        let q = vec![0.0; modes.len()];
        Self { modes, q }
    }

    /// `Σ Cᵢ qᵢ`.
    fn relaxed_stress(&self) -> f64 {
        self.modes.iter().zip(&self.q).map(|(m, q)| m.stiffness() * q).sum()
    }

    fn advance(&mut self, dt: f64, e0: f64, e1: f64) {
        for (m, q) in self.modes.iter().zip(self.q.iter_mut()) {
            let (d, a, b) = step_coefficients(m.rate(), dt);
            *q = d * *q + a * e0 + b * e1;
        }
    }
}

/// `Σ Cᵢ qᵢ(t_j)` along the grid.
fn relaxed_history(kernel: &ScalarKernel, strain: &Evolution) -> Vec<f64> {
    let mut st = ModeStates::new(kernel);
    let t = strain.grid.nodes();
    let e = &strain.values;
    let mut out = Vec::with_capacity(e.len());
    out.push(0.0);
    for j in 0..e.len() - 1 {
        st.advance(t[j + 1] - t[j], e[j], e[j + 1]);
        out.push(st.relaxed_stress());
    }
    out
}

/// Plastic strain `Pε`.
pub fn apply_p(kernel: &ScalarKernel, total: f64, strain: &Evolution) -> Result<Evolution> {
    expect_kind(strain, EvolutionKind::Strain)?;
    check_total(total)?;
    let relaxed = relaxed_history(kernel, strain);
    Ok(Evolution {
        grid: strain.grid.clone(),
        values: relaxed.into_iter().map(|r| r / total).collect(),
        kind: EvolutionKind::Strain,
    })
}

/// `σ = ℂ (ε − Pε)`.
pub fn stress_from_strain(kernel: &ScalarKernel, total: f64, strain: &Evolution) -> Result<Evolution> {
    expect_kind(strain, EvolutionKind::Strain)?;
    check_total(total)?;
    let relaxed = relaxed_history(kernel, strain);
    Ok(Evolution {
        grid: strain.grid.clone(),
        values: strain
            .values
            .iter()
            .zip(relaxed)
            .map(|(e, r)| total * e - r)
            .collect(),
        kind: EvolutionKind::Stress,
    })
}

/// Causal march: at each node the law is linear in the one unknown strain.
pub fn solve_direct(kernel: &ScalarKernel, total: f64, stress: &Evolution) -> Result<Evolution> {
    expect_kind(stress, EvolutionKind::Stress)?;
    check_total(total)?;
    let mut st = ModeStates::new(kernel);
    let t = stress.grid.nodes();
    let s = &stress.values;
    let mut e = Vec::with_capacity(s.len());
    e.push(s[0] / total);
    for j in 0..s.len() - 1 {
        let dt = t[j + 1] - t[j];
        let mut known = 0.0;
        let mut implicit = 0.0;
        for (m, q) in st.modes.iter().zip(&st.q) {
            let (d, a, b) = step_coefficients(m.rate(), dt);
            known += m.stiffness() * (d * q + a * e[j]);
            implicit += m.stiffness() * b;
        }
        let denom = total - implicit;
        if !(denom > 0.0) {
            return Err(Error::domain(format!(
                "invalid moduli: step {j} has non-positive effective modulus {denom}"
            )));
        }
        let next = (s[j + 1] + known) / denom;
        st.advance(dt, e[j], next);
        e.push(next);
    }
    Evolution::new(stress.grid.clone(), e, EvolutionKind::Strain)
}

/// `(∫ m(e)² w(T − t) dt)^{1/2}` by the trapezoid rule, with the elastic
/// metric `m = √ℂ|ε|` for strains and `|σ|/√ℂ` for stresses.
pub fn weighted_norm(e: &Evolution, total: f64, w: Weight) -> f64 {
    let scale = match e.kind {
        EvolutionKind::Strain => total,
        EvolutionKind::Stress => 1.0 / total,
    };
    let t = e.grid.nodes();
    let end = e.grid.horizon();
    let g: Vec<f64> = t
        .iter()
        .zip(&e.values)
        .map(|(&ti, v)| scale * v * v * w.eval(end - ti))
        .collect();
    let s: f64 = t
        .windows(2)
        .zip(g.windows(2))
        .map(|(tt, gg)| 0.5 * (tt[1] - tt[0]) * (gg[0] + gg[1]))
        .sum();
    s.sqrt()
}

/// Work `∫ σ dε` done along a piecewise-linear strain path, integrated
/// exactly for the discrete law. Nonnegative on closed cycles from rest.
pub fn strain_work(kernel: &ScalarKernel, total: f64, strain: &Evolution) -> Result<f64> {
    expect_kind(strain, EvolutionKind::Strain)?;
    check_total(total)?;
    let mut st = ModeStates::new(kernel);
    let t = strain.grid.nodes();
    let e = &strain.values;
    let mut work = 0.0;
    for j in 0..e.len() - 1 {
        let dt = t[j + 1] - t[j];
        let mean = 0.5 * (e[j] + e[j + 1]);
        let before = st.q.clone();
        st.advance(dt, e[j], e[j + 1]);
        // ∫ qᵢ = ∫ ε − Δqᵢ/λᵢ, since qᵢ' = λᵢ(ε − qᵢ).
        let relaxed: f64 = st
            .modes
            .iter()
            .zip(st.q.iter().zip(&before))
            .map(|(m, (q1, q0))| m.stiffness() * (mean * dt - (q1 - q0) / m.rate()))
            .sum();
        let stress_integral = total * mean * dt - relaxed;
        work += (e[j + 1] - e[j]) / dt * stress_integral;
    }
    Ok(work)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Stop once the weighted norm of an update falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Relative slack allowed in the a-priori bound check for grid effects.
pub const BOUND_SLACK: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub solution: Evolution,
    pub iterations: usize,
    /// Weighted norm of each update `ε^{k+1} − ε^k`.
    pub residuals: Vec<f64>,
    /// Successive residual ratios.
    pub ratios: Vec<f64>,
    pub gamma_used: f64,
    pub strain_norm: f64,
    pub stress_norm: f64,
    /// `‖σ‖/(1 − γ)`.
    pub bound: f64,
    /// `strain_norm ≤ bound` up to [`BOUND_SLACK`].
    pub bound_check: bool,
}

/// Scalar law with instantaneous modulus `total`.
fn law_for(kernel: &ScalarKernel, total: f64) -> Result<HereditaryLaw> {
    check_total(total)?;
    let c0 = total - kernel.stiffness();
    if !(c0 > 0.0) {
        return Err(Error::domain(format!(
            "invalid moduli: instantaneous modulus {total} does not exceed the kernel stiffness {}",
            kernel.stiffness()
        )));
    }
    HereditaryLaw::scalar(c0, kernel.clone())
}

/// Fills in norms and the a-priori bound check for a computed strain.
pub fn solve_report(
    kernel: &ScalarKernel,
    total: f64,
    stress: &Evolution,
    solution: Evolution,
    w: Weight,
) -> Result<SolveReport> {
    let cert = certify(&law_for(kernel, total)?, w)?;
    let strain_norm = weighted_norm(&solution, total, w);
    let stress_norm = weighted_norm(stress, total, w);
    let bound = cert.a_priori_factor.map_or(f64::INFINITY, |f| f * stress_norm);
    Ok(SolveReport {
        solution,
        iterations: 0,
        residuals: Vec::new(),
        ratios: Vec::new(),
        gamma_used: cert.gamma,
        strain_norm,
        stress_norm,
        bound,
        bound_check: strain_norm <= bound * (1.0 + BOUND_SLACK),
    })
}

/// Fixed-point iteration `ε ← σ/ℂ + Pε` from `ε⁰ = σ/ℂ`, refused unless the
/// certificate for `w` is contractive.
pub fn solve_picard(
    kernel: &ScalarKernel,
    total: f64,
    stress: &Evolution,
    w: Weight,
    opts: PicardOptions,
) -> Result<SolveReport> {
    expect_kind(stress, EvolutionKind::Stress)?;
    let cert = certify(&law_for(kernel, total)?, w)?;
    if !cert.contractive {
        return Err(Error::NotContractive(Box::new(cert)));
    }
    let elastic = stress.map(EvolutionKind::Strain, |s| s / total);
    let mut eps = elastic.clone();
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let p = apply_p(kernel, total, &eps)?;
        let next = Evolution {
            grid: eps.grid.clone(),
            values: elastic.values.iter().zip(&p.values).map(|(a, b)| a + b).collect(),
            kind: EvolutionKind::Strain,
        };
        let diff = Evolution {
            grid: eps.grid.clone(),
            values: next.values.iter().zip(&eps.values).map(|(a, b)| a - b).collect(),
            kind: EvolutionKind::Strain,
        };
        let r = weighted_norm(&diff, total, w);
        log::debug!("Picard iteration {}: update norm {r:.3e}", residuals.len() + 1);
        residuals.push(r);
        eps = next;
        if r < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: residuals.len(),
            residuals,
        });
    }
    let ratios = residuals
        .windows(2)
        .filter(|r| r[0] > 0.0)
        .map(|r| r[1] / r[0])
        .collect();
    let mut report = solve_report(kernel, total, stress, eps, w)?;
    report.iterations = residuals.len();
    report.residuals = residuals;
    report.ratios = ratios;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sls() -> ScalarKernel {
        ScalarKernel::single(1.0, 1.0).unwrap()
    }

    #[test]
    fn step_coefficients_are_continuous() {
        // Series and closed form meet at x = 1e-3; β' = 1/2 − x/3 + …
        let (x0, h) = (1e-3, 1e-9);
        let below = step_coefficients(1.0, x0 - h);
        let above = step_coefficients(1.0, x0 + h);
        let slope = 0.5 - x0 / 3.0;
        assert!((above.2 - below.2 - 2.0 * h * slope).abs() < 1e-14);
        assert!((above.1 + above.2 - below.1 - below.2 - 2.0 * h * (-x0).exp()).abs() < 1e-14);
        // Linear strain is reproduced: α + β = 1 − e^{−x}
        let (d, a, b) = step_coefficients(2.0, 0.7);
        assert_relative_eq!(a + b, 1.0 - d, max_relative = 1e-15);
    }

    #[test]
    fn zero_kernel_is_elastic() {
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        let e = Evolution::from_fn(g, EvolutionKind::Strain, |t| t.sin()).unwrap();
        let k = ScalarKernel::zero();
        assert!(apply_p(&k, 2.0, &e).unwrap().values().iter().all(|&v| v == 0.0));
        let s = stress_from_strain(&k, 2.0, &e).unwrap();
        for (a, b) in s.values().iter().zip(e.values()) {
            assert_eq!(*a, 2.0 * b);
        }
        let back = solve_direct(&k, 2.0, &s).unwrap();
        assert!(back.max_difference(&e) < 1e-15);
    }

    #[test]
    fn step_strain_relaxation() {
        let g = TimeGrid::uniform(3.0, 30).unwrap();
        let e = Evolution::from_fn(g, EvolutionKind::Strain, |_| 0.5).unwrap();
        // The strain is already 0.5 at t = 0, so the history starts with a jump.
        let p = apply_p(&sls(), 2.0, &e).unwrap();
        let s = stress_from_strain(&sls(), 2.0, &e).unwrap();
        for (t, (pv, sv)) in e.grid().nodes().iter().zip(p.values().iter().zip(s.values())) {
            assert_relative_eq!(*pv, 0.5 * 0.5 * (1.0 - (-t).exp()), epsilon = 1e-15);
            assert_relative_eq!(*sv, (1.0 + (-t).exp()) * 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn kind_is_checked() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let s = Evolution::zeros(g, EvolutionKind::Stress);
        assert!(matches!(
            apply_p(&sls(), 2.0, &s),
            Err(Error::KindMismatch { expected: "strain", found: "stress" })
        ));
        let e = Evolution::zeros(s.grid().clone(), EvolutionKind::Strain);
        assert!(matches!(solve_direct(&sls(), 2.0, &e), Err(Error::KindMismatch { .. })));
        assert!(matches!(solve_direct(&sls(), 0.0, &s), Err(Error::Domain(_))));
    }

    #[test]
    fn creep_closed_form() {
        let (c0, c1, l1, s0) = (1.0, 1.0, 1.0, 2.0);
        let total = c0 + c1;
        let g = TimeGrid::uniform(5.0, 2000).unwrap();
        let sigma = Evolution::from_fn(g, EvolutionKind::Stress, |_| s0).unwrap();
        let e = solve_direct(&sls(), total, &sigma).unwrap();
        for (t, v) in e.grid().nodes().iter().zip(e.values()) {
            let exact = s0 / c0 - (c1 / c0) * (s0 / total) * (-l1 * c0 * t / total).exp();
            assert!((v - exact).abs() < 1e-6 * exact, "t={t}");
        }
    }

    #[test]
    fn round_trip() {
        let k = ScalarKernel::from_pairs(&[(0.3, 0.2), (1.0, 5.0), (0.5, 40.0)]).unwrap();
        let g = TimeGrid::from_nodes(vec![0.0, 0.01, 0.05, 0.2, 0.21, 0.7, 1.5, 3.0]).unwrap();
        let e = Evolution::from_fn(g, EvolutionKind::Strain, |t| (3.0 * t).cos() + t).unwrap();
        let s = stress_from_strain(&k, 2.5, &e).unwrap();
        let back = solve_direct(&k, 2.5, &s).unwrap();
        assert!(back.max_difference(&e) < 1e-13);
    }

    #[test]
    fn norm_examples() {
        let g = TimeGrid::uniform(1.0, 7).unwrap();
        let e = Evolution::from_fn(g.clone(), EvolutionKind::Strain, |_| 1.0).unwrap();
        assert_relative_eq!(weighted_norm(&e, 4.0, Weight::constant()), 2.0, max_relative = 1e-15);
        assert_eq!(weighted_norm(&Evolution::zeros(g.clone(), EvolutionKind::Strain), 4.0, Weight::constant()), 0.0);
        let s = Evolution::from_fn(g, EvolutionKind::Stress, |t| 4.0 * t.sin()).unwrap();
        let e = Evolution::from_fn(s.grid().clone(), EvolutionKind::Strain, |t| t.sin()).unwrap();
        let w = Weight::exponential(0.4).unwrap();
        assert_relative_eq!(weighted_norm(&s, 4.0, w), weighted_norm(&e, 4.0, w), max_relative = 1e-14);
    }

    #[test]
    fn picard_matches_direct() {
        let g = TimeGrid::uniform(4.0, 400).unwrap();
        let s = Evolution::from_fn(g, EvolutionKind::Stress, |t| (2.0 * t).sin() + 0.3).unwrap();
        let opts = PicardOptions { tol: 1e-13, max_iter: 200 };
        let r = solve_picard(&sls(), 2.0, &s, Weight::constant(), opts).unwrap();
        assert_relative_eq!(r.gamma_used, 0.5, max_relative = 1e-15);
        assert!(r.ratios.iter().all(|&q| q <= 0.55));
        assert!(r.bound_check);
        assert!(r.strain_norm <= 2.0 * r.stress_norm);
        let d = solve_direct(&sls(), 2.0, &s).unwrap();
        assert!(r.solution.max_difference(&d) < 1e-11);
    }

    #[test]
    fn picard_zero_kernel_one_iteration() {
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        let s = Evolution::from_fn(g, EvolutionKind::Stress, |t| t).unwrap();
        let r = solve_picard(&ScalarKernel::zero(), 1.0, &s, Weight::constant(), PicardOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.residuals, vec![0.0]);
    }

    #[test]
    fn picard_refuses_and_reports() {
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        let s = Evolution::from_fn(g, EvolutionKind::Stress, |t| t).unwrap();
        let k = ScalarKernel::single(1.0, 2.0).unwrap();
        let w = Weight::exponential(1.5).unwrap();
        assert!(matches!(
            solve_picard(&k, 2.0, &s, w, PicardOptions::default()),
            Err(Error::NotContractive(_))
        ));
        let opts = PicardOptions { tol: 1e-300, max_iter: 3 };
        let Err(Error::NonConvergence { iterations, residuals }) = solve_picard(&k, 2.0, &s, Weight::constant(), opts) else {
            panic!()
        };
        assert_eq!((iterations, residuals.len()), (3, 3));
    }

    #[test]
    fn closed_cycle_dissipates() {
        let k = ScalarKernel::from_pairs(&[(1.0, 0.5), (2.0, 7.0)]).unwrap();
        let g = TimeGrid::uniform(2.0, 50).unwrap();
        let e = Evolution::from_fn(g, EvolutionKind::Strain, |t| (std::f64::consts::PI * t).sin()).unwrap();
        assert!(strain_work(&k, 4.0, &e).unwrap() > 0.0);
        // Purely elastic cycles store and return all work.
        assert!(strain_work(&ScalarKernel::zero(), 4.0, &e).unwrap().abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let g = TimeGrid::uniform(1.0, 5).unwrap();
        let e = Evolution::from_fn(g, EvolutionKind::Stress, |t| 1.0 / 3.0 + t).unwrap();
        e.write_csv(&path).unwrap();
        let back = Evolution::read_csv(&path, EvolutionKind::Stress).unwrap();
        assert_eq!(back, e);
        let bad = Evolution::read_csv_from("t,s\n0,1\n0,2\n".as_bytes(), EvolutionKind::Stress);
        assert!(bad.is_err());
        let bad = Evolution::read_csv_from("t,s\n0,x\n".as_bytes(), EvolutionKind::Stress);
        assert!(matches!(bad, Err(Error::Config(_))));
    }
}
