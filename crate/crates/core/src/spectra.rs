//! Relaxation spectra.
//!
//! A relaxation measure `ν` over decay rates above a cutoff `λ₀` generates
//! the kernel
//!
//! ```text
//! K(τ) = ∫ (λ − λ₀) e^{−λτ} dν(λ)
//!      = Σⱼ (λⱼ − λ₀) mⱼ e^{−λⱼτ} + ∫ (λ − λ₀) ρ(λ) e^{−λτ} dλ,
//! ```
//!
//! from Dirac atoms `(λⱼ, mⱼ)` and a tabulated density `ρ`. Atoms map to
//! Prony modes with `Cⱼ λⱼ = (λⱼ − λ₀) mⱼ`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::sls::SlsParams;
use crate::history::{assemble_s, SingularSystem};
use crate::material::{PronyMode, ScalarKernel, Weight};
use crate::quadrature::{integrate_to_infinity, GaussLegendre};

const PANEL_ORDER: usize = 16;

fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_ORDER))
}

/// Nonnegative density tabulated at equispaced nodes over `support`,
/// interpolated linearly. A single value means a constant density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedDensity {
    pub support: [f64; 2],
    pub values: Vec<f64>,
}

impl TabulatedDensity {
    pub fn uniform(a: f64, b: f64, value: f64) -> Self {
        Self {
            support: [a, b],
            values: vec![value, value],
        }
    }

    /// Samples `f` at `count` equispaced nodes of `[a, b]`.
    pub fn from_fn(a: f64, b: f64, count: usize, f: impl Fn(f64) -> f64) -> Self {
        let count = count.max(2);
        let h = (b - a) / (count - 1) as f64;
        Self {
            support: [a, b],
            values: (0..count).map(|i| f(a + h * i as f64)).collect(),
        }
    }

    fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let [a, b] = self.support;
        let values: &[f64] = if self.values.len() == 1 {
            std::slice::from_ref(&self.values[0])
        } else {
            &self.values
        };
        let n = values.len().max(2) - 1;
        let h = (b - a) / n as f64;
        (0..n).map(move |i| {
            let (v0, v1) = if values.len() == 1 {
                (values[0], values[0])
            } else {
                (values[i], values[i + 1])
            };
            let x0 = a + h * i as f64;
            let x1 = if i + 1 == n { b } else { a + h * (i + 1) as f64 };
            (x0, x1, v0, v1)
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let [a, b] = self.support;
        if x < a || x > b {
            return 0.0;
        }
        for (x0, x1, v0, v1) in self.intervals() {
            if x <= x1 {
                let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
                return v0 + t * (v1 - v0);
            }
        }
        0.0
    }

    fn is_null(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `∫ ρ(λ) g(λ) dλ` with `pieces` Gauss-Legendre panels per tabulation interval.
    fn integrate(&self, g: &dyn Fn(f64) -> f64, pieces: usize) -> f64 {
        let rule = panel_rule();
        let mut total = 0.0;
        for (x0, x1, v0, v1) in self.intervals() {
            if v0 == 0.0 && v1 == 0.0 {
                continue;
            }
            let h = (x1 - x0) / pieces as f64;
            for p in 0..pieces {
                let a = x0 + h * p as f64;
                let b = if p + 1 == pieces { x1 } else { a + h };
                total += rule.integrate(a, b, |x| {
                    let t = (x - x0) / (x1 - x0);
                    (v0 + t * (v1 - v0)) * g(x)
                });
            }
        }
        total
    }
}

/// Cutoff `λ₀`, Dirac atoms `(λⱼ, mⱼ)` and an optional tabulated density.
///
/// JSON form: `{"lambda0": 0.0, "atoms": [[2.0, 1.0]], "density":
/// {"support": [1.0, 2.0], "values": [1.0, 1.0]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationMeasure {
    #[serde(rename = "lambda0")]
    cutoff: f64,
    #[serde(default)]
    atoms: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    density: Option<TabulatedDensity>,
}

impl RelaxationMeasure {
    pub fn new(cutoff: f64, atoms: Vec<(f64, f64)>, density: Option<TabulatedDensity>) -> Result<Self> {
        let nu = Self {
            cutoff,
            atoms,
            density,
        };
        nu.validate()?;
        Ok(nu)
    }

    pub fn atomic(cutoff: f64, atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(cutoff, atoms, None)
    }

    pub fn empty(cutoff: f64) -> Result<Self> {
        Self::new(cutoff, Vec::new(), None)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let nu: Self = serde_json::from_str(text)?;
        nu.validate()?;
        Ok(nu)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.cutoff.is_finite() && self.cutoff >= 0.0) {
            problems.push(format!("cutoff must be finite and non-negative, got {}", self.cutoff));
        }
        for (j, &(l, m)) in self.atoms.iter().enumerate() {
            if !(l.is_finite() && l > self.cutoff) {
                problems.push(format!("atom {j} at rate {l} is not above the cutoff {}", self.cutoff));
            }
            if !(m.is_finite() && m >= 0.0) {
                problems.push(format!("atom {j} has invalid mass {m}"));
            }
        }
        if let Some(d) = &self.density {
            let [a, b] = d.support;
            if !(a.is_finite() && b.is_finite() && a < b) {
                problems.push(format!("density support [{a}, {b}] is not a finite interval"));
            } else if a < self.cutoff {
                problems.push(format!("density support starts at {a}, below the cutoff {}", self.cutoff));
            }
            if d.values.is_empty() {
                problems.push("density has no values".to_string());
            }
            if d.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                problems.push("density values must be finite and non-negative".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(problems.join("; ")))
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&TabulatedDensity> {
        self.density.as_ref()
    }

    fn live_density(&self) -> Option<&TabulatedDensity> {
        self.density.as_ref().filter(|d| !d.is_null())
    }

    pub fn is_null(&self) -> bool {
        self.atoms.iter().all(|&(_, m)| m == 0.0) && self.live_density().is_none()
    }

    /// Total mass `ν(ℝ)`.
    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.1).sum();
        atoms + self.live_density().map_or(0.0, |d| d.integrate(&|_| 1.0, 1))
    }

    /// `Σ a(λ) g(λ)` where `K = Σ a(λ) e^{−λτ}`, i.e. `a = (λ − λ₀) dν`.
    pub(crate) fn spectral_sum(&self, g: &dyn Fn(f64) -> f64, pieces: usize) -> f64 {
        let c = self.cutoff;
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| a.1 > 0.0)
            .map(|&(l, m)| (l - c) * m * g(l))
            .sum();
        let cont = self
            .live_density()
            .map_or(0.0, |d| d.integrate(&|l| (l - c) * g(l), pieces.max(1)));
        atoms + cont
    }

    pub fn kernel_value(&self, tau: f64) -> f64 {
        self.kernel_value_shifted(tau, 0.0)
    }

    /// `K(τ) e^{shift·τ}`; panels are refined so the exponential stays resolved.
    pub(crate) fn kernel_value_shifted(&self, tau: f64, shift: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        let pieces = match &self.density {
            Some(d) => {
                let n = d.values.len().max(2) - 1;
                let h = (d.support[1] - d.support[0]) / n as f64;
                ((tau * h / 4.0).ceil() as usize).clamp(1, 4096)
            }
            None => 1,
        };
        self.spectral_sum(&|l| (-(l - shift) * tau).exp(), pieces)
    }

    pub fn min_rate(&self) -> Option<f64> {
        let atoms = self.atoms.iter().filter(|a| a.1 > 0.0).map(|a| a.0);
        let dens = self.live_density().map(|d| d.support[0]);
        atoms.chain(dens).min_by(f64::total_cmp)
    }

    pub fn max_rate(&self) -> Option<f64> {
        let atoms = self.atoms.iter().filter(|a| a.1 > 0.0).map(|a| a.0);
        let dens = self.live_density().map(|d| d.support[1]);
        atoms.chain(dens).max_by(f64::total_cmp)
    }

    pub(crate) fn check_rates_above(&self, shift: f64, label: &str) -> Result<()> {
        for (j, &(l, m)) in self.atoms.iter().enumerate() {
            if m > 0.0 && l <= shift {
                return Err(Error::Divergence(format!("{label} atom {j} has rate {l} <= {shift}")));
            }
        }
        if let Some(d) = self.live_density() {
            let a = d.support[0];
            // At a == cutoff the factor (λ − λ₀) keeps the integrand bounded.
            let singular = a < shift || (a == shift && shift > self.cutoff && d.eval(a) > 0.0);
            if singular {
                return Err(Error::Divergence(format!(
                    "{label} density support starts at {a}, not above {shift}"
                )));
            }
        }
        Ok(())
    }

    /// Prony modes of the kernel. Atoms map exactly; the density is atomized
    /// with 16 Gauss-Legendre nodes per tabulation interval.
    pub fn prony_modes(&self) -> Vec<PronyMode> {
        let c = self.cutoff;
        let mut modes: Vec<PronyMode> = self
            .atoms
            .iter()
            .filter_map(|&(l, m)| PronyMode::new((l - c) * m / l, l).ok())
            .collect();
        if let Some(d) = self.live_density() {
            let rule = panel_rule();
            for (x0, x1, v0, v1) in d.intervals() {
                for (x, w) in rule.mapped(x0, x1) {
                    let rho = v0 + (x - x0) / (x1 - x0) * (v1 - v0);
                    if let Ok(m) = PronyMode::new((x - c) * rho * w / x, x) {
                        modes.push(m);
                    }
                }
            }
        }
        modes
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.cutoff,
            self.atoms.iter().map(|&(l, m)| (l, m * factor)).collect(),
            self.density.as_ref().map(|d| TabulatedDensity {
                support: d.support,
                values: d.values.iter().map(|v| v * factor).collect(),
            }),
        )
    }

    /// Convex combination `θ ν + (1 − θ) other`; both must share the cutoff.
    pub fn mix(&self, other: &Self, theta: f64) -> Result<Self> {
        if self.cutoff != other.cutoff || self.density.is_some() || other.density.is_some() {
            return Err(Error::InvalidMeasure(
                "mixtures need atomic measures with a common cutoff".to_string(),
            ));
        }
        let mut atoms: Vec<(f64, f64)> = self.atoms.iter().map(|&(l, m)| (l, theta * m)).collect();
        atoms.extend(other.atoms.iter().map(|&(l, m)| (l, (1.0 - theta) * m)));
        Self::atomic(self.cutoff, atoms)
    }
}

/// Measure-backed kernel.
pub fn kernel_from_measure(nu: &RelaxationMeasure) -> Result<ScalarKernel> {
    nu.validate()?;
    Ok(ScalarKernel::Measure(nu.clone()))
}

/// `∫₀^∞ |K₁ − K₂| w⁻¹ dτ / ℂ`, the bound on `‖P₁ − P₂‖`.
pub fn kernel_distance(k1: &ScalarKernel, k2: &ScalarKernel, total: f64, w: Weight) -> Result<f64> {
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::domain(format!("instantaneous modulus must be positive, got {total}")));
    }
    let shift = w.rate();
    k1.check_rates_above(shift, "first kernel")?;
    k2.check_rates_above(shift, "second kernel")?;
    if k1 == k2 {
        return Ok(0.0);
    }
    let fastest = [k1.fastest_rate(), k2.fastest_rate()]
        .into_iter()
        .flatten()
        .fold(0.0f64, f64::max);
    if fastest == 0.0 {
        return Ok(0.0);
    }
    let slowest = [k1.slowest_rate(), k2.slowest_rate()]
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);
    let r = integrate_to_infinity(
        |t| (k1.eval_shifted(t, shift) - k2.eval_shifted(t, shift)).abs(),
        |x| {
            let t1 = if k1.is_zero() { 0.0 } else { k1.shifted_tail(shift, x) };
            let t2 = if k2.is_zero() { 0.0 } else { k2.shifted_tail(shift, x) };
            t1 + t2
        },
        1.0 / (fastest - shift),
        &[1.0 / (slowest - shift)],
        1e-12,
    );
    Ok(r.value / total)
}

/// Atoms at the `n` Gauss-Legendre nodes of the density support, with masses
/// `ρ(λᵢ) wᵢ`. Existing atoms are kept.
pub fn prony_from_density(nu: &RelaxationMeasure, n: usize) -> Result<RelaxationMeasure> {
    if n == 0 {
        return Err(Error::domain("atom count must be positive"));
    }
    let mut atoms = nu.atoms.clone();
    if let Some(d) = nu.live_density() {
        let [a, b] = d.support;
        let rule = GaussLegendre::new(n);
        atoms.extend(rule.mapped(a, b).map(|(x, w)| (x, d.eval(x) * w)));
    }
    RelaxationMeasure::atomic(nu.cutoff, atoms)
}

/// Outcome of [`prony_to_tolerance`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PronyFit {
    pub measure: RelaxationMeasure,
    pub atoms: usize,
    pub distance: f64,
    /// False when `max_atoms` was reached before the tolerance.
    pub reached: bool,
}

/// Doubles the atom count from 1 until the kernel distance to `reference`
/// is at most `tol`; reports the best attempt when `max_atoms` is exhausted.
pub fn prony_to_tolerance(
    nu: &RelaxationMeasure,
    reference: &ScalarKernel,
    total: f64,
    w: Weight,
    tol: f64,
    max_atoms: usize,
) -> Result<PronyFit> {
    let mut best: Option<PronyFit> = None;
    let mut n = 1;
    while n <= max_atoms.max(1) {
        let measure = prony_from_density(nu, n)?;
        let distance = kernel_distance(&kernel_from_measure(&measure)?, reference, total, w)?;
        let reached = distance <= tol;
        if best.as_ref().is_none_or(|b| distance < b.distance) {
            best = Some(PronyFit {
                measure,
                atoms: n,
                distance,
                reached,
            });
        }
        if reached {
            break;
        }
        n *= 2;
    }
    Ok(best.expect("at least one attempt"))
}

/// Per-function margins of a class-membership test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// `μₖ − ‖T φₖ‖²`.
    pub margins: Vec<f64>,
}

/// Margins below this count as violations.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Tests `‖T φₖ‖² ≤ μₖ = sₖ²` for the candidate operator `T` on the right
/// singular functions of the bounding operator, on its own grid and weight.
pub fn class_membership(candidate: &ScalarKernel, total: f64, bounding: &SingularSystem) -> Result<Membership> {
    let op = assemble_s(candidate, total, bounding.weight, &bounding.grid)?;
    let margins: Vec<f64> = bounding
        .values
        .iter()
        .zip(&bounding.phi)
        .map(|(s, phi)| {
            let t = op.apply(phi);
            s * s - bounding.grid.inner(&t, &t, bounding.weight)
        })
        .collect();
    Ok(Membership {
        member: margins.iter().all(|&m| m >= -MEMBERSHIP_TOL),
        margins,
    })
}

/// N-width of the class bounded by the operator: `s_{N+1}`, or 0 beyond the rank.
pub fn class_nwidth(bounding: &SingularSystem, n: usize) -> Result<f64> {
    let s1 = bounding.values.first().copied().unwrap_or(0.0);
    match bounding.values.get(n) {
        Some(&s) if s >= crate::history::RANK_TOL * s1 => Ok(s),
        Some(_) => Ok(0.0),
        None if bounding.complete || n >= bounding.grid.len() => Ok(0.0),
        None => Err(Error::domain(format!(
            "N-width {n} needs {} singular values, system holds {}",
            n + 1,
            bounding.values.len()
        ))),
    }
}

/// `A_k`, `B_k` and `(Tφ_k, Tφ_k)` for a candidate measure against the SLS
/// reference functions `φ_k = c_k e^{−(λ₁−λ₀)τ/2} sin(kπτ/T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassIntegrals {
    pub a: f64,
    pub b: f64,
    pub inner: f64,
}

fn reference_frequency(sls: &SlsParams, k: usize) -> Result<(f64, f64)> {
    sls.validate()?;
    if k == 0 {
        return Err(Error::domain("index k starts at 1"));
    }
    if sls.weight_rate >= sls.rate {
        return Err(Error::domain(format!(
            "weight rate {} must be below the relaxation rate {}",
            sls.weight_rate, sls.rate
        )));
    }
    let omega = k as f64 * std::f64::consts::PI / sls.horizon;
    let l1 = sls.rate;
    let c = (2.0 * omega * omega / (l1 * (l1 * l1 + 4.0 * omega * omega))).powf(-0.5);
    Ok((omega, c))
}

/// Spectral integrals over `ν` and their closed inner-product combination
/// (integrated over `τ ∈ [0, ∞)`, normalized by `ℂ²`).
pub fn sls_class_integrals(nu: &RelaxationMeasure, sls: &SlsParams, k: usize) -> Result<ClassIntegrals> {
    let (omega, c) = reference_frequency(sls, k)?;
    let (l1, l0) = (sls.rate, sls.weight_rate);
    let w4 = 4.0 * omega * omega;
    let p = |l: f64| 2.0 * l + l1 - l0;
    let a = nu.spectral_sum(&|l| 4.0 * omega / (p(l).powi(2) + w4), 2);
    let b = nu.spectral_sum(&|l| 2.0 * p(l) / (p(l).powi(2) + w4), 2);
    let total = sls.total();
    let d = l1 * l1 + w4;
    let inner = c * c / (total * total) * (2.0 * omega * omega * (a * a + b * b) + a * a * l1 * l1 + 2.0 * a * b * l1 * omega)
        / (l1 * d);
    Ok(ClassIntegrals { a, b, inner })
}

/// `(Tφ_k, Tφ_k)` by nested adaptive quadrature of the history operator,
/// independent of the spectral closed form.
pub fn sls_class_inner_direct(nu: &RelaxationMeasure, sls: &SlsParams, k: usize) -> Result<f64> {
    let (omega, c) = reference_frequency(sls, k)?;
    if nu.is_null() {
        return Ok(0.0);
    }
    let beta = sls.rate - sls.weight_rate;
    let kernel = ScalarKernel::Measure(nu.clone());
    let total = sls.total();
    let fastest = nu.max_rate().unwrap_or(1.0) + beta / 2.0;
    let phi = move |x: f64| c * (-0.5 * beta * x).exp() * (omega * x).sin();
    let t_phi = |tau: f64| {
        integrate_to_infinity(
            |r| kernel.eval(r) * phi(tau + r),
            |x| c * (-0.5 * beta * tau).exp() * kernel.shifted_tail(-beta / 2.0, x),
            1.0 / fastest,
            &[],
            1e-13,
        )
        .value
            / total
    };
    let bound = c / total * kernel.spectral_sum(|l| 1.0 / (l + beta / 2.0));
    let l1 = sls.rate;
    let r = integrate_to_infinity(
        |tau| t_phi(tau).powi(2) * (-sls.weight_rate * tau).exp(),
        |x| bound * bound * (-l1 * x).exp() / l1,
        (1.0 / l1).min(sls.horizon / (4.0 * k as f64)),
        &[],
        1e-11,
    );
    Ok(r.value)
}
