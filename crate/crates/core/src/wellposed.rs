//! Fading-memory certification.
//!
//! For the weight `w(τ) = e^{−λ₀τ}`,
//!
//! ```text
//! γ   = ∫₀^∞ ‖K(τ)‖ w⁻¹(τ) dτ,
//! ‖·‖_HS = (∫₀^∞ ‖K(τ)‖² w⁻¹(τ) dτ)^{1/2}.
//! ```
//!
//! `γ < 1` makes `P` a contraction in the weighted space, so the local
//! problem has a unique solution with `‖ε‖ ≤ ‖σ‖/(1 − γ)` and Picard
//! iteration converges. Scalar laws use the spectral closed forms; isotropic
//! laws with two active parts integrate the pointwise max-norm adaptively.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::material::{HereditaryLaw, ModalLaw, ScalarKernel, Weight};
use crate::quadrature::integrate_to_infinity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

/// Which weight hypotheses hold. With `λ₀ > 0` the exponential weight is
/// integrable and square integrable; `λ₀ = 0` is meaningful only on finite
/// history windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Hypotheses {
    pub weight_integrable: bool,
    pub weight_square_integrable: bool,
    pub finite_horizon_only: bool,
}

impl Hypotheses {
    fn for_weight(w: Weight) -> Self {
        let decaying = w.rate() > 0.0;
        Self {
            weight_integrable: decaying,
            weight_square_integrable: decaying,
            finite_horizon_only: !decaying,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub gamma: f64,
    pub contractive: bool,
    pub hs_constant: f64,
    /// `1/(1 − γ)`, present only when contractive.
    pub a_priori_factor: Option<f64>,
    pub weight: Weight,
    pub method: Method,
    pub hypotheses: Hypotheses,
}

/// Modal laws that enter the operator norm and carry a nonzero kernel.
fn active_parts(law: &HereditaryLaw) -> Vec<ModalLaw> {
    law.modal_laws().into_iter().filter(|m| !m.kernel.is_zero()).collect()
}

fn label(m: &ModalLaw) -> String {
    format!("{:?} kernel", m.kind).to_lowercase()
}

fn check_gamma_domain(parts: &[ModalLaw], w: Weight) -> Result<()> {
    for m in parts {
        m.kernel.check_rates_above(w.rate(), &label(m))?;
    }
    Ok(())
}

fn check_hs_domain(parts: &[ModalLaw], w: Weight) -> Result<()> {
    let shift = w.rate();
    for m in parts {
        match &m.kernel {
            ScalarKernel::Prony(modes) => {
                for (i, mode) in modes.iter().enumerate() {
                    if 2.0 * mode.rate() <= shift {
                        return Err(Error::Divergence(format!(
                            "{} mode pair ({i}, {i}): rates sum to {} <= {shift}",
                            label(m),
                            2.0 * mode.rate()
                        )));
                    }
                }
            }
            ScalarKernel::Measure(_) => m.kernel.check_rates_above(0.5 * shift, &label(m))?,
        }
    }
    Ok(())
}

fn gamma_closed(m: &ModalLaw, shift: f64) -> f64 {
    m.kernel.spectral_sum(|l| 1.0 / (l - shift)) / m.total()
}

fn hs_closed(m: &ModalLaw, shift: f64) -> f64 {
    m.kernel.spectral_sum2(|a, b| 1.0 / (a + b - shift)).max(0.0).sqrt() / m.total()
}

fn rate_scale(parts: &[ModalLaw], shift: f64) -> (f64, f64) {
    let fastest = parts
        .iter()
        .filter_map(|m| m.kernel.fastest_rate())
        .fold(0.0f64, f64::max);
    let slowest = parts
        .iter()
        .filter_map(|m| m.kernel.slowest_rate())
        .fold(f64::INFINITY, f64::min);
    (1.0 / (fastest - shift).max(f64::MIN_POSITIVE), 1.0 / (slowest - shift).max(f64::MIN_POSITIVE))
}

/// `γ` by adaptive quadrature of the pointwise operator norm.
pub fn gamma_quadrature(law: &HereditaryLaw, w: Weight) -> Result<f64> {
    let parts = active_parts(law);
    check_gamma_domain(&parts, w)?;
    if parts.is_empty() {
        return Ok(0.0);
    }
    let shift = w.rate();
    let (scale, slow) = rate_scale(&parts, shift);
    let r = integrate_to_infinity(
        |t| {
            parts
                .iter()
                .map(|m| m.kernel.eval_shifted(t, shift) / m.total())
                .fold(0.0, f64::max)
        },
        |x| parts.iter().map(|m| m.kernel.shifted_tail(shift, x) / m.total()).sum(),
        scale,
        &[slow],
        1e-13,
    );
    Ok(r.value)
}

fn gamma_with_method(law: &HereditaryLaw, w: Weight) -> Result<(f64, Method)> {
    let parts = active_parts(law);
    check_gamma_domain(&parts, w)?;
    match parts.as_slice() {
        [] => Ok((0.0, Method::ClosedForm)),
        [m] => Ok((gamma_closed(m, w.rate()), Method::ClosedForm)),
        _ => Ok((gamma_quadrature(law, w)?, Method::Quadrature)),
    }
}

/// `γ = ∫ ‖K‖ w⁻¹`; closed form whenever a single modal kernel is active.
pub fn gamma(law: &HereditaryLaw, w: Weight) -> Result<f64> {
    gamma_with_method(law, w).map(|(g, _)| g)
}

/// Hilbert-Schmidt constant by adaptive quadrature.
pub fn hs_constant_quadrature(law: &HereditaryLaw, w: Weight) -> Result<f64> {
    let parts = active_parts(law);
    check_hs_domain(&parts, w)?;
    if parts.is_empty() {
        return Ok(0.0);
    }
    let shift = w.rate();
    let half = 0.5 * shift;
    let (scale, slow) = rate_scale(&parts, half);
    let r = integrate_to_infinity(
        |t| {
            parts
                .iter()
                .map(|m| m.kernel.eval_shifted(t, half) / m.total())
                .fold(0.0, f64::max)
                .powi(2)
        },
        |x| {
            let mut s = 0.0;
            for p in &parts {
                for q in &parts {
                    s += p.kernel.spectral_sum(|a| {
                        q.kernel
                            .spectral_sum(|b| (-(a + b - shift) * x).exp() / (a + b - shift))
                    }) / (p.total() * q.total());
                }
            }
            s
        },
        0.5 * scale,
        &[0.5 * slow],
        1e-13,
    );
    Ok(r.value.sqrt())
}

fn hs_with_method(law: &HereditaryLaw, w: Weight) -> Result<(f64, Method)> {
    let parts = active_parts(law);
    check_hs_domain(&parts, w)?;
    match parts.as_slice() {
        [] => Ok((0.0, Method::ClosedForm)),
        [m] => Ok((hs_closed(m, w.rate()), Method::ClosedForm)),
        _ => Ok((hs_constant_quadrature(law, w)?, Method::Quadrature)),
    }
}

/// `(∫ ‖K‖² w⁻¹)^{1/2}`.
pub fn hs_constant(law: &HereditaryLaw, w: Weight) -> Result<f64> {
    hs_with_method(law, w).map(|(h, _)| h)
}

/// Bundles `γ`, the HS constant and the a-priori factor.
pub fn certify(law: &HereditaryLaw, w: Weight) -> Result<Certificate> {
    let (gamma, g_method) = gamma_with_method(law, w)?;
    let (hs, h_method) = hs_with_method(law, w)?;
    let contractive = gamma < 1.0;
    let method = if g_method == Method::Quadrature || h_method == Method::Quadrature {
        Method::Quadrature
    } else {
        Method::ClosedForm
    };
    Ok(Certificate {
        gamma,
        contractive,
        hs_constant: hs,
        a_priori_factor: contractive.then(|| 1.0 / (1.0 - gamma)),
        weight: w,
        method,
        hypotheses: Hypotheses::for_weight(w),
    })
}

/// Largest weight rate keeping `γ < 1`, found by bisection to relative 1e−10.
/// A law without active kernels returns `+∞`.
pub fn max_decay_rate(law: &HereditaryLaw) -> Result<f64> {
    let parts = active_parts(law);
    if parts.is_empty() {
        return Ok(f64::INFINITY);
    }
    let cert = certify(law, Weight::constant())?;
    if !cert.contractive {
        return Err(Error::NotContractive(Box::new(cert)));
    }
    let edge = parts
        .iter()
        .filter_map(|m| m.kernel.slowest_rate())
        .fold(f64::INFINITY, f64::min);
    let below = |rate: f64| -> bool {
        Weight::exponential(rate)
            .and_then(|w| gamma(law, w))
            .map(|g| g < 1.0)
            .unwrap_or(false)
    };
    if below(edge * (1.0 - 1e-12)) {
        return Ok(edge);
    }
    let (mut lo, mut hi) = (0.0, edge);
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Result of a semigroup check on a tabulated weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemigroupCheck {
    pub passed: bool,
    /// Largest `w(s−t)w(t) − w(s)` over grid pairs (≤ 0 means no violation).
    pub worst_violation: f64,
    /// `(s, t)` attaining the worst violation.
    pub worst_pair: Option<(f64, f64)>,
}

fn interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let j = nodes.partition_point(|&t| t <= x).clamp(1, nodes.len() - 1);
    let (t0, t1) = (nodes[j - 1], nodes[j]);
    values[j - 1] + (x - t0) / (t1 - t0) * (values[j] - values[j - 1])
}

/// Checks `w(s) ≥ w(s − t) w(t) − tol` for all grid pairs `0 ≤ t ≤ s`,
/// interpolating `w(s − t)` linearly between samples.
pub fn check_semigroup(nodes: &[f64], values: &[f64], tol: f64) -> Result<SemigroupCheck> {
    if nodes.len() != values.len() || nodes.len() < 2 {
        return Err(Error::InvalidWeight("need at least two samples with matching values".into()));
    }
    if nodes[0] != 0.0 || (values[0] - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeight("samples must start at τ = 0 with w(0) = 1".into()));
    }
    if nodes.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidWeight("sample nodes must be strictly increasing".into()));
    }
    if let Some(i) = values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidWeight(format!("w({}) = {} is not positive", nodes[i], values[i])));
    }
    if let Some(i) = values.windows(2).position(|p| p[1] > p[0]) {
        return Err(Error::InvalidWeight(format!(
            "weight increases between τ = {} and τ = {}",
            nodes[i],
            nodes[i + 1]
        )));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut pair = None;
    for (i, &s) in nodes.iter().enumerate() {
        for (j, &t) in nodes.iter().enumerate().take(i + 1) {
            let v = interpolate(nodes, values, s - t) * values[j] - values[i];
            if v > worst {
                worst = v;
                pair = Some((s, t));
            }
        }
    }
    Ok(SemigroupCheck {
        passed: worst <= tol,
        worst_violation: worst.max(0.0),
        worst_pair: if worst > tol { pair } else { None },
    })
}
