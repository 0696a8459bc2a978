//! Standard linear solid: single-mode kernel `K(τ) = C₁λ₁ e^{−λ₁τ}`,
//! `ℂ = C₀ + C₁`, under the weight `e^{−λ₀τ}` on `(0, T)`.
//!
//! Two eigen-references for `S*S` are provided. [`sls_eigen_reference`]
//! evaluates the textbook closed form (reported, not trusted), while
//! [`sls_eigen_ode_oracle`] differentiates the integral equations into the
//! boundary value problem
//!
//! ```text
//! u' = λ₁u − a φ,        u(T) = 0      (u = Sφ)
//! v' = a u − (λ₁−λ₀)v,   v(0) = 0      (v = S*u = μφ)
//! ```
//!
//! with `a = C₁λ₁/ℂ`, and solves it by RK4 shooting on the oscillation
//! frequency `ω`, related to the eigenvalue by `μ = a²/(ω² + (λ₁ − λ₀/2)²)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::material::{HereditaryLaw, ScalarKernel, Weight};

/// SLS material plus weight rate and history horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlsParams {
    pub c0: f64,
    pub c1: f64,
    pub rate: f64,
    pub weight_rate: f64,
    pub horizon: f64,
}

impl SlsParams {
    pub fn new(c0: f64, c1: f64, rate: f64, weight_rate: f64, horizon: f64) -> Result<Self> {
        let p = Self {
            c0,
            c1,
            rate,
            weight_rate,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.c0) && self.c1.is_finite() && self.c1 >= 0.0 && ok(self.rate) && ok(self.horizon)) {
            return Err(Error::domain(format!("invalid SLS parameters {self:?}")));
        }
        if !(self.weight_rate.is_finite() && self.weight_rate >= 0.0) {
            return Err(Error::domain(format!("invalid weight rate {}", self.weight_rate)));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.c0 + self.c1
    }

    /// `a = C₁λ₁/ℂ`, the kernel at zero lag in units of `ℂ`.
    pub fn coupling(&self) -> f64 {
        self.c1 * self.rate / self.total()
    }

    pub fn kernel(&self) -> ScalarKernel {
        if self.c1 > 0.0 {
            ScalarKernel::single(self.c1, self.rate).expect("validated")
        } else {
            ScalarKernel::zero()
        }
    }

    pub fn law(&self) -> Result<HereditaryLaw> {
        HereditaryLaw::scalar(self.c0, self.kernel())
    }

    pub fn weight(&self) -> Weight {
        Weight::exponential(self.weight_rate).expect("validated")
    }
}

/// Closed-form eigenpair `φₖ = cₖ e^{−(λ₁−λ₀)τ/2} sin(ωₖτ)`, `ωₖ = kπ/T`,
/// `μₖ = (C₁/ℂ)² 4λ₁²/((λ₁−λ₀)² + ωₖ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceEigenpair {
    pub k: usize,
    pub omega: f64,
    pub mu: f64,
    pub norm_const: f64,
    pub envelope_rate: f64,
}

impl ReferenceEigenpair {
    pub fn phi(&self, tau: f64) -> f64 {
        self.norm_const * (-self.envelope_rate * tau).exp() * (self.omega * tau).sin()
    }

    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&t| self.phi(t)).collect()
    }
}

pub fn sls_eigen_reference(p: &SlsParams, k: usize) -> Result<ReferenceEigenpair> {
    p.validate()?;
    if k == 0 {
        return Err(Error::domain("eigen index starts at 1"));
    }
    let (l0, l1) = (p.weight_rate, p.rate);
    if l0 >= l1 {
        return Err(Error::domain(format!("needs weight rate {l0} below relaxation rate {l1}")));
    }
    let omega = k as f64 * std::f64::consts::PI / p.horizon;
    let ratio = p.c1 / p.total();
    let mu = ratio * ratio * 4.0 * l1 * l1 / ((l1 - l0).powi(2) + omega * omega);
    let norm_const = (2.0 * omega * omega / (l1 * (l1 * l1 + 4.0 * omega * omega))).powf(-0.5);
    Ok(ReferenceEigenpair {
        k,
        omega,
        mu,
        norm_const,
        envelope_rate: 0.5 * (l1 - l0),
    })
}

/// Eigenpair of `S*S` from the shooting oracle; `phi` is sampled at `nodes`
/// and normalized in `L²((0, T), w dτ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEigenpair {
    pub k: usize,
    pub omega: f64,
    pub mu: f64,
    pub nodes: Vec<f64>,
    pub phi: Vec<f64>,
}

struct Shooter {
    l1: f64,
    beta: f64,
    a: f64,
    c2: f64,
    horizon: f64,
}

impl Shooter {
    fn steps(&self, omega: f64) -> usize {
        let scale = self.horizon * (omega + self.l1 + self.beta.abs() + 1.0);
        2000 + 400 * scale.ceil() as usize
    }

    /// Integrates from `(u, v) = (1, 0)` at `τ = 0`; returns `u(T)` and,
    /// when asked, every `v` on the RK4 grid.
    fn shoot(&self, omega: f64, steps: usize, record: bool) -> (f64, Vec<f64>) {
        let inv_mu = (omega * omega + self.c2) / (self.a * self.a);
        let (l1, beta, a) = (self.l1, self.beta, self.a);
        let f = |u: f64, v: f64| (l1 * u - a * inv_mu * v, a * u - beta * v);
        let h = self.horizon / steps as f64;
        let (mut u, mut v) = (1.0, 0.0);
        let mut path = Vec::new();
        if record {
            path.reserve(steps + 1);
            path.push(v);
        }
        for _ in 0..steps {
            let k1 = f(u, v);
            let k2 = f(u + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
            let k3 = f(u + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
            let k4 = f(u + h * k3.0, v + h * k3.1);
            u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            if record {
                path.push(v);
            }
        }
        (u, path)
    }

    fn residual(&self, omega: f64) -> f64 {
        self.shoot(omega, self.steps(omega), false).0
    }
}

/// Bisection on a sign change of `f` in `[lo, hi]` down to `|hi − lo| ≤ 4ε·hi`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The `count` largest eigenvalues of `S*S` with eigenfunctions sampled on
/// `samples` equal intervals of `[0, T]`.
pub fn sls_eigen_ode_oracle(p: &SlsParams, count: usize, samples: usize) -> Result<Vec<OracleEigenpair>> {
    p.validate()?;
    let (l0, l1, t) = (p.weight_rate, p.rate, p.horizon);
    if l0 >= 2.0 * l1 {
        return Err(Error::domain(format!("needs weight rate {l0} below twice the relaxation rate {l1}")));
    }
    let samples = samples.max(1);
    let nodes: Vec<f64> = (0..=samples).map(|i| t * i as f64 / samples as f64).collect();
    let pi = std::f64::consts::PI;

    if p.c1 == 0.0 {
        // No coupling: S = 0, any orthonormal system; report the sine basis.
        let norm = (2.0 / t).sqrt();
        return Ok((1..=count)
            .map(|k| {
                let omega = k as f64 * pi / t;
                OracleEigenpair {
                    k,
                    omega,
                    mu: 0.0,
                    phi: nodes.iter().map(|&x| norm * (0.5 * l0 * x).exp() * (omega * x).sin()).collect(),
                    nodes: nodes.clone(),
                }
            })
            .collect());
    }

    let shooter = Shooter {
        l1,
        beta: l1 - l0,
        a: p.coupling(),
        c2: (l1 - 0.5 * l0).powi(2),
        horizon: t,
    };

    // Scan for sign changes of u(T; ω); consecutive roots are about π/T apart.
    let step = pi / (16.0 * t);
    let mut roots = Vec::with_capacity(count);
    let mut lo = 1e-9 * step;
    let mut flo = shooter.residual(lo);
    let limit = (count as f64 + 2.0) * pi / t;
    while roots.len() < count {
        let hi = lo + step;
        if hi > limit {
            return Err(Error::RootFinding(format!(
                "found {} of {count} frequencies below {limit:.6e}; last residual {flo:.3e} at {lo:.6e}",
                roots.len()
            )));
        }
        let fhi = shooter.residual(hi);
        if fhi == 0.0 || (fhi < 0.0) != (flo < 0.0) {
            roots.push(bisect(|w| shooter.residual(w), lo, hi));
        }
        lo = hi;
        flo = fhi;
    }

    Ok(roots
        .into_iter()
        .enumerate()
        .map(|(i, omega)| {
            let fine = shooter.steps(omega).div_ceil(samples) * samples;
            let (_, v) = shooter.shoot(omega, fine, true);
            // Weighted norm by composite Simpson on the RK4 grid (fine is even
            // whenever samples is; otherwise fall back to trapezoid).
            let h = t / fine as f64;
            let g: Vec<f64> = v.iter().enumerate().map(|(j, x)| x * x * (-l0 * h * j as f64).exp()).collect();
            let norm2 = if fine % 2 == 0 {
                let odd: f64 = g.iter().skip(1).step_by(2).sum();
                let even: f64 = g.iter().skip(2).step_by(2).take(fine / 2 - 1).sum();
                h / 3.0 * (g[0] + g[fine] + 4.0 * odd + 2.0 * even)
            } else {
                h * (g.iter().sum::<f64>() - 0.5 * (g[0] + g[fine]))
            };
            let scale = 1.0 / norm2.sqrt();
            let sub = fine / samples;
            OracleEigenpair {
                k: i + 1,
                omega,
                mu: shooter.a * shooter.a / (omega * omega + shooter.c2),
                phi: (0..=samples).map(|j| v[j * sub] * scale).collect(),
                nodes: nodes.clone(),
            }
        })
        .collect())
}
