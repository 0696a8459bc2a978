//! Renormalized Laguerre functions `φₖ(τ) = √λ₀ L_{k−1}(λ₀τ)`, orthonormal in
//! `L²((0, ∞), e^{−λ₀τ} dτ)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::{GaussLaguerre, GaussLegendre};

use super::History;

#[derive(Debug, Clone)]
pub struct LaguerreBasis {
    rate: f64,
    count: usize,
    rule: GaussLaguerre,
}

impl LaguerreBasis {
    pub fn new(rate: f64, count: usize) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::domain(format!("Laguerre basis needs a positive weight rate, got {rate}")));
        }
        if count == 0 {
            return Err(Error::domain("Laguerre basis needs at least one function"));
        }
        Ok(Self {
            rate,
            count,
            rule: GaussLaguerre::new((2 * count + 8).max(128)),
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `(L₀(x), …, L_{K−1}(x))` by the three-term recurrence.
    fn polynomials(&self, x: f64) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.count);
        p.push(1.0);
        if self.count > 1 {
            p.push(1.0 - x);
        }
        for k in 1..self.count.saturating_sub(1) {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0 - x) * p[k] - kf * p[k - 1]) / (kf + 1.0);
            p.push(next);
        }
        p
    }

    /// All basis functions at `τ`.
    pub fn eval_all(&self, tau: f64) -> Vec<f64> {
        let s = self.rate.sqrt();
        self.polynomials(self.rate * tau).into_iter().map(|v| s * v).collect()
    }

    /// `φₖ(τ)`, `k` counted from 1.
    pub fn eval(&self, k: usize, tau: f64) -> f64 {
        assert!(k >= 1 && k <= self.count, "basis index {k} out of 1..={}", self.count);
        self.eval_all(tau)[k - 1]
    }

    /// Weighted Gram matrix by Gauss-Laguerre quadrature.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.count, self.count);
        for (&x, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let p = self.polynomials(x);
            for i in 0..self.count {
                for j in 0..self.count {
                    g[(i, j)] += w * p[i] * p[j];
                }
            }
        }
        g
    }

    /// History variables `qₖ = ∫ ε(τ) φₖ(τ) e^{−λ₀τ} dτ`.
    pub(crate) fn project(&self, history: History<'_>) -> Result<Vec<f64>> {
        let mut q = vec![0.0; self.count];
        match history {
            History::Function(f) => {
                let s = self.rate.sqrt();
                for (&x, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                    let fx = f(x / self.rate);
                    for (qk, p) in q.iter_mut().zip(self.polynomials(x)) {
                        *qk += w * fx * p / s;
                    }
                }
            }
            History::Samples { nodes, values } => {
                // Piecewise-linear data: Gauss-Legendre on each sample interval.
                let rule = GaussLegendre::new(8);
                for (t, v) in nodes.windows(2).zip(values.windows(2)) {
                    for (tau, w) in rule.mapped(t[0], t[1]) {
                        let e = v[0] + (tau - t[0]) / (t[1] - t[0]) * (v[1] - v[0]);
                        let ww = w * e * (-self.rate * tau).exp();
                        for (qk, p) in q.iter_mut().zip(self.eval_all(tau)) {
                            *qk += ww * p;
                        }
                    }
                }
            }
        }
        Ok(q)
    }

    /// `Σ qₖ φₖ(τ)`.
    pub fn reconstruct(&self, coeffs: &[f64], tau: f64) -> f64 {
        coeffs.iter().zip(self.eval_all(tau)).map(|(q, p)| q * p).sum()
    }

    /// `‖f − Σ qₖ φₖ‖_w` by Gauss-Laguerre quadrature.
    pub fn reconstruction_error(&self, f: &dyn Fn(f64) -> f64, coeffs: &[f64]) -> f64 {
        self.rule
            .integrate(|x| {
                let tau = x / self.rate;
                (f(tau) - self.reconstruct(coeffs, tau)).powi(2) / self.rate
            })
            .sqrt()
    }
}
