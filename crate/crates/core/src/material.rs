//! Relaxation kernels, elastic moduli and fading-memory weights.
//!
//! Scalar kernels are sums (or integrals) of decaying exponentials,
//!
//! ```text
//! K(τ) = Σᵢ Cᵢ λᵢ e^{−λᵢ τ},   τ ≥ 0,      K(τ) = 0 for τ < 0,
//! ```
//!
//! either given directly as Prony modes `(Cᵢ, λᵢ)` or generated by a
//! [`RelaxationMeasure`]. Isotropic laws pair a bulk kernel `L` with a shear
//! kernel `M` and the corresponding moduli `(B, G)`; every isotropic quantity
//! is evaluated modally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::RelaxationMeasure;

/// One Maxwell unit: spring stiffness `C` in series with a dashpot, relaxing
/// at rate `λ = C/η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PronyMode {
    stiffness: f64,
    rate: f64,
}

impl PronyMode {
    pub fn new(stiffness: f64, rate: f64) -> Result<Self> {
        if !(stiffness.is_finite() && stiffness > 0.0) {
            return Err(Error::domain(format!(
                "Prony stiffness must be positive and finite, got {stiffness}"
            )));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::domain(format!(
                "Prony rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self { stiffness, rate })
    }

    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Dashpot viscosity `η = C/λ`.
    pub fn viscosity(&self) -> f64 {
        self.stiffness / self.rate
    }

    /// Coefficient of `e^{−λτ}` in the kernel, `Cλ`.
    pub fn amplitude(&self) -> f64 {
        self.stiffness * self.rate
    }
}

/// Scalar relaxation kernel, backed either by Prony modes or by a relaxation
/// measure. Distributional kernels (instantaneous viscosity) are not
/// representable.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarKernel {
    Prony(Vec<PronyMode>),
    Measure(RelaxationMeasure),
}

impl ScalarKernel {
    pub fn prony(modes: Vec<PronyMode>) -> Result<Self> {
        Ok(ScalarKernel::Prony(modes))
    }

    /// Convenience constructor from `(C, λ)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let modes = pairs
            .iter()
            .map(|&(c, l)| PronyMode::new(c, l))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScalarKernel::Prony(modes))
    }

    /// Kernel of a standard linear solid branch: one mode.
    pub fn single(stiffness: f64, rate: f64) -> Result<Self> {
        Ok(ScalarKernel::Prony(vec![PronyMode::new(stiffness, rate)?]))
    }

    pub fn zero() -> Self {
        ScalarKernel::Prony(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ScalarKernel::Prony(m) => m.is_empty(),
            ScalarKernel::Measure(nu) => nu.is_null(),
        }
    }

    /// `K(τ)`; exactly zero for `τ < 0`.
    pub fn eval(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        match self {
            ScalarKernel::Prony(modes) => modes
                .iter()
                .map(|m| m.amplitude() * (-m.rate * tau).exp())
                .sum(),
            ScalarKernel::Measure(nu) => nu.kernel_value(tau),
        }
    }

    /// `Σ a(λ) g(λ)` over the spectral representation `K = Σ a(λ) e^{−λτ}`,
    /// with continuous parts integrated by Gauss-Legendre panels.
    pub(crate) fn spectral_sum<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        match self {
            ScalarKernel::Prony(modes) => modes.iter().map(|m| m.amplitude() * g(m.rate)).sum(),
            ScalarKernel::Measure(nu) => nu.spectral_sum(&g, 1),
        }
    }

    /// Double spectral sum `Σᵢⱼ aᵢ aⱼ g(λᵢ, λⱼ)`.
    pub(crate) fn spectral_sum2<G: Fn(f64, f64) -> f64>(&self, g: G) -> f64 {
        self.spectral_sum(|a| self.spectral_sum(|b| g(a, b)))
    }

    /// Total relaxing stiffness `∫₀^∞ K(τ) dτ = Σ Cᵢ`.
    pub fn stiffness(&self) -> f64 {
        self.spectral_sum(|l| 1.0 / l)
    }

    /// Smallest decay rate present (the infimum of the spectrum).
    pub fn slowest_rate(&self) -> Option<f64> {
        match self {
            ScalarKernel::Prony(modes) => modes.iter().map(|m| m.rate).min_by(f64::total_cmp),
            ScalarKernel::Measure(nu) => nu.min_rate(),
        }
    }

    pub fn fastest_rate(&self) -> Option<f64> {
        match self {
            ScalarKernel::Prony(modes) => modes.iter().map(|m| m.rate).max_by(f64::total_cmp),
            ScalarKernel::Measure(nu) => nu.max_rate(),
        }
    }

    /// `K(τ) e^{shift·τ}` without forming the (possibly huge) exponential factor.
    pub(crate) fn eval_shifted(&self, tau: f64, shift: f64) -> f64 {
        if tau < 0.0 {
            return 0.0;
        }
        match self {
            ScalarKernel::Prony(modes) => modes
                .iter()
                .map(|m| m.amplitude() * (-(m.rate - shift) * tau).exp())
                .sum(),
            ScalarKernel::Measure(nu) => nu.kernel_value_shifted(tau, shift),
        }
    }

    /// Fails unless `∫ K(τ) e^{shift·τ} dτ` is finite, naming the first
    /// offending mode.
    pub(crate) fn check_rates_above(&self, shift: f64, label: &str) -> Result<()> {
        match self {
            ScalarKernel::Prony(modes) => {
                for (i, m) in modes.iter().enumerate() {
                    if m.rate <= shift {
                        return Err(Error::Divergence(format!(
                            "{label} mode {i} has rate {} <= {shift}",
                            m.rate
                        )));
                    }
                }
                Ok(())
            }
            ScalarKernel::Measure(nu) => nu.check_rates_above(shift, label),
        }
    }

    /// `∫ₓ^∞ K(τ) e^{shift·τ} dτ`, requires every rate above `shift`.
    pub(crate) fn shifted_tail(&self, shift: f64, x: f64) -> f64 {
        self.spectral_sum(|l| (-(l - shift) * x).exp() / (l - shift))
    }

    /// Prony modes representing the kernel: exact for Prony and atomic
    /// measures, Gauss-Legendre atomization of continuous spectral densities.
    pub fn prony_modes(&self) -> Vec<PronyMode> {
        match self {
            ScalarKernel::Prony(m) => m.clone(),
            ScalarKernel::Measure(nu) => nu.prony_modes(),
        }
    }

    /// The kernel multiplied by a positive factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::domain(format!("scale factor must be positive, got {factor}")));
        }
        Ok(match self {
            ScalarKernel::Prony(modes) => ScalarKernel::Prony(
                modes
                    .iter()
                    .map(|m| PronyMode::new(m.stiffness * factor, m.rate))
                    .collect::<Result<Vec<_>>>()?,
            ),
            ScalarKernel::Measure(nu) => ScalarKernel::Measure(nu.scaled(factor)?),
        })
    }
}

/// Bulk and shear relaxation kernels of an isotropic law.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicKernel {
    pub bulk: ScalarKernel,
    pub shear: ScalarKernel,
    /// When set, the bulk part is ignored everywhere.
    pub incompressible: bool,
}

/// Instantaneous and equilibrium values of one modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusPair {
    pub equilibrium: f64,
    pub instantaneous: f64,
}

impl ModulusPair {
    fn for_kernel(equilibrium: f64, kernel: &ScalarKernel, name: &str) -> Result<Self> {
        if !(equilibrium.is_finite() && equilibrium > 0.0) {
            return Err(Error::config(format!(
                "{name} equilibrium modulus must be positive, got {equilibrium}"
            )));
        }
        Ok(Self {
            equilibrium,
            instantaneous: equilibrium + kernel.stiffness(),
        })
    }

    fn check(&self, kernel: &ScalarKernel, name: &str) -> Result<()> {
        if !(self.equilibrium > 0.0) {
            return Err(Error::config(format!("{name}: equilibrium modulus must be positive")));
        }
        let relaxing = kernel.stiffness();
        let mismatch = (self.instantaneous - self.equilibrium - relaxing).abs();
        if mismatch > 1e-10 * self.instantaneous.abs().max(1.0) {
            return Err(Error::config(format!(
                "{name}: instantaneous modulus {} != equilibrium {} + kernel stiffness {}",
                self.instantaneous, self.equilibrium, relaxing
            )));
        }
        Ok(())
    }
}

/// Elastic moduli: `C0`/`ℂ` for scalar laws, `(B0, B)` and `(G0, G)` for
/// isotropic ones. A missing bulk pair means incompressible (`B → ∞`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ElasticModuli {
    Scalar(ModulusPair),
    Isotropic {
        bulk: Option<ModulusPair>,
        shear: ModulusPair,
    },
}

/// Exponential fading-memory weight `w(τ) = e^{−λ₀τ}`; `λ₀ = 0` is the
/// constant weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    rate: f64,
}

impl Weight {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::domain(format!(
                "weight decay rate must be finite and non-negative, got {rate}"
            )));
        }
        Ok(Self { rate })
    }

    pub fn constant() -> Self {
        Self { rate: 0.0 }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn eval(&self, tau: f64) -> f64 {
        (-self.rate * tau).exp()
    }

    pub fn inverse(&self, tau: f64) -> f64 {
        (self.rate * tau).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexModulus {
    pub omega: f64,
    pub storage: f64,
    pub loss: f64,
}

pub fn eval_kernel(k: &ScalarKernel, tau: f64) -> f64 {
    k.eval(tau)
}

/// `E(t) = C0 + ∫ₜ^∞ K`, the stress response to a unit step strain.
pub fn relaxation_modulus(k: &ScalarKernel, c0: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("relaxation modulus needs t >= 0, got {t}")));
    }
    if t.is_infinite() {
        return Ok(c0);
    }
    Ok(c0 + k.spectral_sum(|l| (-l * t).exp() / l))
}

/// Storage and loss moduli at angular frequency `ω`.
pub fn complex_modulus(k: &ScalarKernel, c0: f64, omega: f64) -> Result<ComplexModulus> {
    if !(omega >= 0.0) {
        return Err(Error::domain(format!("frequency must be non-negative, got {omega}")));
    }
    if omega.is_infinite() {
        return Ok(ComplexModulus {
            omega,
            storage: c0 + k.stiffness(),
            loss: 0.0,
        });
    }
    let w2 = omega * omega;
    let storage = c0 + k.spectral_sum(|l| w2 / (l * (l * l + w2)));
    let loss = k.spectral_sum(|l| omega / (l * l + w2));
    Ok(ComplexModulus {
        omega,
        storage,
        loss,
    })
}

/// Operator norm of the isotropic kernel with respect to the elastic
/// metric: `max{L(τ)/B, M(τ)/G}`, or `M(τ)/G` when incompressible.
pub fn kernel_operator_norm(k: &IsotropicKernel, m: &ElasticModuli, tau: f64) -> Result<f64> {
    check_isotropic(k, m)?;
    let ElasticModuli::Isotropic { bulk, shear } = m else {
        unreachable!("checked above")
    };
    Ok(isotropic_norm(k, bulk.as_ref(), shear, tau))
}

fn isotropic_norm(k: &IsotropicKernel, bulk: Option<&ModulusPair>, shear: &ModulusPair, tau: f64) -> f64 {
    let dev = k.shear.eval(tau) / shear.instantaneous;
    match (k.incompressible, bulk) {
        (false, Some(b)) => dev.max(k.bulk.eval(tau) / b.instantaneous),
        _ => dev,
    }
}

fn check_isotropic(k: &IsotropicKernel, m: &ElasticModuli) -> Result<()> {
    match m {
        ElasticModuli::Scalar(_) => Err(Error::config("isotropic kernel paired with scalar moduli")),
        ElasticModuli::Isotropic { bulk, shear } => {
            shear.check(&k.shear, "shear")?;
            match (k.incompressible, bulk) {
                (true, _) => Ok(()),
                (false, Some(b)) => b.check(&k.bulk, "bulk"),
                (false, None) => Err(Error::config(
                    "compressible kernel needs bulk moduli (omit them only when incompressible)",
                )),
            }
        }
    }
}

/// Role of a decoupled scalar law within the isotropic tensor law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Scalar,
    Volumetric,
    Deviatoric,
}

/// A scalar hereditary law extracted from a (possibly tensorial) material.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalLaw {
    pub kind: ModeKind,
    pub kernel: ScalarKernel,
    pub moduli: ModulusPair,
    /// Number of strain modes sharing this law (1 volumetric, 5 deviatoric in 3D).
    pub multiplicity: usize,
}

impl ModalLaw {
    pub fn total(&self) -> f64 {
        self.moduli.instantaneous
    }
}

/// Splits an isotropic law into its volumetric and deviatoric scalar laws.
pub fn mode_decouple(k: &IsotropicKernel, m: &ElasticModuli) -> Result<Vec<ModalLaw>> {
    check_isotropic(k, m)?;
    let ElasticModuli::Isotropic { bulk, shear } = m else {
        unreachable!("checked above")
    };
    let mut laws = Vec::with_capacity(2);
    if !k.incompressible {
        if let Some(b) = bulk {
            laws.push(ModalLaw {
                kind: ModeKind::Volumetric,
                kernel: k.bulk.clone(),
                moduli: *b,
                multiplicity: 1,
            });
        }
    }
    laws.push(ModalLaw {
        kind: ModeKind::Deviatoric,
        kernel: k.shear.clone(),
        moduli: *shear,
        multiplicity: 5,
    });
    Ok(laws)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawKernel {
    Scalar(ScalarKernel),
    Isotropic(IsotropicKernel),
}

/// Kernel and moduli of one material, checked for consistency.
#[derive(Debug, Clone, PartialEq)]
pub struct HereditaryLaw {
    kernel: LawKernel,
    moduli: ElasticModuli,
}

impl HereditaryLaw {
    pub fn new(kernel: LawKernel, moduli: ElasticModuli) -> Result<Self> {
        match (&kernel, &moduli) {
            (LawKernel::Scalar(k), ElasticModuli::Scalar(p)) => p.check(k, "scalar")?,
            (LawKernel::Isotropic(k), m) => check_isotropic(k, m)?,
            (LawKernel::Scalar(_), _) => {
                return Err(Error::config("scalar kernel paired with isotropic moduli"))
            }
        }
        Ok(Self { kernel, moduli })
    }

    /// Scalar law with equilibrium modulus `C0`; `ℂ = C0 + Σ Cᵢ`.
    pub fn scalar(c0: f64, kernel: ScalarKernel) -> Result<Self> {
        let pair = ModulusPair::for_kernel(c0, &kernel, "scalar")?;
        Ok(Self {
            kernel: LawKernel::Scalar(kernel),
            moduli: ElasticModuli::Scalar(pair),
        })
    }

    /// Isotropic law from `(B0, L)` and `(G0, M)`; `bulk = None` is the
    /// incompressible limit.
    pub fn isotropic(bulk: Option<(f64, ScalarKernel)>, shear: (f64, ScalarKernel)) -> Result<Self> {
        let shear_pair = ModulusPair::for_kernel(shear.0, &shear.1, "shear")?;
        let (bulk_kernel, bulk_pair, incompressible) = match bulk {
            Some((b0, l)) => {
                let p = ModulusPair::for_kernel(b0, &l, "bulk")?;
                (l, Some(p), false)
            }
            None => (ScalarKernel::zero(), None, true),
        };
        Ok(Self {
            kernel: LawKernel::Isotropic(IsotropicKernel {
                bulk: bulk_kernel,
                shear: shear.1,
                incompressible,
            }),
            moduli: ElasticModuli::Isotropic {
                bulk: bulk_pair,
                shear: shear_pair,
            },
        })
    }

    pub fn kernel(&self) -> &LawKernel {
        &self.kernel
    }

    pub fn moduli(&self) -> &ElasticModuli {
        &self.moduli
    }

    pub fn is_incompressible(&self) -> bool {
        matches!(&self.kernel, LawKernel::Isotropic(k) if k.incompressible)
    }

    /// `‖K(τ)‖` in the elastic metric.
    pub fn operator_norm(&self, tau: f64) -> f64 {
        match (&self.kernel, &self.moduli) {
            (LawKernel::Scalar(k), ElasticModuli::Scalar(p)) => k.eval(tau) / p.instantaneous,
            (LawKernel::Isotropic(k), ElasticModuli::Isotropic { bulk, shear }) => {
                isotropic_norm(k, bulk.as_ref(), shear, tau)
            }
            _ => unreachable!("validated on construction"),
        }
    }

    /// Scalar laws whose kernels enter the operator norm.
    pub fn modal_laws(&self) -> Vec<ModalLaw> {
        match (&self.kernel, &self.moduli) {
            (LawKernel::Scalar(k), ElasticModuli::Scalar(p)) => vec![ModalLaw {
                kind: ModeKind::Scalar,
                kernel: k.clone(),
                moduli: *p,
                multiplicity: 1,
            }],
            (LawKernel::Isotropic(k), m) => {
                mode_decouple(k, m).expect("validated on construction")
            }
            _ => unreachable!("validated on construction"),
        }
    }
}

/// One Prony mode in a material card.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCard {
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda: f64,
}

/// Equilibrium modulus plus Prony modes of one isotropic part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartCard {
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(default)]
    pub modes: Vec<ModeCard>,
}

/// JSON material card.
///
/// Scalar form: `{"C0": 1.0, "modes": [{"C": 1.0, "lambda": 2.0}]}`.
/// Isotropic form: `{"bulk": {"C0": .., "modes": [..]}, "shear": {..},
/// "incompressible": false}`; `bulk` may be omitted when incompressible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialCard {
    #[serde(rename = "C0", default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ModeCard>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bulk: Option<PartCard>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shear: Option<PartCard>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incompressible: Option<bool>,
}

fn modes_from_cards(cards: &[ModeCard], what: &str, problems: &mut Vec<String>) -> Vec<PronyMode> {
    cards
        .iter()
        .enumerate()
        .filter_map(|(i, m)| match PronyMode::new(m.c, m.lambda) {
            Ok(mode) => Some(mode),
            Err(e) => {
                problems.push(format!("{what} mode {i}: {e}"));
                None
            }
        })
        .collect()
}

impl MaterialCard {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Validates the card and builds the law. All problems are reported together.
    pub fn to_law(&self) -> Result<HereditaryLaw> {
        let mut problems = Vec::new();
        let scalar = self.c0.is_some() || self.modes.is_some();
        let isotropic = self.bulk.is_some() || self.shear.is_some() || self.incompressible.is_some();
        if scalar && isotropic {
            problems.push("card mixes scalar (C0/modes) and isotropic (bulk/shear) fields".to_string());
        }
        if !scalar && !isotropic {
            problems.push("card defines neither C0/modes nor bulk/shear".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::config(problems.join("; ")));
        }

        if scalar {
            let c0 = self.c0.unwrap_or(f64::NAN);
            if !(c0.is_finite() && c0 > 0.0) {
                problems.push(format!("C0 must be positive, got {c0}"));
            }
            let modes = modes_from_cards(self.modes.as_deref().unwrap_or(&[]), "scalar", &mut problems);
            if !problems.is_empty() {
                return Err(Error::config(problems.join("; ")));
            }
            return HereditaryLaw::scalar(c0, ScalarKernel::Prony(modes));
        }

        let incompressible = self.incompressible.unwrap_or(false);
        let shear = match &self.shear {
            Some(p) => {
                if !(p.c0.is_finite() && p.c0 > 0.0) {
                    problems.push(format!("shear C0 must be positive, got {}", p.c0));
                }
                Some((p.c0, modes_from_cards(&p.modes, "shear", &mut problems)))
            }
            None => {
                problems.push("isotropic card needs a shear part".to_string());
                None
            }
        };
        let bulk = match (&self.bulk, incompressible) {
            (_, true) => None,
            (Some(p), false) => {
                if !(p.c0.is_finite() && p.c0 > 0.0) {
                    problems.push(format!("bulk C0 must be positive, got {}", p.c0));
                }
                Some((p.c0, modes_from_cards(&p.modes, "bulk", &mut problems)))
            }
            (None, false) => {
                problems.push("compressible isotropic card needs a bulk part".to_string());
                None
            }
        };
        if !problems.is_empty() {
            return Err(Error::config(problems.join("; ")));
        }
        let (g0, m) = shear.expect("checked");
        HereditaryLaw::isotropic(
            bulk.map(|(b0, l)| (b0, ScalarKernel::Prony(l))),
            (g0, ScalarKernel::Prony(m)),
        )
    }

    /// The scalar card of a Prony law.
    pub fn scalar(c0: f64, modes: &[(f64, f64)]) -> Self {
        Self {
            c0: Some(c0),
            modes: Some(modes.iter().map(|&(c, lambda)| ModeCard { c, lambda }).collect()),
            ..Default::default()
        }
    }
}
