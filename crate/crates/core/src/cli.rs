//! The `heredlab` command line front end.
//!
//! Every command validates its whole configuration first and reports all
//! problems at once. Results are written as canonical JSON (`--json`) or as
//! an aligned text table; bulky data goes to CSV files.
//!
//! Exit codes: 0 success, 2 invalid input, 3 divergence or failed
//! contractivity, 4 non-convergence.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::history::sls::{sls_eigen_ode_oracle, sls_eigen_reference, SlsParams};
use crate::history::{assemble_s, singular_system, truncate, HistoryGrid, LaguerreBasis};
use crate::material::{
    complex_modulus, relaxation_modulus, HereditaryLaw, MaterialCard, ModalLaw, ModeKind, ScalarKernel, Weight,
};
use crate::output::{render_json, render_text, write_columns};
use crate::spectra::{
    class_membership, class_nwidth, kernel_distance, kernel_from_measure, prony_from_density, RelaxationMeasure,
};
use crate::volterra::{
    solve_direct, solve_picard, solve_report, Evolution, EvolutionKind, PicardOptions, TimeGrid,
};
use crate::wellposed::{certify, max_decay_rate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// Constant stress `--stress` on `[0, T]`.
    Creep,
    /// Stress history read from `--input`.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Direct,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    Svd,
    Laguerre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureChoice {
    Trapezoid,
    Gauss,
}

/// Which modal law of an isotropic card to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Volumetric,
    Deviatoric,
}

#[derive(Debug, Parser)]
#[command(name = "heredlab", version, about = "Linear viscoelastic hereditary operators")]
pub struct Cli {
    /// Machine-readable JSON instead of a text table.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Contractivity and Hilbert-Schmidt certificate.
    Certify {
        #[arg(long)]
        material: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        lambda0: f64,
        /// Exit with status 3 unless gamma < 1.
        #[arg(long)]
        require_contractive: bool,
    },
    /// Strain response to a prescribed stress history.
    Solve {
        #[arg(long)]
        material: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "custom")]
        mode: SolveMode,
        #[arg(long, value_enum, default_value = "direct")]
        method: SolveMethod,
        #[arg(long, default_value_t = 0.0)]
        lambda0: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Creep stress level.
        #[arg(long, default_value_t = 1.0)]
        stress: f64,
        /// Creep horizon.
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        /// Creep time steps.
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, value_enum)]
        part: Option<Part>,
        /// CSV file for the computed strain.
        #[arg(long)]
        strain_out: Option<PathBuf>,
    },
    /// Singular system and optimal rank-N reduction of the history operator.
    Reduce {
        #[arg(long)]
        material: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        lambda0: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        /// Trapezoid intervals, or total Gauss nodes.
        #[arg(long, default_value_t = 400)]
        grid: usize,
        #[arg(long, default_value_t = 5)]
        rank: usize,
        #[arg(long, value_enum, default_value = "svd")]
        basis: BasisChoice,
        #[arg(long, value_enum, default_value = "trapezoid")]
        quadrature: QuadratureChoice,
        #[arg(long, default_value_t = 16)]
        panel_order: usize,
        #[arg(long, value_enum)]
        part: Option<Part>,
        /// Directory for the CSV tables.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Relaxation-measure tools.
    Spectrum {
        #[arg(long)]
        measure: PathBuf,
        /// Atomize the density with this many Gauss nodes.
        #[arg(long)]
        to_prony: Option<usize>,
        /// Kernel distance to another measure.
        #[arg(long)]
        distance: Option<PathBuf>,
        /// Membership in the class bounded by this scalar material card.
        #[arg(long)]
        class_check: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        rank: usize,
        /// Instantaneous modulus used to normalize distances.
        #[arg(long)]
        modulus: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        lambda0: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 400)]
        grid: usize,
    },
    /// Storage, loss and relaxation moduli.
    Modulus {
        #[arg(long)]
        material: PathBuf,
        #[arg(long)]
        omega: f64,
        /// Also report the relaxation modulus at this time.
        #[arg(long = "t")]
        time: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumAction {
    ToProny { atoms: usize },
    Distance { other: PathBuf },
    ClassCheck { bounding: PathBuf, rank: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    Certify {
        material: PathBuf,
        lambda0: f64,
        require_contractive: bool,
    },
    Solve {
        material: PathBuf,
        input: Option<PathBuf>,
        mode: SolveMode,
        method: SolveMethod,
        lambda0: f64,
        tol: f64,
        max_iter: usize,
        stress: f64,
        horizon: f64,
        steps: usize,
        part: Option<Part>,
        strain_out: Option<PathBuf>,
    },
    Reduce {
        material: PathBuf,
        lambda0: f64,
        horizon: f64,
        grid: usize,
        rank: usize,
        basis: BasisChoice,
        quadrature: QuadratureChoice,
        panel_order: usize,
        part: Option<Part>,
        out_dir: Option<PathBuf>,
    },
    Spectrum {
        measure: PathBuf,
        action: SpectrumAction,
        modulus: Option<f64>,
        lambda0: f64,
        horizon: f64,
        grid: usize,
    },
    Modulus {
        material: PathBuf,
        omega: f64,
        time: Option<f64>,
    },
}

/// Validated configuration of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub json: bool,
    pub output: Option<PathBuf>,
}

struct Problems(Vec<String>);

impl Problems {
    fn file(&mut self, what: &str, p: &Path) {
        if !p.is_file() {
            self.0.push(format!("{what} file {} does not exist", p.display()));
        }
    }

    fn rate(&mut self, what: &str, x: f64) {
        if !(x.is_finite() && x >= 0.0) {
            self.0.push(format!("{what} must be finite and non-negative, got {x}"));
        }
    }

    fn positive(&mut self, what: &str, x: f64) {
        if !(x.is_finite() && x > 0.0) {
            self.0.push(format!("{what} must be positive, got {x}"));
        }
    }

    fn count(&mut self, what: &str, n: usize) {
        if n == 0 {
            self.0.push(format!("{what} must be at least 1"));
        }
    }
}

impl RunConfig {
    /// Checks the parsed arguments, collecting every problem.
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let mut p = Problems(Vec::new());
        let command = match cli.command {
            CliCommand::Certify {
                material,
                lambda0,
                require_contractive,
            } => {
                p.file("material", &material);
                p.rate("--lambda0", lambda0);
                Command::Certify {
                    material,
                    lambda0,
                    require_contractive,
                }
            }
            CliCommand::Solve {
                material,
                input,
                mode,
                method,
                lambda0,
                tol,
                max_iter,
                stress,
                horizon,
                steps,
                part,
                strain_out,
            } => {
                p.file("material", &material);
                p.rate("--lambda0", lambda0);
                p.positive("--tol", tol);
                p.count("--max-iter", max_iter);
                match (mode, &input) {
                    (SolveMode::Custom, None) => p.0.push("--mode custom needs --input".into()),
                    (SolveMode::Custom, Some(i)) => p.file("input", i),
                    (SolveMode::Creep, _) => {
                        p.positive("--T", horizon);
                        p.count("--steps", steps);
                        if !stress.is_finite() {
                            p.0.push(format!("--stress must be finite, got {stress}"));
                        }
                    }
                }
                Command::Solve {
                    material,
                    input,
                    mode,
                    method,
                    lambda0,
                    tol,
                    max_iter,
                    stress,
                    horizon,
                    steps,
                    part,
                    strain_out,
                }
            }
            CliCommand::Reduce {
                material,
                lambda0,
                horizon,
                grid,
                rank,
                basis,
                quadrature,
                panel_order,
                part,
                out_dir,
            } => {
                p.file("material", &material);
                p.rate("--lambda0", lambda0);
                p.positive("--T", horizon);
                p.count("--grid", grid);
                p.count("--panel-order", panel_order);
                if rank > grid {
                    p.0.push(format!("--rank {rank} exceeds --grid {grid}"));
                }
                if basis == BasisChoice::Laguerre && !(lambda0 > 0.0) {
                    p.0.push("--basis laguerre needs --lambda0 > 0".into());
                }
                Command::Reduce {
                    material,
                    lambda0,
                    horizon,
                    grid,
                    rank,
                    basis,
                    quadrature,
                    panel_order,
                    part,
                    out_dir,
                }
            }
            CliCommand::Spectrum {
                measure,
                to_prony,
                distance,
                class_check,
                rank,
                modulus,
                lambda0,
                horizon,
                grid,
            } => {
                p.file("measure", &measure);
                p.rate("--lambda0", lambda0);
                let chosen = [to_prony.is_some(), distance.is_some(), class_check.is_some()]
                    .iter()
                    .filter(|&&b| b)
                    .count();
                if chosen != 1 {
                    p.0.push("choose exactly one of --to-prony, --distance, --class-check".into());
                }
                if let Some(m) = modulus {
                    p.positive("--modulus", m);
                }
                let action = if let Some(n) = to_prony {
                    p.count("--to-prony", n);
                    if modulus.is_none() {
                        p.0.push("--to-prony needs --modulus".into());
                    }
                    SpectrumAction::ToProny { atoms: n }
                } else if let Some(other) = distance {
                    p.file("distance", &other);
                    if modulus.is_none() {
                        p.0.push("--distance needs --modulus".into());
                    }
                    SpectrumAction::Distance { other }
                } else {
                    let bounding = class_check.unwrap_or_default();
                    p.file("bounding material", &bounding);
                    p.positive("--T", horizon);
                    p.count("--grid", grid);
                    if rank > grid {
                        p.0.push(format!("--rank {rank} exceeds --grid {grid}"));
                    }
                    SpectrumAction::ClassCheck { bounding, rank }
                };
                Command::Spectrum {
                    measure,
                    action,
                    modulus,
                    lambda0,
                    horizon,
                    grid,
                }
            }
            CliCommand::Modulus { material, omega, time } => {
                p.file("material", &material);
                p.rate("--omega", omega);
                if let Some(t) = time {
                    p.rate("--t", t);
                }
                Command::Modulus { material, omega, time }
            }
        };
        if !p.0.is_empty() {
            return Err(Error::Config(p.0.join("; ")));
        }
        Ok(RunConfig {
            command,
            json: cli.json,
            output: cli.output,
        })
    }
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence(_) | Error::NotContractive(_) => 3,
        Error::NonConvergence { .. } | Error::RootFinding(_) => 4,
        _ => 2,
    }
}

/// Report plus exit status of a completed command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub status: i32,
}

fn load_law(path: &Path) -> Result<HereditaryLaw> {
    MaterialCard::load(path)?.to_law()
}

fn select_part(law: &HereditaryLaw, part: Option<Part>) -> Result<ModalLaw> {
    let laws = law.modal_laws();
    let want = match part {
        None if laws.len() == 1 => return Ok(laws.into_iter().next().expect("one law")),
        None | Some(Part::Deviatoric) => ModeKind::Deviatoric,
        Some(Part::Volumetric) => ModeKind::Volumetric,
    };
    laws.into_iter()
        .find(|m| m.kind == want)
        .ok_or_else(|| Error::config(format!("material has no {want:?} part").to_lowercase()))
}

fn single_mode(kernel: &ScalarKernel) -> Option<(f64, f64)> {
    match kernel.prony_modes().as_slice() {
        [m] if matches!(kernel, ScalarKernel::Prony(_)) => Some((m.stiffness(), m.rate())),
        _ => None,
    }
}

fn certify_cmd(material: &Path, lambda0: f64, require: bool) -> Result<Outcome> {
    let law = load_law(material)?;
    let cert = certify(&law, Weight::exponential(lambda0)?)?;
    let decay = match max_decay_rate(&law) {
        Ok(r) => json!(r),
        Err(Error::NotContractive(_)) => Value::Null,
        Err(e) => return Err(e),
    };
    let mut report = serde_json::to_value(&cert)?;
    report["max_decay_rate"] = decay;
    let status = if require && !cert.contractive { 3 } else { 0 };
    Ok(Outcome { report, status })
}

#[allow(clippy::too_many_arguments)]
fn solve_cmd(
    material: &Path,
    input: Option<&Path>,
    mode: SolveMode,
    method: SolveMethod,
    lambda0: f64,
    opts: PicardOptions,
    creep: (f64, f64, usize),
    part: Option<Part>,
    strain_out: Option<&Path>,
) -> Result<Outcome> {
    let law = load_law(material)?;
    let modal = select_part(&law, part)?;
    let total = modal.total();
    let w = Weight::exponential(lambda0)?;
    let stress = match mode {
        SolveMode::Creep => {
            let (s0, horizon, steps) = creep;
            Evolution::from_fn(TimeGrid::uniform(horizon, steps)?, EvolutionKind::Stress, |_| s0)?
        }
        SolveMode::Custom => Evolution::read_csv(input.expect("validated"), EvolutionKind::Stress)?,
    };
    let report = match method {
        SolveMethod::Direct => {
            let e = solve_direct(&modal.kernel, total, &stress)?;
            solve_report(&modal.kernel, total, &stress, e, w)?
        }
        SolveMethod::Picard => solve_picard(&modal.kernel, total, &stress, w, opts)?,
    };
    if let Some(path) = strain_out {
        report.solution.write_csv(path)?;
    }
    let values = report.solution.values();
    let mut out = json!({
        "method": method,
        "mode": mode,
        "part": format!("{:?}", modal.kind).to_lowercase(),
        "steps": stress.grid().steps(),
        "horizon": stress.grid().horizon(),
        "iterations": report.iterations,
        "residuals": report.residuals,
        "ratios": report.ratios,
        "gamma_used": report.gamma_used,
        "strain_norm": report.strain_norm,
        "stress_norm": report.stress_norm,
        "bound": report.bound,
        "bound_check": report.bound_check,
        "final_strain": values[values.len() - 1],
        "max_abs_strain": report.solution.max_abs(),
    });
    if let (SolveMode::Creep, Some((c1, l1))) = (mode, single_mode(&modal.kernel)) {
        let s0 = creep.0;
        let c0 = modal.moduli.equilibrium;
        let worst = stress
            .grid()
            .nodes()
            .iter()
            .zip(values)
            .map(|(&t, &v)| {
                let exact = s0 / c0 - (c1 / c0) * (s0 / total) * (-l1 * c0 * t / total).exp();
                if exact == 0.0 { (v - exact).abs() } else { ((v - exact) / exact).abs() }
            })
            .fold(0.0, f64::max);
        out["creep_closed_form_max_relative_error"] = json!(worst);
    }
    Ok(Outcome { report: out, status: 0 })
}

fn history_grid(horizon: f64, grid: usize, quadrature: QuadratureChoice, order: usize) -> Result<HistoryGrid> {
    match quadrature {
        QuadratureChoice::Trapezoid => HistoryGrid::trapezoid(horizon, grid),
        QuadratureChoice::Gauss => HistoryGrid::gauss_panels(horizon, grid.div_ceil(order).max(1), order),
    }
}

#[allow(clippy::too_many_arguments)]
fn reduce_cmd(
    material: &Path,
    lambda0: f64,
    horizon: f64,
    grid_size: usize,
    rank: usize,
    basis: BasisChoice,
    quadrature: QuadratureChoice,
    order: usize,
    part: Option<Part>,
    out_dir: Option<&Path>,
) -> Result<Outcome> {
    let law = load_law(material)?;
    let modal = select_part(&law, part)?;
    let w = Weight::exponential(lambda0)?;
    let grid = history_grid(horizon, grid_size, quadrature, order)?;
    let op = assemble_s(&modal.kernel, modal.total(), w, &grid)?;
    let count = (rank + 1).min(grid.len());
    let sys = singular_system(&op, count)?;
    let reduced = truncate(&op, rank.min(grid.len()))?;
    let measured = op.distance_to(&reduced);

    let gamma_sqrt_t = certify(&law, w).ok().map(|c| c.gamma * horizon.sqrt());
    let mut report = json!({
        "part": format!("{:?}", modal.kind).to_lowercase(),
        "nodes": grid.len(),
        "quadrature": quadrature,
        "rank": rank,
        "singular_values": sys.values,
        "truncation_error": reduced.predicted_error,
        "measured_error": measured,
        "hs_norm": op.hs_norm(),
        "gamma_sqrt_T": gamma_sqrt_t,
        "gram_deviation": sys.gram_deviation(),
    });

    if let Some((c1, l1)) = single_mode(&modal.kernel) {
        let params = SlsParams::new(modal.moduli.equilibrium, c1, l1, lambda0, horizon)?;
        let oracle = if lambda0 < 2.0 * l1 {
            sls_eigen_ode_oracle(&params, count, 1)?
        } else {
            Vec::new()
        };
        let rows: Vec<Value> = (1..=count)
            .map(|k| {
                let discrete = sys.values[k - 1].powi(2);
                let reference = sls_eigen_reference(&params, k).ok().map(|r| r.mu);
                let ode = oracle.get(k - 1).map(|o| o.mu);
                json!({
                    "k": k,
                    "mu_discrete": discrete,
                    "mu_ode": ode,
                    "mu_reference": reference,
                    "reference_relative_deviation": reference.map(|r| (r - discrete) / discrete),
                    "ode_relative_deviation": ode.map(|o| (o - discrete) / discrete),
                })
            })
            .collect();
        report["sls_comparison"] = Value::Array(rows);
    }

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let ks: Vec<f64> = (1..=sys.values.len()).map(|k| k as f64).collect();
        let mus = sys.eigenvalues();
        write_columns(
            &dir.join("singular_values.csv"),
            &["k".into(), "s".into(), "mu".into()],
            &[ks, sys.values.clone(), mus],
        )?;
        let header = |name: &str, n: usize| -> Vec<String> {
            std::iter::once("tau".to_string())
                .chain((1..=n).map(|k| format!("{name}_{k}")))
                .collect()
        };
        let with_nodes = |cols: &[Vec<f64>]| -> Vec<Vec<f64>> {
            std::iter::once(grid.nodes().to_vec()).chain(cols.iter().cloned()).collect()
        };
        match basis {
            BasisChoice::Svd => {
                let n = rank.min(sys.phi.len());
                write_columns(&dir.join("phi.csv"), &header("phi", n), &with_nodes(&sys.phi[..n]))?;
                write_columns(&dir.join("psi.csv"), &header("psi", n), &with_nodes(&sys.psi[..n]))?;
            }
            BasisChoice::Laguerre => {
                let lag = LaguerreBasis::new(lambda0, rank.max(1))?;
                let cols: Vec<Vec<f64>> = (1..=lag.count())
                    .map(|k| grid.nodes().iter().map(|&t| lag.eval(k, t)).collect())
                    .collect();
                write_columns(&dir.join("laguerre.csv"), &header("phi", lag.count()), &with_nodes(&cols))?;
            }
        }
    }
    if basis == BasisChoice::Laguerre {
        let lag = LaguerreBasis::new(lambda0, rank.max(1))?;
        let dev = (lag.gram() - nalgebra::DMatrix::identity(lag.count(), lag.count())).abs().max();
        report["laguerre_gram_deviation"] = json!(dev);
    }
    Ok(Outcome { report, status: 0 })
}

fn spectrum_cmd(
    measure: &Path,
    action: &SpectrumAction,
    modulus: Option<f64>,
    lambda0: f64,
    horizon: f64,
    grid: usize,
) -> Result<Outcome> {
    let nu = RelaxationMeasure::load(measure)?;
    let kernel = kernel_from_measure(&nu)?;
    let w = Weight::exponential(lambda0)?;
    let report = match action {
        SpectrumAction::ToProny { atoms } => {
            let atomic = prony_from_density(&nu, *atoms)?;
            let d = kernel_distance(&kernel_from_measure(&atomic)?, &kernel, modulus.expect("validated"), w)?;
            json!({
                "atoms": atomic.atoms().iter().map(|&(l, m)| vec![l, m]).collect::<Vec<_>>(),
                "lambda0": atomic.cutoff(),
                "distance": d,
            })
        }
        SpectrumAction::Distance { other } => {
            let other = kernel_from_measure(&RelaxationMeasure::load(other)?)?;
            json!({ "distance": kernel_distance(&kernel, &other, modulus.expect("validated"), w)? })
        }
        SpectrumAction::ClassCheck { bounding, rank } => {
            let law = load_law(bounding)?;
            let modal = select_part(&law, None)?;
            let hgrid = HistoryGrid::trapezoid(horizon, grid)?;
            let op = assemble_s(&modal.kernel, modal.total(), w, &hgrid)?;
            let sys = singular_system(&op, (rank + 1).min(hgrid.len()))?;
            let mut bounded = sys.clone();
            bounded.values.truncate(*rank);
            bounded.phi.truncate(*rank);
            bounded.psi.truncate(*rank);
            let membership = class_membership(&kernel, modal.total(), &bounded)?;
            json!({
                "member": membership.member,
                "margins": membership.margins,
                "nwidth": class_nwidth(&sys, *rank)?,
                "singular_values": sys.values,
            })
        }
    };
    Ok(Outcome { report, status: 0 })
}

fn modulus_cmd(material: &Path, omega: f64, time: Option<f64>) -> Result<Outcome> {
    let law = load_law(material)?;
    let part = |m: &ModalLaw| -> Result<Value> {
        let z = complex_modulus(&m.kernel, m.moduli.equilibrium, omega)?;
        let mut v = json!({ "omega": z.omega, "storage": z.storage, "loss": z.loss });
        if let Some(t) = time {
            v["relaxation_modulus"] = json!(relaxation_modulus(&m.kernel, m.moduli.equilibrium, t)?);
            v["t"] = json!(t);
        }
        Ok(v)
    };
    let laws = law.modal_laws();
    let report = if laws.len() == 1 && laws[0].kind == ModeKind::Scalar {
        part(&laws[0])?
    } else {
        let mut map = serde_json::Map::new();
        for m in &laws {
            let name = if m.kind == ModeKind::Volumetric { "bulk" } else { "shear" };
            map.insert(name.to_string(), part(m)?);
        }
        Value::Object(map)
    };
    Ok(Outcome { report, status: 0 })
}

/// Executes one validated configuration.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    let mut outcome = match &config.command {
        Command::Certify {
            material,
            lambda0,
            require_contractive,
        } => certify_cmd(material, *lambda0, *require_contractive)?,
        Command::Solve {
            material,
            input,
            mode,
            method,
            lambda0,
            tol,
            max_iter,
            stress,
            horizon,
            steps,
            part,
            strain_out,
        } => solve_cmd(
            material,
            input.as_deref(),
            *mode,
            *method,
            *lambda0,
            PicardOptions {
                tol: *tol,
                max_iter: *max_iter,
            },
            (*stress, *horizon, *steps),
            *part,
            strain_out.as_deref(),
        )?,
        Command::Reduce {
            material,
            lambda0,
            horizon,
            grid,
            rank,
            basis,
            quadrature,
            panel_order,
            part,
            out_dir,
        } => reduce_cmd(
            material,
            *lambda0,
            *horizon,
            *grid,
            *rank,
            *basis,
            *quadrature,
            *panel_order,
            *part,
            out_dir.as_deref(),
        )?,
        Command::Spectrum {
            measure,
            action,
            modulus,
            lambda0,
            horizon,
            grid,
        } => spectrum_cmd(measure, action, *modulus, *lambda0, *horizon, *grid)?,
        Command::Modulus { material, omega, time } => modulus_cmd(material, *omega, *time)?,
    };
    if let Value::Object(map) = &mut outcome.report {
        map.insert("config".into(), serde_json::to_value(config)?);
    }
    Ok(outcome)
}

fn configure_threads() {
    if let Some(n) = std::env::var("HEREDLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn emit(config: &RunConfig, report: &Value) -> Result<()> {
    let text = if config.json {
        render_json(report)
    } else {
        render_text(report)
    };
    match &config.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    let result = RunConfig::from_cli(cli).and_then(|config| {
        let outcome = run(&config)?;
        emit(&config, &outcome.report)?;
        Ok(outcome.status)
    });
    match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("heredlab: {e}");
            if let Error::NonConvergence { residuals, .. } = &e {
                eprintln!("residual history: {residuals:?}");
            }
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        RunConfig::from_cli(Cli::try_parse_from(args).expect("clap accepts"))
    }

    #[test]
    fn problems_are_aggregated() {
        let Err(Error::Config(msg)) = parse(&["heredlab", "reduce", "--material", "/nope.json", "--lambda0=-1", "--T", "0", "--grid", "3", "--rank", "9"]) else {
            panic!()
        };
        for needle in ["/nope.json", "--lambda0", "--T", "--rank 9"] {
            assert!(msg.contains(needle), "{needle} missing from {msg}");
        }
    }

    #[test]
    fn spectrum_needs_one_action() {
        let Err(Error::Config(msg)) = parse(&["heredlab", "spectrum", "--measure", "/nope.json"]) else { panic!() };
        assert!(msg.contains("exactly one"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Divergence("x".into())), 3);
        assert_eq!(exit_code(&Error::NonConvergence { iterations: 1, residuals: vec![] }), 4);
    }
}
