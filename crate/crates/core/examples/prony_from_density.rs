//! Atomizing a continuous relaxation spectrum into Prony modes, the kernel
//! distance it induces and the resulting bound on the strain perturbation.

use heredlab::material::Weight;
use heredlab::spectra::{
    kernel_distance, kernel_from_measure, prony_from_density, prony_to_tolerance, RelaxationMeasure,
    TabulatedDensity,
};
use heredlab::volterra::{solve_direct, weighted_norm, Evolution, EvolutionKind, TimeGrid};

fn main() -> heredlab::Result<()> {
    let density = TabulatedDensity::from_fn(0.1, 10.0, 50, |l| 1.0 / (1.0 + l));
    let nu = RelaxationMeasure::new(0.0, Vec::new(), Some(density))?;
    let exact = kernel_from_measure(&nu)?;
    let total = 1.0 + exact.stiffness();
    let w = Weight::constant();
    for n in [2, 4, 8, 16, 32] {
        let atomic = kernel_from_measure(&prony_from_density(&nu, n)?)?;
        println!("n = {n:>3}: kernel distance {:.3e}", kernel_distance(&atomic, &exact, total, w)?);
    }
    let fit = prony_to_tolerance(&nu, &exact, total, w, 1e-3, 64)?;
    println!("tolerance 1e-3 reached: {} with {} atoms (distance {:.2e})", fit.reached, fit.atoms, fit.distance);

    let coarse = kernel_from_measure(&prony_from_density(&nu, 4)?)?;
    let d = kernel_distance(&coarse, &exact, total, w)?;
    let stress = Evolution::from_fn(TimeGrid::uniform(3.0, 200)?, EvolutionKind::Stress, |t| (4.0 * t).sin())?;
    let e = solve_direct(&exact, total, &stress)?;
    let eh = solve_direct(&coarse, total, &stress)?;
    let diff = Evolution::new(
        e.grid().clone(),
        e.values().iter().zip(eh.values()).map(|(a, b)| a - b).collect(),
        EvolutionKind::Strain,
    )?;
    let gamma = coarse.stiffness() / total;
    println!(
        "4 atoms: ||eps_h - eps|| = {:.3e} <= d ||eps|| / (1 - gamma) = {:.3e}",
        weighted_norm(&diff, total, w),
        d * weighted_norm(&e, total, w) / (1.0 - gamma)
    );
    Ok(())
}
