//! Work done over closed strain cycles is non-negative for positive Prony
//! kernels; it grows with the loading frequency up to the relaxation rate.

use std::f64::consts::PI;

use heredlab::material::ScalarKernel;
use heredlab::volterra::{strain_work, Evolution, EvolutionKind, TimeGrid};

fn main() -> heredlab::Result<()> {
    let kernel = ScalarKernel::from_pairs(&[(1.0, 1.0), (0.5, 20.0)])?;
    let total = 1.0 + kernel.stiffness();
    println!("{:>10} {:>14}", "period", "cycle work");
    for period in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let grid = TimeGrid::uniform(period, 2000)?;
        let strain = Evolution::from_fn(grid, EvolutionKind::Strain, |t| (2.0 * PI * t / period).sin())?;
        println!("{period:>10} {:>14.6e}", strain_work(&kernel, total, &strain)?);
    }
    Ok(())
}
