//! Creep of a standard linear solid under constant stress, compared with the
//! closed-form response and written to `creep.csv`.

use heredlab::material::ScalarKernel;
use heredlab::volterra::{solve_direct, Evolution, EvolutionKind, TimeGrid};

fn main() -> heredlab::Result<()> {
    let (c0, c1, l1, s0) = (1.0, 1.0, 1.0, 1.0);
    let total = c0 + c1;
    let kernel = ScalarKernel::single(c1, l1)?;
    let exact = |t: f64| s0 / c0 - (c1 / c0) * (s0 / total) * (-l1 * c0 * t / total).exp();
    for steps in [50, 100, 200, 400, 800] {
        let stress = Evolution::from_fn(TimeGrid::uniform(5.0, steps)?, EvolutionKind::Stress, |_| s0)?;
        let strain = solve_direct(&kernel, total, &stress)?;
        let err = strain
            .grid()
            .nodes()
            .iter()
            .zip(strain.values())
            .map(|(&t, &e)| (e - exact(t)).abs())
            .fold(0.0, f64::max);
        println!("steps {steps:>4}  max error {err:.3e}");
        if steps == 800 {
            strain.write_csv(std::path::Path::new("creep.csv"))?;
        }
    }
    println!("strain history written to creep.csv");
    Ok(())
}
