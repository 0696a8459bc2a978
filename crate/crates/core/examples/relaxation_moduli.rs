//! Relaxation modulus and storage/loss moduli of a three-mode Prony series.

use heredlab::material::{complex_modulus, relaxation_modulus, ScalarKernel};

fn main() -> heredlab::Result<()> {
    let c0 = 1.0;
    let kernel = ScalarKernel::from_pairs(&[(2.0, 0.1), (1.0, 1.0), (0.5, 10.0)])?;
    println!("{:>10} {:>14}", "t", "E(t)");
    for t in [0.0, 0.01, 0.1, 1.0, 10.0, 100.0] {
        println!("{t:>10} {:>14.8}", relaxation_modulus(&kernel, c0, t)?);
    }
    println!("\n{:>10} {:>14} {:>14}", "omega", "storage", "loss");
    for e in -3..=3 {
        let omega = 10f64.powi(e);
        let z = complex_modulus(&kernel, c0, omega)?;
        println!("{omega:>10} {:>14.8} {:>14.8}", z.storage, z.loss);
    }
    Ok(())
}
