//! Picard iteration on a contractive problem: residual ratios stay below the
//! certified contraction constant and the result matches the direct solver.

use heredlab::material::{ScalarKernel, Weight};
use heredlab::volterra::{solve_direct, solve_picard, Evolution, EvolutionKind, PicardOptions, TimeGrid};

fn main() -> heredlab::Result<()> {
    let kernel = ScalarKernel::from_pairs(&[(1.0, 0.5), (0.7, 4.0)])?;
    let total = 0.8 + kernel.stiffness();
    let stress = Evolution::from_fn(TimeGrid::uniform(4.0, 400)?, EvolutionKind::Stress, |t| {
        (2.0 * t).sin() + 0.3 * t
    })?;
    let w = Weight::exponential(0.2)?;
    let report = solve_picard(&kernel, total, &stress, w, PicardOptions { tol: 1e-12, max_iter: 500 })?;
    println!("gamma = {:.6}, {} iterations", report.gamma_used, report.iterations);
    for (k, (r, q)) in report.residuals.iter().zip(std::iter::once(&f64::NAN).chain(&report.ratios)).enumerate().take(12) {
        println!("  iteration {:>2}: update {r:.3e}  ratio {q:.4}", k + 1);
    }
    println!(
        "strain norm {:.6} <= bound {:.6}: {}",
        report.strain_norm, report.bound, report.bound_check
    );
    let direct = solve_direct(&kernel, total, &stress)?;
    println!("max |picard - direct| = {:.3e}", report.solution.max_difference(&direct));
    Ok(())
}
