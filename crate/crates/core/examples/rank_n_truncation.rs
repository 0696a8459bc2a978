//! Optimal rank-N reduction: the error of the truncated singular expansion
//! equals s_(N+1) and beats random subspaces of the same rank.

use heredlab::history::{assemble_s, singular_system, truncate, HistoryGrid};
use heredlab::material::{ScalarKernel, Weight};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> heredlab::Result<()> {
    let kernel = ScalarKernel::from_pairs(&[(1.0, 1.0), (0.5, 8.0)])?;
    let grid = HistoryGrid::trapezoid(2.0, 300)?;
    let op = assemble_s(&kernel, 1.0 + kernel.stiffness(), Weight::exponential(0.5)?, &grid)?;
    let sys = singular_system(&op, 8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("{:>3} {:>14} {:>14} {:>18}", "N", "s_(N+1)", "||S - S_N||", "best random rank-N");
    for n in 0..7 {
        let reduced = truncate(&op, n)?;
        let best_random = (0..20)
            .map(|_| {
                let q = DMatrix::from_fn(op.len(), n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
                op.subspace_error(&q)
            })
            .fold(f64::INFINITY, f64::min);
        println!(
            "{n:>3} {:>14.8e} {:>14.8e} {:>18.8e}",
            sys.values[n],
            op.distance_to(&reduced),
            best_random
        );
    }
    Ok(())
}
