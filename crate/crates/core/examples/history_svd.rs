//! Singular system of the history operator of a standard linear solid,
//! cross-checked against the shooting oracle and the closed-form eigenvalues.

use heredlab::history::sls::{sls_eigen_ode_oracle, sls_eigen_reference, SlsParams};
use heredlab::history::{assemble_s, singular_system, HistoryGrid};

fn main() -> heredlab::Result<()> {
    let p = SlsParams::new(1.0, 1.0, 1.0, 0.0, 1.0)?;
    let grid = HistoryGrid::gauss_panels(p.horizon, 100, 16)?;
    let op = assemble_s(&p.kernel(), p.total(), p.weight(), &grid)?;
    let sys = singular_system(&op, 6)?;
    let oracle = sls_eigen_ode_oracle(&p, 6, 2)?;
    println!("||S||_HS = {:.10}, Gram deviation {:.1e}", op.hs_norm(), sys.gram_deviation());
    println!("{:>3} {:>16} {:>16} {:>10} {:>16}", "k", "s_k^2 (svd)", "mu_k (ode)", "rel diff", "closed form");
    for (k, (mu, o)) in sys.eigenvalues().iter().zip(&oracle).enumerate() {
        let formula = sls_eigen_reference(&p, k + 1)?.mu;
        println!(
            "{:>3} {mu:>16.10e} {:>16.10e} {:>10.1e} {formula:>16.6e}",
            k + 1,
            o.mu,
            ((mu - o.mu) / o.mu).abs()
        );
    }
    Ok(())
}
