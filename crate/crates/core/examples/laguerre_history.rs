//! History variables in the renormalized Laguerre basis: orthonormality and
//! convergence of the reconstruction of a decaying strain history.

use heredlab::history::{project_history, History, HistoryBasis, LaguerreBasis};
use nalgebra::DMatrix;

fn main() -> heredlab::Result<()> {
    let basis = LaguerreBasis::new(1.0, 20)?;
    let dev = (basis.gram() - DMatrix::identity(20, 20)).abs().max();
    println!("Gram deviation from identity: {dev:.2e}");
    let history = |t: f64| (-0.5 * t).exp() * (1.0 + (3.0 * t).sin());
    let q = project_history(History::Function(&history), HistoryBasis::Laguerre(&basis))?;
    for k in [1, 2, 4, 8, 12, 16, 20] {
        println!("K = {k:>2}: weighted reconstruction error {:.3e}", basis.reconstruction_error(&history, &q[..k]));
    }
    Ok(())
}
