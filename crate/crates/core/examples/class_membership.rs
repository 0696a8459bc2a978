//! Class of hereditary operators dominated by a bounding SLS operator:
//! membership margins of candidate spectra and the class N-widths.

use heredlab::history::{assemble_s, singular_system, HistoryGrid};
use heredlab::material::{ScalarKernel, Weight};
use heredlab::spectra::{class_membership, class_nwidth, kernel_from_measure, RelaxationMeasure};

fn main() -> heredlab::Result<()> {
    let bounding = ScalarKernel::single(1.0, 1.0)?;
    let grid = HistoryGrid::trapezoid(1.0, 300)?;
    let w = Weight::exponential(0.5)?;
    let op = assemble_s(&bounding, 2.0, w, &grid)?;
    let sys = singular_system(&op, 6)?;
    let bounded = heredlab::history::SingularSystem {
        values: sys.values[..5].to_vec(),
        phi: sys.phi[..5].to_vec(),
        psi: sys.psi[..5].to_vec(),
        ..sys.clone()
    };
    let candidates = [
        ("bounding kernel", RelaxationMeasure::atomic(0.0, vec![(1.0, 1.0)])?),
        ("half mass", RelaxationMeasure::atomic(0.0, vec![(1.0, 0.5)])?),
        ("double mass", RelaxationMeasure::atomic(0.0, vec![(1.0, 2.0)])?),
        ("two slow atoms", RelaxationMeasure::atomic(0.0, vec![(0.3, 0.3), (0.6, 0.3)])?),
    ];
    for (name, nu) in &candidates {
        let m = class_membership(&kernel_from_measure(nu)?, 2.0, &bounded)?;
        let worst = m.margins.iter().copied().fold(f64::INFINITY, f64::min);
        println!("{name:<16} member {:<5} smallest margin {worst:+.3e}", m.member);
    }
    for n in 0..5 {
        println!("N-width d_{n} = {:.8e}", class_nwidth(&sys, n)?);
    }
    Ok(())
}
