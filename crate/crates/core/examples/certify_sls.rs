//! Fading-memory certificate of a standard linear solid and of an isotropic
//! Maxwell-Wiechert law, plus the largest contractive weight rate.

use heredlab::material::{HereditaryLaw, ScalarKernel, Weight};
use heredlab::wellposed::{certify, max_decay_rate};

fn main() -> heredlab::Result<()> {
    let sls = HereditaryLaw::scalar(1.0, ScalarKernel::single(1.0, 2.0)?)?;
    for rate in [0.0, 0.5, 0.9, 1.5] {
        let c = certify(&sls, Weight::exponential(rate)?)?;
        println!(
            "SLS  lambda0 = {rate:<4} gamma = {:.6}  contractive = {:<5}  hs = {:.6}  factor = {:?}",
            c.gamma, c.contractive, c.hs_constant, c.a_priori_factor
        );
    }
    println!("SLS  largest contractive lambda0 = {:.10}", max_decay_rate(&sls)?);

    // Bulk (B0, L) and shear (G0, M) parts; the norm is the larger of the two.
    let iso = HereditaryLaw::isotropic(
        Some((3.0, ScalarKernel::from_pairs(&[(1.0, 10.0), (0.5, 1.0)])?)),
        (1.0, ScalarKernel::from_pairs(&[(0.5, 2.0)])?),
    )?;
    let c = certify(&iso, Weight::exponential(0.3)?)?;
    println!("isotropic lambda0 = 0.3  gamma = {:.6} via {:?}", c.gamma, c.method);
    println!("isotropic largest contractive lambda0 = {:.10}", max_decay_rate(&iso)?);
    Ok(())
}
