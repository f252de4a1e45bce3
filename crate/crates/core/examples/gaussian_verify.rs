//! Builds the joint covariance of source, observations and quantised
//! descriptions and checks the closed forms against it.

use maho_rd::gaussian::verify_identities;
use maho_rd::sample::boundary_alloc;
use maho_rd::{RateAllocation, SourceSpec};

fn main() -> maho_rd::Result<()> {
    let spec = SourceSpec::new(1.2, vec![0.3, 0.4, 0.9], vec![0.8, 1.1, 0.9])?;
    let d = 0.4;
    let on = boundary_alloc(&spec, d, vec![0.6, 0.3, 0.8]);
    let inside = RateAllocation::new(on.r0 + 0.25, on.r.clone());

    for alloc in [on, inside] {
        let rep = verify_identities(&spec, d, &alloc, 1e-9)?;
        println!("{:?} point, r0 = {:.6}", rep.regime, alloc.r0);
        println!("  I(X0; U0 | helpers) = {:.9}", rep.info_r0);
        println!("  helper rate deviations  {:.2e}", rep.worst_dev_ri());
        println!("  subset deviations       {:.2e}", rep.worst_dev_fs());
        println!(
            "  distortion {:.9} (mmse {:.9}, linear estimator {:.9})",
            rep.achieved_distortion, rep.mmse_residual, rep.estimator_residual
        );
        println!(
            "  markov residue {:.2e}, passed {}",
            rep.markov_max, rep.passed
        );
    }
    Ok(())
}
