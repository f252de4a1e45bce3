//! Variance test for the monotonicity condition, its three-helper threshold,
//! and the grid probe that backs it up.

use maho_rd::mi::{mi_report, three_helper_threshold, ProbeConfig};
use maho_rd::SourceSpec;

fn main() -> maho_rd::Result<()> {
    let n = vec![1.0, 1.0, 1.0];
    let threshold = three_helper_threshold(&SourceSpec::new(1.0, vec![0.3, 0.1, 1.0], n.clone())?)?;
    println!("three-helper threshold on the middle innovation variance: {threshold:.6}");

    for z2 in [0.2, 0.5, 0.6] {
        let spec = SourceSpec::new(1.0, vec![0.3, z2, 1.0], n.clone())?;
        let rep = mi_report(&spec, 0.5, &ProbeConfig::default());
        let probe = rep.numeric.as_ref().expect("probe requested");
        println!(
            "z2 = {z2}: lhs {:?} -> {}, probe {} over {} increments",
            rep.variance_lhs,
            if rep.variance_holds { "holds" } else { "fails" },
            if probe.holds { "clean" } else { "violated" },
            probe.points_checked
        );
    }
    Ok(())
}
