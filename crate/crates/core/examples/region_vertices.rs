//! Subset rate tables, co-polymatroid vertices and a membership certificate.

use maho_rd::region::{
    certificate_check, subset_rates, vertex, BoundKind, Permutation, RegionPoint,
};
use maho_rd::sample::boundary_alloc;
use maho_rd::{SourceSpec, Subset};

fn main() -> maho_rd::Result<()> {
    let spec = SourceSpec::new(1.2, vec![0.3, 0.4, 0.9], vec![0.8, 1.1, 0.9])?;
    let d = 0.4;
    let alloc = boundary_alloc(&spec, d, vec![0.6, 0.3, 0.8]);
    println!("allocation r0 = {:.6}, r = {:?}", alloc.r0, alloc.r);

    let outer = subset_rates(&spec, Some(d), &alloc, BoundKind::Outer)?;
    let inner = subset_rates(&spec, Some(d), &alloc, BoundKind::Inner)?;
    for s in Subset::all(spec.big_l()) {
        println!(
            "  S = {s:<8} outer {:.6}  inner {:.6}",
            outer.get(s),
            inner.get(s)
        );
    }

    for pi in Permutation::all(spec.big_l()) {
        let v = vertex(&outer, &pi)?;
        println!("vertex {pi}: {v:.6?}");
    }

    let probe = RegionPoint {
        r0_rate: alloc.r0,
        helper_rates: vec![0.5, 0.5, 0.5],
    };
    let cert = certificate_check(&spec, d, &probe, &alloc, BoundKind::Outer)?;
    println!(
        "(0.5, 0.5, 0.5): holds = {}, tightest subset {} with slack {:.4}",
        cert.holds, cert.worst_subset, cert.worst_slack
    );
    Ok(())
}
