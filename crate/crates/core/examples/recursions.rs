//! Forward and backward recursions for a three-helper tree, and where an
//! allocation sits relative to the feasible set.

use maho_rd::recursions::{
    big_f, big_g, boundary_r0, classify, f0_sup, f_seq, f_seq_extended, g_seq, TOL_BOUNDARY,
};
use maho_rd::{RateAllocation, SourceSpec};

fn main() -> maho_rd::Result<()> {
    let spec = SourceSpec::new(1.2, vec![0.3, 0.4, 0.9], vec![0.8, 1.1, 0.9])?;
    let d = 0.4;
    let r = vec![0.6, 0.3, 0.8];

    let f = f_seq(&spec, &r);
    println!("f        = {f:?}");
    println!("f (sum)  = {:?}", f_seq_extended(&spec, &r)[0]);
    println!("sup f_0  = {:.6}", f0_sup(&spec));
    println!("F(r)     = {:.6}", big_f(&spec, &r));

    let r0 = boundary_r0(&spec, d, &r);
    println!("boundary r0 = {r0:.6}");
    for (label, shift) in [("boundary", 0.0), ("interior", 0.2)] {
        let alloc = RateAllocation::new(r0 + shift, r.clone());
        let g = g_seq(&spec, d, alloc.r0, &alloc.r)?;
        let class = classify(&spec, d, &alloc, TOL_BOUNDARY);
        println!(
            "{label:>8}: g = {g:?}, G = {:.6}, {:?} (slack {:.2e})",
            big_g(&spec, d, alloc.r0, &alloc.r)?,
            class.kind,
            class.slack
        );
    }
    Ok(())
}
