//! Minimum sum rate by direct search, by the one-parameter family, by grid
//! search, and in closed form for a symmetric spec.

use maho_rd::oracle::{grid_sum_rate, GridSpec};
use maho_rd::sum_rate::{
    ceo_closed_form, ceo_limit, numeric_sum_rate, parametric_sum_rate, SolverConfig,
};
use maho_rd::SourceSpec;

fn main() -> maho_rd::Result<()> {
    let tree = SourceSpec::new(1.0, vec![0.2, 0.3, 0.9], vec![0.5, 0.6, 0.9])?;
    let (d, r0) = (0.5, 0.1);
    let n = numeric_sum_rate(&tree, d, r0, &SolverConfig::default())?;
    println!("numeric    {:.9} at r = {:.5?}", n.value, n.minimizer_r);
    match parametric_sum_rate(&tree, d, r0) {
        Ok(p) => println!(
            "parametric {:.9} at omega = {:.6}",
            p.value,
            p.omega.unwrap_or(f64::NAN)
        ),
        Err(e) => println!("parametric unavailable: {e}"),
    }
    let g = grid_sum_rate(&tree, d, r0, &GridSpec::default())?;
    println!("grid       {:.9}", g.value);

    println!("\nsymmetric helpers, D = 0.5:");
    for l in [2, 3, 4, 8, 16, 32, 64] {
        let spec = SourceSpec::ceo(l, 1.0, 1.0)?;
        println!("  L = {l:>2}: {:.7}", ceo_closed_form(&spec, 0.5, 0.0)?);
    }
    println!("  limit : {:.7}", ceo_limit(1.0, 1.0, 0.5));
    Ok(())
}
