//! Independent checks: grid minimum of the outer bound on the boundary
//! against the grid minimum of the inner bound over the region, and the
//! co-polymatroid axioms of both rate tables.

use maho_rd::oracle::{axiom_audit, grid_min_boundary_k, grid_min_region_j, GridSpec};
use maho_rd::region::{subset_rates, BoundKind};
use maho_rd::sample::boundary_alloc;
use maho_rd::SourceSpec;

fn main() -> maho_rd::Result<()> {
    let spec = SourceSpec::new(1.0, vec![0.4, 0.7], vec![0.9, 0.7])?;
    let (d, r0) = (0.45, 0.1);
    let grid = GridSpec {
        refinements: 4,
        ..Default::default()
    };
    let (k, at_k) = grid_min_boundary_k(&spec, d, r0, &grid)?;
    let (j, at_j) = grid_min_region_j(&spec, d, r0, &grid, 3.0)?;
    println!("min outer on boundary {k:.9} at {at_k:.5?}");
    println!("min inner over region {j:.9} at {at_j:.5?}");

    let alloc = boundary_alloc(&spec, d, vec![0.4, 0.9]);
    for kind in [BoundKind::Outer, BoundKind::Inner] {
        let rep = axiom_audit(&subset_rates(&spec, Some(d), &alloc, kind)?, 1e-10)?;
        println!(
            "{kind:?}: passed {}, worst supermodular slack {:.2e}",
            rep.passed, rep.worst_supermodular.0
        );
    }
    Ok(())
}
