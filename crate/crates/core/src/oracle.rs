//! Deliberately naive reference computations: zooming grid searches,
//! central finite differences and exhaustive set-function audits.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::recursions::{f0_sup, f_seq, g0};
use crate::region::{j_subset, k_subset, SubsetRates};
use crate::source::{DistortionBudget, RateAllocation, SourceSpec};
use crate::subset::Subset;
use crate::sum_rate::{sum_rate_objective, Method, SumRateResult};

/// Largest `L` accepted by the grid searches.
pub const GRID_MAX_HELPERS: usize = 4;
/// Largest `L` accepted by [`axiom_audit`].
pub const AUDIT_MAX_HELPERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Points per axis, at least 2.
    pub points: usize,
    pub max_rate: f64,
    /// Extra passes, each re-gridding `[x - h, x + h]` around the incumbent
    /// with the same point count (`h` the previous spacing).
    pub refinements: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 13,
            max_rate: 2.5,
            refinements: 1,
        }
    }
}

impl GridSpec {
    fn check(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::arg("grid.points", "need at least 2"));
        }
        if !(self.max_rate.is_finite() && self.max_rate > 0.0) {
            return Err(Error::arg("grid.max_rate", "must be positive"));
        }
        Ok(())
    }
}

/// Minimises `eval` over `[0, max_rate]^dim` by a zooming grid. `eval`
/// returns `None` at points it rejects. Returns the best value and point.
pub fn zoom_min<F>(dim: usize, grid: &GridSpec, mut eval: F) -> Option<(f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let n = grid.points;
    let mut lo = vec![0.0; dim];
    let mut step = vec![grid.max_rate / (n - 1) as f64; dim];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for level in 0..=grid.refinements {
        if level > 0 {
            let (_, x) = best.as_ref()?;
            for k in 0..dim {
                let h = step[k];
                lo[k] = (x[k] - h).max(0.0);
                step[k] = (x[k] + h - lo[k]) / (n - 1) as f64;
            }
        }
        let mut idx = vec![0usize; dim];
        let mut point = vec![0.0; dim];
        loop {
            for k in 0..dim {
                point[k] = lo[k] + idx[k] as f64 * step[k];
            }
            if let Some(v) = eval(&point) {
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, point.clone()));
                }
            }
            let mut pos = 0;
            while pos < dim {
                idx[pos] += 1;
                if idx[pos] < n {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == dim {
                break;
            }
        }
    }
    best
}

/// Smallest `r_1` putting `(r_1, tail)` at `f_0 >= target`, by bisection; `None` if unreachable.
fn first_rate_by_bisection(spec: &SourceSpec, target: f64, tail: &[f64]) -> Option<f64> {
    let f0 = |r1: f64| {
        let mut r = vec![r1];
        r.extend_from_slice(tail);
        f_seq(spec, &r)[0]
    };
    if f0(0.0) >= target {
        return Some(0.0);
    }
    if f0(f64::INFINITY) <= target {
        return None;
    }
    let mut hi = 1.0;
    while f0(hi) < target {
        hi *= 2.0;
        if hi > 1e4 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f0(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Some(hi)
}

fn checked_target(spec: &SourceSpec, d: f64, r0_budget: f64) -> Result<f64> {
    if spec.big_l() > GRID_MAX_HELPERS {
        return Err(Error::arg(
            "spec",
            format!("grid oracle supports L <= {GRID_MAX_HELPERS}"),
        ));
    }
    DistortionBudget::new(spec, d)?;
    if !(r0_budget.is_finite() && r0_budget >= 0.0) {
        return Err(Error::arg("r0", "must be finite and nonnegative"));
    }
    let g = g0(spec, d, r0_budget);
    let sup = f0_sup(spec);
    if g >= sup {
        return Err(Error::Infeasible { g0: g, f0_sup: sup });
    }
    Ok(g)
}

/// Grid over `r_2..r_L`, with `r_1` from bisection on the constraint. The
/// result upper-bounds the true minimum.
pub fn grid_sum_rate(
    spec: &SourceSpec,
    d: f64,
    r0_budget: f64,
    grid: &GridSpec,
) -> Result<SumRateResult> {
    grid.check()?;
    let target = checked_target(spec, d, r0_budget)?;
    let big_l = spec.big_l();
    if target <= 0.0 {
        return Ok(SumRateResult {
            value: 0.0,
            minimizer_r: vec![0.0; big_l],
            method: Method::Oracle,
            omega: None,
        });
    }
    let full = |tail: &[f64]| -> Option<Vec<f64>> {
        let r1 = first_rate_by_bisection(spec, target, tail)?;
        let mut r = vec![r1];
        r.extend_from_slice(tail);
        Some(r)
    };
    let (value, tail) = zoom_min(big_l - 1, grid, |tail| {
        full(tail).map(|r| sum_rate_objective(spec, d, r0_budget, &r))
    })
    .ok_or_else(|| Error::Consistency("no feasible grid point".into()))?;
    Ok(SumRateResult {
        value: value.max(0.0),
        minimizer_r: full(&tail).expect("incumbent is feasible"),
        method: Method::Oracle,
        omega: None,
    })
}

/// Minimum of `K_Lambda` over boundary allocations with `r_0 = R_0`.
pub fn grid_min_boundary_k(
    spec: &SourceSpec,
    d: f64,
    r0_budget: f64,
    grid: &GridSpec,
) -> Result<(f64, Vec<f64>)> {
    grid.check()?;
    let target = checked_target(spec, d, r0_budget)?;
    let big_l = spec.big_l();
    let full_set = Subset::full(big_l);
    let full = |tail: &[f64]| -> Option<Vec<f64>> {
        let r1 = first_rate_by_bisection(spec, target, tail)?;
        // only exact boundary points count here
        if r1 == 0.0 && f_seq(spec, &[&[0.0][..], tail].concat())[0] > target {
            return None;
        }
        Some([&[r1][..], tail].concat())
    };
    let (v, tail) = zoom_min(big_l - 1, grid, |tail| {
        full(tail).map(|r| k_subset(spec, &r, full_set))
    })
    .ok_or_else(|| Error::Consistency("no boundary grid point".into()))?;
    Ok((v, full(&tail).expect("incumbent is feasible")))
}

/// Minimum of `J_Lambda(D, R_0, r)` over the feasible set at `r_0 = R_0`:
/// grid over `r_2..r_L`, and for each tail a zooming scan of `r_1` from its
/// smallest feasible value up to `span` above it.
pub fn grid_min_region_j(
    spec: &SourceSpec,
    d: f64,
    r0_budget: f64,
    grid: &GridSpec,
    span: f64,
) -> Result<(f64, Vec<f64>)> {
    grid.check()?;
    let target = checked_target(spec, d, r0_budget)?;
    let big_l = spec.big_l();
    let full_set = Subset::full(big_l);
    let inner = GridSpec {
        max_rate: span,
        ..*grid
    };
    let best_for_tail = |tail: &[f64]| -> Option<(f64, Vec<f64>)> {
        let floor = first_rate_by_bisection(spec, target, tail)?;
        let found = zoom_min(1, &inner, |x| {
            let r = [&[floor + x[0]][..], tail].concat();
            j_subset(spec, d, &RateAllocation::new(r0_budget, r), full_set).ok()
        })?;
        Some((found.0, [&[floor + found.1[0]][..], tail].concat()))
    };
    let mut best_r = None;
    let mut best_v = f64::INFINITY;
    zoom_min(big_l - 1, grid, |tail| {
        let (v, r) = best_for_tail(tail)?;
        if v < best_v {
            best_v = v;
            best_r = Some(r);
        }
        Some(v)
    });
    best_r
        .map(|r| (best_v, r))
        .ok_or_else(|| Error::Consistency("no feasible grid point".into()))
}

/// Central-difference gradient.
pub fn fd_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut p = x.to_vec();
    (0..x.len())
        .map(|k| {
            p[k] = x[k] + h;
            let up = f(&p)?;
            p[k] = x[k] - h;
            let down = f(&p)?;
            p[k] = x[k];
            Ok((up - down) / (2.0 * h))
        })
        .collect()
}

/// Central-difference Hessian, symmetric by construction.
pub fn fd_hessian<F>(f: F, x: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = x.len();
    let mut hess = DMatrix::zeros(n, n);
    let mut p = x.to_vec();
    let centre = f(x)?;
    for i in 0..n {
        p[i] = x[i] + h;
        let up = f(&p)?;
        p[i] = x[i] - h;
        let down = f(&p)?;
        p[i] = x[i];
        hess[(i, i)] = (up - 2.0 * centre + down) / (h * h);
        for j in 0..i {
            let mut at = |si: f64, sj: f64| {
                p[i] = x[i] + si * h;
                p[j] = x[j] + sj * h;
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v =
                (at(1.0, 1.0)? - at(1.0, -1.0)? - at(-1.0, 1.0)? + at(-1.0, -1.0)?) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub empty_value: f64,
    /// Smallest `rho_B - rho_A` over `A ⊆ B`, with the pair.
    pub worst_monotone: (f64, Subset, Subset),
    /// Smallest `rho_{A∩B} + rho_{A∪B} - rho_A - rho_B`, with the pair.
    pub worst_supermodular: (f64, Subset, Subset),
    pub passed: bool,
}

/// Exhaustive check of `rho_∅ = 0`, monotonicity and supermodularity.
pub fn axiom_audit(rates: &SubsetRates, tol: f64) -> Result<AxiomReport> {
    let big_l = rates.big_l();
    if big_l > AUDIT_MAX_HELPERS {
        return Err(Error::TooLarge(big_l));
    }
    let empty_value = rates.get(Subset::EMPTY);
    let mut mono = (f64::INFINITY, Subset::EMPTY, Subset::EMPTY);
    let mut sup = (f64::INFINITY, Subset::EMPTY, Subset::EMPTY);
    for b in Subset::all(big_l) {
        // submasks of b
        let mut a = b.0;
        loop {
            let slack = rates.get(b) - rates.get(Subset(a));
            if slack < mono.0 {
                mono = (slack, Subset(a), b);
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b.0;
        }
        for a in Subset::all(big_l) {
            let slack =
                rates.get(a.intersection(b)) + rates.get(a.union(b)) - rates.get(a) - rates.get(b);
            if slack < sup.0 {
                sup = (slack, a, b);
            }
        }
    }
    Ok(AxiomReport {
        passed: empty_value.abs() <= tol && mono.0 >= -tol && sup.0 >= -tol,
        empty_value,
        worst_monotone: mono,
        worst_supermodular: sup,
    })
}
