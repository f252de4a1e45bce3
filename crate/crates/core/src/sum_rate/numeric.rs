//! Direct minimisation of `sum_l r_l + 1/2 log F(r)` on `f_0(r) = g_0`.
//!
//! Pairwise descent along the constraint surface: one rate is eliminated from
//! `f_0 = g0` (in closed form for `r_1`, by bisection otherwise) while another
//! is moved by a golden-section line search. Cycling the eliminated rate lets
//! the search slide along faces where `r_1` has hit zero, which plain
//! coordinate descent with `r_1` eliminated cannot do.

use crate::recursions::{big_f, f_seq};
use crate::source::SourceSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_sweeps: usize,
    /// Stop once a full sweep improves the objective by less than this.
    pub sweep_tol: f64,
    /// Width at which a golden-section search stops.
    pub line_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 500,
            sweep_tol: 1e-12,
            line_tol: 1e-11,
        }
    }
}

/// `r_1` that puts `(r_1, tail)` on `f_0 = g0`, clamped to 0 when the tail alone
/// already overshoots; `None` when no finite `r_1` reaches the target.
pub(crate) fn solve_first_rate(spec: &SourceSpec, g0: f64, tail: &[f64]) -> Option<f64> {
    let f1_target = g0 / (1.0 - spec.sigma_z_sq(1) * g0);
    let rest = level1_without_first(spec, tail);
    let u = spec.sigma_n_sq(1) * (f1_target - rest);
    if u >= 1.0 {
        None
    } else if u <= 0.0 {
        Some(0.0)
    } else {
        Some(-0.5 * (-u).ln_1p())
    }
}

/// `f_1` with `r_1 = 0` and `r_2..r_L = tail`.
fn level1_without_first(spec: &SourceSpec, tail: &[f64]) -> f64 {
    let mut r = Vec::with_capacity(tail.len() + 1);
    r.push(0.0);
    r.extend_from_slice(tail);
    f_seq(spec, &r)[1]
}

fn objective_rates(spec: &SourceSpec, r: &[f64]) -> f64 {
    r.iter().sum::<f64>() + 0.5 * big_f(spec, r).ln()
}

fn f0_of(spec: &SourceSpec, r: &[f64]) -> f64 {
    f_seq(spec, r)[0]
}

/// Sets `r[j]` so that `f_0(r) = g0`, or to 0 when the other rates already
/// overshoot. Returns false when no finite value reaches the target.
fn solve_rate(spec: &SourceSpec, g0: f64, r: &mut [f64], j: usize) -> bool {
    if j == 0 {
        return match solve_first_rate(spec, g0, &r[1..]) {
            Some(v) => {
                r[0] = v;
                true
            }
            None => false,
        };
    }
    r[j] = 0.0;
    if f0_of(spec, r) >= g0 {
        return true;
    }
    r[j] = f64::INFINITY;
    if f0_of(spec, r) <= g0 {
        return false;
    }
    let mut hi = 1.0;
    r[j] = hi;
    while f0_of(spec, r) < g0 {
        hi *= 2.0;
        r[j] = hi;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        r[j] = mid;
        if f0_of(spec, r) < g0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    r[j] = hi;
    true
}

/// Objective after re-solving `r[j]`, or `+inf` where infeasible.
fn cost_with(spec: &SourceSpec, g0: f64, r: &mut [f64], j: usize) -> f64 {
    if solve_rate(spec, g0, r, j) {
        objective_rates(spec, r)
    } else {
        f64::INFINITY
    }
}

/// Smallest value of `r[k]` for which `r[j]` can still be solved.
fn feasibility_floor(spec: &SourceSpec, g0: f64, r: &[f64], j: usize, k: usize) -> f64 {
    let mut t = r.to_vec();
    let mut feasible = |v: f64| {
        t[k] = v;
        t[j] = f64::INFINITY;
        f0_of(spec, &t) > g0
    };
    if feasible(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, r[k]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + hi) {
            break;
        }
    }
    hi
}

/// Common rate `rho` with `f_0(rho, .., rho) = g0`; assumes `0 < g0 < sup f_0`.
fn symmetric_start(spec: &SourceSpec, g0: f64) -> f64 {
    let big_l = spec.big_l();
    let f0_at = |rho: f64| f_seq(spec, &vec![rho; big_l])[0];
    let mut hi = 1.0;
    while f0_at(hi) < g0 && hi < 1e3 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f0_at(mid) < g0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn golden_min(mut phi: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = phi(c);
    let mut fd = phi(d);
    while (b - a).abs() > tol * (1.0 + a.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = phi(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimiser `r` (full vector) of `sum r + 1/2 log F(r)` subject to `f_0(r) = g0`.
/// Requires `0 < g0 < sup f_0`.
pub(crate) fn minimize_on_boundary(spec: &SourceSpec, g0: f64, cfg: &SolverConfig) -> Vec<f64> {
    let big_l = spec.big_l();
    let mut r = vec![symmetric_start(spec, g0); big_l];
    let mut best = cost_with(spec, g0, &mut r, 0);

    for _ in 0..cfg.max_sweeps {
        let before = best;
        for j in 0..big_l {
            for k in (0..big_l).filter(|&k| k != j) {
                let floor = feasibility_floor(spec, g0, &r, j, k);
                let cur = r[k].max(floor);
                let mut probe = r.clone();
                let mut cost_at = |v: f64| {
                    probe[k] = v;
                    cost_with(spec, g0, &mut probe, j)
                };
                // the cost grows at least linearly for large rates; widen until it turns up
                let mut hi = cur + 1.0;
                let here = cost_at(cur);
                while cost_at(hi) < here && hi < 1e3 {
                    hi = cur + 2.0 * (hi - cur);
                }
                let (v, c) = golden_min(&mut cost_at, floor, hi, cfg.line_tol);
                if c < best {
                    let mut next = r.clone();
                    next[k] = v;
                    if solve_rate(spec, g0, &mut next, j) {
                        best = c;
                        r = next;
                    }
                }
            }
        }
        if before - best < cfg.sweep_tol {
            break;
        }
    }

    project_tail(spec, g0, &mut r);
    r
}

/// A clamped rate can leave the point strictly inside the feasible set; lower
/// rates, last first, until `f_0 = g0`.
fn project_tail(spec: &SourceSpec, g0: f64, r: &mut [f64]) {
    let f0 = |r: &[f64]| f_seq(spec, r)[0];
    for k in (0..r.len()).rev() {
        if f0(r) - g0 <= 0.0 {
            return;
        }
        let saved = r[k];
        r[k] = 0.0;
        if f0(r) >= g0 {
            continue;
        }
        let (mut lo, mut hi) = (0.0, saved);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            r[k] = mid;
            if f0(r) >= g0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        r[k] = hi;
        return;
    }
}
