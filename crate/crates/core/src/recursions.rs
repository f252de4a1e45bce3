//! The `f`, `g` and `f*` recursions and the products `F`, `G` built from them.
//!
//! Rate vectors `r` are helper rates `r_1..r_L` stored 0-based (`r[l - 1]` is
//! `r_l`). Returned sequences are indexed by level: `f[l]` is `f_l`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::source::{RateAllocation, SourceSpec};
use crate::subset::Subset;

/// Default tolerance on the slack `f_0 - g_0` for calling a point a boundary point.
pub const TOL_BOUNDARY: f64 = 1e-9;

/// `(1 - e^{-2 r_l}) / sigma_Nl^2`, the precision helper `l` contributes at rate `r_l`.
#[inline]
pub fn leaf_gain(spec: &SourceSpec, l: usize, rate: f64) -> f64 {
    -(-2.0 * rate).exp_m1() / spec.sigma_n_sq(l)
}

/// `[f_0, f_1, .., f_{L-1}]`, computed from `f_{L-1}` downward.
pub fn f_seq(spec: &SourceSpec, r: &[f64]) -> Vec<f64> {
    let big_l = spec.big_l();
    debug_assert_eq!(r.len(), big_l);
    let mut f = vec![0.0; big_l];
    f[big_l - 1] = leaf_gain(spec, big_l - 1, r[big_l - 2]) + leaf_gain(spec, big_l, r[big_l - 1]);
    for l in (1..big_l - 1).rev() {
        let next = f[l + 1];
        f[l] = next / (1.0 + spec.sigma_z_sq(l + 1) * next) + leaf_gain(spec, l, r[l - 1]);
    }
    f[0] = f[1] / (1.0 + spec.sigma_z_sq(1) * f[1]);
    f
}

/// `[f_0, .., f_L]` with the recursion started one level lower, at
/// `f_L = (e^{2 r_L} - 1) / sigma_L^2`, and every step written with `eps_l sigma_l^2`.
///
/// Agrees with [`f_seq`] on levels `0..L-1` because `eps_L = 1`.
pub fn f_seq_extended(spec: &SourceSpec, r: &[f64]) -> Vec<f64> {
    let big_l = spec.big_l();
    let mut f = vec![0.0; big_l + 1];
    f[big_l] = (2.0 * r[big_l - 1]).exp_m1() / spec.sigma_n_sq(big_l);
    for l in (2..=big_l).rev() {
        let s = spec.eps(l) * spec.sigma_n_sq(l);
        f[l - 1] = f[l] / (1.0 + s * f[l]) + leaf_gain(spec, l - 1, r[l - 2]);
    }
    f[0] = f[1] / (1.0 + spec.eps(1) * spec.sigma_n_sq(1) * f[1]);
    f
}

/// `[f*_1, .., f*_{L-1}]`: the `f` recursion with every helper at infinite rate.
pub fn f_star(spec: &SourceSpec) -> Vec<f64> {
    let big_l = spec.big_l();
    let mut fs = vec![0.0; big_l - 1];
    fs[big_l - 2] = 1.0 / spec.sigma_n_sq(big_l - 1) + 1.0 / spec.sigma_n_sq(big_l);
    for l in (1..big_l - 1).rev() {
        let next = fs[l];
        fs[l - 1] = next / (1.0 + spec.sigma_z_sq(l + 1) * next) + 1.0 / spec.sigma_n_sq(l);
    }
    fs
}

/// Supremum of `f_0` over all rate vectors (not attained).
pub fn f0_sup(spec: &SourceSpec) -> f64 {
    let f1 = f_star(spec)[0];
    f1 / (1.0 + spec.sigma_z_sq(1) * f1)
}

/// `f_0(r_S)`: `f_0` with the rates outside `s` zeroed.
pub fn f0_restricted(spec: &SourceSpec, r: &[f64], s: Subset) -> f64 {
    f_seq(spec, &s.restrict(r))[0]
}

/// `F(r) = prod_{l=1}^{L-1} (1 + sigma_Zl^2 f_l(r))`.
pub fn big_f(spec: &SourceSpec, r: &[f64]) -> f64 {
    product_f(spec, &f_seq(spec, r))
}

fn product_f(spec: &SourceSpec, f: &[f64]) -> f64 {
    (1..spec.big_l())
        .map(|l| 1.0 + spec.sigma_z_sq(l) * f[l])
        .product()
}

/// `F(r_S)`; equals 1 for the empty subset.
pub fn big_f_restricted(spec: &SourceSpec, r: &[f64], s: Subset) -> f64 {
    big_f(spec, &s.restrict(r))
}

/// `g_0(D, r_0) = e^{-2 r_0} / D - 1 / sigma_X0^2`, unclipped.
#[inline]
pub fn g0(spec: &SourceSpec, d: f64, r0: f64) -> f64 {
    (-2.0 * r0).exp() / d - 1.0 / spec.sigma_x0_sq()
}

/// `[g_0, g_1, .., g_{L-1}]`, every entry clipped at zero.
///
/// Only `r[0..L-2]` is read. Fails with [`Error::GPole`] when a denominator
/// `1 - sigma_Z(l+1)^2 [.]^+` is not positive.
pub fn g_seq(spec: &SourceSpec, d: f64, r0: f64, r: &[f64]) -> Result<Vec<f64>> {
    let big_l = spec.big_l();
    debug_assert!(r.len() + 2 >= big_l);
    let mut g = vec![0.0; big_l];
    let raw0 = g0(spec, d, r0);
    g[0] = raw0.max(0.0);
    g[1] = pole_step(spec, 0, g[0])?;
    for l in 1..big_l - 1 {
        let inner = (g[l] - leaf_gain(spec, l, r[l - 1])).max(0.0);
        g[l + 1] = pole_step(spec, l, inner)?;
    }
    Ok(g)
}

/// `a / (1 - sigma_Z(level+1)^2 a)` for `a >= 0`.
#[inline]
fn pole_step(spec: &SourceSpec, level: usize, a: f64) -> Result<f64> {
    let denominator = 1.0 - spec.sigma_z_sq(level + 1) * a;
    if denominator <= 0.0 {
        return Err(Error::GPole { level, denominator });
    }
    Ok(a / denominator)
}

/// `G(D, r_0, r^{L-2}) = prod_{l=1}^{L-1} (1 + sigma_Zl^2 g_l)`.
pub fn big_g(spec: &SourceSpec, d: f64, r0: f64, r: &[f64]) -> Result<f64> {
    let g = g_seq(spec, d, r0, r)?;
    Ok((1..spec.big_l())
        .map(|l| 1.0 + spec.sigma_z_sq(l) * g[l])
        .product())
}

/// `[eta_0, .., eta_{L-2}]` with `eta_0 = g_0` and
/// `eta_l = [eta_{l-1}]^+ / (1 - sigma_Zl^2 [eta_{l-1}]^+) - (1 - e^{-2 r_l}) / sigma_Nl^2`.
pub fn eta_seq(spec: &SourceSpec, d: f64, r0: f64, r: &[f64]) -> Result<Vec<f64>> {
    let big_l = spec.big_l();
    let mut eta = Vec::with_capacity(big_l - 1);
    eta.push(g0(spec, d, r0));
    for l in 1..big_l - 1 {
        let a = eta[l - 1].max(0.0);
        let denominator = 1.0 - spec.sigma_z_sq(l) * a;
        if denominator <= 0.0 {
            return Err(Error::GPole {
                level: l - 1,
                denominator,
            });
        }
        eta.push(a / denominator - leaf_gain(spec, l, r[l - 1]));
    }
    Ok(eta)
}

/// `G` through the eta sequence: `log G = sum_k -log(1 - sigma_Z(k+1)^2 [eta_k]^+)`.
pub fn big_g_via_eta(spec: &SourceSpec, d: f64, r0: f64, r: &[f64]) -> Result<f64> {
    let eta = eta_seq(spec, d, r0, r)?;
    let mut log_g = 0.0;
    for (k, &e) in eta.iter().enumerate() {
        let denominator = 1.0 - spec.sigma_z_sq(k + 1) * e.max(0.0);
        if denominator <= 0.0 {
            return Err(Error::GPole {
                level: k,
                denominator,
            });
        }
        log_g -= denominator.ln();
    }
    Ok(log_g.exp())
}

/// Bundle of the recursion outputs at one point.
#[derive(Debug, Clone, Serialize)]
pub struct FgReport {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub big_f: f64,
    pub big_g: f64,
}

pub fn fg_report(spec: &SourceSpec, d: f64, alloc: &RateAllocation) -> Result<FgReport> {
    let f = f_seq(spec, &alloc.r);
    let g = g_seq(spec, d, alloc.r0, &alloc.r)?;
    let big_f = product_f(spec, &f);
    let big_g = (1..spec.big_l())
        .map(|l| 1.0 + spec.sigma_z_sq(l) * g[l])
        .product();
    Ok(FgReport { f, g, big_f, big_g })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Outside,
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionClass {
    pub kind: RegionKind,
    /// `f_0(r) - g_0(D, r_0)`, with `g_0` unclipped.
    pub slack: f64,
}

/// Places `(r_0, r)` relative to the set where `f_0(r) >= g_0(D, r_0)`.
pub fn classify(spec: &SourceSpec, d: f64, alloc: &RateAllocation, tol: f64) -> RegionClass {
    let slack = f_seq(spec, &alloc.r)[0] - g0(spec, d, alloc.r0);
    let kind = if slack.abs() <= tol {
        RegionKind::Boundary
    } else if slack > 0.0 {
        RegionKind::Interior
    } else {
        RegionKind::Outside
    };
    RegionClass { kind, slack }
}

/// Smallest `r_0 >= 0` with `(r_0, r)` in the feasible set; on the boundary unless clamped.
pub fn boundary_r0(spec: &SourceSpec, d: f64, r: &[f64]) -> f64 {
    let f0 = f_seq(spec, r)[0];
    (-0.5 * (d * (f0 + 1.0 / spec.sigma_x0_sq())).ln()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l3() -> SourceSpec {
        SourceSpec::new(1.0, vec![0.1, 0.2, 1.0], vec![1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn zero_rates_zero_f() {
        let s = l3();
        assert!(f_seq(&s, &[0.0; 3]).iter().all(|&v| v == 0.0));
        assert_eq!(big_f(&s, &[0.0; 3]), 1.0);
        assert_eq!(big_f_restricted(&s, &[0.7, 0.2, 0.3], Subset::EMPTY), 1.0);
    }

    #[test]
    fn l3_hand_values() {
        // f_2 = 2(1 - e^{-1}), f_1 = f_2/(1 + 0.2 f_2) + (1 - e^{-1}), f_0 = f_1/(1 + 0.1 f_1)
        let s = l3();
        let w = 1.0 - (-1.0f64).exp();
        let f2 = 2.0 * w;
        let f1 = f2 / (1.0 + 0.2 * f2) + w;
        let f0 = f1 / (1.0 + 0.1 * f1);
        let f = f_seq(&s, &[0.5, 0.5, 0.5]);
        assert!((f[2] - f2).abs() < 1e-15);
        assert!((f[1] - f1).abs() < 1e-15);
        assert!((f[0] - f0).abs() < 1e-15);
        let ext = f_seq_extended(&s, &[0.5, 0.5, 0.5]);
        assert!((ext[0] - f0).abs() < 1e-12);
        assert!((ext[3] - (1.0f64).exp_m1()).abs() < 1e-15);
    }

    #[test]
    fn f_star_values() {
        let s = l3();
        let fs = f_star(&s);
        assert_eq!(fs[1], 2.0);
        assert!((fs[0] - (2.0 / 1.4 + 1.0)).abs() < 1e-15);
        let far = f_seq(&s, &[50.0, 50.0, 50.0]);
        assert!((far[1] - fs[0]).abs() < 1e-10);
        assert!((far[2] - fs[1]).abs() < 1e-10);

        let s2 = SourceSpec::new(1.0, vec![0.3, 2.0], vec![0.5, 2.0]).unwrap();
        assert_eq!(f_star(&s2), vec![1.0 / 0.5 + 1.0 / 2.0]);
    }

    #[test]
    fn g_zero_forcing() {
        let s = l3();
        let g = g_seq(&s, 1.0, 0.0, &[0.4, 0.1, 0.0]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        assert_eq!(big_g(&s, 1.0, 0.0, &[0.4, 0.1, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn g_ci_is_clipped_subtraction() {
        let s = SourceSpec::ci(4, vec![1.0, 2.0, 0.5, 1.5], 1.0).unwrap();
        let r = [0.2, 0.1, 0.3, 0.0];
        let (d, r0) = (0.3, 0.05);
        let g = g_seq(&s, d, r0, &r).unwrap();
        let mut expect = vec![g0(&s, d, r0).max(0.0)];
        expect.push(expect[0]);
        for l in 1..3 {
            let prev = expect[l];
            expect.push((prev - leaf_gain(&s, l, r[l - 1])).max(0.0));
        }
        for (a, b) in g.iter().zip(&expect) {
            assert_eq!(a, b);
        }
        assert_eq!(big_g(&s, d, r0, &r).unwrap(), 1.0);
    }

    #[test]
    fn g_matches_eta_path() {
        let s = l3();
        let g = g_seq(&s, 0.5, 0.1, &[0.3]).unwrap();
        assert!(g.iter().all(|v| v.is_finite()));
        let a = big_g(&s, 0.5, 0.1, &[0.3]).unwrap();
        let b = big_g_via_eta(&s, 0.5, 0.1, &[0.3]).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn g_pole_is_reported() {
        // sigma_Z1^2 g_0 >= 1 once D is tiny.
        let s = SourceSpec::new(1.0, vec![2.0, 1.0], vec![1.0, 1.0]).unwrap();
        let e = g_seq(&s, 0.01, 0.0, &[]).unwrap_err();
        assert!(matches!(e, Error::GPole { level: 0, .. }));
        assert!(big_g_via_eta(&s, 0.01, 0.0, &[]).is_err());
    }

    #[test]
    fn classify_examples() {
        let s = l3();
        let c = classify(&s, 1.0, &RateAllocation::zero(3), TOL_BOUNDARY);
        assert_eq!(c.kind, RegionKind::Boundary);
        assert_eq!(c.slack, 0.0);
        let c = classify(
            &s,
            1.0,
            &RateAllocation::new(0.0, vec![1.0; 3]),
            TOL_BOUNDARY,
        );
        assert_eq!(c.kind, RegionKind::Interior);
        let c = classify(&s, 0.5, &RateAllocation::zero(3), TOL_BOUNDARY);
        assert_eq!(c.kind, RegionKind::Outside);
        assert_eq!(c.slack, -1.0);
    }

    #[test]
    fn boundary_r0_examples() {
        let s = l3();
        assert_eq!(boundary_r0(&s, 1.0, &[0.0; 3]), 0.0);
        let r = [0.3, 0.2, 0.1];
        let r0 = boundary_r0(&s, 0.4, &r);
        assert!(r0 > 0.0);
        let c = classify(&s, 0.4, &RateAllocation::new(r0, r.to_vec()), TOL_BOUNDARY);
        assert_eq!(c.kind, RegionKind::Boundary);
    }

    #[test]
    fn boundary_r0_matches_bisection() {
        let s = SourceSpec::ci(2, vec![1.0, 1.0], 1.0).unwrap();
        let r = [0.4, 0.6];
        let d = 0.5;
        // slack is increasing in r_0; bisect for the zero
        let f0 = f_seq(&s, &r)[0];
        let (mut lo, mut hi) = (0.0f64, 5.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f0 - ((-2.0 * mid).exp() / d - 1.0) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((boundary_r0(&s, d, &r) - 0.5 * (lo + hi)).abs() < 1e-12);
    }
}
