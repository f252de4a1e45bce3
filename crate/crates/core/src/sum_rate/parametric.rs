//! Closed-form stationary point of `zeta` parametrised by `omega = alpha_L`.

use crate::error::{Error, Result};
use crate::source::SourceSpec;

/// Upper end of the `omega` search interval.
pub const OMEGA_MAX: f64 = 1.0 - 1e-12;

/// `[theta_1, .., theta_L]` with `theta_L = omega`.
pub fn theta_seq(spec: &SourceSpec, omega: f64) -> Vec<f64> {
    let big_l = spec.big_l();
    let mut th = vec![0.0; big_l];
    th[big_l - 1] = omega;
    let c = (2.0 * omega - 1.0) / spec.tau(big_l) + 1.0;
    th[big_l - 2] = c / (1.0 + spec.eps(big_l - 1) * c);
    for l in (2..big_l).rev() {
        let c = 1.0 + th[l] / spec.tau(l + 1);
        let b = (2.0 * th[l - 1] - c / (1.0 + spec.eps(l) * c) + spec.tau(l)) / spec.tau(l);
        th[l - 2] = b / (1.0 + spec.eps(l - 1) * b);
    }
    th
}

/// First level at which the variance-ratio condition fails, if any.
pub fn variance_ratio_failure(spec: &SourceSpec) -> Option<usize> {
    let big_l = spec.big_l();
    if spec.tau(big_l) < 1.0 {
        return Some(big_l);
    }
    (2..big_l).find(|&l| spec.tau(l) < 1.0 / (1.0 + spec.eps(l)))
}

/// `tau_L >= 1` and `tau_l >= 1 / (1 + eps_l)` for `2 <= l <= L-1`.
pub fn variance_ratio_holds(spec: &SourceSpec) -> bool {
    variance_ratio_failure(spec).is_none()
}

/// Solves `theta_1(omega) = target` by bisection over `[0, OMEGA_MAX]`.
pub fn solve_omega_for(spec: &SourceSpec, target: f64) -> Result<f64> {
    if let Some(level) = variance_ratio_failure(spec) {
        return Err(Error::VarianceRatioFailed { level });
    }
    let theta1 = |w: f64| theta_seq(spec, w)[0];
    let lo_val = theta1(0.0);
    let hi_val = theta1(OMEGA_MAX);
    if !(target >= lo_val && target <= hi_val) {
        return Err(Error::OmegaOutOfRange {
            target,
            lo: lo_val,
            hi: hi_val,
        });
    }
    if target == lo_val {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, OMEGA_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if theta1(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let (wl, wh) = ((theta1(lo) - target).abs(), (theta1(hi) - target).abs());
    let w = if wl <= wh { lo } else { hi };
    let resid = wl.min(wh);
    if resid > 1e-12 * (1.0 + target.abs()) {
        return Err(Error::Consistency(format!(
            "omega bisection stalled with residual {resid:e}"
        )));
    }
    Ok(w)
}
