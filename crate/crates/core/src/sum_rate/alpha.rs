//! Change of variables `alpha_l = sigma_l^2 f_l / (1 + eps_l sigma_l^2 f_l)`,
//! under which the sum-rate objective becomes `-zeta / 2` plus constants and
//! `zeta` is concave.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::recursions::f_seq_extended;
use crate::source::SourceSpec;

/// `alpha_1..alpha_L`, stored 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaVector(pub Vec<f64>);

impl AlphaVector {
    /// `alpha_l`, 1-based.
    #[inline]
    pub fn get(&self, l: usize) -> f64 {
        self.0[l - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Checks `0 <= alpha_l < 1/eps_l` and, for `l = 2..L`,
    /// `tau_l (A_{l-1} - 1) < alpha_l <= tau_l A_{l-1}` with `A = alpha / (1 - eps alpha)`.
    pub fn check(&self, spec: &SourceSpec) -> Result<()> {
        let big_l = spec.big_l();
        if self.0.len() != big_l {
            return Err(Error::arg("alpha", format!("expected {big_l} entries")));
        }
        for l in 1..=big_l {
            let a = self.get(l);
            if !(a.is_finite() && a >= 0.0 && spec.eps(l) * a < 1.0) {
                return Err(Error::InfeasibleAlpha {
                    index: l,
                    reason: format!("alpha = {a} outside [0, 1/eps)"),
                });
            }
        }
        for l in 2..=big_l {
            let prev = scaled(spec, l - 1, self.get(l - 1));
            let t = spec.tau(l);
            let a = self.get(l);
            if !(a <= t * prev && a > t * (prev - 1.0)) {
                return Err(Error::InfeasibleAlpha {
                    index: l,
                    reason: format!("alpha = {a} outside ({}, {}]", t * (prev - 1.0), t * prev),
                });
            }
        }
        Ok(())
    }
}

/// `alpha / (1 - eps_l alpha)`, the inverse of `x -> x / (1 + eps_l x)`.
#[inline]
pub(crate) fn scaled(spec: &SourceSpec, l: usize, a: f64) -> f64 {
    a / (1.0 - spec.eps(l) * a)
}

/// Maps helper rates to `alpha`.
pub fn alpha_from_r(spec: &SourceSpec, r: &[f64]) -> AlphaVector {
    let f = f_seq_extended(spec, r);
    let big_l = spec.big_l();
    let mut alpha: Vec<f64> = (1..big_l)
        .map(|l| {
            let x = spec.sigma_n_sq(l) * f[l];
            x / (1.0 + spec.eps(l) * x)
        })
        .collect();
    alpha.push(-(-2.0 * r[big_l - 1]).exp_m1());
    AlphaVector(alpha)
}

/// `e^{-2 r_l}` for `l = 1..L` given `alpha`; the `l < L` entries are
/// `1 - A_l + alpha_{l+1} / tau_{l+1}` and the last is `1 - alpha_L`.
fn rate_factors(spec: &SourceSpec, alpha: &[f64]) -> Vec<f64> {
    let big_l = spec.big_l();
    let mut e: Vec<f64> = (1..big_l)
        .map(|l| 1.0 - scaled(spec, l, alpha[l - 1]) + alpha[l] / spec.tau(l + 1))
        .collect();
    e.push(1.0 - alpha[big_l - 1]);
    e
}

/// Inverse of [`alpha_from_r`].
pub fn r_from_alpha(spec: &SourceSpec, alpha: &AlphaVector) -> Result<Vec<f64>> {
    alpha.check(spec)?;
    rate_factors(spec, &alpha.0)
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            if e <= 0.0 {
                Err(Error::InfeasibleAlpha {
                    index: k + 1,
                    reason: "implied rate is infinite".into(),
                })
            } else {
                // rounding can push a zero rate a hair negative
                Ok((-0.5 * e.ln()).max(0.0))
            }
        })
        .collect()
}

/// `zeta(alpha) = sum_{l<L} [log(1 - A_l + alpha_{l+1}/tau_{l+1}) + log(1 - eps_l alpha_l)] + log(1 - alpha_L)`.
///
/// Equals `-2 sum_l r_l - log F(r)` at `alpha = alpha_from_r(r)`. Only the log
/// arguments are checked, so this also evaluates on the concave extension
/// beyond the `r >= 0` face.
pub fn zeta(spec: &SourceSpec, alpha: &[f64]) -> Result<f64> {
    let big_l = spec.big_l();
    if alpha.len() != big_l {
        return Err(Error::arg("alpha", format!("expected {big_l} entries")));
    }
    let mut total = 0.0;
    for (k, e) in rate_factors(spec, alpha).into_iter().enumerate() {
        let l = k + 1;
        let damp = if l < big_l {
            1.0 - spec.eps(l) * alpha[k]
        } else {
            1.0
        };
        if !(e > 0.0 && damp > 0.0) {
            return Err(Error::InfeasibleAlpha {
                index: l,
                reason: "log argument is not positive".into(),
            });
        }
        total += e.ln() + damp.ln();
    }
    Ok(total)
}
