//! Optimal sum rate `R_sum(D, R_0)`: the minimum of
//! `sum_l r_l + 1/2 log F(r) - R_0 + 1/2 log(sigma_X0^2 / D)` over helper
//! rates on the boundary `f_0(r) = g_0(D, R_0)`.
//!
//! Three routes are provided: a direct numeric minimisation, a parametric
//! solution through the `theta` recursion (needs the variance-ratio
//! condition), and the closed form for the CEO special case.

mod alpha;
mod numeric;
mod parametric;

use serde::Serialize;

pub use alpha::{alpha_from_r, r_from_alpha, zeta, AlphaVector};
pub use numeric::SolverConfig;
pub use parametric::{
    solve_omega_for, theta_seq, variance_ratio_failure, variance_ratio_holds, OMEGA_MAX,
};

use crate::error::{Error, Result};
use crate::recursions::{big_f, f0_sup, g0};
use crate::source::{DistortionBudget, SourceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Numeric,
    Parametric,
    Ceo,
    Oracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Numeric => "numeric",
            Method::Parametric => "parametric",
            Method::Ceo => "ceo",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumRateResult {
    /// Nats.
    pub value: f64,
    pub minimizer_r: Vec<f64>,
    pub method: Method,
    pub omega: Option<f64>,
}

/// `sum_l r_l + 1/2 log F(r) - R_0 + 1/2 log(sigma_X0^2 / D)`.
pub fn sum_rate_objective(spec: &SourceSpec, d: f64, r0_budget: f64, r: &[f64]) -> f64 {
    r.iter().sum::<f64>() + 0.5 * big_f(spec, r).ln() - r0_budget
        + 0.5 * (spec.sigma_x0_sq() / d).ln()
}

/// Validates the inputs and returns `g_0(D, R_0)`; errors when it is out of reach.
fn budget_target(spec: &SourceSpec, d: f64, r0_budget: f64) -> Result<f64> {
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

/// Result for budgets where the primary rate alone meets the distortion.
fn trivial(spec: &SourceSpec, method: Method, omega: Option<f64>) -> SumRateResult {
    SumRateResult {
        value: 0.0,
        minimizer_r: vec![0.0; spec.big_l()],
        method,
        omega,
    }
}

/// Direct constrained minimisation; does not need any condition on the spec.
pub fn numeric_sum_rate(
    spec: &SourceSpec,
    d: f64,
    r0_budget: f64,
    cfg: &SolverConfig,
) -> Result<SumRateResult> {
    let g = budget_target(spec, d, r0_budget)?;
    if g <= 0.0 {
        return Ok(trivial(spec, Method::Numeric, None));
    }
    let r = numeric::minimize_on_boundary(spec, g, cfg);
    Ok(SumRateResult {
        value: sum_rate_objective(spec, d, r0_budget, &r).max(0.0),
        minimizer_r: r,
        method: Method::Numeric,
        omega: None,
    })
}

/// `omega` with `theta_1(omega) = sigma_1^2 g_0(D, R_0)`.
pub fn solve_omega(spec: &SourceSpec, d: f64, r0_budget: f64) -> Result<f64> {
    let g = budget_target(spec, d, r0_budget)?;
    solve_omega_for(spec, spec.sigma_n_sq(1) * g.max(0.0))
}

/// Sum rate from the `theta` recursion. Refuses specs that fail the
/// variance-ratio condition and targets outside the range of `theta_1`.
pub fn parametric_sum_rate(spec: &SourceSpec, d: f64, r0_budget: f64) -> Result<SumRateResult> {
    if let Some(level) = variance_ratio_failure(spec) {
        return Err(Error::VarianceRatioFailed { level });
    }
    let g = budget_target(spec, d, r0_budget)?;
    if g <= 0.0 {
        return Ok(trivial(spec, Method::Parametric, Some(0.0)));
    }
    let target = spec.sigma_n_sq(1) * g;
    let omega = solve_omega_for(spec, target)?;
    let mut theta = theta_seq(spec, omega);
    theta[0] = target;
    let z = zeta(spec, &theta)?;
    let r = r_from_alpha(spec, &AlphaVector(theta))?;
    let value = -0.5 * z - r0_budget + 0.5 * (spec.sigma_x0_sq() / d).ln();
    Ok(SumRateResult {
        value: value.max(0.0),
        minimizer_r: r,
        method: Method::Parametric,
        omega: Some(omega),
    })
}

/// `-(L/2) log(1 - sigma_1^2 g_0 / L) - R_0 + 1/2 log(sigma_X0^2 / D)` for CEO specs.
pub fn ceo_closed_form(spec: &SourceSpec, d: f64, r0_budget: f64) -> Result<f64> {
    Ok(ceo_sum_rate(spec, d, r0_budget)?.value)
}

/// [`ceo_closed_form`] with its symmetric minimiser `r_l = -1/2 log(1 - sigma_1^2 g_0 / L)`.
pub fn ceo_sum_rate(spec: &SourceSpec, d: f64, r0_budget: f64) -> Result<SumRateResult> {
    if !spec.is_ceo() {
        return Err(Error::NotCeo(
            "needs sigma_Z^2 = 0 below the last level and equal helper noise".into(),
        ));
    }
    let g = budget_target(spec, d, r0_budget)?;
    if g <= 0.0 {
        return Ok(trivial(spec, Method::Ceo, None));
    }
    let big_l = spec.big_l() as f64;
    let omega = spec.sigma_n_sq(1) * g / big_l;
    let rate = -0.5 * (-omega).ln_1p();
    let value = big_l * rate - r0_budget + 0.5 * (spec.sigma_x0_sq() / d).ln();
    Ok(SumRateResult {
        value: value.max(0.0),
        minimizer_r: vec![rate; spec.big_l()],
        method: Method::Ceo,
        omega: Some(omega),
    })
}

/// Many-helper limit of the CEO sum rate at `R_0 = 0`:
/// `sigma_1^2 / (2 sigma_X0^2) (sigma_X0^2 / D - 1) + 1/2 log(sigma_X0^2 / D)`.
pub fn ceo_limit(sigma1_sq: f64, sigma_x0_sq: f64, d: f64) -> f64 {
    sigma1_sq / (2.0 * sigma_x0_sq) * (sigma_x0_sq / d - 1.0) + 0.5 * (sigma_x0_sq / d).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursions::f_seq;

    const CEO3: f64 = 0.954_771_4;

    fn ceo3() -> SourceSpec {
        SourceSpec::ceo(3, 1.0, 1.0).unwrap()
    }

    #[test]
    fn no_rate_at_full_distortion() {
        let s = SourceSpec::new(1.0, vec![0.2, 0.5, 1.0], vec![1.0, 0.8, 1.0]).unwrap();
        assert_eq!(sum_rate_objective(&s, 1.0, 0.0, &[0.0; 3]), 0.0);
        let n = numeric_sum_rate(&s, 1.0, 0.0, &SolverConfig::default()).unwrap();
        assert_eq!(n.value, 0.0);
        assert_eq!(n.minimizer_r, vec![0.0; 3]);
        let c = ceo3();
        assert_eq!(parametric_sum_rate(&c, 1.0, 0.0).unwrap().value, 0.0);
        assert_eq!(ceo_closed_form(&c, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(ceo_limit(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn ceo_three_helpers() {
        let s = ceo3();
        let exact = 1.5 * 1.5f64.ln() + 0.5 * 2f64.ln();
        assert!((exact - CEO3).abs() < 1e-6);
        assert!((ceo_closed_form(&s, 0.5, 0.0).unwrap() - exact).abs() < 1e-14);
        let p = parametric_sum_rate(&s, 0.5, 0.0).unwrap();
        assert!((p.value - exact).abs() < 1e-12);
        assert!((p.omega.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let n = numeric_sum_rate(&s, 0.5, 0.0, &SolverConfig::default()).unwrap();
        assert!((n.value - exact).abs() < 1e-9, "{}", n.value);
        let resid = f_seq(&s, &n.minimizer_r)[0] - g0(&s, 0.5, 0.0);
        assert!(resid.abs() <= 1e-9);
    }

    #[test]
    fn ceo_limit_value_and_trend() {
        let lim = ceo_limit(1.0, 1.0, 0.5);
        assert!((lim - (0.5 + 0.5 * 2f64.ln())).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for l in 2..=64 {
            let v = ceo_closed_form(&SourceSpec::ceo(l, 1.0, 1.0).unwrap(), 0.5, 0.0).unwrap();
            assert!(v < prev && v > lim);
            prev = v;
        }
        assert!(prev - lim < 5e-3);
    }

    #[test]
    fn not_ceo() {
        let s = SourceSpec::new(1.0, vec![0.2, 0.5, 1.0], vec![1.0, 0.8, 1.0]).unwrap();
        assert!(matches!(
            ceo_closed_form(&s, 0.5, 0.0),
            Err(Error::NotCeo(_))
        ));
    }

    #[test]
    fn infeasible_budget() {
        let s = ceo3();
        // sup f_0 = 3, so D must exceed 1/4 at R_0 = 0
        assert!(matches!(
            numeric_sum_rate(&s, 0.2, 0.0, &SolverConfig::default()),
            Err(Error::Infeasible { .. })
        ));
        assert!(numeric_sum_rate(&s, 0.2, 0.5, &SolverConfig::default()).is_ok());
    }

    #[test]
    fn numeric_matches_parametric_ts() {
        let s = SourceSpec::new(1.5, vec![0.2, 0.3, 0.6, 1.4], vec![1.0, 1.1, 1.3, 1.4]).unwrap();
        assert!(variance_ratio_holds(&s));
        for (d, r0) in [(0.6, 0.0), (0.4, 0.1), (1.0, 0.05)] {
            let p = match parametric_sum_rate(&s, d, r0) {
                Ok(p) => p,
                Err(Error::OmegaOutOfRange { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let n = numeric_sum_rate(&s, d, r0, &SolverConfig::default()).unwrap();
            assert!(
                (p.value - n.value).abs() < 1e-6,
                "d={d}: {} vs {}",
                p.value,
                n.value
            );
            let resid = f_seq(&s, &p.minimizer_r)[0] - g0(&s, d, r0);
            assert!(resid.abs() < 1e-9);
        }
    }
}
