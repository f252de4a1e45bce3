//! Tree-structured Gaussian sources.
//!
//! The primary source `X_0` feeds a chain `Y_l = Y_{l-1} + Z_l` (with
//! `Y_0 = X_0`) and helper `l` observes `X_l = Y_l + N_l`. The last helper sits
//! on the trunk itself, `X_L = Y_L`, so `N_L = Z_L` and its noise variance is
//! the trunk increment variance.
//!
//! Helper indices are 1-based in every accessor below, matching the usual
//! `l = 1..L` labelling; the backing vectors are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated tree-structured Gaussian source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    sigma_x0_sq: f64,
    sigma_z_sq: Vec<f64>,
    sigma_n_sq: Vec<f64>,
    eps: Vec<f64>,
    tau: Vec<f64>,
}

/// On-disk JSON form, e.g.
/// `{"L":3,"sigma_x0_sq":1.0,"sigma_z_sq":[0.1,0.2,1.0],"sigma_n_sq":[1.0,1.0,1.0]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    #[serde(rename = "L")]
    pub big_l: usize,
    pub sigma_x0_sq: f64,
    pub sigma_z_sq: Vec<f64>,
    pub sigma_n_sq: Vec<f64>,
}

fn bad(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidSpec {
        field: field.into(),
        reason: reason.into(),
    }
}

impl SourceSpec {
    /// Checks every structural constraint and fills in the derived ratios
    /// `eps_l = sigma_Zl^2 / sigma_Nl^2` and `tau_l = sigma_Nl^2 / sigma_N(l-1)^2`.
    pub fn validate(raw: RawSpec) -> Result<Self> {
        let l = raw.big_l;
        if l < 2 {
            return Err(bad("L", format!("need at least 2 helpers, got {l}")));
        }
        if !(raw.sigma_x0_sq.is_finite() && raw.sigma_x0_sq > 0.0) {
            return Err(bad("sigma_x0_sq", "must be a positive finite variance"));
        }
        if raw.sigma_z_sq.len() != l {
            return Err(bad(
                "sigma_z_sq",
                format!("expected {l} entries, got {}", raw.sigma_z_sq.len()),
            ));
        }
        if raw.sigma_n_sq.len() != l {
            return Err(bad(
                "sigma_n_sq",
                format!("expected {l} entries, got {}", raw.sigma_n_sq.len()),
            ));
        }
        for (i, &v) in raw.sigma_n_sq.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(
                    format!("sigma_n_sq[{i}]"),
                    "must be a positive finite variance",
                ));
            }
        }
        for (i, &v) in raw.sigma_z_sq.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(
                    format!("sigma_z_sq[{i}]"),
                    "must be a nonnegative finite variance",
                ));
            }
        }
        if raw.sigma_z_sq[l - 1] != raw.sigma_n_sq[l - 1] {
            return Err(bad(
                format!("sigma_z_sq[{}]", l - 1),
                format!(
                    "last helper lies on the trunk, so sigma_z_sq[{0}] must equal sigma_n_sq[{0}] ({1} != {2})",
                    l - 1,
                    raw.sigma_z_sq[l - 1],
                    raw.sigma_n_sq[l - 1]
                ),
            ));
        }
        let eps = raw
            .sigma_z_sq
            .iter()
            .zip(&raw.sigma_n_sq)
            .map(|(z, n)| z / n)
            .collect();
        let tau = raw.sigma_n_sq.windows(2).map(|w| w[1] / w[0]).collect();
        Ok(Self {
            sigma_x0_sq: raw.sigma_x0_sq,
            sigma_z_sq: raw.sigma_z_sq,
            sigma_n_sq: raw.sigma_n_sq,
            eps,
            tau,
        })
    }

    pub fn new(sigma_x0_sq: f64, sigma_z_sq: Vec<f64>, sigma_n_sq: Vec<f64>) -> Result<Self> {
        Self::validate(RawSpec {
            big_l: sigma_n_sq.len(),
            sigma_x0_sq,
            sigma_z_sq,
            sigma_n_sq,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| bad("<json>", e.to_string()))?;
        Self::validate(raw)
    }

    pub fn to_raw(&self) -> RawSpec {
        RawSpec {
            big_l: self.big_l(),
            sigma_x0_sq: self.sigma_x0_sq,
            sigma_z_sq: self.sigma_z_sq.clone(),
            sigma_n_sq: self.sigma_n_sq.clone(),
        }
    }

    /// CEO source: every helper sees `X_0` through independent noise of variance `sigma_sq`.
    pub fn ceo(l_count: usize, sigma_sq: f64, sigma_x0_sq: f64) -> Result<Self> {
        if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
            return Err(bad("sigma_sq", "must be a positive finite variance"));
        }
        let mut z = vec![0.0; l_count];
        if let Some(last) = z.last_mut() {
            *last = sigma_sq;
        }
        Self::validate(RawSpec {
            big_l: l_count,
            sigma_x0_sq,
            sigma_z_sq: z,
            sigma_n_sq: vec![sigma_sq; l_count],
        })
    }

    /// Conditionally-independent source: all trunk increments before the last vanish.
    pub fn ci(l_count: usize, sigma_n_sq: Vec<f64>, sigma_x0_sq: f64) -> Result<Self> {
        if sigma_n_sq.len() != l_count {
            return Err(bad(
                "sigma_n_sq",
                format!("expected {l_count} entries, got {}", sigma_n_sq.len()),
            ));
        }
        let mut z = vec![0.0; l_count];
        if let (Some(last), Some(&n)) = (z.last_mut(), sigma_n_sq.last()) {
            *last = n;
        }
        Self::validate(RawSpec {
            big_l: l_count,
            sigma_x0_sq,
            sigma_z_sq: z,
            sigma_n_sq,
        })
    }

    /// Number of helpers `L`.
    #[inline]
    pub fn big_l(&self) -> usize {
        self.sigma_n_sq.len()
    }

    #[inline]
    pub fn sigma_x0_sq(&self) -> f64 {
        self.sigma_x0_sq
    }

    /// `sigma_Zl^2`, 1-based.
    #[inline]
    pub fn sigma_z_sq(&self, l: usize) -> f64 {
        self.sigma_z_sq[l - 1]
    }

    /// `sigma_Nl^2`, 1-based.
    #[inline]
    pub fn sigma_n_sq(&self, l: usize) -> f64 {
        self.sigma_n_sq[l - 1]
    }

    /// `eps_l`, 1-based; `eps_L == 1` always.
    #[inline]
    pub fn eps(&self, l: usize) -> f64 {
        self.eps[l - 1]
    }

    /// `tau_l` for `l = 2..=L`.
    #[inline]
    pub fn tau(&self, l: usize) -> f64 {
        self.tau[l - 2]
    }

    pub fn sigma_z_sq_all(&self) -> &[f64] {
        &self.sigma_z_sq
    }

    pub fn sigma_n_sq_all(&self) -> &[f64] {
        &self.sigma_n_sq
    }

    pub fn eps_all(&self) -> &[f64] {
        &self.eps
    }

    /// `[tau_2, .., tau_L]`.
    pub fn tau_all(&self) -> &[f64] {
        &self.tau
    }

    /// True when the source is the CEO special case (`eps_l = 0` for `l < L`, all `tau_l = 1`).
    pub fn is_ceo(&self) -> bool {
        let l = self.big_l();
        self.eps[..l - 1].iter().all(|&e| e == 0.0) && self.tau.iter().all(|&t| t == 1.0)
    }
}

/// Auxiliary rates `(r_0, r_1..r_L)` in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateAllocation {
    pub r0: f64,
    pub r: Vec<f64>,
}

impl RateAllocation {
    pub fn new(r0: f64, r: Vec<f64>) -> Self {
        Self { r0, r }
    }

    pub fn zero(big_l: usize) -> Self {
        Self {
            r0: 0.0,
            r: vec![0.0; big_l],
        }
    }

    pub fn check(&self, spec: &SourceSpec) -> Result<()> {
        if self.r.len() != spec.big_l() {
            return Err(Error::arg(
                "alloc",
                format!(
                    "expected {} helper rates, got {}",
                    spec.big_l(),
                    self.r.len()
                ),
            ));
        }
        if !(self.r0.is_finite() && self.r0 >= 0.0) {
            return Err(Error::arg("alloc.r0", "must be finite and nonnegative"));
        }
        if let Some(i) = self.r.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::arg(
                "alloc.r",
                format!("entry {i} must be finite and nonnegative"),
            ));
        }
        Ok(())
    }
}

/// Target mean-square distortion, `0 < D <= sigma_X0^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionBudget(f64);

impl DistortionBudget {
    pub fn new(spec: &SourceSpec, d: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::arg("d", "distortion must be positive"));
        }
        if d > spec.sigma_x0_sq() {
            return Err(Error::arg(
                "d",
                format!(
                    "distortion {d} exceeds sigma_x0_sq = {}",
                    spec.sigma_x0_sq()
                ),
            ));
        }
        Ok(Self(d))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}
