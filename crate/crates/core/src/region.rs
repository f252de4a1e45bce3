//! Subset rate functions, co-polymatroid vertices and membership certificates.
//!
//! For a fixed auxiliary allocation `(r_0, r)` the outer bound is cut out by
//! `sum_{i in S} R_i >= J_S` and the inner bound by `sum_{i in S} R_i >= K_S`,
//! for every helper subset `S`. Both set functions are co-polymatroids, so each
//! bound polytope has `L!` corner points, one per ordering of the helpers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::recursions::{big_f, big_f_restricted, big_g, boundary_r0, f0_restricted, f_seq};
use crate::source::{RateAllocation, SourceSpec};
use crate::subset::{Subset, MAX_TABLE_HELPERS};

/// Slack allowed when deciding whether a rate vector satisfies a subset constraint.
pub const CERT_TOL: f64 = 1e-10;

/// Which family of subset constraints to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// `J_S`, depends on the distortion target.
    Outer,
    /// `K_S`, depends on the helper rates only.
    Inner,
}

fn sum_over(s: Subset, r: &[f64]) -> f64 {
    s.members().map(|i| r[i - 1]).sum()
}

/// Log of `G / F(r_{S^c}) * sigma_X0^2 / ({1 + sigma_X0^2 f_0(r_{S^c})} D)`.
fn log_outer_core(spec: &SourceSpec, d: f64, alloc: &RateAllocation, s: Subset) -> Result<f64> {
    let sc = s.complement(spec.big_l());
    let g = big_g(spec, d, alloc.r0, &alloc.r)?;
    let fc = big_f_restricted(spec, &alloc.r, sc);
    let f0c = f0_restricted(spec, &alloc.r, sc);
    let sx = spec.sigma_x0_sq();
    Ok(g.ln() - fc.ln() + sx.ln() - (1.0 + sx * f0c).ln() - d.ln())
}

/// `J_S(D, r_0, r^{L-2}, r_S | r_{S^c})`.
pub fn j_subset(spec: &SourceSpec, d: f64, alloc: &RateAllocation, s: Subset) -> Result<f64> {
    let core = log_outer_core(spec, d, alloc, s)?;
    Ok((0.5 * (core - 2.0 * alloc.r0) + sum_over(s, &alloc.r)).max(0.0))
}

/// `K_S(r_S | r_{S^c})`.
pub fn k_subset(spec: &SourceSpec, r: &[f64], s: Subset) -> f64 {
    let sc = s.complement(spec.big_l());
    let sx = spec.sigma_x0_sq();
    let f_full = f_seq(spec, r)[0];
    let f_c = f0_restricted(spec, r, sc);
    let log_ratio = big_f(spec, r).ln() - big_f_restricted(spec, r, sc).ln()
        + (1.0 + sx * f_full).ln()
        - (1.0 + sx * f_c).ln();
    (0.5 * log_ratio + sum_over(s, r)).max(0.0)
}

/// The relaxed outer function with an explicit primary-rate budget `r0_cap`:
/// `[ 1/2 log^+[G sigma_X0^2 / (F(r_{S^c}) {1 + sigma_X0^2 f_0(r_{S^c})} D)] + sum_{i=1}^L r_i - R_0 ]^+`.
///
/// With `r0_cap = alloc.r0` this dominates [`j_subset`].
pub fn hat_j_subset(
    spec: &SourceSpec,
    d: f64,
    alloc: &RateAllocation,
    s: Subset,
    r0_cap: f64,
) -> Result<f64> {
    let core = log_outer_core(spec, d, alloc, s)?;
    let total: f64 = alloc.r.iter().sum();
    Ok(((0.5 * core).max(0.0) + total - r0_cap).max(0.0))
}

/// A full table `S -> rho_S` over every helper subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetRates {
    big_l: usize,
    values: Vec<f64>,
}

impl SubsetRates {
    /// Wraps a raw table indexed by bitmask. `values.len()` must be `2^L`.
    pub fn from_values(big_l: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1usize << big_l {
            return Err(Error::arg(
                "values",
                format!("expected {} entries, got {}", 1usize << big_l, values.len()),
            ));
        }
        Ok(Self { big_l, values })
    }

    pub fn big_l(&self) -> usize {
        self.big_l
    }

    pub fn get(&self, s: Subset) -> f64 {
        self.values[s.0 as usize]
    }

    pub fn set(&mut self, s: Subset, v: f64) {
        self.values[s.0 as usize] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Tabulates `J_S` (outer, needs `d`) or `K_S` (inner) over all `2^L` subsets.
pub fn subset_rates(
    spec: &SourceSpec,
    d: Option<f64>,
    alloc: &RateAllocation,
    kind: BoundKind,
) -> Result<SubsetRates> {
    let big_l = spec.big_l();
    if big_l > MAX_TABLE_HELPERS {
        return Err(Error::TooLarge(big_l));
    }
    let values = match kind {
        BoundKind::Inner => Subset::all(big_l)
            .map(|s| k_subset(spec, &alloc.r, s))
            .collect(),
        BoundKind::Outer => {
            let d = d.ok_or_else(|| Error::arg("d", "outer bound needs a distortion target"))?;
            Subset::all(big_l)
                .map(|s| j_subset(spec, d, alloc, s))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(SubsetRates { big_l, values })
}

/// An ordering `pi(1), .., pi(L)` of the helpers, stored 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n + 1];
        for &i in &order {
            if i == 0 || i > n || seen[i] {
                return Err(Error::arg(
                    "pi",
                    format!("{order:?} is not a permutation of 1..={n}"),
                ));
            }
            seen[i] = true;
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((1..=n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// All `n!` orderings in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur = (1..=n).collect::<Vec<_>>();
        loop {
            out.push(Permutation(cur.clone()));
            // next lexicographic permutation
            let Some(k) = (0..n.saturating_sub(1))
                .rev()
                .find(|&k| cur[k] < cur[k + 1])
            else {
                break;
            };
            let j = (k + 1..n).rev().find(|&j| cur[j] > cur[k]).unwrap();
            cur.swap(k, j);
            cur[k + 1..].reverse();
        }
        out
    }
}

impl std::fmt::Display for Permutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("-"))
    }
}

/// Noise floor below which a negative vertex component is treated as zero.
const VERTEX_NEG_TOL: f64 = 1e-12;

/// Corner of `{R : sum_{i in S} R_i >= rho_S}` for ordering `pi`:
/// `R_{pi(i)} = rho_{pi(i..L)} - rho_{pi(i+1..L)}`. Returned indexed by helper.
pub fn vertex(rates: &SubsetRates, pi: &Permutation) -> Result<Vec<f64>> {
    let big_l = rates.big_l();
    if pi.as_slice().len() != big_l {
        return Err(Error::arg("pi", "length differs from the subset table"));
    }
    let mut out = vec![0.0; big_l];
    let mut tail = Subset::EMPTY;
    let mut prev = rates.get(tail);
    for &helper in pi.as_slice().iter().rev() {
        tail = tail.union(Subset::singleton(helper));
        let cur = rates.get(tail);
        let mut comp = cur - prev;
        if comp < 0.0 {
            if comp < -VERTEX_NEG_TOL * (1.0 + cur.abs()) {
                return Err(Error::Consistency(format!(
                    "vertex component for helper {helper} is {comp:e}; subset rates not monotone"
                )));
            }
            comp = 0.0;
        }
        out[helper - 1] = comp;
        prev = cur;
    }
    Ok(out)
}

/// Candidate rate vector `(R_0, R_1..R_L)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPoint {
    pub r0_rate: f64,
    pub helper_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub holds: bool,
    /// `R_0 - r_0`.
    pub r0_slack: f64,
    /// Subset with the smallest `sum_{i in S} R_i - rho_S`.
    pub worst_subset: Subset,
    pub worst_slack: f64,
}

impl Certificate {
    pub fn min_slack(&self) -> f64 {
        self.r0_slack.min(self.worst_slack)
    }
}

impl Serialize for Subset {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_seq(self.members())
    }
}

/// Checks `candidate` against the constraint set generated by `alloc`.
pub fn certificate_check(
    spec: &SourceSpec,
    d: f64,
    candidate: &RegionPoint,
    alloc: &RateAllocation,
    kind: BoundKind,
) -> Result<Certificate> {
    let rates = subset_rates(spec, Some(d), alloc, kind)?;
    Ok(certificate_against(&rates, candidate, alloc.r0))
}

/// [`certificate_check`] with a precomputed table.
pub fn certificate_against(rates: &SubsetRates, candidate: &RegionPoint, r0: f64) -> Certificate {
    let mut worst_subset = Subset::EMPTY;
    let mut worst_slack = f64::INFINITY;
    for s in Subset::all(rates.big_l()) {
        let slack = sum_over(s, &candidate.helper_rates) - rates.get(s);
        if slack < worst_slack {
            worst_slack = slack;
            worst_subset = s;
        }
    }
    let r0_slack = candidate.r0_rate - r0;
    Certificate {
        holds: r0_slack >= -CERT_TOL && worst_slack >= -CERT_TOL,
        r0_slack,
        worst_subset,
        worst_slack,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Grid points per helper axis.
    pub grid_points: usize,
    pub max_rate: f64,
    pub descent_steps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_points: 9,
            max_rate: 3.0,
            descent_steps: 200,
        }
    }
}

/// Looks for an allocation whose bound contains `candidate`.
///
/// Each trial `r` is paired with `r_0 = boundary_r0(r)`. A coarse grid is
/// scanned first; if nothing certifies, compass descent on the minimum
/// certificate slack starts from the best grid point. `None` means no witness
/// was found, which does not prove the candidate is outside the region.
pub fn membership_search(
    spec: &SourceSpec,
    d: f64,
    candidate: &RegionPoint,
    kind: BoundKind,
    cfg: &SearchConfig,
) -> Result<Option<RateAllocation>> {
    let big_l = spec.big_l();
    if big_l > MAX_TABLE_HELPERS {
        return Err(Error::TooLarge(big_l));
    }
    if cfg.grid_points < 2 {
        return Err(Error::arg("grid_points", "need at least 2"));
    }
    let eval = |r: &[f64]| -> Result<(f64, RateAllocation)> {
        let alloc = RateAllocation::new(boundary_r0(spec, d, r), r.to_vec());
        let rates = subset_rates(spec, Some(d), &alloc, kind)?;
        let cert = certificate_against(&rates, candidate, alloc.r0);
        Ok((cert.min_slack(), alloc))
    };

    let step = cfg.max_rate / (cfg.grid_points - 1) as f64;
    let mut idx = vec![0usize; big_l];
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        let r: Vec<f64> = idx.iter().map(|&k| k as f64 * step).collect();
        let (slack, alloc) = eval(&r)?;
        if slack >= -CERT_TOL {
            return Ok(Some(alloc));
        }
        if best.as_ref().is_none_or(|(b, _)| slack > *b) {
            best = Some((slack, r));
        }
        // odometer increment
        let mut pos = 0;
        while pos < big_l {
            idx[pos] += 1;
            if idx[pos] < cfg.grid_points {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == big_l {
            break;
        }
    }

    let (mut cur_slack, mut cur) = best.expect("grid is nonempty");
    let mut h = step;
    for _ in 0..cfg.descent_steps {
        let mut improved: Option<(f64, Vec<f64>)> = None;
        for k in 0..big_l {
            for sign in [1.0, -1.0] {
                let mut trial = cur.clone();
                trial[k] = (trial[k] + sign * h).max(0.0);
                if trial[k] == cur[k] {
                    continue;
                }
                let (slack, alloc) = eval(&trial)?;
                if slack >= -CERT_TOL {
                    return Ok(Some(alloc));
                }
                if slack > improved.as_ref().map_or(cur_slack, |(s, _)| *s) {
                    improved = Some((slack, trial));
                }
            }
        }
        match improved {
            Some((s, r)) => {
                cur_slack = s;
                cur = r;
            }
            None => h *= 0.5,
        }
    }
    Ok(None)
}
