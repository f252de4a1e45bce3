//! Joint Gaussian law of the source, the helper observations and the test
//! channels `U_i = X_i + V_i`, with conditional mutual informations computed
//! from log-determinants of Schur complements.
//!
//! The test-channel noise is chosen so that helper `i` at rate `r_i > 0` has
//! `1/sigma_Vi^2 = (e^{2 r_i} - 1) / sigma_Ni^2`, and the primary channel has
//! `1/sigma_V0^2 = (1 - e^{-2 r_0}) / D`. Channels at rate zero carry nothing
//! and are left out of the model.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::recursions::{
    big_f_restricted, classify, f0_restricted, f_seq, leaf_gain, RegionKind, TOL_BOUNDARY,
};
use crate::source::{RateAllocation, SourceSpec};
use crate::subset::Subset;

/// Pivot threshold below which a conditional variance is treated as zero.
pub const PIVOT_TOL: f64 = 1e-10;

/// A named coordinate of the joint law. Indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Var {
    X0,
    /// Trunk node `Y_l`, `1 <= l <= L-1`.
    Y(usize),
    /// Helper observation `X_l`.
    X(usize),
    U0,
    U(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X0 => write!(f, "X0"),
            Var::Y(l) => write!(f, "Y{l}"),
            Var::X(l) => write!(f, "X{l}"),
            Var::U0 => write!(f, "U0"),
            Var::U(l) => write!(f, "U{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    labels: Vec<Var>,
    matrix: DMatrix<f64>,
    /// Helpers with `r_i > 0`, increasing.
    active: Vec<usize>,
    big_l: usize,
}

impl CovarianceModel {
    pub fn labels(&self) -> &[Var] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn active_set(&self) -> &[usize] {
        &self.active
    }

    pub fn big_l(&self) -> usize {
        self.big_l
    }

    pub fn index_of(&self, v: Var) -> Option<usize> {
        self.labels.iter().position(|&w| w == v)
    }

    pub fn cov(&self, a: Var, b: Var) -> Option<f64> {
        Some(self.matrix[(self.index_of(a)?, self.index_of(b)?)])
    }

    /// `X_0, Y_1..Y_{L-1}`.
    pub fn trunk(&self) -> Vec<Var> {
        std::iter::once(Var::X0)
            .chain((1..self.big_l).map(Var::Y))
            .collect()
    }

    /// Channel outputs of the active helpers in `s`.
    pub fn channels(&self, s: Subset) -> Vec<Var> {
        self.active
            .iter()
            .filter(|&&i| s.contains(i))
            .map(|&i| Var::U(i))
            .collect()
    }

    fn indices(&self, vars: &[Var]) -> Result<Vec<usize>> {
        vars.iter()
            .map(|&v| {
                self.index_of(v)
                    .ok_or_else(|| Error::arg("vars", format!("{v} is not in the model")))
            })
            .collect()
    }
}

/// Assembles the covariance from independent latents: `X_0`, `Z_1..Z_L`,
/// `N_1..N_{L-1}`, and one `V` per active channel.
pub fn build_covariance(
    spec: &SourceSpec,
    d: f64,
    alloc: &RateAllocation,
) -> Result<CovarianceModel> {
    alloc.check(spec)?;
    let big_l = spec.big_l();
    let active: Vec<usize> = (1..=big_l).filter(|&i| alloc.r[i - 1] > 0.0).collect();
    let has_u0 = alloc.r0 > 0.0;

    // latent layout
    let z_at = |k: usize| k; // Z_k, k = 1..L
    let n_at = |k: usize| big_l + k; // N_k, k = 1..L-1
    let v0_at = 2 * big_l;
    let v_at = |pos: usize| 2 * big_l + 1 + pos;
    let n_latent = 2 * big_l + 1 + active.len();

    let mut var = vec![0.0; n_latent];
    var[0] = spec.sigma_x0_sq();
    for k in 1..=big_l {
        var[z_at(k)] = spec.sigma_z_sq(k);
    }
    for k in 1..big_l {
        var[n_at(k)] = spec.sigma_n_sq(k);
    }
    if has_u0 {
        var[v0_at] = d / -(-2.0 * alloc.r0).exp_m1();
    }
    for (pos, &i) in active.iter().enumerate() {
        var[v_at(pos)] = spec.sigma_n_sq(i) / (2.0 * alloc.r[i - 1]).exp_m1();
    }

    let trunk_row = |l: usize| {
        let mut row = vec![0.0; n_latent];
        row[0] = 1.0;
        for k in 1..=l {
            row[z_at(k)] = 1.0;
        }
        row
    };
    let obs_row = |l: usize| {
        let mut row = trunk_row(l);
        if l < big_l {
            row[n_at(l)] = 1.0;
        }
        row
    };

    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    labels.push(Var::X0);
    rows.push(trunk_row(0));
    for l in 1..big_l {
        labels.push(Var::Y(l));
        rows.push(trunk_row(l));
    }
    for l in 1..=big_l {
        labels.push(Var::X(l));
        rows.push(obs_row(l));
    }
    if has_u0 {
        let mut row = trunk_row(0);
        row[v0_at] = 1.0;
        labels.push(Var::U0);
        rows.push(row);
    }
    for (pos, &i) in active.iter().enumerate() {
        let mut row = obs_row(i);
        row[v_at(pos)] = 1.0;
        labels.push(Var::U(i));
        rows.push(row);
    }

    let n = labels.len();
    let loadings = DMatrix::from_fn(n, n_latent, |i, j| rows[i][j]);
    let scaled = DMatrix::from_fn(n, n_latent, |i, j| rows[i][j] * var[j]);
    let matrix = &scaled * loadings.transpose();
    Ok(CovarianceModel {
        labels,
        matrix,
        active,
        big_l,
    })
}

fn log_det(m: &DMatrix<f64>, block: &str) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = m.clone().cholesky().ok_or_else(|| Error::Singular {
        block: block.to_string(),
    })?;
    let l = chol.l_dirty();
    let mut total = 0.0;
    for i in 0..m.nrows() {
        let p = l[(i, i)];
        if p * p <= PIVOT_TOL {
            return Err(Error::Singular {
                block: block.to_string(),
            });
        }
        total += 2.0 * p.ln();
    }
    Ok(total)
}

fn sub(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Positions (into `idx`) of a maximal subset whose conditional variances,
/// taken in order, exceed the pivot tolerance. Dropped entries are a.s. linear
/// functions of the kept ones.
fn independent_basis(m: &DMatrix<f64>, idx: &[usize]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for &j in idx {
        let resid = residual_variance(m, &kept, j);
        if resid > PIVOT_TOL * (1.0 + m[(j, j)].abs()) {
            kept.push(j);
        }
    }
    kept
}

fn residual_variance(m: &DMatrix<f64>, given: &[usize], j: usize) -> f64 {
    if given.is_empty() {
        return m[(j, j)];
    }
    let cc = sub(m, given, given);
    let cj = sub(m, given, &[j]);
    match cc.cholesky() {
        Some(ch) => m[(j, j)] - (cj.transpose() * ch.solve(&cj))[(0, 0)],
        None => 0.0,
    }
}

/// Covariance of `targets` given `given` (which must be a linearly independent set).
fn conditional(m: &DMatrix<f64>, targets: &[usize], given: &[usize]) -> Result<DMatrix<f64>> {
    let tt = sub(m, targets, targets);
    if given.is_empty() {
        return Ok(tt);
    }
    let cc = sub(m, given, given);
    let tc = sub(m, targets, given);
    let ch = cc.cholesky().ok_or_else(|| Error::Singular {
        block: "conditioning".into(),
    })?;
    let s = tt - &tc * ch.solve(&tc.transpose());
    // symmetrize rounding
    Ok((&s + s.transpose()) * 0.5)
}

/// `I(A; B | C)` in nats.
///
/// Degenerate coordinates inside each of `C`, `A`, `B` are dropped first.
/// If `A` and `B` still share a deterministic component the joint block is
/// singular and the information is infinite, reported as [`Error::Singular`].
pub fn mutual_info(model: &CovarianceModel, a: &[Var], b: &[Var], c: &[Var]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let (ia, ib, ic) = (model.indices(a)?, model.indices(b)?, model.indices(c)?);
    if ia.iter().any(|x| ib.contains(x) || ic.contains(x)) || ib.iter().any(|x| ic.contains(x)) {
        return Err(Error::arg("sets", "A, B and C must be disjoint"));
    }
    let m = model.matrix();
    let ic = independent_basis(m, &ic);
    let mut targets = ia.clone();
    targets.extend(&ib);
    let s = conditional(m, &targets, &ic)?;
    let local_a: Vec<usize> = (0..ia.len()).collect();
    let local_b: Vec<usize> = (ia.len()..targets.len()).collect();
    let ka = independent_basis(&s, &local_a);
    let kb = independent_basis(&s, &local_b);
    if ka.is_empty() || kb.is_empty() {
        return Ok(0.0);
    }
    let mut kab = ka.clone();
    kab.extend(&kb);
    let la = log_det(&sub(&s, &ka, &ka), "A|C")?;
    let lb = log_det(&sub(&s, &kb, &kb), "B|C")?;
    let lab = log_det(&sub(&s, &kab, &kab), "AB|C")?;
    let i = 0.5 * (la + lb - lab);
    if i < -PIVOT_TOL {
        return Err(Error::Consistency(format!(
            "negative mutual information {i:e}"
        )));
    }
    Ok(i.max(0.0))
}

/// `Var(target | given)` by Schur complement.
pub fn conditional_variance(model: &CovarianceModel, target: Var, given: &[Var]) -> Result<f64> {
    let t = model.indices(&[target])?;
    let g = independent_basis(model.matrix(), &model.indices(given)?);
    Ok(conditional(model.matrix(), &t, &g)?[(0, 0)])
}

/// `[1/sigma_X0^2 + (1 - e^{-2 r_0})/D + f_0(r)]^{-1}`.
pub fn achieved_distortion(spec: &SourceSpec, d: f64, alloc: &RateAllocation) -> f64 {
    let f0 = f_seq(spec, &alloc.r)[0];
    1.0 / (1.0 / spec.sigma_x0_sq() - (-2.0 * alloc.r0).exp_m1() / d + f0)
}

/// Coefficients of the linear estimate built by folding the helper channels
/// down the trunk, one per active channel and `U_0` (in model label order).
fn estimator_weights(
    spec: &SourceSpec,
    d: f64,
    alloc: &RateAllocation,
    model: &CovarianceModel,
) -> Vec<(Var, f64)> {
    let big_l = spec.big_l();
    let f = f_seq(spec, &alloc.r);
    let scale = achieved_distortion(spec, d, alloc);
    let mut out = Vec::new();
    if alloc.r0 > 0.0 {
        out.push((Var::U0, scale * -(-2.0 * alloc.r0).exp_m1() / d));
    }
    for &i in model.active_set() {
        let top = i.min(big_l - 1);
        let shrink: f64 = (1..=top)
            .map(|j| 1.0 / (1.0 + spec.sigma_z_sq(j) * f[j]))
            .product();
        out.push((
            Var::U(i),
            scale * leaf_gain(spec, i, alloc.r[i - 1]) * shrink,
        ));
    }
    out
}

/// `E[(X_0 - psi)^2]` for the folded linear estimate `psi`.
pub fn estimator_residual(
    spec: &SourceSpec,
    d: f64,
    alloc: &RateAllocation,
    model: &CovarianceModel,
) -> Result<f64> {
    let w = estimator_weights(spec, d, alloc, model);
    let vars: Vec<Var> = w.iter().map(|p| p.0).collect();
    let idx = model.indices(&vars)?;
    let x0 = model.indices(&[Var::X0])?[0];
    let m = model.matrix();
    let c = DVector::from_iterator(w.len(), w.iter().map(|p| p.1));
    let uu = sub(m, &idx, &idx);
    let ux = DVector::from_iterator(idx.len(), idx.iter().map(|&k| m[(k, x0)]));
    Ok(m[(x0, x0)] - 2.0 * c.dot(&ux) + (c.transpose() * uu * &c)[(0, 0)])
}

/// `I(U_S; U_{S^c} | X_0, Y^{L-1})`, zero when either side has no active channel.
pub fn markov_audit(model: &CovarianceModel, s: Subset) -> Result<f64> {
    let left = model.channels(s);
    let right = model.channels(s.complement(model.big_l()));
    mutual_info(model, &left, &right, &model.trunk())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetDeviation {
    pub subset: Subset,
    pub closed_form: f64,
    pub computed: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub regime: RegionKind,
    /// `I(X_0; U_0 | U^L)`.
    pub info_r0: f64,
    /// `|I(X_0; U_0 | U^L) - r_0|`.
    pub dev_r0: f64,
    /// `|I(X_i; U_i | X_0, Y^{L-1}) - r_i|` per helper (0 for silent helpers).
    pub dev_ri: Vec<f64>,
    pub dev_fs: Vec<SubsetDeviation>,
    pub achieved_distortion: f64,
    pub mmse_residual: f64,
    pub estimator_residual: f64,
    /// Largest `I(U_S; U_{S^c} | trunk)` over subsets of the active helpers.
    pub markov_max: f64,
    pub d: f64,
    pub passed: bool,
}

impl IdentityReport {
    pub fn worst_dev_ri(&self) -> f64 {
        self.dev_ri.iter().fold(0.0, |m: f64, &v| m.max(v))
    }

    pub fn worst_dev_fs(&self) -> f64 {
        self.dev_fs.iter().fold(0.0, |m: f64, v| m.max(v.deviation))
    }
}

/// Runs every identity at one allocation.
///
/// On the boundary of the feasible set `I(X_0; U_0 | U^L) = r_0`; strictly
/// inside it only `I <= r_0` holds, and that is what is checked there.
pub fn verify_identities(
    spec: &SourceSpec,
    d: f64,
    alloc: &RateAllocation,
    tol: f64,
) -> Result<IdentityReport> {
    let model = build_covariance(spec, d, alloc)?;
    let big_l = spec.big_l();
    let regime = classify(spec, d, alloc, TOL_BOUNDARY).kind;
    let all_u = model.channels(Subset::full(big_l));

    let info_r0 = if alloc.r0 > 0.0 {
        mutual_info(&model, &[Var::X0], &[Var::U0], &all_u)?
    } else {
        0.0
    };
    let dev_r0 = (info_r0 - alloc.r0).abs();
    let r0_ok = match regime {
        RegionKind::Boundary => dev_r0 <= tol,
        _ => info_r0 <= alloc.r0 + tol,
    };

    let trunk = model.trunk();
    let mut dev_ri = vec![0.0; big_l];
    for &i in model.active_set() {
        let info = mutual_info(&model, &[Var::X(i)], &[Var::U(i)], &trunk)?;
        dev_ri[i - 1] = (info - alloc.r[i - 1]).abs();
    }

    let active_mask = Subset::from_members(model.active_set().iter().copied());
    let sx = spec.sigma_x0_sq();
    let mut dev_fs = Vec::new();
    let mut markov_max = 0.0_f64;
    for s in Subset::all(big_l).filter(|s| s.is_subset_of(active_mask)) {
        let closed = 0.5
            * (big_f_restricted(spec, &alloc.r, s) * (1.0 + sx * f0_restricted(spec, &alloc.r, s)))
                .ln();
        let computed = mutual_info(&model, &trunk, &model.channels(s), &[])?;
        dev_fs.push(SubsetDeviation {
            subset: s,
            closed_form: closed,
            computed,
            deviation: (closed - computed).abs(),
        });
        markov_max = markov_max.max(markov_audit(&model, s)?);
    }

    let mut observed = all_u.clone();
    if alloc.r0 > 0.0 {
        observed.push(Var::U0);
    }
    let achieved = achieved_distortion(spec, d, alloc);
    let mmse = conditional_variance(&model, Var::X0, &observed)?;
    let est = estimator_residual(spec, d, alloc, &model)?;

    let mut report = IdentityReport {
        regime,
        info_r0,
        dev_r0,
        dev_ri,
        dev_fs,
        achieved_distortion: achieved,
        mmse_residual: mmse,
        estimator_residual: est,
        markov_max,
        d,
        passed: false,
    };
    let in_region = regime != RegionKind::Outside;
    report.passed = r0_ok
        && report.worst_dev_ri() <= tol
        && report.worst_dev_fs() <= tol
        && (achieved - mmse).abs() <= tol
        && (est - mmse).abs() <= tol
        && markov_max <= tol
        && (!in_region || achieved <= d * (1.0 + tol));
    Ok(report)
}
