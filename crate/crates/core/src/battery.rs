//! Invariant battery for one spec and distortion target, driven by a seeded
//! generator. Each check reports its worst observed slack.

use rand::Rng;
use serde::Serialize;

use crate::error::Error;
use crate::gaussian::verify_identities;
use crate::mi::{numeric_mi_probe, variance_test, ProbeConfig};
use crate::oracle::{axiom_audit, fd_gradient, AUDIT_MAX_HELPERS};
use crate::recursions::{big_g, f_seq, f_seq_extended, g_seq, RegionKind};
use crate::region::{j_subset, k_subset, subset_rates, vertex, BoundKind, Permutation};
use crate::sample::region_alloc;
use crate::source::SourceSpec;
use crate::subset::Subset;
use crate::sum_rate::{
    alpha_from_r, numeric_sum_rate, parametric_sum_rate, theta_seq, variance_ratio_failure, zeta,
    AlphaVector, SolverConfig,
};

/// Largest `L` for which per-permutation and per-subset Gaussian checks run.
pub const BATTERY_TABLE_MAX: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    /// Most adverse slack seen; negative means violated. `None` when skipped.
    pub worst_slack: Option<f64>,
    pub samples: usize,
    pub note: Option<String>,
}

struct Acc {
    name: &'static str,
    worst: f64,
    samples: usize,
    note: Option<String>,
}

impl Acc {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: f64::INFINITY,
            samples: 0,
            note: None,
        }
    }

    fn see(&mut self, slack: f64) {
        self.worst = self.worst.min(slack);
    }

    fn fail(&mut self, why: impl Into<String>) {
        self.worst = f64::NEG_INFINITY;
        self.note.get_or_insert_with(|| why.into());
    }

    fn finish(self) -> Check {
        let status = if self.worst >= 0.0 {
            Status::Pass
        } else {
            Status::Fail
        };
        Check {
            name: self.name,
            status,
            worst_slack: Some(if self.samples == 0 { 0.0 } else { self.worst }),
            samples: self.samples,
            note: self.note,
        }
    }
}

fn skipped(name: &'static str, why: impl Into<String>) -> Check {
    Check {
        name,
        status: Status::Skip,
        worst_slack: None,
        samples: 0,
        note: Some(why.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryConfig {
    pub samples: usize,
    pub r0_budget: f64,
    /// Absolute tolerance for identities that hold exactly.
    pub tol: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            r0_budget: 0.0,
            tol: 1e-9,
        }
    }
}

/// Runs every check. Sampled allocations alternate between boundary and
/// raised-`r_0` (interior) points.
pub fn run_battery<R: Rng + ?Sized>(
    spec: &SourceSpec,
    d: f64,
    cfg: &BatteryConfig,
    rng: &mut R,
) -> Vec<Check> {
    let big_l = spec.big_l();
    let tol = cfg.tol;
    let mut forms = Acc::new("recursion_forms");
    let mut mono = Acc::new("monotonicity");
    let mut order = Acc::new("g_below_f");
    let mut jk = Acc::new("j_below_k");
    let mut axioms = Acc::new("copolymatroid_axioms");
    let mut verts = Acc::new("vertices");
    let mut gauss = Acc::new("gaussian_identities");
    let mut concave = Acc::new("zeta_midpoint_concavity");

    let tables = big_l <= BATTERY_TABLE_MAX;
    let perms = if tables {
        Permutation::all(big_l)
    } else {
        Vec::new()
    };

    for k in 0..cfg.samples {
        let alloc = region_alloc(rng, spec, d, k % 2 == 1);
        let f = f_seq(spec, &alloc.r);
        let ext = f_seq_extended(spec, &alloc.r);

        forms.samples += 1;
        forms.see(1e-12 * (1.0 + f[0]) - (f[0] - ext[0]).abs());

        mono.samples += 1;
        let delta = 1e-6;
        let base_g = big_g(spec, d, alloc.r0, &alloc.r);
        for l in 1..=big_l {
            let mut up = alloc.r.clone();
            up[l - 1] += delta;
            mono.see(f_seq(spec, &up)[0] - f[0] + 1e-15);
            if l + 2 <= big_l {
                if let (Ok(g), Ok(gu)) = (&base_g, big_g(spec, d, alloc.r0, &up)) {
                    mono.see(g - gu + 1e-15 * g);
                }
            }
        }

        let kind =
            crate::recursions::classify(spec, d, &alloc, crate::recursions::TOL_BOUNDARY).kind;
        if kind == RegionKind::Outside {
            continue;
        }
        let on_boundary = kind == RegionKind::Boundary;

        order.samples += 1;
        match g_seq(spec, d, alloc.r0, &alloc.r) {
            Ok(g) => {
                for l in 0..big_l {
                    let scale = tol * (1.0 + f[l]);
                    order.see(scale - (g[l] - f[l]));
                    if on_boundary {
                        order.see(scale - (g[l] - f[l]).abs());
                    }
                }
            }
            Err(e) => order.fail(format!("{e} at a feasible allocation")),
        }

        jk.samples += 1;
        if tables {
            for s in Subset::all(big_l) {
                match j_subset(spec, d, &alloc, s) {
                    Ok(j) => {
                        let kv = k_subset(spec, &alloc.r, s);
                        jk.see(tol - (j - kv));
                        if on_boundary {
                            jk.see(tol - (j - kv).abs());
                        }
                    }
                    Err(e) => jk.fail(e.to_string()),
                }
            }
        }

        if tables {
            let outer = subset_rates(spec, Some(d), &alloc, BoundKind::Outer);
            let inner = subset_rates(spec, Some(d), &alloc, BoundKind::Inner);
            match (outer, inner) {
                (Ok(outer), Ok(inner)) => {
                    if big_l <= AUDIT_MAX_HELPERS {
                        axioms.samples += 1;
                        for t in [&outer, &inner] {
                            match axiom_audit(t, tol) {
                                Ok(rep) => {
                                    axioms.see(tol - rep.empty_value.abs());
                                    axioms.see(rep.worst_monotone.0 + tol);
                                    axioms.see(rep.worst_supermodular.0 + tol);
                                }
                                Err(e) => axioms.fail(e.to_string()),
                            }
                        }
                    }
                    verts.samples += 1;
                    let total = inner.get(Subset::full(big_l));
                    for pi in &perms {
                        match (vertex(&outer, pi), vertex(&inner, pi)) {
                            (Ok(vo), Ok(vi)) => {
                                let sum: f64 = vi.iter().sum();
                                verts.see(tol - (sum - total).abs());
                                if on_boundary {
                                    for (a, b) in vo.iter().zip(&vi) {
                                        verts.see(tol - (a - b).abs());
                                    }
                                }
                            }
                            (Err(e), _) | (_, Err(e)) => verts.fail(e.to_string()),
                        }
                    }
                }
                (Err(e), _) | (_, Err(e)) => axioms.fail(e.to_string()),
            }

            gauss.samples += 1;
            match verify_identities(spec, d, &alloc, tol) {
                Ok(rep) if rep.passed => gauss.see(0.0),
                Ok(rep) => gauss.fail(format!(
                    "identity failure at r0={}, r={:?} (regime {:?})",
                    alloc.r0, alloc.r, rep.regime
                )),
                Err(e) => gauss.fail(e.to_string()),
            }
        }

        // midpoint concavity between this allocation and a fresh one
        let other = region_alloc(rng, spec, d, false);
        let a = alpha_from_r(spec, &alloc.r);
        let b = alpha_from_r(spec, &other.r);
        let mid: Vec<f64> = a.0.iter().zip(&b.0).map(|(x, y)| 0.5 * (x + y)).collect();
        if let (Ok(za), Ok(zb), Ok(zm)) = (zeta(spec, &a.0), zeta(spec, &b.0), zeta(spec, &mid)) {
            concave.samples += 1;
            concave.see(zm - 0.5 * (za + zb) + 1e-12 * (1.0 + za.abs() + zb.abs()));
        }
    }

    let mut checks = vec![forms.finish(), mono.finish(), order.finish(), jk.finish()];
    if tables && big_l <= AUDIT_MAX_HELPERS {
        checks.push(axioms.finish());
    } else {
        checks.push(skipped(
            "copolymatroid_axioms",
            format!("L > {AUDIT_MAX_HELPERS}"),
        ));
    }
    if tables {
        checks.push(verts.finish());
        checks.push(gauss.finish());
    } else {
        checks.push(skipped("vertices", format!("L > {BATTERY_TABLE_MAX}")));
        checks.push(skipped(
            "gaussian_identities",
            format!("L > {BATTERY_TABLE_MAX}"),
        ));
    }
    checks.push(concave.finish());
    checks.extend(sum_rate_checks(spec, d, cfg));
    checks.push(mi_check(spec, d));
    checks
}

fn sum_rate_checks(spec: &SourceSpec, d: f64, cfg: &BatteryConfig) -> Vec<Check> {
    let mut out = Vec::new();
    let numeric = numeric_sum_rate(spec, d, cfg.r0_budget, &SolverConfig::default());
    let mut num = Acc::new("sum_rate_numeric");
    match &numeric {
        Ok(res) => {
            num.samples = 1;
            let resid = f_seq(spec, &res.minimizer_r)[0]
                - crate::recursions::g0(spec, d, cfg.r0_budget).max(0.0);
            num.see(cfg.tol - resid.abs());
            num.see(res.value);
            out.push(num.finish());
        }
        Err(e @ Error::Infeasible { .. }) => out.push(skipped("sum_rate_numeric", e.to_string())),
        Err(e) => {
            num.fail(e.to_string());
            out.push(num.finish());
        }
    }

    if let Some(level) = variance_ratio_failure(spec) {
        let why = format!("variance-ratio condition fails at level {level}");
        out.push(skipped("sum_rate_parametric", why.clone()));
        out.push(skipped("theta_stationarity", why));
        return out;
    }
    match (parametric_sum_rate(spec, d, cfg.r0_budget), &numeric) {
        (Ok(p), Ok(n)) => {
            let mut acc = Acc::new("sum_rate_parametric");
            acc.samples = 1;
            acc.see(1e-6 - (p.value - n.value).abs());
            out.push(acc.finish());
        }
        (Err(e), _) => out.push(skipped("sum_rate_parametric", e.to_string())),
        (_, Err(e)) => out.push(skipped("sum_rate_parametric", e.to_string())),
    }
    out.push(theta_check(spec));
    out
}

/// Stationarity, feasibility and monotonicity of the `theta` family on an `omega` grid.
fn theta_check(spec: &SourceSpec) -> Check {
    let mut acc = Acc::new("theta_stationarity");
    let big_l = spec.big_l();
    for k in 0..20 {
        let w = 0.05 * k as f64;
        let th = theta_seq(spec, w);
        acc.samples += 1;
        if let Err(e) = AlphaVector(th.clone()).check(spec) {
            acc.fail(format!("omega = {w}: {e}"));
            continue;
        }
        let up = theta_seq(spec, w + 1e-6);
        for l in 0..big_l {
            acc.see(up[l] - th[l]);
        }
        if w == 0.0 {
            continue;
        }
        let first = th[0];
        let grad = fd_gradient(
            |tail: &[f64]| {
                let mut a = vec![first];
                a.extend_from_slice(tail);
                zeta(spec, &a)
            },
            &th[1..],
            1e-6,
        );
        match grad {
            Ok(g) => acc.see(1e-7 - g.iter().fold(0.0_f64, |m, v| m.max(v.abs()))),
            Err(e) => acc.fail(format!("omega = {w}: {e}")),
        }
    }
    acc.finish()
}

fn mi_check(spec: &SourceSpec, d: f64) -> Check {
    let rep = variance_test(spec);
    let probe = numeric_mi_probe(spec, d, &ProbeConfig::default());
    let note = format!(
        "sufficient condition {}; probe {} at {} points",
        if rep.variance_holds { "holds" } else { "fails" },
        if probe.holds {
            "clean"
        } else {
            "found a decrease"
        },
        probe.points_checked
    );
    // only the implication is an invariant
    let slack = if rep.variance_holds {
        probe.worst_violation + 1e-10
    } else {
        0.0
    };
    Check {
        name: "mi_implication",
        status: if slack >= 0.0 {
            Status::Pass
        } else {
            Status::Fail
        },
        worst_slack: Some(slack),
        samples: probe.points_checked,
        note: Some(note),
    }
}

/// True when every check passed or was skipped.
pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.status != Status::Fail)
}
