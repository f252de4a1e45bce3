//! The monotonicity condition on `e^{2 r_l} G`: a sufficient variance test,
//! its closed form for three helpers, and a direct grid probe.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::recursions::{big_g, f_seq, f_star, g0};
use crate::source::SourceSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOutcome {
    /// No decrease beyond `tol` was seen on the grid.
    pub holds: bool,
    /// Most negative increment `e^{2(r_l+d)} G(.., r_l+d, ..) - e^{2 r_l} G`; 0 when nothing was probed.
    pub worst_violation: f64,
    /// `(r_0, r_1..r_{L-2}, l)` where the worst increment occurred.
    pub worst_point: Option<(f64, Vec<f64>, usize)>,
    pub points_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiReport {
    /// Left sides for `l = 1..L-2`.
    pub variance_lhs: Vec<f64>,
    pub variance_holds: bool,
    /// `None` when the grid probe was not run.
    pub numeric: Option<ProbeOutcome>,
}

impl MiReport {
    /// Largest amount by which a left side exceeds 1, or 0.
    pub fn variance_excess(&self) -> f64 {
        self.variance_lhs
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v - 1.0))
    }
}

/// Sufficient condition: for every `l = 1..L-2`,
/// `sum_{k=l}^{L-2} (s_{k+1}/n_l)(1 + s_{k+1} f*_{k+1}) prod_{j=l+1}^{k} (1 + s_j f*_j)^2 <= 1`
/// with `s = sigma_Z^2`, `n = sigma_N^2`.
pub fn variance_test(spec: &SourceSpec) -> MiReport {
    let big_l = spec.big_l();
    let fs = f_star(spec);
    let fstar = |j: usize| fs[j - 1];
    let factor = |j: usize| 1.0 + spec.sigma_z_sq(j) * fstar(j);
    let lhs: Vec<f64> = (1..big_l.saturating_sub(1))
        .map(|l| {
            let mut total = 0.0;
            let mut prod_sq = 1.0;
            for k in l..=big_l - 2 {
                if k > l {
                    prod_sq *= factor(k).powi(2);
                }
                let s = spec.sigma_z_sq(k + 1);
                total += s / spec.sigma_n_sq(l) * factor(k + 1) * prod_sq;
            }
            total
        })
        .collect();
    MiReport {
        variance_holds: lhs.iter().all(|&v| v <= 1.0),
        variance_lhs: lhs,
        numeric: None,
    }
}

/// Largest `sigma_Z2^2` for which [`variance_test`] passes when `L = 3`.
pub fn three_helper_threshold(spec: &SourceSpec) -> Result<f64> {
    if spec.big_l() != 3 {
        return Err(Error::arg(
            "spec",
            format!("needs L = 3, got {}", spec.big_l()),
        ));
    }
    let n1 = spec.sigma_n_sq(1);
    let inv = 1.0 / spec.sigma_n_sq(2) + 1.0 / spec.sigma_n_sq(3);
    Ok(2.0 * n1 / (1.0 + (1.0 + 4.0 * n1 * inv).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub r0_grid: Vec<f64>,
    pub rate_grid: Vec<f64>,
    pub delta: f64,
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            r0_grid: vec![0.0, 0.2, 0.5],
            rate_grid: vec![0.0, 0.25, 0.5, 1.0],
            delta: 1e-4,
            tol: 1e-10,
        }
    }
}

/// Forward-difference probe of `r_l -> e^{2 r_l} G(D, r_0, r^{L-2})` for `l = 1..L-2`.
///
/// Grid points are skipped when `G` hits a pole or when no choice of the two
/// remaining rates can bring `(r_0, r^{L-2}, .)` into the feasible set.
/// A passing result means "no violation found on this grid".
pub fn numeric_mi_probe(spec: &SourceSpec, d: f64, cfg: &ProbeConfig) -> ProbeOutcome {
    let big_l = spec.big_l();
    let mut out = ProbeOutcome {
        holds: true,
        worst_violation: 0.0,
        worst_point: None,
        points_checked: 0,
    };
    if big_l < 3 || cfg.rate_grid.is_empty() {
        return out;
    }
    let dims = big_l - 2;
    let n = cfg.rate_grid.len();
    let mut full = vec![0.0; big_l];
    for &r0 in &cfg.r0_grid {
        let target = g0(spec, d, r0);
        let mut idx = vec![0usize; dims];
        loop {
            for (k, &i) in idx.iter().enumerate() {
                full[k] = cfg.rate_grid[i];
            }
            full[big_l - 2] = f64::INFINITY;
            full[big_l - 1] = f64::INFINITY;
            let reachable = target <= f_seq(spec, &full)[0];
            if reachable {
                probe_point(spec, d, r0, &full[..dims], cfg, &mut out);
            }
            let mut pos = 0;
            while pos < dims {
                idx[pos] += 1;
                if idx[pos] < n {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == dims {
                break;
            }
        }
    }
    out.holds = out.worst_violation >= -cfg.tol;
    out
}

fn probe_point(
    spec: &SourceSpec,
    d: f64,
    r0: f64,
    head: &[f64],
    cfg: &ProbeConfig,
    out: &mut ProbeOutcome,
) {
    // g only reads r_1..r_{L-2}; the tail entries are placeholders
    let mut r = head.to_vec();
    r.extend([0.0, 0.0]);
    let Ok(base) = big_g(spec, d, r0, &r) else {
        return;
    };
    for l in 1..=head.len() {
        let mut bumped = r.clone();
        bumped[l - 1] += cfg.delta;
        let Ok(next) = big_g(spec, d, r0, &bumped) else {
            continue;
        };
        out.points_checked += 1;
        let inc = (2.0 * bumped[l - 1]).exp() * next - (2.0 * r[l - 1]).exp() * base;
        if inc < out.worst_violation {
            out.worst_violation = inc;
            out.worst_point = Some((r0, head.to_vec(), l));
        }
    }
}

/// [`variance_test`] followed by [`numeric_mi_probe`].
pub fn mi_report(spec: &SourceSpec, d: f64, cfg: &ProbeConfig) -> MiReport {
    let mut rep = variance_test(spec);
    rep.numeric = Some(numeric_mi_probe(spec, d, cfg));
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l3(z2: f64) -> SourceSpec {
        SourceSpec::new(1.0, vec![0.3, z2, 1.0], vec![1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn ci_holds() {
        let s = SourceSpec::ci(4, vec![1.0, 0.5, 2.0, 1.0], 1.0).unwrap();
        let rep = mi_report(&s, 0.3, &ProbeConfig::default());
        assert!(rep.variance_lhs.iter().all(|&v| v == 0.0));
        assert!(rep.variance_holds);
        assert!(rep.numeric.unwrap().holds);
    }

    #[test]
    fn l3_examples() {
        let rep = variance_test(&l3(0.4));
        assert!((rep.variance_lhs[0] - 0.72).abs() < 1e-12);
        assert!(rep.variance_holds);
        let rep = variance_test(&l3(0.6));
        assert!((rep.variance_lhs[0] - 1.32).abs() < 1e-12);
        assert!(!rep.variance_holds);
    }

    #[test]
    fn three_helper_threshold_values() {
        assert!((three_helper_threshold(&l3(0.1)).unwrap() - 0.5).abs() < 1e-15);
        assert!(variance_test(&l3(0.5 - 1e-6)).variance_holds);
        assert!(!variance_test(&l3(0.5 + 1e-6)).variance_holds);

        let s = SourceSpec::new(1.0, vec![0.3, 0.2, 1.0], vec![4.0, 1.0, 1.0]).unwrap();
        let b = three_helper_threshold(&s).unwrap();
        assert!((b - 8.0 / (1.0 + 33f64.sqrt())).abs() < 1e-15);
        let at = |z| SourceSpec::new(1.0, vec![0.3, z, 1.0], vec![4.0, 1.0, 1.0]).unwrap();
        assert!(variance_test(&at(b - 1e-6)).variance_holds);
        assert!(!variance_test(&at(b + 1e-6)).variance_holds);

        let wide = SourceSpec::new(1.0, vec![0.3, 0.2, 1e12], vec![2.0, 1e12, 1e12]).unwrap();
        assert!((three_helper_threshold(&wide).unwrap() - 2.0).abs() < 1e-5);
        assert!(three_helper_threshold(&SourceSpec::ceo(2, 1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn l2_vacuous() {
        let s = SourceSpec::ci(2, vec![1.0, 1.0], 1.0).unwrap();
        let rep = mi_report(&s, 0.5, &ProbeConfig::default());
        assert!(rep.variance_lhs.is_empty() && rep.variance_holds);
        let p = rep.numeric.unwrap();
        assert!(p.holds && p.points_checked == 0);
    }

    #[test]
    fn passing_spec_passes_probe() {
        let s = l3(0.4);
        let p = numeric_mi_probe(&s, 0.3, &ProbeConfig::default());
        assert!(p.points_checked > 0);
        assert!(p.holds, "{p:?}");
    }
}
