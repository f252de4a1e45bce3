//! Acceptance suite: nine criteria, one status line each. Runs without the
//! libtest harness so the lines always show up in `cargo test` output.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use maho_rd::gaussian::verify_identities;
use maho_rd::mi::{numeric_mi_probe, three_helper_threshold, variance_test, ProbeConfig};
use maho_rd::oracle::{
    axiom_audit, fd_gradient, fd_hessian, grid_min_boundary_k, grid_min_region_j, grid_sum_rate,
    GridSpec,
};
use maho_rd::recursions::{
    big_f, big_g, classify, f0_sup, f_seq, f_seq_extended, g0, g_seq, RegionKind, TOL_BOUNDARY,
};
use maho_rd::region::{j_subset, k_subset, subset_rates, BoundKind};
use maho_rd::sample::{random_rates, random_ratio_spec, random_spec, region_alloc};
use maho_rd::sum_rate::{
    alpha_from_r, ceo_closed_form, ceo_limit, numeric_sum_rate, parametric_sum_rate, theta_seq,
    zeta, AlphaVector, SolverConfig,
};
use maho_rd::{RateAllocation, SourceSpec, Subset};
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_recursion_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let l = rng.gen_range(2..=6);
        let spec = random_spec(&mut rng, l);
        let r = random_rates(&mut rng, l, 3.0);
        let a = f_seq(&spec, &r)[0];
        let b = f_seq_extended(&spec, &r)[0];
        worst = worst.max((a - b).abs());
    }
    ensure(worst <= 1e-12, || format!("max |diff| = {worst:e}"))?;
    Ok(format!("1000 cases, max |diff| = {worst:.2e}"))
}

fn c2_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let h = 1e-6;
    let (mut worst_order, mut worst_eq, mut worst_jk, mut worst_jk_eq) =
        (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut boundary_seen = 0;
    for k in 0..200 {
        let l = rng.gen_range(2..=5);
        let spec = random_spec(&mut rng, l);
        let d = spec.sigma_x0_sq() * rng.gen_range(0.1..1.0);
        let alloc = region_alloc(&mut rng, &spec, d, k % 2 == 1);
        let kind = classify(&spec, d, &alloc, TOL_BOUNDARY).kind;
        ensure(kind != RegionKind::Outside, || {
            "sampled point outside".into()
        })?;
        let on_boundary = kind == RegionKind::Boundary;
        boundary_seen += on_boundary as usize;

        // monotonicity: f_l and F up in every r_i, g_l and G down in r_0 and r_1..r_{L-2}
        let f = f_seq(&spec, &alloc.r);
        let g = g_seq(&spec, d, alloc.r0, &alloc.r).map_err(|e| e.to_string())?;
        let ff = big_f(&spec, &alloc.r);
        let gg = big_g(&spec, d, alloc.r0, &alloc.r).map_err(|e| e.to_string())?;
        for i in 0..l {
            let mut up = alloc.r.clone();
            up[i] += h;
            let fu = f_seq(&spec, &up);
            for lev in 0..l {
                ensure(fu[lev] >= f[lev] - 1e-15, || {
                    format!("f_{lev} decreased in r_{}", i + 1)
                })?;
            }
            ensure(big_f(&spec, &up) >= ff - 1e-15, || "F decreased".into())?;
            if i + 2 < l {
                let gu = g_seq(&spec, d, alloc.r0, &up).map_err(|e| e.to_string())?;
                for lev in 0..l {
                    ensure(gu[lev] <= g[lev] + 1e-15, || {
                        format!("g_{lev} increased in r_{}", i + 1)
                    })?;
                }
                let gu = big_g(&spec, d, alloc.r0, &up).map_err(|e| e.to_string())?;
                ensure(gu <= gg * (1.0 + 1e-15), || "G increased".into())?;
            }
        }
        ensure(g0(&spec, d, alloc.r0 + h) < g0(&spec, d, alloc.r0), || {
            "g_0 not decreasing in r_0".into()
        })?;

        for lev in 0..l {
            worst_order = worst_order.max(g[lev] - f[lev]);
            if on_boundary {
                worst_eq = worst_eq.max((g[lev] - f[lev]).abs());
            }
        }
        for s in Subset::all(l) {
            let j = j_subset(&spec, d, &alloc, s).map_err(|e| e.to_string())?;
            let kv = k_subset(&spec, &alloc.r, s);
            worst_jk = worst_jk.max(j - kv);
            if on_boundary {
                worst_jk_eq = worst_jk_eq.max((j - kv).abs());
            }
        }
    }
    ensure(worst_order <= 1e-9, || {
        format!("g - f reached {worst_order:e}")
    })?;
    ensure(worst_eq <= 1e-9, || {
        format!("boundary |g - f| reached {worst_eq:e}")
    })?;
    ensure(worst_jk <= 1e-9, || format!("J - K reached {worst_jk:e}"))?;
    ensure(worst_jk_eq <= 1e-9, || {
        format!("boundary |J - K| reached {worst_jk_eq:e}")
    })?;
    ensure(boundary_seen >= 20, || {
        format!("only {boundary_seen} boundary samples")
    })?;
    Ok(format!(
        "200 instances ({boundary_seen} boundary), max g-f {worst_order:.1e}, max J-K {worst_jk:.1e}, boundary gaps {worst_eq:.1e}/{worst_jk_eq:.1e}"
    ))
}

fn c3_copolymatroid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = f64::INFINITY;
    for k in 0..50 {
        let l = 2 + k % 4;
        let spec = random_spec(&mut rng, l);
        let d = spec.sigma_x0_sq() * rng.gen_range(0.1..1.0);
        let alloc = region_alloc(&mut rng, &spec, d, k % 3 == 0);
        for kind in [BoundKind::Outer, BoundKind::Inner] {
            let t = subset_rates(&spec, Some(d), &alloc, kind).map_err(|e| e.to_string())?;
            let rep = axiom_audit(&t, 1e-10).map_err(|e| e.to_string())?;
            ensure(rep.passed, || format!("{kind:?} map failed: {rep:?}"))?;
            worst = worst
                .min(rep.worst_supermodular.0)
                .min(rep.worst_monotone.0);
        }
    }
    Ok(format!(
        "50 allocations x 2 maps, L in 2..=5, worst slack {worst:.1e}"
    ))
}

fn c4_ceo() -> Outcome {
    let mut worst = 0.0_f64;
    for l in 2..=8 {
        let spec = SourceSpec::ceo(l, 1.0, 1.0).unwrap();
        for k in 0..=19 {
            let w = 0.05 * k as f64;
            let th = theta_seq(&spec, w);
            for (idx, t) in th.iter().enumerate() {
                worst = worst.max((t - (l - idx) as f64 * w).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("theta deviates by {worst:e}"))?;

    let spec = SourceSpec::ceo(3, 1.0, 1.0).unwrap();
    let exact = -1.5 * (1.0f64 - 1.0 / 3.0).ln() + 0.5 * 2f64.ln();
    let closed = ceo_closed_form(&spec, 0.5, 0.0).map_err(|e| e.to_string())?;
    let p = parametric_sum_rate(&spec, 0.5, 0.0)
        .map_err(|e| e.to_string())?
        .value;
    let n = numeric_sum_rate(&spec, 0.5, 0.0, &SolverConfig::default())
        .map_err(|e| e.to_string())?
        .value;
    let o = grid_sum_rate(&spec, 0.5, 0.0, &GridSpec::default())
        .map_err(|e| e.to_string())?
        .value;
    ensure((closed - exact).abs() <= 1e-12, || {
        format!("closed form {closed}")
    })?;
    ensure((n - p).abs() <= 1e-6, || {
        format!("numeric {n} vs parametric {p}")
    })?;
    ensure((p - exact).abs() <= 1e-6, || {
        format!("parametric {p} vs {exact}")
    })?;
    ensure((o - exact).abs() <= 1e-3, || {
        format!("oracle {o} vs {exact}")
    })?;
    Ok(format!(
        "theta max dev {worst:.1e}; value {exact:.7}: numeric {n:.7}, parametric {p:.7}, oracle {o:.7}"
    ))
}

fn c5_ceo_limit() -> Outcome {
    let lim = ceo_limit(1.0, 1.0, 0.5);
    ensure((lim - 0.846_573_6).abs() < 1e-7, || format!("limit {lim}"))?;
    let mut prev = f64::INFINITY;
    let mut last = 0.0;
    for l in 2..=64 {
        let v = ceo_closed_form(&SourceSpec::ceo(l, 1.0, 1.0).unwrap(), 0.5, 0.0)
            .map_err(|e| e.to_string())?;
        ensure(v < prev, || format!("not decreasing at L = {l}"))?;
        ensure(v > lim, || format!("below the limit at L = {l}"))?;
        prev = v;
        last = v;
    }
    let gap = last - lim;
    ensure(gap < 1e-2, || format!("gap {gap}"))?;
    Ok(format!(
        "limit {lim:.7}, L=64 value {last:.7}, gap {gap:.2e}"
    ))
}

// Plain central differences lose too many digits near the edge of the
// feasible set; extrapolating from h and h/2 cancels the h^2 term.
fn richardson_gradient<F>(f: F, x: &[f64], h: f64) -> maho_rd::Result<Vec<f64>>
where
    F: Fn(&[f64]) -> maho_rd::Result<f64>,
{
    let coarse = fd_gradient(&f, x, h)?;
    let fine = fd_gradient(&f, x, h / 2.0)?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect())
}

fn c6_concavity_and_theta() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut max_eig, mut max_grad, mut min_deriv) = (f64::NEG_INFINITY, 0.0_f64, f64::INFINITY);
    for k in 0..20 {
        let l = 2 + k % 5;
        let spec = random_ratio_spec(&mut rng, l);
        let z = |a: &[f64]| zeta(&spec, a);

        for _ in 0..3 {
            let r: Vec<f64> = (0..l).map(|_| rng.gen_range(0.1..2.0)).collect();
            let a = alpha_from_r(&spec, &r);
            let hess = fd_hessian(z, &a.0, 1e-5).map_err(|e| e.to_string())?;
            let eig = SymmetricEigen::new(hess).eigenvalues;
            let top = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            max_eig = max_eig.max(top);
        }

        for step in 0..=19 {
            let w = 0.05 * step as f64;
            let th = theta_seq(&spec, w);
            AlphaVector(th.clone())
                .check(&spec)
                .map_err(|e| format!("theta infeasible at omega = {w}: {e}"))?;
            let up = theta_seq(&spec, w + 1e-7);
            for i in 0..l {
                min_deriv = min_deriv.min((up[i] - th[i]) / 1e-7);
            }
            let head = th[0];
            let g = richardson_gradient(
                |tail: &[f64]| zeta(&spec, &[&[head][..], tail].concat()),
                &th[1..],
                3e-5,
            )
            .map_err(|e| format!("omega = {w}: {e}"))?;
            max_grad = max_grad.max(g.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
        }
    }
    ensure(max_eig <= 1e-8, || {
        format!("Hessian eigenvalue {max_eig:e}")
    })?;
    ensure(max_grad <= 1e-7, || format!("gradient {max_grad:e}"))?;
    ensure(min_deriv > 0.0, || {
        format!("d theta / d omega = {min_deriv:e}")
    })?;
    Ok(format!(
        "20 specs: max Hessian eig {max_eig:.2e}, max |grad| {max_grad:.1e}, min dtheta/domega {min_deriv:.2e}"
    ))
}

fn c7_variance_test() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut passing = 0;
    let mut tries = 0;
    let mut worst = 0.0_f64;
    let mut checked = 0;
    while passing < 50 {
        tries += 1;
        ensure(tries < 10_000, || "could not sample passing specs".into())?;
        let l = rng.gen_range(3..=5);
        let n: Vec<f64> = (0..l).map(|_| rng.gen_range(0.5..2.0)).collect();
        let mut z: Vec<f64> = (0..l - 1).map(|_| rng.gen_range(0.0..0.6)).collect();
        z.push(n[l - 1]);
        let spec = SourceSpec::new(rng.gen_range(0.5..2.0), z, n).unwrap();
        if !variance_test(&spec).variance_holds {
            continue;
        }
        passing += 1;
        let d = spec.sigma_x0_sq() * rng.gen_range(0.1..0.9);
        let probe = numeric_mi_probe(&spec, d, &ProbeConfig::default());
        ensure(probe.holds, || {
            format!("probe violation {probe:?} for {spec:?}")
        })?;
        worst = worst.min(probe.worst_violation);
        checked += probe.points_checked;
    }

    let mut max_gap = 0.0_f64;
    for _ in 0..50 {
        let n1 = rng.gen_range(0.3..4.0);
        let n2 = rng.gen_range(0.3..4.0);
        let n3 = rng.gen_range(0.3..4.0);
        let at = |z2: f64| SourceSpec::new(1.0, vec![0.1, z2, n3], vec![n1, n2, n3]).unwrap();
        let b = three_helper_threshold(&at(0.1)).map_err(|e| e.to_string())?;
        let formula = 2.0 * n1 / (1.0 + (1.0 + 4.0 * n1 * (1.0 / n2 + 1.0 / n3)).sqrt());
        max_gap = max_gap.max((b - formula).abs());
        ensure(variance_test(&at(b - 1e-9)).variance_holds, || {
            format!("fails below bound {b}")
        })?;
        ensure(!variance_test(&at(b + 1e-9)).variance_holds, || {
            format!("holds above bound {b}")
        })?;
    }
    let unit =
        three_helper_threshold(&SourceSpec::new(1.0, vec![0.1, 0.2, 1.0], vec![1.0; 3]).unwrap())
            .unwrap();
    ensure((unit - 0.5).abs() < 1e-15, || format!("unit bound {unit}"))?;
    Ok(format!(
        "50 passing specs ({tries} drawn), {checked} increments checked, most negative {worst:.1e}; L=3 flips at the bound on 50 specs"
    ))
}

fn c8_gaussian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let (mut ri, mut fs, mut r0b, mut dist, mut est, mut markov) =
        (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut interior_excess = f64::NEG_INFINITY;
    let mut boundary_seen = 0;
    for k in 0..200 {
        let l = rng.gen_range(2..=4);
        let spec = if k % 5 == 0 {
            let n: Vec<f64> = (0..l).map(|_| rng.gen_range(0.3..2.0)).collect();
            SourceSpec::ci(l, n, rng.gen_range(0.5..2.0)).unwrap()
        } else {
            random_spec(&mut rng, l)
        };
        let d = spec.sigma_x0_sq() * rng.gen_range(0.1..1.0);
        let mut alloc = region_alloc(&mut rng, &spec, d, k % 2 == 1);
        if k % 7 == 0 {
            alloc.r[rng.gen_range(0..l)] = 0.0;
            alloc = RateAllocation::new(
                maho_rd::recursions::boundary_r0(&spec, d, &alloc.r),
                alloc.r,
            );
        }
        let rep = verify_identities(&spec, d, &alloc, 1e-9).map_err(|e| e.to_string())?;
        ri = ri.max(rep.worst_dev_ri());
        fs = fs.max(rep.worst_dev_fs());
        dist = dist.max((rep.achieved_distortion - rep.mmse_residual).abs());
        est = est.max((rep.estimator_residual - rep.mmse_residual).abs());
        markov = markov.max(rep.markov_max);
        ensure(rep.achieved_distortion <= d * (1.0 + 1e-12), || {
            format!("distortion {} above {d}", rep.achieved_distortion)
        })?;
        match rep.regime {
            RegionKind::Boundary => {
                boundary_seen += 1;
                r0b = r0b.max(rep.dev_r0);
            }
            RegionKind::Interior => interior_excess = interior_excess.max(rep.info_r0 - alloc.r0),
            RegionKind::Outside => return Err("sampled point outside".into()),
        }
    }
    for (name, v) in [
        ("r_i", ri),
        ("f_S", fs),
        ("r_0 boundary", r0b),
        ("distortion", dist),
        ("estimator", est),
        ("markov", markov),
    ] {
        ensure(v <= 1e-9, || format!("{name} deviation {v:e}"))?;
    }
    ensure(interior_excess <= 1e-9, || {
        format!("interior I - r_0 = {interior_excess:e}")
    })?;
    Ok(format!(
        "200 instances ({boundary_seen} boundary): devs r_i {ri:.1e}, f_S {fs:.1e}, r_0 {r0b:.1e}, mmse {dist:.1e}, estimator {est:.1e}, markov {markov:.1e}"
    ))
}

fn c9_bound_minima_agree() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let grid = GridSpec {
        points: 13,
        max_rate: 4.0,
        refinements: 8,
    };
    let mut worst = 0.0_f64;
    for k in 0..10 {
        let l = 2 + k % 2;
        let spec = random_spec(&mut rng, l);
        let r0: f64 = rng.gen_range(0.0..0.3);
        let target = rng.gen_range(0.2..0.8) * f0_sup(&spec);
        let d = (-2.0 * r0).exp() / (target + 1.0 / spec.sigma_x0_sq());
        let (k_min, _) = grid_min_boundary_k(&spec, d, r0, &grid).map_err(|e| e.to_string())?;
        let (j_min, _) = grid_min_region_j(&spec, d, r0, &grid, 3.0).map_err(|e| e.to_string())?;
        let n =
            numeric_sum_rate(&spec, d, r0, &SolverConfig::default()).map_err(|e| e.to_string())?;
        ensure((k_min - j_min).abs() <= 1e-4, || {
            format!("instance {k}: K {k_min} vs J {j_min}")
        })?;
        ensure(k_min >= n.value - 1e-9, || {
            format!("instance {k}: grid {k_min} below solver {}", n.value)
        })?;
        worst = worst.max((k_min - j_min).abs());
    }
    Ok(format!("10 instances, max |min K - min J| = {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "1 recursion-form equivalence",
            c1_recursion_forms,
            Duration::from_secs(1),
        ),
        (
            "2 monotonicity, g <= f, J <= K",
            c2_properties,
            Duration::from_secs(10),
        ),
        (
            "3 co-polymatroid axioms",
            c3_copolymatroid,
            Duration::from_secs(30),
        ),
        ("4 CEO reproduction", c4_ceo, Duration::from_secs(5)),
        ("5 CEO limit", c5_ceo_limit, Duration::from_secs(1)),
        (
            "6 concavity and theta family",
            c6_concavity_and_theta,
            Duration::from_secs(30),
        ),
        (
            "7 sufficient MI condition",
            c7_variance_test,
            Duration::from_secs(30),
        ),
        (
            "8 Gaussian verification",
            c8_gaussian,
            Duration::from_secs(30),
        ),
        (
            "9 min K on boundary = min J on region",
            c9_bound_minima_agree,
            Duration::from_secs(60),
        ),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let res = run();
        let took = start.elapsed();
        let res = match res {
            Ok(detail) if took > limit => Err(format!("{detail}; took {took:.2?} > {limit:?}")),
            other => other,
        };
        match res {
            Ok(detail) => println!("[PASS] criterion {name}: {detail} ({took:.2?})"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {name}: {why} ({took:.2?})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
