//! Command-line front end. The binary only parses arguments and calls [`run`].
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on input
//! or computation errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::battery::{all_passed, run_battery, BatteryConfig, Check};
use crate::error::Error;
use crate::mi::{mi_report, three_helper_threshold, ProbeConfig};
use crate::oracle::{grid_sum_rate, GridSpec};
use crate::recursions::boundary_r0;
use crate::region::{subset_rates, vertex, BoundKind, Permutation, SubsetRates};
use crate::source::{DistortionBudget, RateAllocation, SourceSpec};
use crate::subset::Subset;
use crate::sum_rate::{
    ceo_sum_rate, numeric_sum_rate, parametric_sum_rate, SolverConfig, SumRateResult,
};

pub const SCHEMA: &str = "maho-rd/1";
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Largest number of vertex rows `region` will emit.
const MAX_REGION_ROWS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "maho-rd",
    version,
    about = "Rate-distortion bounds for tree-structured Gaussian many-help-one coding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sampled invariant battery against a spec.
    Verify(VerifyArgs),
    /// Optimal sum rate for a distortion target and primary-rate budget.
    Sumrate(SumrateArgs),
    /// Region vertices over a grid of boundary allocations, or a two-helper slice.
    #[command(long_about = REGION_HELP)]
    Region(RegionArgs),
    /// Sufficient variance test and grid probe for the monotonicity condition.
    MiCheck(MiArgs),
}

const REGION_HELP: &str = "\
Region vertices over a grid of boundary allocations, or a two-helper slice.

vertices mode CSV columns:
  schema, alloc, kind, pi, r0, aux_r1..aux_rL, R1..RL, sum
  one row per (allocation, ordering, kind); `pi` is the ordering as 1-2-3,
  `r0` is both the auxiliary and the primary rate of the vertex.

slice mode CSV columns:
  schema, kind, R1, R2
  lower envelope of the (R1, R2) projection with helpers 3..L capped at
  --cap nats, over allocations whose boundary primary rate is at most --r0.

Floats are printed with 12 significant digits.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Source spec JSON: {"L", "sigma_x0_sq", "sigma_z_sq", "sigma_n_sq"}.
    #[arg(long)]
    pub spec: PathBuf,
    /// Distortion target D; defaults to sigma_x0_sq / 2.
    #[arg(long)]
    pub d: Option<f64>,
    /// Primary-encoder rate budget R_0 in nats.
    #[arg(long, default_value_t = 0.0)]
    pub r0: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Parametric,
    Numeric,
    Oracle,
    Ceo,
    All,
}

#[derive(Debug, Args)]
pub struct SumrateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    pub method: MethodArg,
    /// Oracle grid points per axis.
    #[arg(long, default_value_t = 13)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionMode {
    Vertices,
    Slice,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = RegionMode::Vertices)]
    pub mode: RegionMode,
    /// Auxiliary-rate grid points per helper axis.
    #[arg(long, default_value_t = 3)]
    pub grid: usize,
    /// Largest auxiliary rate on the grid.
    #[arg(long, default_value_t = 2.0)]
    pub max_rate: f64,
    /// Slice mode: rate granted to helpers 3..L.
    #[arg(long, default_value_t = 10.0)]
    pub cap: f64,
}

#[derive(Debug, Args)]
pub struct MiArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Skip the grid probe.
    #[arg(long)]
    pub no_probe: bool,
}

/// Rendered report plus exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub body: String,
    /// Set when the body went to `--out` rather than stdout.
    pub written: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (common, mut outcome) = match &cli.command {
        Command::Verify(a) => (&a.common, cmd_verify(a)?),
        Command::Sumrate(a) => (&a.common, cmd_sumrate(a)?),
        Command::Region(a) => (&a.common, cmd_region(a)?),
        Command::MiCheck(a) => (&a.common, cmd_mi_check(a)?),
    };
    if let Some(path) = &common.out {
        std::fs::write(path, &outcome.body).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        outcome.written = Some(path.clone());
    }
    Ok(outcome)
}

fn load_spec(path: &Path) -> Result<SourceSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(SourceSpec::from_json(&text)?)
}

fn resolve_d(spec: &SourceSpec, d: Option<f64>) -> Result<f64, CliError> {
    let d = d.unwrap_or(0.5 * spec.sigma_x0_sq());
    Ok(DistortionBudget::new(spec, d)?.value())
}

fn check_r0(r0: f64) -> Result<f64, CliError> {
    if !(r0.is_finite() && r0 >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "r0",
            reason: "must be finite and nonnegative".into(),
        }
        .into());
    }
    Ok(r0)
}

/// Rounds to 12 significant digits so replayed values are bit-stable.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().expect("checked f64"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn render_json(mut v: Value) -> Result<String, CliError> {
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn render_csv(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: PathBuf::from("<csv buffer>"),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let spec = load_spec(&a.common.spec)?;
    let d = resolve_d(&spec, a.common.d)?;
    let r0 = check_r0(a.common.r0)?;
    let cfg = BatteryConfig {
        samples: a.samples,
        r0_budget: r0,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let checks = run_battery(&spec, d, &cfg, &mut rng);
    let passed = all_passed(&checks);
    let code = if passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    let body = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => render_json(json!({
            "schema": SCHEMA,
            "command": "verify",
            "seed": a.seed,
            "samples": a.samples,
            "d": d,
            "r0": r0,
            "spec": spec.to_raw(),
            "checks": checks,
            "passed": passed,
        }))?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = checks.iter().map(check_row).collect();
            render_csv(
                &header(&[
                    "schema",
                    "check",
                    "status",
                    "worst_slack",
                    "samples",
                    "note",
                ]),
                &rows,
            )?
        }
    };
    Ok(Outcome {
        code,
        body,
        written: None,
    })
}

fn check_row(c: &Check) -> Vec<String> {
    let status = serde_json::to_value(c.status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    vec![
        SCHEMA.into(),
        c.name.into(),
        status,
        c.worst_slack.map(fmt12).unwrap_or_default(),
        c.samples.to_string(),
        c.note.clone().unwrap_or_default(),
    ]
}

#[derive(Serialize)]
struct SumRow {
    method: &'static str,
    value_nats: f64,
    value_bits: f64,
    omega: Option<f64>,
    minimizer_r: Vec<f64>,
}

impl From<&SumRateResult> for SumRow {
    fn from(r: &SumRateResult) -> Self {
        Self {
            method: r.method.as_str(),
            value_nats: r.value,
            value_bits: r.value / std::f64::consts::LN_2,
            omega: r.omega,
            minimizer_r: r.minimizer_r.clone(),
        }
    }
}

fn run_method(
    spec: &SourceSpec,
    d: f64,
    r0: f64,
    m: MethodArg,
    grid: usize,
) -> crate::Result<SumRateResult> {
    match m {
        MethodArg::Numeric => numeric_sum_rate(spec, d, r0, &SolverConfig::default()),
        MethodArg::Parametric => parametric_sum_rate(spec, d, r0),
        MethodArg::Ceo => ceo_sum_rate(spec, d, r0),
        MethodArg::Oracle => grid_sum_rate(
            spec,
            d,
            r0,
            &GridSpec {
                points: grid,
                ..Default::default()
            },
        ),
        MethodArg::All => unreachable!("expanded by the caller"),
    }
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Parametric => "parametric",
        MethodArg::Numeric => "numeric",
        MethodArg::Oracle => "oracle",
        MethodArg::Ceo => "ceo",
        MethodArg::All => "all",
    }
}

pub fn cmd_sumrate(a: &SumrateArgs) -> Result<Outcome, CliError> {
    let spec = load_spec(&a.common.spec)?;
    let d = resolve_d(&spec, a.common.d)?;
    let r0 = check_r0(a.common.r0)?;
    let format = a.common.format.unwrap_or(Format::Json);

    if a.method != MethodArg::All {
        let res = run_method(&spec, d, r0, a.method, a.grid)?;
        let row = SumRow::from(&res);
        let body = match format {
            Format::Json => {
                let mut v = json!({ "schema": SCHEMA, "command": "sumrate", "d": d, "r0": r0 });
                merge(&mut v, serde_json::to_value(&row)?);
                render_json(v)?
            }
            Format::Csv => sum_csv(&[row])?,
        };
        return Ok(Outcome {
            code: EXIT_OK,
            body,
            written: None,
        });
    }

    // numeric first: an infeasible budget is an input error for every method
    let numeric = run_method(&spec, d, r0, MethodArg::Numeric, a.grid)?;
    let mut results = vec![numeric];
    let mut skipped = Vec::new();
    for m in [MethodArg::Parametric, MethodArg::Oracle, MethodArg::Ceo] {
        if m == MethodArg::Ceo && !spec.is_ceo() {
            continue;
        }
        match run_method(&spec, d, r0, m, a.grid) {
            Ok(r) => results.push(r),
            Err(e) => skipped.push(json!({ "method": method_name(m), "reason": e.to_string() })),
        }
    }
    let rows: Vec<SumRow> = results.iter().map(SumRow::from).collect();
    let mut deltas = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            deltas.push(json!({
                "a": rows[i].method,
                "b": rows[j].method,
                "delta_nats": rows[i].value_nats - rows[j].value_nats,
            }));
        }
    }
    let body = match format {
        Format::Json => render_json(json!({
            "schema": SCHEMA,
            "command": "sumrate",
            "d": d,
            "r0": r0,
            "method": "all",
            "results": rows,
            "deltas": deltas,
            "skipped": skipped,
        }))?,
        Format::Csv => sum_csv(&rows)?,
    };
    Ok(Outcome {
        code: EXIT_OK,
        body,
        written: None,
    })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn sum_csv(rows: &[SumRow]) -> Result<String, CliError> {
    let out: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                SCHEMA.into(),
                r.method.into(),
                fmt12(r.value_nats),
                fmt12(r.value_bits),
                r.omega.map(fmt12).unwrap_or_default(),
                r.minimizer_r
                    .iter()
                    .map(|&x| fmt12(x))
                    .collect::<Vec<_>>()
                    .join(";"),
            ]
        })
        .collect();
    render_csv(
        &header(&[
            "schema",
            "method",
            "value_nats",
            "value_bits",
            "omega",
            "minimizer_r",
        ]),
        &out,
    )
}

/// Boundary allocations on the `points^L` grid over `[0, max_rate]`, in odometer order.
fn grid_allocations(
    spec: &SourceSpec,
    d: f64,
    points: usize,
    max_rate: f64,
) -> Vec<RateAllocation> {
    let big_l = spec.big_l();
    let step = if points > 1 {
        max_rate / (points - 1) as f64
    } else {
        0.0
    };
    let mut idx = vec![0usize; big_l];
    let mut out = Vec::new();
    loop {
        let r: Vec<f64> = idx.iter().map(|&k| k as f64 * step).collect();
        out.push(RateAllocation::new(boundary_r0(spec, d, &r), r));
        let mut pos = 0;
        while pos < big_l {
            idx[pos] += 1;
            if idx[pos] < points {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == big_l {
            return out;
        }
    }
}

fn kind_name(k: BoundKind) -> &'static str {
    match k {
        BoundKind::Outer => "outer",
        BoundKind::Inner => "inner",
    }
}

pub fn cmd_region(a: &RegionArgs) -> Result<Outcome, CliError> {
    let spec = load_spec(&a.common.spec)?;
    let d = resolve_d(&spec, a.common.d)?;
    let r0 = check_r0(a.common.r0)?;
    let big_l = spec.big_l();
    if a.grid == 0 || !(a.max_rate.is_finite() && a.max_rate >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "grid",
            reason: "need at least one point and a nonnegative max rate".into(),
        }
        .into());
    }
    let n_perm: usize = (1..=big_l).product();
    let n_rows = a
        .grid
        .checked_pow(big_l as u32)
        .and_then(|g| g.checked_mul(n_perm * 2));
    if n_rows.is_none_or(|n| n > MAX_REGION_ROWS) {
        return Err(Error::TooLarge(big_l).into());
    }
    let allocs = grid_allocations(&spec, d, a.grid, a.max_rate);
    let format = a.common.format.unwrap_or(Format::Csv);
    match a.mode {
        RegionMode::Vertices => region_vertices(&spec, d, &allocs, format),
        RegionMode::Slice => region_slice(&spec, d, r0, a.cap, &allocs, format),
    }
}

fn region_vertices(
    spec: &SourceSpec,
    d: f64,
    allocs: &[RateAllocation],
    format: Format,
) -> Result<Outcome, CliError> {
    let big_l = spec.big_l();
    let perms = Permutation::all(big_l);
    let mut cols = header(&["schema", "alloc", "kind", "pi", "r0"]);
    cols.extend((1..=big_l).map(|i| format!("aux_r{i}")));
    cols.extend((1..=big_l).map(|i| format!("R{i}")));
    cols.push("sum".into());
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for (id, alloc) in allocs.iter().enumerate() {
        for kind in [BoundKind::Outer, BoundKind::Inner] {
            let table = subset_rates(spec, Some(d), alloc, kind)?;
            for pi in &perms {
                let v = vertex(&table, pi)?;
                let sum: f64 = v.iter().sum();
                let mut row = vec![
                    SCHEMA.to_string(),
                    id.to_string(),
                    kind_name(kind).into(),
                    pi.to_string(),
                    fmt12(alloc.r0),
                ];
                row.extend(alloc.r.iter().map(|&x| fmt12(x)));
                row.extend(v.iter().map(|&x| fmt12(x)));
                row.push(fmt12(sum));
                rows.push(row);
                json_rows.push(json!({
                    "alloc": id, "kind": kind_name(kind), "pi": pi.as_slice(),
                    "r0": alloc.r0, "aux_r": alloc.r, "rates": v, "sum": sum,
                }));
            }
        }
    }
    let body = match format {
        Format::Csv => render_csv(&cols, &rows)?,
        Format::Json => render_json(json!({
            "schema": SCHEMA, "command": "region", "mode": "vertices", "d": d, "rows": json_rows,
        }))?,
    };
    Ok(Outcome {
        code: EXIT_OK,
        body,
        written: None,
    })
}

/// `(a1, a2, a12)`: lower bounds on `R1`, `R2`, `R1 + R2` once helpers
/// `3..L` are granted `cap` nats each.
fn projected_bounds(t: &SubsetRates, cap: f64) -> (f64, f64, f64) {
    let big_l = t.big_l();
    let pair = Subset::from_members([1, 2]);
    let others = Subset::full(big_l).intersection(Subset(!pair.0));
    let mut b = [0.0_f64; 3];
    for s in Subset::all(big_l) {
        let core = s.intersection(pair);
        if core.is_empty() {
            continue;
        }
        let slot = match core.0 {
            1 => 0,
            2 => 1,
            _ => 2,
        };
        let extra = s.intersection(others).len() as f64 * cap;
        b[slot] = b[slot].max(t.get(s) - extra);
    }
    (b[0], b[1], b[2])
}

fn region_slice(
    spec: &SourceSpec,
    d: f64,
    r0: f64,
    cap: f64,
    allocs: &[RateAllocation],
    format: Format,
) -> Result<Outcome, CliError> {
    const CURVE_POINTS: usize = 101;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for kind in [BoundKind::Outer, BoundKind::Inner] {
        let mut faces = Vec::new();
        for alloc in allocs.iter().filter(|al| al.r0 <= r0 + 1e-12) {
            let t = subset_rates(spec, Some(d), alloc, kind)?;
            faces.push(projected_bounds(&t, cap));
        }
        let reach = faces.iter().fold(0.0_f64, |m, f| m.max(f.2));
        for k in 0..CURVE_POINTS {
            let r1 = reach * k as f64 / (CURVE_POINTS - 1) as f64;
            let best = faces
                .iter()
                .filter(|f| f.0 <= r1 + 1e-12)
                .map(|f| f.1.max(f.2 - r1))
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                rows.push(vec![
                    SCHEMA.to_string(),
                    kind_name(kind).into(),
                    fmt12(r1),
                    fmt12(best),
                ]);
                json_rows.push(json!({ "kind": kind_name(kind), "R1": r1, "R2": best }));
            }
        }
    }
    let body = match format {
        Format::Csv => render_csv(&header(&["schema", "kind", "R1", "R2"]), &rows)?,
        Format::Json => render_json(json!({
            "schema": SCHEMA, "command": "region", "mode": "slice", "d": d, "r0": r0, "cap": cap, "rows": json_rows,
        }))?,
    };
    Ok(Outcome {
        code: EXIT_OK,
        body,
        written: None,
    })
}

pub fn cmd_mi_check(a: &MiArgs) -> Result<Outcome, CliError> {
    let spec = load_spec(&a.common.spec)?;
    let d = resolve_d(&spec, a.common.d)?;
    let mut rep = mi_report(&spec, d, &ProbeConfig::default());
    if a.no_probe {
        rep.numeric = None;
    }
    let probe_ok = rep.numeric.as_ref().is_none_or(|p| p.holds);
    let passed = rep.variance_holds && probe_ok;
    let code = if passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    let bound = three_helper_threshold(&spec).ok();
    let body = match a.common.format.unwrap_or(Format::Json) {
        Format::Json => render_json(json!({
            "schema": SCHEMA,
            "command": "mi-check",
            "d": d,
            "variance_lhs": rep.variance_lhs,
            "variance_holds": rep.variance_holds,
            "three_helper_threshold": bound,
            "numeric": rep.numeric,
            "passed": passed,
        }))?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = rep
                .variance_lhs
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    vec![
                        SCHEMA.into(),
                        (k + 1).to_string(),
                        fmt12(v),
                        (v <= 1.0).to_string(),
                    ]
                })
                .collect();
            render_csv(&header(&["schema", "level", "lhs", "holds"]), &rows)?
        }
    };
    Ok(Outcome {
        code,
        body,
        written: None,
    })
}
