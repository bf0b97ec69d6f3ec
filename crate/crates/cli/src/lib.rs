//! Command dispatch behind the `cdkn` binary.
//!
//! A [`RunConfig`] names a command and a map of raw parameter strings; [`run`]
//! parses what the command needs, calls the library and renders a JSON object
//! or a CSV table. [`Report::exit_code`] maps the result onto the process exit
//! status.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cdkn::coeffs::bonnet_myers;
use cdkn::density::{validate_cd, GridDensity};
use cdkn::functional::{cheeger_density, cheeger_model, lambda_11, logsob_estimate, sobolev_estimate, talagrand_check};
use cdkn::localize::{aggregate_logsob, aggregate_spectral, verify_disintegration, Disintegration};
use cdkn::spectral::{lambda_closed_form, lambda_model, li_wang_bound, rayleigh_p};
use cdkn::transport1d::{verify_bm, IntervalSet, Measure1D};
use cdkn::suite;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

pub const DEFAULT_GRID: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] cdkn::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(cdkn::Error::Bracket(_)) => 3,
            _ => 2,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Lambda,
    Cheeger,
    Logsob,
    Sobolev,
    Bm,
    Talagrand,
    Validate,
    Localize,
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Lambda => "lambda",
            Command::Cheeger => "cheeger",
            Command::Logsob => "logsob",
            Command::Sobolev => "sobolev",
            Command::Bm => "bm",
            Command::Talagrand => "talagrand",
            Command::Validate => "validate",
            Command::Localize => "localize",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Raw parameter values keyed by flag name (`p`, `K`, `N`, `D`, `density`, ...).
    pub params: BTreeMap<String, String>,
    pub grid_nodes: usize,
    pub tol: f64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            params: BTreeMap::new(),
            grid_nodes: DEFAULT_GRID,
            tol: DEFAULT_TOL,
            output: None,
            format: Format::Json,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    fn check(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0) {
            return Err(usage(format!("--tol must be positive, got {}", self.tol)));
        }
        if self.grid_nodes < 16 {
            return Err(usage(format!("--grid must be at least 16, got {}", self.grid_nodes)));
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| usage(format!("--{key} `{v}`: {e}"))))
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| usage(format!("`{}` needs --{key}", self.command.name())))
    }

    /// `D`, where `inf` is accepted and a missing value means the Bonnet-Myers bound.
    fn diameter(&self, k: f64, n: f64) -> Result<f64, CliError> {
        match self.get::<f64>("D")? {
            Some(d) => Ok(d),
            None if k > 0.0 => Ok(bonnet_myers(k, n)),
            None => Err(usage(format!("`{}` needs --D", self.command.name()))),
        }
    }

    fn density(&self) -> Result<GridDensity, CliError> {
        let path: PathBuf = self.require("density")?;
        Ok(GridDensity::read_csv(&path)?)
    }
}

/// Emitted report and whether it records an inequality violation.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub body: Body,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Object(Value),
    Table { columns: Vec<String>, rows: Vec<Vec<Value>> },
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.violation)
    }

    pub fn render(&self, format: Format) -> String {
        match (&self.body, format) {
            (Body::Object(v), Format::Json) => pretty(v),
            (Body::Object(v), Format::Csv) => {
                let mut out = String::from("key,value\n");
                let mut flat = Vec::new();
                flatten("", v, &mut flat);
                for (k, v) in flat {
                    let _ = writeln!(out, "{k},{v}");
                }
                out
            }
            (Body::Table { columns, rows }, Format::Json) => {
                let list: Vec<Value> = rows
                    .iter()
                    .map(|r| Value::Object(columns.iter().cloned().zip(r.iter().cloned()).collect()))
                    .collect();
                pretty(&Value::Array(list))
            }
            (Body::Table { columns, rows }, Format::Csv) => {
                let mut out = columns.join(",");
                out.push('\n');
                for r in rows {
                    let cells: Vec<String> = r.iter().map(csv_cell).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}

/// Floats with 17 significant digits, everything else as JSON text.
fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains(',') || s.contains('"') => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => format!("{:.16e}", n.as_f64().expect("f64")),
        Value::Array(items) => items.iter().map(csv_cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), csv_cell(other))),
    }
}

/// JSON number, or a string for the non-finite values JSON cannot carry.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

fn object(fields: Vec<(&str, Value)>) -> Value {
    Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

fn provenance(solver: &str, grid: Value, tol: f64) -> Value {
    object(vec![
        ("solver", json!(solver)),
        ("grid", grid),
        ("tol", num(tol)),
        ("version", json!(env!("CARGO_PKG_VERSION"))),
    ])
}

fn with_provenance(mut body: Value, prov: Value) -> Value {
    if let Value::Object(map) = &mut body {
        map.insert("provenance".into(), prov);
    }
    body
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    // serialize non-finite floats as strings rather than failing
    serde_json::to_value(x).unwrap_or_else(|_| Value::String("unrepresentable".into()))
}

/// Runs one command.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    config.check()?;
    match config.command {
        Command::Lambda => run_lambda(config),
        Command::Cheeger => run_cheeger(config),
        Command::Logsob => run_logsob(config),
        Command::Sobolev => run_sobolev(config),
        Command::Bm => run_bm(config),
        Command::Talagrand => run_talagrand(config),
        Command::Validate => run_validate(config),
        Command::Localize => run_localize(config),
        Command::Sweep => sweep(config),
    }
}

fn ok(body: Value) -> Result<Report, CliError> {
    Ok(Report {
        body: Body::Object(body),
        violation: false,
    })
}

fn run_lambda(c: &RunConfig) -> Result<Report, CliError> {
    let p: f64 = c.require("p")?;
    if c.raw("density").is_some() {
        let h = c.density()?;
        let value = rayleigh_p(&h, p, c.tol)?;
        return ok(with_provenance(
            object(vec![("rayleigh", num(value)), ("p", num(p)), ("tol", num(c.tol))]),
            provenance("discrete p-Laplacian shooting", json!(h.len()), c.tol),
        ));
    }
    let k: f64 = c.require("K")?;
    let n: f64 = c.require("N")?;
    let d = c.diameter(k, n)?;
    let r = lambda_model(p, k, n, d, c.tol)?;
    let mut fields = vec![
        ("lambda", num(r.lambda)),
        ("tol", num(c.tol)),
        ("bracket", json!([num(r.bracket.0), num(r.bracket.1)])),
        ("iterations", json!(r.iterations)),
        ("phi_end_error", num(r.phi_end_error)),
        ("at_pole", json!(r.at_pole)),
    ];
    if let Some(exact) = lambda_closed_form(p, k, n, d) {
        fields.push(("closed_form", num(exact)));
    }
    if let Ok(b) = li_wang_bound(p, k, n) {
        fields.push(("li_wang_bound", num(b)));
    }
    ok(with_provenance(
        object(fields),
        provenance("Prüfer shooting with bisection", json!({ "step": num(r.grid_step) }), c.tol),
    ))
}

fn run_cheeger(c: &RunConfig) -> Result<Report, CliError> {
    if c.raw("density").is_some() {
        let h = c.density()?;
        let two = c.get::<usize>("intervals")?.unwrap_or(1) >= 2;
        let r = cheeger_density(&h, !two)?;
        let l11 = lambda_11(&h)?;
        return ok(with_provenance(
            object(vec![
                ("cheeger", num(r.value)),
                ("cut", json!(r.optimal_cut.to_string())),
                ("side_mass", num(r.side_mass)),
                ("lambda_11", num(l11)),
            ]),
            provenance("interval search", json!(h.len()), c.tol),
        ));
    }
    let k: f64 = c.require("K")?;
    let n: f64 = c.require("N")?;
    let d = c.diameter(k, n)?;
    ok(with_provenance(
        object(vec![("cheeger", num(cheeger_model(k, n, d)?))]),
        provenance("model profile search", json!("adaptive"), c.tol),
    ))
}

fn functional_report(r: &cdkn::functional::FunctionalReport) -> Value {
    let opt = |x: Option<f64>| x.map_or(Value::Null, num);
    object(vec![
        ("estimate", num(r.constant_estimate)),
        ("reference", opt(r.reference)),
        ("lower_bound", opt(r.lower_bound)),
        ("slack", num(r.slack)),
        ("holds", json!(r.holds)),
        ("upper_bound", json!(r.upper_bound)),
    ])
}

fn trials(c: &RunConfig, default: usize) -> Result<usize, CliError> {
    Ok(c.get("trials")?.unwrap_or(default))
}

fn run_logsob(c: &RunConfig) -> Result<Report, CliError> {
    let k: f64 = c.require("K")?;
    let n: f64 = c.require("N")?;
    let d = c.diameter(k, n)?;
    let r = logsob_estimate(k, n, d, trials(c, 4)?)?;
    Ok(Report {
        violation: !r.holds,
        body: Body::Object(with_provenance(
            functional_report(&r),
            provenance("minimization over model densities", json!(1001), c.tol),
        )),
    })
}

fn run_sobolev(c: &RunConfig) -> Result<Report, CliError> {
    let p: f64 = c.require("p")?;
    let q: f64 = c.get("q")?.unwrap_or(2.0);
    let k: f64 = c.require("K")?;
    let n: f64 = c.require("N")?;
    let d = c.diameter(k, n)?;
    let r = sobolev_estimate(k, n, d, p, q, trials(c, 4)?)?;
    Ok(Report {
        violation: !r.holds,
        body: Body::Object(with_provenance(
            functional_report(&r),
            provenance("minimization over model densities", json!(1001), c.tol),
        )),
    })
}

fn run_bm(c: &RunConfig) -> Result<Report, CliError> {
    let h = c.density()?;
    let k: f64 = c.require("K")?;
    let n: f64 = c.require("N")?;
    let a0: IntervalSet = c.require("A0")?;
    let a1: IntervalSet = c.require("A1")?;
    let t: f64 = c.require("t")?;
    let r = verify_bm(&h, k, n, &a0, &a1, t, c.tol)?;
    Ok(Report {
        violation: !r.holds,
        body: Body::Object(with_provenance(to_value(&r), provenance("exact interpolant masses", json!(h.len()), c.tol))),
    })
}

fn run_talagrand(c: &RunConfig) -> Result<Report, CliError> {
    let h = c.density()?;
    let alpha: f64 = c.require("alpha")?;
    let prov = provenance("quantile coupling", json!(h.len()), c.tol);
    if let Some(path) = c.get::<PathBuf>("mu")? {
        let mu = Measure1D::new(&GridDensity::read_csv(&path)?)?;
        let r = talagrand_check(&h, &mu, alpha, c.tol)?;
        let body = object(vec![
            ("w2_squared", num(r.constant_estimate)),
            ("entropy_bound", r.reference.map_or(Value::Null, num)),
            ("slack", num(r.slack)),
            ("holds", json!(r.holds)),
        ]);
        return Ok(Report {
            violation: !r.holds,
            body: Body::Object(with_provenance(body, prov)),
        });
    }
    let seed: u64 = c.get("seed")?.unwrap_or(0);
    let count = trials(c, 100)?;
    let mut rng = suite::rng(seed);
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..count {
        let mu = suite::random_measure(&mut rng, &h)?;
        let r = talagrand_check(&h, &mu, alpha, c.tol)?;
        worst = worst.min(r.slack);
        violations += usize::from(!r.holds);
    }
    let body = object(vec![
        ("trials", json!(count)),
        ("seed", json!(seed)),
        ("min_slack", num(worst)),
        ("violations", json!(violations)),
        ("holds", json!(violations == 0)),
    ]);
    Ok(Report {
        violation: violations > 0,
        body: Body::Object(with_provenance(body, prov)),
    })
}

fn run_validate(c: &RunConfig) -> Result<Report, CliError> {
    let h = c.density()?;
    let k: f64 = c.require("K")?;
    let n: f64 = c.require("N")?;
    let r = validate_cd(&h, k, n, c.tol)?;
    let witness = r
        .witness
        .map_or(Value::Null, |(t0, t1, s)| json!({ "t0": num(t0), "t1": num(t1), "s": num(s) }));
    let body = object(vec![
        ("valid", json!(r.valid)),
        ("worst_violation", num(r.worst_violation)),
        ("witness", witness),
        ("checks_run", json!(r.checks_run)),
    ]);
    Ok(Report {
        violation: !r.valid,
        body: Body::Object(with_provenance(body, provenance("sampled distortion inequality", json!(h.len()), c.tol))),
    })
}

fn run_localize(c: &RunConfig) -> Result<Report, CliError> {
    let path: PathBuf = c.require("disintegration")?;
    let d = Disintegration::read_json(&path)?;
    let k: f64 = c.require("K")?;
    let n: f64 = c.require("N")?;
    let check = c.raw("check").unwrap_or("verify");
    let prov = provenance("disintegration bench", json!(d.fibers().len()), c.tol);
    let (body, violation) = match check {
        "verify" => {
            let r = verify_disintegration(&d, k, n, c.tol)?;
            let body = object(vec![
                ("valid", json!(r.valid)),
                ("weights_ok", json!(r.weights_ok)),
                ("weight_error", num(r.weight_error)),
                ("worst_fiber", json!(r.worst_fiber)),
                ("worst_violation", num(r.worst_violation)),
            ]);
            (body, !r.valid)
        }
        "spectral" => {
            let p: f64 = c.require("p")?;
            let diam = c.diameter(k, n)?;
            let r = aggregate_spectral(&d, p, k, n, diam, c.tol)?;
            (to_value(&r), !r.holds)
        }
        "logsob" => {
            let diam = c.diameter(k, n)?;
            let r = aggregate_logsob(&d, k, n, diam, c.get("alpha")?, c.tol)?;
            (to_value(&r), !r.holds)
        }
        other => return Err(usage(format!("--check must be verify, spectral or logsob, got `{other}`"))),
    };
    Ok(Report {
        violation,
        body: Body::Object(with_provenance(body, prov)),
    })
}

/// Values of a sweep axis: `a,b,c`, `lo:hi:count`, or a single number.
pub fn parse_range(key: &str, spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| usage(format!("--{key} `{spec}`: {msg}"));
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(bad("empty range".into()));
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(bad("expected lo:hi:count".into()));
        };
        let lo: f64 = lo.trim().parse().map_err(|e| bad(format!("{e}")))?;
        let hi: f64 = hi.trim().parse().map_err(|e| bad(format!("{e}")))?;
        let count: usize = count.trim().parse().map_err(|e| bad(format!("{e}")))?;
        return match count {
            0 => Err(bad("empty range".into())),
            1 => Ok(vec![lo]),
            _ => Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()),
        };
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("{e}"))))
        .collect()
}

const SWEEP_CONSTANTS: [&str; 4] = ["lambda", "li_wang", "cheeger", "logsob"];

fn sweep_row(constants: &[String], p: f64, k: f64, n: f64, d: f64, tol: f64) -> Vec<Value> {
    let mut row = vec![num(p), num(k), num(n), num(d)];
    let mut errors = Vec::new();
    for name in constants {
        let value = match name.as_str() {
            "lambda" => lambda_model(p, k, n, d, tol).map(|r| r.lambda),
            "li_wang" => li_wang_bound(p, k, n),
            "cheeger" => cheeger_model(k, n, d),
            "logsob" => logsob_estimate(k, n, d, 2).map(|r| r.constant_estimate),
            _ => unreachable!("validated constant name"),
        };
        match value {
            Ok(v) => row.push(num(v)),
            Err(e) => {
                row.push(Value::Null);
                errors.push(format!("{name}: {e}"));
            }
        }
    }
    row.push(json!(errors.join("; ")));
    row
}

/// Cartesian product over the `p`, `K`, `N` and `D` axes, one row per tuple
/// in input order.
pub fn sweep(c: &RunConfig) -> Result<Report, CliError> {
    c.check()?;
    let axis = |key: &str, default: Option<&str>| -> Result<Vec<f64>, CliError> {
        match c.raw(key).or(default) {
            Some(spec) => parse_range(key, spec),
            None => Err(usage(format!("`sweep` needs --{key}"))),
        }
    };
    let ps = axis("p", Some("2"))?;
    let ks = axis("K", None)?;
    let ns = axis("N", None)?;
    let ds = axis("D", Some(&PI.to_string()))?;
    let constants: Vec<String> = c
        .raw("constants")
        .unwrap_or("lambda")
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if let Some(bad) = constants.iter().find(|s| !SWEEP_CONSTANTS.contains(&s.as_str())) {
        return Err(usage(format!("unknown constant `{bad}`; choose from {}", SWEEP_CONSTANTS.join(","))));
    }
    let mut tuples = Vec::with_capacity(ps.len() * ks.len() * ns.len() * ds.len());
    for &p in &ps {
        for &k in &ks {
            for &n in &ns {
                for &d in &ds {
                    tuples.push((p, k, n, d));
                }
            }
        }
    }
    let rows: Vec<Vec<Value>> = tuples
        .par_iter()
        .map(|&(p, k, n, d)| sweep_row(&constants, p, k, n, d, c.tol))
        .collect();
    let mut columns: Vec<String> = ["p", "K", "N", "D"].iter().map(|s| s.to_string()).collect();
    columns.extend(constants.iter().cloned());
    columns.push("error".into());
    Ok(Report {
        body: Body::Table { columns, rows },
        violation: false,
    })
}

/// Writes the rendered report to `path`, or returns it for stdout.
pub fn emit(report: &Report, config: &RunConfig) -> std::io::Result<Option<String>> {
    let text = report.render(config.format);
    match &config.output {
        Some(path) => write_file(path, &text).map(|_| None),
        None => Ok(Some(text)),
    }
}

fn write_file(path: &Path, text: &str) -> std::io::Result<()> {
    std::fs::write(path, text)
}
