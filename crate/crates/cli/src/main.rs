use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cdkn_cli::{emit, run, Command, Format, RunConfig, DEFAULT_GRID, DEFAULT_TOL};
use clap::Parser;

/// Sharp comparison constants of one-dimensional CD(K,N) model spaces.
///
/// Exit status: 0 on success, 1 when a checked inequality fails, 2 on usage
/// or input errors, 3 when a root bracket cannot be found.
#[derive(Parser, Debug)]
#[command(name = "cdkn", version, allow_negative_numbers = true)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Exponent of the p-Laplacian or the Sobolev exponent.
    #[arg(long)]
    p: Option<String>,
    #[arg(long = "K", allow_hyphen_values = true)]
    k: Option<String>,
    #[arg(long = "N")]
    n: Option<String>,
    /// Diameter; defaults to the Bonnet-Myers bound when K > 0.
    #[arg(long = "D")]
    d: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Density CSV with header `t,h`.
    #[arg(long)]
    density: Option<PathBuf>,
    /// Measure CSV for `talagrand`, on the grid of `--density`.
    #[arg(long)]
    mu: Option<PathBuf>,
    /// Disintegration JSON for `localize`.
    #[arg(long)]
    disintegration: Option<PathBuf>,
    /// Sets as `a:b,c:d`.
    #[arg(long = "A0")]
    a0: Option<String>,
    #[arg(long = "A1")]
    a1: Option<String>,
    /// `localize` check: verify, spectral or logsob.
    #[arg(long)]
    check: Option<String>,
    /// `cheeger` on a density: 1 or 2 intervals.
    #[arg(long)]
    intervals: Option<String>,
    /// Sweep columns, from lambda, li_wang, cheeger, logsob.
    #[arg(long)]
    constants: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    fn into_config(self) -> RunConfig {
        let mut params = BTreeMap::new();
        let mut put = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                params.insert(key.to_string(), v);
            }
        };
        let path = |p: Option<PathBuf>| p.map(|p| p.display().to_string());
        put("p", self.p);
        put("K", self.k);
        put("N", self.n);
        put("D", self.d);
        put("q", self.q);
        put("t", self.t);
        put("alpha", self.alpha);
        put("density", path(self.density));
        put("mu", path(self.mu));
        put("disintegration", path(self.disintegration));
        put("A0", self.a0);
        put("A1", self.a1);
        put("check", self.check);
        put("intervals", self.intervals);
        put("constants", self.constants);
        put("seed", Some(self.seed.to_string()));
        put("trials", self.trials.map(|t| t.to_string()));
        RunConfig {
            command: self.command,
            params,
            grid_nodes: self.grid,
            tol: self.tol,
            output: self.out,
            format: self.format,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = cli.into_config();
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cdkn: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match emit(&report, &config) {
        Ok(Some(text)) => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("cdkn: cannot write output: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
