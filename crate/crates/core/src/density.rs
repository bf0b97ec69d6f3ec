//! Sampled one-dimensional densities, the CD(K,N) validator, model profiles
//! and the power-convolution mollifier.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coeffs::{c_delta, sigma, CdParams, ExtendedReal};
use crate::error::{Error, Result};
use crate::quad;

/// Dimensions in `(1, 1 + N_ONE_BAND)` are treated as `N = 1`.
pub const N_ONE_BAND: f64 = 1e-6;

/// Endpoint values below this fraction of the maximum count as zero in the
/// `∞ · 0` convention.
const ZERO_ENDPOINT: f64 = 1e-14;

/// Non-negative density sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    origin: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(origin: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !origin.is_finite() {
            return Err(Error::domain(format!("bad grid: origin {origin}, step {step}")));
        }
        if values.len() < 4 {
            return Err(Error::domain(format!(
                "a density needs at least 4 nodes, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::domain(format!(
                "density value {} at node {i} is not a finite non-negative number",
                values[i]
            )));
        }
        Ok(GridDensity {
            origin,
            step,
            values,
        })
    }

    /// Samples `f` at `nodes` equispaced points of `[a, b]`.
    pub fn from_fn(a: f64, b: f64, nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::domain(format!("empty interval [{a}, {b}]")));
        }
        if nodes < 4 {
            return Err(Error::domain(format!("a density needs at least 4 nodes, got {nodes}")));
        }
        let step = (b - a) / (nodes - 1) as f64;
        let values = (0..nodes).map(|i| f(a + i as f64 * step)).collect();
        GridDensity::new(a, step, values)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.t(self.len() - 1)
    }

    pub fn support_length(&self) -> f64 {
        (self.len() - 1) as f64 * self.step
    }

    /// Trapezoid integral.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.values, self.step)
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::domain("value count does not match the grid"));
        }
        GridDensity::new(self.origin, self.step, values)
    }

    /// Multiplies every value by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|v| v * c).collect())
    }

    /// Index range `[first, last]` of positive values, if any.
    pub fn positive_range(&self) -> Option<(usize, usize)> {
        let first = self.values.iter().position(|&v| v > 0.0)?;
        let last = self.values.iter().rposition(|&v| v > 0.0)?;
        Some((first, last))
    }

    /// True when the grids have the same origin, step and length.
    pub fn same_grid(&self, other: &GridDensity) -> bool {
        self.len() == other.len()
            && (self.origin - other.origin).abs() <= 1e-12 * (1.0 + self.origin.abs())
            && (self.step - other.step).abs() <= 1e-12 * self.step
    }

    /// Linear interpolation, zero outside the grid.
    pub fn eval(&self, t: f64) -> f64 {
        let x = (t - self.origin) / self.step;
        let last = (self.len() - 1) as f64;
        if !(x >= 0.0 && x <= last) {
            return 0.0;
        }
        let i = (x.floor() as usize).min(self.len() - 2);
        let u = x - i as f64;
        (1.0 - u) * self.values[i] + u * self.values[i + 1]
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let (origin, step, values) = read_grid_csv(path, "h")?;
        GridDensity::new(origin, step, values)
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "t,h")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", self.t(i), v)?;
        }
        Ok(())
    }
}

/// Reads a two-column `t,<column>` file on a uniform grid. Only the `h`
/// column is required to be non-negative.
pub(crate) fn read_grid_csv(path: &Path, column: &str) -> Result<(f64, f64, Vec<f64>)> {
    let file = File::open(path)?;
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut ts = Vec::new();
    let mut hs = Vec::new();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = idx as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !saw_header {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols != ["t", column] {
                return Err(parse_err(lineno, format!("expected header `t,{column}`, got `{trimmed}`")));
            }
            saw_header = true;
            continue;
        }
        let mut fields = trimmed.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(lineno, "expected two columns".into()));
        };
        let t: f64 = a
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad t value `{a}`")))?;
        let h: f64 = b
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad {column} value `{b}`")))?;
        if !h.is_finite() || (column == "h" && h < 0.0) || !t.is_finite() {
            return Err(parse_err(lineno, format!("non-finite or negative entry `{trimmed}`")));
        }
        if let Some(&prev) = ts.last() {
            if !(t > prev) {
                return Err(parse_err(lineno, "t column must be strictly increasing".into()));
            }
        }
        ts.push(t);
        hs.push(h);
        rows.push(lineno);
    }
    if !saw_header {
        return Err(parse_err(1, "empty file".into()));
    }
    if ts.len() < 4 {
        return Err(parse_err(ts.len() as u64 + 1, "need at least 4 rows".into()));
    }
    let first = ts[1] - ts[0];
    for (i, w) in ts.windows(2).enumerate() {
        if ((w[1] - w[0]) - first).abs() > 1e-9 * first {
            return Err(parse_err(rows[i + 1], format!("non-uniform grid step {}", w[1] - w[0])));
        }
    }
    let step = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    Ok((ts[0], step, hs))
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Rescales so that the trapezoid mass is 1.
pub fn normalize(h: &GridDensity) -> Result<GridDensity> {
    let m = h.mass();
    if !(m > 0.0) {
        return Err(Error::domain("cannot normalize a density of zero mass"));
    }
    let mut out = h.scaled(1.0 / m)?;
    // one correction pass absorbs rounding in the division
    let m2 = out.mass();
    if (m2 - 1.0).abs() > 1e-15 {
        out = out.scaled(1.0 / m2)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdValidationReport {
    pub valid: bool,
    /// Largest violation, relative to `max h^{1/(N-1)}`; negative when every check holds strictly.
    pub worst_violation: f64,
    /// `(t0, t1, s)` of the worst check. Three-point checks report `s = 0.5`.
    pub witness: Option<(f64, f64, f64)>,
    pub checks_run: usize,
}

struct Worst {
    value: f64,
    witness: Option<(f64, f64, f64)>,
    checks: usize,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: f64::NEG_INFINITY,
            witness: None,
            checks: 0,
        }
    }

    fn record(&mut self, value: f64, witness: (f64, f64, f64)) {
        self.checks += 1;
        if value > self.value || value.is_nan() {
            self.value = value;
            self.witness = Some(witness);
        }
    }

    fn report(self, tol: f64) -> CdValidationReport {
        let worst = if self.checks == 0 { 0.0 } else { self.value };
        CdValidationReport {
            valid: worst <= tol,
            worst_violation: worst,
            witness: self.witness,
            checks_run: self.checks,
        }
    }
}

/// Checks the CD(K,N) condition for `h`.
///
/// For `N > 1` the weak inequality is tested on `g = h^{1/(N-1)}` over node
/// triples inside the positivity range, whose index gaps are powers of two,
/// together with the three-point form of `g'' + K/(N-1) g ≤ 0`. For `N = 1`
/// the density must be constant on its support.
pub fn validate_cd(h: &GridDensity, k: f64, n: f64, tol: f64) -> Result<CdValidationReport> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(n >= 1.0) {
        return Err(Error::domain(format!("N must be >= 1, got {n}")));
    }
    let Some((first, last)) = h.positive_range() else {
        return Ok(Worst::new().report(tol));
    };
    let mut worst = Worst::new();
    if n < 1.0 + N_ONE_BAND {
        let vals = &h.values[first..=last];
        let hmax = vals.iter().cloned().fold(0.0, f64::max);
        for (j, &v) in vals.iter().enumerate() {
            let i = first + j;
            worst.record((hmax - v) / hmax, (h.t(first), h.t(last), (i - first) as f64 / (last - first).max(1) as f64));
        }
        return Ok(worst.report(tol));
    }

    let e = 1.0 / (n - 1.0);
    let g: Vec<f64> = h.values.iter().map(|v| v.powf(e)).collect();
    let gmax = g[first..=last].iter().cloned().fold(0.0, f64::max);
    let gs: Vec<f64> = g.iter().map(|v| v / gmax).collect();

    // interior zeros break convexity of the support
    for i in first..=last {
        if gs[i] == 0.0 {
            let left = gs[first..i].iter().cloned().fold(0.0, f64::max);
            let right = gs[i + 1..=last].iter().cloned().fold(0.0, f64::max);
            worst.record(left.min(right), (h.t(first), h.t(last), (i - first) as f64 / (last - first) as f64));
        }
    }

    let mut gap = 2usize;
    while gap <= last - first {
        let theta = gap as f64 * h.step;
        let fractions: &[usize] = if gap == 2 { &[2] } else { &[1, 2, 3] };
        for &quarter in fractions {
            let s = quarter as f64 / 4.0;
            let offset = gap * quarter / 4;
            let sig_left = sigma(k, n - 1.0, 1.0 - s, theta)?;
            let sig_right = sigma(k, n - 1.0, s, theta)?;
            for i0 in first..=last - gap {
                let i1 = i0 + gap;
                let rhs = weighted(sig_left, gs[i0]) + weighted(sig_right, gs[i1]);
                worst.record(rhs - gs[i0 + offset], (h.t(i0), h.t(i1), s));
            }
        }
        gap *= 2;
    }

    let delta = k / (n - 1.0);
    let c = c_delta(delta, h.step);
    let scale = h.step * h.step * (1.0 + delta.abs());
    for i in first + 1..last {
        let d2 = gs[i - 1] + gs[i + 1] - 2.0 * c * gs[i];
        worst.record(d2 / scale, (h.t(i - 1), h.t(i + 1), 0.5));
    }
    Ok(worst.report(tol))
}

/// `σ · g` with the `∞ · 0 = 0` convention on scaled endpoint values.
fn weighted(sig: ExtendedReal, g: f64) -> f64 {
    match sig {
        ExtendedReal::Finite(s) => s * g,
        ExtendedReal::PosInfinity if g <= ZERO_ENDPOINT => 0.0,
        ExtendedReal::PosInfinity => f64::INFINITY,
    }
}

/// Standard bump `exp(-1/(x(1-x)))` on `(0,1)`, unnormalized.
fn bump(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        (-1.0 / (x * (1.0 - x))).exp()
    }
}

/// Node weights of `t ↦ ∫ g(t - x) ψ_ε(x) dx` for a piecewise linear `g`.
fn mollifier_weights(step: f64, eps: f64) -> Vec<f64> {
    let m = (eps / step).ceil() as usize;
    let psi = |x: f64| bump(x / eps);
    let mut w: Vec<f64> = (0..=m)
        .map(|j| {
            let c = j as f64 * step;
            let lo = (c - step).max(0.0);
            let hi = (c + step).min(eps);
            if hi <= lo {
                return 0.0;
            }
            let hat = |x: f64| psi(x) * (1.0 - ((x - c) / step).abs()).max(0.0);
            let mid = c.clamp(lo, hi);
            quad::integrate(hat, lo, mid, 1e-16, 1e-13).value
                + quad::integrate(hat, mid, hi, 1e-16, 1e-13).value
        })
        .collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// `h_ε = (g * ψ_ε)^{N-1}` with `g = h^{1/(N-1)}` extended by zero and
/// `ψ_ε(x) = ψ(x/ε)/ε` supported in `[0, ε]`.
///
/// The result lives on the same step, padded by `ceil(ε/step)` nodes on both
/// sides, so it covers `[origin - ε, end + ε]` up to one cell.
pub fn mollify(h: &GridDensity, n: f64, eps: f64) -> Result<GridDensity> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("mollifier width must be positive, got {eps}")));
    }
    if !(n >= 1.0 + N_ONE_BAND) {
        return Err(Error::domain(format!("mollify needs N > 1, got {n}")));
    }
    let e = 1.0 / (n - 1.0);
    let w = mollifier_weights(h.step, eps);
    let m = w.len() - 1;
    let len = h.len() + 2 * m;
    let mut padded = vec![0.0; len];
    for (i, v) in h.values.iter().enumerate() {
        padded[i + m] = v.powf(e);
    }
    let values = (0..len)
        .map(|i| {
            let conv: f64 = w
                .iter()
                .enumerate()
                .filter(|&(j, _)| j <= i)
                .map(|(j, wj)| wj * padded[i - j])
                .sum();
            conv.powf(n - 1.0)
        })
        .collect();
    GridDensity::new(h.origin - m as f64 * h.step, h.step, values)
}

/// Sup-norm distance between two densities on aligned grids of equal step,
/// each extended by zero.
pub fn sup_distance(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    if (a.step - b.step).abs() > 1e-12 * a.step {
        return Err(Error::domain("grids have different steps"));
    }
    let shift = (b.origin - a.origin) / a.step;
    let offset = shift.round();
    if (shift - offset).abs() > 1e-6 {
        return Err(Error::domain("grids are not aligned"));
    }
    let offset = offset as i64;
    let lo = 0.min(offset);
    let hi = (a.len() as i64).max(offset + b.len() as i64);
    let at = |v: &[f64], i: i64| if i >= 0 && (i as usize) < v.len() { v[i as usize] } else { 0.0 };
    Ok((lo..hi)
        .map(|i| (at(&a.values, i) - at(&b.values, i - offset)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sin,
    Sinh,
    Cosh,
    Exp,
    Power,
    Constant,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sin" => ModelKind::Sin,
            "sinh" => ModelKind::Sinh,
            "cosh" => ModelKind::Cosh,
            "exp" => ModelKind::Exp,
            "power" => ModelKind::Power,
            "constant" => ModelKind::Constant,
            _ => return Err(Error::domain(format!("unknown model kind `{s}`"))),
        })
    }
}

/// Samples a model profile on `[shift, shift + D]`.
pub fn model_density(kind: ModelKind, cd: CdParams, shift: f64, grid_nodes: usize) -> Result<GridDensity> {
    let CdParams { k, n, d } = cd;
    if !d.is_finite() {
        return Err(Error::domain("model densities need a finite diameter"));
    }
    let needs = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("{kind:?} profile requires {what}, got K={k}, N={n}")))
        }
    };
    let m = n - 1.0;
    let f: Box<dyn Fn(f64) -> f64> = match kind {
        ModelKind::Sin => {
            needs(k > 0.0 && n > 1.0, "K > 0 and N > 1")?;
            let a = (k / m).sqrt();
            Box::new(move |t| (a * t).sin().max(0.0).powf(m))
        }
        ModelKind::Sinh => {
            needs(k < 0.0 && n > 1.0, "K < 0 and N > 1")?;
            let a = (-k / m).sqrt();
            Box::new(move |t| (a * t).sinh().max(0.0).powf(m))
        }
        ModelKind::Cosh => {
            needs(k < 0.0 && n > 1.0, "K < 0 and N > 1")?;
            let a = (-k / m).sqrt();
            Box::new(move |t| (a * t).cosh().powf(m))
        }
        ModelKind::Exp => {
            needs(k < 0.0, "K < 0")?;
            let a = (-k * m).sqrt();
            Box::new(move |t| (a * t).exp())
        }
        ModelKind::Power => {
            needs(k <= 0.0, "K <= 0")?;
            Box::new(move |t: f64| t.max(0.0).powf(m))
        }
        ModelKind::Constant => {
            needs(k <= 0.0, "K <= 0")?;
            Box::new(|_| 1.0)
        }
    };
    GridDensity::from_fn(shift, shift + d, grid_nodes, f)
}

/// Shifted model profiles sampled from each case of the comparison family
/// for `(K, N, D)`, every profile scaled to maximum 1.
///
/// `K > 0`: `sin^{N-1}` on `[ξ, ξ + D]` for `shifts` values of `ξ` in
/// `[0, π sqrt((N-1)/K) - D]` (a single profile when `D` reaches the bound).
/// `K = 0`: the flat profile and `t^{N-1}` on `[ξ, ξ + D]`. `K < 0`: `exp`,
/// `sinh^{N-1}` and `cosh^{N-1}`, the last two on shifted windows.
pub fn model_family(cd: CdParams, shifts: usize, grid_nodes: usize) -> Result<Vec<GridDensity>> {
    let CdParams { k, n, d } = cd;
    if !d.is_finite() {
        return Err(Error::domain("model families need a finite diameter"));
    }
    let shifts = shifts.max(1);
    let geometric = |j: usize, unit: f64| unit * ((1u64 << j.min(50)) as f64 - 1.0) / 4.0;
    let mut out = Vec::new();
    let mut push = |kind: ModelKind, shift: f64, d: f64| -> Result<()> {
        let h = model_density(kind, CdParams { k, n, d }, shift, grid_nodes)?;
        let top = h.values().iter().cloned().fold(0.0, f64::max);
        if top > 0.0 && top.is_finite() {
            out.push(h.scaled(1.0 / top)?);
        }
        Ok(())
    };
    if n < 1.0 + N_ONE_BAND {
        if k > 0.0 {
            return Err(Error::domain("the family is degenerate for N = 1 and K > 0"));
        }
        push(ModelKind::Constant, 0.0, d)?;
        return Ok(out);
    }
    if k > 0.0 {
        let bound = cd.bonnet_myers();
        if d >= bound {
            push(ModelKind::Sin, 0.0, bound)?;
        } else {
            for j in 0..shifts {
                let xi = if shifts == 1 { 0.5 * (bound - d) } else { (bound - d) * j as f64 / (shifts - 1) as f64 };
                push(ModelKind::Sin, xi, d)?;
            }
        }
    } else if k == 0.0 {
        push(ModelKind::Constant, 0.0, d)?;
        for j in 0..shifts {
            push(ModelKind::Power, geometric(j, d), d)?;
        }
    } else {
        let rate = (-k / (n - 1.0)).sqrt();
        push(ModelKind::Exp, 0.0, d)?;
        for j in 0..shifts {
            push(ModelKind::Sinh, geometric(j, 1.0 / rate), d)?;
            push(ModelKind::Cosh, -0.5 * d + geometric(j, 1.0 / rate), d)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sin_density(n: f64, nodes: usize) -> GridDensity {
        model_density(ModelKind::Sin, CdParams::new(n - 1.0, n, PI).unwrap(), 0.0, nodes).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(GridDensity::new(0.0, 0.1, vec![1.0; 3]).is_err());
        assert!(GridDensity::new(0.0, 0.0, vec![1.0; 5]).is_err());
        assert!(GridDensity::new(0.0, 0.1, vec![1.0, -1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn normalize_examples() {
        let ones = GridDensity::from_fn(0.0, 2.0, 11, |_| 1.0).unwrap();
        let h = normalize(&ones).unwrap();
        assert!(h.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
        let again = normalize(&h).unwrap();
        for (a, b) in h.values().iter().zip(again.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let s = sin_density(2.0, 4001);
        let ratio = normalize(&s).unwrap().values()[1000] / s.values()[1000];
        assert!((ratio - 0.5).abs() < 1e-6);
        assert!(normalize(&ones.scaled(0.0).unwrap()).is_err());
    }

    #[test]
    fn validator_examples() {
        let c = GridDensity::from_fn(0.0, 2.0, 257, |_| 1.0).unwrap();
        for n in [1.0, 2.0, 4.5] {
            assert!(validate_cd(&c, 0.0, n, 1e-9).unwrap().valid);
        }
        for n in [2.0, 3.0, 5.0] {
            let r = validate_cd(&sin_density(n, 2000), n - 1.0, n, 1e-9).unwrap();
            assert!(r.valid, "N={n}: {r:?}");
            assert!(r.checks_run > 1000);
        }
        let sinh = GridDensity::from_fn(0.0, 1.0, 200, f64::sinh).unwrap();
        let r = validate_cd(&sinh, -1.0, 1.0, 1e-9).unwrap();
        assert!(!r.valid && r.witness.is_some());
        assert!(validate_cd(&c, 0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn validator_rejects_convex_and_gapped_profiles() {
        let convex = GridDensity::from_fn(0.0, 1.0, 200, |t| 1.0 + (t - 0.5).powi(2)).unwrap();
        assert!(!validate_cd(&convex, 0.0, 2.0, 1e-9).unwrap().valid);
        let gapped = GridDensity::from_fn(0.0, 1.0, 101, |t| if (t - 0.5).abs() < 0.006 { 0.0 } else { 1.0 })
            .unwrap();
        assert!(!validate_cd(&gapped, 0.0, 3.0, 1e-9).unwrap().valid);
        // sin^{N-1} is too curved for a larger K
        assert!(!validate_cd(&sin_density(3.0, 1000), 2.5, 3.0, 1e-9).unwrap().valid);
    }

    #[test]
    fn validator_is_scale_invariant() {
        let h = sin_density(3.0, 900);
        for c in [1e-6, 0.3, 7.0, 1e5] {
            let a = validate_cd(&h, 2.0, 3.0, 1e-9).unwrap();
            let b = validate_cd(&h.scaled(c).unwrap(), 2.0, 3.0, 1e-9).unwrap();
            assert_eq!(a.valid, b.valid);
        }
    }

    #[test]
    fn model_profiles_validate() {
        let flat = model_density(ModelKind::Constant, CdParams::new(0.0, 3.0, 1.0).unwrap(), 0.0, 100).unwrap();
        assert!(flat.values().iter().all(|&v| v == 1.0));
        assert!(validate_cd(&flat, 0.0, 3.0, 1e-9).unwrap().valid);
        let pow = model_density(ModelKind::Power, CdParams::new(0.0, 3.5, 1.0).unwrap(), 1.0, 500).unwrap();
        assert!((pow.origin() - 1.0).abs() < 1e-15 && (pow.end() - 2.0).abs() < 1e-12);
        assert!((pow.values()[499] - 2f64.powf(2.5)).abs() < 1e-12);
        assert!(validate_cd(&pow, 0.0, 3.5, 1e-9).unwrap().valid);
        for kind in [ModelKind::Sinh, ModelKind::Cosh, ModelKind::Exp] {
            let cd = CdParams::new(-2.0, 3.0, 1.5).unwrap();
            let h = model_density(kind, cd, 0.2, 700).unwrap();
            assert!(validate_cd(&h, -2.0, 3.0, 1e-9).unwrap().valid, "{kind:?}");
        }
        assert!(model_density(ModelKind::Sin, CdParams::new(-1.0, 3.0, 1.0).unwrap(), 0.0, 10).is_err());
        assert!(model_density(ModelKind::Exp, CdParams::new(1.0, 3.0, 1.0).unwrap(), 0.0, 10).is_err());
    }

    #[test]
    fn model_family_members_validate() {
        for (k, n, d) in [(2.0, 3.0, 2.0), (2.0, 3.0, PI), (0.0, 2.5, 1.0), (-1.0, 3.0, 1.5)] {
            let fam = model_family(CdParams::new(k, n, d).unwrap(), 4, 400).unwrap();
            assert!(!fam.is_empty());
            for h in &fam {
                assert!(h.support_length() <= d + 1e-9);
                assert!(validate_cd(h, k, n, 1e-8).unwrap().valid, "K={k} origin={}", h.origin());
            }
        }
    }

    #[test]
    fn mollify_constant_and_support() {
        let d = 1.0;
        let h = GridDensity::from_fn(0.0, d, 1001, |_| 1.0).unwrap();
        let eps = 0.05;
        let m = mollify(&h, 3.0, eps).unwrap();
        assert!(m.origin() >= -eps - h.step() - 1e-12);
        assert!(m.end() <= d + eps + h.step() + 1e-12);
        for i in 0..m.len() {
            let t = m.t(i);
            if t >= eps + 1e-9 && t <= d - 1e-9 {
                assert!((m.values()[i] - 1.0).abs() < 1e-8, "t={t}");
            }
            if m.values()[i] > 0.0 {
                assert!(t >= -eps - h.step() && t <= d + eps + h.step());
            }
        }
        assert!(mollify(&h, 1.0, eps).is_err());
        assert!(mollify(&h, 3.0, 0.0).is_err());
    }

    #[test]
    fn mollify_converges_uniformly() {
        let h = sin_density(3.0, 2001);
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.05, 0.025] {
            let dist = sup_distance(&h, &mollify(&h, 3.0, eps).unwrap()).unwrap();
            assert!(dist < prev, "eps={eps}: {dist} !< {prev}");
            prev = dist;
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn mollify_keeps_cd_away_from_the_padding() {
        // discrete convolution with non-negative weights preserves every
        // node-triple inequality where the whole stencil sees the original data
        let h = sin_density(3.0, 1501);
        let eps = 0.05;
        let m = mollify(&h, 3.0, eps).unwrap();
        let pad = ((eps / h.step()).ceil() as usize) * 2;
        let vals: Vec<f64> = m.values()[pad..m.len() - pad].to_vec();
        let cut = GridDensity::new(m.t(pad), m.step(), vals).unwrap();
        assert!(validate_cd(&cut, 2.0, 3.0, 1e-8).unwrap().valid);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = std::env::temp_dir().join(format!("cdkn-density-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let h = sin_density(2.5, 50);
        let path = dir.join("h.csv");
        h.write_csv(File::create(&path).unwrap()).unwrap();
        let back = GridDensity::read_csv(&path).unwrap();
        assert!(back.same_grid(&h));
        for (a, b) in back.values().iter().zip(h.values()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-300));
        }
        let bad = dir.join("bad.csv");
        std::fs::write(&bad, "t,h\n0,1\n0.1,1\n0.25,1\n0.3,1\n").unwrap();
        match GridDensity::read_csv(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&bad, "t,h\n0,1\n0.1,x\n").unwrap();
        assert!(matches!(GridDensity::read_csv(&bad), Err(Error::Parse { line: 3, .. })));
        std::fs::remove_dir_all(&dir).ok();
    }
}
