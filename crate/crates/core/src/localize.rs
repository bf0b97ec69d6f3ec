//! Test bench for one-dimensional disintegrations.
//!
//! A [`Disintegration`] is a finite family of weighted fibers, each carrying a
//! normalized density and a grid function, plus weighted singular points (the
//! set `Z`). The `aggregate_*` operations check an inequality on every fiber
//! and then the weighted sum, keeping each layer of the argument visible in the
//! report.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coeffs::ExtendedReal;
use crate::density::{normalize, read_grid_csv, validate_cd, CdValidationReport, GridDensity};
use crate::error::{Error, Result};
use crate::functional::{entropy_fisher, probability_weights};
use crate::spectral::{fem_masses, lambda_model, p_mean_shift, p_norm_energy};
use crate::transport1d::{bm_report, bm_rhs, intermediate_set, set_mass, theta_extremal, BmReport, IntervalSet, NULL_MASS};

/// Tolerance on `Σ q_i + Σ w_z = 1`.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    pub weight: f64,
    /// Normalized conditional density.
    pub density: GridDensity,
    pub function: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub weight: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disintegration {
    fibers: Vec<Fiber>,
    singular: Vec<SingularPoint>,
}

#[derive(Serialize, Deserialize)]
struct FiberEntry {
    weight: f64,
    density_csv: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    function_csv: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct DisintegrationFile {
    fibers: Vec<FiberEntry>,
    #[serde(default)]
    singular: Vec<SingularPoint>,
}

impl Disintegration {
    /// Normalizes every fiber density; weights must be positive and sum to 1.
    pub fn new(fibers: Vec<(f64, GridDensity, Vec<f64>)>, singular: Vec<SingularPoint>) -> Result<Self> {
        let mut out = Vec::with_capacity(fibers.len());
        for (i, (weight, density, function)) in fibers.into_iter().enumerate() {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::fiber(i, format!("weight must be positive, got {weight}")));
            }
            if function.len() != density.len() {
                return Err(Error::fiber(i, "function does not match the fiber grid"));
            }
            out.push(Fiber {
                weight,
                density: normalize(&density).map_err(|e| Error::fiber(i, e.to_string()))?,
                function,
            });
        }
        if let Some(j) = singular.iter().position(|z| !(z.weight >= 0.0 && z.weight.is_finite())) {
            return Err(Error::precondition(format!("singular point {j} has a negative weight")));
        }
        let d = Disintegration { fibers: out, singular };
        let err = (d.total_weight() - 1.0).abs();
        if err > WEIGHT_TOL {
            return Err(Error::precondition(format!("weights sum to 1 {err:+e}")));
        }
        Ok(d)
    }

    pub fn fibers(&self) -> &[Fiber] {
        &self.fibers
    }

    pub fn singular(&self) -> &[SingularPoint] {
        &self.singular
    }

    pub fn singular_weight(&self) -> f64 {
        self.singular.iter().map(|z| z.weight).sum()
    }

    fn total_weight(&self) -> f64 {
        self.fibers.iter().map(|f| f.weight).sum::<f64>() + self.singular_weight()
    }

    /// Same fibers and weights with new fiber functions and singular values.
    pub fn with_functions(&self, functions: Vec<Vec<f64>>, singular_values: Vec<f64>) -> Result<Self> {
        if functions.len() != self.fibers.len() || singular_values.len() != self.singular.len() {
            return Err(Error::domain("function count does not match the disintegration"));
        }
        let mut out = self.clone();
        for (i, (fiber, f)) in out.fibers.iter_mut().zip(functions).enumerate() {
            if f.len() != fiber.density.len() {
                return Err(Error::fiber(i, "function does not match the fiber grid"));
            }
            fiber.function = f;
        }
        for (z, v) in out.singular.iter_mut().zip(singular_values) {
            z.value = v;
        }
        Ok(out)
    }

    /// `∫ f dm = Σ q_i ∫ f_i dm_i + Σ w_z f(z)` with the fiber functions.
    pub fn integrate(&self) -> Result<f64> {
        let mut total = 0.0;
        for (i, fiber) in self.fibers.iter().enumerate() {
            total += fiber.weight * fiber_mean(fiber, i, &fiber.function)?;
        }
        Ok(total + self.singular.iter().map(|z| z.weight * z.value).sum::<f64>())
    }

    /// Reads the JSON description; CSV paths are relative to the JSON file.
    pub fn read_json(path: &Path) -> Result<Self> {
        let file: DisintegrationFile = serde_json::from_reader(File::open(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut fibers = Vec::with_capacity(file.fibers.len());
        for (i, entry) in file.fibers.into_iter().enumerate() {
            let density = GridDensity::read_csv(&base.join(&entry.density_csv))?;
            let function = match entry.function_csv {
                Some(p) => {
                    let (origin, step, values) = read_grid_csv(&base.join(p), "f")?;
                    let grid = GridDensity::new(origin, step, vec![0.0; values.len()])?;
                    if !grid.same_grid(&density) {
                        return Err(Error::fiber(i, "function and density grids differ"));
                    }
                    values
                }
                None => vec![0.0; density.len()],
            };
            fibers.push((entry.weight, density, function));
        }
        Disintegration::new(fibers, file.singular)
    }

    /// Writes the JSON description and one density and function CSV per fiber
    /// next to it.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or(Path::new("."));
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("disintegration");
        let mut entries = Vec::with_capacity(self.fibers.len());
        for (i, fiber) in self.fibers.iter().enumerate() {
            let density_csv = PathBuf::from(format!("{stem}_fiber{i}_h.csv"));
            let function_csv = PathBuf::from(format!("{stem}_fiber{i}_f.csv"));
            fiber.density.write_csv(BufWriter::new(File::create(base.join(&density_csv))?))?;
            let mut out = BufWriter::new(File::create(base.join(&function_csv))?);
            use std::io::Write;
            writeln!(out, "t,f")?;
            for (j, v) in fiber.function.iter().enumerate() {
                writeln!(out, "{:.16e},{:.16e}", fiber.density.t(j), v)?;
            }
            entries.push(FiberEntry {
                weight: fiber.weight,
                density_csv,
                function_csv: Some(function_csv),
            });
        }
        let file = DisintegrationFile {
            fibers: entries,
            singular: self.singular.clone(),
        };
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), &file)?;
        Ok(())
    }
}

fn fiber_mean(fiber: &Fiber, i: usize, f: &[f64]) -> Result<f64> {
    if f.len() != fiber.density.len() {
        return Err(Error::fiber(i, "function does not match the fiber grid"));
    }
    let (_, node) = probability_weights(&fiber.density).map_err(|e| Error::fiber(i, e.to_string()))?;
    Ok(f.iter().zip(&node).map(|(x, w)| x * w).sum())
}

fn check_diameter(d: &Disintegration, diameter: f64) -> Result<()> {
    for (i, fiber) in d.fibers.iter().enumerate() {
        let len = fiber.density.support_length();
        if len > diameter * (1.0 + 1e-12) {
            return Err(Error::fiber(i, format!("support length {len} exceeds D = {diameter}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisintegrationReport {
    pub weight_error: f64,
    pub weights_ok: bool,
    pub valid: bool,
    /// Fiber with the largest CD violation, when any fiber fails.
    pub worst_fiber: Option<usize>,
    pub worst_violation: f64,
    pub fibers: Vec<CdValidationReport>,
}

/// Checks weight normalization and the CD(K,N) condition on every fiber.
pub fn verify_disintegration(d: &Disintegration, k: f64, n: f64, tol: f64) -> Result<DisintegrationReport> {
    let weight_error = (d.total_weight() - 1.0).abs();
    let fibers = d
        .fibers
        .iter()
        .map(|f| validate_cd(&f.density, k, n, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut worst_fiber = None;
    let mut worst_violation = 0.0;
    for (i, r) in fibers.iter().enumerate() {
        if !r.valid && (worst_fiber.is_none() || r.worst_violation > worst_violation) {
            worst_fiber = Some(i);
            worst_violation = r.worst_violation;
        }
    }
    let weights_ok = weight_error <= WEIGHT_TOL;
    Ok(DisintegrationReport {
        weight_error,
        weights_ok,
        valid: weights_ok && worst_fiber.is_none(),
        worst_fiber,
        worst_violation,
        fibers,
    })
}

/// One asserted step `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub holds: bool,
}

impl Step {
    fn new(lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Step {
            lhs,
            rhs,
            slack,
            holds: slack >= -tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    /// Constant used on every fiber.
    pub constant: f64,
    pub fibers: Vec<Step>,
    pub fibers_hold: bool,
    pub global: Step,
    pub holds: bool,
}

fn aggregate(constant: f64, fibers: Vec<Step>, global: Step) -> AggregateReport {
    let fibers_hold = fibers.iter().all(|s| s.holds);
    AggregateReport {
        constant,
        holds: global.holds,
        fibers_hold,
        fibers,
        global,
    }
}

/// Replays `λ_{K,N,D} ∫|f|^p ≤ ∫|∇f|^p` through the disintegration.
///
/// Each fiber function must have zero p-mean and `f` must vanish on `Z`.
/// Fiber `i` checks `λ ∫|f_i|^p h_i ≤ ∫|f_i'|^p h_i`; the global step sums
/// both sides with the weights `q_i`.
pub fn aggregate_spectral(d: &Disintegration, p: f64, k: f64, n: f64, diameter: f64, tol: f64) -> Result<AggregateReport> {
    check_diameter(d, diameter)?;
    if let Some(j) = d.singular.iter().position(|z| z.value != 0.0) {
        return Err(Error::precondition(format!("function does not vanish at singular point {j}")));
    }
    let lambda = lambda_model(p, k, n, diameter, tol)?.lambda;
    let mut steps = Vec::with_capacity(d.fibers.len());
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for (i, fiber) in d.fibers.iter().enumerate() {
        let f = &fiber.function;
        let (_, node) = fem_masses(&fiber.density);
        let scale: f64 = f.iter().zip(&node).map(|(x, w)| w * x.abs().powf(p - 1.0)).sum();
        let moment: f64 = f
            .iter()
            .zip(&node)
            .map(|(x, w)| w * x.signum() * x.abs().powf(p - 1.0))
            .sum();
        if moment.abs() > tol * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::fiber(i, format!("function has p-mean moment {moment:e}")));
        }
        let (norm, energy) = p_norm_energy(&fiber.density, f, p)?;
        steps.push(Step::new(lambda * norm, energy, tol));
        lhs += fiber.weight * lambda * norm;
        rhs += fiber.weight * energy;
    }
    Ok(aggregate(lambda, steps, Step::new(lhs, rhs, tol)))
}

/// Shifts a fiber function to zero p-mean, as required by [`aggregate_spectral`].
pub fn center_p_mean(h: &GridDensity, f: &[f64], p: f64) -> Vec<f64> {
    let (_, node) = fem_masses(h);
    let c = p_mean_shift(f, &node, p);
    f.iter().map(|x| x - c).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmAggregateReport {
    pub theta: f64,
    pub mass0: f64,
    pub mass1: f64,
    /// Fiber steps `(m_q(A0)/m(A0)) R^N ≤ m_q(A_t)` with `R` the global right side.
    pub fibers: Vec<Step>,
    pub fibers_hold: bool,
    /// `(τ^{(1-t)}(θ) + τ^{(t)}(θ))^N ≤ 1`, checked when a singular point lies in both sets.
    pub singular: Option<Step>,
    pub global: BmReport,
    pub holds: bool,
}

/// Replays the Brunn-Minkowski inequality through the disintegration.
///
/// `a0[i]` and `a1[i]` are the sets on fiber `i`; `z_in_both[j]` places the
/// singular point `j` in `A0 ∩ A1`, otherwise outside both sets. The fiber
/// mass ratios `m_q(A0)/m(A0)` and `m_q(A1)/m(A1)` must agree within `tol`.
#[allow(clippy::too_many_arguments)]
pub fn aggregate_bm(
    d: &Disintegration,
    a0: &[IntervalSet],
    a1: &[IntervalSet],
    z_in_both: &[bool],
    t: f64,
    k: f64,
    n: f64,
    tol: f64,
) -> Result<BmAggregateReport> {
    if a0.len() != d.fibers.len() || a1.len() != d.fibers.len() || z_in_both.len() != d.singular.len() {
        return Err(Error::domain("set lists do not match the disintegration"));
    }
    if !(n >= 1.0) {
        return Err(Error::domain(format!("N must be >= 1, got {n}")));
    }
    let fiber_masses: Vec<[f64; 3]> = d
        .fibers
        .iter()
        .zip(a0.iter().zip(a1))
        .map(|(f, (s0, s1))| -> Result<[f64; 3]> {
            let m0 = set_mass(&f.density, n, s0);
            let m1 = set_mass(&f.density, n, s1);
            let mt = if s0.is_empty() || s1.is_empty() {
                0.0
            } else {
                set_mass(&f.density, n, &intermediate_set(s0, s1, t)?)
            };
            Ok([m0, m1, mt])
        })
        .collect::<Result<_>>()?;
    let z_both: f64 = d
        .singular
        .iter()
        .zip(z_in_both)
        .filter(|(_, &b)| b)
        .map(|(z, _)| z.weight)
        .sum();
    let mut mass = [0.0; 3];
    for (fiber, m) in d.fibers.iter().zip(&fiber_masses) {
        for c in 0..3 {
            mass[c] += fiber.weight * m[c];
        }
    }
    for c in 0..3 {
        mass[c] += z_both;
    }
    let [m0, m1, _] = mass;
    if m0 < NULL_MASS || m1 < NULL_MASS {
        return Err(Error::domain(format!(
            "Brunn-Minkowski needs sets of positive mass, got {m0:e} and {m1:e}"
        )));
    }
    for (i, m) in fiber_masses.iter().enumerate() {
        if (m[0] / m0 - m[1] / m1).abs() > tol {
            return Err(Error::fiber(
                i,
                format!("mass ratios differ: {} vs {}", m[0] / m0, m[1] / m1),
            ));
        }
    }
    if z_both > 0.0 && (m0 - m1).abs() > tol {
        return Err(Error::precondition("singular points in A0 ∩ A1 need m(A0) = m(A1)"));
    }
    // extremal distance over all fibers, and 0 when a singular point lies in both sets
    let mut theta: Option<f64> = None;
    for (s0, s1) in a0.iter().zip(a1) {
        if s0.is_empty() || s1.is_empty() {
            continue;
        }
        let th = theta_extremal(s0, s1, k)?;
        theta = Some(match theta {
            None => th,
            Some(x) if k >= 0.0 => x.min(th),
            Some(x) => x.max(th),
        });
    }
    if z_both > 0.0 && k >= 0.0 {
        theta = Some(0.0);
    }
    let theta = theta.unwrap_or(0.0);
    let rhs = bm_rhs(k, n, t, theta, m0, m1)?;
    let rhs_n = rhs.powf(n);
    let fibers: Vec<Step> = fiber_masses
        .iter()
        .map(|m| Step::new(m[0] / m0 * rhs_n, m[2], tol))
        .collect();
    let singular = if z_both > 0.0 {
        let coeff = |s: f64| -> Result<f64> {
            Ok(match crate::coeffs::tau(k, n, s, theta)? {
                ExtendedReal::Finite(x) => x,
                ExtendedReal::PosInfinity => f64::INFINITY,
            })
        };
        Some(Step::new((coeff(1.0 - t)? + coeff(t)?).powf(n), 1.0, tol))
    } else {
        None
    };
    let global = bm_report(k, n, t, theta, mass, tol)?;
    let fibers_hold = fibers.iter().all(|s| s.holds) && singular.map_or(true, |s| s.holds);
    Ok(BmAggregateReport {
        theta,
        mass0: m0,
        mass1: m1,
        holds: global.holds,
        fibers,
        fibers_hold,
        singular,
        global,
    })
}

/// Replays `2α ∫ f log f ≤ ∫ |∇f|²/f` through the disintegration.
///
/// Fiber functions must be non-negative with `∫ f_i h_i = 1`, and `f = 1` on
/// `Z`. `alpha` defaults to `KN/(N-1)` for `K > 0`.
pub fn aggregate_logsob(
    d: &Disintegration,
    k: f64,
    n: f64,
    diameter: f64,
    alpha: Option<f64>,
    tol: f64,
) -> Result<AggregateReport> {
    check_diameter(d, diameter)?;
    let alpha = match alpha {
        Some(a) if a > 0.0 => a,
        Some(a) => return Err(Error::domain(format!("alpha must be positive, got {a}"))),
        None if k > 0.0 && n > 1.0 => k * n / (n - 1.0),
        None => return Err(Error::domain("alpha is required unless K > 0 and N > 1")),
    };
    if let Some(j) = d.singular.iter().position(|z| z.value != 1.0) {
        return Err(Error::precondition(format!("function is not 1 at singular point {j}")));
    }
    // f log f vanishes on Z
    let z_entropy: f64 = d.singular.iter().map(|z| z.weight * z.value * z.value.ln()).sum();
    debug_assert_eq!(z_entropy, 0.0);
    let mut steps = Vec::with_capacity(d.fibers.len());
    let (mut lhs, mut rhs) = (z_entropy, 0.0);
    for (i, fiber) in d.fibers.iter().enumerate() {
        if let Some(j) = fiber.function.iter().position(|&x| !(x >= 0.0)) {
            return Err(Error::fiber(i, format!("function is negative at node {j}")));
        }
        let (ent, fisher, mean) = entropy_fisher(&fiber.density, &fiber.function)?;
        if (mean - 1.0).abs() > tol {
            return Err(Error::fiber(i, format!("function has mean {mean}, expected 1")));
        }
        steps.push(Step::new(2.0 * alpha * ent, fisher, tol));
        lhs += fiber.weight * 2.0 * alpha * ent;
        rhs += fiber.weight * fisher;
    }
    Ok(aggregate(alpha, steps, Step::new(lhs, rhs, tol)))
}

/// Four grid functions per fiber and four values per singular point.
#[derive(Debug, Clone, PartialEq)]
pub struct FourFunctions {
    pub fibers: Vec<[Vec<f64>; 4]>,
    pub singular: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourFunctionsReport {
    /// `∫ f3 / ∫ f1`.
    pub c: f64,
    pub integrals: [f64; 4],
    /// Per fiber `(∫f1)^α (∫f2)^β ≤ (∫f3)^α (∫f4)^β`.
    pub fibers: Vec<Step>,
    /// Per fiber `|∫(f3 - c f1) dm_q|`.
    pub constraint_residuals: Vec<f64>,
    pub constraint_holds: bool,
    /// Pointwise `f2 ≤ c^{α/β} f4` and `f3 = c f1` on `Z`.
    pub singular_holds: bool,
    pub fibers_hold: bool,
    pub global: Step,
    pub holds: bool,
    /// `α = 0` or `β = 0`.
    pub degenerate: bool,
}

fn product(x: f64, y: f64, alpha: f64, beta: f64) -> f64 {
    let pow = |v: f64, e: f64| if e == 0.0 { 1.0 } else { v.powf(e) };
    pow(x, alpha) * pow(y, beta)
}

/// Checks `(∫f1)^α (∫f2)^β ≤ (∫f3)^α (∫f4)^β` through the disintegration.
///
/// The fiber layer, the constraint `∫(f3 - c f1) dm_q = 0` and the pointwise
/// condition on `Z` are reported separately from the global inequality.
pub fn four_functions(d: &Disintegration, f: &FourFunctions, alpha: f64, beta: f64, tol: f64) -> Result<FourFunctionsReport> {
    if f.fibers.len() != d.fibers.len() || f.singular.len() != d.singular.len() {
        return Err(Error::domain("function lists do not match the disintegration"));
    }
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::domain(format!("exponents must be non-negative, got {alpha}, {beta}")));
    }
    let mut fiber_integrals = Vec::with_capacity(d.fibers.len());
    for (i, (fiber, fs)) in d.fibers.iter().zip(&f.fibers).enumerate() {
        let mut ints = [0.0; 4];
        for (c, g) in fs.iter().enumerate() {
            if let Some(j) = g.iter().position(|&x| !(x >= 0.0)) {
                return Err(Error::fiber(i, format!("function {} is negative at node {j}", c + 1)));
            }
            ints[c] = fiber_mean(fiber, i, g)?;
        }
        fiber_integrals.push(ints);
    }
    let mut integrals = [0.0; 4];
    for (fiber, ints) in d.fibers.iter().zip(&fiber_integrals) {
        for c in 0..4 {
            integrals[c] += fiber.weight * ints[c];
        }
    }
    for (z, vals) in d.singular.iter().zip(&f.singular) {
        if vals.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::precondition("singular values must be non-negative"));
        }
        for c in 0..4 {
            integrals[c] += z.weight * vals[c];
        }
    }
    if !(integrals[0] > 0.0 && integrals[2] > 0.0) {
        return Err(Error::domain("f1 and f3 need positive integrals"));
    }
    let c = integrals[2] / integrals[0];
    let degenerate = alpha == 0.0 || beta == 0.0;
    let fibers: Vec<Step> = fiber_integrals
        .iter()
        .map(|x| Step::new(product(x[0], x[1], alpha, beta), product(x[2], x[3], alpha, beta), tol))
        .collect();
    let constraint_residuals: Vec<f64> = fiber_integrals.iter().map(|x| (x[2] - c * x[0]).abs()).collect();
    let scale = integrals[2].max(1.0);
    let constraint_holds = constraint_residuals.iter().all(|&r| r <= tol * scale);
    let singular_holds = f.singular.iter().all(|v| {
        let matched = (v[2] - c * v[0]).abs() <= tol * scale;
        let bound = if beta == 0.0 { true } else { v[1] <= c.powf(alpha / beta) * v[3] + tol };
        matched && bound
    });
    let global = Step::new(
        product(integrals[0], integrals[1], alpha, beta),
        product(integrals[2], integrals[3], alpha, beta),
        tol,
    );
    Ok(FourFunctionsReport {
        c,
        integrals,
        fibers_hold: fibers.iter().all(|s| s.holds),
        fibers,
        constraint_residuals,
        constraint_holds,
        singular_holds,
        holds: global.holds,
        global,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CdParams;
    use crate::density::{model_density, ModelKind};
    use crate::spectral::rayleigh_p_detail;
    use crate::transport1d::verify_bm;
    use std::f64::consts::PI;

    /// `sin^{N-1}` on `[a, a + len]`, the CD(N-1, N) model.
    fn sin_fiber(n: f64, a: f64, len: f64, nodes: usize) -> GridDensity {
        GridDensity::from_fn(a, a + len, nodes, |t| t.sin().max(0.0).powf(n - 1.0)).unwrap()
    }

    fn zeros(h: &GridDensity) -> Vec<f64> {
        vec![0.0; h.len()]
    }

    #[test]
    fn construction_checks_weights() {
        let h = GridDensity::from_fn(0.0, 1.0, 11, |_| 2.0).unwrap();
        let d = Disintegration::new(vec![(1.0, h.clone(), zeros(&h))], vec![]).unwrap();
        assert!((d.fibers()[0].density.mass() - 1.0).abs() < 1e-15);
        assert!(Disintegration::new(vec![(0.5, h.clone(), zeros(&h))], vec![]).is_err());
        let err = Disintegration::new(vec![(0.5, h.clone(), zeros(&h)), (-0.5, h.clone(), zeros(&h))], vec![]).unwrap_err();
        assert!(matches!(err, Error::Precondition { index: Some(1), .. }));
        let with_z = Disintegration::new(
            vec![(0.75, h.clone(), zeros(&h))],
            vec![SingularPoint { weight: 0.25, value: 0.0 }],
        )
        .unwrap();
        assert_eq!(with_z.singular_weight(), 0.25);
    }

    #[test]
    fn verify_reports_the_bad_fiber() {
        let flat = GridDensity::from_fn(0.0, 1.0, 201, |_| 1.0).unwrap();
        let single = Disintegration::new(vec![(1.0, flat.clone(), zeros(&flat))], vec![]).unwrap();
        assert!(verify_disintegration(&single, 0.0, 2.0, 1e-8).unwrap().valid);
        let sinh = GridDensity::from_fn(0.2, 1.5, 201, f64::sinh).unwrap();
        let d = Disintegration::new(
            vec![(0.5, flat.clone(), zeros(&flat)), (0.5, sinh.clone(), zeros(&sinh))],
            vec![],
        )
        .unwrap();
        let r = verify_disintegration(&d, -1.0, 1.0, 1e-8).unwrap();
        assert!(!r.valid);
        assert_eq!(r.worst_fiber, Some(1));
    }

    #[test]
    fn integration_splits_over_fibers() {
        // one density cut into three fibers sharing their end nodes
        let h = GridDensity::from_fn(0.0, 3.0, 301, |t| 1.0 + t * t).unwrap();
        let f = |t: f64| (2.0 * t).cos() + t;
        let cuts = [0, 70, 220, 300];
        let total = h.mass();
        let mut fibers = Vec::new();
        for w in cuts.windows(2) {
            let values = h.values()[w[0]..=w[1]].to_vec();
            let piece = GridDensity::new(h.t(w[0]), h.step(), values).unwrap();
            let fv = (0..piece.len()).map(|i| f(piece.t(i))).collect();
            fibers.push((piece.mass() / total, piece, fv));
        }
        let weights: f64 = fibers.iter().map(|x| x.0).sum();
        fibers[0].0 += 1.0 - weights;
        let d = Disintegration::new(fibers, vec![]).unwrap();
        let (_, node) = fem_masses(&h);
        let direct = (0..h.len()).map(|i| f(h.t(i)) * node[i]).sum::<f64>() / total;
        assert!((d.integrate().unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn spectral_tight_on_identical_eigenfibers() {
        let n = 3.0;
        let h = sin_fiber(n, 0.0, PI, 2001);
        let u = rayleigh_p_detail(&h, 2.0, 1e-13).unwrap().u;
        let u = center_p_mean(&h, &u, 2.0);
        let d = Disintegration::new(
            vec![(0.25, h.clone(), u.clone()), (0.25, h.clone(), u.clone()), (0.5, h.clone(), u.clone())],
            vec![],
        )
        .unwrap();
        let r = aggregate_spectral(&d, 2.0, n - 1.0, n, PI, 1e-8).unwrap();
        assert!((r.global.rhs / r.global.lhs - 1.0).abs() < 5e-3, "{r:?}");
        let mut bad = u.clone();
        bad.iter_mut().for_each(|x| *x += 0.3);
        let d = Disintegration::new(vec![(0.5, h.clone(), u), (0.5, h.clone(), bad)], vec![]).unwrap();
        let err = aggregate_spectral(&d, 2.0, n - 1.0, n, PI, 1e-8).unwrap_err();
        assert!(matches!(err, Error::Precondition { index: Some(1), .. }));
    }

    #[test]
    fn spectral_on_singular_part_only() {
        let d = Disintegration::new(vec![], vec![SingularPoint { weight: 1.0, value: 0.0 }]).unwrap();
        let r = aggregate_spectral(&d, 2.0, 1.0, 2.0, 2.0, 1e-8).unwrap();
        assert_eq!((r.global.lhs, r.global.rhs), (0.0, 0.0));
        assert!(r.holds);
    }

    #[test]
    fn bm_single_fiber_matches_direct_check() {
        let h = sin_fiber(2.0, 0.0, PI, 801);
        let d = Disintegration::new(vec![(1.0, h.clone(), zeros(&h))], vec![]).unwrap();
        let a0 = IntervalSet::interval(0.3, 0.9).unwrap();
        let a1 = IntervalSet::interval(1.7, 2.6).unwrap();
        let density = &d.fibers()[0].density;
        let direct = verify_bm(density, 1.0, 2.0, &a0, &a1, 0.35, 1e-9).unwrap();
        // a single fiber has no ratio constraint to meet
        let r = aggregate_bm(&d, &[a0], &[a1], &[], 0.35, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(r.global.slack.to_bits(), direct.slack.to_bits());
        assert_eq!(r.global.lhs.to_bits(), direct.lhs.to_bits());
        assert!(r.holds && r.fibers_hold);
    }

    #[test]
    fn bm_singular_point_in_both_sets() {
        let cd = CdParams::new(-1.0, 3.0, 2.0).unwrap();
        let h = model_density(ModelKind::Cosh, cd, -1.0, 401).unwrap();
        let a = IntervalSet::interval(-0.8, -0.2).unwrap();
        let b = IntervalSet::interval(0.1, 0.9).unwrap();
        let d0 = Disintegration::new(vec![(1.0, h.clone(), zeros(&h))], vec![]).unwrap();
        let ma = set_mass(&d0.fibers()[0].density, 3.0, &a);
        // pick A1 on the fiber with the same mass as A0
        let (mut lo, mut hi) = (0.1, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if set_mass(&d0.fibers()[0].density, 3.0, &IntervalSet::interval(0.1, mid).unwrap()) < ma {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let b = IntervalSet::interval(b.pieces()[0].0, 0.5 * (lo + hi)).unwrap();
        let d = Disintegration::new(
            vec![(0.7, h.clone(), zeros(&h))],
            vec![SingularPoint { weight: 0.2, value: 0.0 }, SingularPoint { weight: 0.1, value: 0.0 }],
        )
        .unwrap();
        let r = aggregate_bm(&d, &[a], &[b], &[true, false], 0.4, -1.0, 3.0, 1e-9).unwrap();
        let z = r.singular.unwrap();
        assert!(z.holds && z.lhs <= 1.0, "{z:?}");
        assert!(r.holds && r.fibers_hold, "{r:?}");
    }

    #[test]
    fn bm_rejects_mismatched_ratios() {
        let h = GridDensity::from_fn(0.0, 1.0, 101, |_| 1.0).unwrap();
        let d = Disintegration::new(vec![(0.5, h.clone(), zeros(&h)), (0.5, h.clone(), zeros(&h))], vec![]).unwrap();
        let s = |a: f64, b: f64| IntervalSet::interval(a, b).unwrap();
        let err = aggregate_bm(&d, &[s(0.0, 0.2), s(0.0, 0.2)], &[s(0.5, 0.9), s(0.5, 0.6)], &[], 0.5, 0.0, 2.0, 1e-9)
            .unwrap_err();
        assert!(matches!(err, Error::Precondition { index: Some(0), .. }));
    }

    #[test]
    fn logsob_examples() {
        let flat = GridDensity::from_fn(0.0, 1.0, 101, |_| 1.0).unwrap();
        let ones = vec![1.0; flat.len()];
        let d = Disintegration::new(
            vec![(0.6, flat.clone(), ones.clone())],
            vec![SingularPoint { weight: 0.4, value: 1.0 }],
        )
        .unwrap();
        let r = aggregate_logsob(&d, 1.0, 2.0, 1.0, None, 1e-9).unwrap();
        assert_eq!(r.global.lhs, 0.0);
        assert!(r.holds);

        let n = 3.0;
        let h = sin_fiber(n, 0.0, PI, 1001);
        let g = rayleigh_p_detail(&h, 2.0, 1e-13).unwrap().u;
        let mut slacks = Vec::new();
        for eps in [1e-1, 1e-2] {
            let f: Vec<f64> = g.iter().map(|x| 1.0 + eps * x).collect();
            let d = Disintegration::new(vec![(1.0, h.clone(), f)], vec![]).unwrap();
            let f = &d.fibers()[0].function;
            let m = fiber_mean(&d.fibers()[0], 0, f).unwrap();
            let f: Vec<f64> = f.iter().map(|x| x / m).collect();
            let d = d.with_functions(vec![f], vec![]).unwrap();
            let r = aggregate_logsob(&d, n - 1.0, n, PI, None, 1e-9).unwrap();
            assert!(r.holds, "{r:?}");
            slacks.push(r.global.slack / r.global.rhs);
        }
        assert!(slacks[1].abs() < slacks[0].abs());
        let d = Disintegration::new(vec![(1.0, h.clone(), vec![2.0; h.len()])], vec![]).unwrap();
        assert!(aggregate_logsob(&d, n - 1.0, n, PI, None, 1e-9).is_err());
    }

    #[test]
    fn four_functions_equal_pairs() {
        let h = sin_fiber(2.0, 0.0, 2.0, 201);
        let f1: Vec<f64> = (0..h.len()).map(|i| 1.0 + h.t(i)).collect();
        let f2: Vec<f64> = (0..h.len()).map(|i| (h.t(i)).exp()).collect();
        let d = Disintegration::new(
            vec![(0.5, h.clone(), zeros(&h)), (0.3, h.clone(), zeros(&h))],
            vec![SingularPoint { weight: 0.2, value: 0.0 }],
        )
        .unwrap();
        let ff = FourFunctions {
            fibers: vec![[f1.clone(), f2.clone(), f1.clone(), f2.clone()]; 2],
            singular: vec![[1.0, 2.0, 1.0, 2.0]],
        };
        let r = four_functions(&d, &ff, 0.7, 1.3, 1e-12).unwrap();
        assert_eq!(r.c, 1.0);
        assert!(r.holds && r.fibers_hold && r.constraint_holds && r.singular_holds);
        assert_eq!(r.global.slack, 0.0);
        let r = four_functions(&d, &ff, 1.0, 0.0, 1e-12).unwrap();
        assert!(r.degenerate && r.holds);
    }
}
