//! Cheeger constants, `λ^{1,1}`, and the log-Sobolev, Sobolev and Talagrand
//! inequalities on sampled densities and model families.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeffs::{bonnet_myers, CdParams};
use crate::density::{model_family, GridDensity, N_ONE_BAND};
use crate::error::{Error, Result};
use crate::spectral::{fem_masses, rayleigh_p_detail};
use crate::transport1d::{entropy_relative, w2, IntervalSet, Measure1D, RestrictedCdf};

/// Grid size used for model profiles when scanning shifts.
const SCAN_NODES: usize = 1001;
/// Grid size used for a single model profile.
const SINGLE_NODES: usize = 4001;
const SHIFT_SCAN: usize = 64;
/// Cell count of the coarse grid in the two-interval Cheeger search.
const COARSE_CELLS: usize = 48;
/// Amplitude of the perturbative test functions `1 + ε g`.
const PERTURBATION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheegerResult {
    pub value: f64,
    pub optimal_cut: IntervalSet,
    /// Mass of the smaller side, in `(0, 1/2]`.
    pub side_mass: f64,
}

/// Outcome of an estimate or a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub constant_estimate: f64,
    /// Known sharp value, when one exists for the parameters.
    pub reference: Option<f64>,
    /// Known lower bound for the constant, when one exists.
    pub lower_bound: Option<f64>,
    #[serde(skip)]
    pub witness_function: Option<Vec<f64>>,
    pub slack: f64,
    pub holds: bool,
    /// The estimate comes from a minimization and bounds the constant from above.
    pub upper_bound: bool,
}

/// A quotient that may be `0/0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub degenerate: bool,
}

/// Weighted median of `values`.
fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| weights[i] > 0.0).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = idx.iter().map(|&i| weights[i]).sum();
    let mut acc = 0.0;
    for &i in &idx {
        acc += weights[i];
        if acc >= 0.5 * total {
            return values[i];
        }
    }
    idx.last().map_or(0.0, |&i| values[i])
}

/// Normalized lumped node weights and cell weights of `h`.
pub(crate) fn probability_weights(h: &GridDensity) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut cell, mut node) = fem_masses(h);
    let total: f64 = node.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("density has zero mass"));
    }
    for w in cell.iter_mut().chain(node.iter_mut()) {
        *w /= total;
    }
    Ok((cell, node))
}

/// A median `M_f` of `f` under `mu` and `c_1(f) = ∫ |f - M_f| dμ`.
pub fn median_c1(f: &[f64], mu: &Measure1D) -> Result<(f64, f64)> {
    if f.len() != mu.density().len() {
        return Err(Error::domain("function does not match the grid"));
    }
    let (_, node) = probability_weights(mu.density())?;
    let m = weighted_median(f, &node);
    let c1 = f.iter().zip(&node).map(|(x, w)| w * (x - m).abs()).sum();
    Ok((m, c1))
}

struct Candidate {
    ratio: f64,
    a: f64,
    b: f64,
    mass: f64,
}

/// Cheeger constant of `h L¹` on its grid interval.
///
/// Candidates are the sub-intervals with endpoints at nodes or at the point
/// cutting off exactly half the mass; a cut costs the density value there,
/// except at the ends of the grid. With `restrict_to_intervals = false`,
/// unions of two intervals on a coarse grid are searched as well.
pub fn cheeger_density(h: &GridDensity, restrict_to_intervals: bool) -> Result<CheegerResult> {
    let mass = h.mass();
    if !(mass > 0.0) {
        return Err(Error::domain("Cheeger constant of a zero-mass density"));
    }
    let cdf = RestrictedCdf::new(h, h.origin(), h.end());
    let total = cdf.total();
    let n = h.len();
    let f: Vec<f64> = (0..n).map(|i| cdf.at(h.t(i)) / total).collect();
    let v: Vec<f64> = h.values().iter().map(|x| x / total).collect();
    let (lo_end, hi_end) = (h.origin(), h.end());
    let cost = |x: f64| {
        if x <= lo_end || x >= hi_end {
            0.0
        } else {
            h.eval(x) / total
        }
    };
    let mut best = Candidate {
        ratio: f64::INFINITY,
        a: lo_end,
        b: hi_end,
        mass: 0.0,
    };
    let mut consider = |a: f64, b: f64, perim: f64, m: f64| {
        let side = m.min(1.0 - m);
        if side <= 1e-15 {
            return;
        }
        let ratio = perim / side;
        if ratio < best.ratio {
            best = Candidate { ratio, a, b, mass: m };
        }
    };
    for i in 0..n {
        let pa = if i == 0 { 0.0 } else { v[i] };
        for j in i + 1..n {
            let pb = if j == n - 1 { 0.0 } else { v[j] };
            consider(h.t(i), h.t(j), pa + pb, f[j] - f[i]);
        }
        // the other end placed to cut off exactly half the mass
        if f[i] + 0.5 <= 1.0 {
            let x = cdf.quantile((f[i] + 0.5) * total);
            consider(h.t(i), x, pa + cost(x), 0.5);
        }
        if f[i] >= 0.5 {
            let x = cdf.quantile((f[i] - 0.5) * total);
            consider(x, h.t(i), cost(x) + if i == n - 1 { 0.0 } else { v[i] }, 0.5);
        }
    }
    let mut pieces = vec![(best.a, best.b)];
    let mut side = best.mass;
    if !restrict_to_intervals {
        let stride = ((n - 1) / COARSE_CELLS).max(1);
        let nodes: Vec<usize> = (0..n).step_by(stride).chain(std::iter::once(n - 1)).collect();
        let mut nodes = nodes;
        nodes.dedup();
        let c = nodes.len();
        let pc = |k: usize| if nodes[k] == 0 || nodes[k] == n - 1 { 0.0 } else { v[nodes[k]] };
        for i1 in 0..c {
            for j1 in i1 + 1..c {
                for i2 in j1 + 1..c {
                    for j2 in i2 + 1..c {
                        let m = f[nodes[j1]] - f[nodes[i1]] + f[nodes[j2]] - f[nodes[i2]];
                        let s = m.min(1.0 - m);
                        if s <= 1e-15 {
                            continue;
                        }
                        let ratio = (pc(i1) + pc(j1) + pc(i2) + pc(j2)) / s;
                        if ratio < best.ratio {
                            best.ratio = ratio;
                            pieces = vec![(h.t(nodes[i1]), h.t(nodes[j1])), (h.t(nodes[i2]), h.t(nodes[j2]))];
                            side = m;
                        }
                    }
                }
            }
        }
    }
    // report the lighter side
    if side > 0.5 {
        let mut comp = Vec::new();
        let mut left = lo_end;
        for &(a, b) in &pieces {
            if a > left {
                comp.push((left, a));
            }
            left = b;
        }
        if hi_end > left {
            comp.push((left, hi_end));
        }
        pieces = comp;
        side = 1.0 - side;
    }
    Ok(CheegerResult {
        value: best.ratio,
        optimal_cut: IntervalSet::new(pieces)?,
        side_mass: side,
    })
}

fn log_sinh(x: f64) -> f64 {
    x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2
}

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Profile `exp(log_f(t) - log_f(top))` sampled on `[a, a + d]`.
fn log_profile(a: f64, d: f64, nodes: usize, log_f: impl Fn(f64) -> f64) -> Result<GridDensity> {
    let top = (0..nodes)
        .map(|i| log_f(a + d * i as f64 / (nodes - 1) as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    GridDensity::from_fn(a, a + d, nodes, |t| {
        let v = log_f(t);
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            (v - top).exp()
        }
    })
}

/// `min_{s ∈ [0,1]} value(s)` by a uniform scan followed by golden section;
/// ties go to the smallest `s`.
fn scan_min(value: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let samples: Vec<f64> = (0..=SHIFT_SCAN).map(|j| j as f64 / SHIFT_SCAN as f64).collect();
    let vals = samples.iter().map(|&s| value(s)).collect::<Result<Vec<_>>>()?;
    let mut j = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v < vals[j] {
            j = i;
        }
    }
    let mut a = samples[j.saturating_sub(1)];
    let mut b = samples[(j + 1).min(SHIFT_SCAN)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut best = vals[j];
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = value(x1)?;
    let mut f2 = value(x2)?;
    for _ in 0..30 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = value(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = value(x2)?;
        }
        best = best.min(f1).min(f2);
    }
    Ok(best)
}

/// Maps `s ∈ [0,1)` onto `[0, ∞)`.
fn unbounded(s: f64, unit: f64) -> f64 {
    unit * s / (1.0 - s)
}

/// Model Cheeger constant `h_{K,N,D}`: the infimum of the Cheeger constants of
/// the shifted model profiles.
///
/// Shift infima over unbounded ranges include their limit profile (flat for
/// `t^{N-1}`, exponential for `sinh^{N-1}` and `cosh^{N-1}`). `D = ∞` with
/// `K ≤ 0`, and `N = 1` with `K > 0`, give 0.
pub fn cheeger_model(k: f64, n: f64, d: f64) -> Result<f64> {
    if !(n >= 1.0) || !(d > 0.0) {
        return Err(Error::domain(format!("need N >= 1 and D > 0, got N={n}, D={d}")));
    }
    let value = |h: GridDensity| -> Result<f64> { Ok(cheeger_density(&h, true)?.value) };
    if n < 1.0 + N_ONE_BAND {
        if k > 0.0 || !d.is_finite() {
            return Ok(0.0);
        }
        return Ok(2.0 / d);
    }
    let m = n - 1.0;
    if k > 0.0 {
        let rate = (k / m).sqrt();
        let bound = bonnet_myers(k, n);
        let sin_profile = |a: f64, len: f64, nodes: usize| {
            log_profile(a, len, nodes, move |t| {
                let s = (rate * t).sin();
                if s > 0.0 {
                    m * s.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
        };
        if d >= bound {
            return value(sin_profile(0.0, bound, SINGLE_NODES)?);
        }
        return scan_min(|s| value(sin_profile(s * (bound - d), d, SCAN_NODES)?));
    }
    if !d.is_finite() {
        return Ok(0.0);
    }
    if k == 0.0 {
        let flat = 2.0 / d;
        let power = scan_min(|s| {
            if s >= 1.0 {
                return Ok(flat);
            }
            let xi = unbounded(s, d);
            value(log_profile(xi, d, SCAN_NODES, move |t| {
                if t > 0.0 {
                    m * t.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })?)
        })?;
        return Ok(power.min(flat));
    }
    let rate = (-k / m).sqrt();
    let exp_rate = (-k * m).sqrt();
    let exp_value = value(log_profile(0.0, d, SCAN_NODES, move |t| exp_rate * t)?)?;
    let sinh = scan_min(|s| {
        if s >= 1.0 {
            return Ok(exp_value);
        }
        let xi = unbounded(s, 1.0 / rate);
        value(log_profile(xi, d, SCAN_NODES, move |t| {
            if t > 0.0 {
                m * log_sinh(rate * t)
            } else {
                f64::NEG_INFINITY
            }
        })?)
    })?;
    let cosh = scan_min(|s| {
        if s >= 1.0 {
            return Ok(exp_value);
        }
        let xi = -0.5 * d + unbounded(s, 1.0 / rate);
        value(log_profile(xi, d, SCAN_NODES, move |t| m * log_cosh(rate * t))?)
    })?;
    Ok(exp_value.min(sinh).min(cosh))
}

/// Discrete `∫|u'| h / inf_c ∫|u - c| h`.
pub fn l1_ratio(h: &GridDensity, u: &[f64]) -> Result<f64> {
    if u.len() != h.len() {
        return Err(Error::domain("function does not match the grid"));
    }
    let (cell, node) = probability_weights(h)?;
    let med = weighted_median(u, &node);
    let num: f64 = cell
        .iter()
        .enumerate()
        .map(|(i, m)| m * (u[i + 1] - u[i]).abs() / h.step())
        .sum();
    let den: f64 = node.iter().zip(u).map(|(w, x)| w * (x - med).abs()).sum();
    if !(den > 0.0) {
        return Ok(f64::INFINITY);
    }
    Ok(num / den)
}

/// `λ^{1,1}` of `h L¹` by descent over grid functions, seeded with ramps
/// across the endpoints of the optimal Cheeger cut.
pub fn lambda_11(h: &GridDensity) -> Result<f64> {
    let cut = cheeger_density(h, true)?;
    if cut.value == 0.0 {
        return Ok(0.0);
    }
    let n = h.len();
    let step = h.step();
    let ends: Vec<f64> = cut
        .optimal_cut
        .pieces()
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .filter(|&x| x > h.origin() + 0.5 * step && x < h.end() - 0.5 * step)
        .collect();
    let inside = |x: f64| cut.optimal_cut.contains(x);
    let ramp = |shift: f64, width: f64| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = h.t(i);
                let nearest = ends
                    .iter()
                    .map(|&e| (e + shift, (t - e - shift).abs()))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                match nearest {
                    Some((_, dist)) if width > 0.0 && dist < 0.5 * width => {
                        let side = if inside(t) { 1.0 } else { -1.0 };
                        0.5 + side * dist / width
                    }
                    _ => {
                        if inside(t) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                }
            })
            .collect()
    };
    let mut best_u = ramp(0.0, 0.0);
    let mut best = l1_ratio(h, &best_u)?;
    for k in [0.0, 1.0, 2.0, 4.0, 8.0] {
        for j in -2..=2 {
            let u = ramp(0.5 * j as f64 * step, k * step);
            let r = l1_ratio(h, &u)?;
            if r < best {
                best = r;
                best_u = u;
            }
        }
    }
    // coordinate descent on the nodes around each cut
    let window: Vec<usize> = ends
        .iter()
        .flat_map(|&e| {
            let c = ((e - h.origin()) / step).round() as i64;
            (c - 8..=c + 8).filter(|&i| i >= 0 && (i as usize) < n).map(|i| i as usize)
        })
        .collect();
    for _ in 0..50 {
        let mut improved = false;
        for &i in &window {
            let old = best_u[i];
            let mut options = Vec::with_capacity(3);
            if i > 0 {
                options.push(best_u[i - 1]);
            }
            if i + 1 < n {
                options.push(best_u[i + 1]);
            }
            if i > 0 && i + 1 < n {
                options.push(0.5 * (best_u[i - 1] + best_u[i + 1]));
            }
            for v in options {
                best_u[i] = v;
                let r = l1_ratio(h, &best_u)?;
                if r < best * (1.0 - 1e-14) {
                    best = r;
                    improved = true;
                } else {
                    best_u[i] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

/// `∫ f log(f / f̄) dm` in the non-negative form `Σ w (f log(f/f̄) - f + f̄)`.
fn entropy_of(f: &[f64], node: &[f64]) -> (f64, f64) {
    let mean: f64 = f.iter().zip(node).map(|(x, w)| w * x).sum();
    if !(mean > 0.0) {
        return (0.0, mean);
    }
    let ent = f
        .iter()
        .zip(node)
        .map(|(&x, &w)| {
            if x > 0.0 {
                w * (x * (x / mean).ln() - x + mean)
            } else {
                w * mean
            }
        })
        .sum();
    (ent, mean)
}

/// `(Ent(f), Fisher(f), ∫ f)` against the normalized measure `h L¹`, for `f ≥ 0`,
/// with `Ent(f) = ∫ f log(f / ∫f)` and `Fisher(f) = ∫ |f'|²/f`.
pub fn entropy_fisher(h: &GridDensity, f: &[f64]) -> Result<(f64, f64, f64)> {
    let (cell, node) = probability_weights(h)?;
    let (ent, mean) = entropy_of(f, &node);
    let fisher = cell
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let avg = 0.5 * (f[i] + f[i + 1]);
            if avg > 0.0 {
                let d = (f[i + 1] - f[i]) / h.step();
                m * d * d / avg
            } else {
                0.0
            }
        })
        .sum();
    Ok((ent, fisher, mean))
}

/// `Fisher(f) / (2 Ent(f))` against the normalized measure `h L¹`.
///
/// Both functionals are homogeneous of degree one in `f`, so `f` need not be
/// normalized. The quotient is flagged degenerate (and `+∞`) when the entropy
/// is at most `1e-14 ∫ f`.
pub fn logsob_ratio(h: &GridDensity, f: &[f64]) -> Result<Ratio> {
    if f.len() != h.len() {
        return Err(Error::domain("function does not match the grid"));
    }
    if let Some(i) = f.iter().position(|&x| !(x >= 0.0)) {
        return Err(Error::domain(format!("log-Sobolev test function is negative at node {i}")));
    }
    let (ent, fisher, mean) = entropy_fisher(h, f)?;
    if ent <= 1e-14 * mean.abs().max(f64::MIN_POSITIVE) {
        return Ok(Ratio {
            value: f64::INFINITY,
            degenerate: true,
        });
    }
    Ok(Ratio {
        value: fisher / (2.0 * ent),
        degenerate: false,
    })
}

/// `(p - q) ∫|f'|^q dm / ((∫|f|^p dm)^{q/p} - ∫|f|^q dm)` for the normalized `h L¹`.
pub fn sobolev_ratio(h: &GridDensity, f: &[f64], p: f64, q: f64) -> Result<Ratio> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::domain(format!("need p, q >= 1, got p={p}, q={q}")));
    }
    if (p - q).abs() < 1e-6 {
        return Err(Error::domain(format!("p and q must differ, got p={p}, q={q}")));
    }
    if f.len() != h.len() {
        return Err(Error::domain("function does not match the grid"));
    }
    let (cell, node) = probability_weights(h)?;
    let lp: f64 = f.iter().zip(&node).map(|(x, w)| w * x.abs().powf(p)).sum();
    let lq: f64 = f.iter().zip(&node).map(|(x, w)| w * x.abs().powf(q)).sum();
    let energy: f64 = cell
        .iter()
        .enumerate()
        .map(|(i, m)| m * ((f[i + 1] - f[i]) / h.step()).abs().powf(q))
        .sum();
    let bracket = lp.powf(q / p) - lq;
    if bracket.abs() <= 1e-13 * (1.0 + lq) {
        return Ok(Ratio {
            value: f64::INFINITY,
            degenerate: true,
        });
    }
    Ok(Ratio {
        value: (p - q) * energy / bracket,
        degenerate: false,
    })
}

/// Smooth positive random function `exp(Σ c_k cos(kπ(t - a)/L))`.
fn random_positive(h: &GridDensity, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let coeffs: Vec<f64> = (1..=4).map(|k| rng.gen_range(-1.0..1.0) / k as f64).collect();
    let len = h.support_length();
    (0..h.len())
        .map(|i| {
            let x = (h.t(i) - h.origin()) / len;
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * PI * x).cos())
                .sum::<f64>()
                .exp()
        })
        .collect()
}

fn at_bonnet_myers(k: f64, n: f64, d: f64) -> bool {
    k > 0.0 && (d - bonnet_myers(k, n)).abs() <= 1e-9 * d
}

/// Minimizes `ratio` over model densities and test functions `1 + ε g`
/// (`g` the `p = 2` eigenfunction) and `budget` random positive functions.
fn minimize_over_family(
    cd: CdParams,
    budget: usize,
    ratio: impl Fn(&GridDensity, &[f64]) -> Result<Ratio>,
) -> Result<(f64, Vec<f64>)> {
    if budget == 0 {
        return Err(Error::domain("budget must be at least 1"));
    }
    let family = model_family(cd, budget.clamp(2, 8), SCAN_NODES)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut best = f64::INFINITY;
    let mut witness = Vec::new();
    for h in &family {
        let eig = rayleigh_p_detail(h, 2.0, 1e-13)?;
        let mut tests: Vec<Vec<f64>> = vec![eig.u.iter().map(|g| 1.0 + PERTURBATION * g).collect()];
        for _ in 0..budget {
            tests.push(random_positive(h, &mut rng));
        }
        for f in tests {
            let r = ratio(h, &f)?;
            if !r.degenerate && r.value < best {
                best = r.value;
                witness = f;
            }
        }
    }
    Ok((best, witness))
}

fn estimate_report(estimate: f64, witness: Vec<f64>, reference: Option<f64>, lower_bound: Option<f64>) -> FunctionalReport {
    let slack = lower_bound.map_or(0.0, |b| estimate - b);
    FunctionalReport {
        constant_estimate: estimate,
        reference,
        lower_bound,
        witness_function: Some(witness),
        slack,
        holds: slack >= -1e-9 * estimate.abs().max(1.0),
        upper_bound: true,
    }
}

/// Upper bound on the log-Sobolev constant `α^{LS}_{K,N,D}`.
///
/// The lower bound `KN/(N-1)` is attached for `K > 0`; at the Bonnet-Myers
/// diameter it is also the sharp `reference`.
pub fn logsob_estimate(k: f64, n: f64, d: f64, budget: usize) -> Result<FunctionalReport> {
    let cd = CdParams::new(k, n, d)?;
    if !(n > 1.0) {
        return Err(Error::domain(format!("log-Sobolev estimate needs N > 1, got {n}")));
    }
    let (estimate, witness) = minimize_over_family(cd, budget, logsob_ratio)?;
    let sharp = (k > 0.0).then(|| k * n / (n - 1.0));
    let reference = sharp.filter(|_| at_bonnet_myers(k, n, d));
    Ok(estimate_report(estimate, witness, reference, sharp))
}

/// Upper bound on the `(p,q)`-Sobolev constant `α^{p,q}_{K,N,D}`.
///
/// For `K > 0`, `q = 2` and `2 < p ≤ 2N/(N-2)` the value `KN/(N-1)` is a lower
/// bound, and the sharp reference at the Bonnet-Myers diameter.
pub fn sobolev_estimate(k: f64, n: f64, d: f64, p: f64, q: f64, budget: usize) -> Result<FunctionalReport> {
    let cd = CdParams::new(k, n, d)?;
    if !(n > 1.0) {
        return Err(Error::domain(format!("Sobolev estimate needs N > 1, got {n}")));
    }
    let (estimate, witness) = minimize_over_family(cd, budget, |h, f| sobolev_ratio(h, f, p, q))?;
    let critical = if n > 2.0 { 2.0 * n / (n - 2.0) } else { f64::INFINITY };
    let sharp = (k > 0.0 && q == 2.0 && p > 2.0 && p <= critical).then(|| k * n / (n - 1.0));
    let reference = sharp.filter(|_| at_bonnet_myers(k, n, d));
    Ok(estimate_report(estimate, witness, reference, sharp))
}

/// Checks `W₂²(μ, m) ≤ (2/α) Ent_m(μ)` with `m = h L¹` normalized.
pub fn talagrand_check(h: &GridDensity, mu: &Measure1D, alpha: f64, tol: f64) -> Result<FunctionalReport> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    let reference = Measure1D::new(h)?;
    let ent = entropy_relative(mu, &reference)?;
    let dist = w2(mu, &reference);
    let lhs = dist * dist;
    let slack = 2.0 / alpha * ent - lhs;
    Ok(FunctionalReport {
        constant_estimate: lhs,
        reference: Some(2.0 / alpha * ent),
        lower_bound: None,
        witness_function: None,
        slack,
        holds: slack >= -tol,
        upper_bound: false,
    })
}
