//! Optimal transport on the line: CDFs, quantiles, W₂, entropies, interval
//! sets and the sharp Brunn-Minkowski verifier.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coeffs::{tau, ExtendedReal};
use crate::density::{normalize, GridDensity, N_ONE_BAND};
use crate::error::{Error, Result};

/// Sets of smaller mass are rejected as null.
pub const NULL_MASS: f64 = 1e-12;

/// Reference densities below this are treated as zero by the entropies.
const NULL_DENSITY: f64 = 1e-14;

/// Probability measure with density on a grid. The CDF is the cumulative
/// trapezoid sum at nodes, linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure1D {
    density: GridDensity,
    cdf: Vec<f64>,
}

impl Measure1D {
    /// Normalizes `h` and tabulates its CDF.
    pub fn new(h: &GridDensity) -> Result<Self> {
        let density = normalize(h)?;
        let v = density.values();
        let half = 0.5 * density.step();
        let mut cdf = Vec::with_capacity(v.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in v.windows(2) {
            acc += half * (w[0] + w[1]);
            cdf.push(acc);
        }
        let total = acc;
        for c in &mut cdf {
            *c = (*c / total).min(1.0);
        }
        *cdf.last_mut().expect("non-empty") = 1.0;
        Ok(Measure1D { density, cdf })
    }

    pub fn density(&self) -> &GridDensity {
        &self.density
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn cdf_at(&self, t: f64) -> f64 {
        let h = &self.density;
        let x = (t - h.origin()) / h.step();
        if x <= 0.0 {
            return 0.0;
        }
        if x >= (h.len() - 1) as f64 {
            return 1.0;
        }
        let i = x.floor() as usize;
        let u = x - i as f64;
        (1.0 - u) * self.cdf[i] + u * self.cdf[i + 1]
    }

    /// Left-continuous generalized inverse `inf { t : F(t) ≥ v }`.
    pub fn quantile(&self, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("quantile level must lie in [0,1], got {v}")));
        }
        Ok(self.quantile_unchecked(v, false))
    }

    /// `upper = false`: `inf { F ≥ v }`; `upper = true`: `inf { F > v }`.
    fn quantile_unchecked(&self, v: f64, upper: bool) -> f64 {
        let h = &self.density;
        let i = if upper {
            self.cdf.partition_point(|&c| c <= v)
        } else {
            self.cdf.partition_point(|&c| c < v)
        };
        if i == 0 {
            return h.origin();
        }
        if i >= self.cdf.len() {
            return h.end();
        }
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let u = ((v - c0) / (c1 - c0)).clamp(0.0, 1.0);
        h.t(i - 1) + u * h.step()
    }
}

/// `T = quantile_1 ∘ F_0`, sampled at the nodes of `mu0`.
pub fn monotone_map(mu0: &Measure1D, mu1: &Measure1D) -> Vec<f64> {
    mu0.cdf
        .iter()
        .map(|&v| mu1.quantile_unchecked(v, false))
        .collect()
}

/// `W₂` through the quantile formula. Both quantile functions are piecewise
/// linear in `v`, so the integral is evaluated exactly piece by piece.
pub fn w2(mu0: &Measure1D, mu1: &Measure1D) -> f64 {
    let mut levels: Vec<f64> = mu0.cdf.iter().chain(mu1.cdf.iter()).copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut acc = 0.0;
    for w in levels.windows(2) {
        let (va, vb) = (w[0], w[1]);
        if vb <= va {
            continue;
        }
        let da = mu0.quantile_unchecked(va, true) - mu1.quantile_unchecked(va, true);
        let db = mu0.quantile_unchecked(vb, false) - mu1.quantile_unchecked(vb, false);
        acc += (vb - va) * (da * da + da * db + db * db) / 3.0;
    }
    acc.max(0.0).sqrt()
}

fn check_same_grid(mu: &Measure1D, reference: &Measure1D) -> Result<()> {
    if mu.density.same_grid(&reference.density) {
        Ok(())
    } else {
        Err(Error::domain("measures live on different grids"))
    }
}

/// `∫ ρ log ρ d ref` with `ρ = dμ/d ref`; `+∞` when `μ` charges a node where
/// the reference vanishes.
pub fn entropy_relative(mu: &Measure1D, reference: &Measure1D) -> Result<f64> {
    check_same_grid(mu, reference)?;
    let m = mu.density.values();
    let r = reference.density.values();
    let mut integrand = Vec::with_capacity(m.len());
    for (&a, &b) in m.iter().zip(r) {
        if a <= 0.0 {
            integrand.push(0.0);
        } else if b < NULL_DENSITY && a >= NULL_DENSITY {
            return Ok(f64::INFINITY);
        } else if b > 0.0 {
            integrand.push(a * (a / b).ln());
        } else {
            integrand.push(0.0);
        }
    }
    Ok(crate::density::trapezoid(&integrand, mu.density.step()))
}

/// `S_N(μ | ref) = -∫ ρ^{-1/N} dμ`.
pub fn entropy_n(mu: &Measure1D, reference: &Measure1D, n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::domain(format!("N must be >= 1, got {n}")));
    }
    check_same_grid(mu, reference)?;
    let e = 1.0 / n;
    let integrand: Vec<f64> = mu
        .density
        .values()
        .iter()
        .zip(reference.density.values())
        .map(|(&a, &b)| if a <= 0.0 { 0.0 } else { a.powf(1.0 - e) * b.powf(e) })
        .collect();
    Ok(-crate::density::trapezoid(&integrand, mu.density.step()))
}

/// Finite union of disjoint closed intervals, sorted, with touching pieces merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet(Vec<(f64, f64)>);

impl IntervalSet {
    pub fn new(mut pieces: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(a, b)) = pieces.iter().find(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::domain(format!("bad interval [{a}, {b}]")));
        }
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(IntervalSet(merged))
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        IntervalSet::new(vec![(a, b)])
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.0.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.0.iter().any(|&(a, b)| a <= x && x <= b)
    }
}

impl FromStr for IntervalSet {
    type Err = Error;

    /// Parses `a1:b1,a2:b2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let pieces = s
            .split(',')
            .map(|part| {
                let (a, b) = part
                    .split_once(':')
                    .ok_or_else(|| Error::domain(format!("expected `a:b`, got `{part}`")))?;
                let parse = |x: &str| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::domain(format!("bad number `{x}` in `{part}`")))
                };
                Ok((parse(a)?, parse(b)?))
            })
            .collect::<Result<Vec<_>>>()?;
        IntervalSet::new(pieces)
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, b)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}:{b}")?;
        }
        Ok(())
    }
}

/// `A_t = {(1-t)x + t y : x ∈ A0, y ∈ A1}`.
pub fn intermediate_set(a0: &IntervalSet, a1: &IntervalSet, t: f64) -> Result<IntervalSet> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("t must lie in [0,1], got {t}")));
    }
    let mut pieces = Vec::with_capacity(a0.0.len() * a1.0.len());
    for &(a, b) in &a0.0 {
        for &(c, d) in &a1.0 {
            pieces.push(((1.0 - t) * a + t * c, (1.0 - t) * b + t * d));
        }
    }
    IntervalSet::new(pieces)
}

/// Smallest distance between the sets for `K ≥ 0`, largest for `K < 0`.
pub fn theta_extremal(a0: &IntervalSet, a1: &IntervalSet, k: f64) -> Result<f64> {
    if a0.is_empty() || a1.is_empty() {
        return Err(Error::domain("theta needs non-empty sets"));
    }
    let pairs = a0.0.iter().flat_map(|&x| a1.0.iter().map(move |&y| (x, y)));
    Ok(if k >= 0.0 {
        pairs
            .map(|((a, b), (c, d))| (c - b).max(a - d).max(0.0))
            .fold(f64::INFINITY, f64::min)
    } else {
        pairs
            .map(|((a, b), (c, d))| (d - a).abs().max((c - b).abs()))
            .fold(0.0, f64::max)
    })
}

/// `∫ ((1-u)a + u b)^m du` over `[0,1]` for non-negative `a, b`.
fn power_mean(a: f64, b: f64, m: f64) -> f64 {
    if m == 0.0 {
        return 1.0;
    }
    let diff = b - a;
    let scale = a.max(b);
    if scale == 0.0 {
        return 0.0;
    }
    if diff.abs() <= 1e-6 * scale {
        // second-order expansion about the midpoint
        let c = 0.5 * (a + b);
        return c.powf(m) * (1.0 + m * (m - 1.0) * diff * diff / (24.0 * c * c));
    }
    (b.powf(m + 1.0) - a.powf(m + 1.0)) / ((m + 1.0) * diff)
}

/// Mass of `set` under `h`, integrating the `N-1` power of the linear
/// interpolant of `h^{1/(N-1)}` exactly. `N = 1` integrates the linear
/// interpolant of `h`.
pub fn set_mass(h: &GridDensity, n: f64, set: &IntervalSet) -> f64 {
    let (e, m) = if n < 1.0 + N_ONE_BAND {
        (1.0, 1.0)
    } else {
        (1.0 / (n - 1.0), n - 1.0)
    };
    let g = |i: usize| h.values()[i].powf(e);
    let step = h.step();
    let last = h.len() - 1;
    let mut total = 0.0;
    for &(a, b) in set.pieces() {
        let a = a.max(h.origin());
        let b = b.min(h.end());
        if !(b > a) {
            continue;
        }
        let xa = (a - h.origin()) / step;
        let xb = (b - h.origin()) / step;
        let ia = (xa.floor() as usize).min(last - 1);
        let ib = (xb.ceil() as usize).clamp(ia + 1, last);
        for c in ia..ib {
            let lo = xa.max(c as f64);
            let hi = xb.min((c + 1) as f64);
            if hi <= lo {
                continue;
            }
            let (g0, g1) = (g(c), g(c + 1));
            let at = |x: f64| g0 + (g1 - g0) * (x - c as f64);
            total += (hi - lo) * step * power_mean(at(lo), at(hi), m);
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmReport {
    /// `m(A_t)^{1/N}`.
    pub lhs: f64,
    pub rhs: f64,
    pub theta: f64,
    pub slack: f64,
    pub holds: bool,
    pub mass0: f64,
    pub mass1: f64,
    pub mass_t: f64,
}

/// `τ^{(1-t)}(θ) m0^{1/N} + τ^{(t)}(θ) m1^{1/N}`, with `∞ · 0 = 0`.
pub(crate) fn bm_rhs(k: f64, n: f64, t: f64, theta: f64, m0: f64, m1: f64) -> Result<f64> {
    let term = |s: f64, m: f64| -> Result<f64> {
        let c = tau(k, n, s, theta)?;
        Ok(match c.times(m.powf(1.0 / n)) {
            ExtendedReal::Finite(x) => x,
            ExtendedReal::PosInfinity => f64::INFINITY,
        })
    };
    Ok(term(1.0 - t, m0)? + term(t, m1)?)
}

/// Assembles the report from the three masses.
pub(crate) fn bm_report(k: f64, n: f64, t: f64, theta: f64, masses: [f64; 3], tol: f64) -> Result<BmReport> {
    let [mass0, mass1, mass_t] = masses;
    let lhs = mass_t.powf(1.0 / n);
    let rhs = bm_rhs(k, n, t, theta, mass0, mass1)?;
    let slack = lhs - rhs;
    Ok(BmReport {
        lhs,
        rhs,
        theta,
        slack,
        holds: slack >= -tol,
        mass0,
        mass1,
        mass_t,
    })
}

/// Checks `m(A_t)^{1/N} ≥ τ^{(1-t)}(θ) m(A0)^{1/N} + τ^{(t)}(θ) m(A1)^{1/N}`
/// for the measure `h L¹`.
pub fn verify_bm(
    h: &GridDensity,
    k: f64,
    n: f64,
    a0: &IntervalSet,
    a1: &IntervalSet,
    t: f64,
    tol: f64,
) -> Result<BmReport> {
    if !(n >= 1.0) {
        return Err(Error::domain(format!("N must be >= 1, got {n}")));
    }
    let m0 = set_mass(h, n, a0);
    let m1 = set_mass(h, n, a1);
    if m0 < NULL_MASS || m1 < NULL_MASS {
        return Err(Error::domain(format!(
            "Brunn-Minkowski needs sets of positive mass, got {m0:e} and {m1:e}"
        )));
    }
    let at = intermediate_set(a0, a1, t)?;
    let theta = theta_extremal(a0, a1, k)?;
    bm_report(k, n, t, theta, [m0, m1, set_mass(h, n, &at)], tol)
}

/// Exact CDF of the linear interpolant of `h` restricted to `[a, b]`.
pub(crate) struct RestrictedCdf {
    xs: Vec<f64>,
    hs: Vec<f64>,
    cum: Vec<f64>,
}

impl RestrictedCdf {
    pub(crate) fn new(h: &GridDensity, a: f64, b: f64) -> Self {
        let mut xs = vec![a];
        let first = ((a - h.origin()) / h.step()).floor() as i64 + 1;
        let mut i = first.max(0) as usize;
        while i < h.len() && h.t(i) < b {
            if h.t(i) > a {
                xs.push(h.t(i));
            }
            i += 1;
        }
        xs.push(b);
        let hs: Vec<f64> = xs.iter().map(|&x| h.eval(x)).collect();
        let mut cum = vec![0.0];
        for j in 1..xs.len() {
            let last = cum[j - 1];
            cum.push(last + 0.5 * (xs[j] - xs[j - 1]) * (hs[j] + hs[j - 1]));
        }
        RestrictedCdf { xs, hs, cum }
    }

    pub(crate) fn total(&self) -> f64 {
        *self.cum.last().expect("non-empty")
    }

    /// Mass of `[a, x]`.
    pub(crate) fn at(&self, x: f64) -> f64 {
        let j = self.xs.partition_point(|&y| y <= x);
        if j == 0 {
            return 0.0;
        }
        if j >= self.xs.len() {
            return self.total();
        }
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let (h0, h1) = (self.hs[j - 1], self.hs[j]);
        let u = x - x0;
        self.cum[j - 1] + u * (h0 + 0.5 * u * (h1 - h0) / (x1 - x0))
    }

    /// Point below which the mass equals `r`.
    pub(crate) fn quantile(&self, r: f64) -> f64 {
        let j = self.cum.partition_point(|&c| c < r).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let (h0, h1) = (self.hs[j - 1], self.hs[j]);
        let rest = (r - self.cum[j - 1]).max(0.0);
        let slope = (h1 - h0) / (x1 - x0);
        let disc = (h0 * h0 + 2.0 * slope * rest).max(0.0);
        let denom = h0 + disc.sqrt();
        let u = if denom > 0.0 { 2.0 * rest / denom } else { 0.0 };
        (x0 + u).clamp(x0, x1)
    }
}

/// Displacement convexity spot check of the `N`-entropy between the
/// normalized restrictions of `h L¹` to `[a0.0, a0.1]` and `[a1.0, a1.1]`.
///
/// Returns `(-S_N(μ_t), τ-combination)` computed along the monotone coupling;
/// the CD(K,N) condition asserts the first is at least the second. Both
/// integrals use a midpoint rule in the quantile variable on `4 ×` the number
/// of grid cells.
pub fn displacement_check(
    h: &GridDensity,
    k: f64,
    n: f64,
    a0: (f64, f64),
    a1: (f64, f64),
    t: f64,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("t must lie in [0,1], got {t}")));
    }
    let c0 = RestrictedCdf::new(h, a0.0, a0.1);
    let c1 = RestrictedCdf::new(h, a1.0, a1.1);
    let (m0, m1) = (c0.total(), c1.total());
    if m0 < NULL_MASS || m1 < NULL_MASS {
        return Err(Error::domain("displacement check needs sets of positive mass"));
    }
    let e = 1.0 / n;
    let cells = 4 * (h.len() - 1);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for j in 0..cells {
        let v = (j as f64 + 0.5) / cells as f64;
        let x0 = c0.quantile(v * m0);
        let x1 = c1.quantile(v * m1);
        let theta = (x1 - x0).abs();
        let (h0, h1) = (h.eval(x0), h.eval(x1));
        let xt = (1.0 - t) * x0 + t * x1;
        let dq = (1.0 - t) * m0 / h0 + t * m1 / h1;
        lhs += (dq * h.eval(xt)).powf(e);
        let w0 = tau(k, n, 1.0 - t, theta)?.times(m0.powf(e)).to_f64();
        let w1 = tau(k, n, t, theta)?.times(m1.powf(e)).to_f64();
        rhs += w0 + w1;
    }
    Ok((lhs / cells as f64, rhs / cells as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CdParams;
    use crate::density::{model_density, ModelKind};
    use std::f64::consts::PI;

    fn uniform(a: f64, b: f64, nodes: usize) -> Measure1D {
        Measure1D::new(&GridDensity::from_fn(a, b, nodes, |_| 1.0).unwrap()).unwrap()
    }

    fn sin_measure(n: f64, nodes: usize) -> Measure1D {
        let h = model_density(ModelKind::Sin, CdParams::new(n - 1.0, n, PI).unwrap(), 0.0, nodes).unwrap();
        Measure1D::new(&h).unwrap()
    }

    #[test]
    fn cdf_and_quantile() {
        let u = uniform(0.0, 1.0, 101);
        assert!((u.cdf_at(0.25) - 0.25).abs() < 1e-14);
        assert!((u.quantile(0.25).unwrap() - 0.25).abs() < 1e-14);
        assert!(u.quantile(1.5).is_err());
        let s = sin_measure(2.0, 1001);
        assert!((s.cdf_at(PI / 2.0) - 0.5).abs() < 1e-12);
        let step = s.density().step();
        for k in 1..20 {
            let t = k as f64 * PI / 20.0;
            assert!((s.quantile(s.cdf_at(t)).unwrap() - t).abs() <= step);
        }
    }

    #[test]
    fn quantile_skips_gaps() {
        let h = GridDensity::new(0.0, 1.0, vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
        let mu = Measure1D::new(&h).unwrap();
        // half the mass lies left of the gap
        assert!((mu.cdf_at(2.0) - 0.5).abs() < 1e-15);
        assert!((mu.quantile(0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(mu.quantile(0.5 + 1e-9).unwrap() > 3.0);
    }

    #[test]
    fn monotone_map_examples() {
        let a = uniform(0.0, 1.0, 201);
        let id = monotone_map(&a, &a);
        for (i, x) in id.iter().enumerate() {
            assert!((x - a.density().t(i)).abs() <= a.density().step());
        }
        let b = uniform(0.0, 2.0, 201);
        for (i, x) in monotone_map(&a, &b).iter().enumerate() {
            assert!((x - 2.0 * a.density().t(i)).abs() < 1e-12);
        }
        let c = uniform(3.0, 4.0, 77);
        let map = monotone_map(&a, &c);
        for (i, x) in map.iter().enumerate() {
            assert!((x - a.density().t(i) - 3.0).abs() < 1e-12);
        }
        assert!(map.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn w2_examples() {
        let a = uniform(0.0, 1.0, 101);
        let b = uniform(3.0, 4.0, 57);
        assert!(w2(&a, &a) < 1e-10);
        assert!((w2(&a, &b) - 3.0).abs() < 1e-12);
        let s = sin_measure(3.0, 301);
        assert!((w2(&a, &s) - w2(&s, &a)).abs() < 1e-12);
        // uniform[0,1] vs uniform[0,2]: quantiles v and 2v
        let c = uniform(0.0, 2.0, 33);
        assert!((w2(&a, &c) - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let r = uniform(0.0, 1.0, 1001);
        assert!(entropy_relative(&r, &r).unwrap().abs() < 1e-14);
        assert!((entropy_n(&r, &r, 2.0).unwrap() + 1.0).abs() < 1e-12);
        let half = GridDensity::from_fn(0.0, 1.0, 1001, |t| if t <= 0.5 { 1.0 } else { 0.0 }).unwrap();
        let mu = Measure1D::new(&half).unwrap();
        assert!((entropy_relative(&mu, &r).unwrap() - 2f64.ln()).abs() < 2e-3);
        assert!((entropy_n(&mu, &r, 1.0).unwrap() + 0.5).abs() < 2e-3);
        let off = GridDensity::from_fn(0.0, 1.0, 1001, |t| if t < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let gap = Measure1D::new(&off).unwrap();
        assert_eq!(entropy_relative(&r, &gap).unwrap(), f64::INFINITY);
        assert!(entropy_relative(&r, &uniform(0.0, 2.0, 1001)).is_err());
        // roundoff-sized tails of both measures at sin(π) stay finite
        let s = GridDensity::from_fn(0.0, PI, 501, |t| t.sin().powi(2)).unwrap();
        let tilted = s.with_values(s.values().iter().enumerate().map(|(i, v)| v * (1.0 + 0.5 * s.t(i))).collect()).unwrap();
        let e = entropy_relative(&Measure1D::new(&tilted).unwrap(), &Measure1D::new(&s).unwrap()).unwrap();
        assert!(e.is_finite() && e > 0.0);
    }

    #[test]
    fn entropy_n_decreases_as_measure_spreads() {
        let r = uniform(0.0, 1.0, 1001);
        let vals: Vec<f64> = [0.25, 0.5, 1.0]
            .iter()
            .map(|&w| {
                let h = GridDensity::from_fn(0.0, 1.0, 1001, |t| if t <= w { 1.0 } else { 0.0 }).unwrap();
                entropy_n(&Measure1D::new(&h).unwrap(), &r, 2.0).unwrap()
            })
            .collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2], "{vals:?}");
    }

    #[test]
    fn interval_sets() {
        let a: IntervalSet = "0:1".parse().unwrap();
        let b: IntervalSet = "2:4".parse().unwrap();
        assert_eq!(intermediate_set(&a, &a, 0.3).unwrap(), a);
        let p = intermediate_set(&"0:0".parse().unwrap(), &"1:1".parse().unwrap(), 0.5).unwrap();
        assert_eq!(p.pieces(), &[(0.5, 0.5)]);
        assert_eq!(intermediate_set(&a, &b, 0.5).unwrap().pieces(), &[(1.0, 2.5)]);
        assert_eq!(theta_extremal(&a, &"0.5:3".parse().unwrap(), 1.0).unwrap(), 0.0);
        assert_eq!(theta_extremal(&a, &b, 0.0).unwrap(), 1.0);
        assert_eq!(theta_extremal(&a, &b, -1.0).unwrap(), 4.0);
        let merged: IntervalSet = "3:4,0:1,1:2".parse().unwrap();
        assert_eq!(merged.pieces(), &[(0.0, 2.0), (3.0, 4.0)]);
        assert_eq!(merged.to_string().parse::<IntervalSet>().unwrap(), merged);
        assert!("1:0".parse::<IntervalSet>().is_err());
        assert!("abc".parse::<IntervalSet>().is_err());
    }

    #[test]
    fn bm_equality_and_reduction() {
        let h = GridDensity::from_fn(0.0, 1.0, 101, |_| 1.0).unwrap();
        let a0: IntervalSet = "0:0.2".parse().unwrap();
        let a1: IntervalSet = "0.8:1".parse().unwrap();
        let r = verify_bm(&h, 0.0, 1.0, &a0, &a1, 0.5, 1e-12).unwrap();
        assert!((r.lhs - 0.2).abs() < 1e-12 && (r.rhs - 0.2).abs() < 1e-12);
        assert!(r.slack.abs() < 1e-10 && r.holds);
        let same = verify_bm(&h, 0.0, 2.5, &a0, &a0, 0.3, 1e-12).unwrap();
        assert!(same.slack >= -1e-12);
        assert!((same.rhs - same.mass0.powf(1.0 / 2.5)).abs() < 1e-12);
        let null: IntervalSet = "0.5:0.5".parse().unwrap();
        assert!(verify_bm(&h, 0.0, 2.0, &null, &a1, 0.5, 1e-9).is_err());
    }

    #[test]
    fn bm_detects_wrong_curvature() {
        // the uniform density is not CD(K,N) for K > 0, and a far pair shows it
        let h = GridDensity::from_fn(0.0, 3.0, 301, |_| 1.0).unwrap();
        let a0: IntervalSet = "0:0.1".parse().unwrap();
        let a1: IntervalSet = "2.9:3".parse().unwrap();
        assert!(!verify_bm(&h, 1.0, 2.0, &a0, &a1, 0.5, 1e-9).unwrap().holds);
    }

    #[test]
    fn set_mass_is_exact_for_power_profiles() {
        let h = model_density(ModelKind::Power, CdParams::new(0.0, 3.0, 1.0).unwrap(), 0.0, 11).unwrap();
        // t^2 on [0,1], g = t linear, so the integral is exact
        let m = set_mass(&h, 3.0, &"0.05:0.73".parse().unwrap());
        assert!((m - (0.73f64.powi(3) - 0.05f64.powi(3)) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn displacement_check_on_the_sphere_profile() {
        let n = 3.0;
        let h = model_density(ModelKind::Sin, CdParams::new(n - 1.0, n, PI).unwrap(), 0.0, 801).unwrap();
        for t in [0.25, 0.5, 0.75] {
            let (lhs, rhs) = displacement_check(&h, n - 1.0, n, (0.1, 0.6), (1.9, 3.0), t).unwrap();
            assert!(lhs >= rhs - 1e-5, "t={t}: {lhs} < {rhs}");
        }
    }
}
