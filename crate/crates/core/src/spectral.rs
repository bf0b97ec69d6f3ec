//! First eigenvalue of the weighted p-Laplacian on model intervals and on
//! sampled densities.
//!
//! The model value comes from a Prüfer shooting on the half interval
//! `[0, D/2]` of the symmetric model `[-D/2, D/2]`: with `u = r sin_p(φ)` and
//! `α u' = r cos_p(φ)`, `α = (λ/(p-1))^{1/p}`,
//!
//! ```text
//! φ' = α + (log h)'(t) / (p-1) · cos_p^{(p-1)}(φ) sin_p(φ),   φ(0) = 0,
//! ```
//!
//! and λ is the value for which `φ(D/2) = π_p/2`. Here `h` is `cos^{N-1}`
//! (`K > 0`) or `cosh^{N-1}` (`K < 0`) of `sqrt(|K|/(N-1)) t`, so the weight is
//! `-(N-1) tan_{K,N}` for positive and `+(N-1) tan_{K,N}` for negative `K`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::coeffs::bonnet_myers;
use crate::density::GridDensity;
use crate::error::{Error, Result};
use crate::ptrig::{pi_p, signed_pow, PExponent, PruferTable};

const TABLE_CELLS: usize = 8192;
const BASE_STEPS: f64 = 20000.0;
const STEPS_PER_HALVING: f64 = 24.0;
/// Distance from the tangent pole at which integration stops.
const POLE_GAP: f64 = 1e-8;
/// Fraction of the half length integrated on the graded mesh near a pole.
const POLE_ZONE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// `|φ(D/2) - π_p/2|` at `lambda`.
    pub phi_end_error: f64,
    pub grid_step: f64,
    /// The half interval ends at the tangent pole and the residual comes from
    /// matching against the regular branch there.
    pub at_pole: bool,
}

fn prufer_table(p: PExponent) -> Arc<PruferTable> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<PruferTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = p.get().to_bits();
    if let Some(t) = cache.lock().expect("table cache poisoned").get(&key) {
        return t.clone();
    }
    let table = Arc::new(PruferTable::new(p, TABLE_CELLS));
    cache
        .lock()
        .expect("table cache poisoned")
        .entry(key)
        .or_insert(table)
        .clone()
}

/// Geometry of one shooting problem.
struct Shooter {
    table: Arc<PruferTable>,
    p: f64,
    /// `(N-1)/(p-1)` times the sign of the log-derivative.
    weight: f64,
    /// `sqrt(|K|/(N-1))`, zero for `K = 0`.
    rate: f64,
    positive_k: bool,
    half: f64,
    /// End of the uniform part.
    uniform_end: f64,
    /// Pole location for `K > 0`, otherwise infinity.
    pole: f64,
    end: f64,
    at_pole: bool,
    half_pi: f64,
    n: f64,
}

impl Shooter {
    fn new(p: PExponent, k: f64, n: f64, d: f64) -> Result<Self> {
        if !(n > 1.0) {
            return Err(Error::domain(format!("shooting needs N > 1, got {n}")));
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain(format!("D must be positive and finite, got {d}")));
        }
        let bound = bonnet_myers(k, n);
        if d > bound * (1.0 + 1e-9) {
            return Err(Error::domain(format!(
                "D = {d} exceeds the Bonnet-Myers bound {bound} for K = {k}, N = {n}"
            )));
        }
        let pv = p.get();
        let rate = (k.abs() / (n - 1.0)).sqrt();
        let half = 0.5 * d;
        let pole = if k > 0.0 { 0.5 * PI / rate } else { f64::INFINITY };
        let at_pole = k > 0.0 && half >= pole * (1.0 - 1e-12);
        let end = if at_pole { pole - POLE_GAP } else { half };
        let uniform_end = if k > 0.0 && half > pole * (1.0 - POLE_ZONE) {
            pole * (1.0 - POLE_ZONE)
        } else {
            end
        };
        let sign = if k > 0.0 { -1.0 } else { 1.0 };
        Ok(Shooter {
            table: prufer_table(p),
            p: pv,
            weight: sign * (n - 1.0) * rate / (pv - 1.0),
            rate,
            positive_k: k > 0.0,
            half,
            uniform_end,
            pole,
            end,
            at_pole,
            half_pi: 0.5 * pi_p(p),
            n,
        })
    }

    fn per_halving(&self, step: f64) -> f64 {
        (STEPS_PER_HALVING * self.half / (BASE_STEPS * step)).max(STEPS_PER_HALVING)
    }

    fn slope(&self, t: f64) -> f64 {
        if self.rate == 0.0 {
            0.0
        } else if self.positive_k {
            self.weight * (self.rate * t).tan()
        } else {
            self.weight * (self.rate * t).tanh()
        }
    }

    fn rhs(&self, alpha: f64, t: f64, phi: f64) -> f64 {
        alpha + self.slope(t) * self.table.eval(phi)
    }

    fn rk4(&self, alpha: f64, t: f64, phi: f64, h: f64) -> f64 {
        let k1 = self.rhs(alpha, t, phi);
        let k2 = self.rhs(alpha, t + 0.5 * h, phi + 0.5 * h * k1);
        let k3 = self.rhs(alpha, t + 0.5 * h, phi + 0.5 * h * k2);
        let k4 = self.rhs(alpha, t + h, phi + h * k3);
        phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// `φ` at the end of the half interval for the given step.
    fn shoot(&self, lambda: f64, step: f64) -> f64 {
        let alpha = (lambda / (self.p - 1.0)).powf(1.0 / self.p);
        if self.rate == 0.0 {
            return alpha * self.half;
        }
        let cells = (self.uniform_end / step).ceil().max(1.0) as usize;
        let h = self.uniform_end / cells as f64;
        let mut phi = 0.0;
        for i in 0..cells {
            phi = self.rk4(alpha, i as f64 * h, phi, h);
        }
        if self.at_pole {
            // match against the branch that stays regular at the pole,
            // integrated backwards where it is attracting
            let per_halving = self.per_halving(step);
            let ratio = 2f64.powf(1.0 / per_halving);
            let s_end = self.pole - self.uniform_end;
            let mut dist = POLE_GAP;
            let mut back = self.half_pi - alpha * dist / self.n;
            while dist < s_end {
                let next = (dist * ratio).min(s_end);
                back = self.rk4(alpha, self.pole - dist, back, dist - next);
                dist = next;
            }
            return self.half_pi + (phi - back);
        }
        if self.uniform_end < self.end {
            // geometric mesh in the distance to the pole
            let ratio = 0.5f64.powf(1.0 / self.per_halving(step));
            let d_end = self.pole - self.end;
            let mut dist = self.pole - self.uniform_end;
            while dist > d_end {
                let next = (dist * ratio).max(d_end);
                phi = self.rk4(alpha, self.pole - dist, phi, dist - next);
                dist = next;
            }
        }
        phi
    }
}

/// `φ(D/2)` for the model ODE with a fixed RK4 step.
///
/// Close to a tangent pole the last tenth of the half interval is covered by
/// a geometric mesh in the distance to the pole. When `D` sits at the
/// Bonnet-Myers bound the point `φ = π_p/2` is repelling forwards in `t`, so
/// the regular branch `φ ≈ π_p/2 - α s/N` is started `1e-8` before the pole
/// and integrated backwards to the start of that zone. The returned value is
/// `π_p/2` plus the mismatch of the two shots, which is the one-sided limit
/// of `φ(D/2)` when the shots agree.
pub fn shoot_phi(p: f64, k: f64, n: f64, d: f64, lambda: f64, step: f64) -> Result<f64> {
    let p = PExponent::new(p)?;
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    if !(step > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {step}")));
    }
    Ok(Shooter::new(p, k, n, d)?.shoot(lambda, step))
}

/// `(p-1)(π_p/D)^p` for `K = 0` (any `N`), `KN/(N-1)` for `p = 2`, `K > 0`
/// at the Bonnet-Myers diameter; otherwise none.
pub fn lambda_closed_form(p: f64, k: f64, n: f64, d: f64) -> Option<f64> {
    let pe = PExponent::new(p).ok()?;
    if k == 0.0 {
        return Some((p - 1.0) * (pi_p(pe) / d).powf(p));
    }
    if p == 2.0 && k > 0.0 && n > 1.0 && (d - bonnet_myers(k, n)).abs() <= 1e-12 {
        return Some(k * n / (n - 1.0));
    }
    None
}

/// `(NK/(N-1))^{p/2} / (p-1)^{p-1}`.
pub fn li_wang_bound(p: f64, k: f64, n: f64) -> Result<f64> {
    if !(p >= 2.0) || !(k > 0.0) || !(n > 1.0) {
        return Err(Error::domain(format!(
            "the bound needs p >= 2, K > 0, N > 1; got p={p}, K={k}, N={n}"
        )));
    }
    Ok((n * k / (n - 1.0)).powf(0.5 * p) / (p - 1.0).powf(p - 1.0))
}

/// `λ^{1,p}_{K,N,D}` by bisection on the shooting residual `φ(D/2) - π_p/2`.
///
/// Results are memoized on the exact arguments.
pub fn lambda_model(p: f64, k: f64, n: f64, d: f64, tol: f64) -> Result<EigenResult> {
    static CACHE: OnceLock<Mutex<HashMap<[u64; 5], EigenResult>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = [p, k, n, d, tol].map(f64::to_bits);
    if let Some(r) = cache.lock().expect("eigenvalue cache poisoned").get(&key) {
        return Ok(r.clone());
    }
    let r = solve_lambda_model(p, k, n, d, tol)?;
    cache.lock().expect("eigenvalue cache poisoned").insert(key, r.clone());
    Ok(r)
}

fn solve_lambda_model(p: f64, k: f64, n: f64, d: f64, tol: f64) -> Result<EigenResult> {
    let pe = PExponent::new(p)?;
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::domain(format!("N must be >= 1, got {n}")));
    }
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::domain(format!("D must be positive and finite, got {d}")));
    }
    let anchor = (p - 1.0) * (pi_p(pe) / d).powf(p);
    if n == 1.0 {
        return Ok(EigenResult {
            lambda: anchor,
            bracket: (anchor, anchor),
            iterations: 0,
            phi_end_error: 0.0,
            grid_step: 0.0,
            at_pole: false,
        });
    }
    let shooter = Shooter::new(pe, k, n, d)?;
    let target = 0.5 * pi_p(pe);
    let guess = match li_wang_bound(p, k, n) {
        Ok(b) => anchor.max(b),
        Err(_) => anchor,
    };

    let mut step = 0.5 * d / BASE_STEPS;
    if shooter.rate != 0.0 && !shooter.at_pole {
        let mut prev = shooter.shoot(guess, step);
        for _ in 0..4 {
            let next = shooter.shoot(guess, 0.5 * step);
            step *= 0.5;
            if (next - prev).abs() <= 1e-10 {
                break;
            }
            prev = next;
        }
    }
    let residual = |lambda: f64| shooter.shoot(lambda, step) - target;

    let mut lo = 0.25 * anchor;
    let mut hi = 4.0 * guess;
    let mut expansions = 0;
    while residual(lo) > 0.0 {
        lo *= 0.25;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Bracket(format!("no lower bracket for p={p}, K={k}, N={n}, D={d}")));
        }
    }
    while residual(hi) < 0.0 {
        hi *= 4.0;
        expansions += 1;
        if expansions > 60 || !hi.is_finite() {
            return Err(Error::Bracket(format!("no upper bracket for p={p}, K={k}, N={n}, D={d}")));
        }
    }
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let lambda = 0.5 * (lo + hi);
    Ok(EigenResult {
        lambda,
        bracket: (lo, hi),
        iterations,
        phi_end_error: residual(lambda).abs(),
        grid_step: step,
        at_pole: shooter.at_pole,
    })
}

/// Cell masses `step (h_i + h_{i+1})/2` and lumped node masses.
pub(crate) fn fem_masses(h: &GridDensity) -> (Vec<f64>, Vec<f64>) {
    let v = h.values();
    let cell: Vec<f64> = v.windows(2).map(|w| 0.5 * h.step() * (w[0] + w[1])).collect();
    let node = (0..v.len())
        .map(|i| {
            let left = if i > 0 { cell[i - 1] } else { 0.0 };
            let right = cell.get(i).copied().unwrap_or(0.0);
            0.5 * (left + right)
        })
        .collect();
    (cell, node)
}

/// Root `c` of `Σ w_i (u_i - c)^{(p-1)} = 0`.
pub fn p_mean_shift(u: &[f64], weights: &[f64], p: f64) -> f64 {
    let f = |c: f64| -> f64 {
        u.iter()
            .zip(weights)
            .map(|(&x, &w)| w * signed_pow(x - c, p - 1.0))
            .sum()
    };
    let mut lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(∫|u|^p dm, ∫|u'|^p dm)` against the normalized measure `m = h L¹`.
pub fn p_norm_energy(h: &GridDensity, u: &[f64], p: f64) -> Result<(f64, f64)> {
    if u.len() != h.len() {
        return Err(Error::domain("test function does not match the grid"));
    }
    let (cell, node) = fem_masses(h);
    let total: f64 = node.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("density has zero mass"));
    }
    let norm = node.iter().zip(u).map(|(b, x)| b / total * x.abs().powf(p)).sum();
    let energy = cell
        .iter()
        .enumerate()
        .map(|(i, m)| m / total * ((u[i + 1] - u[i]) / h.step()).abs().powf(p))
        .sum();
    Ok((norm, energy))
}

/// Discrete `∫|u'|^p h / ∫|u - c|^p h` with `c` the p-mean shift.
pub fn rayleigh_quotient(h: &GridDensity, u: &[f64], p: f64) -> Result<f64> {
    if u.len() != h.len() {
        return Err(Error::domain("test function does not match the grid"));
    }
    let (_, node) = fem_masses(h);
    let c = p_mean_shift(u, &node, p);
    let shifted: Vec<f64> = u.iter().map(|x| x - c).collect();
    let (norm, energy) = p_norm_energy(h, &shifted, p)?;
    if !(norm > 0.0) {
        return Err(Error::domain("test function is constant on the support"));
    }
    Ok(energy / norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayleighResult {
    pub value: f64,
    /// Minimizing grid function with zero p-mean; zero outside the support.
    pub u: Vec<f64>,
}

/// Outcome of one discrete shooting pass.
enum Pass {
    /// `λ` lies below the first nontrivial eigenvalue.
    Below,
    Above,
}

fn discrete_shoot(cell: &[f64], node: &[f64], range: (usize, usize), step: f64, p: f64, lambda: f64, out: &mut Vec<f64>) -> Pass {
    let (first, last) = range;
    out.clear();
    let e = 1.0 / (p - 1.0);
    let mut u = -1.0;
    let mut flux = 0.0;
    let mut crossings = 0;
    out.push(u);
    for i in first..last {
        flux -= lambda * node[i] * signed_pow(u, p - 1.0);
        let slope = signed_pow(flux * step / cell[i], e);
        let next = u + step * slope;
        if (next > 0.0) != (u > 0.0) && next != 0.0 {
            crossings += 1;
            if crossings >= 2 {
                return Pass::Above;
            }
        }
        u = next;
        out.push(u);
    }
    flux -= lambda * node[last] * signed_pow(u, p - 1.0);
    if crossings == 0 || flux > 0.0 {
        Pass::Below
    } else {
        Pass::Above
    }
}

/// Minimal discrete p-Rayleigh quotient of `h` under the zero p-mean constraint.
///
/// The first nontrivial eigenfunction of the discrete Euler-Lagrange system is
/// found by shooting from the left end of the support and bisecting on its
/// nodal count; the returned value is the quotient of that function, so it is
/// an upper bound for the discrete infimum.
pub fn rayleigh_p_detail(h: &GridDensity, p: f64, tol: f64) -> Result<RayleighResult> {
    PExponent::new(p)?;
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(h.mass() > 0.0) {
        return Err(Error::domain("rayleigh quotient of a zero-mass density"));
    }
    let (cell, node) = fem_masses(h);
    let first = node.iter().position(|&b| b > 0.0).expect("positive mass");
    let last = node.iter().rposition(|&b| b > 0.0).expect("positive mass");
    if cell[first..last].iter().any(|&m| m <= 0.0) {
        // disconnected support: a locally constant function has zero energy
        let mut u = vec![0.0; h.len()];
        let split = first + cell[first..last].iter().position(|&m| m <= 0.0).expect("zero cell");
        for x in &mut u[first..=split] {
            *x = -1.0;
        }
        for x in &mut u[split + 1..=last] {
            *x = 1.0;
        }
        return Ok(RayleighResult { value: 0.0, u });
    }
    let range = (first, last);
    let mut buf = Vec::with_capacity(last - first + 1);
    let len = h.step() * (last - first) as f64;
    let mut hi = (p - 1.0) * (PI / len).powf(p).max(1.0);
    let mut guard = 0;
    while let Pass::Below = discrete_shoot(&cell, &node, range, h.step(), p, hi, &mut buf) {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Bracket("no upper bracket for the discrete eigenvalue".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match discrete_shoot(&cell, &node, range, h.step(), p, mid, &mut buf) {
            Pass::Below => lo = mid,
            Pass::Above => hi = mid,
        }
    }
    let lambda = 0.5 * (lo + hi);
    discrete_shoot(&cell, &node, range, h.step(), p, lambda, &mut buf);
    let mut u = vec![0.0; h.len()];
    // the shooting may stop early above the eigenvalue; pad with the last value
    for (j, x) in u[first..=last].iter_mut().enumerate() {
        *x = buf.get(j).copied().unwrap_or(*buf.last().expect("non-empty"));
    }
    for i in 0..first {
        u[i] = u[first];
    }
    for i in last + 1..h.len() {
        u[i] = u[last];
    }
    let c = p_mean_shift(&u, &node, p);
    let scale = u.iter().map(|x| (x - c).abs()).fold(0.0, f64::max);
    for x in &mut u {
        *x = (*x - c) / scale;
    }
    let value = rayleigh_quotient(h, &u, p)?;
    Ok(RayleighResult { value, u })
}

pub fn rayleigh_p(h: &GridDensity, p: f64, tol: f64) -> Result<f64> {
    Ok(rayleigh_p_detail(h, p, tol)?.value)
}

/// `min_{δ, D} λ(p, N-1-δ, N+δ, D) - λ(p, N-1, N, π)` over `δ ∈ delta_grid`
/// and a `D`-grid on `[D_min, π - ε]`. Below `D_min` the `K = 0` lower bound
/// already exceeds twice the reference value.
pub fn rigidity_gap(p: f64, n: f64, eps: f64, delta_grid: &[f64]) -> Result<f64> {
    let pe = PExponent::new(p)?;
    if !(eps > 0.0 && eps < PI) {
        return Err(Error::domain(format!("eps must lie in (0, pi), got {eps}")));
    }
    if !(n > 1.0) {
        return Err(Error::domain(format!("N must be > 1, got {n}")));
    }
    if delta_grid.is_empty() {
        return Err(Error::domain("empty delta grid"));
    }
    let tol = 1e-10;
    let reference = lambda_model(p, n - 1.0, n, PI, tol)?.lambda;
    let d_max = PI - eps;
    let d_min = (pi_p(pe) * ((p - 1.0) / (2.0 * reference)).powf(1.0 / p)).min(d_max);
    const SAMPLES: usize = 8;
    let mut gap = f64::INFINITY;
    for &delta in delta_grid {
        if !(delta >= 0.0 && delta < n - 1.0) {
            return Err(Error::domain(format!("delta must lie in [0, N-1), got {delta}")));
        }
        for j in 0..SAMPLES {
            let d = d_min + (d_max - d_min) * j as f64 / (SAMPLES - 1) as f64;
            let value = lambda_model(p, n - 1.0 - delta, n + delta, d, tol)?.lambda;
            gap = gap.min(value - reference);
        }
    }
    Ok(gap)
}
