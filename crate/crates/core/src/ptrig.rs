//! Generalized trigonometric functions `pi_p`, `sin_p`, `cos_p`.
//!
//! `sin_p` is the inverse of `arcsin_p(s) = ∫_0^s (1 - u^p)^{-1/p} du` on
//! `[-pi_p/2, pi_p/2]`, reflected about `pi_p/2` and extended with period
//! `2 pi_p`. `cos_p` is its derivative, so `|sin_p|^p + |cos_p|^p = 1`.
//!
//! The integrand of `arcsin_p` has an integrable singularity at `u = 1`.
//! Near the top we integrate in the variable `v` with `u = 1 - v^q`,
//! `q = p/(p-1)`, which turns the integrand into a bounded one, and we
//! invert in that variable too so `cos_p` keeps full relative accuracy
//! close to `pi_p/2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad;

const QUAD_TOL: f64 = 1e-15;
const NEWTON_TOL: f64 = 1e-15;

/// An exponent `p > 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PExponent(f64);

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 1.0 {
            Ok(PExponent(p))
        } else {
            Err(Error::domain(format!("p-trig exponent must be > 1, got {p}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Conjugate exponent `p/(p-1)`.
    fn conjugate(self) -> f64 {
        self.0 / (self.0 - 1.0)
    }
}

/// `pi_p = 2 pi / (p sin(pi/p))`.
pub fn pi_p(p: PExponent) -> f64 {
    let p = p.get();
    2.0 * PI / (p * (PI / p).sin())
}

/// `1 - (1 - x)^p`, accurate for small `x`.
fn one_minus_pow_complement(p: f64, x: f64) -> f64 {
    -(p * (-x).ln_1p()).exp_m1()
}

fn head_integrand(p: f64, u: f64) -> f64 {
    (1.0 - u.powf(p)).powf(-1.0 / p)
}

/// Integrand of the tail `∫_s^1 (1-u^p)^{-1/p} du` after `u = 1 - v^q`.
fn tail_integrand(p: f64, q: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return q * p.powf(-1.0 / p);
    }
    let w = v.powf(q);
    q * v.powf(q - 1.0) * one_minus_pow_complement(p, w).powf(-1.0 / p)
}

fn head(p: f64, s: f64) -> f64 {
    quad::integrate(|u| head_integrand(p, u), 0.0, s, QUAD_TOL, QUAD_TOL).value
}

fn tail(p: f64, q: f64, v: f64) -> f64 {
    quad::integrate(|x| tail_integrand(p, q, x), 0.0, v, QUAD_TOL, QUAD_TOL).value
}

/// `∫_0^s (1 - u^p)^{-1/p} du` for `|s| <= 1`.
pub fn arcsin_p(p: PExponent, s: f64) -> Result<f64> {
    if !(s.abs() <= 1.0) {
        return Err(Error::domain(format!("arcsin_p argument must lie in [-1,1], got {s}")));
    }
    let a = s.abs();
    let pv = p.get();
    let t = if a <= 0.5 {
        head(pv, a)
    } else {
        let q = p.conjugate();
        0.5 * pi_p(p) - tail(pv, q, (1.0 - a).powf(1.0 / q))
    };
    Ok(t.copysign(s))
}

/// Safeguarded Newton for an increasing function on `[lo, hi]`.
fn newton_increasing<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, target: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let r = f(x) - target;
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - r / df(x);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let moved = (next - x).abs();
        x = next;
        if moved <= NEWTON_TOL * x.abs() || hi - lo <= NEWTON_TOL * hi {
            break;
        }
    }
    x
}

/// `(sin_p, cos_p)` for `t` in `[0, pi_p/2]`.
fn first_quadrant(p: PExponent, t: f64) -> (f64, f64) {
    let pv = p.get();
    let q = p.conjugate();
    let half_pi = 0.5 * pi_p(p);
    if t <= 0.0 {
        return (0.0, 1.0);
    }
    let t_half = head(pv, 0.5);
    if t <= t_half {
        let s = newton_increasing(
            |s| head(pv, s),
            |s| head_integrand(pv, s),
            0.0,
            0.5,
            t,
        );
        (s, (1.0 - s.powf(pv)).powf(1.0 / pv))
    } else {
        let r = half_pi - t;
        if r <= 0.0 {
            return (1.0, 0.0);
        }
        let v_half = 0.5f64.powf(1.0 / q);
        let v = newton_increasing(
            |v| tail(pv, q, v),
            |v| tail_integrand(pv, q, v),
            0.0,
            v_half,
            r,
        );
        let w = v.powf(q);
        (1.0 - w, one_minus_pow_complement(pv, w).powf(1.0 / pv))
    }
}

/// `(sin_p(t), cos_p(t))` for any real `t`.
pub fn sin_cos_p(p: PExponent, t: f64) -> (f64, f64) {
    let pi = pi_p(p);
    let period = 2.0 * pi;
    // reduce to [-pi_p/2, 3 pi_p/2)
    let mut r = t - period * ((t + 0.5 * pi) / period).floor();
    let mut cos_sign = 1.0;
    if r > 0.5 * pi {
        r = pi - r;
        cos_sign = -1.0;
    }
    let (s, c) = first_quadrant(p, r.abs().min(0.5 * pi));
    (s.copysign(r), cos_sign * c)
}

pub fn sin_p(p: PExponent, t: f64) -> f64 {
    sin_cos_p(p, t).0
}

pub fn cos_p(p: PExponent, t: f64) -> f64 {
    sin_cos_p(p, t).1
}

/// Signed power `x^{(e)} = |x|^e sign(x)`.
pub fn signed_pow(x: f64, e: f64) -> f64 {
    x.abs().powf(e).copysign(x)
}

/// Tabulated `cos_p^{(p-1)}(φ) sin_p(φ)`, the nonlinearity of the
/// p-Laplacian Prüfer equation.
///
/// Node values come from [`sin_cos_p`]; between nodes the product is
/// interpolated by cubic Hermite using its exact derivative
/// `|cos_p|^p - (p-1)|sin_p|^p`. For `p = 2` the product is evaluated
/// directly as `sin φ cos φ`.
#[derive(Debug, Clone)]
pub struct PruferTable {
    p: PExponent,
    half_pi: f64,
    step: f64,
    value: Vec<f64>,
    slope: Vec<f64>,
}

impl PruferTable {
    pub fn new(p: PExponent, cells: usize) -> Self {
        let half_pi = 0.5 * pi_p(p);
        if p.get() == 2.0 {
            return PruferTable {
                p,
                half_pi,
                step: 0.0,
                value: Vec::new(),
                slope: Vec::new(),
            };
        }
        let cells = cells.max(16);
        let step = half_pi / cells as f64;
        let pv = p.get();
        let (value, slope) = (0..=cells)
            .map(|k| {
                let (s, c) = first_quadrant(p, (k as f64 * step).min(half_pi));
                (
                    signed_pow(c, pv - 1.0) * s,
                    c.abs().powf(pv) - (pv - 1.0) * s.abs().powf(pv),
                )
            })
            .unzip();
        PruferTable {
            p,
            half_pi,
            step,
            value,
            slope,
        }
    }

    pub fn p(&self) -> PExponent {
        self.p
    }

    /// `cos_p^{(p-1)}(φ) sin_p(φ)`; odd, `pi_p`-periodic, antisymmetric about `pi_p/2`.
    pub fn eval(&self, phi: f64) -> f64 {
        if self.value.is_empty() {
            return phi.sin() * phi.cos();
        }
        let pi = 2.0 * self.half_pi;
        let r = phi - pi * ((phi + self.half_pi) / pi).floor();
        let sign = if r < 0.0 { -1.0 } else { 1.0 };
        let x = r.abs().min(self.half_pi);
        let pos = x / self.step;
        let k = (pos.floor() as usize).min(self.value.len() - 2);
        let u = pos - k as f64;
        let (y0, y1) = (self.value[k], self.value[k + 1]);
        let (m0, m1) = (self.slope[k] * self.step, self.slope[k + 1] * self.step);
        let u2 = u * u;
        let u3 = u2 * u;
        let y = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1;
        sign * y
    }
}
