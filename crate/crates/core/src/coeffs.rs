//! Distortion coefficients and model Jacobians.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Curvature bound `K`, dimension bound `N` and diameter bound `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdParams {
    pub k: f64,
    pub n: f64,
    /// `f64::INFINITY` for no diameter bound.
    pub d: f64,
}

impl CdParams {
    pub fn new(k: f64, n: f64, d: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::domain(format!("K must be finite, got {k}")));
        }
        if !(n >= 1.0) || !n.is_finite() {
            return Err(Error::domain(format!("N must be >= 1, got {n}")));
        }
        if !(d > 0.0) {
            return Err(Error::domain(format!("D must be positive, got {d}")));
        }
        Ok(CdParams { k, n, d })
    }

    /// `pi sqrt((N-1)/K)` for `K > 0`, otherwise `+inf`.
    pub fn bonnet_myers(&self) -> f64 {
        bonnet_myers(self.k, self.n)
    }

    /// True when a finite `D` exceeds the Bonnet-Myers bound by more than `tol`.
    /// Such a triple is still usable; the bound is simply not attained.
    pub fn exceeds_bonnet_myers(&self, tol: f64) -> bool {
        self.k > 0.0 && self.d.is_finite() && self.d > self.bonnet_myers() + tol
    }
}

pub fn bonnet_myers(k: f64, n: f64) -> f64 {
    if k > 0.0 {
        PI * ((n - 1.0) / k).sqrt()
    } else {
        f64::INFINITY
    }
}

/// A real number or `+inf`. The infinite value only comes out of the
/// `K θ² ≥ N π²` branch of [`sigma`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::PosInfinity)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            ExtendedReal::PosInfinity => None,
        }
    }

    /// Lossy conversion, mapping the sentinel to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// `self * weight` with the convention `inf * 0 = 0`.
    pub fn times(self, weight: f64) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(x * weight),
            ExtendedReal::PosInfinity if weight == 0.0 => ExtendedReal::Finite(0.0),
            ExtendedReal::PosInfinity => ExtendedReal::PosInfinity,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::PosInfinity => f.write_str("inf"),
        }
    }
}

fn check_t_theta(t: f64, theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("t must lie in [0,1], got {t}")));
    }
    if !(theta >= 0.0) {
        return Err(Error::domain(format!("theta must be non-negative, got {theta}")));
    }
    Ok(())
}

/// Distortion coefficient `σ_{K,N}^{(t)}(θ)`.
pub fn sigma(k: f64, n: f64, t: f64, theta: f64) -> Result<ExtendedReal> {
    check_t_theta(t, theta)?;
    if !(n >= 0.0) {
        return Err(Error::domain(format!("N must be non-negative, got {n}")));
    }
    let kt2 = k * theta * theta;
    if kt2 == 0.0 {
        return Ok(ExtendedReal::Finite(t));
    }
    if kt2 >= n * PI * PI {
        return Ok(ExtendedReal::PosInfinity);
    }
    let value = if kt2 > 0.0 {
        let a = theta * (k / n).sqrt();
        (t * a).sin() / a.sin()
    } else if n == 0.0 {
        t
    } else {
        let a = theta * (-k / n).sqrt();
        (t * a).sinh() / a.sinh()
    };
    Ok(ExtendedReal::Finite(value))
}

/// `τ_{K,N}^{(t)}(θ) = t^{1/N} σ_{K,N-1}^{(t)}(θ)^{(N-1)/N}`.
///
/// For `N = 1` the exponent vanishes and `τ = t`, also when the σ factor is
/// infinite. At `t = 0` the coefficient is `0`.
pub fn tau(k: f64, n: f64, t: f64, theta: f64) -> Result<ExtendedReal> {
    if !(n >= 1.0) {
        return Err(Error::domain(format!("tau needs N >= 1, got {n}")));
    }
    let s = sigma(k, n - 1.0, t, theta)?;
    if n == 1.0 {
        return Ok(ExtendedReal::Finite(t));
    }
    if t == 0.0 {
        return Ok(ExtendedReal::Finite(0.0));
    }
    Ok(match s {
        ExtendedReal::Finite(s) => {
            ExtendedReal::Finite(t.powf(1.0 / n) * s.max(0.0).powf((n - 1.0) / n))
        }
        ExtendedReal::PosInfinity => ExtendedReal::PosInfinity,
    })
}

/// `tan_{K,N}(t)`: `sqrt(δ) tan(sqrt(δ) t)` for `K > 0`, `0` for `K = 0` and
/// `sqrt(-δ) tanh(sqrt(-δ) t)` for `K < 0`, with `δ = K/(N-1)`.
pub fn tan_kn(k: f64, n: f64, t: f64) -> Result<f64> {
    if !(n > 1.0) {
        return Err(Error::domain(format!("tan_KN needs N > 1, got {n}")));
    }
    let delta = k / (n - 1.0);
    if k > 0.0 {
        let a = delta.sqrt();
        if (a * t).abs() >= 0.5 * PI {
            return Err(Error::domain(format!(
                "tan_KN pole: |t| = {} reaches (pi/2) sqrt((N-1)/K) = {}",
                t.abs(),
                0.5 * PI / a
            )));
        }
        Ok(a * (a * t).tan())
    } else if k == 0.0 {
        Ok(0.0)
    } else {
        let a = (-delta).sqrt();
        Ok(a * (a * t).tanh())
    }
}

/// Sine-type function `s_δ`.
pub fn s_delta(delta: f64, t: f64) -> f64 {
    if delta > 0.0 {
        let a = delta.sqrt();
        (a * t).sin() / a
    } else if delta == 0.0 {
        t
    } else {
        let a = (-delta).sqrt();
        (a * t).sinh() / a
    }
}

/// Cosine-type function `c_δ`.
pub fn c_delta(delta: f64, t: f64) -> f64 {
    if delta > 0.0 {
        (delta.sqrt() * t).cos()
    } else if delta == 0.0 {
        1.0
    } else {
        ((-delta).sqrt() * t).cosh()
    }
}

/// Roots `(ξ₋, ξ₊)` bounding the positive lobe of `c_δ + a s_δ` around 0.
fn jacobian_lobe(delta: f64, a: f64) -> (f64, f64) {
    if delta > 0.0 {
        let r = delta.sqrt();
        let phase = (a / r).atan();
        ((phase - 0.5 * PI) / r, (phase + 0.5 * PI) / r)
    } else if delta == 0.0 {
        if a > 0.0 {
            (-1.0 / a, f64::INFINITY)
        } else if a < 0.0 {
            (f64::NEG_INFINITY, -1.0 / a)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    } else {
        let r = (-delta).sqrt();
        let b = a / r;
        if b > 1.0 {
            ((-1.0 / b).atanh() / r, f64::INFINITY)
        } else if b < -1.0 {
            (f64::NEG_INFINITY, (-1.0 / b).atanh() / r)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }
}

/// Model Jacobian `J_{H,K,N}(t)`.
pub fn jacobian_model(h: f64, k: f64, n: f64, t: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::domain(format!("jacobian needs N >= 1, got {n}")));
    }
    if n == 1.0 {
        let on = if k > 0.0 { t == 0.0 } else { h * t >= 0.0 };
        return Ok(if on { 1.0 } else { 0.0 });
    }
    let delta = k / (n - 1.0);
    let a = h / (n - 1.0);
    let (lo, hi) = jacobian_lobe(delta, a);
    if t < lo || t > hi {
        return Ok(0.0);
    }
    let f = c_delta(delta, t) + a * s_delta(delta, t);
    Ok(f.max(0.0).powf(n - 1.0))
}
