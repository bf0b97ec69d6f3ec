//! Seeded random CD(K,N) densities, measures and disintegrations.
//!
//! Densities are built as `h = g^{N-1}` with `g` the minimum of a few positive
//! combinations of solutions of `g'' + K/(N-1) g = 0`. Such a minimum satisfies
//! the CD(K,N) condition exactly, so generated densities need no rejection.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::coeffs::bonnet_myers;
use crate::density::{GridDensity, N_ONE_BAND};
use crate::error::{Error, Result};
use crate::localize::{Disintegration, SingularPoint};
use crate::transport1d::Measure1D;

pub use rand::SeedableRng;

/// Deterministic generator for a seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One term `g(t)` with `g'' + δ g = 0`, positive on `[a, b]`.
fn solution_term(rng: &mut ChaCha8Rng, delta: f64, a: f64, b: f64) -> Box<dyn Fn(f64) -> f64> {
    let len = b - a;
    let amp = rng.gen_range(0.5..2.0);
    if delta > 0.0 {
        let r = delta.sqrt();
        // sin(r(t - s)) stays positive while t - s ∈ (0, π/r)
        let room = (PI / r - len).max(0.0);
        let s = a - rng.gen_range(0.02..0.98) * room;
        Box::new(move |t| amp * (r * (t - s)).sin())
    } else if delta == 0.0 {
        let slope = rng.gen_range(-0.9..2.0) / len;
        Box::new(move |t| amp * (1.0 + slope * (t - a)))
    } else {
        let r = (-delta).sqrt();
        let which = rng.gen_range(0..3);
        let s = rng.gen_range(a - len..b + len);
        let beta = rng.gen_range(0.0..1.0);
        match which {
            0 => Box::new(move |t| amp * (r * (t - s)).cosh()),
            1 => Box::new(move |t| amp * ((r * (t - a)).sinh() * beta + (-(r * (t - a))).exp())),
            _ => Box::new(move |t| amp * ((r * (t - s)).exp() + beta * (r * (b - t)).sinh())),
        }
    }
}

/// Random CD(K,N) density on an interval of length at most `max_len`
/// (and inside the Bonnet-Myers bound), sampled on `nodes` points.
pub fn random_cd_density(rng: &mut ChaCha8Rng, k: f64, n: f64, max_len: f64, nodes: usize) -> Result<GridDensity> {
    if !(n >= 1.0) || !(max_len > 0.0) {
        return Err(Error::domain(format!("need N >= 1 and a positive length, got N={n}, L={max_len}")));
    }
    let mut cap = max_len;
    if k > 0.0 {
        cap = cap.min(0.95 * bonnet_myers(k, n));
    }
    let len = rng.gen_range(0.3..=1.0) * cap;
    let a = rng.gen_range(-1.0..1.0);
    let b = a + len;
    if n < 1.0 + N_ONE_BAND {
        if k > 0.0 {
            return Err(Error::domain("no CD(K,1) density with K > 0 on an interval"));
        }
        let c = rng.gen_range(0.5..2.0);
        return GridDensity::from_fn(a, b, nodes, |_| c);
    }
    let delta = k / (n - 1.0);
    let count = rng.gen_range(1..=3);
    let terms: Vec<Vec<Box<dyn Fn(f64) -> f64>>> = (0..count)
        .map(|_| (0..rng.gen_range(1..=2)).map(|_| solution_term(rng, delta, a, b)).collect())
        .collect();
    let g = |t: f64| {
        terms
            .iter()
            .map(|sum| sum.iter().map(|f| f(t)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    };
    let raw = GridDensity::from_fn(a, b, nodes, |t| g(t).max(0.0).powf(n - 1.0))?;
    let top = raw.values().iter().cloned().fold(0.0, f64::max);
    raw.scaled(1.0 / top)
}

/// `count` densities for `(K, N)` from `seed`.
pub fn cd_densities(seed: u64, count: usize, k: f64, n: f64, max_len: f64, nodes: usize) -> Result<Vec<GridDensity>> {
    let mut r = rng(seed);
    (0..count).map(|_| random_cd_density(&mut r, k, n, max_len, nodes)).collect()
}

/// The `(K, N, max_len)` combinations cycled through by [`standard_suite`].
pub const STANDARD_PARAMS: [(f64, f64, f64); 5] = [(0.0, 2.0, 2.0), (1.0, 2.0, PI), (2.0, 3.0, PI), (-1.0, 3.0, 2.0), (0.0, 4.0, 1.5)];

/// Fifty densities cycling through [`STANDARD_PARAMS`], seed 0.
pub fn standard_suite(nodes: usize) -> Result<Vec<(f64, f64, GridDensity)>> {
    let mut r = rng(0);
    (0..50)
        .map(|i| {
            let (k, n, len) = STANDARD_PARAMS[i % STANDARD_PARAMS.len()];
            Ok((k, n, random_cd_density(&mut r, k, n, len, nodes)?))
        })
        .collect()
}

/// Smooth random function `exp(Σ c_j cos(jπ x))`, `x` the relative position.
pub fn random_positive_function(rng: &mut ChaCha8Rng, h: &GridDensity, amplitude: f64) -> Vec<f64> {
    let coeffs: Vec<f64> = (1..=5).map(|j| amplitude * rng.gen_range(-1.0..1.0) / j as f64).collect();
    (0..h.len())
        .map(|i| {
            let x = (h.t(i) - h.origin()) / h.support_length();
            coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * ((j + 1) as f64 * PI * x).cos())
                .sum::<f64>()
                .exp()
        })
        .collect()
}

/// Random probability measure `μ = φ h L¹` with smooth random `φ > 0`.
pub fn random_measure(rng: &mut ChaCha8Rng, h: &GridDensity) -> Result<Measure1D> {
    let amplitude = rng.gen_range(0.1..2.0);
    let phi = random_positive_function(rng, h, amplitude);
    let values = h.values().iter().zip(&phi).map(|(a, b)| a * b).collect();
    Measure1D::new(&h.with_values(values)?)
}

/// Random interval inside the grid interval of `h`.
pub fn random_interval(rng: &mut ChaCha8Rng, h: &GridDensity) -> (f64, f64) {
    let (a, b) = (h.origin(), h.end());
    let x = rng.gen_range(a..b);
    let y = rng.gen_range(a..b);
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    (lo, hi.max(lo + 1e-3 * (b - a)).min(b))
}

/// Weights from normalized exponential samples (a flat Dirichlet draw).
pub fn dirichlet(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| -rng.gen_range(f64::EPSILON..1.0f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let rest: f64 = w[..count - 1].iter().sum();
    w[count - 1] = 1.0 - rest;
    w
}

/// Random disintegration with `fibers` CD(K,N) fibers of length at most `d`
/// and, when `singular` is non-zero, that many singular points. Fiber
/// functions and singular values are zero.
pub fn random_disintegration(
    rng: &mut ChaCha8Rng,
    k: f64,
    n: f64,
    d: f64,
    fibers: usize,
    singular: usize,
    nodes: usize,
) -> Result<Disintegration> {
    if fibers + singular == 0 {
        return Err(Error::domain("a disintegration needs at least one part"));
    }
    let w = dirichlet(rng, fibers + singular);
    let parts = (0..fibers)
        .map(|i| {
            let h = random_cd_density(rng, k, n, d, nodes)?;
            let zeros = vec![0.0; h.len()];
            Ok((w[i], h, zeros))
        })
        .collect::<Result<Vec<_>>>()?;
    let points = w[fibers..]
        .iter()
        .map(|&weight| SingularPoint { weight, value: 0.0 })
        .collect();
    Disintegration::new(parts, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::validate_cd;

    #[test]
    fn generated_densities_validate() {
        for &(k, n) in &[(0.0, 2.0), (1.0, 2.0), (-1.0, 3.0), (2.0, 3.0), (-0.5, 1.0), (0.0, 5.0)] {
            let hs = cd_densities(7, 40, k, n, 2.5, 400).unwrap();
            for (i, h) in hs.iter().enumerate() {
                let r = validate_cd(h, k, n, 1e-8).unwrap();
                assert!(r.valid, "K={k} N={n} #{i}: {r:?}");
                if k > 0.0 {
                    assert!(h.support_length() <= bonnet_myers(k, n));
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = cd_densities(3, 5, -1.0, 3.0, 2.0, 100).unwrap();
        let b = cd_densities(3, 5, -1.0, 3.0, 2.0, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, cd_densities(4, 5, -1.0, 3.0, 2.0, 100).unwrap());
    }

    #[test]
    fn dirichlet_weights_sum_to_one() {
        let mut r = rng(1);
        for count in 1..20 {
            let w = dirichlet(&mut r, count);
            assert!(w.iter().all(|&x| x >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn random_disintegrations_are_cd() {
        let mut r = rng(11);
        for _ in 0..10 {
            let d = random_disintegration(&mut r, 2.0, 3.0, PI, 5, 2, 300).unwrap();
            let rep = crate::localize::verify_disintegration(&d, 2.0, 3.0, 1e-8).unwrap();
            assert!(rep.valid, "{rep:?}");
        }
    }
}
