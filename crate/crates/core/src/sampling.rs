//! Seeded random draws of test points, shared by the verification suites.

use std::f64::consts::PI;

use rand::Rng;

use crate::linalg::C64;
use crate::local::{CouplingParams, GlobalPoint, LocalPoint};

pub const DEFAULT_PARAMS: CouplingParams = CouplingParams { n: 2, x: 1.0, u: -0.3, v: 0.5 };

/// Couplings for trajectory comparisons. The flow of `h_k` turns at rates
/// of order `λ_maxᵏ` for the largest eigenvalue of the Lax matrix, which is
/// of order 10–250 at [`DEFAULT_PARAMS`]; these couplings keep it near 10,
/// so that a unit time interval spans a handful of periods.
pub const DYNAMICS_PARAMS: CouplingParams = CouplingParams { n: 2, x: 0.3, u: -0.05, v: 0.1 };

/// An interior point with `p̂₁ ∈ (−0.8, −0.02)`, wall gaps exceeding `|x|/2`
/// by `(0.02, 0.8)` and uniform angles.
pub fn random_interior<R: Rng>(x: f64, n: usize, rng: &mut R) -> LocalPoint {
    random_interior_with(x, n, 0.02..0.8, rng)
}

/// Like [`random_interior`] with the excess over each wall drawn from `extra`.
pub fn random_interior_with<R: Rng>(x: f64, n: usize, extra: std::ops::Range<f64>, rng: &mut R) -> LocalPoint {
    let mut p = Vec::with_capacity(n);
    p.push(-rng.gen_range(extra.clone()));
    for j in 1..n {
        p.push(p[j - 1] - x.abs() / 2.0 - rng.gen_range(extra.clone()));
    }
    let q = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
    LocalPoint::new(p, q).expect("lengths agree")
}

/// An interior point within `(0.02, 0.2)` of every wall, where the Lax
/// spectrum stays moderate.
pub fn random_near_corner<R: Rng>(x: f64, n: usize, rng: &mut R) -> LocalPoint {
    random_interior_with(x, n, 0.02..0.2, rng)
}

/// `z` with Gaussian-like components of modulus below 1.2 and `|z_n| < 0.9`.
pub fn random_global<R: Rng>(n: usize, rng: &mut R) -> GlobalPoint {
    let mut z: Vec<C64> = (0..n)
        .map(|_| C64::from_polar(rng.gen_range(0.0..1.2), rng.gen_range(-PI..PI)))
        .collect();
    z[n - 1] = C64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(-PI..PI));
    GlobalPoint::new(z).expect("inside the disk")
}

/// A random tangent vector with entries in `(−1, 1)`.
pub fn random_tangent<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn params_with(base: &CouplingParams, n: usize, x: f64) -> CouplingParams {
    CouplingParams { n, x, ..*base }
}
