//! Two-form evaluators, the canonical bracket and the independence rank.
//!
//! Tangent vectors are real and ordered like the chart coordinates:
//! `[p̂₁..p̂ₙ, q̂₁..q̂ₙ]` locally and `[Re z₁..Re zₙ, Im z₁..Im zₙ]` globally.

use serde::Serialize;

use crate::dynamics::fd::{try_gradient, Stencil};
use crate::error::{Error, Result};
use crate::global::K_global;
use crate::group::GroupPoint;
use crate::hamiltonians::{h_k_gradient_local, h_k_local};
use crate::linalg::{ComplexMatrix, RealMatrix};
use crate::local::{z_of_local, CouplingParams, GlobalPoint, LocalPoint, K_local};

/// Largest tolerated relative change of a factor across one stencil; beyond
/// it the difference quotient no longer resolves a smooth curve.
const MAX_RELATIVE_JUMP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Local,
    Global,
}

/// One evaluation of a two-form on a pair of tangent vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoFormSample {
    pub chart: Chart,
    pub base: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub value: f64,
}

fn shifted(y: &[f64], v: &[f64], s: f64) -> Vec<f64> {
    y.iter().zip(v).map(|(a, b)| a + s * b).collect()
}

/// Central difference `(m(+h) − m(−h)) / 2h` of one factor, with a jump guard.
fn factor_derivative(plus: &ComplexMatrix, minus: &ComplexMatrix, at: &ComplexMatrix, h: f64) -> Result<ComplexMatrix> {
    let diff = plus - minus;
    let jump = diff.norm() / at.norm();
    if !jump.is_finite() || jump > MAX_RELATIVE_JUMP {
        return Err(Error::FdBreakdown(format!("factor changes by {jump:.3e} across the stencil")));
    }
    Ok(diff.unscale(2.0 * h))
}

fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.clone().try_inverse().ok_or(Error::FdBreakdown("singular factor".into()))
}

struct Derivatives {
    a: ComplexMatrix,
    b: ComplexMatrix,
    a_tilde: ComplexMatrix,
    b_tilde: ComplexMatrix,
}

fn derivatives<F>(path: &F, y: &[f64], at: &GroupPoint, v: &[f64], h: f64) -> Result<Derivatives>
where
    F: Fn(&[f64]) -> Result<GroupPoint>,
{
    let fail = |e: Error| Error::FdBreakdown(format!("factor curve not evaluable: {e}"));
    let plus = path(&shifted(y, v, h)).map_err(fail)?;
    let minus = path(&shifted(y, v, -h)).map_err(fail)?;
    let d = |f: fn(&GroupPoint) -> &ComplexMatrix| factor_derivative(f(&plus), f(&minus), f(at), h);
    Ok(Derivatives {
        a: d(GroupPoint::b_l)? * inverse(at.b_l())?,
        b: d(GroupPoint::g_l)? * at.g_l().adjoint(),
        a_tilde: d(GroupPoint::b_r)? * inverse(at.b_r())?,
        b_tilde: d(GroupPoint::g_r)? * at.g_r().adjoint(),
    })
}

/// The Alekseev–Malkin form `½ Im tr(A₁B₂ − A₂B₁) + ½ Im tr(Ã₁B̃₂ − Ã₂B̃₁)` on
/// the tangents `v1, v2` at `y` of a family `y ↦ K(y)`, with `A = (Db_L)b_L⁻¹`,
/// `B = (Dg_L)g_L⁻¹` and the tilded pair built from `b_R, g_R`. Directional
/// derivatives of the Iwasawa factors are central differences with step `h`.
pub fn am_form<F>(path: F, y: &[f64], v1: &[f64], v2: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<GroupPoint>,
{
    let at = path(y)?;
    let d1 = derivatives(&path, y, &at, v1, h)?;
    let d2 = derivatives(&path, y, &at, v2, h)?;
    let left = (&d1.a * &d2.b - &d2.a * &d1.b).trace().im;
    let right = (&d1.a_tilde * &d2.b_tilde - &d2.a_tilde * &d1.b_tilde).trace().im;
    Ok(0.5 * (left + right))
}

/// `Σ dq̂_j ∧ dp̂_j`.
pub fn omega_local_form(v1: &[f64], v2: &[f64]) -> f64 {
    let n = v1.len() / 2;
    (0..n).map(|j| v1[n + j] * v2[j] - v2[n + j] * v1[j]).sum()
}

/// `i Σ_{j<n} dz_j ∧ dz̄_j + i dz_n ∧ dz̄_n / (1 − |z_n|²)`.
pub fn omega_c_form(z: &GlobalPoint, v1: &[f64], v2: &[f64]) -> f64 {
    let n = z.n();
    (0..n)
        .map(|j| {
            let weight = if j + 1 == n { 1.0 / (1.0 - z.z[j].norm_sqr()) } else { 1.0 };
            2.0 * weight * (v1[j] * v2[n + j] - v2[j] * v1[n + j])
        })
        .sum()
}

/// Central-difference directional derivative of a vector-valued map.
pub fn pushforward<F>(f: F, y: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let plus = f(&shifted(y, v, h))?;
    let minus = f(&shifted(y, v, -h))?;
    Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// `ω̂_c(Z_* v1, Z_* v2) − ω_local(v1, v2)` for the chart map `(p̂, q̂) ↦ z`.
pub fn dense_pullback_defect(params: &CouplingParams, pt: &LocalPoint, v1: &[f64], v2: &[f64], h: f64) -> Result<f64> {
    let chart = |y: &[f64]| -> Result<Vec<f64>> { Ok(z_of_local(params, &LocalPoint::from_slice(y)?)?.to_vec()) };
    let y = pt.to_vec();
    let w1 = pushforward(chart, &y, v1, h)?;
    let w2 = pushforward(chart, &y, v2, h)?;
    let z = z_of_local(params, pt)?;
    Ok(omega_c_form(&z, &w1, &w2) - omega_local_form(v1, v2))
}

/// `(K̂^*ω)(v1, v2) − ω̂_c(v1, v2)` at `z`.
pub fn global_pullback_defect(params: &CouplingParams, z: &GlobalPoint, v1: &[f64], v2: &[f64], h: f64) -> Result<f64> {
    let path = |y: &[f64]| K_global(params, &GlobalPoint::from_slice(y)?);
    Ok(am_form(path, &z.to_vec(), v1, v2, h)? - omega_c_form(z, v1, v2))
}

/// `(K^*ω)(v1, v2) − ω_local(v1, v2)` at an interior point.
pub fn local_pullback_defect(params: &CouplingParams, pt: &LocalPoint, v1: &[f64], v2: &[f64], h: f64) -> Result<f64> {
    let path = |y: &[f64]| K_local(params, &LocalPoint::from_slice(y)?);
    Ok(am_form(path, &pt.to_vec(), v1, v2, h)? - omega_local_form(v1, v2))
}

/// `{f, g} = Σ_m (∂f/∂q̂_m ∂g/∂p̂_m − ∂f/∂p̂_m ∂g/∂q̂_m)` from gradients in
/// chart order.
pub fn canonical_bracket(df: &[f64], dg: &[f64]) -> f64 {
    let n = df.len() / 2;
    (0..n).map(|m| df[n + m] * dg[m] - df[m] * dg[n + m]).sum()
}

/// How gradients of the Hamiltonians are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientMethod {
    /// Second-order central differences with the given step.
    FiniteDifference(f64),
    Exact,
}

pub fn hamiltonian_gradient(params: &CouplingParams, pt: &LocalPoint, k: usize, method: GradientMethod) -> Result<Vec<f64>> {
    match method {
        GradientMethod::Exact => Ok(h_k_gradient_local(params, pt, k)?.1),
        GradientMethod::FiniteDifference(h) => {
            let f = |y: &[f64]| h_k_local(params, &LocalPoint::from_slice(y)?, k);
            try_gradient(f, &pt.to_vec(), h, Stencil::Central2)
        }
    }
}

/// `max |{h_j, h_k}|` over the requested (1-based) pairs.
pub fn poisson_commutativity(
    params: &CouplingParams,
    pt: &LocalPoint,
    pairs: &[(usize, usize)],
    method: GradientMethod,
) -> Result<f64> {
    let n = params.n;
    let grads: Vec<Vec<f64>> = (1..=n).map(|k| hamiltonian_gradient(params, pt, k, method)).collect::<Result<_>>()?;
    Ok(pairs
        .iter()
        .map(|&(j, k)| if j == k { 0.0 } else { canonical_bracket(&grads[j - 1], &grads[k - 1]).abs() })
        .fold(0.0, f64::max))
}

/// All pairs `j < k` of `1..=n`.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..=n).flat_map(|j| (j + 1..=n).map(move |k| (j, k))).collect()
}

/// The `n × n` matrix `[∂h_k/∂q̂_j]`.
pub fn angle_jacobian(params: &CouplingParams, pt: &LocalPoint, method: GradientMethod) -> Result<RealMatrix> {
    let n = params.n;
    let mut m = RealMatrix::zeros(n, n);
    for k in 1..=n {
        let g = hamiltonian_gradient(params, pt, k, method)?;
        for j in 0..n {
            m[(j, k - 1)] = g[n + j];
        }
    }
    Ok(m)
}

/// Numerical rank of [`angle_jacobian`] with singular values below
/// `1e−8 · σ_max` treated as zero.
pub fn independence_rank(params: &CouplingParams, pt: &LocalPoint, method: GradientMethod) -> Result<usize> {
    let sv = angle_jacobian(params, pt, method)?.singular_values();
    let top = sv.max();
    Ok(sv.iter().filter(|&&s| s > 1e-8 * top).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::sampling::{random_global, random_interior, random_tangent, DEFAULT_PARAMS as PARAMS};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_forms_on_coordinate_pairs() {
        let z = GlobalPoint::new(vec![C64::new(0.3, 0.1), C64::new(0.2, -0.4)]).unwrap();
        let e = |i: usize| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
        assert_eq!(omega_c_form(&z, &e(0), &e(2)), 2.0);
        assert_eq!(omega_c_form(&z, &e(0), &e(3)), 0.0);
        assert_eq!(omega_c_form(&z, &e(0), &e(1)), 0.0);
        assert!((omega_c_form(&z, &e(1), &e(3)) - 2.0 / 0.8).abs() < 1e-15);
        assert_eq!(omega_local_form(&e(2), &e(0)), 1.0);
        assert_eq!(omega_local_form(&e(0), &e(2)), -1.0);
    }

    #[test]
    fn forms_are_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let params = CouplingParams { n: 2, ..PARAMS };
        let z = random_global(2, &mut rng);
        let (v1, v2) = (random_tangent(4, &mut rng), random_tangent(4, &mut rng));
        let path = |y: &[f64]| K_global(&params, &GlobalPoint::from_slice(y)?);
        let a = am_form(path, &z.to_vec(), &v1, &v2, 1e-5).unwrap();
        let b = am_form(path, &z.to_vec(), &v2, &v1, 1e-5).unwrap();
        assert!((a + b).abs() < 1e-9);
        assert!(am_form(path, &z.to_vec(), &v1, &v1, 1e-5).unwrap().abs() < 1e-9);
        assert!((omega_c_form(&z, &v1, &v2) + omega_c_form(&z, &v2, &v1)).abs() < 1e-15);
    }

    #[test]
    fn pullbacks_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for n in 1..=3 {
            let params = CouplingParams { n, ..PARAMS };
            let pt = random_interior(params.x, n, &mut rng);
            let z = random_global(n, &mut rng);
            let (v1, v2) = (random_tangent(2 * n, &mut rng), random_tangent(2 * n, &mut rng));
            assert!(dense_pullback_defect(&params, &pt, &v1, &v2, 1e-5).unwrap().abs() < 1e-6);
            assert!(global_pullback_defect(&params, &z, &v1, &v2, 1e-5).unwrap().abs() < 1e-5);
            assert!(local_pullback_defect(&params, &pt, &v1, &v2, 1e-5).unwrap().abs() < 1e-5);
        }
    }

    #[test]
    fn bracket_controls() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let params = CouplingParams { n: 2, ..PARAMS };
        let pt = random_interior(params.x, 2, &mut rng);
        let method = GradientMethod::FiniteDifference(1e-6);
        assert_eq!(poisson_commutativity(&params, &pt, &[(1, 1), (2, 2)], method).unwrap(), 0.0);
        // {h_1, cos q̂₁} = ∂h_1/∂p̂₁ · sin q̂₁ does not vanish
        let dh = hamiltonian_gradient(&params, &pt, 1, method).unwrap();
        let dc = [0.0, 0.0, -pt.q_hat[0].sin(), 0.0];
        assert!(canonical_bracket(&dh, &dc).abs() > 1e-3);
        assert_eq!(all_pairs(3), vec![(1, 2), (1, 3), (2, 3)]);
    }
}
