//! The main Hamiltonian in its two coordinate forms, the commuting family
//! generated by the Lax matrix, and the three limiting systems (Sutherland,
//! van Diejen, Schneider) with their convergence residuals.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::global::alpha_hat;
use crate::group::GroupPoint;
use crate::linalg::{block2, hermiticity_residual, ComplexMatrix, C64};
use crate::local::{alpha_matrix, alpha_with_derivatives, check_chamber, root, CouplingParams, GlobalPoint, LocalPoint};

/// `L = b_R† b_R`.
#[derive(Debug, Clone)]
pub struct LaxMatrix {
    pub l: ComplexMatrix,
}

impl LaxMatrix {
    /// The Lax matrix of a section point, where `b_R = [[e^{v}, −α], [0, e^{−v}]]`.
    pub fn from_alpha(v: f64, alpha: &ComplexMatrix) -> Self {
        let n = alpha.nrows();
        let id = ComplexMatrix::identity(n, n);
        let off = alpha.scale(-v.exp());
        let l = block2(
            &id.scale((2.0 * v).exp()),
            &off,
            &off.adjoint(),
            &(id.scale((-2.0 * v).exp()) + alpha.adjoint() * alpha),
        );
        Self { l }
    }

    pub fn from_group(k: &GroupPoint) -> Self {
        Self { l: k.b_r().adjoint() * k.b_r() }
    }

    /// `h_k = tr(Lᵏ) / 2k` for `k = 1..=count`.
    pub fn power_traces(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        let mut power = self.l.clone();
        for k in 1..=count {
            if k > 1 {
                power = &power * &self.l;
            }
            out.push(power.trace().re / (2.0 * k as f64));
        }
        out
    }

    pub fn h(&self, k: usize) -> f64 {
        self.power_traces(k)[k - 1]
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.l.clone().cholesky().is_some()
    }
}

fn check_k(params: &CouplingParams, k: usize) -> Result<()> {
    if k == 0 || k > params.n {
        Err(Error::InvalidInput(format!("k = {k} must lie in 1..={}", params.n)))
    } else {
        Ok(())
    }
}

pub fn lax(params: &CouplingParams, z: &GlobalPoint) -> Result<LaxMatrix> {
    Ok(LaxMatrix::from_alpha(params.v, &alpha_hat(params, &z.z)?))
}

pub fn lax_local(params: &CouplingParams, pt: &LocalPoint) -> Result<LaxMatrix> {
    Ok(LaxMatrix::from_alpha(params.v, &alpha_matrix(params, pt)?))
}

pub fn h_k(params: &CouplingParams, z: &GlobalPoint, k: usize) -> Result<f64> {
    check_k(params, k)?;
    Ok(lax(params, z)?.h(k))
}

pub fn h_k_local(params: &CouplingParams, pt: &LocalPoint, k: usize) -> Result<f64> {
    check_k(params, k)?;
    Ok(lax_local(params, pt)?.h(k))
}

/// `h_k` and its exact gradient `[∂/∂p̂, ∂/∂q̂]` in the local chart, from
/// `dh_k = ½ tr(Lᵏ⁻¹ dL) = −Re Σ (Lᵏ⁻¹ b_R†)_{n+b, a} dα_{ab}`.
pub fn h_k_gradient_local(params: &CouplingParams, pt: &LocalPoint, k: usize) -> Result<(f64, Vec<f64>)> {
    check_k(params, k)?;
    let n = params.n;
    let (alpha, dp, dq) = alpha_with_derivatives(params, pt)?;
    let lax = LaxMatrix::from_alpha(params.v, &alpha);
    let mut power = ComplexMatrix::identity(2 * n, 2 * n);
    for _ in 1..k {
        power = &power * &lax.l;
    }
    let value = (&power * &lax.l).trace().re / (2.0 * k as f64);
    let id = ComplexMatrix::identity(n, n);
    let b = block2(&id.scale(params.v.exp()), &(-&alpha), &ComplexMatrix::zeros(n, n), &id.scale((-params.v).exp()));
    let m = power * b.adjoint();
    let pair = |d: &ComplexMatrix| {
        let mut acc = 0.0;
        for a in 0..n {
            for c in 0..n {
                acc -= (m[(n + c, a)] * d[(a, c)]).re;
            }
        }
        acc
    };
    Ok((value, dp.iter().chain(&dq).map(pair).collect()))
}

/// The closed-form Hamiltonian evaluated as an expression, without
/// restricting `p̂` to the chamber; only the radicands are checked.
pub(crate) fn h_expression(x: f64, u: f64, v: f64, p: &[f64], q: &[f64]) -> Result<f64> {
    let n = p.len();
    let mut h = ((-2.0 * u).exp() + (2.0 * v).exp()) / 2.0 * p.iter().map(|pj| (-2.0 * pj).exp()).sum::<f64>();
    let sh2 = (x / 2.0).sinh().powi(2);
    for j in 0..n {
        // 1 − (1 + e^{2(v−u)}) e^{−2p} + e^{2(v−u)} e^{−4p}, factored
        let single = (-2.0 * p[j]).exp_m1() * (2.0 * (v - u) - 2.0 * p[j]).exp_m1();
        let mut f = root(single, "single-particle factor")?;
        for k in (0..n).filter(|&k| k != j) {
            f *= root(1.0 - sh2 / (p[j] - p[k]).sinh().powi(2), "pair factor")?;
        }
        h -= q[j].cos() * f;
    }
    Ok(h)
}

pub fn h_main(params: &CouplingParams, pt: &LocalPoint) -> Result<f64> {
    check_chamber(params.x, &pt.p_hat)?;
    h_expression(params.x, params.u, params.v, &pt.p_hat, &pt.q_hat)
}

fn check_bc_domain(q: &[f64]) -> Result<()> {
    match q.iter().position(|&qj| !(qj > 0.0 && qj < FRAC_PI_2)) {
        None => Ok(()),
        Some(j) => Err(Error::DomainViolation(format!("q[{j}] = {} outside (0, pi/2)", q[j]))),
    }
}

/// `exp(p̂_k) = sin q_k`, `q̂_k = p_k tan q_k`.
pub fn darboux_change(q: &[f64], p: &[f64]) -> Result<LocalPoint> {
    check_bc_domain(q)?;
    let p_hat = q.iter().map(|qj| qj.sin().ln()).collect();
    let q_hat = q.iter().zip(p).map(|(qj, pj)| pj * qj.tan()).collect();
    LocalPoint::new(p_hat, q_hat)
}

fn h_cal1_raw(x: f64, u: f64, v: f64, q: &[f64], p: &[f64]) -> Result<f64> {
    check_bc_domain(q)?;
    let n = q.len();
    let e = (2.0 * (v - u)).exp();
    let s2: Vec<f64> = q.iter().map(|qj| qj.sin().powi(2)).collect();
    let sh2 = (x / 2.0).sinh().powi(2);
    let mut h = ((-2.0 * u).exp() + (2.0 * v).exp()) / 2.0 * s2.iter().map(|s| 1.0 / s).sum::<f64>();
    for j in 0..n {
        // 1 − (1+E)/sin²q + 4E/(4 sin²q − sin²2q) = (1 − 1/sin²q)(1 − E/sin²q)
        let single = (1.0 - 1.0 / s2[j]) * (1.0 - e / s2[j]);
        let mut f = root(single, "single-particle factor")?;
        for k in (0..n).filter(|&k| k != j) {
            let d = ((q[j] - q[k]).sin() * (q[j] + q[k]).sin()).powi(2);
            f *= root(1.0 - 4.0 * sh2 * s2[j] * s2[k] / d, "pair factor")?;
        }
        h -= (p[j] * q[j].tan()).cos() * f;
    }
    Ok(h)
}

pub fn h_cal1(params: &CouplingParams, q: &[f64], p: &[f64]) -> Result<f64> {
    h_cal1_raw(params.x, params.u, params.v, q, p)
}

/// `𝓗₁(q, βp; βx, βu, βv)`.
pub fn h_beta(params: &CouplingParams, q: &[f64], p: &[f64], beta: f64) -> Result<f64> {
    let bp: Vec<f64> = p.iter().map(|pj| beta * pj).collect();
    h_cal1_raw(beta * params.x, beta * params.u, beta * params.v, q, &bp).map_err(|e| match e {
        Error::DomainViolation(msg) => Error::DomainViolation(format!("{msg} at beta = {beta}")),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SutherlandCouplings {
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl SutherlandCouplings {
    pub fn from_params(params: &CouplingParams) -> Self {
        let c = Self {
            gamma: params.x * params.x / 4.0,
            gamma1: 2.0 * params.u * params.v,
            gamma2: 2.0 * (params.v - params.u).powi(2),
        };
        debug_assert!(c.gamma2 > 0.0 && 4.0 * c.gamma1 + c.gamma2 > 0.0);
        c
    }
}

pub fn sutherland_h(c: &SutherlandCouplings, q: &[f64], p: &[f64]) -> f64 {
    let n = q.len();
    let mut h = 0.5 * p.iter().map(|pj| pj * pj).sum::<f64>();
    for j in 0..n {
        for k in j + 1..n {
            h += c.gamma / (q[j] - q[k]).sin().powi(2) + c.gamma / (q[j] + q[k]).sin().powi(2);
        }
        h += c.gamma1 / q[j].sin().powi(2) + c.gamma2 / (2.0 * q[j]).sin().powi(2);
    }
    h
}

/// `(𝓗_β − n)/β² − H_Suth`, which vanishes linearly in `β`.
pub fn sutherland_residual(params: &CouplingParams, q: &[f64], p: &[f64], beta: f64) -> Result<f64> {
    let hb = h_beta(params, q, p, beta)?;
    Ok((hb - q.len() as f64) / (beta * beta) - sutherland_h(&SutherlandCouplings::from_params(params), q, p))
}

/// The five couplings `μ, μ₀, μ₁, μ₀', μ₁'` of the van Diejen Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanDiejenCouplings {
    pub mu: C64,
    pub mu0: C64,
    pub mu1: C64,
    pub mu0p: C64,
    pub mu1p: C64,
}

impl VanDiejenCouplings {
    pub fn real(mu: [f64; 5]) -> Self {
        let c = |v: f64| C64::new(v, 0.0);
        Self { mu: c(mu[0]), mu0: c(mu[1]), mu1: c(mu[2]), mu0p: c(mu[3]), mu1p: c(mu[4]) }
    }

    /// Complexified couplings whose `R → ∞` limit reproduces the main
    /// Hamiltonian: `μ = ix/2`, `μ₀ = iR`, `μ₀' = i(u − v − R)`,
    /// `μ₁ = i(u + v) + π/2`, `μ₁' = π/2`.
    pub fn singular_limit(params: &CouplingParams, r: f64) -> Self {
        let i = C64::new(0.0, 1.0);
        Self {
            mu: i * (params.x / 2.0),
            mu0: i * r,
            mu0p: i * (params.u - params.v - r),
            mu1: i * (params.u + params.v) + FRAC_PI_2,
            mu1p: C64::new(FRAC_PI_2, 0.0),
        }
    }
}

const POLE_TOL: f64 = 1e-10;

fn guarded(d: C64) -> Result<C64> {
    if d.norm() < POLE_TOL {
        Err(Error::PoleProximity { value: d.norm() })
    } else {
        Ok(d)
    }
}

fn pot_v(c: &VanDiejenCouplings, z: C64) -> Result<C64> {
    Ok((c.mu + z).sin() / guarded(z.sin())?)
}

fn pot_w(c: &VanDiejenCouplings, z: C64) -> Result<C64> {
    let s = guarded(z.sin())?;
    let co = guarded(z.cos())?;
    Ok((c.mu0 + z).sin() / s * (c.mu1 + z).cos() / co * (c.mu0p + z).sin() / s * (c.mu1p + z).cos() / co)
}

/// `𝖵_{±j}` for every `j`.
fn vd_potentials(c: &VanDiejenCouplings, lam: &[C64]) -> Result<Vec<(C64, C64)>> {
    let n = lam.len();
    (0..n)
        .map(|j| {
            let mut plus = pot_w(c, lam[j])?;
            let mut minus = pot_w(c, -lam[j])?;
            for k in (0..n).filter(|&k| k != j) {
                plus *= pot_v(c, lam[j] + lam[k])? * pot_v(c, lam[j] - lam[k])?;
                minus *= pot_v(c, -lam[j] + lam[k])? * pot_v(c, -lam[j] - lam[k])?;
            }
            Ok((plus, minus))
        })
        .collect()
}

/// The van Diejen Hamiltonian at complex arguments. The half powers
/// `𝖵_j^{1/2} 𝖵_{−j}^{1/2}` are taken as the root of the product on the
/// branch with non-negative real part, which is the branch continuous with
/// the positive large-`R` limit.
pub fn vdiejen_h_complex(c: &VanDiejenCouplings, lam: &[C64], th: &[C64]) -> Result<C64> {
    let pots = vd_potentials(c, lam)?;
    let mut h = C64::new(0.0, 0.0);
    for (j, (plus, minus)) in pots.iter().enumerate() {
        let mut s = (plus * minus).sqrt();
        if s.re < 0.0 {
            s = -s;
        }
        h += th[j].cosh() * s - (plus + minus) / 2.0;
    }
    Ok(h)
}

pub fn vdiejen_h(mu: [f64; 5], lam: &[f64], th: &[f64]) -> Result<f64> {
    let c = VanDiejenCouplings::real(mu);
    let lam: Vec<C64> = lam.iter().map(|l| C64::new(*l, 0.0)).collect();
    let th: Vec<C64> = th.iter().map(|t| C64::new(*t, 0.0)).collect();
    real_part(vdiejen_h_complex(&c, &lam, &th)?)
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > 1e-9 * z.re.abs().max(1.0) {
        Err(Error::NonReal { imag: z.im })
    } else {
        Ok(z.re)
    }
}

/// `Σ_j cosh((j−1)x + 2u)`, the constant separating the two Hamiltonians in the limit.
pub fn limit_shift(params: &CouplingParams) -> f64 {
    (0..params.n).map(|j| (j as f64 * params.x + 2.0 * params.u).cosh()).sum()
}

/// `H_vD(λ = i(p̂ + R), θ = i q̂) + H(p̂, q̂) − shift`, which decays as `R → ∞`.
pub fn vdiejen_residual(params: &CouplingParams, pt: &LocalPoint, r: f64) -> Result<f64> {
    let c = VanDiejenCouplings::singular_limit(params, r);
    let i = C64::new(0.0, 1.0);
    let lam: Vec<C64> = pt.p_hat.iter().map(|p| i * (p + r)).collect();
    let th: Vec<C64> = pt.q_hat.iter().map(|q| i * q).collect();
    let hvd = real_part(vdiejen_h_complex(&c, &lam, &th)?)?;
    Ok(hvd + h_main(params, pt)? - limit_shift(params))
}

pub fn schneider_h(q: &[f64], p: &[f64], x: f64, u: f64) -> Result<f64> {
    let n = q.len();
    let sh2 = (x / 2.0).sinh().powi(2);
    let mut h = (-2.0 * u).exp() / 2.0 * q.iter().map(|qj| (2.0 * qj).exp()).sum::<f64>();
    for j in 0..n {
        let mut f = 1.0;
        for k in (0..n).filter(|&k| k != j) {
            f *= root(1.0 - sh2 / (q[j] - q[k]).sinh().powi(2), "pair factor")?;
        }
        h -= p[j].cos() * f;
    }
    Ok(h)
}

/// `H(p̂ = σ − Q, q̂ = −P; x, u − σ, v − σ) − H_Sch(Q, P)`, which decays as `σ → ∞`.
///
/// The shifted point leaves the chamber, so the closed-form expression is
/// evaluated directly; it stays real once `σ − Q_j > v − u` for all `j`.
pub fn schneider_residual(params: &CouplingParams, q: &[f64], p: &[f64], sigma: f64) -> Result<f64> {
    let p_hat: Vec<f64> = q.iter().map(|qj| sigma - qj).collect();
    let q_hat: Vec<f64> = p.iter().map(|pj| -pj).collect();
    let h = h_expression(params.x, params.u - sigma, params.v - sigma, &p_hat, &q_hat)?;
    Ok(h - schneider_h(q, p, params.x, params.u)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::global::K_global;
    use crate::local::{z_of_local, K_local};
    use crate::sampling::{random_global, random_interior, DEFAULT_PARAMS as PARAMS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_particle_reduction() {
        let params = CouplingParams { n: 1, ..PARAMS };
        let (p, q) = (-0.7f64, 0.9f64);
        let h = h_main(&params, &LocalPoint::new(vec![p], vec![q]).unwrap()).unwrap();
        let e = (2.0 * (params.v - params.u)).exp();
        let expected = ((-2.0 * params.u).exp() + (2.0 * params.v).exp()) / 2.0 * (-2.0 * p).exp()
            - q.cos() * (1.0 - (1.0 + e) * (-2.0 * p).exp() + e * (-4.0 * p).exp()).sqrt();
        assert!((h - expected).abs() < 1e-13);
    }

    #[test]
    fn trace_of_lax_matrix_is_main_hamiltonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 1..=3 {
            for x in [0.8, -0.8] {
                let params = CouplingParams { n, x, ..PARAMS };
                for _ in 0..10 {
                    let pt = random_interior(x, n, &mut rng);
                    let h = h_main(&params, &pt).unwrap();
                    let from_group = LaxMatrix::from_group(&K_local(&params, &pt).unwrap()).h(1);
                    let from_alpha = h_k_local(&params, &pt, 1).unwrap();
                    let z = z_of_local(&params, &pt).unwrap();
                    let global = h_k(&params, &z, 1).unwrap();
                    for other in [from_group, from_alpha, global] {
                        assert!((h - other).abs() < 1e-10 * h.abs().max(1.0));
                    }
                    let mirrored = LocalPoint::new(pt.p_hat.clone(), pt.q_hat.iter().map(|q| -q).collect()).unwrap();
                    assert!((h_main(&params, &mirrored).unwrap() - h).abs() < 1e-13 * h.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn exact_local_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for n in 1..=3 {
            for x in [0.8, -0.8] {
                let params = CouplingParams { n, x, ..PARAMS };
                for _ in 0..5 {
                    let pt = random_interior(x, n, &mut rng);
                    for k in 1..=n {
                        let (value, grad) = h_k_gradient_local(&params, &pt, k).unwrap();
                        assert!((value - h_k_local(&params, &pt, k).unwrap()).abs() < 1e-12 * value.abs().max(1.0));
                        let y = pt.to_vec();
                        let f = |y: &[f64]| h_k_local(&params, &LocalPoint::from_slice(y).unwrap(), k);
                        let fd = crate::dynamics::fd::try_gradient(f, &y, 1e-4, crate::dynamics::fd::Stencil::Central4).unwrap();
                        for (a, b) in grad.iter().zip(&fd) {
                            assert!((a - b).abs() < 1e-7 * value.abs().max(1.0), "n = {n}, k = {k}: {a} vs {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lax_matrix_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let params = CouplingParams { n: 3, ..PARAMS };
        for _ in 0..10 {
            let z = random_global(3, &mut rng);
            let l = lax(&params, &z).unwrap();
            let from_group = LaxMatrix::from_group(&K_global(&params, &z).unwrap());
            assert!((&l.l - &from_group.l).norm() < 1e-10 * l.l.norm());
            let top = l.l.view((0, 0), (3, 3)).into_owned();
            assert!((top - ComplexMatrix::identity(3, 3).scale((2.0 * params.v).exp())).norm() < 1e-14);
            assert!(l.hermiticity_residual() < 1e-12 && l.is_positive_definite());
            let mut power = l.l.clone();
            for k in 1..=3 {
                if k > 1 {
                    power = &power * &l.l;
                }
                assert!(power.trace().im.abs() < 1e-12 * power.trace().re.abs());
            }
        }
    }

    #[test]
    fn darboux_form_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for n in 1..=3 {
            let params = CouplingParams { n, ..PARAMS };
            for _ in 0..20 {
                let pt = random_interior(params.x, n, &mut rng);
                let q: Vec<f64> = pt.p_hat.iter().map(|p| p.exp().asin()).collect();
                let p: Vec<f64> = q.iter().zip(&pt.q_hat).map(|(qj, qh)| qh / qj.tan()).collect();
                let a = h_cal1(&params, &q, &p).unwrap();
                let b = h_main(&params, &darboux_change(&q, &p).unwrap()).unwrap();
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
                let neg: (Vec<f64>, Vec<f64>) = (q.iter().map(|v| -v).collect(), p.iter().map(|v| -v).collect());
                let flipped = h_cal1_weyl(&params, &neg.0, &neg.1);
                assert!((flipped - a).abs() < 1e-12 * a.abs().max(1.0));
            }
        }
        assert!(darboux_change(&[FRAC_PI_2], &[1.0]).is_err());
    }

    /// `𝓗₁` evaluated off the chart domain through its defining expression,
    /// to probe the reflection symmetry.
    fn h_cal1_weyl(params: &CouplingParams, q: &[f64], p: &[f64]) -> f64 {
        let (x, u, v) = (params.x, params.u, params.v);
        let e = (2.0 * (v - u)).exp();
        let sh2 = (x / 2.0).sinh().powi(2);
        let n = q.len();
        let mut h = ((-2.0 * u).exp() + (2.0 * v).exp()) / 2.0 * q.iter().map(|qj| 1.0 / qj.sin().powi(2)).sum::<f64>();
        for j in 0..n {
            let s2 = q[j].sin().powi(2);
            let mut f = (1.0 - (1.0 + e) / s2 + 4.0 * e / (4.0 * s2 - (2.0 * q[j]).sin().powi(2))).sqrt();
            for k in (0..n).filter(|&k| k != j) {
                let d = ((q[j] - q[k]).sin() * (q[j] + q[k]).sin()).powi(2);
                f *= (1.0 - 4.0 * sh2 * s2 * q[k].sin().powi(2) / d).sqrt();
            }
            h -= (p[j] * q[j].tan()).cos() * f;
        }
        h
    }

    #[test]
    fn sutherland_couplings_and_convergence() {
        let c = SutherlandCouplings::from_params(&PARAMS);
        assert!((c.gamma - 0.25).abs() < 1e-15 && (c.gamma1 + 0.3).abs() < 1e-15 && (c.gamma2 - 1.28).abs() < 1e-14);
        let q = [1.2, 0.7, 0.3];
        let p = [0.4, -0.9, 0.6];
        for n in 1..=3 {
            let params = CouplingParams { n, ..PARAMS };
            let r1 = sutherland_residual(&params, &q[..n], &p[..n], 1e-2).unwrap();
            let r2 = sutherland_residual(&params, &q[..n], &p[..n], 5e-3).unwrap();
            let ratio = r1 / r2;
            assert!((1.6..=2.4).contains(&ratio), "n = {n}: ratio {ratio}");
        }
    }

    #[test]
    fn van_diejen_potentials_have_limits() {
        let params = CouplingParams { n: 2, ..PARAMS };
        let r = 20.0;
        let c = VanDiejenCouplings::singular_limit(&params, r);
        let i = C64::new(0.0, 1.0);
        let p = [-0.3, -1.4];
        let lam: Vec<C64> = p.iter().map(|pj| i * (pj + r)).collect();
        let g = params.x;
        for sign in [1.0, -1.0] {
            let sum = pot_v(&c, (lam[0] + lam[1]) * sign).unwrap();
            assert!((sum - (sign * g / 2.0).exp()).norm() < 1e-7);
            let diff = pot_v(&c, (lam[0] - lam[1]) * sign).unwrap();
            let d = p[0] - p[1];
            assert!((diff - (sign * g / 2.0 + d).sinh() / d.sinh()).norm() < 1e-7);
        }
    }

    #[test]
    fn van_diejen_residual_decays() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for n in 1..=3 {
            let params = CouplingParams { n, ..PARAMS };
            let pt = random_interior(params.x, n, &mut rng);
            let r5 = vdiejen_residual(&params, &pt, 5.0).unwrap().abs();
            let r10 = vdiejen_residual(&params, &pt, 10.0).unwrap().abs();
            let r15 = vdiejen_residual(&params, &pt, 15.0).unwrap().abs();
            assert!(r5 > r10 && r10 > 50.0 * r15, "{r5:e} {r10:e} {r15:e}");
        }
    }

    #[test]
    fn van_diejen_real_arguments_and_poles() {
        let h = vdiejen_h([0.05, 0.04, 0.03, 0.02, 0.01], &[0.7, 0.4], &[0.2, -0.3]).unwrap();
        assert!(h.is_finite());
        assert!(matches!(vdiejen_h([0.3, 0.2, 0.1, 0.4, 0.5], &[0.0], &[0.2]), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn schneider_examples() {
        let h = schneider_h(&[0.4], &[0.0], 1.0, -0.3).unwrap();
        assert!((h - ((0.6f64).exp() / 2.0 * (0.8f64).exp() - 1.0)).abs() < 1e-14);
        let far = schneider_h(&[40.0, 0.0], &[0.3, 1.0], 1.0, -0.3).unwrap();
        let decoupled = (0.6f64).exp() / 2.0 * ((80.0f64).exp() + 1.0) - 0.3f64.cos() - 1.0f64.cos();
        assert!((far - decoupled).abs() < 1e-12 * decoupled);
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for n in 1..=3 {
            let params = CouplingParams { n, ..PARAMS };
            let mut q = vec![rng.gen_range(-0.5..0.5)];
            for j in 1..n {
                q.push(q[j - 1] + params.x.abs() / 2.0 + rng.gen_range(0.1..0.6));
            }
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let r: Vec<f64> = [3.0, 6.0, 9.0].iter().map(|s| schneider_residual(&params, &q, &p, *s).unwrap().abs()).collect();
            assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
        }
    }
}
