//! The global section over `M̂_c = ℂ^{n−1} × D`.
//!
//! Every function here is smooth in `z`, including where components of `z`
//! vanish; on the dense locus `Π z_j ≠ 0` the objects are gauge transforms of
//! their local counterparts. Indices are 0-based.
//!
//! Conventions fixed by the gauge identities (and checked in the tests):
//! for `x < 0` the matrix `θ̂(x, z)` is the transpose of `θ̂(−x, z)`, and
//! `α̂` is built with `θ̂(x, z)†`.

use crate::error::{Error, Result};
use crate::group::GroupPoint;
use crate::local::{
    alpha_matrix, check_chamber, kappa_matrix, p_hat_from_z, pivot, r_vector_unchecked, root,
    section_matrix, theta_matrix, triangular_factor, z_of_local, zeta_matrix, CouplingParams,
    GlobalPoint, LocalPoint,
};
use crate::linalg::{block2, complexify, diag_complex, diag_real, ComplexMatrix, C64, IM};

/// Smooth `Q_jk(x, z)`; for `j > k` this is `Q_kj(−x, z)`.
pub fn q_factor(x: f64, z: &[C64], j: usize, k: usize) -> f64 {
    assert!(j != k, "q_factor needs distinct indices");
    if j > k {
        return q_factor(-x, z, k, j);
    }
    let s: f64 = z[j..k].iter().map(|c| c.norm_sqr()).sum();
    let m = (k - j) as f64 * x.abs() / 2.0;
    ((s + m - x / 2.0).sinh() / (s + m).sinh()).max(0.0).sqrt()
}

/// `J(y) = √(sinh y / y)`, `J(0) = 1`.
pub fn j_factor(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        let y2 = y * y;
        1.0 + y2 / 12.0 + y2 * y2 / 1440.0 + y2 * y2 * y2 / 24192.0
    } else {
        (y.sinh() / y).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct GlobalSectionData {
    pub zeta_hat: ComplexMatrix,
    pub theta_hat: ComplexMatrix,
    pub gamma_hat: Vec<C64>,
    pub alpha_hat: ComplexMatrix,
    pub p_hat: Vec<f64>,
}

fn check_x(x: f64) -> Result<()> {
    if x == 0.0 {
        Err(Error::ZeroDeformation)
    } else {
        Ok(())
    }
}

pub fn zeta_hat(x: f64, z: &[C64]) -> Result<ComplexMatrix> {
    check_x(x)?;
    let n = z.len();
    let a = pivot(x, n);
    let p = p_hat_from_z(x, z);
    let pre = ((x / 2.0).sinh() / (n as f64 * x / 2.0).sinh()).sqrt();
    let mut col = vec![C64::new(0.0, 0.0); n];
    col[a] = C64::new(r_vector_unchecked(x, &p)?[a], 0.0);
    for j in (0..n).filter(|&j| j != a) {
        // the component of z attached to column entry j, and the two
        // indices excluded from the Q product
        let (w, skip) = if x > 0.0 { (z[j], j + 1) } else { (z[j - 1].conj(), j - 1) };
        let y = w.norm_sqr();
        let mut prod = 1.0;
        for l in (0..n).filter(|&l| l != j && l != skip) {
            prod *= q_factor(x, z, j, l);
        }
        col[j] = w * (pre * j_factor(y) / (y + x.abs() / 2.0).sinh().sqrt() * prod);
    }
    Ok(crate::local::householder(&col, a))
}

pub fn theta_hat(x: f64, z: &[C64]) -> Result<ComplexMatrix> {
    check_x(x)?;
    if x < 0.0 {
        return Ok(theta_hat(-x, z)?.transpose());
    }
    let n = z.len();
    let a2: Vec<f64> = z.iter().map(|c| c.norm_sqr()).collect();
    let zp = zeta_hat(x, z)?;
    let zm = zeta_hat(-x, z)?;
    let mut t = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if k == j + 1 {
                let mut prod = 1.0;
                for l in (0..n).filter(|&l| l != j && l != j + 1) {
                    prod *= q_factor(x, z, j, l) * q_factor(-x, z, j + 1, l);
                }
                t[(j, k)] = C64::new(-(x / 2.0).sinh() / (a2[j] + x / 2.0).sinh() * prod, 0.0);
            } else {
                let (lo, hi) = (j.min(k), j.max(k));
                let s: f64 = a2[lo..hi].iter().sum();
                let gap = (k as f64 - j as f64 - 1.0).abs();
                let sign = if k > j + 1 { 1.0 } else { -1.0 };
                let denom = (s + gap * x / 2.0).sinh();
                t[(j, k)] = zp[(j, n - 1)] * zm[(k, 0)] * (-(n as f64 * x / 2.0).sinh() * sign / denom);
            }
        }
    }
    Ok(t)
}

pub fn gamma_hat(x: f64, z: &[C64]) -> Result<Vec<C64>> {
    check_x(x)?;
    let n = z.len();
    let zn2 = z[n - 1].norm_sqr();
    let p = p_hat_from_z(x, z);
    let mut g = Vec::with_capacity(n);
    g.push(z[n - 1] * (2.0 - zn2).sqrt());
    for pj in &p[1..] {
        g.push(C64::new(root(-(2.0 * pj).exp_m1(), "gamma_hat")?, 0.0));
    }
    Ok(g)
}

fn check_disk(z: &[C64]) -> Result<()> {
    GlobalPoint::new(z.to_vec()).map(|_| ())
}

pub fn alpha_hat(params: &CouplingParams, z: &[C64]) -> Result<ComplexMatrix> {
    check_disk(z)?;
    let CouplingParams { x, u, v, .. } = *params;
    let p = p_hat_from_z(x, z);
    let theta_dag = theta_hat(x, z)?.adjoint();
    let gamma = gamma_hat(x, z)?;
    let n = z.len();
    let mut a = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let rad = (-2.0 * u - 2.0 * p[j]).exp() - (-2.0 * v).exp();
        if !(rad > 0.0) {
            return Err(Error::CouplingViolation(format!(
                "e^(-2u-2p) - e^(-2v) = {rad:.3e} is not positive"
            )));
        }
        let s = rad.sqrt();
        for k in 0..n {
            a[(j, k)] = theta_dag[(j, k)] * s;
        }
        a[(j, j)] -= gamma[j].conj() * (v - p[j]).exp();
    }
    Ok(a * -IM)
}

pub fn section_data(params: &CouplingParams, z: &GlobalPoint) -> Result<GlobalSectionData> {
    let x = params.x;
    Ok(GlobalSectionData {
        zeta_hat: zeta_hat(x, &z.z)?,
        theta_hat: theta_hat(x, &z.z)?,
        gamma_hat: gamma_hat(x, &z.z)?,
        alpha_hat: alpha_hat(params, &z.z)?,
        p_hat: p_hat_from_z(x, &z.z),
    })
}

/// Diagonal entries of `(τ, τ̃)` built from the angles `q̂`.
pub fn tau_factors(x: f64, q_hat: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let n = q_hat.len();
    let one = C64::new(1.0, 0.0);
    let tail = |j: usize| -> f64 { q_hat[j..].iter().sum() };
    if x > 0.0 {
        let t: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, tail(j))).collect();
        let tau = t[1..].iter().cloned().chain([one]).collect();
        let tau_tilde = [one].into_iter().chain(t[1..].iter().cloned()).collect();
        (tau, tau_tilde)
    } else {
        let t: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, q_hat[j] - tail(j))).collect();
        let tau = [one].into_iter().chain(t[..n - 1].iter().cloned()).collect();
        let tau_tilde = t[..n - 1].iter().cloned().chain([one]).collect();
        (tau, tau_tilde)
    }
}

pub fn global_section_matrix(params: &CouplingParams, z: &GlobalPoint) -> Result<ComplexMatrix> {
    let n = z.n();
    let data = section_data(params, z)?;
    let rho = complexify(&kappa_matrix(params.x, n)?) * data.zeta_hat.adjoint();
    let zero = ComplexMatrix::zeros(n, n);
    let left = block2(&rho, &zero, &zero, &ComplexMatrix::identity(n, n));
    let gamma = diag_complex(&data.gamma_hat);
    let s: Vec<C64> = data.p_hat.iter().map(|p| IM * p.exp()).collect();
    let s = diag_complex(&s);
    let middle = block2(&gamma, &s, &s, &gamma.adjoint());
    Ok(left * middle * triangular_factor(params.v, &data.alpha_hat))
}

#[allow(non_snake_case)]
pub fn K_global(params: &CouplingParams, z: &GlobalPoint) -> Result<GroupPoint> {
    GroupPoint::new(global_section_matrix(params, z)?)
}

/// The gauge pair `(η_L, η_R)` with `K̂(z(p̂, q̂)) = η_L K(p̂, q̂) η_R⁻¹`.
pub fn gauge_pair(params: &CouplingParams, pt: &LocalPoint) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_chamber(params.x, &pt.p_hat)?;
    let n = pt.n();
    let (tau, tau_tilde) = tau_factors(params.x, &pt.q_hat);
    let kappa = complexify(&kappa_matrix(params.x, n)?);
    let rotated = &kappa * diag_complex(&tau) * kappa.transpose();
    let phases: Vec<C64> = (0..n).map(|j| tau_tilde[j] * C64::from_polar(1.0, -pt.q_hat[j])).collect();
    let phases = diag_complex(&phases);
    let zero = ComplexMatrix::zeros(n, n);
    let eta_l = block2(&rotated, &zero, &zero, &phases);
    let eta_r = block2(&phases, &zero, &zero, &diag_complex(&tau));
    Ok((eta_l, eta_r))
}

fn inv_diag(d: &[C64]) -> ComplexMatrix {
    diag_complex(&d.iter().map(|c| c.inv()).collect::<Vec<_>>())
}

/// Frobenius residuals of the five gauge relations between the local and
/// global objects at `z(p̂, q̂)`, in the order `ζ̂`, `θ̂`, `γ̂`, `α̂`, `K̂`.
pub fn gauge_residuals(params: &CouplingParams, pt: &LocalPoint) -> Result<[f64; 5]> {
    let x = params.x;
    let z = z_of_local(params, pt)?;
    let (t, tt) = tau_factors(x, &pt.q_hat);
    let (td, ttd) = (diag_complex(&t), diag_complex(&tt));
    let zeta = complexify(&zeta_matrix(x, &pt.p_hat)?);
    let e1 = (zeta_hat(x, &z.z)? - &td * zeta * inv_diag(&t)).norm();
    let theta = complexify(&theta_matrix(x, &pt.p_hat)?);
    let e2 = (theta_hat(x, &z.z)? - &td * theta * inv_diag(&tt)).norm();
    let eq: Vec<C64> = pt.q_hat.iter().map(|q| C64::from_polar(1.0, *q)).collect();
    let c: Vec<f64> = pt.p_hat.iter().map(|p| (-(2.0 * p).exp_m1()).sqrt()).collect();
    let g3 = diag_complex(&eq) * &td * inv_diag(&tt) * diag_real(&c);
    let e3 = (diag_complex(&gamma_hat(x, &z.z)?) - g3).norm();
    let a4 = inv_diag(&eq) * &ttd * alpha_matrix(params, pt)? * inv_diag(&t);
    let e4 = (alpha_hat(params, &z.z)? - a4).norm();
    let (eta_l, eta_r) = gauge_pair(params, pt)?;
    let kl = section_matrix(params, pt)?;
    let kg = global_section_matrix(params, &z)?;
    let eta_r_inv = eta_r.try_inverse().ok_or(Error::NonInvertible { cond: f64::INFINITY })?;
    let e5 = (kg - eta_l * kl * eta_r_inv).norm();
    Ok([e1, e2, e3, e4, e5])
}
