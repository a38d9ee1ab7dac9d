//! Building blocks of the local Darboux section over `C̄_x × T_n`.
//!
//! Indices are 0-based throughout. Square roots are taken on the
//! non-negative branch; radicands within `RADICAND_SLACK` below zero are
//! treated as roundoff at a chamber wall and clamped.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupPoint;
use crate::linalg::{block2, complexify, diag_complex, diag_real, ComplexMatrix, RealMatrix, C64, IM};

pub(crate) const RADICAND_SLACK: f64 = 1e-14;
pub(crate) const CHAMBER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub n: usize,
    pub x: f64,
    pub u: f64,
    pub v: f64,
}

impl CouplingParams {
    pub fn new(n: usize, x: f64, u: f64, v: f64) -> Result<Self> {
        let p = Self { n, x, u, v };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("the particle number n must be at least 1".into()));
        }
        if !(self.x.is_finite() && self.u.is_finite() && self.v.is_finite()) {
            return Err(Error::InvalidInput("couplings must be finite".into()));
        }
        if self.x == 0.0 {
            return Err(Error::ZeroDeformation);
        }
        if !(self.u < self.v) {
            return Err(Error::CouplingViolation(format!(
                "need u < v, v != -u and x != 0; got u = {}, v = {}",
                self.u, self.v
            )));
        }
        if self.u + self.v == 0.0 {
            return Err(Error::CouplingViolation(format!(
                "need u < v, v != -u and x != 0; got v = -u = {}",
                self.v
            )));
        }
        Ok(())
    }
}

/// A point `(p̂, q̂)` of the local chart; angles are kept in `(−π, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPoint {
    pub p_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
}

impl LocalPoint {
    pub fn new(p_hat: Vec<f64>, q_hat: Vec<f64>) -> Result<Self> {
        if p_hat.len() != q_hat.len() || p_hat.is_empty() {
            return Err(Error::InvalidInput("p_hat and q_hat must have equal, nonzero length".into()));
        }
        let q_hat = q_hat.into_iter().map(wrap_angle).collect();
        Ok(Self { p_hat, q_hat })
    }

    pub fn n(&self) -> usize {
        self.p_hat.len()
    }

    /// Coordinates packed as `[p̂₁..p̂ₙ, q̂₁..q̂ₙ]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.p_hat.iter().chain(&self.q_hat).cloned().collect()
    }

    pub fn from_slice(y: &[f64]) -> Result<Self> {
        let n = y.len() / 2;
        Self::new(y[..n].to_vec(), y[n..].to_vec())
    }
}

/// A point `z ∈ ℂ^{n−1} × D` of the global model.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPoint {
    pub z: Vec<C64>,
}

impl GlobalPoint {
    pub fn new(z: Vec<C64>) -> Result<Self> {
        match z.last() {
            None => Err(Error::InvalidInput("z must be non-empty".into())),
            Some(last) if !(last.norm() < 1.0) => Err(Error::DomainViolation(format!(
                "|z_n| = {} must be below 1",
                last.norm()
            ))),
            _ => Ok(Self { z }),
        }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// Coordinates packed as `[Re z₁..Re zₙ, Im z₁..Im zₙ]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.z.iter().map(|c| c.re).chain(self.z.iter().map(|c| c.im)).collect()
    }

    pub fn from_slice(y: &[f64]) -> Result<Self> {
        let n = y.len() / 2;
        Self::new((0..n).map(|j| C64::new(y[j], y[n + j])).collect())
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

pub(crate) fn root(value: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value.sqrt())
    } else if value >= -RADICAND_SLACK {
        Ok(0.0)
    } else {
        Err(Error::DomainViolation(format!("negative radicand {value:.3e} in {what}")))
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Pivot index of `ζ` and `κ`: the last index for `x > 0`, the first for `x < 0`.
pub fn pivot(x: f64, n: usize) -> usize {
    if x > 0.0 {
        n - 1
    } else {
        0
    }
}

/// Distances of `p̂` to the walls `p̂₁ = 0` and `p̂_k − p̂_{k+1} = |x|/2`.
pub fn wall_distances(x: f64, p_hat: &[f64]) -> Vec<f64> {
    let mut d = Vec::with_capacity(p_hat.len());
    d.push(-p_hat[0]);
    for w in p_hat.windows(2) {
        d.push(w[0] - w[1] - x.abs() / 2.0);
    }
    d
}

pub fn in_closed_chamber(x: f64, p_hat: &[f64], tol: f64) -> bool {
    wall_distances(x, p_hat).iter().all(|&d| d >= -tol)
}

pub(crate) fn check_chamber(x: f64, p_hat: &[f64]) -> Result<()> {
    if p_hat.is_empty() {
        return Err(Error::InvalidInput("empty position vector".into()));
    }
    if x == 0.0 {
        return Err(Error::ZeroDeformation);
    }
    let d = wall_distances(x, p_hat);
    match d.iter().position(|&w| !(w >= -CHAMBER_SLACK)) {
        None => Ok(()),
        Some(0) => Err(Error::DomainViolation(format!("p_hat[0] = {} > 0", p_hat[0]))),
        Some(k) => Err(Error::DomainViolation(format!(
            "gap p_hat[{}] - p_hat[{}] = {} below |x|/2 = {}",
            k - 1,
            k,
            p_hat[k - 1] - p_hat[k],
            x.abs() / 2.0
        ))),
    }
}

pub fn nu_matrix(x: f64, n: usize) -> RealMatrix {
    RealMatrix::from_fn(n, n, |j, k| {
        if j == k {
            1.0
        } else if j < k {
            -(-x).exp_m1() * ((k - j) as f64 * x / 2.0).exp()
        } else {
            0.0
        }
    })
}

pub fn v_vector(x: f64, n: usize) -> Result<DVector<f64>> {
    if x == 0.0 {
        return Err(Error::ZeroDeformation);
    }
    let pre = (n as f64 * x.exp_m1() / -(-(n as f64) * x).exp_m1()).sqrt();
    Ok(DVector::from_fn(n, |j, _| pre * (-((j + 1) as f64) * x / 2.0).exp()))
}

pub fn v_hat(x: f64, n: usize) -> Result<DVector<f64>> {
    let v = v_vector(x, n)?;
    let scale = (sgn(x) * (-x).exp() * (n as f64 * x).exp_m1() / n as f64).sqrt();
    Ok(v * scale)
}

fn check_distinct(p_hat: &[f64]) -> Result<()> {
    for j in 0..p_hat.len() {
        for k in j + 1..p_hat.len() {
            if p_hat[j] == p_hat[k] {
                return Err(Error::CoincidentComponents { j, k });
            }
        }
    }
    Ok(())
}

pub fn r_vector(x: f64, p_hat: &[f64]) -> Result<Vec<f64>> {
    check_chamber(x, p_hat)?;
    Ok(r_vector_unchecked(x, p_hat)?)
}

pub(crate) fn r_vector_unchecked(x: f64, p_hat: &[f64]) -> Result<Vec<f64>> {
    check_distinct(p_hat)?;
    let n = p_hat.len();
    let pre = if n == 1 { 1.0 } else { (-x).exp_m1() / (-(n as f64) * x).exp_m1() };
    (0..n)
        .map(|j| {
            let mut prod = pre;
            for k in (0..n).filter(|&k| k != j) {
                let d = 2.0 * (p_hat[j] - p_hat[k]);
                prod *= (d - x).exp_m1() / d.exp_m1();
            }
            root(prod, "r")
        })
        .collect()
}

pub fn theta_matrix(x: f64, p_hat: &[f64]) -> Result<RealMatrix> {
    check_chamber(x, p_hat)?;
    theta_unchecked(x, p_hat)
}

pub(crate) fn theta_unchecked(x: f64, p: &[f64]) -> Result<RealMatrix> {
    check_distinct(p)?;
    let n = p.len();
    let h = x / 2.0;
    let mut t = RealMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if j == k {
                let mut prod = 1.0;
                for m in (0..n).filter(|&m| m != j) {
                    let d = p[j] - p[m];
                    prod *= (d - h).sinh() * (d + h).sinh() / d.sinh().powi(2);
                }
                t[(j, j)] = root(prod, "theta diagonal")?;
            } else {
                let mut prod = 1.0;
                for m in (0..n).filter(|&m| m != j && m != k) {
                    prod *= (p[j] - p[m] - h).sinh() * (p[k] - p[m] + h).sinh()
                        / ((p[j] - p[m]).sinh() * (p[k] - p[m]).sinh());
                }
                t[(j, k)] = h.sinh() / (p[k] - p[j]).sinh() * root(prod, "theta off-diagonal")?;
            }
        }
    }
    Ok(t)
}

/// `θ(x, p̂)` together with `∂θ/∂p̂_m` for every `m`, through the
/// logarithmic derivatives of its product formula; valid where no entry
/// vanishes, i.e. off the walls.
pub(crate) fn theta_with_derivatives(x: f64, p: &[f64]) -> Result<(RealMatrix, Vec<RealMatrix>)> {
    let t = theta_unchecked(x, p)?;
    let n = p.len();
    let h = x / 2.0;
    let coth = |a: f64| 1.0 / a.tanh();
    let mut dt = vec![RealMatrix::zeros(n, n); n];
    for j in 0..n {
        for k in 0..n {
            if t[(j, k)] == 0.0 {
                return Err(Error::DomainViolation(format!("theta[{j}][{k}] vanishes")));
            }
            // dlog θ_jk = Σ_m c_m dp_m
            let mut c = vec![0.0; n];
            if j == k {
                for m in (0..n).filter(|&m| m != j) {
                    let d = p[j] - p[m];
                    let g = 0.5 * (coth(d - h) + coth(d + h)) - coth(d);
                    c[j] += g;
                    c[m] -= g;
                }
            } else {
                let g = coth(p[k] - p[j]);
                c[k] -= g;
                c[j] += g;
                for m in (0..n).filter(|&m| m != j && m != k) {
                    let a = 0.5 * (coth(p[j] - p[m] - h) - coth(p[j] - p[m]));
                    let b = 0.5 * (coth(p[k] - p[m] + h) - coth(p[k] - p[m]));
                    c[j] += a;
                    c[k] += b;
                    c[m] -= a + b;
                }
            }
            for m in 0..n {
                dt[m][(j, k)] = t[(j, k)] * c[m];
            }
        }
    }
    Ok((t, dt))
}

/// The orthogonal matrix whose pivot column is `w` (a unit vector with
/// `w[a] > −1`), completed by a reflection-type formula.
pub(crate) fn householder<T>(w: &[T], a: usize) -> nalgebra::DMatrix<T>
where
    T: nalgebra::ComplexField + Copy,
{
    let n = w.len();
    let one = T::one();
    nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i == a && j == a {
            w[a]
        } else if j == a {
            w[i]
        } else if i == a {
            -w[j].conjugate()
        } else {
            let delta = if i == j { one } else { T::zero() };
            delta - w[i] * w[j].conjugate() / (one + w[a])
        }
    })
}

pub fn zeta_matrix(x: f64, p_hat: &[f64]) -> Result<RealMatrix> {
    let r = r_vector(x, p_hat)?;
    Ok(householder(&r, pivot(x, p_hat.len())))
}

pub fn kappa_matrix(x: f64, n: usize) -> Result<RealMatrix> {
    let v = v_vector(x, n)?;
    let w: Vec<f64> = v.iter().map(|c| c / (n as f64).sqrt()).collect();
    Ok(householder(&w, pivot(x, n)))
}

pub fn alpha_matrix(params: &CouplingParams, pt: &LocalPoint) -> Result<ComplexMatrix> {
    let CouplingParams { x, u, v, .. } = *params;
    check_chamber(x, &pt.p_hat)?;
    let theta = theta_unchecked(-x, &pt.p_hat)?;
    let n = pt.n();
    let mut a = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let p = pt.p_hat[j];
        let rad = (-2.0 * u - 2.0 * p).exp() - (-2.0 * v).exp();
        if !(rad > 0.0) {
            return Err(Error::CouplingViolation(format!(
                "e^(-2u-2p) - e^(-2v) = {rad:.3e} is not positive"
            )));
        }
        let row = C64::from_polar(rad.sqrt(), pt.q_hat[j]);
        for k in 0..n {
            a[(j, k)] = row * theta[(j, k)];
        }
        a[(j, j)] -= v.exp() * root((-2.0 * p).exp_m1(), "alpha diagonal")?;
    }
    Ok(a * -IM)
}

/// `α` with its partial derivatives: `(α, ∂α/∂p̂_m, ∂α/∂q̂_m)`.
pub(crate) fn alpha_with_derivatives(
    params: &CouplingParams,
    pt: &LocalPoint,
) -> Result<(ComplexMatrix, Vec<ComplexMatrix>, Vec<ComplexMatrix>)> {
    let CouplingParams { x, u, v, .. } = *params;
    check_chamber(x, &pt.p_hat)?;
    let (theta, dtheta) = theta_with_derivatives(-x, &pt.p_hat)?;
    let n = pt.n();
    let mut a = ComplexMatrix::zeros(n, n);
    let mut dp = vec![ComplexMatrix::zeros(n, n); n];
    let mut dq = vec![ComplexMatrix::zeros(n, n); n];
    for j in 0..n {
        let p = pt.p_hat[j];
        let e = (-2.0 * u - 2.0 * p).exp();
        let rad = e - (-2.0 * v).exp();
        let em = (-2.0 * p).exp_m1();
        if !(rad > 0.0) || !(em > 0.0) {
            return Err(Error::DomainViolation(format!("row {j} of alpha is not differentiable here")));
        }
        let r = rad.sqrt();
        let phase = C64::from_polar(1.0, pt.q_hat[j]);
        let diag = v.exp() * em.sqrt();
        let d_diag = -v.exp() * (em + 1.0) / em.sqrt();
        for k in 0..n {
            a[(j, k)] = -IM * phase * r * theta[(j, k)];
            dq[j][(j, k)] = phase * r * theta[(j, k)];
            dp[j][(j, k)] = -IM * phase * (-e / r) * theta[(j, k)];
            for m in 0..n {
                dp[m][(j, k)] += -IM * phase * r * dtheta[m][(j, k)];
            }
        }
        a[(j, j)] += IM * diag;
        dp[j][(j, j)] += IM * d_diag;
    }
    Ok((a, dp, dq))
}

/// `ρ = κ(x) ζ(x, p̂)⁻¹`.
pub fn rho_matrix(x: f64, p_hat: &[f64]) -> Result<RealMatrix> {
    let zeta = zeta_matrix(x, p_hat)?;
    Ok(kappa_matrix(x, p_hat.len())? * zeta.transpose())
}

/// The unitary middle factor `[[cos q, i sin q], [i sin q, cos q]]` with `sin q = e^{p̂}`.
pub(crate) fn angle_factor(p_hat: &[f64]) -> Result<ComplexMatrix> {
    let s: Vec<C64> = p_hat.iter().map(|p| IM * p.exp()).collect();
    let c = p_hat
        .iter()
        .map(|p| root(-(2.0 * p).exp_m1(), "cos q"))
        .collect::<Result<Vec<_>>>()?;
    let cm = diag_real(&c);
    Ok(block2(&cm, &diag_complex(&s), &diag_complex(&s), &cm))
}

/// `[[e^{−v}, α], [0, e^{v}]]`, the inverse of `b_R`.
pub(crate) fn triangular_factor(v: f64, alpha: &ComplexMatrix) -> ComplexMatrix {
    let n = alpha.nrows();
    let id = ComplexMatrix::identity(n, n);
    block2(&id.scale((-v).exp()), alpha, &ComplexMatrix::zeros(n, n), &id.scale(v.exp()))
}

pub fn section_matrix(params: &CouplingParams, pt: &LocalPoint) -> Result<ComplexMatrix> {
    let n = pt.n();
    let rho = complexify(&rho_matrix(params.x, &pt.p_hat)?);
    let left = block2(&rho, &ComplexMatrix::zeros(n, n), &ComplexMatrix::zeros(n, n), &ComplexMatrix::identity(n, n));
    let alpha = alpha_matrix(params, pt)?;
    Ok(left * angle_factor(&pt.p_hat)? * triangular_factor(params.v, &alpha))
}

#[allow(non_snake_case)]
pub fn K_local(params: &CouplingParams, pt: &LocalPoint) -> Result<GroupPoint> {
    GroupPoint::new(section_matrix(params, pt)?)
}

pub fn z_of_local(params: &CouplingParams, pt: &LocalPoint) -> Result<GlobalPoint> {
    let x = params.x;
    check_chamber(x, &pt.p_hat)?;
    let n = pt.n();
    let p = &pt.p_hat;
    let q = &pt.q_hat;
    let mut z = Vec::with_capacity(n);
    for j in 0..n - 1 {
        let modulus = root(p[j] - p[j + 1] - x.abs() / 2.0, "z modulus")?;
        z.push(C64::from_polar(modulus, q[j + 1..].iter().sum()));
    }
    let modulus = root(-p[0].exp_m1(), "z_n modulus")?;
    z.push(C64::from_polar(modulus, q.iter().sum()));
    GlobalPoint::new(z)
}

pub fn p_hat_of_z(params: &CouplingParams, gp: &GlobalPoint) -> Vec<f64> {
    p_hat_from_z(params.x, &gp.z)
}

pub(crate) fn p_hat_from_z(x: f64, z: &[C64]) -> Vec<f64> {
    let n = z.len();
    let mut p = Vec::with_capacity(n);
    p.push((-z[n - 1].norm_sqr()).ln_1p());
    for j in 1..n {
        p.push(p[j - 1] - z[j - 1].norm_sqr() - x.abs() / 2.0);
    }
    p
}

pub fn local_of_z(params: &CouplingParams, gp: &GlobalPoint) -> Result<LocalPoint> {
    if let Some(index) = gp.z.iter().position(|c| c.norm() == 0.0) {
        return Err(Error::OffDenseLocus { index });
    }
    let n = gp.n();
    let phi: Vec<f64> = gp.z.iter().map(|c| c.arg()).collect();
    let mut q = vec![0.0; n];
    if n == 1 {
        q[0] = phi[0];
    } else {
        q[0] = phi[n - 1] - phi[0];
        for k in 1..n - 1 {
            q[k] = phi[k - 1] - phi[k];
        }
        q[n - 1] = phi[n - 2];
    }
    LocalPoint::new(p_hat_of_z(params, gp), q)
}

/// Residuals of the building-block identities at one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockResiduals {
    /// `θθᵀ = 1` and `det θ = 1`.
    pub theta: f64,
    /// `θ(x)θ(−x) = 1`.
    pub theta_inverse: f64,
    /// `ζᵀζ = 1` and `det ζ = 1`.
    pub zeta: f64,
    /// `κᵀκ = 1` and `det κ = 1`.
    pub kappa: f64,
    /// `‖r‖ = 1`.
    pub r_norm: f64,
}

impl BlockResiduals {
    pub fn max(&self) -> f64 {
        [self.theta, self.theta_inverse, self.zeta, self.kappa, self.r_norm].into_iter().fold(0.0, f64::max)
    }
}

fn orthogonality_residual(m: &RealMatrix) -> f64 {
    let n = m.nrows();
    (m * m.transpose() - RealMatrix::identity(n, n)).norm().max((m.determinant() - 1.0).abs())
}

pub fn block_residuals(x: f64, p_hat: &[f64]) -> Result<BlockResiduals> {
    let n = p_hat.len();
    let th = theta_matrix(x, p_hat)?;
    let thm = theta_matrix(-x, p_hat)?;
    let r = r_vector(x, p_hat)?;
    Ok(BlockResiduals {
        theta: orthogonality_residual(&th),
        theta_inverse: (&th * thm - RealMatrix::identity(n, n)).norm(),
        zeta: orthogonality_residual(&zeta_matrix(x, p_hat)?),
        kappa: orthogonality_residual(&kappa_matrix(x, n)?),
        r_norm: (r.iter().map(|c| c * c).sum::<f64>() - 1.0).abs(),
    })
}

/// `‖ννᵀ − e^{−x}·1 − sgn(x) v̂v̂ᵀ‖`.
pub fn nu_identity_residual(x: f64, n: usize) -> Result<f64> {
    let nu = nu_matrix(x, n);
    let vh = v_hat(x, n)?;
    let rhs = RealMatrix::identity(n, n) * (-x).exp() + &vh * vh.transpose() * sgn(x);
    Ok((&nu * nu.transpose() - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, IM};
    use crate::sampling::{random_interior, DEFAULT_PARAMS as PARAMS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn params_validation() {
        assert!(CouplingParams::new(2, 1.0, -0.3, 0.5).is_ok());
        assert!(matches!(CouplingParams::new(2, 1.0, 0.5, -0.3), Err(Error::CouplingViolation(_))));
        assert!(matches!(CouplingParams::new(2, 1.0, -0.5, 0.5), Err(Error::CouplingViolation(_))));
        assert!(matches!(CouplingParams::new(2, 0.0, -0.3, 0.5), Err(Error::ZeroDeformation)));
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_matrix(0.0, 3), RealMatrix::identity(3, 3));
        let nu = nu_matrix(2.0 * 2f64.ln(), 2);
        assert!((nu[(0, 1)] - 1.5).abs() < 1e-15);
        assert!((nu.determinant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn v_hat_hand_values() {
        let vh = v_hat(2.0 * 2f64.ln(), 2).unwrap();
        assert!((vh[0] * vh[0] - 3.0).abs() < 1e-13);
        assert!((vh[1] * vh[1] - 0.75).abs() < 1e-13);
        assert!((vh[0] * vh[1] - 1.5).abs() < 1e-13);
        assert!(matches!(v_vector(0.0, 2), Err(Error::ZeroDeformation)));
    }

    #[test]
    fn nu_identity_with_v_hat() {
        for n in 1..=6 {
            for x in [0.3, -0.3, 1.0, -1.0, 2.0 * 2f64.ln(), -2.0 * 2f64.ln()] {
                let v = v_vector(x, n).unwrap();
                assert!((v.norm_squared() - n as f64).abs() < 1e-12);
                assert!(nu_identity_residual(x, n).unwrap() < 1e-12, "n = {n}, x = {x}");
            }
        }
    }

    #[test]
    fn r_examples() {
        assert_eq!(r_vector(0.7, &[-0.4]).unwrap(), vec![1.0]);
        let r = r_vector(1.0, &[-0.1, -1.1]).unwrap();
        assert!((r.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-12);
        let wall = r_vector(1.0, &[-0.2, -0.7, -1.5]).unwrap();
        assert_eq!(wall[0], 0.0);
        assert!(matches!(r_vector(1.0, &[-0.1, -0.3]), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn theta_hand_values() {
        let t = theta_matrix(1.0, &[-0.1, -1.1]).unwrap();
        assert!((t[(0, 1)] - 0.5f64.sinh() / (-1f64).sinh()).abs() < 1e-14);
        assert!((t[(0, 1)] + 0.44340).abs() < 1e-5);
        assert!((t[(0, 0)] - (0.5f64.sinh() * 1.5f64.sinh()).sqrt() / 1f64.sinh()).abs() < 1e-14);
        assert!((t[(0, 0)] - 0.896319).abs() < 1e-6);
        assert!((t.row(0).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn orthogonality_on_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 1..=4 {
            for x in [0.7, -0.7, 1.3, -1.1] {
                for _ in 0..10 {
                    let p = random_interior(x, n, &mut rng).p_hat;
                    let res = block_residuals(x, &p).unwrap();
                    assert!(res.max() < 1e-10, "{res:?}");
                }
            }
        }
    }

    #[test]
    fn kappa_pivot_column_is_normalized_v() {
        for x in [0.9, -0.9] {
            let n = 3;
            let k = kappa_matrix(x, n).unwrap();
            let v = v_vector(x, n).unwrap() / (n as f64).sqrt();
            let a = pivot(x, n);
            assert!((k.column(a) - v).norm() < 1e-15);
        }
    }

    #[test]
    fn theta_entries_nonzero_for_positive_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 2..=4 {
            for _ in 0..20 {
                let p = random_interior(0.8, n, &mut rng).p_hat;
                let t = theta_matrix(0.8, &p).unwrap();
                assert!(t[(n - 1, 0)].abs() > 1e-8);
                for j in 0..n - 1 {
                    assert!(t[(j, j + 1)].abs() > 1e-8);
                }
            }
        }
    }

    #[test]
    fn alpha_hand_value() {
        let params = CouplingParams::new(1, 0.5, -0.3, 0.5).unwrap();
        let a = alpha_matrix(&params, &LocalPoint::new(vec![-1.0], vec![0.0]).unwrap()).unwrap();
        let expected = -((0.6f64 + 2.0).exp() - (-1f64).exp()).sqrt() + 0.5f64.exp() * (2f64.exp() - 1.0).sqrt();
        assert!(a[(0, 0)].re.abs() < 1e-15);
        assert!((a[(0, 0)].im - expected).abs() < 1e-13);
        let b = alpha_matrix(&params, &LocalPoint::new(vec![0.0], vec![0.4]).unwrap()).unwrap();
        let first = C64::from_polar((0.6f64.exp() - (-1f64).exp()).sqrt(), 0.4) * -IM;
        assert!((b[(0, 0)] - first).norm() < 1e-15);
    }

    #[test]
    fn section_is_unimodular_and_recovers_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=4 {
            let params = CouplingParams { n, ..PARAMS };
            for _ in 0..10 {
                let pt = random_interior(params.x, n, &mut rng);
                let k = K_local(&params, &pt).unwrap();
                assert!((k.matrix().determinant() - C64::new(1.0, 0.0)).norm() < 1e-12);
                let pos = crate::linalg::cartan_position(k.g_l()).unwrap();
                for j in 0..n {
                    assert!((pos.q[j].sin() - pt.p_hat[j].exp()).abs() < 1e-10);
                    assert!((pos.p_hat[j] - pt.p_hat[j]).abs() < 1e-10);
                }
            }
        }
        let _ = identity(2);
    }

    #[test]
    fn chart_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=4 {
            for x in [0.6, -1.2] {
                let params = CouplingParams { n, x, ..PARAMS };
                for _ in 0..25 {
                    let pt = random_interior(x, n, &mut rng);
                    let z = z_of_local(&params, &pt).unwrap();
                    let back = local_of_z(&params, &z).unwrap();
                    for j in 0..n {
                        assert!((back.p_hat[j] - pt.p_hat[j]).abs() < 1e-12);
                        let dq = C64::from_polar(1.0, back.q_hat[j]) - C64::from_polar(1.0, pt.q_hat[j]);
                        assert!(dq.norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn vertex_maps_to_origin() {
        let params = CouplingParams { n: 3, x: -0.8, ..PARAMS };
        let pt = LocalPoint::new(vec![0.0, -0.4, -0.8], vec![0.3, -1.0, 2.0]).unwrap();
        let z = z_of_local(&params, &pt).unwrap();
        assert!(z.z.iter().all(|c| c.norm() < 1e-7));
        let p = p_hat_of_z(&params, &z);
        for j in 0..3 {
            assert!((p[j] - pt.p_hat[j]).abs() < 1e-12);
        }
        assert!(matches!(local_of_z(&params, &GlobalPoint::new(vec![C64::new(0.0, 0.0); 3]).unwrap()), Err(Error::OffDenseLocus { index: 0 })));
    }

    #[test]
    fn boundary_points_round_trip_positions() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let params = CouplingParams { n: 3, ..PARAMS };
        for _ in 0..20 {
            let mut pt = random_interior(params.x, 3, &mut rng);
            let wall = rng.gen_range(0..3);
            if wall == 0 {
                let shift = pt.p_hat[0];
                pt.p_hat.iter_mut().for_each(|p| *p -= shift);
            } else {
                let shift = pt.p_hat[wall - 1] - pt.p_hat[wall] - params.x.abs() / 2.0;
                for p in &mut pt.p_hat[wall..] {
                    *p += shift;
                }
            }
            let z = z_of_local(&params, &pt).unwrap();
            let p = p_hat_of_z(&params, &z);
            for j in 0..3 {
                assert!((p[j] - pt.p_hat[j]).abs() < 1e-12);
            }
        }
    }
}
