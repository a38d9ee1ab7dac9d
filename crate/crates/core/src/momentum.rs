//! The momentum map `Φ₊(K) = (π(b_L), π(b_R))`, its constraint value, the
//! relations that hold on the constraint surface, and the admissibility
//! oracle for positions.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::group::GroupPoint;
use crate::linalg::{block, block2, complexify, diag_real, polar, ComplexMatrix, C64, IM};
use crate::linalg::cartan_position;
use crate::local::{nu_matrix, v_hat, CouplingParams};

const ON_SHELL_TOL: f64 = 1e-8;

/// Block-diagonal parts of `b_L` and `b_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumValue {
    pub b_l_proj: ComplexMatrix,
    pub b_r_proj: ComplexMatrix,
}

impl MomentumValue {
    /// Frobenius distance between the pairs.
    pub fn distance(&self, other: &MomentumValue) -> f64 {
        let l = (&self.b_l_proj - &other.b_l_proj).norm_squared();
        let r = (&self.b_r_proj - &other.b_r_proj).norm_squared();
        (l + r).sqrt()
    }
}

/// Zeroes the upper-right `n×n` block.
pub fn project(b: &ComplexMatrix) -> ComplexMatrix {
    let n = b.nrows() / 2;
    let mut p = b.clone();
    p.view_mut((0, n), (n, n)).fill(C64::new(0.0, 0.0));
    p
}

pub fn momentum_plus(k: &GroupPoint) -> MomentumValue {
    MomentumValue { b_l_proj: project(k.b_l()), b_r_proj: project(k.b_r()) }
}

pub fn mu_target(params: &CouplingParams) -> MomentumValue {
    let n = params.n;
    let zero = ComplexMatrix::zeros(n, n);
    let id = ComplexMatrix::identity(n, n);
    let nu = complexify(&nu_matrix(params.x, n)).scale(params.u.exp());
    MomentumValue {
        b_l_proj: block2(&nu, &zero, &zero, &id.scale((-params.u).exp())),
        b_r_proj: block2(&id.scale(params.v.exp()), &zero, &zero, &id.scale((-params.v).exp())),
    }
}

pub fn constraint_residual(k: &GroupPoint, params: &CouplingParams) -> f64 {
    momentum_plus(k).distance(&mu_target(params))
}

/// Residuals of the relations satisfied by a constrained `K` written in the
/// section form `diag(ρ, 1) C(q) [[e^{−v}, α], [0, e^{v}]]`.
#[derive(Debug, Clone)]
pub struct OnShellReport {
    pub constraint: f64,
    /// `ΩΩ† = e^{−2u} − e^{−2v} sin²q`.
    pub lambda_squared: f64,
    /// `KK† = b_L b_L†` with `b_L` rebuilt from `χ`.
    pub gram: f64,
    /// `ρ sin⁻¹q T† sin²q T sin⁻¹q ρ† = ν ν†`.
    pub key_equation: f64,
    /// `|(ρ† v̂)_m|²` against the closed-form oracle.
    pub w_squared: f64,
    pub q: Vec<f64>,
    pub q_n_positive: bool,
}

impl OnShellReport {
    pub fn max_residual(&self) -> f64 {
        [self.constraint, self.lambda_squared, self.gram, self.key_equation, self.w_squared]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn onshell_relations(k: &GroupPoint, params: &CouplingParams) -> Result<OnShellReport> {
    let constraint = constraint_residual(k, params);
    if !(constraint < ON_SHELL_TOL) {
        return Err(Error::OffShell { residual: constraint, tol: ON_SHELL_TOL });
    }
    let n = params.n;
    let CouplingParams { x, u, v, .. } = *params;
    let kk = k.matrix();
    let pos = cartan_position(k.g_l())?;
    let sin: Vec<f64> = pos.p_hat.iter().map(|p| p.exp()).collect();
    let cos: Vec<f64> = pos.q.iter().map(|q| q.cos()).collect();
    let s = diag_real(&sin);
    let c = diag_real(&cos);
    let s_inv = diag_real(&sin.iter().map(|s| 1.0 / s).collect::<Vec<_>>());

    let g21 = block(k.g_l(), 1, 0);
    let gauge = (&g21 - &s * IM).norm();
    if !(gauge < 1e-8) {
        return Err(Error::NotSectionGauge { residual: gauge });
    }
    let rho = block(k.g_l(), 0, 1) * &s_inv * -IM;

    let omega = block(kk, 1, 1);
    let expected = ComplexMatrix::identity(n, n).scale((-2.0 * u).exp()) - (&s * &s).scale((-2.0 * v).exp());
    let lambda_squared = (&omega * omega.adjoint() - expected).norm();
    let (_, t) = polar(&omega)?;

    let chi = &rho * (&s_inv * -IM) * (c.scale((-u).exp()) - omega.adjoint().scale((u + v).exp()));
    let zero = ComplexMatrix::zeros(n, n);
    let nu = complexify(&nu_matrix(x, n));
    let b_l = block2(&nu.scale(u.exp()), &chi, &zero, &ComplexMatrix::identity(n, n).scale((-u).exp()));
    let kkd = kk * kk.adjoint();
    let gram = (&kkd - &b_l * b_l.adjoint()).norm() / kkd.norm().max(1.0);

    let lhs = &rho * &s_inv * t.adjoint() * &s * &s * &t * &s_inv * rho.adjoint();
    // both sides carry two factors of s⁻¹, so the residual is measured
    // relative to the conditioning they introduce
    let spread = sin.iter().cloned().fold(0.0, f64::max) / sin.iter().cloned().fold(f64::INFINITY, f64::min);
    let key_equation = (lhs - &nu * nu.transpose()).norm() / (spread * spread);

    let w = w_vector(x, &rho)?;
    let oracle = w_squared_oracle(x, &pos.p_hat)?;
    let w_squared = w.iter().zip(&oracle).map(|(w, o)| (w.norm_sqr() - o).abs()).fold(0.0, f64::max);

    let q_n_positive = pos.q[n - 1] > 0.0;
    Ok(OnShellReport { constraint, lambda_squared, gram, key_equation, w_squared, q: pos.q, q_n_positive })
}

/// `w = ρ† v̂`.
pub fn w_vector(x: f64, rho: &ComplexMatrix) -> Result<Vec<C64>> {
    let vh = v_hat(x, rho.nrows())?;
    let vh: DVector<C64> = vh.map(|c| C64::new(c, 0.0));
    Ok((rho.adjoint() * vh).iter().cloned().collect())
}

/// The values `|w_m|²` forced by the constraint at a position with distinct components.
pub fn w_squared_oracle(x: f64, p_hat: &[f64]) -> Result<Vec<f64>> {
    if x == 0.0 {
        return Err(Error::ZeroDeformation);
    }
    let n = p_hat.len();
    for j in 0..n {
        for k in j + 1..n {
            if p_hat[j] == p_hat[k] {
                return Err(Error::CoincidentComponents { j, k });
            }
        }
    }
    let sign = if x > 0.0 { 1.0 } else { -1.0 };
    Ok((0..n)
        .map(|m| {
            let mut prod = -sign * (-x).exp_m1();
            for j in (0..n).filter(|&j| j != m) {
                let em = (2.0 * p_hat[m]).exp();
                prod *= ((2.0 * p_hat[j] + x).exp() - em) / ((2.0 * p_hat[j]).exp() - em);
            }
            prod
        })
        .collect())
}

/// Absolute difference of the two sides of the characteristic-polynomial
/// identity relating `e^{2p̂}` and its rank-one perturbation, at `λ`.
pub fn char_poly_residual(x: f64, p_hat: &[f64], w_sq: &[f64], lambda: C64) -> f64 {
    let n = p_hat.len();
    let sign = if x > 0.0 { 1.0 } else { -1.0 };
    let e2: Vec<f64> = p_hat.iter().map(|p| (2.0 * p).exp()).collect();
    let shifted: Vec<C64> = e2.iter().map(|e| e * (-x).exp() - lambda).collect();
    let lhs: C64 = e2.iter().map(|e| e - lambda).product();
    let mut rhs: C64 = shifted.iter().product();
    for j in 0..n {
        let others: C64 = (0..n).filter(|&k| k != j).map(|k| shifted[k]).product();
        rhs += others * (sign * e2[j] * w_sq[j]);
    }
    (lhs - rhs).norm()
}

/// Whether a position lies in the closed chamber, decided through the oracle:
/// strictly decreasing components, `p̂₁ ≤ 0`, and every `|w_m|²` non-negative.
pub fn admissible(x: f64, p_hat: &[f64]) -> bool {
    if p_hat.is_empty() || x == 0.0 || !p_hat.windows(2).all(|w| w[0] > w[1]) {
        return false;
    }
    if p_hat[0] > 1e-12 {
        return false;
    }
    match w_squared_oracle(x, p_hat) {
        Ok(w) => w.iter().all(|&c| c >= -1e-12),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::{in_closed_chamber, rho_matrix, K_local, LocalPoint};
    use crate::sampling::{random_interior, DEFAULT_PARAMS as PARAMS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_target_examples() {
        let m = momentum_plus(&GroupPoint::new(ComplexMatrix::identity(4, 4)).unwrap());
        assert_eq!(m.b_l_proj, ComplexMatrix::identity(4, 4));
        let mu = mu_target(&PARAMS);
        let d: Vec<f64> = (0..4).map(|i| mu.b_r_proj[(i, i)].re).collect();
        assert_eq!(d, vec![0.5f64.exp(), 0.5f64.exp(), (-0.5f64).exp(), (-0.5f64).exp()]);
        assert!((mu.b_l_proj.determinant() - 1.0).norm() < 1e-14);
        assert!((mu.b_r_proj.determinant() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn section_relations_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 1..=4 {
            for x in [0.9, -0.9] {
                let params = CouplingParams { n, x, ..PARAMS };
                for _ in 0..8 {
                    let pt = random_interior(x, n, &mut rng);
                    let k = K_local(&params, &pt).unwrap();
                    let rep = onshell_relations(&k, &params).unwrap();
                    assert!(rep.max_residual() < 1e-10, "{rep:?}");
                    assert!(rep.q_n_positive);
                }
            }
        }
    }

    #[test]
    fn single_particle_key_equation_is_scalar() {
        let params = CouplingParams { n: 1, ..PARAMS };
        let k = K_local(&params, &LocalPoint::new(vec![-0.6], vec![1.1]).unwrap()).unwrap();
        let rep = onshell_relations(&k, &params).unwrap();
        assert!(rep.key_equation < 1e-12);
        assert!(rep.w_squared < 1e-12);
    }

    #[test]
    fn off_shell_is_rejected() {
        let k = GroupPoint::new(ComplexMatrix::identity(4, 4)).unwrap();
        assert!(matches!(onshell_relations(&k, &PARAMS), Err(Error::OffShell { .. })));
    }

    #[test]
    fn oracle_sum_and_walls() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 1..=4 {
            for x in [0.7, -0.7] {
                let p = random_interior(x, n, &mut rng).p_hat;
                let w = w_squared_oracle(x, &p).unwrap();
                let sum: f64 = w.iter().sum();
                let sign = if x > 0.0 { 1.0 } else { -1.0 };
                assert!((sum - sign * (-x).exp() * (n as f64 * x).exp_m1()).abs() < 1e-12);
            }
        }
        let w = w_squared_oracle(1.0, &[-0.2, -0.7, -1.9]).unwrap();
        assert!(w[0].abs() < 1e-15);
        assert!(matches!(w_squared_oracle(1.0, &[-0.2, -0.2]), Err(Error::CoincidentComponents { .. })));
    }

    #[test]
    fn w_vector_matches_oracle_and_characteristic_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for n in 1..=4 {
            for x in [1.1, -1.1] {
                let p = random_interior(x, n, &mut rng).p_hat;
                let rho = complexify(&rho_matrix(x, &p).unwrap());
                let w: Vec<f64> = w_vector(x, &rho).unwrap().iter().map(|c| c.norm_sqr()).collect();
                let oracle = w_squared_oracle(x, &p).unwrap();
                for m in 0..n {
                    assert!((w[m] - oracle[m]).abs() < 1e-10);
                }
                for _ in 0..20 {
                    let lambda = C64::from_polar(1.0, rng.gen_range(-3.2..3.2));
                    assert!(char_poly_residual(x, &p, &w, lambda) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn admissible_examples() {
        assert!(admissible(1.0, &[-0.1, -1.1]));
        assert!(!admissible(1.0, &[-0.1, -0.3]));
        assert!(!admissible(1.0, &[0.1, -1.1]));
        assert!(!admissible(1.0, &[-1.1, -0.1]));
    }

    #[test]
    fn admissible_agrees_with_walls() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..=4);
            let x = if rng.gen_bool(0.5) { 0.8 } else { -0.8 };
            let mut p = vec![rng.gen_range(-1.0..0.3)];
            for j in 1..n {
                p.push(p[j - 1] - rng.gen_range(0.001..1.5));
            }
            assert_eq!(admissible(x, &p), in_closed_chamber(x, &p, 0.0), "p = {p:?}");
        }
    }
}
