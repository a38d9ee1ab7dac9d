//! Dense complex kernels: Iwasawa factorizations, Cartan angles, polar
//! decomposition and exponentials of Hermitian generators.
//!
//! Both Iwasawa forms are computed with a Householder QR whose diagonal is
//! rotated to be real positive. The right form `K = g b⁻¹` is the QR of `K`
//! itself; the left form `K = b g⁻¹` is a QL factorization of `K†`, obtained
//! as a QR of the index-reversed matrix. Neither path forms `K†K`, so the
//! conditioning is that of `K` rather than its square.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type RealMatrix = DMatrix<f64>;

pub const IM: C64 = C64::new(0.0, 1.0);

const MAX_CONDITION: f64 = 1e12;
const DET_TOL: f64 = 1e-8;
const UNITARY_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const SINGULAR_TOL: f64 = 1e-12;

/// Pass/fail thresholds used by the verification suites.
///
/// `construction` bounds reconstruction residuals of factorizations and
/// closed-form identities, `property` bounds derived properties. The
/// remaining fields are the thresholds of the finite-difference based
/// checks, whose accuracy floor is set by the step size rather than by
/// roundoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceProfile {
    pub construction: f64,
    pub property: f64,
    pub symplectic_dense: f64,
    pub symplectic_global: f64,
    pub commutativity: f64,
    pub trajectory: f64,
    pub drift: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            construction: 1e-12,
            property: 1e-10,
            symplectic_dense: 1e-6,
            symplectic_global: 1e-5,
            commutativity: 1e-5,
            trajectory: 1e-6,
            drift: 1e-8,
        }
    }
}

impl ToleranceProfile {
    /// Every threshold multiplied by `factor` (< 1 tightens).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            construction: self.construction * factor,
            property: self.property * factor,
            symplectic_dense: self.symplectic_dense * factor,
            symplectic_global: self.symplectic_global * factor,
            commutativity: self.commutativity * factor,
            trajectory: self.trajectory * factor,
            drift: self.drift * factor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IwasawaFactors {
    pub g: ComplexMatrix,
    pub b: ComplexMatrix,
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn complexify(m: &RealMatrix) -> ComplexMatrix {
    m.map(|v| C64::new(v, 0.0))
}

pub fn diag_complex(d: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_column_slice(d))
}

pub fn diag_real(d: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(d.len(), d.len(), |i, j| {
        if i == j {
            C64::new(d[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `[[a, b], [c, d]]` from four equally sized square blocks.
pub fn block2(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    d: &ComplexMatrix,
) -> ComplexMatrix {
    let n = a.nrows();
    let mut m = ComplexMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(c);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

pub fn block(m: &ComplexMatrix, row: usize, col: usize) -> ComplexMatrix {
    let n = m.nrows() / 2;
    m.view((row * n, col * n), (n, n)).into_owned()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn unitarity_residual(g: &ComplexMatrix) -> f64 {
    (g.adjoint() * g - identity(g.nrows())).norm()
}

pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn condition_number(m: &ComplexMatrix) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn check_factorizable(k: &ComplexMatrix) -> Result<()> {
    if !k.is_square() || k.nrows() == 0 {
        return Err(Error::InvalidInput(format!(
            "expected a non-empty square matrix, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    if !is_finite(k) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let cond = condition_number(k);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::NonInvertible { cond });
    }
    let deviation = (k.determinant() - C64::new(1.0, 0.0)).norm();
    if deviation > DET_TOL {
        return Err(Error::NotUnimodular { deviation });
    }
    Ok(())
}

/// QR with the diagonal of `R` rotated onto the positive real axis.
pub(crate) fn qr_positive(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..r.nrows() {
        let d = r[(j, j)];
        let modulus = d.norm();
        if modulus > 0.0 {
            let phase = d / modulus;
            for i in 0..q.nrows() {
                q[(i, j)] *= phase;
            }
            for c in 0..r.ncols() {
                r[(j, c)] *= phase.conj();
            }
            r[(j, j)] = C64::new(modulus, 0.0);
        }
    }
    (q, r)
}

fn upper_inverse(r: &ComplexMatrix) -> ComplexMatrix {
    let n = r.nrows();
    r.solve_upper_triangular(&identity(n))
        .expect("triangular factor with positive diagonal is invertible")
}

fn reversed(m: &ComplexMatrix) -> ComplexMatrix {
    let (r, c) = m.shape();
    ComplexMatrix::from_fn(r, c, |i, j| m[(r - 1 - i, c - 1 - j)])
}

/// `K = g_L · b_R⁻¹`.
pub fn iwasawa_right(k: &ComplexMatrix) -> Result<IwasawaFactors> {
    check_factorizable(k)?;
    Ok(iwasawa_right_unchecked(k))
}

pub(crate) fn iwasawa_right_unchecked(k: &ComplexMatrix) -> IwasawaFactors {
    let (q, r) = qr_positive(k);
    IwasawaFactors {
        g: q,
        b: upper_inverse(&r),
    }
}

/// `K = b_L · g_R⁻¹`.
pub fn iwasawa_left(k: &ComplexMatrix) -> Result<IwasawaFactors> {
    check_factorizable(k)?;
    Ok(iwasawa_left_unchecked(k))
}

pub(crate) fn iwasawa_left_unchecked(k: &ComplexMatrix) -> IwasawaFactors {
    // K† = g_R b_L† is a QL factorization; reversing rows and columns turns
    // it into a QR factorization.
    let (q, r) = qr_positive(&reversed(&k.adjoint()));
    IwasawaFactors {
        g: reversed(&q),
        b: reversed(&r).adjoint(),
    }
}

/// Angles `q` of the generalized Cartan decomposition `g = g₊ C(q) h₊`,
/// sorted non-increasingly, together with `p̂ = log sin q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanPosition {
    pub q: Vec<f64>,
    pub p_hat: Vec<f64>,
}

impl CartanPosition {
    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// Fails unless every angle exceeds `min_angle`.
    pub fn require_positive(&self, min_angle: f64) -> Result<&Self> {
        let q_min = self.q.iter().cloned().fold(f64::INFINITY, f64::min);
        if q_min > min_angle {
            Ok(self)
        } else {
            Err(Error::DegeneratePosition { q_min })
        }
    }
}

fn sorted_hermitian_eigenvalues(h: ComplexMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn cartan_position(g: &ComplexMatrix) -> Result<CartanPosition> {
    if !g.is_square() || g.nrows() % 2 != 0 || g.nrows() == 0 {
        return Err(Error::InvalidInput(format!(
            "expected an even-dimensional square matrix, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let residual = unitarity_residual(g);
    if !(residual <= UNITARY_TOL * g.nrows() as f64) {
        return Err(Error::NotUnitary { residual });
    }
    let n = g.nrows() / 2;
    let d = block(g, 0, 0);
    let c = block(g, 1, 0);
    // cos²q ascending and sin²q descending pair up index by index; each
    // p̂ is taken from whichever spectrum resolves it without cancellation.
    let cos2 = sorted_hermitian_eigenvalues(&d * d.adjoint());
    let mut sin2 = sorted_hermitian_eigenvalues(&c * c.adjoint());
    sin2.reverse();
    let mut q = Vec::with_capacity(n);
    let mut p_hat = Vec::with_capacity(n);
    for j in 0..n {
        let lc = cos2[j].clamp(0.0, 1.0);
        q.push(lc.sqrt().acos());
        let p = if lc < 0.5 {
            0.5 * (-lc).ln_1p()
        } else {
            0.5 * sin2[j].clamp(0.0, 1.0).ln()
        };
        p_hat.push(p);
    }
    Ok(CartanPosition { q, p_hat })
}

/// Polar decomposition `Ω = Λ T` with `Λ` Hermitian positive and `T` unitary.
pub fn polar(omega: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !omega.is_square() {
        return Err(Error::InvalidInput("polar decomposition needs a square matrix".into()));
    }
    let svd = omega.clone().svd(true, true);
    let sigma_min = svd.singular_values.min();
    if !(sigma_min >= SINGULAR_TOL) {
        return Err(Error::Singular { sigma_min });
    }
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let s: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let lambda = &u * diag_real(&s) * u.adjoint();
    let t = &u * v_t;
    Ok((lambda, t))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(l: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let residual = hermiticity_residual(l);
    if !(residual <= HERMITIAN_TOL * l.norm().max(1.0)) {
        return Err(Error::NotHermitian { residual });
    }
    let sym = (l + l.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..l.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(l.nrows(), l.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// `exp(−i t Lᵏ)` through the eigendecomposition of `L`.
pub fn herm_exp_action(l: &ComplexMatrix, k: u32, t: f64) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(l)?;
    let phases: Vec<C64> = values
        .iter()
        .map(|&lam| C64::from_polar(1.0, -t * lam.powi(k as i32)))
        .collect();
    Ok(&vectors * diag_complex(&phases) * vectors.adjoint())
}
