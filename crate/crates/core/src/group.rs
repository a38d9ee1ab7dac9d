use crate::error::Result;
use crate::linalg::{iwasawa_left, iwasawa_right, ComplexMatrix};

/// An element `K` of `SL(2n, ℂ)` together with both of its Iwasawa
/// factorizations `K = g_L b_R⁻¹ = b_L g_R⁻¹`.
#[derive(Debug, Clone)]
pub struct GroupPoint {
    k: ComplexMatrix,
    g_l: ComplexMatrix,
    b_r: ComplexMatrix,
    b_l: ComplexMatrix,
    g_r: ComplexMatrix,
}

impl GroupPoint {
    pub fn new(k: ComplexMatrix) -> Result<Self> {
        let right = iwasawa_right(&k)?;
        let left = iwasawa_left(&k)?;
        Ok(Self { k, g_l: right.g, b_r: right.b, b_l: left.b, g_r: left.g })
    }

    /// Builds `K = g_L b_R⁻¹` from given right factors, which are kept exactly.
    pub fn from_right_factors(g_l: ComplexMatrix, b_r: ComplexMatrix) -> Result<Self> {
        let dim = b_r.nrows();
        let b_inv = b_r
            .solve_upper_triangular(&ComplexMatrix::identity(dim, dim))
            .ok_or_else(|| crate::error::Error::Singular { sigma_min: 0.0 })?;
        let k = &g_l * b_inv;
        let left = iwasawa_left(&k)?;
        Ok(Self { k, g_l, b_r, b_l: left.b, g_r: left.g })
    }

    pub fn n(&self) -> usize {
        self.k.nrows() / 2
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.k
    }

    pub fn g_l(&self) -> &ComplexMatrix {
        &self.g_l
    }

    pub fn b_r(&self) -> &ComplexMatrix {
        &self.b_r
    }

    pub fn b_l(&self) -> &ComplexMatrix {
        &self.b_l
    }

    pub fn g_r(&self) -> &ComplexMatrix {
        &self.g_r
    }
}
