//! Dense linear algebra helpers shared by the numeric modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest condition number accepted by [`guarded_inverse`].
pub const MAX_CONDITION: f64 = 1e10;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

pub fn to_complex_vec(v: &DVector<f64>) -> CVector {
    v.map(|x| c(x, 0.0))
}

pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.im)
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a real square matrix, rejecting condition numbers above [`MAX_CONDITION`].
pub fn guarded_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let cond = condition_number(m);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::IllConditioned { cond });
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular matrix".into()))
}

pub fn complex_inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular complex matrix".into()))
}

pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> DVector<f64> {
    let herm = (m + m.adjoint()).map(|z| z * 0.5);
    SymmetricEigen::new(herm).eigenvalues
}

pub fn is_positive_definite(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && m.nrows() > 0 && min_eigenvalue(m) > tol
}

/// `xᵀ M y` with complex bilinear (not sesquilinear) extension.
pub fn bilinear(m: &CMatrix, x: &CVector, y: &CVector) -> Complex64 {
    (x.transpose() * m * y)[(0, 0)]
}

pub fn dot(x: &CVector, y: &CVector) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

/// Square root of `det Q` for complex symmetric `Q` with positive definite real part.
///
/// The branch is the one continuous along `Re Q + t·i·Im Q`, `t ∈ [0, 1]`,
/// starting from the positive root on `Re Q`. Writing `Re Q = L Lᵀ` and
/// `K = L⁻¹ (Im Q) L⁻ᵀ`, the path is `L (I + i t K) Lᵀ`, whose eigenvalue
/// factors `1 + i t k_j` stay in the right half plane; the principal root of
/// each factor is therefore the continuous one.
pub fn sqrt_det_continuous(q: &CMatrix) -> Result<Complex64> {
    if !q.is_square() {
        return Err(Error::DimensionMismatch { expected: q.nrows(), found: q.ncols() });
    }
    if q.nrows() == 0 {
        return Ok(c(1.0, 0.0));
    }
    let re = real_part(q);
    let re = (&re + re.transpose()) * 0.5;
    let im = imag_part(q);
    let im = (&im + im.transpose()) * 0.5;
    let chol = re
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("real part of quadratic form".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("Cholesky factor".into()))?;
    let k = &l_inv * im * l_inv.transpose();
    let det_re: f64 = l.diagonal().iter().product();
    let factor: Complex64 = symmetric_eigenvalues(&k)
        .iter()
        .map(|&kj| c(1.0, kj).sqrt())
        .product();
    Ok(factor * det_re)
}
