//! Siegel points `T`, the complex structure `x̱ = T x₁ + x₂`, and the
//! compatible Hermitian form `H(u, v) = uᵀ (Im T)⁻¹ v̄`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattices::SymplecticSpace;
use crate::linalg::{c, guarded_inverse, imag_part, min_eigenvalue, real_part, CMatrix, CVector};

/// Complex symmetric `N × N` matrix with positive definite imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelPoint {
    t: CMatrix,
}

impl SiegelPoint {
    /// Symmetrizes `t` and checks `Im T > 0`.
    pub fn new(t: CMatrix) -> Result<Self> {
        if !t.is_square() || t.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: t.nrows(), found: t.ncols() });
        }
        let t = (&t + t.transpose()) * c(0.5, 0.0);
        let lowest = min_eigenvalue(&imag_part(&t));
        if lowest.is_nan() || lowest <= 1e-12 {
            return Err(Error::NotPositiveDefinite("Im T".into()));
        }
        Ok(Self { t })
    }

    pub fn from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::DimensionMismatch { expected: re.nrows(), found: im.nrows() });
        }
        Self::new(re.zip_map(im, c))
    }

    /// `T = i·I`.
    pub fn identity(n: usize) -> Self {
        Self::new(CMatrix::identity(n, n) * c(0.0, 1.0)).expect("i·I is in Siegel space")
    }

    pub fn scalar(t: Complex64) -> Result<Self> {
        Self::new(CMatrix::from_element(1, 1, t))
    }

    /// `Sym(C) + i(Sym(B)ᵀSym(B) + I)` with entries of `B`, `C` uniform in `[−1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut draw = || DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let b = draw();
        let cm = draw();
        let b = (&b + b.transpose()) * 0.5;
        let cm = (&cm + cm.transpose()) * 0.5;
        let im = b.transpose() * &b + DMatrix::identity(n, n);
        Self::from_parts(&cm, &im).expect("constructed positive definite")
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.t
    }

    pub fn re(&self) -> DMatrix<f64> {
        real_part(&self.t)
    }

    pub fn im(&self) -> DMatrix<f64> {
        imag_part(&self.t)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |m: DMatrix<f64>| m.row_iter().map(|r| r.iter().copied().collect()).collect();
        serde_json::to_value(SiegelJson { t_re: rows(self.re()), t_im: rows(self.im()) }).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let json: SiegelJson = serde_json::from_value(v.clone())?;
        let n = json.t_re.len();
        let mat = |rows: &[Vec<f64>]| -> Result<DMatrix<f64>> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::DimensionMismatch { expected: n, found: rows.len() });
            }
            Ok(DMatrix::from_row_iterator(n, n, rows.iter().flatten().copied()))
        };
        Self::from_parts(&mat(&json.t_re)?, &mat(&json.t_im)?)
    }
}

#[derive(Serialize, Deserialize)]
struct SiegelJson {
    #[serde(rename = "T_re")]
    t_re: Vec<Vec<f64>>,
    #[serde(rename = "T_im")]
    t_im: Vec<Vec<f64>>,
}

/// A Siegel point together with the standard symplectic space it is compatible with.
#[derive(Debug, Clone, PartialEq)]
pub struct KaehlerStructure {
    siegel: SiegelPoint,
    space: SymplecticSpace,
    s_inv: DMatrix<f64>,
}

impl KaehlerStructure {
    pub fn new(siegel: SiegelPoint) -> Result<Self> {
        let s_inv = guarded_inverse(&siegel.im())?;
        let space = SymplecticSpace::standard(siegel.dim());
        Ok(Self { siegel, space, s_inv })
    }

    pub fn standard(n: usize) -> Self {
        Self::new(SiegelPoint::identity(n)).expect("i·I is well conditioned")
    }

    pub fn siegel(&self) -> &SiegelPoint {
        &self.siegel
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn half_dim(&self) -> usize {
        self.siegel.dim()
    }

    /// `(Im T)⁻¹`.
    pub fn s_inv(&self) -> &DMatrix<f64> {
        &self.s_inv
    }

    /// `x̱ = T x₁ + x₂`.
    pub fn embed(&self, x: &DVector<f64>) -> Result<CVector> {
        let n = self.half_dim();
        if x.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: x.len() });
        }
        let x1 = x.rows(0, n).map(|v| c(v, 0.0));
        let x2 = x.rows(n, n).map(|v| c(v, 0.0));
        Ok(self.siegel.matrix() * x1 + x2)
    }

    /// Real-linear `embed` as a complex `N × 2N` matrix `[T | I]`.
    pub fn embed_matrix(&self) -> CMatrix {
        let n = self.half_dim();
        let mut m = CMatrix::zeros(n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(self.siegel.matrix());
        m.view_mut((0, n), (n, n)).copy_from(&CMatrix::identity(n, n));
        m
    }

    /// `H(u, v) = uᵀ S⁻¹ v̄`.
    pub fn hermitian(&self, u: &CVector, v: &CVector) -> Result<Complex64> {
        let n = self.half_dim();
        for w in [u, v] {
            if w.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: w.len() });
            }
        }
        let mut s = c(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += u[i] * self.s_inv[(i, j)] * v[j].conj();
            }
        }
        Ok(s)
    }

    /// `[[R S⁻¹ R + S, R S⁻¹], [S⁻¹ R, S⁻¹]]`, so that `xᵀ M x = H(x̱, x̱)`.
    pub fn q_matrix(&self) -> DMatrix<f64> {
        let n = self.half_dim();
        let r = self.siegel.re();
        let s = self.siegel.im();
        let si = &self.s_inv;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&(&r * si * &r + &s));
        m.view_mut((0, n), (n, n)).copy_from(&(&r * si));
        m.view_mut((n, 0), (n, n)).copy_from(&(si * &r));
        m.view_mut((n, n), (n, n)).copy_from(si);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_positive_definite;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn embed_examples() {
        let k = KaehlerStructure::standard(1);
        assert_eq!(k.embed(&v(&[1.0, 0.0])).unwrap()[0], c(0.0, 1.0));
        assert_eq!(k.embed(&v(&[0.0, 2.5])).unwrap()[0], c(2.5, 0.0));
        assert!(k.embed(&v(&[1.0])).is_err());
    }

    #[test]
    fn hermitian_examples() {
        let k = KaehlerStructure::standard(1);
        let u = CVector::from_vec(vec![c(1.0, 2.0)]);
        let w = CVector::from_vec(vec![c(0.5, -1.0)]);
        assert!((k.hermitian(&u, &w).unwrap() - u[0] * w[0].conj()).norm() < 1e-15);
        let i = k.embed(&v(&[1.0, 0.0])).unwrap();
        assert!((k.hermitian(&i, &i).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn q_matrix_examples() {
        assert_eq!(KaehlerStructure::standard(1).q_matrix(), DMatrix::identity(2, 2));
        let k = KaehlerStructure::new(SiegelPoint::scalar(c(1.0, 1.0)).unwrap()).unwrap();
        assert_eq!(k.q_matrix(), DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]));
    }

    #[test]
    fn siegel_validation_and_json() {
        assert!(SiegelPoint::scalar(c(0.0, -1.0)).is_err());
        let t = SiegelPoint::random(2, &mut ChaCha8Rng::seed_from_u64(3));
        let back = SiegelPoint::from_json(&t.to_json()).unwrap();
        assert!((back.matrix() - t.matrix()).norm() < 1e-15);
        assert_eq!(t.matrix(), &t.matrix().transpose());
    }

    #[test]
    fn purely_imaginary_block_diagonal() {
        let t = SiegelPoint::from_parts(&DMatrix::zeros(2, 2), &DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
        let m = KaehlerStructure::new(t).unwrap().q_matrix();
        assert_eq!(m.view((0, 2), (2, 2)).norm(), 0.0);
        assert_eq!(m.view((2, 0), (2, 2)).norm(), 0.0);
    }

    proptest! {
        #[test]
        fn compatibility_and_q(seed in any::<u64>(), n in 1usize..=3, xs in prop::collection::vec(-3.0f64..3.0, 12)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = KaehlerStructure::new(SiegelPoint::random(n, &mut rng)).unwrap();
            let x = DVector::from_iterator(2 * n, xs[..2 * n].iter().copied());
            let y = DVector::from_iterator(2 * n, xs[6..6 + 2 * n].iter().copied());
            let (xe, ye) = (k.embed(&x).unwrap(), k.embed(&y).unwrap());
            let h = k.hermitian(&xe, &ye).unwrap();
            prop_assert!((h.im - k.space().pair(&x, &y).unwrap()).abs() < 1e-10);
            prop_assert!((k.hermitian(&ye, &xe).unwrap() - h.conj()).norm() < 1e-12);
            let m = k.q_matrix();
            prop_assert!(((x.transpose() * &m * &x)[(0, 0)] - k.hermitian(&xe, &xe).unwrap().re).abs() < 1e-10);
            prop_assert!(is_positive_definite(&m, 1e-12));
            prop_assert!((&m - m.transpose()).norm() < 1e-14);
            // Schur complement determinant
            let r = k.siegel().re();
            let s = k.siegel().im();
            let si = k.s_inv();
            let schur = &r * si * &r + &s - &r * si * &s * si * &r;
            let det = si.determinant() * schur.determinant();
            prop_assert!((det - m.determinant()).abs() < 1e-9 * (1.0 + det.abs()));
            prop_assert!((m.determinant() - 1.0).abs() < 1e-9);
        }
    }
}
