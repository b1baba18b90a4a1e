//! Integer lattices embedded in symplectic real vector spaces.
//!
//! A [`LatticeEmbedding`] is a real `2N × r` generator matrix whose columns
//! are the images of the basis of `ℤʳ`. When the generators (and the form)
//! are rational the exact data is kept alongside, so duality and Gram
//! identities can be checked without rounding.

use std::ops::{Add, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, RatMatrix, Rational};
use crate::linalg::{guarded_inverse, min_eigenvalue};

/// Coordinates of a lattice point with respect to the lattice basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntVector(pub Vec<i64>);

impl IntVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = vec![0; len];
        v[i] = 1;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn scale(&self, k: i64) -> Self {
        Self(self.0.iter().map(|x| x * k).collect())
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn to_f64(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.0.iter().map(|&x| x as f64))
    }
}

impl From<Vec<i64>> for IntVector {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

impl From<&[i64]> for IntVector {
    fn from(v: &[i64]) -> Self {
        Self(v.to_vec())
    }
}

impl Add for &IntVector {
    type Output = IntVector;
    fn add(self, rhs: &IntVector) -> IntVector {
        IntVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Add for IntVector {
    type Output = IntVector;
    fn add(self, rhs: IntVector) -> IntVector {
        &self + &rhs
    }
}

impl Sub for &IntVector {
    type Output = IntVector;
    fn sub(self, rhs: &IntVector) -> IntVector {
        IntVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &IntVector {
    type Output = IntVector;
    fn neg(self) -> IntVector {
        IntVector(self.0.iter().map(|a| -a).collect())
    }
}

impl std::fmt::Display for IntVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// `ℝ^{2N}` with a nondegenerate antisymmetric form `A(x, y) = xᵀ A y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    n: usize,
    form: DMatrix<f64>,
    exact: Option<RatMatrix>,
}

impl SymplecticSpace {
    /// `A(x, y) = x₁ᵀy₂ − x₂ᵀy₁`.
    pub fn standard(n: usize) -> Self {
        let exact = RatMatrix::standard_symplectic(n);
        Self { n, form: exact.to_f64(), exact: Some(exact) }
    }

    pub fn from_matrix(n: usize, form: DMatrix<f64>) -> Result<Self> {
        check_square(&form, 2 * n)?;
        for i in 0..2 * n {
            for j in 0..2 * n {
                if form[(i, j)] != -form[(j, i)] {
                    return Err(Error::NotAntisymmetric { row: i, col: j });
                }
            }
        }
        if form.determinant().abs() <= 0.0 || n == 0 {
            return Err(Error::Degenerate("symplectic form is degenerate".into()));
        }
        Ok(Self { n, form, exact: None })
    }

    pub fn from_exact(n: usize, form: RatMatrix) -> Result<Self> {
        if form.nrows() != 2 * n || form.ncols() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: form.nrows() });
        }
        if !form.is_antisymmetric() {
            return Err(Error::NotAntisymmetric { row: 0, col: 0 });
        }
        if n == 0 || form.determinant() == Some(Rational::from_integer(0)) {
            return Err(Error::Degenerate("symplectic form is degenerate".into()));
        }
        Ok(Self { n, form: form.to_f64(), exact: Some(form) })
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn exact_form(&self) -> Option<&RatMatrix> {
        self.exact.as_ref()
    }

    pub fn is_standard(&self) -> bool {
        self.exact.as_ref() == Some(&RatMatrix::standard_symplectic(self.n))
            || self.form == RatMatrix::standard_symplectic(self.n).to_f64()
    }

    pub fn pair(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        for v in [x, y] {
            if v.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
            }
        }
        Ok((x.transpose() * &self.form * y)[(0, 0)])
    }
}

/// Gram matrix `A_D = Gᵀ A G` of the symplectic form on a lattice basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GramForm {
    matrix: DMatrix<f64>,
    exact: Option<RatMatrix>,
}

impl GramForm {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        Self { matrix, exact: None }
    }

    pub fn from_exact(exact: RatMatrix) -> Self {
        Self { matrix: exact.to_f64(), exact: Some(exact) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn exact(&self) -> Option<&RatMatrix> {
        self.exact.as_ref()
    }

    pub fn rank(&self) -> usize {
        self.matrix.nrows()
    }

    /// `A! = −A_D⁻¹`, the Gram form of the dual lattice in the basis `A(g_k, h_l) = δ_kl`.
    pub fn morita_dual_form(&self) -> Result<GramForm> {
        if let Some(ex) = &self.exact {
            let inv = ex
                .inverse()
                .ok_or_else(|| Error::Degenerate("Gram form is singular".into()))?;
            return Ok(GramForm::from_exact(inv.neg()));
        }
        let inv = guarded_inverse(&self.matrix)?;
        Ok(GramForm::from_matrix(-inv))
    }
}

/// An embedded lattice `D = G·ℤʳ ⊂ ℝ^{2N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeEmbedding {
    space: SymplecticSpace,
    generators: DMatrix<f64>,
    exact: Option<RatMatrix>,
}

impl LatticeEmbedding {
    pub fn new(space: SymplecticSpace, generators: DMatrix<f64>) -> Result<Self> {
        if generators.nrows() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: generators.nrows() });
        }
        let r = generators.ncols();
        if r == 0 || r > space.dim() {
            return Err(Error::Degenerate(format!("lattice rank {r} out of range")));
        }
        let gtg = generators.transpose() * &generators;
        if min_eigenvalue(&gtg) <= 1e-12 * gtg.norm().max(1.0) {
            return Err(Error::Degenerate("generators are linearly dependent".into()));
        }
        Ok(Self { space, generators, exact: None })
    }

    pub fn from_exact(space: SymplecticSpace, generators: RatMatrix) -> Result<Self> {
        let mut lattice = Self::new(space, generators.to_f64())?;
        lattice.exact = Some(generators);
        Ok(lattice)
    }

    /// `ℤ^{2N}` in the standard symplectic space.
    pub fn standard(n: usize) -> Self {
        Self::from_exact(SymplecticSpace::standard(n), RatMatrix::identity(2 * n))
            .expect("identity generators are valid")
    }

    /// Lattice spanned by the columns of a rational diagonal matrix in the standard space.
    pub fn diagonal(n: usize, diag: &[Rational]) -> Result<Self> {
        if diag.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: diag.len() });
        }
        let g = RatMatrix::from_fn(2 * n, 2 * n, |i, j| if i == j { diag[i] } else { Rational::from_integer(0) });
        Self::from_exact(SymplecticSpace::standard(n), g)
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn rank(&self) -> usize {
        self.generators.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.generators.nrows()
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn exact_generators(&self) -> Option<&RatMatrix> {
        self.exact.as_ref()
    }

    pub fn point(&self, h: &IntVector) -> DVector<f64> {
        &self.generators * h.to_f64()
    }

    pub fn gram(&self) -> GramForm {
        if let (Some(g), Some(a)) = (&self.exact, self.space.exact_form()) {
            let gram = g.transpose().mul(&a.mul(g).expect("shapes")).expect("shapes");
            return GramForm::from_exact(gram);
        }
        GramForm::from_matrix(self.generators.transpose() * self.space.form() * &self.generators)
    }

    /// `D! = {x | A(x, y) ∈ ℤ for all y ∈ D}`, with basis `g_k` satisfying `A(g_k, h_l) = δ_kl`.
    ///
    /// From `G!ᵀ A G = I` one gets `G! = ((A G)ᵀ)⁻¹`.
    pub fn dual_lattice(&self) -> Result<LatticeEmbedding> {
        if self.rank() != self.ambient_dim() {
            return Err(Error::Degenerate("dual lattice requires full rank".into()));
        }
        if let (Some(g), Some(a)) = (&self.exact, self.space.exact_form()) {
            let ag = a.mul(g)?;
            let dual = ag
                .transpose()
                .inverse()
                .ok_or_else(|| Error::Degenerate("Gram form is singular".into()))?;
            return LatticeEmbedding::from_exact(self.space.clone(), dual);
        }
        let ag = self.space.form() * &self.generators;
        let dual = guarded_inverse(&ag.transpose())?;
        LatticeEmbedding::new(self.space.clone(), dual)
    }

    /// All `n` with `(G n)ᵀ M (G n) ≤ radius²`, in lexicographic order.
    ///
    /// Scans the box `|n_i| ≤ radius / √λ_min(Gᵀ M G)`.
    pub fn enumerate(&self, radius: f64, norm: &DMatrix<f64>) -> Result<Vec<IntVector>> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRadius(radius));
        }
        check_square(norm, self.ambient_dim())?;
        let pulled = self.generators.transpose() * norm * &self.generators;
        enumerate_quadratic(&pulled, radius)
    }

    /// Covolume in the measure where `ℤ^{2N}` has covolume one.
    pub fn covolume(&self) -> Result<f64> {
        if self.rank() != self.ambient_dim() {
            return Err(Error::Degenerate("covolume requires rank 2N".into()));
        }
        if let Some(g) = &self.exact {
            return Ok(crate::exact::to_f64(&g.determinant().expect("square")).abs());
        }
        Ok(self.generators.determinant().abs())
    }

    /// True when both embeddings generate the same subgroup of the ambient space.
    pub fn same_subgroup(&self, other: &LatticeEmbedding) -> bool {
        if self.rank() != other.rank() || self.ambient_dim() != other.ambient_dim() {
            return false;
        }
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            if a.nrows() == a.ncols() {
                let (Some(ai), Some(bi)) = (a.inverse(), b.inverse()) else {
                    return false;
                };
                return ai.mul(b).map(|m| m.is_integral()).unwrap_or(false)
                    && bi.mul(a).map(|m| m.is_integral()).unwrap_or(false);
            }
        }
        let Ok(ai) = guarded_inverse(&self.generators) else {
            return false;
        };
        let Ok(bi) = guarded_inverse(&other.generators) else {
            return false;
        };
        let near_int = |m: DMatrix<f64>| m.iter().all(|x| (x - x.round()).abs() < 1e-9);
        near_int(&ai * &other.generators) && near_int(&bi * &self.generators)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let spec: LatticeJson = serde_json::from_value(v.clone())?;
        spec.build()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let n = self.space.half_dim();
        let columns = (0..self.rank())
            .map(|j| match &self.exact {
                Some(g) => g.column(j).iter().map(|x| Entry::Text(format_rational(x))).collect(),
                None => self.generators.column(j).iter().map(|&x| Entry::Float(x)).collect(),
            })
            .collect();
        let a = if self.space.is_standard() {
            None
        } else {
            Some(match self.space.exact_form() {
                Some(a) => (0..a.nrows())
                    .map(|i| (0..a.ncols()).map(|j| Entry::Text(format_rational(&a[(i, j)]))).collect())
                    .collect(),
                None => self
                    .space
                    .form()
                    .row_iter()
                    .map(|r| r.iter().map(|&x| Entry::Float(x)).collect())
                    .collect(),
            })
        };
        serde_json::to_value(LatticeJson { n, a, generators: columns }).expect("serializable")
    }
}

/// All integer vectors with `nᵀ P n ≤ radius²` for positive definite `P`, lexicographically.
pub fn enumerate_quadratic(pulled: &DMatrix<f64>, radius: f64) -> Result<Vec<IntVector>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidRadius(radius));
    }
    let r = pulled.nrows();
    let lambda = min_eigenvalue(pulled);
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::NotPositiveDefinite("enumeration norm".into()));
    }
    let bound = (radius / lambda.sqrt()).floor() as i64;
    let r2 = radius * radius;
    let mut out = Vec::new();
    let mut n = vec![-bound; r];
    let mut x = DVector::zeros(r);
    loop {
        for (xi, &ni) in x.iter_mut().zip(&n) {
            *xi = ni as f64;
        }
        let q = (x.transpose() * pulled * &x)[(0, 0)];
        if q <= r2 {
            out.push(IntVector(n.clone()));
        }
        let mut k = r;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            n[k] += 1;
            if n[k] <= bound {
                break;
            }
            n[k] = -bound;
        }
    }
}

fn check_square(m: &DMatrix<f64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

/// Matrix entry in lattice JSON: integer, float, or a `"p/q"` string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Entry {
    pub(crate) fn exact(&self) -> Result<Option<Rational>> {
        match self {
            Entry::Int(i) => Ok(Some(Rational::from_integer(*i as i128))),
            Entry::Float(f) if f.fract() == 0.0 && f.abs() < 1e15 => Ok(Some(Rational::from_integer(*f as i128))),
            Entry::Float(_) => Ok(None),
            Entry::Text(s) => parse_rational(s).map(Some),
        }
    }

    pub(crate) fn value(&self) -> Result<f64> {
        match self {
            Entry::Int(i) => Ok(*i as f64),
            Entry::Float(f) => Ok(*f),
            Entry::Text(s) => parse_rational(s).map(|r| crate::exact::to_f64(&r)),
        }
    }
}

/// `{"N": int, "A": [[...]] (optional), "generators": [[...]] (columns)}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeJson {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<Entry>>>,
    pub generators: Vec<Vec<Entry>>,
}

impl LatticeJson {
    pub fn build(&self) -> Result<LatticeEmbedding> {
        let dim = 2 * self.n;
        let space = match &self.a {
            None => SymplecticSpace::standard(self.n),
            Some(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::DimensionMismatch { expected: dim, found: rows.len() });
                }
                match exact_matrix(rows, dim, dim, |i, j| &rows[i][j])? {
                    Some(m) => SymplecticSpace::from_exact(self.n, m)?,
                    None => SymplecticSpace::from_matrix(self.n, float_matrix(dim, dim, |i, j| &rows[i][j])?)?,
                }
            }
        };
        let cols = &self.generators;
        if cols.iter().any(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: cols.first().map_or(0, |c| c.len()) });
        }
        let r = cols.len();
        match (exact_matrix(cols, dim, r, |i, j| &cols[j][i])?, space.exact_form().is_some()) {
            (Some(g), true) => LatticeEmbedding::from_exact(space, g),
            _ => LatticeEmbedding::new(space, float_matrix(dim, r, |i, j| &cols[j][i])?),
        }
    }
}

fn exact_matrix<'a>(
    _src: &'a [Vec<Entry>],
    rows: usize,
    cols: usize,
    get: impl Fn(usize, usize) -> &'a Entry,
) -> Result<Option<RatMatrix>> {
    let mut m = RatMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            match get(i, j).exact()? {
                Some(x) => m[(i, j)] = x,
                None => return Ok(None),
            }
        }
    }
    Ok(Some(m))
}

fn float_matrix<'a>(rows: usize, cols: usize, get: impl Fn(usize, usize) -> &'a Entry) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = get(i, j).value()?;
        }
    }
    Ok(m)
}
