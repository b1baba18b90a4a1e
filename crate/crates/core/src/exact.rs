//! Small dense matrices over the rationals.
//!
//! Used wherever an identity is exact for rational input: dual lattices,
//! Gram forms and their inverses, coset bookkeeping.

use nalgebra::DMatrix;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        t.trim()
            .parse::<i128>()
            .map_err(|_| Error::Parse(format!("invalid rational `{s}`")))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let q = parse_int(q)?;
            if q == 0 {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            Ok(Rational::new(parse_int(p)?, q))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Row-major rational matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_integers(rows: usize, cols: usize, entries: &[i64]) -> Self {
        Self::from_fn(rows, cols, |i, j| Rational::from_integer(entries[i * cols + j] as i128))
    }

    /// Standard symplectic matrix `[[0, I], [-I, 0]]` of size `2n`.
    pub fn standard_symplectic(n: usize) -> Self {
        Self::from_fn(2 * n, 2 * n, |i, j| {
            if j == i + n && i < n {
                Rational::one()
            } else if i == j + n && j < n {
                -Rational::one()
            } else {
                Rational::zero()
            }
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: rhs.rows });
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(Rational::zero(), |acc, k| acc + self[(i, k)] * rhs[(k, j)])
        }))
    }

    pub fn neg(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| -*x).collect() }
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Gauss-Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for r in 0..n {
                if r != col && !a[(r, col)].is_zero() {
                    let f = a[(r, col)];
                    for j in 0..n {
                        let (x, y) = (a[(col, j)], inv[(col, j)]);
                        a[(r, j)] -= f * x;
                        inv[(r, j)] -= f * y;
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn determinant(&self) -> Option<Rational> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rational::one();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !a[(r, col)].is_zero()) else {
                return Some(Rational::zero());
            };
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for r in col + 1..n {
                let f = a[(r, col)] / p;
                if !f.is_zero() {
                    for j in col..n {
                        let x = a[(col, j)];
                        a[(r, j)] -= f * x;
                    }
                }
            }
        }
        Some(det)
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self[(i, j)] == -self[(j, i)]))
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    pub fn max_abs(&self) -> Rational {
        self.data.iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(&self[(i, j)]))
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("3/6").unwrap(), Rational::new(1, 2));
        assert_eq!(parse_rational("-4").unwrap(), Rational::from_integer(-4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(format_rational(&Rational::new(-3, 4)), "-3/4");
        assert_eq!(format_rational(&Rational::from_integer(5)), "5");
    }

    #[test]
    fn inverse_and_determinant() {
        let a = RatMatrix::from_integers(2, 2, &[0, 2, -2, 0]);
        let inv = a.inverse().unwrap();
        assert_eq!(inv[(0, 1)], Rational::new(-1, 2));
        assert_eq!(inv[(1, 0)], Rational::new(1, 2));
        assert_eq!(a.determinant().unwrap(), Rational::from_integer(4));
        assert_eq!(a.mul(&inv).unwrap(), RatMatrix::identity(2));
        let singular = RatMatrix::from_integers(2, 2, &[1, 2, 2, 4]);
        assert!(singular.inverse().is_none());
        assert_eq!(singular.determinant().unwrap(), Rational::zero());
    }

    #[test]
    fn symplectic_is_antisymmetric() {
        let j = RatMatrix::standard_symplectic(2);
        assert!(j.is_antisymmetric());
        assert_eq!(j.determinant().unwrap(), Rational::one());
    }
}
