//! Finitely supported noncommutative Fourier series `Σ a_h e(h)` with
//! `e(g)e(h) = α(g,h)e(g+h)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattices::{enumerate_quadratic, IntVector};
use crate::linalg::{c, CMatrix, CVector};

/// Coefficients below this modulus are treated as exact zeros.
const ZERO: f64 = 1e-300;

/// Extra factor `c_g c_h / c_{g+h} · exp(2πi gᵀ C h)` on top of `exp(πi gᵀ A_D h)`.
///
/// The coboundary values `c_g` depend on `g` through the label `(L g) mod moduli`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteTwist {
    /// Rows of the label map `L` (one row per cyclic factor).
    pub label_rows: Vec<Vec<i64>>,
    pub moduli: Vec<i64>,
    /// Real `r × r` matrix `C` for the bicharacter `exp(2πi gᵀ C h)`.
    pub bilinear: Vec<Vec<f64>>,
    /// `c` on labels; missing labels default to one.
    #[serde(with = "cochain_table")]
    pub cochain: BTreeMap<Vec<i64>, Complex64>,
}

impl FiniteTwist {
    pub fn label(&self, g: &IntVector) -> Vec<i64> {
        self.label_rows
            .iter()
            .zip(&self.moduli)
            .map(|(row, &m)| {
                let v: i64 = row.iter().zip(&g.0).map(|(a, b)| a * b).sum();
                v.rem_euclid(m)
            })
            .collect()
    }

    pub fn cochain_at(&self, g: &IntVector) -> Complex64 {
        self.cochain.get(&self.label(g)).copied().unwrap_or(c(1.0, 0.0))
    }

    fn bilinear_phase(&self, g: &IntVector, h: &IntVector) -> Complex64 {
        let mut s = 0.0;
        for (i, row) in self.bilinear.iter().enumerate() {
            for (j, cij) in row.iter().enumerate() {
                s += g.0[i] as f64 * cij * h.0[j] as f64;
            }
        }
        Complex64::from_polar(1.0, 2.0 * PI * s)
    }
}

mod cochain_table {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row {
        label: Vec<i64>,
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<Vec<i64>, Complex64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Row> = m.iter().map(|(k, v)| Row { label: k.clone(), re: v.re, im: v.im }).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<Vec<i64>, Complex64>, D::Error> {
        let rows = Vec::<Row>::deserialize(d)?;
        Ok(rows.into_iter().map(|r| (r.label, c(r.re, r.im))).collect())
    }
}

/// `α(g,h) = exp(πi gᵀ A_D h)`, optionally multiplied by a [`FiniteTwist`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationForm {
    a_d: DMatrix<f64>,
    twist: Option<FiniteTwist>,
}

impl QuantizationForm {
    pub fn new(a_d: DMatrix<f64>) -> Result<Self> {
        if !a_d.is_square() {
            return Err(Error::DimensionMismatch { expected: a_d.nrows(), found: a_d.ncols() });
        }
        for i in 0..a_d.nrows() {
            for j in 0..a_d.ncols() {
                if a_d[(i, j)] != -a_d[(j, i)] {
                    return Err(Error::NotAntisymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { a_d, twist: None })
    }

    /// `A_D = [[0, θ], [−θ, 0]]`.
    pub fn rotation(theta: f64) -> Self {
        Self::new(DMatrix::from_row_slice(2, 2, &[0.0, theta, -theta, 0.0])).expect("antisymmetric")
    }

    pub fn with_twist(mut self, twist: FiniteTwist) -> Result<Self> {
        let r = self.rank();
        if twist.bilinear.len() != r
            || twist.bilinear.iter().any(|row| row.len() != r)
            || twist.label_rows.len() != twist.moduli.len()
            || twist.label_rows.iter().any(|row| row.len() != r)
            || twist.moduli.iter().any(|&m| m <= 0)
        {
            return Err(Error::DimensionMismatch { expected: r, found: twist.bilinear.len() });
        }
        self.twist = Some(twist);
        Ok(self)
    }

    pub fn rank(&self) -> usize {
        self.a_d.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a_d
    }

    pub fn twist(&self) -> Option<&FiniteTwist> {
        self.twist.as_ref()
    }

    /// `gᵀ A_D h`.
    pub fn exponent(&self, g: &IntVector, h: &IntVector) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rank() {
            if g.0[i] == 0 {
                continue;
            }
            for j in 0..self.rank() {
                s += g.0[i] as f64 * self.a_d[(i, j)] * h.0[j] as f64;
            }
        }
        s
    }

    pub fn alpha(&self, g: &IntVector, h: &IntVector) -> Complex64 {
        let base = Complex64::from_polar(1.0, PI * self.exponent(g, h));
        match &self.twist {
            None => base,
            Some(t) => {
                let sum = g + h;
                base * t.bilinear_phase(g, h) * t.cochain_at(g) * t.cochain_at(h) / t.cochain_at(&sum)
            }
        }
    }

    fn check(&self, g: &IntVector) -> Result<()> {
        if g.len() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), found: g.len() });
        }
        Ok(())
    }
}

/// Point of `T(D, 1)` acting by `a_h ↦ exp(wᵀh) a_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusCharacterAction {
    pub w: CVector,
}

impl TorusCharacterAction {
    pub fn new(w: CVector) -> Self {
        Self { w }
    }

    pub fn trivial(rank: usize) -> Self {
        Self { w: CVector::zeros(rank) }
    }

    pub fn rank(&self) -> usize {
        self.w.len()
    }

    /// `exp(wᵀh)`.
    pub fn value(&self, h: &IntVector) -> Complex64 {
        self.log_value(h).exp()
    }

    pub fn log_value(&self, h: &IntVector) -> Complex64 {
        self.w.iter().zip(&h.0).map(|(w, &k)| w * k as f64).sum()
    }

    /// Pointwise product of characters.
    pub fn compose(&self, other: &TorusCharacterAction) -> TorusCharacterAction {
        TorusCharacterAction { w: &self.w + &other.w }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusElement {
    form: QuantizationForm,
    terms: BTreeMap<IntVector, Complex64>,
}

impl TorusElement {
    pub fn zero(form: QuantizationForm) -> Self {
        Self { form, terms: BTreeMap::new() }
    }

    /// `coef · e(h)`.
    pub fn monomial(form: QuantizationForm, h: IntVector, coef: Complex64) -> Result<Self> {
        let mut out = Self::zero(form);
        out.add_term(h, coef)?;
        Ok(out)
    }

    pub fn one(form: QuantizationForm) -> Self {
        let r = form.rank();
        Self::monomial(form, IntVector::zeros(r), c(1.0, 0.0)).expect("rank matches")
    }

    pub fn from_terms(form: QuantizationForm, terms: impl IntoIterator<Item = (IntVector, Complex64)>) -> Result<Self> {
        let mut out = Self::zero(form);
        for (h, a) in terms {
            out.add_term(h, a)?;
        }
        Ok(out)
    }

    pub fn form(&self) -> &QuantizationForm {
        &self.form
    }

    pub fn terms(&self) -> &BTreeMap<IntVector, Complex64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, h: &IntVector) -> Complex64 {
        self.terms.get(h).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, h: IntVector, coef: Complex64) -> Result<()> {
        self.form.check(&h)?;
        let entry = self.terms.entry(h).or_default();
        *entry += coef;
        let remove = entry.norm() < ZERO;
        if remove {
            self.terms.retain(|_, v| v.norm() >= ZERO);
        }
        Ok(())
    }

    pub fn scale(&self, k: Complex64) -> TorusElement {
        let terms = self
            .terms
            .iter()
            .map(|(h, a)| (h.clone(), a * k))
            .filter(|(_, a)| a.norm() >= ZERO)
            .collect();
        TorusElement { form: self.form.clone(), terms }
    }

    pub fn add(&self, other: &TorusElement) -> Result<TorusElement> {
        self.same_form(other)?;
        let mut out = self.clone();
        for (h, a) in &other.terms {
            out.add_term(h.clone(), *a)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TorusElement) -> Result<TorusElement> {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    /// Largest coefficient modulus (zero for the empty series).
    pub fn sup_norm(&self) -> f64 {
        self.terms.values().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficientwise difference over the union of supports.
    pub fn max_abs_diff(&self, other: &TorusElement) -> f64 {
        let mut m: f64 = 0.0;
        for (h, a) in &self.terms {
            m = m.max((a - other.coefficient(h)).norm());
        }
        for (h, b) in &other.terms {
            if !self.terms.contains_key(h) {
                m = m.max(b.norm());
            }
        }
        m
    }

    /// Keeps only the terms whose index satisfies `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&IntVector) -> bool) -> TorusElement {
        let terms = self.terms.iter().filter(|(h, _)| keep(h)).map(|(h, a)| (h.clone(), *a)).collect();
        TorusElement { form: self.form.clone(), terms }
    }

    fn same_form(&self, other: &TorusElement) -> Result<()> {
        if self.form != other.form {
            return Err(Error::FormMismatch);
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let json = TorusJson {
            a_d: self.form.a_d.row_iter().map(|r| r.iter().copied().collect()).collect(),
            twist: self.form.twist.clone(),
            terms: self
                .terms
                .iter()
                .map(|(h, a)| TermJson { h: h.0.clone(), re: a.re, im: a.im })
                .collect(),
        };
        serde_json::to_value(json).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let json: TorusJson = serde_json::from_value(v.clone())?;
        let r = json.a_d.len();
        if json.a_d.iter().any(|row| row.len() != r) {
            return Err(Error::DimensionMismatch { expected: r, found: json.a_d.first().map_or(0, |x| x.len()) });
        }
        let flat: Vec<f64> = json.a_d.iter().flatten().copied().collect();
        let mut form = QuantizationForm::new(DMatrix::from_row_slice(r, r, &flat))?;
        if let Some(t) = json.twist {
            form = form.with_twist(t)?;
        }
        Self::from_terms(form, json.terms.into_iter().map(|t| (IntVector(t.h), c(t.re, t.im))))
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    h: Vec<i64>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct TorusJson {
    #[serde(rename = "A_D")]
    a_d: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    twist: Option<FiniteTwist>,
    terms: Vec<TermJson>,
}

pub fn multiply(a: &TorusElement, b: &TorusElement) -> Result<TorusElement> {
    a.same_form(b)?;
    let mut out = TorusElement::zero(a.form.clone());
    for (g, x) in &a.terms {
        for (h, y) in &b.terms {
            let coef = x * y * a.form.alpha(g, h);
            *out.terms.entry(g + h).or_default() += coef;
        }
    }
    out.terms.retain(|_, v| v.norm() >= ZERO);
    Ok(out)
}

/// `Σ ā_h e(h)⁻¹` with `e(h)⁻¹ = α(h,−h)⁻¹ e(−h)`.
pub fn star(a: &TorusElement) -> TorusElement {
    let terms = a
        .terms
        .iter()
        .map(|(h, x)| {
            let neg = -h;
            let inv = a.form.alpha(h, &neg).inv();
            (neg, x.conj() * inv)
        })
        .collect();
    TorusElement { form: a.form.clone(), terms }
}

pub fn apply_character(x: &TorusCharacterAction, a: &TorusElement) -> Result<TorusElement> {
    if x.rank() != a.form.rank() {
        return Err(Error::DimensionMismatch { expected: a.form.rank(), found: x.rank() });
    }
    let terms = a
        .terms
        .iter()
        .map(|(h, v)| (h.clone(), v * x.value(h)))
        .filter(|(_, v)| v.norm() >= ZERO)
        .collect();
    Ok(TorusElement { form: a.form.clone(), terms })
}

/// Finite section of left multiplication on `ℓ²` of the lattice.
#[derive(Debug, Clone)]
pub struct RegularSection {
    /// Basis indices in lexicographic order.
    pub indices: Vec<IntVector>,
    pub matrix: CMatrix,
    /// Positions `k` whose translates `k ± h` stay inside for every `h` in the support.
    pub interior: Vec<usize>,
}

impl RegularSection {
    /// Sub-block on the interior positions.
    pub fn interior_block(&self) -> CMatrix {
        let n = self.interior.len();
        CMatrix::from_fn(n, n, |i, j| self.matrix[(self.interior[i], self.interior[j])])
    }
}

/// `a · δ_k = Σ_h a_h α(h,k) δ_{h+k}`, on the indices with `‖n‖ ≤ radius` in lattice coordinates.
pub fn regular_rep_matrix(a: &TorusElement, radius: f64) -> Result<RegularSection> {
    let r = a.form.rank();
    let indices = enumerate_quadratic(&DMatrix::identity(r, r), radius)?;
    if indices.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let pos: BTreeMap<&IntVector, usize> = indices.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let n = indices.len();
    let mut matrix = CMatrix::zeros(n, n);
    for (col, k) in indices.iter().enumerate() {
        for (h, x) in &a.terms {
            if let Some(&row) = pos.get(&(h + k)) {
                matrix[(row, col)] += x * a.form.alpha(h, k);
            }
        }
    }
    let interior = indices
        .iter()
        .enumerate()
        .filter(|(_, k)| a.terms.keys().all(|h| pos.contains_key(&(*k + h)) && pos.contains_key(&(*k - h))))
        .map(|(i, _)| i)
        .collect();
    Ok(RegularSection { indices, matrix, interior })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(v: &[i64]) -> IntVector {
        IntVector(v.to_vec())
    }

    fn twisted() -> QuantizationForm {
        let mut cochain = BTreeMap::new();
        cochain.insert(vec![1, 1], c(0.0, 1.0));
        QuantizationForm::rotation(0.5)
            .with_twist(FiniteTwist {
                label_rows: vec![vec![1, 0], vec![0, 1]],
                moduli: vec![2, 2],
                bilinear: vec![vec![0.0, 0.5], vec![0.0, 0.0]],
                cochain,
            })
            .unwrap()
    }

    #[test]
    fn rotation_commutation() {
        let theta = 0.3;
        let f = QuantizationForm::rotation(theta);
        let e10 = TorusElement::monomial(f.clone(), iv(&[1, 0]), c(1.0, 0.0)).unwrap();
        let e01 = TorusElement::monomial(f.clone(), iv(&[0, 1]), c(1.0, 0.0)).unwrap();
        let ab = multiply(&e10, &e01).unwrap().coefficient(&iv(&[1, 1]));
        let ba = multiply(&e01, &e10).unwrap().coefficient(&iv(&[1, 1]));
        assert!((ab - Complex64::from_polar(1.0, PI * theta)).norm() < 1e-15);
        assert!((ba - Complex64::from_polar(1.0, -PI * theta)).norm() < 1e-15);
        assert!((ab / ba - Complex64::from_polar(1.0, 2.0 * PI * theta)).norm() < 1e-15);
    }

    #[test]
    fn identity_and_star_basics() {
        let f = QuantizationForm::rotation(0.7);
        let one = TorusElement::one(f.clone());
        assert_eq!(star(&one), one);
        let x = TorusElement::monomial(f.clone(), iv(&[2, -1]), c(1.0, 2.0)).unwrap();
        assert_eq!(multiply(&one, &x).unwrap(), x);
        let s = star(&x);
        assert!((s.coefficient(&iv(&[-2, 1])) - c(1.0, -2.0)).norm() < 1e-15);
        assert!(matches!(
            multiply(&x, &TorusElement::one(QuantizationForm::rotation(0.1))),
            Err(Error::FormMismatch)
        ));
    }

    #[test]
    fn zero_coefficients_dropped() {
        let f = QuantizationForm::rotation(0.1);
        let mut x = TorusElement::monomial(f, iv(&[1, 0]), c(1.0, 0.0)).unwrap();
        x.add_term(iv(&[1, 0]), c(-1.0, 0.0)).unwrap();
        assert!(x.is_empty());
    }

    #[test]
    fn regular_rep_identity_and_monomial() {
        let f = QuantizationForm::rotation(0.4);
        let sec = regular_rep_matrix(&TorusElement::one(f.clone()), 2.0).unwrap();
        assert_eq!(sec.matrix, CMatrix::identity(sec.indices.len(), sec.indices.len()));
        let e = TorusElement::monomial(f, iv(&[1, 0]), c(1.0, 0.0)).unwrap();
        let sec = regular_rep_matrix(&e, 3.0).unwrap();
        assert!(!sec.interior.is_empty());
        for &col in &sec.interior {
            let nonzero: Vec<_> = (0..sec.indices.len()).filter(|&r| sec.matrix[(r, col)].norm() > 0.0).collect();
            assert_eq!(nonzero.len(), 1);
            assert!((sec.matrix[(nonzero[0], col)].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn json_round_trip() {
        let x = TorusElement::from_terms(twisted(), [(iv(&[1, 0]), c(0.5, -1.0)), (iv(&[0, 3]), c(2.0, 0.0))]).unwrap();
        assert_eq!(TorusElement::from_json(&x.to_json()).unwrap(), x);
    }

    fn arb_iv() -> impl Strategy<Value = IntVector> {
        prop::collection::vec(-4i64..=4, 2).prop_map(IntVector)
    }

    fn arb_element(form: QuantizationForm) -> impl Strategy<Value = TorusElement> {
        prop::collection::vec((arb_iv(), -1.0f64..1.0, -1.0f64..1.0), 1..5).prop_map(move |ts| {
            TorusElement::from_terms(form.clone(), ts.into_iter().map(|(h, a, b)| (h, c(a, b)))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn alpha_bicharacter(theta in -2.0f64..2.0, g in arb_iv(), g2 in arb_iv(), h in arb_iv()) {
            let f = QuantizationForm::rotation(theta);
            prop_assert!((f.alpha(&g, &h) * f.alpha(&h, &g) - c(1.0, 0.0)).norm() < 1e-12);
            prop_assert!((f.alpha(&g, &g) - c(1.0, 0.0)).norm() < 1e-12);
            prop_assert!((f.alpha(&(&g + &g2), &h) - f.alpha(&g, &h) * f.alpha(&g2, &h)).norm() < 1e-12);
            prop_assert!((f.alpha(&g, &h).norm() - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn associativity(a in arb_element(twisted()), b in arb_element(twisted()), d in arb_element(twisted())) {
            let l = multiply(&multiply(&a, &b).unwrap(), &d).unwrap();
            let r = multiply(&a, &multiply(&b, &d).unwrap()).unwrap();
            prop_assert!(l.max_abs_diff(&r) < 1e-12);
        }

        #[test]
        fn star_antihomomorphism(a in arb_element(twisted()), b in arb_element(twisted())) {
            prop_assert!(star(&star(&a)).max_abs_diff(&a) < 1e-12);
            let l = star(&multiply(&a, &b).unwrap());
            let r = multiply(&star(&b), &star(&a)).unwrap();
            prop_assert!(l.max_abs_diff(&r) < 1e-12);
        }

        #[test]
        fn character_multiplicative(a in arb_element(QuantizationForm::rotation(0.3)), b in arb_element(QuantizationForm::rotation(0.3)),
                                    w in prop::collection::vec((-0.5f64..0.5, -3.0f64..3.0), 2)) {
            let x = TorusCharacterAction::new(CVector::from_iterator(2, w.into_iter().map(|(re, im)| c(re, im))));
            let l = apply_character(&x, &multiply(&a, &b).unwrap()).unwrap();
            let r = multiply(&apply_character(&x, &a).unwrap(), &apply_character(&x, &b).unwrap()).unwrap();
            prop_assert!(l.max_abs_diff(&r) < 1e-9 * (1.0 + l.sup_norm()));
        }

        #[test]
        fn star_section_is_adjoint(a in arb_element(twisted())) {
            let m = regular_rep_matrix(&a, 4.0).unwrap();
            let s = regular_rep_matrix(&star(&a), 4.0).unwrap();
            let diff = (s.interior_block() - m.interior_block().adjoint()).norm();
            prop_assert!(diff < 1e-12);
            let sa = a.add(&star(&a)).unwrap();
            let h = regular_rep_matrix(&sa, 4.0).unwrap().interior_block();
            prop_assert!((&h - h.adjoint()).norm() < 1e-12);
        }
    }
}
