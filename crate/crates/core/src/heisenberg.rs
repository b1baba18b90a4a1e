//! Central extensions, the torus Heisenberg group and multipliers.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{RatMatrix, Rational};
use crate::lattices::{enumerate_quadratic, IntVector, SymplecticSpace};
use crate::linalg::{c, symmetric_eigenvalues, CVector};
use crate::torus_algebra::{apply_character, multiply, QuantizationForm, TorusCharacterAction, TorusElement};

/// Eigenvalue threshold for negative definiteness in [`is_ample`].
pub const AMPLE_TOLERANCE: f64 = 1e-10;

/// `ψ(x,y) = exp(πi A(x,y))`.
pub fn symplectic_cocycle(space: &SymplecticSpace) -> impl Fn(&DVector<f64>, &DVector<f64>) -> Complex64 + '_ {
    move |x, y| {
        let a = (x.transpose() * space.form() * y)[(0, 0)];
        Complex64::from_polar(1.0, std::f64::consts::PI * a)
    }
}

/// `ψ(x,y)ψ(x+y,z) = ψ(x,y+z)ψ(y,z)` on every sample triple, within `1e−12`.
pub fn cocycle_check<F>(psi: F, samples: &[(DVector<f64>, DVector<f64>, DVector<f64>)]) -> bool
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> Complex64,
{
    samples.iter().all(|(x, y, z)| {
        let lhs = psi(x, y) * psi(&(x + y), z);
        let rhs = psi(x, &(y + z)) * psi(y, z);
        (lhs - rhs).norm() <= 1e-12
    })
}

/// `ε(x,y) = ψ(x,y)/ψ(y,x)`.
pub fn epsilon<F>(psi: F, x: &DVector<f64>, y: &DVector<f64>) -> Complex64
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> Complex64,
{
    psi(x, y) / psi(y, x)
}

/// Element `(λ, x)` of the extension of `ℝ^{2N}` by the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorHeisenbergElement {
    pub lambda: Complex64,
    pub x: DVector<f64>,
}

impl VectorHeisenbergElement {
    pub fn new(lambda: Complex64, x: DVector<f64>) -> Result<Self> {
        if (lambda.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Incompatible(format!("|λ| = {} is not 1", lambda.norm())));
        }
        Ok(Self { lambda, x })
    }

    pub fn identity(dim: usize) -> Self {
        Self { lambda: c(1.0, 0.0), x: DVector::zeros(dim) }
    }

    /// `(1, x)`.
    pub fn translation(x: DVector<f64>) -> Self {
        Self { lambda: c(1.0, 0.0), x }
    }
}

/// `(λ,x)(μ,y) = (λμψ(x,y), x+y)`.
pub fn compose_vector<F>(a: &VectorHeisenbergElement, b: &VectorHeisenbergElement, psi: F) -> Result<VectorHeisenbergElement>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> Complex64,
{
    if a.x.len() != b.x.len() {
        return Err(Error::DimensionMismatch { expected: a.x.len(), found: b.x.len() });
    }
    Ok(VectorHeisenbergElement { lambda: a.lambda * b.lambda * psi(&a.x, &b.x), x: &a.x + &b.x })
}

/// `(λ⁻¹ψ(x,−x)⁻¹, −x)`.
pub fn inverse_vector<F>(a: &VectorHeisenbergElement, psi: F) -> VectorHeisenbergElement
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> Complex64,
{
    let neg = -&a.x;
    VectorHeisenbergElement { lambda: (a.lambda * psi(&a.x, &neg)).inv(), x: neg }
}

/// `a b a⁻¹ b⁻¹`.
pub fn commutator_vector<F>(a: &VectorHeisenbergElement, b: &VectorHeisenbergElement, psi: F) -> Result<VectorHeisenbergElement>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> Complex64 + Copy,
{
    let ab = compose_vector(a, b, psi)?;
    let aba = compose_vector(&ab, &inverse_vector(a, psi), psi)?;
    compose_vector(&aba, &inverse_vector(b, psi), psi)
}

/// Left representative `[c; x, g]`: the map `f ↦ c · e(g) · x*(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusHeisenbergElement {
    pub c: Complex64,
    pub x: TorusCharacterAction,
    pub g: IntVector,
}

impl TorusHeisenbergElement {
    pub fn new(c: Complex64, x: TorusCharacterAction, g: IntVector) -> Result<Self> {
        if c.norm() == 0.0 || !c.is_finite() {
            return Err(Error::Degenerate("central part must be a nonzero finite scalar".into()));
        }
        if x.rank() != g.len() {
            return Err(Error::DimensionMismatch { expected: g.len(), found: x.rank() });
        }
        Ok(Self { c, x, g })
    }

    pub fn identity(rank: usize) -> Self {
        Self { c: c(1.0, 0.0), x: TorusCharacterAction::trivial(rank), g: IntVector::zeros(rank) }
    }

    pub fn rank(&self) -> usize {
        self.g.len()
    }

    /// Distance in the obvious coordinates; `∞` when the lattice parts differ.
    pub fn distance(&self, other: &TorusHeisenbergElement) -> f64 {
        if self.g != other.g {
            return f64::INFINITY;
        }
        let scale = self.c.norm().max(other.c.norm()).max(1e-300);
        ((self.c - other.c).norm() / scale).max((&self.x.w - &other.x.w).camax())
    }
}

/// `[c';x',g'][c;x,g] = [c'c · g(x') · α(g',g); x'x, g'+g]`.
pub fn compose_torus(form: &QuantizationForm, a: &TorusHeisenbergElement, b: &TorusHeisenbergElement) -> Result<TorusHeisenbergElement> {
    if a.rank() != form.rank() || b.rank() != form.rank() {
        return Err(Error::DimensionMismatch { expected: form.rank(), found: a.rank().max(b.rank()) });
    }
    Ok(TorusHeisenbergElement {
        c: a.c * b.c * a.x.value(&b.g) * form.alpha(&a.g, &b.g),
        x: a.x.compose(&b.x),
        g: &a.g + &b.g,
    })
}

pub fn inverse_torus(form: &QuantizationForm, a: &TorusHeisenbergElement) -> TorusHeisenbergElement {
    let neg = -&a.g;
    TorusHeisenbergElement {
        c: a.c.inv() * a.x.value(&a.g) / form.alpha(&neg, &a.g),
        x: TorusCharacterAction::new(-&a.x.w),
        g: neg,
    }
}

/// `a b a⁻¹ b⁻¹`; central, with scalar part `g(x')g'(x)⁻¹α²(g',g)`.
pub fn commutator_torus(form: &QuantizationForm, a: &TorusHeisenbergElement, b: &TorusHeisenbergElement) -> Result<TorusHeisenbergElement> {
    let ab = compose_torus(form, a, b)?;
    let aba = compose_torus(form, &ab, &inverse_torus(form, a))?;
    compose_torus(form, &aba, &inverse_torus(form, b))
}

/// `g(x') g'(x)⁻¹ α(g',g)²` for `a = [·;x',g']`, `b = [·;x,g]`.
pub fn torus_epsilon(form: &QuantizationForm, a: &TorusHeisenbergElement, b: &TorusHeisenbergElement) -> Complex64 {
    let al = form.alpha(&a.g, &b.g);
    a.x.value(&b.g) / b.x.value(&a.g) * al * al
}

/// `f ↦ c · e(g) · x*(f)`.
pub fn apply_heisenberg(a: &TorusHeisenbergElement, f: &TorusElement) -> Result<TorusElement> {
    let moved = apply_character(&a.x, f)?;
    let e = TorusElement::monomial(f.form().clone(), a.g.clone(), a.c)?;
    multiply(&e, &moved)
}

/// Lift of a sublattice `B ⊆ D` into the torus Heisenberg group.
///
/// `lift(Σ n_k b_k)` is the ordered product `lift(b_1)^{n_1} ⋯ lift(b_m)^{n_m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    form: QuantizationForm,
    /// Columns are the basis of `B` in lattice coordinates of `D`.
    basis: Vec<IntVector>,
    lifts: Vec<TorusHeisenbergElement>,
}

impl Multiplier {
    /// Validates the projection and the homomorphism property.
    pub fn new(form: QuantizationForm, basis: Vec<IntVector>, lifts: Vec<TorusHeisenbergElement>) -> Result<Self> {
        let m = Self::new_unchecked(form, basis, lifts)?;
        m.check_homomorphism()?;
        Ok(m)
    }

    /// Validates shapes and projection only; the lift may fail to be a homomorphism.
    pub fn new_unchecked(form: QuantizationForm, basis: Vec<IntVector>, lifts: Vec<TorusHeisenbergElement>) -> Result<Self> {
        if basis.len() != lifts.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), found: lifts.len() });
        }
        let r = form.rank();
        for (b, l) in basis.iter().zip(&lifts) {
            if b.len() != r || l.rank() != r {
                return Err(Error::DimensionMismatch { expected: r, found: b.len() });
            }
            if &l.g != b {
                return Err(Error::Incompatible(format!("lift of {b} projects to {}", l.g)));
            }
        }
        let m = Self { form, basis, lifts };
        if m.basis_rank() != m.basis.len() {
            return Err(Error::Degenerate("basis of B is linearly dependent".into()));
        }
        Ok(m)
    }

    /// Lift of the trivial subgroup.
    pub fn trivial(form: QuantizationForm) -> Self {
        Self { form, basis: vec![], lifts: vec![] }
    }

    pub fn form(&self) -> &QuantizationForm {
        &self.form
    }

    pub fn basis(&self) -> &[IntVector] {
        &self.basis
    }

    pub fn generator_lifts(&self) -> &[TorusHeisenbergElement] {
        &self.lifts
    }

    pub fn basis_matrix(&self) -> RatMatrix {
        RatMatrix::from_fn(self.form.rank(), self.basis.len(), |i, j| Rational::from_integer(self.basis[j].0[i] as i128))
    }

    fn basis_rank(&self) -> usize {
        let m = DMatrix::from_fn(self.form.rank(), self.basis.len(), |i, j| self.basis[j].0[i] as f64);
        m.svd(false, false).singular_values.iter().filter(|&&s| s > 1e-9).count()
    }

    /// `[D : B]` when `B` has full rank.
    pub fn index(&self) -> Result<u64> {
        if self.basis.len() != self.form.rank() {
            return Err(Error::Degenerate("B does not have finite index".into()));
        }
        let det = self.basis_matrix().determinant().expect("square");
        Ok(det.numer().unsigned_abs() as u64)
    }

    /// Lift of `Σ n_k b_k`, given by `B`-coordinates `n`.
    pub fn lift(&self, n: &IntVector) -> Result<TorusHeisenbergElement> {
        if n.len() != self.basis.len() {
            return Err(Error::DimensionMismatch { expected: self.basis.len(), found: n.len() });
        }
        let mut acc = TorusHeisenbergElement::identity(self.form.rank());
        for (k, &nk) in n.0.iter().enumerate() {
            let step = if nk >= 0 { self.lifts[k].clone() } else { inverse_torus(&self.form, &self.lifts[k]) };
            let p = power(&self.form, &step, nk.unsigned_abs())?;
            acc = compose_torus(&self.form, &acc, &p)?;
        }
        Ok(acc)
    }

    /// `B`-coordinates of a lattice vector `b ∈ B`.
    pub fn coordinates(&self, b: &IntVector) -> Result<IntVector> {
        let bm = self.basis_matrix();
        let inv = bm
            .inverse()
            .ok_or_else(|| Error::Degenerate("B does not have full rank".into()))?;
        let v = RatMatrix::from_fn(b.len(), 1, |i, _| Rational::from_integer(b.0[i] as i128));
        let n = inv.mul(&v)?;
        let mut out = Vec::with_capacity(n.nrows());
        for i in 0..n.nrows() {
            let x = n[(i, 0)];
            if !x.is_integer() {
                return Err(Error::Incompatible(format!("{b} is not in B")));
            }
            out.push(*x.numer() as i64);
        }
        Ok(IntVector(out))
    }

    /// Generator lifts commute, and `lift(n)lift(n') = lift(n+n')` on 50 random pairs.
    pub fn check_homomorphism(&self) -> Result<()> {
        let m = self.basis.len();
        for i in 0..m {
            for j in 0..m {
                let ab = compose_torus(&self.form, &self.lifts[i], &self.lifts[j])?;
                let ba = compose_torus(&self.form, &self.lifts[j], &self.lifts[i])?;
                if ab.distance(&ba) > 1e-10 {
                    return Err(Error::NotHomomorphism(i, j));
                }
            }
        }
        if m == 0 {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x6c69_6674);
        for _ in 0..50 {
            let n1 = IntVector((0..m).map(|_| rng.random_range(-2..=2)).collect());
            let n2 = IntVector((0..m).map(|_| rng.random_range(-2..=2)).collect());
            let lhs = compose_torus(&self.form, &self.lift(&n1)?, &self.lift(&n2)?)?;
            let rhs = self.lift(&(&n1 + &n2))?;
            if lhs.distance(&rhs) > 1e-8 {
                let k = (0..m).find(|&k| n1.0[k] != 0).unwrap_or(0);
                let l = (0..m).find(|&l| n2.0[l] != 0).unwrap_or(0);
                return Err(Error::NotHomomorphism(k, l));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let json = MultiplierJson {
            b_basis: self.basis.iter().map(|b| b.0.clone()).collect(),
            lifts: self
                .lifts
                .iter()
                .map(|l| LiftJson {
                    c: [l.c.re, l.c.im],
                    w: l.x.w.iter().map(|z| [z.re, z.im]).collect(),
                    g: l.g.0.clone(),
                })
                .collect(),
            a_d: Some(self.form.matrix().row_iter().map(|r| r.iter().copied().collect()).collect()),
        };
        serde_json::to_value(json).expect("serializable")
    }

    /// Reads `{"B_basis", "lifts", "A_D"?}`; `form` is used when `A_D` is absent.
    pub fn from_json(v: &serde_json::Value, form: Option<QuantizationForm>) -> Result<Self> {
        let json: MultiplierJson = serde_json::from_value(v.clone())?;
        let form = match (json.a_d, form) {
            (Some(rows), _) => {
                let r = rows.len();
                if rows.iter().any(|row| row.len() != r) {
                    return Err(Error::DimensionMismatch { expected: r, found: 0 });
                }
                QuantizationForm::new(DMatrix::from_row_iterator(r, r, rows.into_iter().flatten()))?
            }
            (None, Some(f)) => f,
            (None, None) => return Err(Error::Incompatible("multiplier needs a quantization form".into())),
        };
        let lifts = json
            .lifts
            .into_iter()
            .map(|l| {
                let w = CVector::from_iterator(l.w.len(), l.w.iter().map(|p| c(p[0], p[1])));
                TorusHeisenbergElement::new(c(l.c[0], l.c[1]), TorusCharacterAction::new(w), IntVector(l.g))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(form, json.b_basis.into_iter().map(IntVector).collect(), lifts)
    }
}

fn power(form: &QuantizationForm, a: &TorusHeisenbergElement, k: u64) -> Result<TorusHeisenbergElement> {
    let mut acc = TorusHeisenbergElement::identity(a.rank());
    for _ in 0..k {
        acc = compose_torus(form, &acc, a)?;
    }
    Ok(acc)
}

#[derive(Serialize, Deserialize)]
struct LiftJson {
    c: [f64; 2],
    w: Vec<[f64; 2]>,
    g: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct MultiplierJson {
    #[serde(rename = "B_basis")]
    b_basis: Vec<Vec<i64>>,
    lifts: Vec<LiftJson>,
    #[serde(rename = "A_D", default, skip_serializing_if = "Option::is_none")]
    a_d: Option<Vec<Vec<f64>>>,
}

/// `⟨b_i, b_j⟩ = g_j(x_i) α(g_i, g_j)` on the basis of `B`, extended bimultiplicatively.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureForm {
    values: DMatrix<Complex64>,
}

impl StructureForm {
    pub fn rank(&self) -> usize {
        self.values.nrows()
    }

    pub fn generator_values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    /// `⟨n, n'⟩` for `B`-coordinates.
    pub fn eval(&self, n: &IntVector, m: &IntVector) -> Complex64 {
        self.log_eval(n, m).exp()
    }

    /// A logarithm of `⟨n, n'⟩` built from principal logs of the generator values.
    pub fn log_eval(&self, n: &IntVector, m: &IntVector) -> Complex64 {
        let mut s = c(0.0, 0.0);
        for i in 0..self.rank() {
            for j in 0..self.rank() {
                s += self.values[(i, j)].ln() * (n.0[i] * m.0[j]) as f64;
            }
        }
        s
    }

    /// Symmetric Gram matrix of `n ↦ log|⟨n, n⟩|`.
    pub fn log_modulus_gram(&self) -> DMatrix<f64> {
        let l = self.values.map(|z| z.norm().ln());
        (&l + l.transpose()) * 0.5
    }
}

pub fn structure_form(m: &Multiplier) -> Result<StructureForm> {
    let k = m.basis.len();
    let mut values = DMatrix::from_element(k, k, c(1.0, 0.0));
    for i in 0..k {
        for j in 0..k {
            let (a, b) = (&m.lifts[i], &m.lifts[j]);
            values[(i, j)] = a.x.value(&b.g) * m.form.alpha(&a.g, &b.g);
        }
    }
    for i in 0..k {
        for j in 0..i {
            let scale = values[(i, j)].norm().max(values[(j, i)].norm()).max(1e-300);
            if (values[(i, j)] - values[(j, i)]).norm() > 1e-10 * scale {
                return Err(Error::NotHomomorphism(i, j));
            }
        }
    }
    Ok(StructureForm { values })
}

/// All eigenvalues of the log-modulus Gram matrix below `−1e−10`.
pub fn is_ample(m: &Multiplier) -> bool {
    let Ok(form) = structure_form(m) else {
        return false;
    };
    if form.rank() == 0 || form.rank() != m.form.rank() {
        return false;
    }
    symmetric_eigenvalues(&form.log_modulus_gram()).iter().all(|&e| e < -AMPLE_TOLERANCE)
}

/// Basis of truncated invariant vectors, one per coset of `D/B`.
#[derive(Debug, Clone)]
pub struct GammaBasis {
    pub representatives: Vec<IntVector>,
    pub elements: Vec<TorusElement>,
    /// Positive definite decay norm `P_D` on lattice coordinates of `D`.
    pub decay_norm: DMatrix<f64>,
}

/// Key of the coset `h + B`: fractional parts of `B⁻¹h`.
fn coset_key(inv: &RatMatrix, h: &IntVector) -> Vec<Rational> {
    let r = h.len();
    (0..r)
        .map(|i| {
            let mut s = Rational::from_integer(0);
            for j in 0..r {
                s += inv[(i, j)] * Rational::from_integer(h.0[j] as i128);
            }
            s - s.floor()
        })
        .collect()
}

/// Solves `lift(b) Θ = Θ` coefficientwise: `θ_{b+r} = c_b · exp(w_bᵀ r) · α(b, r) · θ_r`.
///
/// Representatives have minimal coordinate norm (lexicographic tie-break) and
/// coefficient one. Terms are kept for `hᵀ P_D h ≤ radius²`, where `P_D` is the
/// decay norm `−log|⟨·,·⟩|` transported to `D`.
pub fn gamma_basis(m: &Multiplier, radius: f64) -> Result<GammaBasis> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidRadius(radius));
    }
    if !is_ample(m) {
        return Err(Error::NotAmple);
    }
    let r = m.form.rank();
    let bm = m.basis_matrix();
    let inv = bm.inverse().ok_or(Error::NotAmple)?;
    let index = m.index()? as usize;

    let mut reps: BTreeMap<Vec<Rational>, IntVector> = BTreeMap::new();
    let mut search = 1.0;
    while reps.len() < index {
        let mut candidates = enumerate_quadratic(&DMatrix::identity(r, r), search)?;
        candidates.sort_by(|a, b| a.norm_sq().cmp(&b.norm_sq()).then_with(|| a.cmp(b)));
        for h in candidates {
            reps.entry(coset_key(&inv, &h)).or_insert(h);
        }
        search += 1.0;
    }
    let mut representatives: Vec<IntVector> = reps.values().cloned().collect();
    representatives.sort_by(|a, b| a.norm_sq().cmp(&b.norm_sq()).then_with(|| a.cmp(b)));
    let slot: BTreeMap<Vec<Rational>, usize> =
        representatives.iter().enumerate().map(|(i, h)| (coset_key(&inv, h), i)).collect();

    let p_b = -structure_form(m)?.log_modulus_gram();
    let inv_f = inv.to_f64();
    let decay_norm = inv_f.transpose() * &p_b * &inv_f;

    let mut elements: Vec<TorusElement> = representatives.iter().map(|_| TorusElement::zero(m.form.clone())).collect();
    for h in enumerate_quadratic(&decay_norm, radius)? {
        let i = slot[&coset_key(&inv, &h)];
        let rep = &representatives[i];
        let b = &h - rep;
        let lift = m.lift(&m.coordinates(&b)?)?;
        let coef = lift.c * lift.x.value(rep) * m.form.alpha(&b, rep);
        elements[i].add_term(h, coef)?;
    }
    for (e, rep) in elements.iter_mut().zip(&representatives) {
        if e.coefficient(rep) == c(0.0, 0.0) {
            e.add_term(rep.clone(), c(1.0, 0.0))?;
        }
    }
    Ok(GammaBasis { representatives, elements, decay_norm })
}

/// Largest `|(lift(b_k) f − f)_h|` over generators and indices `h` where both
/// `h` and `h − b_k` lie in the support of `f`.
pub fn invariance_defect(m: &Multiplier, f: &TorusElement) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for lift in &m.lifts {
        let moved = apply_heisenberg(lift, f)?;
        for (h, a) in f.terms() {
            if f.terms().contains_key(&(h - &lift.g)) {
                worst = worst.max((moved.coefficient(h) - a).norm());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(v: &[i64]) -> IntVector {
        IntVector(v.to_vec())
    }

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_vec(v.to_vec())
    }

    fn cw(w: &[(f64, f64)]) -> TorusCharacterAction {
        TorusCharacterAction::new(CVector::from_iterator(w.len(), w.iter().map(|&(a, b)| c(a, b))))
    }

    /// Lift of `D = ℤ²` with `T = i` and `A_D` standard: `w_g = −π H(g̱, ·)`, `c_g = exp(−π/2 H(g̱,g̱))`.
    fn theta_multiplier() -> Multiplier {
        let form = QuantizationForm::rotation(1.0);
        let pi = std::f64::consts::PI;
        // g̱ for g = e1 is i, for e2 is 1. H(u,v) = u v̄.
        let l1 = TorusHeisenbergElement::new(c((-pi / 2.0).exp(), 0.0), cw(&[(-pi, 0.0), (0.0, -pi)]), iv(&[1, 0])).unwrap();
        let l2 = TorusHeisenbergElement::new(c((-pi / 2.0).exp(), 0.0), cw(&[(0.0, pi), (-pi, 0.0)]), iv(&[0, 1])).unwrap();
        Multiplier::new(form, vec![iv(&[1, 0]), iv(&[0, 1])], vec![l1, l2]).unwrap()
    }

    #[test]
    fn cocycle_examples() {
        let space = SymplecticSpace::standard(1);
        let psi = symplectic_cocycle(&space);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut draw = || dv(&[rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]);
        let samples: Vec<_> = (0..100).map(|_| (draw(), draw(), draw())).collect();
        assert!(cocycle_check(&psi, &samples));
        assert!(cocycle_check(|_: &DVector<f64>, _: &DVector<f64>| c(1.0, 0.0), &samples));
        let bad = |x: &DVector<f64>, y: &DVector<f64>| Complex64::from_polar(1.0, x[0] * x[0] * y[1]);
        assert!(!cocycle_check(bad, &samples));
    }

    #[test]
    fn vector_group_axioms() {
        let space = SymplecticSpace::standard(1);
        let psi = symplectic_cocycle(&space);
        let a = VectorHeisenbergElement::new(Complex64::from_polar(1.0, 0.3), dv(&[0.4, -1.2])).unwrap();
        let b = VectorHeisenbergElement::new(Complex64::from_polar(1.0, -1.1), dv(&[2.0, 0.7])).unwrap();
        let e = VectorHeisenbergElement::identity(2);
        assert_eq!(compose_vector(&e, &a, &psi).unwrap(), a);
        let id = compose_vector(&a, &inverse_vector(&a, &psi), &psi).unwrap();
        assert!((id.lambda - c(1.0, 0.0)).norm() < 1e-14 && id.x.norm() < 1e-15);
        let comm = commutator_vector(&a, &b, &psi).unwrap();
        assert!(comm.x.norm() < 1e-15);
        assert!((comm.lambda - epsilon(&psi, &a.x, &b.x)).norm() < 1e-12);
        assert!(VectorHeisenbergElement::new(c(2.0, 0.0), dv(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn theta_multiplier_structure() {
        let m = theta_multiplier();
        let sf = structure_form(&m).unwrap();
        // ⟨h₁,h₂⟩ = exp(−π Re H(ẖ₁, ẖ₂)); here Re H is the identity Gram.
        let pi = std::f64::consts::PI;
        let v = sf.generator_values();
        assert!((v[(0, 0)] - c((-pi).exp(), 0.0)).norm() < 1e-14);
        assert!(v[(0, 1)].norm() < 1e-14 + 1.0 && (v[(0, 1)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(is_ample(&m));
        assert_eq!(m.index().unwrap(), 1);
    }

    #[test]
    fn trivial_and_flat_forms_not_ample() {
        let form = QuantizationForm::rotation(1.0);
        let trivial = Multiplier::trivial(form.clone());
        assert_eq!(structure_form(&trivial).unwrap().rank(), 0);
        assert!(!is_ample(&trivial));
        let flat = Multiplier::new(
            form.clone(),
            vec![iv(&[2, 0]), iv(&[0, 2])],
            vec![
                TorusHeisenbergElement::new(c(1.0, 0.0), cw(&[(0.0, 0.0), (0.0, 0.0)]), iv(&[2, 0])).unwrap(),
                TorusHeisenbergElement::new(c(1.0, 0.0), cw(&[(0.0, 0.0), (0.0, 0.0)]), iv(&[0, 2])).unwrap(),
            ],
        )
        .unwrap();
        assert!(!is_ample(&flat));
        assert!(matches!(gamma_basis(&flat, 3.0), Err(Error::NotAmple)));
    }

    #[test]
    fn broken_lift_detected() {
        let form = QuantizationForm::rotation(1.0);
        let l1 = TorusHeisenbergElement::new(c(1.0, 0.0), cw(&[(0.0, 0.0), (-1.0, 0.0)]), iv(&[1, 0])).unwrap();
        let l2 = TorusHeisenbergElement::new(c(1.0, 0.0), cw(&[(0.0, 0.0), (-1.0, 0.0)]), iv(&[0, 1])).unwrap();
        let err = Multiplier::new(form.clone(), vec![iv(&[1, 0]), iv(&[0, 1])], vec![l1.clone(), l2.clone()]).unwrap_err();
        assert!(matches!(err, Error::NotHomomorphism(0, 1)));
        let m = Multiplier::new_unchecked(form, vec![iv(&[1, 0]), iv(&[0, 1])], vec![l1, l2]).unwrap();
        assert!(matches!(structure_form(&m), Err(Error::NotHomomorphism(1, 0))));
    }

    #[test]
    fn scaled_form_stays_ample() {
        let m = theta_multiplier();
        for t in [0.5, 2.0, 7.0] {
            let lifts = m
                .generator_lifts()
                .iter()
                .map(|l| TorusHeisenbergElement {
                    c: Complex64::from_polar(l.c.norm().powf(t), 0.0),
                    x: TorusCharacterAction::new(l.x.w.map(|z| c(z.re * t, z.im))),
                    g: l.g.clone(),
                })
                .collect();
            let scaled = Multiplier::new(m.form().clone(), m.basis().to_vec(), lifts).unwrap();
            assert!(is_ample(&scaled));
        }
    }

    #[test]
    fn gamma_basis_full_lattice() {
        let m = theta_multiplier();
        let basis = gamma_basis(&m, 6.0).unwrap();
        assert_eq!(basis.elements.len(), 1);
        let theta = &basis.elements[0];
        let pi = std::f64::consts::PI;
        // coefficient of e(h) is exp(−π/2 |h|²) for T = i
        for (h, a) in theta.terms() {
            let expected = (-pi / 2.0 * h.norm_sq() as f64).exp();
            assert!((a - c(expected, 0.0)).norm() < 1e-12 * (1.0 + expected), "{h}: {a}");
        }
        assert!(invariance_defect(&m, theta).unwrap() < 1e-12);
    }

    #[test]
    fn gamma_basis_sublattice_index() {
        let m = theta_multiplier();
        let l = m.generator_lifts();
        let form = m.form().clone();
        let b1 = compose_torus(&form, &l[0], &l[0]).unwrap();
        let b2 = compose_torus(&form, &l[1], &l[1]).unwrap();
        let sub = Multiplier::new(form, vec![iv(&[2, 0]), iv(&[0, 2])], vec![b1, b2]).unwrap();
        let basis = gamma_basis(&sub, 8.0).unwrap();
        assert_eq!(basis.elements.len(), 4);
        assert_eq!(basis.representatives, vec![iv(&[0, 0]), iv(&[-1, 0]), iv(&[0, -1]), iv(&[-1, -1])]);
        for e in &basis.elements {
            assert!(invariance_defect(&sub, e).unwrap() < 1e-12);
        }
    }

    #[test]
    fn multiplier_json_round_trip() {
        let m = theta_multiplier();
        let back = Multiplier::from_json(&m.to_json(), None).unwrap();
        assert_eq!(back, m);
    }

    fn arb_el() -> impl Strategy<Value = TorusHeisenbergElement> {
        (0.2f64..2.0, -3.0f64..3.0, prop::collection::vec((-0.5f64..0.5, -3.0f64..3.0), 2), prop::collection::vec(-3i64..=3, 2))
            .prop_map(|(m, ph, w, g)| TorusHeisenbergElement::new(Complex64::from_polar(m, ph), cw(&w), IntVector(g)).unwrap())
    }

    proptest! {
        #[test]
        fn torus_group_laws(a in arb_el(), b in arb_el(), d in arb_el(), theta in -1.0f64..1.0) {
            let form = QuantizationForm::rotation(theta);
            let l = compose_torus(&form, &compose_torus(&form, &a, &b).unwrap(), &d).unwrap();
            let r = compose_torus(&form, &a, &compose_torus(&form, &b, &d).unwrap()).unwrap();
            prop_assert!(l.distance(&r) < 1e-9);
            let id = compose_torus(&form, &a, &inverse_torus(&form, &a)).unwrap();
            prop_assert!(id.distance(&TorusHeisenbergElement::identity(2)) < 1e-9);
            let comm = commutator_torus(&form, &a, &b).unwrap();
            prop_assert!(comm.g.is_zero() && comm.x.w.camax() < 1e-12);
            let eps = torus_epsilon(&form, &a, &b);
            prop_assert!((comm.c - eps).norm() < 1e-9 * eps.norm().max(1.0));
        }

        #[test]
        fn action_axiom(a in arb_el(), b in arb_el(), theta in -1.0f64..1.0,
                        ts in prop::collection::vec((prop::collection::vec(-3i64..=3, 2), -1.0f64..1.0, -1.0f64..1.0), 1..5)) {
            let form = QuantizationForm::rotation(theta);
            let f = TorusElement::from_terms(form.clone(), ts.into_iter().map(|(h, x, y)| (IntVector(h), c(x, y)))).unwrap();
            let lhs = apply_heisenberg(&a, &apply_heisenberg(&b, &f).unwrap()).unwrap();
            let rhs = apply_heisenberg(&compose_torus(&form, &a, &b).unwrap(), &f).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9 * (1.0 + lhs.sup_norm()));
            let id = apply_heisenberg(&TorusHeisenbergElement::identity(2), &f).unwrap();
            prop_assert!(id.max_abs_diff(&f) < 1e-15);
        }

        #[test]
        fn epsilon_properties(x in prop::collection::vec(-3.0f64..3.0, 2), y in prop::collection::vec(-3.0f64..3.0, 2)) {
            let space = SymplecticSpace::standard(1);
            let psi = symplectic_cocycle(&space);
            let (x, y) = (dv(&x), dv(&y));
            prop_assert!((epsilon(&psi, &x, &x) - c(1.0, 0.0)).norm() < 1e-12);
            prop_assert!((epsilon(&psi, &y, &x) * epsilon(&psi, &x, &y) - c(1.0, 0.0)).norm() < 1e-12);
        }

        #[test]
        fn structure_form_symmetric(n in prop::collection::vec(-3i64..=3, 2), k in prop::collection::vec(-3i64..=3, 2)) {
            let sf = structure_form(&theta_multiplier()).unwrap();
            let (n, k) = (IntVector(n), IntVector(k));
            prop_assert!((sf.log_eval(&n, &k) - sf.log_eval(&k, &n)).norm() < 1e-9);
        }
    }
}
