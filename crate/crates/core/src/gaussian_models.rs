//! Gaussian calculus and the two concrete models of the Heisenberg representation.
//!
//! Model I lives on `L²(ℝᴺ)` and is spanned (for our purposes) by Gaussian
//! packets `γ·exp(πi(x+s)ᵀT(x+s) + 2πi bᵀx)`. Model II_T is the Fock space of
//! holomorphic functions of `x̱`, and the relevant vectors are exponentials of
//! linear forms `γ·exp(lᵀx̱)`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::heisenberg::VectorHeisenbergElement;
use crate::kaehler::{KaehlerStructure, SiegelPoint};
use crate::linalg::{c, complex_inverse, sqrt_det_continuous, to_complex, to_complex_vec, CMatrix, CVector};
use crate::quadrature::TensorGauss;

/// `λ` with `xᵀQx + lᵀx = (x+λ)ᵀQ(x+λ) − λᵀQλ`, i.e. `λ = Q⁻¹l/2`.
pub fn complete_square(q: &CMatrix, l: &CVector) -> Result<CVector> {
    if !q.is_square() || q.nrows() != l.len() {
        return Err(Error::DimensionMismatch { expected: q.nrows(), found: l.len() });
    }
    let sym = (q + q.transpose()) * c(0.5, 0.0);
    Ok(complex_inverse(&sym)? * l * c(0.5, 0.0))
}

/// `∫_{ℝʳ} exp(−π(xᵀQx + lᵀx + c)) dx = exp(−π(c − λᵀQλ)) / √det Q`.
///
/// The square root is the branch continuous from the real positive definite cone.
pub fn gaussian_integral(q: &CMatrix, l: &CVector, c0: Complex64) -> Result<Complex64> {
    let sym = (q + q.transpose()) * c(0.5, 0.0);
    let root = sqrt_det_continuous(&sym)?;
    let lambda = complete_square(&sym, l)?;
    let q_lambda = (lambda.transpose() * &sym * &lambda)[(0, 0)];
    Ok((-(c0 - q_lambda) * PI).exp() / root)
}

/// `x₁ ↦ γ·exp(πi(x₁+s)ᵀT(x₁+s) + 2πi bᵀx₁)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPacket {
    pub gamma: Complex64,
    pub s: CVector,
    pub b: CVector,
}

impl GaussianPacket {
    /// `f_T = exp(πi x₁ᵀTx₁)`.
    pub fn vacuum(n: usize) -> Self {
        Self { gamma: c(1.0, 0.0), s: CVector::zeros(n), b: CVector::zeros(n) }
    }

    fn log_value(&self, t: &CMatrix, x: &CVector) -> Complex64 {
        let y = x + &self.s;
        let quad = (y.transpose() * t * &y)[(0, 0)];
        let lin = (self.b.transpose() * x)[(0, 0)];
        c(0.0, PI) * quad + c(0.0, 2.0 * PI) * lin
    }
}

/// Finite sum of packets sharing the quadratic part `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketSum {
    t: SiegelPoint,
    packets: Vec<GaussianPacket>,
}

impl PacketSum {
    pub fn new(t: SiegelPoint) -> Self {
        Self { t, packets: Vec::new() }
    }

    /// The vector `f_T`.
    pub fn vacuum(t: SiegelPoint) -> Self {
        let n = t.dim();
        let mut out = Self::new(t);
        out.packets.push(GaussianPacket::vacuum(n));
        out
    }

    pub fn from_packets(t: SiegelPoint, packets: impl IntoIterator<Item = GaussianPacket>) -> Result<Self> {
        let mut out = Self::new(t);
        for p in packets {
            out.push(p)?;
        }
        Ok(out)
    }

    pub fn siegel(&self) -> &SiegelPoint {
        &self.t
    }

    pub fn packets(&self) -> &[GaussianPacket] {
        &self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    /// Adds a packet, merging with an existing one of equal `(s, b)`.
    pub fn push(&mut self, p: GaussianPacket) -> Result<()> {
        let n = self.t.dim();
        if p.s.len() != n || p.b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: p.s.len() });
        }
        match self.packets.iter_mut().find(|q| q.s == p.s && q.b == p.b) {
            Some(q) => q.gamma += p.gamma,
            None => self.packets.push(p),
        }
        self.packets.retain(|q| q.gamma != c(0.0, 0.0));
        Ok(())
    }

    pub fn scale(&self, k: Complex64) -> PacketSum {
        let mut out = self.clone();
        for p in &mut out.packets {
            p.gamma *= k;
        }
        out.packets.retain(|q| q.gamma != c(0.0, 0.0));
        out
    }

    pub fn add(&self, other: &PacketSum) -> Result<PacketSum> {
        self.same_t(other)?;
        let mut out = self.clone();
        for p in &other.packets {
            out.push(p.clone())?;
        }
        Ok(out)
    }

    fn same_t(&self, other: &PacketSum) -> Result<()> {
        if self.t != other.t {
            return Err(Error::Incompatible("packet sums use different Siegel points".into()));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> Result<Complex64> {
        let n = self.t.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        let xc = to_complex_vec(x);
        Ok(self.packets.iter().map(|p| p.gamma * p.log_value(self.t.matrix(), &xc).exp()).sum())
    }
}

/// `⟨p, q⟩` for single packets, as a Gaussian integral with `Q = 2 Im T`.
pub fn packet_inner(t: &SiegelPoint, p: &GaussianPacket, q: &GaussianPacket) -> Result<Complex64> {
    let tm = t.matrix();
    let tb = tm.map(|z| z.conj());
    let qm = to_complex(&(t.im() * 2.0));
    let sq = q.s.map(|z| z.conj());
    let bq = q.b.map(|z| z.conj());
    let two = c(2.0, 0.0);
    let l = (tm * &p.s * two - &tb * &sq * two + &p.b * two - &bq * two) * c(0.0, -1.0);
    let quad_p = (p.s.transpose() * tm * &p.s)[(0, 0)];
    let quad_q = (sq.transpose() * &tb * &sq)[(0, 0)];
    let c0 = c(0.0, -1.0) * (quad_p - quad_q);
    Ok(p.gamma * q.gamma.conj() * gaussian_integral(&qm, &l, c0)?)
}

/// `⟨f, g⟩ = ∫ f(x) conj(g(x)) dx` in closed form.
pub fn model1_inner(f: &PacketSum, g: &PacketSum) -> Result<Complex64> {
    f.same_t(g)?;
    let mut s = c(0.0, 0.0);
    for p in &f.packets {
        for q in &g.packets {
            s += packet_inner(&f.t, p, q)?;
        }
    }
    Ok(s)
}

/// `(U_{(λ,y)}f)(x) = λ·exp(2πi xᵀy₂ + πi y₁ᵀy₂)·f(x+y₁)`.
pub fn model1_act(el: &VectorHeisenbergElement, f: &PacketSum) -> Result<PacketSum> {
    let n = f.t.dim();
    if el.x.len() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, found: el.x.len() });
    }
    let y1 = to_complex_vec(&el.x.rows(0, n).into_owned());
    let y2 = to_complex_vec(&el.x.rows(n, n).into_owned());
    let y12 = (y1.transpose() * &y2)[(0, 0)];
    let mut out = PacketSum::new(f.t.clone());
    for p in &f.packets {
        let by = (p.b.transpose() * &y1)[(0, 0)];
        let phase = (c(0.0, PI) * y12 + c(0.0, 2.0 * PI) * by).exp();
        out.push(GaussianPacket { gamma: el.lambda * p.gamma * phase, s: &p.s + &y1, b: &p.b + &y2 })?;
    }
    Ok(out)
}

/// Tensor Gauss–Legendre approximation of `⟨f, g⟩` on `[−L, L]ᴺ`.
pub fn quadrature_inner(f: &PacketSum, g: &PacketSum, box_half_width: f64, points_per_axis: usize) -> Result<Complex64> {
    f.same_t(g)?;
    let n = f.t.dim();
    if n > 2 {
        return Err(Error::Incompatible("quadrature oracle supports N ≤ 2".into()));
    }
    let rule = TensorGauss::new(points_per_axis)?;
    let mut x = DVector::zeros(n);
    Ok(rule.integrate_box(&vec![0.0; n], box_half_width, |p| {
        x.copy_from_slice(p);
        let a = f.evaluate(&x).expect("dimension checked");
        let b = g.evaluate(&x).expect("dimension checked");
        a * b.conj()
    }))
}

/// `x̱ ↦ γ·exp(lᵀx̱)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockExponential {
    pub gamma: Complex64,
    pub l: CVector,
}

/// Finite sum of Fock exponentials.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSum {
    n: usize,
    terms: Vec<FockExponential>,
}

impl FockSum {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    /// The constant function `1`.
    pub fn vacuum(n: usize) -> Self {
        Self { n, terms: vec![FockExponential { gamma: c(1.0, 0.0), l: CVector::zeros(n) }] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[FockExponential] {
        &self.terms
    }

    pub fn push(&mut self, t: FockExponential) -> Result<()> {
        if t.l.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: t.l.len() });
        }
        match self.terms.iter_mut().find(|q| q.l == t.l) {
            Some(q) => q.gamma += t.gamma,
            None => self.terms.push(t),
        }
        self.terms.retain(|q| q.gamma != c(0.0, 0.0));
        Ok(())
    }

    pub fn scale(&self, k: Complex64) -> FockSum {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.gamma *= k;
        }
        out.terms.retain(|q| q.gamma != c(0.0, 0.0));
        out
    }

    pub fn add(&self, other: &FockSum) -> Result<FockSum> {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.clone())?;
        }
        Ok(out)
    }

    pub fn evaluate(&self, z: &CVector) -> Result<Complex64> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: z.len() });
        }
        Ok(self.terms.iter().map(|t| t.gamma * (t.l.transpose() * z)[(0, 0)].exp()).sum())
    }
}

/// `(U'_{(λ,y)}f)(x̱) = λ⁻¹·exp(−πH(x̱,y̱) − (π/2)H(y̱,y̱))·f(x̱+y̱)`.
///
/// On `γ·exp(lᵀx̱)` this gives `l ↦ l − π S⁻¹ ȳ*` and
/// `γ ↦ λ⁻¹ γ exp(−(π/2)H(ȳ,ȳ) + lᵀȳ)`.
pub fn model2_act(el: &VectorHeisenbergElement, f: &FockSum, k: &KaehlerStructure) -> Result<FockSum> {
    if f.n != k.half_dim() {
        return Err(Error::DimensionMismatch { expected: k.half_dim(), found: f.n });
    }
    let y = k.embed(&el.x)?;
    let hyy = k.hermitian(&y, &y)?;
    let shift = to_complex(k.s_inv()) * y.map(|z| z.conj()) * c(-PI, 0.0);
    let mut out = FockSum::zero(f.n);
    for t in &f.terms {
        let ly = (t.l.transpose() * &y)[(0, 0)];
        let gamma = t.gamma / el.lambda * (hyy * (-PI / 2.0) + ly).exp();
        out.push(FockExponential { gamma, l: &t.l + &shift })?;
    }
    Ok(out)
}

/// `⟨f, g⟩_T = ∫ f(x̱) conj(g(x̱)) e^{−πH(x̱,x̱)} dx` in closed form.
pub fn model2_inner(f: &FockSum, g: &FockSum, k: &KaehlerStructure) -> Result<Complex64> {
    if f.n != k.half_dim() || g.n != k.half_dim() {
        return Err(Error::DimensionMismatch { expected: k.half_dim(), found: f.n.max(g.n) });
    }
    let e = k.embed_matrix();
    let eb = e.map(|z| z.conj());
    let q = to_complex(&k.q_matrix());
    let mut s = c(0.0, 0.0);
    for a in &f.terms {
        for b in &g.terms {
            // exponent lᵀE x + conj(l')ᵀ conj(E) x = −π Lᵀx
            let lin = (e.transpose() * &a.l + eb.transpose() * b.l.map(|z| z.conj())) * c(-1.0 / PI, 0.0);
            s += a.gamma * b.gamma.conj() * gaussian_integral(&q, &lin, c(0.0, 0.0))?;
        }
    }
    Ok(s)
}

/// Quadrature oracle for [`model2_inner`] over `[−L, L]^{2N}`, `N ≤ 1`.
pub fn model2_quadrature_inner(
    f: &FockSum,
    g: &FockSum,
    k: &KaehlerStructure,
    box_half_width: f64,
    points_per_axis: usize,
) -> Result<Complex64> {
    let n = k.half_dim();
    if n > 1 {
        return Err(Error::Incompatible("Fock quadrature oracle supports N = 1".into()));
    }
    let rule = TensorGauss::new(points_per_axis)?;
    let mut x = DVector::zeros(2 * n);
    Ok(rule.integrate_box(&vec![0.0; 2 * n], box_half_width, |p| {
        x.copy_from_slice(p);
        let z = k.embed(&x).expect("dimension checked");
        let w = (-PI * k.hermitian(&z, &z).expect("dimension checked").re).exp();
        f.evaluate(&z).expect("checked") * g.evaluate(&z).expect("checked").conj() * w
    }))
}
