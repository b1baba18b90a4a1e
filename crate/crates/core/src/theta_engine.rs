//! Classical and quantum theta functions, Rieffel scalar products and the
//! functional equations relating them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gaussian_models::{model1_act, model2_act, packet_inner, FockSum, GaussianPacket, PacketSum};
use crate::heisenberg::{
    apply_heisenberg, gamma_basis, is_ample, structure_form, Multiplier, TorusHeisenbergElement, VectorHeisenbergElement,
};
use crate::kaehler::{KaehlerStructure, SiegelPoint};
use crate::lattices::{enumerate_quadratic, IntVector, LatticeEmbedding};
use crate::linalg::{
    c, complex_inverse, guarded_inverse, min_eigenvalue, sqrt_det_continuous, to_complex,
    CVector,
};
use crate::quadrature::TensorGauss;
use crate::tail::{gaussian_tail_bound, radius_for_tolerance};
use crate::torus_algebra::{QuantizationForm, TorusCharacterAction, TorusElement};

/// A truncated series value together with a certified bound on the omitted terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncated<T> {
    pub value: T,
    pub radius: f64,
    pub tail_bound: f64,
}

/// Fixed-seed points in `[−1, 1]^dim`, preceded by the origin.
pub fn sample_points(dim: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![DVector::zeros(dim)];
    out.extend((1..count).map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))));
    out
}

// ---------------------------------------------------------------------------
// Classical theta

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalThetaParams {
    pub omega: SiegelPoint,
    pub z: CVector,
}

/// Largest tail bound accepted by [`classical_theta`].
pub const CLASSICAL_TOLERANCE: f64 = 1e-12;

fn classical_tail(omega: &SiegelPoint, z: &CVector, radius: f64) -> f64 {
    let im = omega.im();
    let mu = min_eigenvalue(&im);
    // |term| ≤ exp(−π nᵀ(Im Ω)n + 2π|n||Im z|), and nᵀ(Im Ω)n = t², |n| ≤ t/√μ.
    let zi = z.map(|w| w.im).norm();
    gaussian_tail_bound(omega.dim(), mu, PI, 2.0 * PI * zi / mu.sqrt(), radius)
}

/// `Σ_n exp(πi nᵀΩn + 2πi nᵀz)` over `nᵀ(Im Ω)n ≤ radius²`.
///
/// Fails with [`Error::TailBound`] when the omitted terms may exceed `1e−12`.
pub fn classical_theta(p: &ClassicalThetaParams, radius: f64) -> Result<Truncated<Complex64>> {
    let n = p.omega.dim();
    if p.z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.z.len() });
    }
    let tail_bound = classical_tail(&p.omega, &p.z, radius);
    if tail_bound.is_nan() || tail_bound >= CLASSICAL_TOLERANCE {
        return Err(Error::TailBound { bound: tail_bound, tolerance: CLASSICAL_TOLERANCE });
    }
    let om = p.omega.matrix();
    let mut sum = c(0.0, 0.0);
    for m in enumerate_quadratic(&p.omega.im(), radius)? {
        let v = to_complex(&DMatrix::from_column_slice(n, 1, m.to_f64().as_slice()));
        let v = v.column(0).into_owned();
        let e = (v.transpose() * om * &v)[(0, 0)] * c(0.0, PI) + (v.transpose() * &p.z)[(0, 0)] * c(0.0, 2.0 * PI);
        sum += e.exp();
    }
    Ok(Truncated { value: sum, radius, tail_bound })
}

/// [`classical_theta`] with the smallest quarter-step radius meeting the tolerance.
pub fn classical_theta_auto(p: &ClassicalThetaParams) -> Result<Truncated<Complex64>> {
    let mut r = 1.0;
    while classical_tail(&p.omega, &p.z, r) >= CLASSICAL_TOLERANCE / 10.0 {
        r += 0.25;
        if r > 1e3 {
            return Err(Error::TailBound { bound: classical_tail(&p.omega, &p.z, r), tolerance: CLASSICAL_TOLERANCE });
        }
    }
    classical_theta(p, r)
}

/// `|θ(Ω⁻¹z, −Ω⁻¹) − det(Ω/i)^{1/2} e^{πi zᵀΩ⁻¹z} θ(z, Ω)|`.
///
/// The square root is continuous on the Siegel space with value `1` at `Ω = i·I`.
pub fn classical_modular_check(omega: &SiegelPoint, z: &CVector) -> Result<f64> {
    let inv = complex_inverse(omega.matrix())?;
    let dual = SiegelPoint::new(-&inv)?;
    let lhs = classical_theta_auto(&ClassicalThetaParams { omega: dual, z: &inv * z })?.value;
    let over_i = omega.matrix() * c(0.0, -1.0);
    let root = sqrt_det_continuous(&over_i)?;
    let phase = ((z.transpose() * &inv * z)[(0, 0)] * c(0.0, PI)).exp();
    let rhs = root * phase * classical_theta_auto(&ClassicalThetaParams { omega: omega.clone(), z: z.clone() })?.value;
    Ok((lhs - rhs).norm())
}

// ---------------------------------------------------------------------------
// Quantum theta

/// `Θ_D = Σ_h e^{−(π/2)H(ẖ,ẖ)} e(h)` (normalized) with the prefactor `1/√(2ᴺ det Im T)` kept apart.
#[derive(Debug, Clone)]
pub struct QuantumTheta {
    pub element: TorusElement,
    pub kaehler: KaehlerStructure,
    pub lattice: LatticeEmbedding,
    pub prefactor: f64,
    pub radius: f64,
    pub tail_bound: f64,
}

fn check_compatible(k: &KaehlerStructure, d: &LatticeEmbedding) -> Result<()> {
    if !d.space().is_standard() || d.space().half_dim() != k.half_dim() {
        return Err(Error::Incompatible("lattice must sit in the standard space of the Kähler structure".into()));
    }
    Ok(())
}

/// `Gᵀ M G`, the Hermitian norm pulled back to lattice coordinates.
pub fn lattice_norm(k: &KaehlerStructure, d: &LatticeEmbedding) -> DMatrix<f64> {
    d.generators().transpose() * k.q_matrix() * d.generators()
}

/// Quantization form `exp(πi hᵀ A_D h')` of an embedded lattice.
pub fn lattice_form(d: &LatticeEmbedding) -> Result<QuantizationForm> {
    let g = d.gram();
    let m = g.matrix();
    // Exact antisymmetry for the float representation.
    let m = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i < j {
            m[(i, j)]
        } else if i > j {
            -m[(j, i)]
        } else {
            0.0
        }
    });
    QuantizationForm::new(m)
}

/// Smallest quarter-step radius with `Σ_{‖h‖>R} e^{−a‖h‖²} < tol` on `D` in the `H`-norm.
pub fn default_radius(k: &KaehlerStructure, d: &LatticeEmbedding, a: f64, tol: f64) -> Option<f64> {
    let p = lattice_norm(k, d);
    radius_for_tolerance(d.rank(), min_eigenvalue(&p), a, 0.0, tol)
}

pub fn quantum_theta(k: &KaehlerStructure, d: &LatticeEmbedding, radius: f64) -> Result<QuantumTheta> {
    check_compatible(k, d)?;
    let p = lattice_norm(k, d);
    let form = lattice_form(d)?;
    let mut element = TorusElement::zero(form);
    for h in enumerate_quadratic(&p, radius)? {
        let v = h.to_f64();
        let hh = (v.transpose() * &p * &v)[(0, 0)];
        element.add_term(h, c((-PI / 2.0 * hh).exp(), 0.0))?;
    }
    let n = k.half_dim() as i32;
    let prefactor = 1.0 / (2f64.powi(n) * k.siegel().im().determinant()).sqrt();
    let tail_bound = gaussian_tail_bound(d.rank(), min_eigenvalue(&p), PI / 2.0, 0.0, radius);
    Ok(QuantumTheta { element, kaehler: k.clone(), lattice: d.clone(), prefactor, radius, tail_bound })
}

impl QuantumTheta {
    /// `[C_g; x_g, g]` with `C_g = e^{−(π/2)H(g̱,g̱)}` and `x_g(h) = e^{−πH(g̱,ẖ)}`.
    pub fn lift(&self, g: &IntVector) -> Result<TorusHeisenbergElement> {
        let k = &self.kaehler;
        let gb = k.embed(&self.lattice.point(g))?;
        let cg = (k.hermitian(&gb, &gb)? * (-PI / 2.0)).exp();
        let r = self.lattice.rank();
        let mut w = CVector::zeros(r);
        for j in 0..r {
            let hj = k.embed(&self.lattice.point(&IntVector::unit(r, j)))?;
            w[j] = k.hermitian(&gb, &hj)? * (-PI);
        }
        TorusHeisenbergElement::new(cg, TorusCharacterAction::new(w), g.clone())
    }

    /// The multiplier `g ↦ [C_g; x_g, g]` on the basis of `D`.
    pub fn multiplier(&self) -> Result<Multiplier> {
        let r = self.lattice.rank();
        let basis: Vec<IntVector> = (0..r).map(|j| IntVector::unit(r, j)).collect();
        let lifts = basis.iter().map(|b| self.lift(b)).collect::<Result<Vec<_>>>()?;
        Multiplier::new(self.element.form().clone(), basis, lifts)
    }

    /// The full series `prefactor · Θ_D`.
    pub fn prefactored(&self) -> TorusElement {
        self.element.scale(c(self.prefactor, 0.0))
    }
}

/// Compares `C_g e(g) x_g*(Θ_D)` with `Θ_D` where both truncations are defined.
///
/// The reported tail bound covers indices with `‖h‖ > radius − ‖g‖`.
pub fn verify_multiplier_invariance(theta: &QuantumTheta, g: &IntVector) -> Result<Truncated<f64>> {
    let lift = theta.lift(g)?;
    let moved = apply_heisenberg(&lift, &theta.element)?;
    let mut residual: f64 = 0.0;
    for (h, a) in theta.element.terms() {
        if theta.element.terms().contains_key(&(h - g)) {
            residual = residual.max((moved.coefficient(h) - a).norm());
        }
    }
    let p = lattice_norm(&theta.kaehler, &theta.lattice);
    let v = g.to_f64();
    let gnorm = (v.transpose() * &p * &v)[(0, 0)].sqrt();
    let inner = (theta.radius - gnorm).max(0.0);
    let tail_bound = gaussian_tail_bound(theta.lattice.rank(), min_eigenvalue(&p), PI / 2.0, 0.0, inner);
    Ok(Truncated { value: residual, radius: theta.radius, tail_bound })
}

/// `Θ_D·1 = Σ_h θ_h U'_{(1,ẖ)}1` in Model II.
pub fn apply_to_vacuum(theta: &QuantumTheta) -> Result<FockSum> {
    let k = &theta.kaehler;
    let vac = FockSum::vacuum(k.half_dim());
    let mut out = FockSum::zero(k.half_dim());
    for (h, a) in theta.element.terms() {
        let moved = model2_act(&VectorHeisenbergElement::translation(theta.lattice.point(h)), &vac, k)?;
        out = out.add(&moved.scale(*a))?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Rieffel scalar products

/// Tail data for `y ↦ ⟨p, U_{(1,y)} q⟩`: `|·| ≤ K exp(−(π/2)‖y‖² + b‖y‖)` in the `H`-norm.
///
/// `log|⟨p, U_y q⟩| + (π/2)H(y̱,y̱)` is affine in `y`; its constant and linear
/// parts are read off from values at `0` and `±e_k`, and the fit is checked at
/// further points. Any misfit is added to the constant.
fn packet_pair_envelope(k: &KaehlerStructure, p: &GaussianPacket, q: &GaussianPacket) -> Result<(f64, f64)> {
    let dim = 2 * k.half_dim();
    let m = k.q_matrix();
    let t = k.siegel();
    let profile = |y: &DVector<f64>| -> Result<f64> {
        let moved = model1_act(&VectorHeisenbergElement::translation(y.clone()), &PacketSum::from_packets(t.clone(), [q.clone()])?)?;
        let v = packet_inner(t, p, &moved.packets()[0])?;
        Ok(v.norm().ln() + PI / 2.0 * (y.transpose() * &m * y)[(0, 0)])
    };
    let c0 = profile(&DVector::zeros(dim))?;
    let mut beta = DVector::zeros(dim);
    for j in 0..dim {
        let e = DVector::from_fn(dim, |i, _| if i == j { 1.0 } else { 0.0 });
        beta[j] = (profile(&e)? - profile(&-&e)?) / 2.0;
    }
    let mut misfit: f64 = 0.0;
    for y in sample_points(dim, 6, 17).iter().skip(1) {
        let y = y * 3.0;
        misfit = misfit.max(profile(&y)? - c0 - beta.dot(&y));
    }
    let b = (beta.transpose() * guarded_inverse(&m)? * &beta)[(0, 0)].max(0.0).sqrt();
    Ok((c0 + misfit.max(0.0) + 1e-9, b))
}

fn rieffel_tail(k: &KaehlerStructure, d: &LatticeEmbedding, phi: &PacketSum, psi: &PacketSum, radius: f64) -> Result<f64> {
    let lam = min_eigenvalue(&lattice_norm(k, d));
    let mut total = 0.0;
    for p in phi.packets() {
        for q in psi.packets() {
            let (log_k, b) = packet_pair_envelope(k, p, q)?;
            total += log_k.exp() * gaussian_tail_bound(d.rank(), lam, PI / 2.0, b, radius);
        }
    }
    Ok(total)
}

/// `_D⟨Φ,Ψ⟩ = Σ_h ⟨Φ, U_{(1,Gh)}Ψ⟩ e(h)` over `‖Gh‖_H ≤ radius`.
pub fn rieffel_product_left(phi: &PacketSum, psi: &PacketSum, d: &LatticeEmbedding, radius: f64) -> Result<Truncated<TorusElement>> {
    let k = KaehlerStructure::new(phi.siegel().clone())?;
    check_compatible(&k, d)?;
    let mut out = TorusElement::zero(lattice_form(d)?);
    for h in enumerate_quadratic(&lattice_norm(&k, d), radius)? {
        let moved = model1_act(&VectorHeisenbergElement::translation(d.point(&h)), psi)?;
        out.add_term(h, crate::gaussian_models::model1_inner(phi, &moved)?)?;
    }
    let tail_bound = rieffel_tail(&k, d, phi, psi, radius)?;
    Ok(Truncated { value: out, radius, tail_bound })
}

/// Quantization form of the right algebra on `D!`: the conjugate of the restricted pairing.
pub fn right_form(dual: &LatticeEmbedding) -> Result<QuantizationForm> {
    let f = lattice_form(dual)?;
    QuantizationForm::new(-f.matrix())
}

/// `⟨Φ,Ψ⟩_{D!} = (1/vol) Σ_{g∈D!} ⟨U_{(1,G!g)}Ψ, Φ⟩ e(g)`, where `vol = covol(D) = 1/covol(D!)`.
pub fn rieffel_product_right(phi: &PacketSum, psi: &PacketSum, dual: &LatticeEmbedding, radius: f64) -> Result<Truncated<TorusElement>> {
    let k = KaehlerStructure::new(phi.siegel().clone())?;
    check_compatible(&k, dual)?;
    let vol = 1.0 / dual.covolume()?;
    let mut out = TorusElement::zero(right_form(dual)?);
    for g in enumerate_quadratic(&lattice_norm(&k, dual), radius)? {
        let moved = model1_act(&VectorHeisenbergElement::translation(dual.point(&g)), psi)?;
        out.add_term(g, crate::gaussian_models::model1_inner(&moved, phi)? / vol)?;
    }
    let tail_bound = rieffel_tail(&k, dual, psi, phi, radius)? / vol;
    Ok(Truncated { value: out, radius, tail_bound })
}

/// `a·Φ = Σ_h a_h U_{(1,Gh)}Φ`.
pub fn left_action(a: &TorusElement, phi: &PacketSum, d: &LatticeEmbedding) -> Result<PacketSum> {
    if a.form().rank() != d.rank() {
        return Err(Error::DimensionMismatch { expected: d.rank(), found: a.form().rank() });
    }
    let mut out = PacketSum::new(phi.siegel().clone());
    for (h, x) in a.terms() {
        let moved = model1_act(&VectorHeisenbergElement::translation(d.point(h)), phi)?;
        out = out.add(&moved.scale(*x))?;
    }
    Ok(out)
}

/// `Φ·b = Σ_g b_g U_{(1,−G!g)}Φ`, the right action through `e(g) ↦ e(g)⁻¹`.
pub fn right_action(phi: &PacketSum, b: &TorusElement, dual: &LatticeEmbedding) -> Result<PacketSum> {
    if b.form().rank() != dual.rank() {
        return Err(Error::DimensionMismatch { expected: dual.rank(), found: b.form().rank() });
    }
    let mut out = PacketSum::new(phi.siegel().clone());
    for (g, x) in b.terms() {
        let moved = model1_act(&VectorHeisenbergElement::translation(-dual.point(g)), phi)?;
        out = out.add(&moved.scale(*x))?;
    }
    Ok(out)
}

/// `max_x |(_D⟨Φ,Ψ⟩Ξ)(x) − (Φ⟨Ψ,Ξ⟩_{D!})(x)|` over the sample points.
pub fn associativity_check(
    phi: &PacketSum,
    psi: &PacketSum,
    xi: &PacketSum,
    d: &LatticeEmbedding,
    radius: f64,
    sample_points: &[DVector<f64>],
) -> Result<Truncated<f64>> {
    let dual = d.dual_lattice()?;
    let left = rieffel_product_left(phi, psi, d, radius)?;
    let right = rieffel_product_right(psi, xi, &dual, radius)?;
    let lhs = left_action(&left.value, xi, d)?;
    let rhs = right_action(phi, &right.value, &dual)?;
    let mut residual: f64 = 0.0;
    for x in sample_points {
        residual = residual.max((lhs.evaluate(x)? - rhs.evaluate(x)?).norm());
    }
    // Omitted coefficients multiply unit-bounded packet values only up to their sup norm.
    let sup = |f: &PacketSum| f.packets().iter().map(|p| p.gamma.norm() * sup_packet(f.siegel(), p)).sum::<f64>();
    let tail_bound = left.tail_bound * sup(xi) + right.tail_bound * sup(phi);
    Ok(Truncated { value: residual, radius, tail_bound })
}

/// `sup_x |exp(πi(x+s)ᵀT(x+s) + 2πi bᵀx)|`.
fn sup_packet(t: &SiegelPoint, p: &GaussianPacket) -> f64 {
    // log|·| = −π(x+Re s)ᵀS(x+Re s) − 2π Im(s)ᵀ R (x + Re s) + π Im(s)ᵀ S Im(s)... maximized in closed form:
    // write the exponent's real part as −π xᵀSx + lᵀx + c and maximize.
    let s_mat = t.im();
    let n = t.dim();
    let f = |x: &DVector<f64>| -> f64 {
        let xc = x.map(|v| c(v, 0.0)) + &p.s;
        let e = (xc.transpose() * t.matrix() * &xc)[(0, 0)] * c(0.0, PI)
            + (p.b.transpose() * x.map(|v| c(v, 0.0)))[(0, 0)] * c(0.0, 2.0 * PI);
        e.re
    };
    let zero = DVector::zeros(n);
    let c0 = f(&zero);
    let mut l = DVector::zeros(n);
    for j in 0..n {
        let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
        l[j] = (f(&e) - f(&-&e)) / 2.0;
    }
    let s_inv = guarded_inverse(&s_mat).unwrap_or_else(|_| DMatrix::identity(n, n));
    (c0 + (l.transpose() * s_inv * &l)[(0, 0)] / (4.0 * PI)).exp()
}

// ---------------------------------------------------------------------------
// Poisson summation

/// `Σ_{h∈D} e^{−πH(ẖ,ẖ) − πH(x̱,ẖ)}` over `‖h‖_H ≤ radius`.
pub fn vacuum_sum(k: &KaehlerStructure, d: &LatticeEmbedding, x: &DVector<f64>, radius: f64) -> Result<Truncated<Complex64>> {
    check_compatible(k, d)?;
    let xb = k.embed(x)?;
    let p = lattice_norm(k, d);
    let mut sum = c(0.0, 0.0);
    for h in enumerate_quadratic(&p, radius)? {
        let hb = k.embed(&d.point(&h))?;
        sum += (-(k.hermitian(&hb, &hb)? + k.hermitian(&xb, &hb)?) * PI).exp();
    }
    // |e^{−πH(x̱,ẖ)}| ≤ e^{π‖x‖‖h‖} by Cauchy–Schwarz for Re H.
    let xn = (x.transpose() * k.q_matrix() * x)[(0, 0)].sqrt();
    let tail_bound = gaussian_tail_bound(d.rank(), min_eigenvalue(&p), PI, PI * xn, radius);
    Ok(Truncated { value: sum, radius, tail_bound })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonReport {
    /// `max_x |S_D(x) − S_{D!}(x)|`.
    pub literal_residual: f64,
    /// `max_x |S_D(x) − S_{D!}(x)/covol(D)|`.
    pub normalized_residual: f64,
    /// `S_{D!}(x)/S_D(x)` at the first sample point.
    pub ratio: Complex64,
    pub covolume: f64,
    pub tail_bound: f64,
}

/// Both sides of the vacuum-level functional equation for `D` and `D!`.
pub fn poisson_check(k: &KaehlerStructure, d: &LatticeEmbedding, x_samples: &[DVector<f64>], radius: f64) -> Result<PoissonReport> {
    if d.rank() != d.ambient_dim() {
        return Err(Error::Degenerate("lattice must have rank 2N".into()));
    }
    let dual = d.dual_lattice()?;
    let covolume = d.covolume()?;
    let mut literal: f64 = 0.0;
    let mut normalized: f64 = 0.0;
    let mut ratio = c(f64::NAN, 0.0);
    let mut tail: f64 = 0.0;
    for (i, x) in x_samples.iter().enumerate() {
        let lhs = vacuum_sum(k, d, x, radius)?;
        let rhs = vacuum_sum(k, &dual, x, radius)?;
        literal = literal.max((lhs.value - rhs.value).norm());
        normalized = normalized.max((lhs.value - rhs.value / covolume).norm());
        tail = tail.max(lhs.tail_bound + rhs.tail_bound);
        if i == 0 {
            ratio = rhs.value / lhs.value;
        }
    }
    Ok(PoissonReport { literal_residual: literal, normalized_residual: normalized, ratio, covolume, tail_bound: tail })
}

/// Solves `Q(h+η) − Q(η) = H(ẖ,ẖ) + H(x̱,ẖ) + 2iA(g,h)` for `η ∈ ℂ^{2N}`.
///
/// With `Q(v) = vᵀMv` this is the linear system `2Mη = c_x − 2iJg`, where
/// `c_xᵀh = H(x̱,ẖ)`, i.e. `c_x = (T̄S⁻¹x̱, S⁻¹x̱)`.
pub fn eta_solve(k: &KaehlerStructure, x: &DVector<f64>, g: &DVector<f64>) -> Result<CVector> {
    let n = k.half_dim();
    if g.len() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, found: g.len() });
    }
    let xb = k.embed(x)?;
    let s_inv = to_complex(k.s_inv());
    let tb = k.siegel().matrix().map(|z| z.conj());
    let top = &tb * &s_inv * &xb;
    let bottom = &s_inv * &xb;
    let j = to_complex(k.space().form());
    let gc = g.map(|v| c(v, 0.0));
    let mut rhs = CVector::zeros(2 * n);
    rhs.rows_mut(0, n).copy_from(&top);
    rhs.rows_mut(n, n).copy_from(&bottom);
    let rhs = rhs - j * gc * c(0.0, 2.0);
    let m_inv = to_complex(&guarded_inverse(&k.q_matrix())?);
    Ok(m_inv * rhs * c(0.5, 0.0))
}

/// Residuals of the defining identity (max over `h_samples`) and of `Q(η) = −H(g̱,g̱) − H(x̱,g̱)`.
pub fn eta_residuals(k: &KaehlerStructure, x: &DVector<f64>, g: &DVector<f64>, h_samples: &[DVector<f64>]) -> Result<(f64, f64)> {
    let eta = eta_solve(k, x, g)?;
    let m = to_complex(&k.q_matrix());
    let q = |v: &CVector| (v.transpose() * &m * v)[(0, 0)];
    let xb = k.embed(x)?;
    let gb = k.embed(g)?;
    let mut defining: f64 = 0.0;
    for h in h_samples {
        let hc = h.map(|v| c(v, 0.0));
        let hb = k.embed(h)?;
        let lhs = q(&(&hc + &eta)) - q(&eta);
        let rhs = k.hermitian(&hb, &hb)? + k.hermitian(&xb, &hb)? + c(0.0, 2.0 * k.space().pair(g, h)?);
        defining = defining.max((lhs - rhs).norm());
    }
    let value = (q(&eta) + k.hermitian(&gb, &gb)? + k.hermitian(&xb, &gb)?).norm();
    Ok((defining, value))
}

/// `f_x(h) = e^{−πH(ẖ,ẖ) − πH(x̱,ẖ)}` for real `h`.
pub fn f_x(k: &KaehlerStructure, x: &DVector<f64>, h: &DVector<f64>) -> Result<Complex64> {
    let xb = k.embed(x)?;
    let hb = k.embed(h)?;
    Ok((-(k.hermitian(&hb, &hb)? + k.hermitian(&xb, &hb)?) * PI).exp())
}

/// `max_g |f̂_x(g) − f_x(g)|` with `f̂_x(g) = ∫ f_x(h) e^{−2πiA(g,h)} dh` by 2D quadrature (`N = 1`).
pub fn self_fourier_check(
    k: &KaehlerStructure,
    x: &DVector<f64>,
    g_samples: &[DVector<f64>],
    half_width: f64,
    points_per_axis: usize,
) -> Result<f64> {
    if k.half_dim() != 1 {
        return Err(Error::Incompatible("self-Fourier oracle supports N = 1".into()));
    }
    let rule = TensorGauss::new(points_per_axis)?;
    let mut worst: f64 = 0.0;
    for g in g_samples {
        // centre the box at the real part of the saddle −η
        let eta = eta_solve(k, x, g)?;
        let center = [-eta[0].re, -eta[1].re];
        let mut h = DVector::zeros(2);
        let approx = rule.integrate_box(&center, half_width, |p| {
            h.copy_from_slice(p);
            let a = k.space().pair(g, &h).expect("dimension");
            f_x(k, x, &h).expect("dimension") * Complex64::from_polar(1.0, -2.0 * PI * a)
        });
        worst = worst.max((approx - f_x(k, x, g)?).norm());
    }
    Ok(worst)
}

/// Output of [`reconstruct_from_multiplier`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub kaehler: KaehlerStructure,
    pub lattice: LatticeEmbedding,
    pub theta: QuantumTheta,
    /// `max |q_matrix(T) − M|` for the recovered `T`.
    pub q_residual: f64,
    /// `max_h |Γ-generator_h − s·θ_h|` after fixing the scalar `s` at `h = 0`.
    pub generator_residual: f64,
    pub scalar: Complex64,
}

/// Basis `W` with `Wᵀ A W = J` by symplectic Gram–Schmidt.
pub fn darboux_basis(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = a.nrows();
    if !r.is_multiple_of(2) || !a.is_square() {
        return Err(Error::Degenerate("antisymmetric form of odd size".into()));
    }
    let n = r / 2;
    let omega = |u: &DVector<f64>, v: &DVector<f64>| (u.transpose() * a * v)[(0, 0)];
    let mut pool: Vec<DVector<f64>> = (0..r).map(|j| DVector::from_fn(r, |i, _| if i == j { 1.0 } else { 0.0 })).collect();
    let mut us = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for _ in 0..n {
        let u = pool.remove(0);
        let (idx, best) = pool
            .iter()
            .enumerate()
            .map(|(i, v)| (i, omega(&u, v)))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .ok_or_else(|| Error::Degenerate("form is degenerate".into()))?;
        if best.abs() < 1e-12 {
            return Err(Error::Degenerate("form is degenerate".into()));
        }
        let v = pool.remove(idx) / best;
        pool = pool.into_iter().map(|w| &w - &u * omega(&w, &v) + &v * omega(&w, &u)).collect();
        us.push(u);
        vs.push(v);
    }
    let cols: Vec<DVector<f64>> = us.into_iter().chain(vs).collect();
    Ok(DMatrix::from_columns(&cols))
}

/// Recovers `(T, D)` from a multiplier on a full lattice whose structure form is
/// `e^{−π Re H}`, and compares `Θ_D` with the generator of its invariant space.
pub fn reconstruct_from_multiplier(m: &Multiplier, radius: f64) -> Result<Reconstruction> {
    let r = m.form().rank();
    if m.basis().len() != r || m.index()? != 1 {
        return Err(Error::Incompatible("multiplier must be defined on all of D".into()));
    }
    if !is_ample(m) {
        return Err(Error::NotAmple);
    }
    let sf = structure_form(m)?;
    let vals = sf.generator_values();
    for i in 0..r {
        for j in 0..r {
            let v = vals[(i, j)];
            if v.re <= 0.0 || v.im.abs() > 1e-10 * v.norm() {
                return Err(Error::Incompatible(format!("structure form is not real positive at pair ({i}, {j})")));
            }
        }
    }
    // Structure form in B-coordinates; transport to D (B is unimodular).
    let p_b = -sf.log_modulus_gram() / PI;
    let b_inv = m
        .basis_matrix()
        .inverse()
        .ok_or_else(|| Error::Degenerate("B basis".into()))?
        .to_f64();
    let p_d = b_inv.transpose() * &p_b * &b_inv;
    let a_d = m.form().matrix().clone();
    // P + iA_D comes from a Kähler structure iff P⁻¹A_D is a complex structure.
    let jc = guarded_inverse(&p_d)? * &a_d;
    let defect = (&jc * &jc + DMatrix::identity(r, r)).amax();
    if defect > 1e-8 {
        return Err(Error::Incompatible(format!("P⁻¹A_D squares to −I only up to {defect:.3e}")));
    }
    let w = darboux_basis(&a_d)?;
    let mm = w.transpose() * &p_d * &w;
    let n = r / 2;
    let s = guarded_inverse(&mm.view((n, n), (n, n)).into_owned())?;
    let re = mm.view((0, n), (n, n)).into_owned() * &s;
    let re = (&re + re.transpose()) * 0.5;
    let kaehler = KaehlerStructure::new(SiegelPoint::from_parts(&re, &s)?)?;
    let q_residual = (kaehler.q_matrix() - &mm).amax();
    let lattice = LatticeEmbedding::new(crate::lattices::SymplecticSpace::standard(n), guarded_inverse(&w)?)?;
    let theta = quantum_theta(&kaehler, &lattice, radius)?;
    let generator = gamma_basis(m, radius)?.elements.remove(0);
    let zero = IntVector::zeros(r);
    let scalar = generator.coefficient(&zero) / theta.element.coefficient(&zero);
    let mut generator_residual: f64 = 0.0;
    for (hh, a) in theta.element.terms() {
        if generator.terms().contains_key(hh) {
            generator_residual = generator_residual.max((generator.coefficient(hh) - a * scalar).norm());
        }
    }
    Ok(Reconstruction { kaehler, lattice, theta, q_residual, generator_residual, scalar })
}
