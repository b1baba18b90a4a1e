//! Lattices in `ℝ^{2N} × F × F̂` for a finite abelian group `F`, and the
//! theta family `Θ_{a,b}` spanning the invariants of the kernel multiplier.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{RatMatrix, Rational};
use crate::gaussian_models::{model1_act, model1_inner, PacketSum};
use crate::heisenberg::{apply_heisenberg, gamma_basis, Multiplier, TorusHeisenbergElement, VectorHeisenbergElement};
use crate::kaehler::KaehlerStructure;
use crate::lattices::{enumerate_quadratic, Entry, IntVector, LatticeEmbedding, SymplecticSpace};
use crate::linalg::{c, min_eigenvalue, CVector};
use crate::tail::gaussian_tail_bound;
use crate::theta_engine::Truncated;
use crate::torus_algebra::{FiniteTwist, QuantizationForm, TorusCharacterAction, TorusElement};

/// `ℤ/m₁ × … × ℤ/m_k`; characters are residue vectors with `l(a) = e^{2πi Σ l_j a_j / m_j}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteAbelianGroup {
    orders: Vec<i64>,
}

impl FiniteAbelianGroup {
    pub fn new(orders: Vec<i64>) -> Result<Self> {
        if orders.iter().any(|&m| m <= 0) {
            return Err(Error::Parse(format!("group orders must be positive, got {orders:?}")));
        }
        Ok(Self { orders })
    }

    pub fn trivial() -> Self {
        Self { orders: Vec::new() }
    }

    pub fn orders(&self) -> &[i64] {
        &self.orders
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn card(&self) -> usize {
        self.orders.iter().product::<i64>() as usize
    }

    pub fn exponent(&self) -> i64 {
        self.orders.iter().fold(1, |acc, &m| lcm(acc, m))
    }

    pub fn reduce(&self, a: &[i64]) -> Vec<i64> {
        a.iter().zip(&self.orders).map(|(x, m)| x.rem_euclid(*m)).collect()
    }

    pub fn add(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        self.reduce(&a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>())
    }

    /// Elements in lexicographic order; the position is the index used by [`act_h2`].
    pub fn elements(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for &m in &self.orders {
            out = out.into_iter().flat_map(|p| (0..m).map(move |x| [p.clone(), vec![x]].concat())).collect();
        }
        out
    }

    pub fn index_of(&self, a: &[i64]) -> usize {
        self.reduce(a).iter().zip(&self.orders).fold(0, |acc, (x, m)| acc * *m as usize + *x as usize)
    }

    /// `l(a)`.
    pub fn character(&self, l: &[i64], a: &[i64]) -> Complex64 {
        let t: f64 = l.iter().zip(a).zip(&self.orders).map(|((x, y), m)| (x * y).rem_euclid(*m) as f64 / *m as f64).sum();
        Complex64::from_polar(1.0, 2.0 * PI * t)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

/// `ψ₀((a,l),(a′,l′)) = l′(a)`.
pub fn psi0(group: &FiniteAbelianGroup, g: (&[i64], &[i64]), h: (&[i64], &[i64])) -> Complex64 {
    group.character(h.1, g.0)
}

/// `(U_{(λ;a,l)}φ)(b) = λ·l(b)·φ(a+b)` on functions on `F`.
pub fn act_h2(group: &FiniteAbelianGroup, lambda: Complex64, a: &[i64], l: &[i64], phi: &CVector) -> Result<CVector> {
    if phi.len() != group.card() {
        return Err(Error::DimensionMismatch { expected: group.card(), found: phi.len() });
    }
    let els = group.elements();
    Ok(CVector::from_fn(els.len(), |i, _| {
        let b = &els[i];
        lambda * group.character(l, b) * phi[group.index_of(&group.add(a, b))]
    }))
}

/// Delta function `δ_a` on `F`.
pub fn delta(group: &FiniteAbelianGroup, a: &[i64]) -> CVector {
    let mut v = CVector::zeros(group.card());
    v[group.index_of(a)] = c(1.0, 0.0);
    v
}

/// `Σ_a φ(a) conj(χ(a))`.
pub fn h2_inner(phi: &CVector, chi: &CVector) -> Complex64 {
    phi.iter().zip(chi.iter()).map(|(x, y)| x * y.conj()).sum()
}

/// Element `(λ, x, a, l)` of the Heisenberg group of `ℝ^{2N} × F × F̂` for `ψ·ψ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedHeisenbergElement {
    pub lambda: Complex64,
    pub x: DVector<f64>,
    pub a: Vec<i64>,
    pub l: Vec<i64>,
}

impl ExtendedHeisenbergElement {
    /// Image of `((λ, x), (μ, a, l))` under the quotient map to the combined group.
    pub fn from_pair(v: &VectorHeisenbergElement, mu: Complex64, a: Vec<i64>, l: Vec<i64>) -> Self {
        Self { lambda: v.lambda * mu, x: v.x.clone(), a, l }
    }

    pub fn compose(&self, other: &Self, space: &SymplecticSpace, group: &FiniteAbelianGroup) -> Result<Self> {
        let psi = Complex64::from_polar(1.0, PI * space.pair(&self.x, &other.x)?);
        let p0 = psi0(group, (&self.a, &self.l), (&other.a, &other.l));
        Ok(Self {
            lambda: self.lambda * other.lambda * psi * p0,
            x: &self.x + &other.x,
            a: group.add(&self.a, &other.a),
            l: group.add(&self.l, &other.l),
        })
    }
}

/// Generator `(v, a, l)` of an extended lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtendedGeneratorJson {
    pub v: Vec<Entry>,
    pub a: Vec<i64>,
    pub l: Vec<i64>,
}

/// `{"N": int, "orders": [ints], "generators": [{"v": [reals], "a": [ints], "l": [ints]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtendedLatticeJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub orders: Vec<i64>,
    pub generators: Vec<ExtendedGeneratorJson>,
}

/// Lattice `D ⊂ ℝ^{2N} × F × F̂` given by `2N` generators `(v_i, a_i, l_i)`.
#[derive(Debug, Clone)]
pub struct ExtendedLattice {
    group: FiniteAbelianGroup,
    real: LatticeEmbedding,
    a: Vec<Vec<i64>>,
    l: Vec<Vec<i64>>,
}

impl ExtendedLattice {
    pub fn new(group: FiniteAbelianGroup, real: LatticeEmbedding, a: Vec<Vec<i64>>, l: Vec<Vec<i64>>) -> Result<Self> {
        let r = real.rank();
        if r != real.ambient_dim() {
            return Err(Error::Degenerate(format!("real parts have rank {r}, need {}", real.ambient_dim())));
        }
        if !real.space().is_standard() {
            return Err(Error::Incompatible("extended lattices live over the standard symplectic space".into()));
        }
        if a.len() != r || l.len() != r {
            return Err(Error::DimensionMismatch { expected: r, found: a.len().min(l.len()) });
        }
        if let Some(bad) = a.iter().chain(&l).find(|x| x.len() != group.rank()) {
            return Err(Error::DimensionMismatch { expected: group.rank(), found: bad.len() });
        }
        let a = a.iter().map(|x| group.reduce(x)).collect();
        let l = l.iter().map(|x| group.reduce(x)).collect();
        Ok(Self { group, real, a, l })
    }

    /// `F = ℤ/2`, generators `((½,0),1,0)` and `((0,½),0,1)`.
    pub fn z2_example() -> Self {
        let half = Rational::new(1, 2);
        let real = LatticeEmbedding::diagonal(1, &[half, half]).expect("diagonal lattice");
        Self::new(FiniteAbelianGroup::new(vec![2]).expect("order"), real, vec![vec![1], vec![0]], vec![vec![0], vec![1]])
            .expect("valid example")
    }

    /// A plain lattice with trivial finite part.
    pub fn from_plain(real: LatticeEmbedding) -> Result<Self> {
        let r = real.rank();
        Self::new(FiniteAbelianGroup::trivial(), real, vec![Vec::new(); r], vec![Vec::new(); r])
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let j: ExtendedLatticeJson = serde_json::from_value(v.clone())?;
        let dim = 2 * j.n;
        if j.generators.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: j.generators.len() });
        }
        let group = FiniteAbelianGroup::new(j.orders.clone())?;
        let space = SymplecticSpace::standard(j.n);
        let exact: Option<Vec<Rational>> = j
            .generators
            .iter()
            .flat_map(|g| g.v.iter())
            .map(|e| e.exact())
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .collect();
        if let Some(bad) = j.generators.iter().find(|g| g.v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.v.len() });
        }
        let real = match exact {
            Some(vals) => LatticeEmbedding::from_exact(space, RatMatrix::from_fn(dim, dim, |i, k| vals[k * dim + i]))?,
            None => {
                let vals = j.generators.iter().flat_map(|g| g.v.iter()).map(|e| e.value()).collect::<Result<Vec<_>>>()?;
                LatticeEmbedding::new(space, DMatrix::from_column_slice(dim, dim, &vals))?
            }
        };
        let a = j.generators.iter().map(|g| g.a.clone()).collect();
        let l = j.generators.iter().map(|g| g.l.clone()).collect();
        Self::new(group, real, a, l)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let g = self.real.generators();
        let gens: Vec<ExtendedGeneratorJson> = (0..self.rank())
            .map(|i| ExtendedGeneratorJson {
                v: g.column(i).iter().map(|x| Entry::Float(*x)).collect(),
                a: self.a[i].clone(),
                l: self.l[i].clone(),
            })
            .collect();
        serde_json::to_value(ExtendedLatticeJson { n: self.half_dim(), orders: self.group.orders().to_vec(), generators: gens })
            .expect("serializable")
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    /// The real parts as an embedded lattice in `ℝ^{2N}`.
    pub fn real(&self) -> &LatticeEmbedding {
        &self.real
    }

    pub fn rank(&self) -> usize {
        self.real.rank()
    }

    pub fn half_dim(&self) -> usize {
        self.real.space().half_dim()
    }

    /// `a_h` for `h` in generator coordinates.
    pub fn finite_part(&self, h: &IntVector) -> Vec<i64> {
        self.combine(&self.a, h)
    }

    /// `l_h` for `h` in generator coordinates.
    pub fn character_part(&self, h: &IntVector) -> Vec<i64> {
        self.combine(&self.l, h)
    }

    fn combine(&self, parts: &[Vec<i64>], h: &IntVector) -> Vec<i64> {
        let raw: Vec<i64> =
            (0..self.group.rank()).map(|k| parts.iter().zip(&h.0).map(|(p, n)| p[k] * n).sum()).collect();
        self.group.reduce(&raw)
    }

    /// `(a_h, l_h)` concatenated.
    pub fn label(&self, h: &IntVector) -> Vec<i64> {
        [self.finite_part(h), self.character_part(h)].concat()
    }

    fn label_rows(&self) -> (Vec<Vec<i64>>, Vec<i64>) {
        let k = self.group.rank();
        let mut rows = Vec::with_capacity(2 * k);
        for parts in [&self.a, &self.l] {
            for j in 0..k {
                rows.push(parts.iter().map(|p| p[j]).collect());
            }
        }
        let moduli = [self.group.orders(), self.group.orders()].concat();
        (rows, moduli)
    }

    /// Matrix `C` with `ψ₀(g,h) = exp(2πi gᵀCh)` in generator coordinates.
    fn psi0_matrix(&self) -> Vec<Vec<f64>> {
        let r = self.rank();
        let m = self.group.orders();
        (0..r)
            .map(|i| (0..r).map(|j| (0..m.len()).map(|k| (self.a[i][k] * self.l[j][k]) as f64 / m[k] as f64).sum()).collect())
            .collect()
    }
}

/// Basis of `{n ∈ ℤʳ : ⟨row_k, n⟩ ≡ 0 mod m_k}` in Hermite normal form.
pub fn congruence_kernel(rows: &[Vec<i64>], moduli: &[i64], r: usize) -> Vec<IntVector> {
    let mut basis: Vec<Vec<i128>> = (0..r).map(|i| (0..r).map(|j| i128::from(i == j)).collect()).collect();
    for (row, &m) in rows.iter().zip(moduli) {
        let m = m as i128;
        let value = |v: &[i128]| -> i128 { row.iter().zip(v).map(|(a, b)| *a as i128 * b).sum::<i128>().rem_euclid(m) };
        // unimodular moves bringing all values onto basis[0]
        for j in 1..r {
            loop {
                let (t0, tj) = (value(&basis[0]), value(&basis[j]));
                if tj == 0 {
                    break;
                }
                if t0 == 0 || tj < t0 {
                    basis.swap(0, j);
                    continue;
                }
                let q = tj / t0;
                let b0 = basis[0].clone();
                for (x, y) in basis[j].iter_mut().zip(&b0) {
                    *x -= q * y;
                }
            }
        }
        let t0 = value(&basis[0]);
        let factor = m / gcd_i128(t0, m);
        for x in basis[0].iter_mut() {
            *x *= factor;
        }
    }
    hermite_rows(basis).into_iter().map(|v| IntVector(v.into_iter().map(|x| x as i64).collect())).collect()
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd_i128(b, a % b)
    }
}

/// Row-style Hermite normal form of a full-rank square integer basis.
fn hermite_rows(mut b: Vec<Vec<i128>>) -> Vec<Vec<i128>> {
    let r = b.len();
    for col in 0..r {
        for i in col + 1..r {
            while b[i][col] != 0 {
                let q = b[col][col].checked_div(b[i][col]).unwrap_or(0);
                let bi = b[i].clone();
                for (x, y) in b[col].iter_mut().zip(&bi) {
                    *x -= q * y;
                }
                b.swap(col, i);
            }
        }
        if b[col][col] < 0 {
            for x in b[col].iter_mut() {
                *x = -*x;
            }
        }
        let p = b[col][col];
        if p != 0 {
            for i in 0..col {
                let q = b[i][col].div_euclid(p);
                let bc = b[col].clone();
                for (x, y) in b[i].iter_mut().zip(&bc) {
                    *x -= q * y;
                }
            }
        }
    }
    b
}

/// `D₀ = ker(D → F × F̂)` with coset representatives of `D/D₀`.
#[derive(Debug, Clone)]
pub struct KernelD0 {
    /// Basis of `D₀` in generator coordinates of `D`.
    pub basis: Vec<IntVector>,
    /// Real parts of `D₀`.
    pub lattice: LatticeEmbedding,
    pub index: usize,
    /// One representative per coset, ordered by label; index 0 is the zero coset.
    pub representatives: Vec<IntVector>,
    pub labels: Vec<Vec<i64>>,
}

impl KernelD0 {
    pub fn coset_of(&self, d: &ExtendedLattice, h: &IntVector) -> usize {
        let lab = d.label(h);
        self.labels.binary_search(&lab).expect("every label occurs")
    }
}

pub fn kernel_d0(d: &ExtendedLattice) -> Result<KernelD0> {
    let r = d.rank();
    let (rows, moduli) = d.label_rows();
    let basis = congruence_kernel(&rows, &moduli, r);
    let bm = RatMatrix::from_fn(r, r, |i, j| Rational::from_integer(basis[j].0[i] as i128));
    let index = bm.determinant().map(|x| x.to_integer().unsigned_abs() as usize).unwrap_or(0);
    let expected = d.group().card().pow(2);
    if index != expected {
        return Err(Error::NotSurjective { image: index, expected });
    }
    let lattice = match d.real().exact_generators() {
        Some(g) => LatticeEmbedding::from_exact(d.real().space().clone(), g.mul(&bm)?)?,
        None => LatticeEmbedding::new(d.real().space().clone(), d.real().generators() * bm.to_f64())?,
    };
    // minimal real norm, lexicographic tie-break
    let gram = d.real().generators().transpose() * d.real().generators();
    let mut best: BTreeMap<Vec<i64>, (i64, IntVector)> = BTreeMap::new();
    let mut radius = 1.0;
    while best.len() < expected {
        for h in enumerate_quadratic(&gram, radius)? {
            let v = h.to_f64();
            let key = ((v.transpose() * &gram * &v)[(0, 0)] * 1e9).round() as i64;
            let lab = d.label(&h);
            let better = match best.get(&lab) {
                None => true,
                Some((k, old)) => (key, &h) < (*k, old),
            };
            if better {
                best.insert(lab, (key, h));
            }
        }
        radius *= 2.0;
    }
    let labels: Vec<Vec<i64>> = best.keys().cloned().collect();
    let representatives = best.into_values().map(|(_, h)| h).collect();
    Ok(KernelD0 { basis, lattice, index, representatives, labels })
}

/// Unimodular values `c` on the cosets of `D/D₀`, indexed like [`KernelD0::labels`].
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub values: Vec<Complex64>,
}

impl Cochain {
    pub fn trivial(index: usize) -> Self {
        Self { values: vec![c(1.0, 0.0); index] }
    }

    /// The solved cochain of [`ExtendedLattice::z2_example`]: `i` on the coset of `b₁ + b₂`.
    pub fn z2_example() -> Self {
        Self { values: vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)] }
    }

    /// `{"values": {"0": [re, im], …}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> =
            self.values.iter().enumerate().map(|(i, z)| (i.to_string(), serde_json::json!([z.re, z.im]))).collect();
        serde_json::json!({ "values": map })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let map = v
            .get("values")
            .and_then(|m| m.as_object())
            .ok_or_else(|| Error::Parse("cochain needs an object \"values\"".into()))?;
        let mut values = vec![None; map.len()];
        for (k, z) in map {
            let i: usize = k.parse().map_err(|_| Error::Parse(format!("bad coset index {k:?}")))?;
            let pair: [f64; 2] = serde_json::from_value(z.clone())?;
            *values.get_mut(i).ok_or_else(|| Error::Parse(format!("coset index {i} out of range")))? = Some(c(pair[0], pair[1]));
        }
        let values = values.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| Error::Parse("missing coset index".into()))?;
        Ok(Self { values })
    }
}

const PHASE_TOLERANCE: f64 = 1e-10;

fn twisted_form(d: &ExtendedLattice, kernel: &KernelD0, cochain: &Cochain) -> Result<QuantizationForm> {
    let (label_rows, moduli) = d.label_rows();
    let twist = FiniteTwist {
        label_rows,
        moduli,
        bilinear: d.psi0_matrix(),
        cochain: kernel.labels.iter().cloned().zip(cochain.values.iter().copied()).collect(),
    };
    let a = d.real().gram();
    let m = a.matrix();
    let a_d = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| if i < j { m[(i, j)] } else if i > j { -m[(j, i)] } else { 0.0 });
    QuantizationForm::new(a_d)?.with_twist(twist)
}

/// Builds `α(g,h) = (c_g c_h / c_{g+h}) ψ(g,h) ψ₀(g,h)` and checks it is antisymmetric
/// on generator pairs and 50 seeded random pairs.
pub fn validate_cochain(d: &ExtendedLattice, cochain: &Cochain) -> Result<QuantizationForm> {
    let kernel = kernel_d0(d)?;
    if cochain.values.len() != kernel.index {
        return Err(Error::DimensionMismatch { expected: kernel.index, found: cochain.values.len() });
    }
    if let Some(i) = cochain.values.iter().position(|z| (z.norm() - 1.0).abs() > PHASE_TOLERANCE) {
        return Err(Error::Cochain(format!("value on coset {i} is not unimodular")));
    }
    if (cochain.values[0] - 1.0).norm() > PHASE_TOLERANCE {
        return Err(Error::Cochain("c must be 1 on D₀".into()));
    }
    let form = twisted_form(d, &kernel, cochain)?;
    let r = d.rank();
    let mut pairs = Vec::new();
    for i in 0..r {
        for j in i..r {
            pairs.push((IntVector::unit(r, i), IntVector::unit(r, j)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rand_vec = || IntVector((0..r).map(|_| rng.random_range(-4..=4)).collect());
    for _ in 0..50 {
        pairs.push((rand_vec(), rand_vec()));
    }
    for (g, h) in &pairs {
        let diag = form.alpha(g, g);
        if (diag - 1.0).norm() > PHASE_TOLERANCE {
            return Err(Error::Antisymmetry(g.to_string(), g.to_string()));
        }
        if (form.alpha(g, h) * form.alpha(h, g) - 1.0).norm() > PHASE_TOLERANCE {
            return Err(Error::Antisymmetry(g.to_string(), h.to_string()));
        }
    }
    Ok(form)
}

/// Depth-first search for a valid cochain with values in the `2·exp(F)`-th roots of unity.
///
/// Gives up after `budget` search nodes.
pub fn solve_cochain(d: &ExtendedLattice, budget: usize) -> Result<Cochain> {
    let kernel = kernel_d0(d)?;
    let g = d.group();
    let order = 2 * g.exponent();
    let k = g.rank();
    let labels = &kernel.labels;
    let n = labels.len();
    let add = |u: &[i64], v: &[i64]| -> usize {
        let s = [g.add(&u[..k], &v[..k]), g.add(&u[k..], &v[k..])].concat();
        labels.binary_search(&s).expect("closed under addition")
    };
    // ψ₀(u, v) = ζ^{p(u,v)} with ζ = e^{2πi/order}
    let p = |u: &[i64], v: &[i64]| -> i64 {
        (0..k).map(|j| u[j] * v[k + j] * (order / g.orders()[j])).sum::<i64>().rem_euclid(order)
    };
    let sum: Vec<Vec<usize>> = (0..n).map(|i| (0..n).map(|j| add(&labels[i], &labels[j])).collect()).collect();
    let mut e = vec![0i64; n];
    let mut nodes = 0usize;
    let consistent = |e: &[i64], upto: usize| -> bool {
        for i in 0..=upto {
            for j in i..=upto {
                let s = sum[i][j];
                if s > upto || (i != upto && j != upto && s != upto) {
                    continue;
                }
                let (u, v) = (&labels[i], &labels[j]);
                if i == j && (2 * e[i] - e[s] + p(u, u)).rem_euclid(order) != 0 {
                    return false;
                }
                if (2 * (e[i] + e[j] - e[s]) + p(u, v) + p(v, u)).rem_euclid(order) != 0 {
                    return false;
                }
            }
        }
        true
    };
    fn search(
        pos: usize,
        e: &mut [i64],
        order: i64,
        nodes: &mut usize,
        budget: usize,
        ok: &dyn Fn(&[i64], usize) -> bool,
    ) -> Option<bool> {
        if pos == e.len() {
            return Some(true);
        }
        for v in 0..order {
            *nodes += 1;
            if *nodes > budget {
                return None;
            }
            e[pos] = v;
            if ok(e, pos) && search(pos + 1, e, order, nodes, budget, ok)? {
                return Some(true);
            }
        }
        Some(false)
    }
    if !consistent(&e, 0) {
        return Err(Error::Cochain("inconsistent constraint on D₀".into()));
    }
    match search(1, &mut e, order, &mut nodes, budget, &consistent) {
        Some(true) => Ok(Cochain {
            values: e.iter().map(|&x| Complex64::from_polar(1.0, 2.0 * PI * x as f64 / order as f64)).collect(),
        }),
        Some(false) => Err(Error::Cochain(format!("no cochain with values of order dividing {order}"))),
        None => Err(Error::Cochain(format!("search budget of {budget} nodes exhausted"))),
    }
}

fn real_norm(d: &ExtendedLattice, k: &KaehlerStructure) -> DMatrix<f64> {
    d.real().generators().transpose() * k.q_matrix() * d.real().generators()
}

fn check_kaehler(d: &ExtendedLattice, k: &KaehlerStructure) -> Result<()> {
    if k.half_dim() != d.half_dim() {
        return Err(Error::DimensionMismatch { expected: d.half_dim(), found: k.half_dim() });
    }
    Ok(())
}

/// `Θ_{a,b} = Σ_h c̄_h l̄_h(a) δ_{a+a_h,b} e^{−(π/2)H(ẖ′,ẖ′)} e(h)` with the prefactor left out.
pub fn theta_ab(
    d: &ExtendedLattice,
    cochain: &Cochain,
    k: &KaehlerStructure,
    a: &[i64],
    b: &[i64],
    radius: f64,
) -> Result<Truncated<TorusElement>> {
    check_kaehler(d, k)?;
    let form = validate_cochain(d, cochain)?;
    let g = d.group();
    let (a, b) = (g.reduce(a), g.reduce(b));
    let p = real_norm(d, k);
    let mut out = TorusElement::zero(form.clone());
    for h in enumerate_quadratic(&p, radius)? {
        if g.add(&a, &d.finite_part(&h)) != b {
            continue;
        }
        let v = h.to_f64();
        let gauss = (-PI / 2.0 * (v.transpose() * &p * &v)[(0, 0)]).exp();
        let phase = form.twist().map_or(c(1.0, 0.0), |t| t.cochain_at(&h)).conj() * g.character(&d.character_part(&h), &a).conj();
        out.add_term(h, phase * gauss)?;
    }
    let tail_bound = gaussian_tail_bound(d.rank(), min_eigenvalue(&p), PI / 2.0, 0.0, radius);
    Ok(Truncated { value: out, radius, tail_bound })
}

/// `1/√(2ᴺ det Im T)`.
pub fn theta_prefactor(k: &KaehlerStructure) -> f64 {
    1.0 / (2f64.powi(k.half_dim() as i32) * k.siegel().im().determinant()).sqrt()
}

/// `_D⟨f_{T,a}, f_{T,b}⟩` from the factorized scalar products
/// `⟨f_T, c_h U_{(1,h′)} f_T⟩ · ⟨δ_a, l_h δ_{b−a_h}⟩`.
pub fn theta_ab_factorized(
    d: &ExtendedLattice,
    cochain: &Cochain,
    k: &KaehlerStructure,
    a: &[i64],
    b: &[i64],
    radius: f64,
) -> Result<TorusElement> {
    check_kaehler(d, k)?;
    let form = validate_cochain(d, cochain)?;
    let kernel = kernel_d0(d)?;
    let g = d.group();
    let vac = PacketSum::vacuum(k.siegel().clone());
    let (da, db) = (delta(g, a), delta(g, b));
    let mut out = TorusElement::zero(form);
    for h in enumerate_quadratic(&real_norm(d, k), radius)? {
        let moved = act_h2(g, c(1.0, 0.0), &d.finite_part(&h), &d.character_part(&h), &db)?;
        let finite = h2_inner(&da, &moved);
        if finite.norm() == 0.0 {
            continue;
        }
        let shifted = model1_act(&VectorHeisenbergElement::translation(d.real().point(&h)), &vac)?;
        let ch = cochain.values[kernel.coset_of(d, &h)];
        // ⟨f, c·Uf⟩ = c̄⟨f, Uf⟩
        out.add_term(h, ch.conj() * model1_inner(&vac, &shifted)? * finite)?;
    }
    Ok(out)
}

/// The multiplier `g ↦ [C_g; x_g, g]` on `D₀` with `H` pulled back through the real part.
pub fn kernel_multiplier(d: &ExtendedLattice, cochain: &Cochain, k: &KaehlerStructure) -> Result<Multiplier> {
    check_kaehler(d, k)?;
    let form = validate_cochain(d, cochain)?;
    let kernel = kernel_d0(d)?;
    let r = d.rank();
    let hgen: Vec<CVector> = (0..r).map(|j| k.embed(&d.real().point(&IntVector::unit(r, j)))).collect::<Result<_>>()?;
    let lifts = kernel
        .basis
        .iter()
        .map(|g| {
            let gb = k.embed(&d.real().point(g))?;
            let cg = (k.hermitian(&gb, &gb)? * (-PI / 2.0)).exp();
            let w = CVector::from_iterator(r, hgen.iter().map(|hj| k.hermitian(&gb, hj).map(|z| z * (-PI))).collect::<Result<Vec<_>>>()?);
            TorusHeisenbergElement::new(cg, TorusCharacterAction::new(w), g.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Multiplier::new(form, kernel.basis.clone(), lifts)
}

/// `max |C_g e(g) x_g*(Θ) − Θ|` on the indices where both truncations are defined.
pub fn verify_theta_ab_invariance(theta: &TorusElement, m: &Multiplier, g: &IntVector) -> Result<f64> {
    let lift = m.lift(&m.coordinates(g)?)?;
    let moved = apply_heisenberg(&lift, theta)?;
    let mut residual: f64 = 0.0;
    for (h, v) in theta.terms() {
        if theta.terms().contains_key(&(h - g)) {
            residual = residual.max((moved.coefficient(h) - v).norm());
        }
    }
    Ok(residual)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisReport {
    /// Rank of the `(card F)²` vectors `Θ_{a,b}` restricted to coset representatives.
    pub rank: usize,
    pub index: usize,
    /// Dimension of the invariant space of the kernel multiplier.
    pub gamma_dimension: usize,
    /// `max |Θ_{a,b} − Σ_r Θ_{a,b}(r) γ_r|` expressing each `Θ_{a,b}` in the invariant basis.
    pub span_residual: f64,
}

pub fn basis_rank_check(d: &ExtendedLattice, cochain: &Cochain, k: &KaehlerStructure, radius: f64) -> Result<BasisReport> {
    let kernel = kernel_d0(d)?;
    let els = d.group().elements();
    let mut thetas = Vec::new();
    for a in &els {
        for b in &els {
            thetas.push(theta_ab(d, cochain, k, a, b, radius)?.value);
        }
    }
    let mat = DMatrix::from_fn(thetas.len(), kernel.index, |i, j| thetas[i].coefficient(&kernel.representatives[j]));
    let sv = mat.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * top).count();
    let gamma = gamma_basis(&kernel_multiplier(d, cochain, k)?, radius)?;
    let mut span_residual: f64 = 0.0;
    for th in &thetas {
        let mut combo = TorusElement::zero(th.form().clone());
        for (rep, el) in gamma.representatives.iter().zip(&gamma.elements) {
            combo = combo.add(&el.scale(th.coefficient(rep) / el.coefficient(rep)))?;
        }
        for (h, v) in combo.terms() {
            if th.terms().contains_key(h) {
                span_residual = span_residual.max((th.coefficient(h) - v).norm());
            }
        }
    }
    Ok(BasisReport { rank, index: kernel.index, gamma_dimension: gamma.representatives.len(), span_residual })
}
