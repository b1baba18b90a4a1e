//! Command-line harness: scenario verification and coefficient tables.
//!
//! Exit codes are `0` when every check passes, `1` when some check fails and
//! `2` for usage or configuration errors.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::finite_ext::{
    basis_rank_check, kernel_d0, kernel_multiplier, theta_ab, theta_ab_factorized, theta_prefactor, validate_cochain,
    verify_theta_ab_invariance, Cochain, ExtendedLattice,
};
use crate::gaussian_models::{model2_act, model2_inner, model2_quadrature_inner, FockExponential, FockSum, GaussianPacket, PacketSum};
use crate::heisenberg::{
    commutator_torus, commutator_vector, compose_torus, compose_vector, epsilon, symplectic_cocycle, torus_epsilon,
    TorusHeisenbergElement, VectorHeisenbergElement,
};
use crate::kaehler::{KaehlerStructure, SiegelPoint};
use crate::lattices::{IntVector, LatticeEmbedding};
use crate::linalg::{c, hermitian_eigenvalues, CVector};
use crate::theta_engine::{
    apply_to_vacuum, associativity_check, classical_modular_check, classical_theta_auto, eta_residuals, lattice_form,
    poisson_check, quantum_theta, reconstruct_from_multiplier, rieffel_product_left, sample_points, self_fourier_check,
    verify_multiplier_invariance, ClassicalThetaParams,
};
use crate::torus_algebra::{regular_rep_matrix, QuantizationForm, TorusCharacterAction};

pub const SCHEMA_VERSION: u32 = 1;

const BUNDLED: [(&str, &str); 3] = [
    ("standard_n1", include_str!("../scenarios/standard_n1.json")),
    ("poisson_2z", include_str!("../scenarios/poisson_2z.json")),
    ("finite_z2", include_str!("../scenarios/finite_z2.json")),
];

/// Names of the checks a scenario may request.
pub const CHECKS: [&str; 19] = [
    "rieffel_theta",
    "multiplier_invariance",
    "dual_gram",
    "poisson",
    "poisson_literal",
    "associativity",
    "self_fourier",
    "eta",
    "classical_theta_value",
    "classical_quasi_periodicity",
    "classical_modular",
    "algebra_laws",
    "positivity",
    "model2_unitarity",
    "vacuum_duality",
    "vacuum_duality_literal",
    "reconstruction",
    "finite_theta",
    "finite_cochain",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub siegel: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extended_lattice: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cochain: Option<Value>,
    pub checks: Vec<CheckSpec>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckSpec {
    pub name: String,
    pub tolerance: f64,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub params: Map<String, Value>,
    pub residual: f64,
    pub tail_bound: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

impl Scenario {
    pub fn from_json(v: &Value) -> Result<Self> {
        let s: Scenario = serde_json::from_value(v.clone())?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema_version {}", s.schema_version)));
        }
        for ch in &s.checks {
            if !CHECKS.contains(&ch.name.as_str()) {
                return Err(Error::UnknownCheck(ch.name.clone()));
            }
            if !(ch.tolerance >= 0.0 && ch.tolerance.is_finite()) {
                return Err(Error::Parse(format!("tolerance of {} must be non-negative", ch.name)));
            }
        }
        if s.lattice.is_some() == s.extended_lattice.is_some() {
            return Err(Error::Parse("scenario needs exactly one of \"lattice\" and \"extended_lattice\"".into()));
        }
        Ok(s)
    }

    /// A file path, or the name of a bundled scenario.
    pub fn load(spec: &str) -> Result<Self> {
        let text = if Path::new(spec).exists() {
            std::fs::read_to_string(spec)?
        } else if let Some((_, t)) = BUNDLED.iter().find(|(n, _)| *n == spec) {
            (*t).to_string()
        } else {
            return Err(Error::Parse(format!("no scenario file or bundled scenario named {spec:?}")));
        };
        let v: Value = serde_json::from_str(&text)?;
        Self::from_json(&v)
    }
}

pub fn bundled_scenarios() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

struct Context {
    kaehler: KaehlerStructure,
    lattice: Option<LatticeEmbedding>,
    extended: Option<(ExtendedLattice, Cochain)>,
}

struct Outcome {
    residual: f64,
    tail_bound: f64,
}

fn outcome(residual: f64, tail_bound: f64) -> Result<Outcome> {
    Ok(Outcome { residual, tail_bound })
}

fn param_f64(p: &Map<String, Value>, key: &str, default: f64) -> Result<f64> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| Error::Parse(format!("parameter {key} must be a number"))),
    }
}

fn param_usize(p: &Map<String, Value>, key: &str, default: usize) -> Result<usize> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| Error::Parse(format!("parameter {key} must be a non-negative integer"))),
    }
}

fn param_points(p: &Map<String, Value>, key: &str, dim: usize) -> Result<Option<Vec<DVector<f64>>>> {
    let Some(v) = p.get(key) else { return Ok(None) };
    let pts: Vec<Vec<f64>> = serde_json::from_value(v.clone())?;
    if let Some(bad) = pts.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
    }
    Ok(Some(pts.into_iter().map(DVector::from_vec).collect()))
}

impl Context {
    fn lattice(&self) -> Result<&LatticeEmbedding> {
        self.lattice.as_ref().ok_or_else(|| Error::Incompatible("check needs a plain lattice".into()))
    }

    fn extended(&self) -> Result<&(ExtendedLattice, Cochain)> {
        self.extended.as_ref().ok_or_else(|| Error::Incompatible("check needs an extended lattice".into()))
    }

    fn dim(&self) -> usize {
        2 * self.kaehler.half_dim()
    }

    fn run(&self, name: &str, p: &Map<String, Value>, rng: &mut ChaCha8Rng) -> Result<Outcome> {
        let k = &self.kaehler;
        let t = k.siegel();
        match name {
            "rieffel_theta" => {
                let d = self.lattice()?;
                let r = param_f64(p, "radius", 6.0)?;
                let f = PacketSum::vacuum(t.clone());
                let prod = rieffel_product_left(&f, &f, d, r)?;
                let th = quantum_theta(k, d, r)?;
                outcome(prod.value.max_abs_diff(&th.prefactored()), 0.0)
            }
            "multiplier_invariance" => {
                let d = self.lattice()?;
                let th = quantum_theta(k, d, param_f64(p, "radius", 6.0)?)?;
                let mut worst: f64 = 0.0;
                for j in 0..d.rank() {
                    worst = worst.max(verify_multiplier_invariance(&th, &IntVector::unit(d.rank(), j))?.value);
                }
                // all compared coefficients are computed without truncation
                outcome(worst, 0.0)
            }
            "dual_gram" => {
                let d = self.lattice()?;
                let exact = d.gram().morita_dual_form()?;
                let dual = d.dual_lattice()?.gram();
                let residual = match (exact.exact(), dual.exact()) {
                    (Some(a), Some(b)) if a == b => 0.0,
                    (Some(a), Some(b)) => (a.to_f64() - b.to_f64()).amax().max(f64::MIN_POSITIVE),
                    _ => (exact.matrix() - dual.matrix()).amax(),
                };
                outcome(residual, 0.0)
            }
            "poisson" | "poisson_literal" => {
                let d = self.lattice()?;
                let pts = match param_points(p, "points", self.dim())? {
                    Some(x) => x,
                    None => sample_points(self.dim(), param_usize(p, "samples", 3)?, rng.random()),
                };
                let rep = poisson_check(k, d, &pts, param_f64(p, "radius", 7.0)?)?;
                let res = if name == "poisson" { rep.normalized_residual } else { rep.literal_residual };
                outcome(res, rep.tail_bound)
            }
            "associativity" => {
                let d = self.lattice()?;
                let f = PacketSum::vacuum(t.clone());
                let pts = sample_points(k.half_dim(), param_usize(p, "samples", 5)?, rng.random());
                let res = associativity_check(&f, &f, &f, d, param_f64(p, "radius", 6.0)?, &pts)?;
                outcome(res.value, res.tail_bound)
            }
            "self_fourier" => {
                let n = param_usize(p, "pairs", 3)?;
                let mut worst: f64 = 0.0;
                for _ in 0..n {
                    let x = DVector::from_fn(self.dim(), |_, _| rng.random_range(-1.0..1.0));
                    let g = DVector::from_fn(self.dim(), |_, _| rng.random_range(-1.0..1.0));
                    let r = self_fourier_check(k, &x, &[g], param_f64(p, "half_width", 7.0)?, param_usize(p, "points", 100)?)?;
                    worst = worst.max(r);
                }
                outcome(worst, 0.0)
            }
            "eta" => {
                let mut worst: f64 = 0.0;
                for _ in 0..param_usize(p, "count", 20)? {
                    let mut v = |s: f64| DVector::from_fn(self.dim(), |_, _| rng.random_range(-s..s));
                    let (x, g) = (v(1.0), v(1.0));
                    let hs = [v(2.0), v(2.0), v(2.0)];
                    let (a, b) = eta_residuals(k, &x, &g, &hs)?;
                    worst = worst.max(a).max(b);
                }
                outcome(worst, 0.0)
            }
            "classical_theta_value" => {
                let v = classical_theta_auto(&ClassicalThetaParams { omega: SiegelPoint::identity(1), z: CVector::zeros(1) })?;
                let oracle: f64 = 1.0 + 2.0 * (1..60).map(|n| (-PI * (n * n) as f64).exp()).sum::<f64>();
                outcome((v.value - oracle).norm(), v.tail_bound)
            }
            "classical_quasi_periodicity" => {
                let n = t.dim();
                let mut worst: f64 = 0.0;
                let mut tail: f64 = 0.0;
                for _ in 0..param_usize(p, "count", 5)? {
                    let z = CVector::from_fn(n, |_, _| c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)));
                    let th = |z: CVector| classical_theta_auto(&ClassicalThetaParams { omega: t.clone(), z });
                    let base = th(z.clone())?;
                    tail = tail.max(base.tail_bound);
                    for j in 0..n {
                        let e = CVector::from_fn(n, |i, _| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
                        worst = worst.max((th(&z + &e)?.value - base.value).norm());
                        let col = t.matrix().column(j).into_owned();
                        let factor = (c(0.0, -PI) * t.matrix()[(j, j)] + c(0.0, -2.0 * PI) * z[j]).exp();
                        worst = worst.max((th(&z + &col)?.value - factor * base.value).norm());
                    }
                }
                outcome(worst, 2.0 * tail)
            }
            "classical_modular" => {
                let omegas = [c(0.0, 1.0), c(0.0, 2.0), c(1.0, 1.0)];
                let mut worst: f64 = 0.0;
                for o in omegas {
                    for _ in 0..param_usize(p, "count", 3)? {
                        let z = CVector::from_vec(vec![c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))]);
                        worst = worst.max(classical_modular_check(&SiegelPoint::scalar(o)?, &z)?);
                    }
                }
                outcome(worst, 0.0)
            }
            "algebra_laws" => outcome(algebra_laws(param_usize(p, "count", 100)?, rng)?, 0.0),
            "positivity" => {
                let d = self.lattice()?;
                let mut worst: f64 = 0.0;
                for _ in 0..param_usize(p, "packets", 5)? {
                    let phi = random_packets(t, rng)?;
                    let a = rieffel_product_left(&phi, &phi, d, param_f64(p, "radius", 6.0)?)?;
                    let sec = regular_rep_matrix(&a.value, param_f64(p, "section_radius", 8.0)?)?;
                    let block = sec.interior_block();
                    let herm = (&block + block.adjoint()) * c(0.5, 0.0);
                    let min = hermitian_eigenvalues(&herm).min();
                    worst = worst.max(-min);
                }
                outcome(worst.max(0.0), 0.0)
            }
            "model2_unitarity" => {
                let n = k.half_dim();
                let f = random_fock(n, rng);
                let g = random_fock(n, rng);
                let el = VectorHeisenbergElement::new(
                    Complex64::from_polar(1.0, rng.random_range(-PI..PI)),
                    DVector::from_fn(self.dim(), |_, _| rng.random_range(-1.0..1.0)),
                )?;
                let before = model2_inner(&f, &g, k)?;
                let after = model2_inner(&model2_act(&el, &f, k)?, &model2_act(&el, &g, k)?, k)?;
                let mut worst = (after - before).norm();
                if n == 1 {
                    let quad = model2_quadrature_inner(&f, &g, k, param_f64(p, "half_width", 6.0)?, param_usize(p, "points", 80)?)?;
                    worst = worst.max((quad - before).norm());
                }
                outcome(worst, 0.0)
            }
            "vacuum_duality" | "vacuum_duality_literal" => {
                let d = self.lattice()?;
                let dual = d.dual_lattice()?;
                let scale = if name == "vacuum_duality" { 1.0 / d.covolume()? } else { 1.0 };
                let r = param_f64(p, "radius", 7.0)?;
                let a = apply_to_vacuum(&quantum_theta(k, d, r)?)?;
                let b = apply_to_vacuum(&quantum_theta(k, &dual, r)?)?;
                let mut worst: f64 = 0.0;
                for x in sample_points(self.dim(), param_usize(p, "samples", 5)?, rng.random()) {
                    let z = k.embed(&x)?;
                    worst = worst.max((a.evaluate(&z)? - b.evaluate(&z)? * scale).norm());
                }
                outcome(worst, 0.0)
            }
            "reconstruction" => {
                let d = self.lattice()?;
                let r = param_f64(p, "radius", 6.0)?;
                let rec = reconstruct_from_multiplier(&quantum_theta(k, d, r)?.multiplier()?, r)?;
                outcome(rec.q_residual.max(rec.generator_residual), 0.0)
            }
            "finite_cochain" => {
                let (d, co) = self.extended()?;
                validate_cochain(d, co)?;
                outcome(0.0, 0.0)
            }
            "finite_theta" => {
                let (d, co) = self.extended()?;
                let r = param_f64(p, "radius", 8.0)?;
                validate_cochain(d, co)?;
                let m = kernel_multiplier(d, co, k)?;
                let kernel = kernel_d0(d)?;
                let els = d.group().elements();
                let mut worst: f64 = 0.0;
                let mut tail: f64 = 0.0;
                for a in &els {
                    for b in &els {
                        let th = theta_ab(d, co, k, a, b, r)?;
                        tail = tail.max(th.tail_bound);
                        let fact = theta_ab_factorized(d, co, k, a, b, r)?;
                        worst = worst.max(th.value.scale(c(theta_prefactor(k), 0.0)).max_abs_diff(&fact));
                        for g in &kernel.basis {
                            worst = worst.max(verify_theta_ab_invariance(&th.value, &m, g)?);
                        }
                    }
                }
                let rep = basis_rank_check(d, co, k, r)?;
                let count_defect = rep.rank.abs_diff(rep.index).max(rep.gamma_dimension.abs_diff(rep.index)) as f64;
                outcome(worst.max(rep.span_residual).max(count_defect), 0.0)
            }
            other => Err(Error::UnknownCheck(other.to_string())),
        }
    }
}

fn unit(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(-PI..PI))
}

/// Two random packets on top of the vacuum.
fn random_packets(t: &SiegelPoint, rng: &mut ChaCha8Rng) -> Result<PacketSum> {
    let n = t.dim();
    let mut rc = |s: f64| CVector::from_fn(n, |_, _| c(rng.random_range(-s..s), rng.random_range(-s..s)));
    let packets = [
        GaussianPacket { gamma: c(1.0, 0.0), s: CVector::zeros(n), b: CVector::zeros(n) },
        GaussianPacket { gamma: rc(0.7)[0], s: rc(0.5), b: rc(0.3) },
    ];
    PacketSum::from_packets(t.clone(), packets)
}

fn random_fock(n: usize, rng: &mut ChaCha8Rng) -> FockSum {
    let mut f = FockSum::vacuum(n);
    for _ in 0..2 {
        let l = CVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        f.push(FockExponential { gamma: c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), l }).expect("same dimension");
    }
    f
}

/// Cocycle identities, associativity and commutator identities of the vector and
/// torus Heisenberg groups on `count` seeded unimodular instances.
pub fn algebra_laws(count: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let space = crate::lattices::SymplecticSpace::standard(1);
    let psi = symplectic_cocycle(&space);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let mut v = || DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
        let (x, y, z) = (v(), v(), v());
        worst = worst.max((psi(&x, &y) * psi(&(&x + &y), &z) - psi(&x, &(&y + &z)) * psi(&y, &z)).norm());
        let a = VectorHeisenbergElement::new(unit(rng), x.clone())?;
        let b = VectorHeisenbergElement::new(unit(rng), y.clone())?;
        let d = VectorHeisenbergElement::new(unit(rng), z)?;
        let l = compose_vector(&compose_vector(&a, &b, &psi)?, &d, &psi)?;
        let r = compose_vector(&a, &compose_vector(&b, &d, &psi)?, &psi)?;
        worst = worst.max((l.lambda - r.lambda).norm());
        let comm = commutator_vector(&a, &b, &psi)?;
        worst = worst.max((comm.lambda - epsilon(&psi, &x, &y)).norm()).max(comm.x.amax());

        let theta = rng.random_range(-1.0..1.0);
        let form = QuantizationForm::rotation(theta);
        let mut el = || -> Result<TorusHeisenbergElement> {
            let w = CVector::from_fn(2, |_, _| c(0.0, rng.random_range(-3.0..3.0)));
            let g = IntVector((0..2).map(|_| rng.random_range(-3..=3)).collect());
            TorusHeisenbergElement::new(unit(rng), TorusCharacterAction::new(w), g)
        };
        let (ta, tb, td) = (el()?, el()?, el()?);
        let l = compose_torus(&form, &compose_torus(&form, &ta, &tb)?, &td)?;
        let r = compose_torus(&form, &ta, &compose_torus(&form, &tb, &td)?)?;
        worst = worst.max(l.distance(&r));
        let comm = commutator_torus(&form, &ta, &tb)?;
        let eps = torus_epsilon(&form, &ta, &tb);
        worst = worst.max((comm.c - eps).norm()).max(comm.x.w.camax());
        // ψ((x′,g′),(x,g)) = g(x′)α(g′,g) is a cocycle with ψ(a,b)/ψ(b,a) = ε(a,b)
        let tpsi = |a: &TorusHeisenbergElement, b: &TorusHeisenbergElement| a.x.value(&b.g) * form.alpha(&a.g, &b.g);
        let sum = |a: &TorusHeisenbergElement, b: &TorusHeisenbergElement| TorusHeisenbergElement {
            c: c(1.0, 0.0),
            x: a.x.compose(&b.x),
            g: &a.g + &b.g,
        };
        let lhs = tpsi(&ta, &tb) * tpsi(&sum(&ta, &tb), &td);
        let rhs = tpsi(&ta, &sum(&tb, &td)) * tpsi(&tb, &td);
        worst = worst.max((lhs - rhs).norm()).max((tpsi(&ta, &tb) / tpsi(&tb, &ta) - eps).norm());
    }
    Ok(worst)
}

/// Runs every check of a scenario; `seed` overrides the scenario seed.
pub fn run_scenario(s: &Scenario, seed: Option<u64>, timings: bool) -> Result<Report> {
    let kaehler = KaehlerStructure::new(SiegelPoint::from_json(&s.siegel)?)?;
    let lattice = s.lattice.as_ref().map(LatticeEmbedding::from_json).transpose()?;
    let extended = match &s.extended_lattice {
        None => None,
        Some(v) => {
            let d = ExtendedLattice::from_json(v)?;
            let co = match &s.cochain {
                Some(c) => Cochain::from_json(c)?,
                None => Cochain::trivial(kernel_d0(&d)?.index),
            };
            Some((d, co))
        }
    };
    if let Some(d) = &lattice {
        lattice_form(d)?;
    }
    let ctx = Context { kaehler, lattice, extended };
    let seed = seed.unwrap_or(s.seed);
    let mut checks = Vec::with_capacity(s.checks.len());
    for (i, spec) in s.checks.iter().enumerate() {
        // each check draws from its own stream so reordering does not change results
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let start = Instant::now();
        let out = ctx.run(&spec.name, &spec.params, &mut rng)?;
        let elapsed = start.elapsed().as_secs_f64();
        let pass = out.residual <= spec.tolerance + out.tail_bound;
        checks.push(CheckResult {
            check: spec.name.clone(),
            params: spec.params.clone(),
            residual: out.residual,
            tail_bound: out.tail_bound,
            tolerance: spec.tolerance,
            pass,
            wall_time_s: timings.then_some(elapsed),
        });
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        scenario: s.name.clone(),
        seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

// ---------------------------------------------------------------------------
// Tables

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableKind {
    /// Columns `h1,h2,coefficient`: coefficients of Θ for `D = ℤ²` without the prefactor.
    #[value(name = "theta_coeffs")]
    ThetaCoeffs,
    /// Columns `z_re,z_im,theta_re,theta_im`: classical theta on a real grid of `z`.
    #[value(name = "classical_theta")]
    ClassicalTheta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({ "schema_version": SCHEMA_VERSION, "columns": self.columns, "rows": self.rows })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableParams {
    pub t: Complex64,
    pub radius: f64,
    pub z_start: f64,
    pub z_step: f64,
    pub z_count: usize,
}

pub fn table(kind: TableKind, p: &TableParams) -> Result<Table> {
    match kind {
        TableKind::ThetaCoeffs => {
            let k = KaehlerStructure::new(SiegelPoint::scalar(p.t)?)?;
            let th = quantum_theta(&k, &LatticeEmbedding::standard(1), p.radius)?;
            let rows = th.element.terms().iter().map(|(h, a)| vec![h.0[0] as f64, h.0[1] as f64, a.re]).collect();
            Ok(Table { columns: vec!["h1", "h2", "coefficient"], rows })
        }
        TableKind::ClassicalTheta => {
            let omega = SiegelPoint::scalar(p.t)?;
            let mut rows = Vec::with_capacity(p.z_count);
            for i in 0..p.z_count {
                let z = p.z_start + i as f64 * p.z_step;
                let v = classical_theta_auto(&ClassicalThetaParams { omega: omega.clone(), z: CVector::from_vec(vec![c(z, 0.0)]) })?;
                rows.push(vec![z, 0.0, v.value.re, v.value.im]);
            }
            Ok(Table { columns: vec!["z_re", "z_im", "theta_re", "theta_im"], rows })
        }
    }
}

// ---------------------------------------------------------------------------
// Argument parsing

#[derive(Debug, Parser)]
#[command(name = "qtheta", version, about = "Verification harness for quantum theta functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the checks of a scenario file or of a bundled scenario
    /// (standard_n1, poisson_2z, finite_z2) and print a JSON report.
    Verify {
        scenario: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Include wall time per check (makes reports non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Print a table.
    ///
    /// theta_coeffs: columns h1,h2,coefficient (Θ for D = ℤ² without the prefactor).
    /// classical_theta: columns z_re,z_im,theta_re,theta_im over z = z_start + k·z_step.
    Table {
        what: TableKind,
        #[arg(long, conflicts_with = "json")]
        csv: bool,
        #[arg(long)]
        json: bool,
        /// Real part of T (or Ω).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t_re: f64,
        /// Imaginary part of T (or Ω).
        #[arg(long, default_value_t = 1.0)]
        t_im: f64,
        #[arg(long, default_value_t = 3.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z_start: f64,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        z_step: f64,
        #[arg(long, default_value_t = 11)]
        z_count: usize,
    },
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Verify { scenario, out, seed, timings } => {
            let s = Scenario::load(&scenario)?;
            let report = run_scenario(&s, seed, timings)?;
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => stdout.write_all(text.as_bytes())?,
            }
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Table { what, csv: _, json, t_re, t_im, radius, z_start, z_step, z_count } => {
            let t = table(what, &TableParams { t: c(t_re, t_im), radius, z_start, z_step, z_count })?;
            if json {
                let mut text = serde_json::to_string_pretty(&t.to_json())?;
                text.push('\n');
                stdout.write_all(text.as_bytes())?;
            } else {
                stdout.write_all(t.to_csv().as_bytes())?;
            }
            Ok(0)
        }
    }
}
