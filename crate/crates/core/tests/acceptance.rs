//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qtheta::exact::{RatMatrix, Rational};
use qtheta::finite_ext::{
    basis_rank_check, kernel_d0, kernel_multiplier, solve_cochain, theta_ab, theta_ab_factorized, theta_prefactor,
    validate_cochain, verify_theta_ab_invariance, Cochain, ExtendedLattice,
};
use qtheta::gaussian_models::{model2_act, model2_inner, model2_quadrature_inner, FockExponential, FockSum, GaussianPacket, PacketSum};
use qtheta::heisenberg::VectorHeisenbergElement;
use qtheta::kaehler::{KaehlerStructure, SiegelPoint};
use qtheta::lattices::{IntVector, LatticeEmbedding, SymplecticSpace};
use qtheta::linalg::hermitian_eigenvalues;
use qtheta::quadrature::TensorGauss;
use qtheta::theta_engine::{
    apply_to_vacuum, associativity_check, classical_modular_check, classical_theta_auto, eta_residuals, poisson_check,
    quantum_theta, rieffel_product_left, sample_points, self_fourier_check, verify_multiplier_invariance,
    ClassicalThetaParams,
};
use qtheta::torus_algebra::regular_rep_matrix;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_vec(v.to_vec())
}

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: String) -> Line {
    Line { pass, detail }
}

fn bundled() -> [(&'static str, LatticeEmbedding); 2] {
    [
        ("Z^2", LatticeEmbedding::standard(1)),
        ("Z(2,0)+Z(0,1)", LatticeEmbedding::diagonal(1, &[Rational::from_integer(2), Rational::from_integer(1)]).unwrap()),
    ]
}

/// `H(ẖ,ẖ)` for `N = 1`, `D = ℤ²`: `|T h₁ + h₂|² / Im T`.
fn h_norm_n1(t: Complex64, h: &[i64]) -> f64 {
    (t * h[0] as f64 + h[1] as f64).norm_sqr() / t.im
}

fn criterion_1() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let ts = [c(0.0, 1.0), c(rng.random_range(-1.0..1.0), rng.random_range(0.5..1.5))];
    let mut worst: f64 = 0.0;
    let mut h0_err: f64 = 0.0;
    let mut quad_err: f64 = 0.0;
    let mut tail: f64 = 0.0;
    let d = LatticeEmbedding::standard(1);
    let rule = TensorGauss::new(40).unwrap();
    for (i, &t) in ts.iter().enumerate() {
        let f = PacketSum::vacuum(SiegelPoint::scalar(t).unwrap());
        // large enough to contain every coordinate vector with |h| ≤ 5
        let lmax = h_norm_n1(t, &[1, 0]).max(h_norm_n1(t, &[0, 1])) * 2.0 + 1.0;
        let radius = 5.0 * lmax.sqrt() + 1.0;
        let prod = rieffel_product_left(&f, &f, &d, radius).unwrap();
        tail = tail.max(prod.tail_bound);
        let pref = 1.0 / (2.0 * t.im).sqrt();
        for a in -5i64..=5 {
            for b in -5i64..=5 {
                if a * a + b * b > 25 {
                    continue;
                }
                let expected = pref * (-PI / 2.0 * h_norm_n1(t, &[a, b])).exp();
                worst = worst.max((prod.value.coefficient(&IntVector(vec![a, b])) - expected).norm());
            }
        }
        let h0 = prod.value.coefficient(&IntVector(vec![0, 0]));
        if i == 0 {
            h0_err = (h0 - 0.5f64.sqrt()).norm();
        }
        // ⟨f_T, f_T⟩ = ∫ e^{−2π(Im T)x²} dx
        let quad = rule.integrate_1d(-8.0, 8.0, 16, |x| c((-2.0 * PI * t.im * x * x).exp(), 0.0));
        quad_err = quad_err.max((h0 - quad).norm());
    }
    let pass = worst < 1e-10 && h0_err < 1e-10 && quad_err < 1e-8 && tail < 1e-8;
    line(pass, format!("coeff |Δ|={worst:.2e}, h=0 vs 1/√2 {h0_err:.2e}, vs quadrature {quad_err:.2e}, tail {tail:.1e}"))
}

fn criterion_2() -> Line {
    let k = KaehlerStructure::standard(1);
    let mut worst: f64 = 0.0;
    for (_, d) in bundled() {
        let th = quantum_theta(&k, &d, 6.0).unwrap();
        for g in [IntVector(vec![1, 0]), IntVector(vec![0, 1])] {
            worst = worst.max(verify_multiplier_invariance(&th, &g).unwrap().value);
        }
    }
    line(worst < 1e-10, format!("max invariance residual {worst:.2e} over both lattices"))
}

fn criterion_3() -> Line {
    let k = KaehlerStructure::standard(1);
    let (_, d) = bundled()[1].clone();
    let xs = [dv(&[0.0, 0.0]), dv(&[0.3, -0.7]), dv(&[1.1, 0.4])];
    let rep = poisson_check(&k, &d, &xs, 7.0).unwrap();
    // every dual generator pairs integrally with D, and the pairing matrix is unimodular
    let dual = d.dual_lattice().unwrap();
    let j = RatMatrix::standard_symplectic(1);
    let g = d.exact_generators().unwrap();
    let gd = dual.exact_generators().unwrap();
    let pairing = gd.transpose().mul(&j).unwrap().mul(g).unwrap();
    let det = pairing.determinant().unwrap();
    let dual_ok = pairing.is_integral() && (det == Rational::from_integer(1) || det == Rational::from_integer(-1));
    let minus_inv = d.gram().exact().unwrap().inverse().unwrap().neg();
    let gram_ok = dual.gram().exact() == Some(&minus_inv);
    let pass = rep.literal_residual < 1e-8 && rep.tail_bound < 1e-10 && dual_ok && gram_ok;
    line(
        pass,
        format!(
            "literal residual {:.3e}, tail {:.1e}, dual conditions {dual_ok}, gram(D!) = −gram(D)⁻¹ {gram_ok}; \
             residual with the D! side divided by covol(D)={} is {:.2e}, ratio S_D!/S_D = {:.6}",
            rep.literal_residual, rep.tail_bound, rep.covolume, rep.normalized_residual, rep.ratio.re
        ),
    )
}

fn criterion_4() -> Line {
    let f = PacketSum::vacuum(SiegelPoint::identity(1));
    let pts = sample_points(1, 5, 44);
    let mut worst: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for (_, d) in bundled() {
        let r = associativity_check(&f, &f, &f, &d, 6.0, &pts).unwrap();
        worst = worst.max(r.value);
        tail = tail.max(r.tail_bound);
    }
    line(worst < 1e-6, format!("max residual {worst:.2e} at 5 points, tail {tail:.1e}"))
}

fn criterion_5() -> Line {
    let k = KaehlerStructure::standard(1);
    let pairs = [
        (dv(&[0.0, 0.0]), dv(&[0.0, 0.0])),
        (dv(&[0.3, -0.2]), dv(&[1.0, 0.5])),
        (dv(&[-0.7, 0.4]), dv(&[-0.4, 1.2])),
    ];
    let mut fourier: f64 = 0.0;
    for (x, g) in &pairs {
        fourier = fourier.max(self_fourier_check(&k, x, std::slice::from_ref(g), 7.0, 100).unwrap());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut eta: f64 = 0.0;
    for i in 0..20 {
        let kk = if i % 2 == 0 { k.clone() } else { KaehlerStructure::new(SiegelPoint::random(1 + i % 4 / 2, &mut rng)).unwrap() };
        let d = 2 * kk.half_dim();
        let mut v = |s: f64| DVector::from_fn(d, |_, _| rng.random_range(-s..s));
        let (x, g) = (v(1.0), v(1.0));
        let hs = [v(2.0), v(2.0)];
        let (a, b) = eta_residuals(&kk, &x, &g, &hs).unwrap();
        eta = eta.max(a).max(b);
    }
    line(fourier < 1e-6 && eta < 1e-10, format!("self-Fourier residual {fourier:.2e}, η identities {eta:.2e}"))
}

fn criterion_6() -> Line {
    let v = classical_theta_auto(&ClassicalThetaParams { omega: SiegelPoint::identity(1), z: DVector::zeros(1) }).unwrap();
    let oracle: f64 = (-60i64..=60).map(|n| (-PI * (n * n) as f64).exp()).sum();
    let value_err = (v.value - oracle).norm();
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut quasi: f64 = 0.0;
    let om = SiegelPoint::scalar(c(0.25, 0.8)).unwrap();
    let omv = om.matrix()[(0, 0)];
    for _ in 0..5 {
        let z = c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let th = |z: Complex64| {
            classical_theta_auto(&ClassicalThetaParams { omega: om.clone(), z: DVector::from_vec(vec![z]) }).unwrap().value
        };
        let base = th(z);
        quasi = quasi.max((th(z + 1.0) - base).norm());
        let factor = (c(0.0, -PI) * omv + c(0.0, -2.0 * PI) * z).exp();
        quasi = quasi.max((th(z + omv) - factor * base).norm());
    }
    let mut modular: f64 = 0.0;
    for o in [c(0.0, 1.0), c(0.0, 2.0), c(1.0, 1.0)] {
        for _ in 0..3 {
            let z = DVector::from_vec(vec![c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))]);
            modular = modular.max(classical_modular_check(&SiegelPoint::scalar(o).unwrap(), &z).unwrap());
        }
    }
    let pass = value_err < 1e-12 && quasi < 1e-12 && modular < 1e-10;
    line(pass, format!("θ(0,i) error {value_err:.1e}, quasi-periodicity {quasi:.1e}, modular {modular:.1e}"))
}

fn criterion_7() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let worst = qtheta::cli::algebra_laws(100, &mut rng).unwrap();
    line(worst < 1e-12, format!("max defect {worst:.2e} over 100 instances"))
}

fn criterion_8() -> Line {
    let t = SiegelPoint::identity(1);
    let d = LatticeEmbedding::standard(1);
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut min_eig = f64::INFINITY;
    for _ in 0..5 {
        let mut rc = |s: f64| DVector::from_fn(1, |_, _| c(rng.random_range(-s..s), rng.random_range(-s..s)));
        let phi = PacketSum::from_packets(
            t.clone(),
            [
                GaussianPacket { gamma: rc(1.0)[0], s: rc(0.5), b: rc(0.5) },
                GaussianPacket { gamma: rc(1.0)[0], s: rc(0.5), b: rc(0.5) },
            ],
        )
        .unwrap();
        let a = rieffel_product_left(&phi, &phi, &d, 6.0).unwrap().value;
        let block = regular_rep_matrix(&a, 8.0).unwrap().interior_block();
        let herm = (&block + block.adjoint()) * c(0.5, 0.0);
        min_eig = min_eig.min(hermitian_eigenvalues(&herm).min());
    }
    line(min_eig >= -1e-8, format!("min interior eigenvalue {min_eig:.3e}"))
}

fn criterion_9() -> Line {
    let d = ExtendedLattice::z2_example();
    let k = KaehlerStructure::standard(1);
    let solved = solve_cochain(&d, 100_000).unwrap();
    let shipped = Cochain::z2_example();
    let same = solved.values.iter().zip(&shipped.values).all(|(a, b)| (a - b).norm() < 1e-12);
    let valid = validate_cochain(&d, &shipped).is_ok();
    let m = kernel_multiplier(&d, &shipped, &k).unwrap();
    let kernel = kernel_d0(&d).unwrap();
    let mut invariance: f64 = 0.0;
    let mut factor: f64 = 0.0;
    for a in [[0i64], [1]] {
        for b in [[0i64], [1]] {
            let th = theta_ab(&d, &shipped, &k, &a, &b, 8.0).unwrap().value;
            for g in &kernel.basis {
                invariance = invariance.max(verify_theta_ab_invariance(&th, &m, g).unwrap());
            }
            let fact = theta_ab_factorized(&d, &shipped, &k, &a, &b, 8.0).unwrap();
            factor = factor.max(th.scale(c(theta_prefactor(&k), 0.0)).max_abs_diff(&fact));
        }
    }
    let rep = basis_rank_check(&d, &shipped, &k, 8.0).unwrap();
    let pass = same && valid && invariance < 1e-10 && factor < 1e-10 && rep.rank == 4 && rep.gamma_dimension == 4;
    line(
        pass,
        format!(
            "cochain solved={same} valid={valid}, invariance {invariance:.1e}, factorized {factor:.1e}, rank {}, Γ dimension {}",
            rep.rank, rep.gamma_dimension
        ),
    )
}

fn criterion_10() -> Line {
    let k = KaehlerStructure::standard(1);
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut random_fock = |n: usize| {
        let mut f = FockSum::vacuum(n);
        for _ in 0..2 {
            let l = DVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            f.push(FockExponential { gamma: c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), l }).unwrap();
        }
        f
    };
    let (f, g) = (random_fock(1), random_fock(1));
    let el = VectorHeisenbergElement::new(Complex64::from_polar(1.0, 0.4), dv(&[0.35, -0.6])).unwrap();
    let (uf, ug) = (model2_act(&el, &f, &k).unwrap(), model2_act(&el, &g, &k).unwrap());
    let closed = model2_inner(&f, &g, &k).unwrap();
    let before = model2_quadrature_inner(&f, &g, &k, 6.0, 80).unwrap();
    let after = model2_quadrature_inner(&uf, &ug, &k, 6.0, 80).unwrap();
    let unitarity = (after - before).norm().max((before - closed).norm());

    // Z² and a covolume-one lattice in N = 2 that is not self-dual
    let half = Rational::new(1, 2);
    let one = Rational::from_integer(1);
    let two = Rational::from_integer(2);
    let g4 = RatMatrix::from_fn(4, 4, |i, j| match (i, j) {
        (0, 0) => one,
        (2, 1) => half,
        (1, 2) => one,
        (3, 3) => two,
        _ => Rational::from_integer(0),
    });
    let d4 = LatticeEmbedding::from_exact(SymplecticSpace::standard(2), g4).unwrap();
    let k4 = KaehlerStructure::new(SiegelPoint::random(2, &mut ChaCha8Rng::seed_from_u64(4))).unwrap();
    let mut duality: f64 = 0.0;
    for (kk, d) in [(k.clone(), LatticeEmbedding::standard(1)), (k4, d4)] {
        let a = apply_to_vacuum(&quantum_theta(&kk, &d, 9.0).unwrap()).unwrap();
        let b = apply_to_vacuum(&quantum_theta(&kk, &d.dual_lattice().unwrap(), 9.0).unwrap()).unwrap();
        for x in sample_points(2 * kk.half_dim(), 5, 10) {
            let z = kk.embed(&x).unwrap();
            duality = duality.max((a.evaluate(&z).unwrap() - b.evaluate(&z).unwrap()).norm());
        }
    }
    // reported only: the covolume-two lattice
    let (_, d2) = bundled()[1].clone();
    let a = apply_to_vacuum(&quantum_theta(&k, &d2, 9.0).unwrap()).unwrap();
    let b = apply_to_vacuum(&quantum_theta(&k, &d2.dual_lattice().unwrap(), 9.0).unwrap()).unwrap();
    let z0 = DVector::zeros(1);
    let ratio = b.evaluate(&z0).unwrap() / a.evaluate(&z0).unwrap();
    line(
        unitarity < 1e-6 && duality < 1e-6,
        format!(
            "Model II unitarity {unitarity:.2e}, vacuum duality on covolume-one lattices {duality:.2e} \
             (Z(2,0)+Z(0,1): Θ_D!·1 / Θ_D·1 = {:.6} at 0)",
            ratio.re
        ),
    )
}

type Criterion = (&'static str, fn() -> Line);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Rieffel product equals quantum theta", criterion_1),
        ("theta functional equation under the multiplier", criterion_2),
        ("Poisson summation between D and its dual", criterion_3),
        ("associativity of left and right products", criterion_4),
        ("self-Fourier property and eta identities", criterion_5),
        ("classical theta value and functional equations", criterion_6),
        ("Heisenberg group algebra laws", criterion_7),
        ("positivity of the regular representation", criterion_8),
        ("finite extension Z/2 theta basis", criterion_9),
        ("Fock model unitarity and vacuum duality", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let l = run();
        if !l.pass {
            failed += 1;
        }
        println!("criterion {:>2} [{}] {name}: {}", i + 1, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
