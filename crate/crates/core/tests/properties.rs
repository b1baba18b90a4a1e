use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use qtheta::exact::{RatMatrix, Rational};
use qtheta::finite_ext::{act_h2, h2_inner, psi0, FiniteAbelianGroup};
use qtheta::kaehler::{KaehlerStructure, SiegelPoint};
use qtheta::lattices::{IntVector, LatticeEmbedding, SymplecticSpace};
use qtheta::theta_engine::{quantum_theta, verify_multiplier_invariance};
use qtheta::torus_algebra::{multiply, star, QuantizationForm, TorusElement};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn torus_element(form: QuantizationForm) -> impl Strategy<Value = TorusElement> {
    prop::collection::vec(((-3i64..=3, -3i64..=3), (-1.0..1.0f64, -1.0..1.0f64)), 1..5).prop_map(move |terms| {
        TorusElement::from_terms(form.clone(), terms.into_iter().map(|((a, b), (re, im))| (IntVector(vec![a, b]), c(re, im))))
            .unwrap()
    })
}

fn with_theta() -> impl Strategy<Value = (TorusElement, TorusElement)> {
    (-3.0..3.0f64).prop_flat_map(|theta| {
        let form = QuantizationForm::rotation(theta);
        (torus_element(form.clone()), torus_element(form))
    })
}

fn group_and_pair() -> impl Strategy<Value = (FiniteAbelianGroup, Vec<[Vec<i64>; 2]>)> {
    prop::collection::vec(1i64..=4, 1..=2).prop_flat_map(|orders| {
        let n = orders.len();
        let elt = prop::collection::vec(0i64..12, n);
        let pair = [elt.clone(), elt];
        (Just(FiniteAbelianGroup::new(orders).unwrap()), prop::collection::vec(pair, 3))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn star_reverses_products((a, b) in with_theta()) {
        let lhs = star(&multiply(&a, &b).unwrap());
        let rhs = multiply(&star(&b), &star(&a)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        prop_assert!(star(&star(&a)).max_abs_diff(&a) < 1e-15);
    }

    #[test]
    fn product_is_associative((a, b) in with_theta(), e in -2i64..=2) {
        let cc = TorusElement::monomial(a.form().clone(), IntVector(vec![e, 1 - e]), c(0.5, -0.3)).unwrap();
        let lhs = multiply(&multiply(&a, &b).unwrap(), &cc).unwrap();
        let rhs = multiply(&a, &multiply(&b, &cc).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn dual_of_dual_is_original(d in prop::collection::vec(1i128..=5, 2), num in -3i128..=3, den in 1i128..=3) {
        // upper triangular shear on top of a diagonal lattice
        let off = Rational::new(num, den);
        let g = RatMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => Rational::from_integer(d[0]),
            (1, 1) => Rational::from_integer(d[1]),
            (0, 1) => off,
            _ => Rational::from_integer(0),
        });
        let lat = LatticeEmbedding::from_exact(SymplecticSpace::standard(1), g.clone()).unwrap();
        // G!! = J·J·G = −G, the same lattice with the basis negated
        let back = lat.dual_lattice().unwrap().dual_lattice().unwrap();
        prop_assert_eq!(back.exact_generators(), Some(&g.neg()));
    }

    #[test]
    fn psi0_is_a_bicharacter((group, els) in group_and_pair()) {
        let [g, h, k] = [&els[0], &els[1], &els[2]];
        let sum = [group.add(&g[0], &h[0]), group.add(&g[1], &h[1])];
        let lhs = psi0(&group, (&sum[0], &sum[1]), (&k[0], &k[1]));
        let rhs = psi0(&group, (&g[0], &g[1]), (&k[0], &k[1])) * psi0(&group, (&h[0], &h[1]), (&k[0], &k[1]));
        prop_assert!((lhs - rhs).norm() < 1e-12);
        let lhs = psi0(&group, (&k[0], &k[1]), (&sum[0], &sum[1]));
        let rhs = psi0(&group, (&k[0], &k[1]), (&g[0], &g[1])) * psi0(&group, (&k[0], &k[1]), (&h[0], &h[1]));
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn finite_action_is_unitary_and_projective(
        (group, els) in group_and_pair(),
        seed in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16),
        phase in -3.0..3.0f64,
    ) {
        let n = group.card();
        let phi = DVector::from_fn(n, |i, _| c(seed[i].0, seed[i].1));
        let lambda = Complex64::from_polar(1.0, phase);
        let [g, h] = [&els[0], &els[1]];
        let u = act_h2(&group, lambda, &g[0], &g[1], &phi).unwrap();
        prop_assert!((h2_inner(&u, &u) - h2_inner(&phi, &phi)).norm() < 1e-12);
        // U_g U_h = ψ₀(g,h) U_{g+h}
        let uh = act_h2(&group, c(1.0, 0.0), &h[0], &h[1], &phi).unwrap();
        let ugh = act_h2(&group, c(1.0, 0.0), &g[0], &g[1], &uh).unwrap();
        let sum = [group.add(&g[0], &h[0]), group.add(&g[1], &h[1])];
        let direct = act_h2(&group, psi0(&group, (&g[0], &g[1]), (&h[0], &h[1])), &sum[0], &sum[1], &phi).unwrap();
        prop_assert!((ugh - direct).norm() < 1e-12);
    }

    #[test]
    fn theta_invariant_for_random_t(re in -1.0..1.0f64, im in 0.6..1.6f64, g in prop::sample::select(vec![[1i64, 0], [0, 1], [1, 1]])) {
        let k = KaehlerStructure::new(SiegelPoint::scalar(c(re, im)).unwrap()).unwrap();
        let th = quantum_theta(&k, &LatticeEmbedding::standard(1), 6.0).unwrap();
        prop_assert!(verify_multiplier_invariance(&th, &IntVector(g.to_vec())).unwrap().value < 1e-10);
    }
}
