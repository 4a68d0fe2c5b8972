use proptest::prelude::*;

use holab::diffeology::{candidate_family, check_family_properties, is_plot, Diffeology, OpenBox, Plot};
use holab::holonomy::group_law_residuals;
use holab::liealg::{
    adjoint, bracket, bracket_closure, exp_matrix, AlgebraElement, MatrixAlgebra, SubalgebraSpan,
    DEFAULT_RANK_TOLERANCE,
};
use holab::scenario::{random_loops, Scenario};

const TAGS: [MatrixAlgebra; 3] = [MatrixAlgebra::So(3), MatrixAlgebra::So(4), MatrixAlgebra::Gl(2)];

fn element(tag: MatrixAlgebra, coeffs: &[f64]) -> AlgebraElement {
    let basis = tag.standard_basis();
    basis.combine(&coeffs[..basis.dim()]).expect("coefficient count matches")
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0_f64, 6)
}

fn gap(a: &AlgebraElement, b: &AlgebraElement) -> f64 {
    (a - b).norm()
}

/// Largest distance from a basis vector of one span to the other span.
fn span_gap(a: &SubalgebraSpan, b: &SubalgebraSpan) -> f64 {
    let one = a.basis().iter().map(|e| b.distance(e.matrix()));
    let two = b.basis().iter().map(|e| a.distance(e.matrix()));
    one.chain(two).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(t in 0..3usize, x in coeffs(), y in coeffs()) {
        let (x, y) = (element(TAGS[t], &x), element(TAGS[t], &y));
        let xy = bracket(&x, &y).unwrap();
        let yx = bracket(&y, &x).unwrap();
        prop_assert!((&xy + &yx).norm() <= 1e-14);
    }

    #[test]
    fn bracket_satisfies_jacobi(t in 0..3usize, x in coeffs(), y in coeffs(), z in coeffs()) {
        let (x, y, z) = (element(TAGS[t], &x), element(TAGS[t], &y), element(TAGS[t], &z));
        let a = bracket(&x, &bracket(&y, &z).unwrap()).unwrap();
        let b = bracket(&y, &bracket(&z, &x).unwrap()).unwrap();
        let c = bracket(&z, &bracket(&x, &y).unwrap()).unwrap();
        prop_assert!((&(&a + &b) + &c).norm() <= 1e-13);
    }

    #[test]
    fn adjoint_is_an_algebra_morphism(t in 0..3usize, g in coeffs(), x in coeffs(), y in coeffs()) {
        let tag = TAGS[t];
        let g = exp_matrix(&element(tag, &g)).unwrap();
        let (x, y) = (element(tag, &x), element(tag, &y));
        let lhs = adjoint(&g, &bracket(&x, &y).unwrap()).unwrap();
        let rhs = bracket(&adjoint(&g, &x).unwrap(), &adjoint(&g, &y).unwrap()).unwrap();
        prop_assert!(gap(&lhs, &rhs) <= 1e-11 * (1.0 + lhs.norm()));
    }

    #[test]
    fn adjoint_is_a_group_action(t in 0..3usize, g in coeffs(), h in coeffs(), x in coeffs()) {
        let tag = TAGS[t];
        let g = exp_matrix(&element(tag, &g)).unwrap();
        let h = exp_matrix(&element(tag, &h)).unwrap();
        let x = element(tag, &x);
        let lhs = adjoint(&(&g * &h), &x).unwrap();
        let rhs = adjoint(&g, &adjoint(&h, &x).unwrap()).unwrap();
        prop_assert!(gap(&lhs, &rhs) <= 1e-11 * (1.0 + lhs.norm()));
    }

    #[test]
    fn closure_is_idempotent(t in 0..3usize, gens in prop::collection::vec(coeffs(), 1..4)) {
        let gens: Vec<_> = gens.iter().map(|c| element(TAGS[t], c)).collect();
        let span = bracket_closure(&gens, DEFAULT_RANK_TOLERANCE).unwrap();
        let again = bracket_closure(span.basis(), DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert_eq!(span.rank(), again.rank());
        prop_assert!(span_gap(&span, &again) <= 1e-9);
        prop_assert!(span.closure_residual() <= 1e-9);
    }

    #[test]
    fn closure_ignores_generator_order(t in 0..3usize, gens in prop::collection::vec(coeffs(), 2..4)) {
        let gens: Vec<_> = gens.iter().map(|c| element(TAGS[t], c)).collect();
        let reversed: Vec<_> = gens.iter().rev().cloned().collect();
        let a = bracket_closure(&gens, DEFAULT_RANK_TOLERANCE).unwrap();
        let b = bracket_closure(&reversed, DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert_eq!(a.rank(), b.rank());
        prop_assert!(span_gap(&a, &b) <= 1e-9);
    }

    #[test]
    fn closure_is_monotone(t in 0..3usize, gens in prop::collection::vec(coeffs(), 2..4)) {
        let gens: Vec<_> = gens.iter().map(|c| element(TAGS[t], c)).collect();
        let small = bracket_closure(&gens[..1], DEFAULT_RANK_TOLERANCE).unwrap();
        let large = bracket_closure(&gens, DEFAULT_RANK_TOLERANCE).unwrap();
        prop_assert!(small.rank() <= large.rank());
        for e in small.basis() {
            prop_assert!(large.distance(e.matrix()) <= 1e-9);
        }
    }

    #[test]
    fn commuting_generators_stay_abelian(c in -1.0..1.0_f64, d in -1.0..1.0_f64) {
        prop_assume!(c.abs() > 1e-3 || d.abs() > 1e-3);
        let tag = MatrixAlgebra::So(3);
        let x = element(tag, &[c, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let y = element(tag, &[d, 0.0, 0.0, 0.0, 0.0, 0.0]);
        prop_assert_eq!(bracket_closure(&[x, y], DEFAULT_RANK_TOLERANCE).unwrap().rank(), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn holonomy_group_laws_hold_on_random_loops(s in 0..2usize, seed in any::<u64>()) {
        let scenario = Scenario::builtin(["magnetic-u1", "so3-generic"][s]).unwrap();
        let loops = random_loops(&scenario, 3, seed).unwrap();
        let r = group_law_residuals(&scenario.connection, &loops[0], &loops[1], &loops[2], 600).unwrap();
        prop_assert!(r.max() <= 1e-5, "{r:?}");
    }

    #[test]
    fn family_subsets_satisfy_the_structural_properties(picks in prop::collection::vec(0..55usize, 3)) {
        let family = candidate_family();
        let subset: Vec<_> = picks.iter().map(|&i| family[i].clone()).collect();
        for p in check_family_properties(&subset).unwrap() {
            prop_assert!(p.passed(), "{} failed on {:?}", p.name, p.failures);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn polynomials_are_plots_of_the_line(a in -2.0..2.0_f64, b in -2.0..2.0_f64, c in -2.0..2.0_f64) {
        let line = OpenBox::new(vec![-1.0], vec![1.0]).unwrap();
        let p = Plot::from_fn("poly", line, 1, move |u| vec![a + b * u[0] + c * u[0] * u[0] * u[0]]);
        prop_assert!(is_plot(&p, &Diffeology::standard(1), 8).unwrap().is_accepted());
    }

    #[test]
    fn kinks_are_not_plots_of_the_line(k in -0.5..0.5_f64, s in 0.5..2.0_f64) {
        let line = OpenBox::new(vec![-1.0], vec![1.0]).unwrap();
        let p = Plot::from_fn("kink", line, 1, move |u| vec![s * (u[0] - k).abs()]);
        prop_assert!(!is_plot(&p, &Diffeology::standard(1), 8).unwrap().is_accepted());
    }
}
