use cascadeq::hilbert::{apply, transition_op, HilbertSpec, StateVector};
use ndarray::Array1;
use num_complex::Complex64;
use proptest::prelude::*;

fn space() -> HilbertSpec {
    HilbertSpec::new([("s", 3), ("t", 3), ("c", 2)]).unwrap()
}

proptest! {
    #[test]
    fn transition_products_compose(i in 0usize..3, j in 0usize..3, k in 0usize..3, l in 0usize..3) {
        let s = space();
        let lhs = &transition_op(&s, "t", i, j).unwrap() * &transition_op(&s, "t", k, l).unwrap();
        let rhs = if j == k {
            transition_op(&s, "t", i, l).unwrap()
        } else {
            cascadeq::hilbert::OperatorMatrix::zeros(&s)
        };
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
    }

    #[test]
    fn disjoint_subsystems_commute(i in 0usize..3, j in 0usize..3, k in 0usize..2, l in 0usize..2) {
        let s = space();
        let a = transition_op(&s, "s", i, j).unwrap();
        let b = transition_op(&s, "c", k, l).unwrap();
        prop_assert_eq!((&a * &b).max_abs_diff(&(&b * &a)).unwrap(), 0.0);
    }

    #[test]
    fn apply_is_bounded_by_frobenius(
        re in prop::collection::vec(-1.0f64..1.0, 18),
        im in prop::collection::vec(-1.0f64..1.0, 18),
        i in 0usize..3, j in 0usize..3, w in -3.0f64..3.0,
    ) {
        let s = space();
        let amps: Array1<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let psi = StateVector::new(s.clone(), amps).unwrap();
        let op = &transition_op(&s, "t", i, j).unwrap().scale_real(w) + &transition_op(&s, "s", j, i).unwrap();
        let out = apply(&op, &psi).unwrap();
        prop_assert!(out.norm() <= op.frobenius_norm() * psi.norm() + 1e-12);
    }
}
