mod common;

use num_traits::Signed;
use proptest::prelude::*;
use supnorm::amplifier::{balance_exponents, optimize_profile, profile_eval, Profile};
use supnorm::arith::{rat, Rat};
use supnorm::counting::representation_number;
use supnorm::forms::QuadraticForm;
use supnorm::linalg::mat_vec;
use supnorm::quaternion::{Quat, QuaternionAlgebra};
use supnorm::reduce::reduce_form;
use supnorm::special::{jacobi_eval, matrix_coeff, so4_character, so4_character_bound};
use supnorm::{Field, FieldElement, FieldTag};

fn sqrt2() -> Field {
    Field::new(FieldTag::Sqrt2).expect("field")
}

fn elt() -> impl Strategy<Value = (i64, i64)> {
    (-50i64..=50, -50i64..=50)
}

fn quat(f: &Field, c: [(i64, i64); 4]) -> Quat {
    Quat(c.map(|(a, b)| f.elt(a, b)))
}

/// Upper unitriangular matrix with the given strictly upper entries.
fn unitri(f: &Field, n: usize, e: &[i64]) -> Vec<Vec<FieldElement>> {
    let mut k = 0;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.cmp(&j) {
                    std::cmp::Ordering::Equal => f.int(1),
                    std::cmp::Ordering::Less => {
                        k += 1;
                        f.int(e[k - 1])
                    }
                    std::cmp::Ordering::Greater => f.int(0),
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduced_norm_is_multiplicative(x in prop::array::uniform4(elt()), y in prop::array::uniform4(elt())) {
        let f = sqrt2();
        let alg = QuaternionAlgebra::new(f.int(-1), f.elt(-3, 1)).expect("algebra");
        let (x, y) = (quat(&f, x), quat(&f, y));
        prop_assert_eq!(alg.nr(&alg.mul(&x, &y)), &alg.nr(&x) * &alg.nr(&y));
    }

    #[test]
    fn field_norm_is_multiplicative(x in elt(), y in elt()) {
        let f = Field::new(FieldTag::Sqrt5).expect("field");
        let (x, y) = (f.elt(x.0, x.1), f.elt(y.0, y.1));
        prop_assert_eq!((&x * &y).norm(), x.norm() * y.norm());
    }

    #[test]
    fn matrix_coeff_symmetric_and_bounded(m in 0u32..60, l in 0i32..60, t in -1.0f64..=1.0) {
        let l = l.min(m as i32);
        let a = matrix_coeff(m, l, t).expect("in range");
        let b = matrix_coeff(m, -l, t).expect("in range");
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!(a.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn character_within_bound(m in 0u32..200, t in -1.0f64..=1.0) {
        let v = so4_character(m, t).expect("in range");
        prop_assert!(v.abs() <= so4_character_bound(m, t) + 1e-12);
    }

    #[test]
    fn profile_pieces_match_direct(i in 1u32..=4, num in -4000i64..=0, k in 1i64..=40) {
        let kappa = rat(k, 200);
        let beta = rat(num, 997);
        prop_assert_eq!(Profile::new(&kappa, i).eval(&beta), profile_eval(&kappa, i, &beta));
    }

    #[test]
    fn balance_attains_minimum(terms in prop::collection::vec((-5i64..=5, -5i64..=5), 1..5), probe in 0i64..200) {
        let terms: Vec<(Rat, Rat)> = terms.into_iter().map(|(a, b)| (rat(a, 2), rat(b, 3))).collect();
        match balance_exponents(&terms) {
            Ok((t, v)) => {
                let f = |t: &Rat| terms.iter().map(|(a, b)| a * t + b).max().unwrap();
                prop_assert!(!t.is_negative());
                prop_assert_eq!(f(&t), v.clone());
                prop_assert!(f(&rat(probe, 7)) >= v);
            }
            Err(_) => prop_assert!(terms.iter().all(|(a, _)| a.is_negative())),
        }
    }

    #[test]
    fn cone_reduce_lands_in_cone(x in elt()) {
        let f = sqrt2();
        let x = f.elt(x.0, x.1);
        prop_assume!(!x.is_zero());
        let x = &x * &x;
        let (u, y) = f.cone_reduce(&x).expect("totally positive");
        prop_assert!(f.in_cone(&y));
        prop_assert!(u.is_totally_positive() && u.norm() == Rat::from_integer(1.into()));
        prop_assert_eq!(y, &u * &x);
    }

    #[test]
    fn jacobi_matches_binomial_sum(n in 0u32..25, a in 0u32..6, b in 0u32..6, num in -100i64..=100) {
        let t = rat(num, 100);
        let exact = common::jacobi_binomial(n as u64, a as u64, b as u64, &t);
        let exact = supnorm::arith::rat_to_f64(&exact);
        let got = jacobi_eval(n, a, b, num as f64 / 100.0);
        prop_assert!((got - exact).abs() <= 1e-10 * exact.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn counts_invariant_under_unimodular_change(e in prop::collection::vec(-2i64..=2, 6)) {
        let f = Field::rational();
        let q = QuadraticForm::from_i64(&[vec![2, 1, 0, 0], vec![1, 2, 0, 0], vec![0, 0, 4, 1], vec![0, 0, 1, 6]]).expect("form");
        let p = q.transform(&unitri(&f, 4, &e)).expect("transform");
        for l in 1..=30 {
            prop_assert_eq!(representation_number(&q, &f.int(l)).0, representation_number(&p, &f.int(l)).0);
        }
    }

    #[test]
    fn reduction_identity_on_random_forms(e in prop::collection::vec(-3i64..=3, 3), x in prop::collection::vec(elt(), 3)) {
        let f = sqrt2();
        let base: Vec<Vec<FieldElement>> = vec![
            vec![f.int(2), f.int(0), f.int(0)],
            vec![f.int(0), f.elt(6, 2), f.int(1)],
            vec![f.int(0), f.int(1), f.elt(4, 0)],
        ];
        let q = QuadraticForm::new(f.ring(), base).expect("form").transform(&unitri(&f, 3, &e)).expect("transform");
        let r = reduce_form(&f, &q).expect("reduces");
        let x: Vec<FieldElement> = x.into_iter().map(|(a, b)| f.elt(a, b)).collect();
        let v = q.value(&mat_vec(&r.u, &x));
        prop_assert_eq!(&v, &r.reduced.value(&x));
        prop_assert_eq!(v, r.expansion(&x));
    }
}

#[test]
fn kappa_zero_profile_reaches_one() {
    assert_eq!(optimize_profile(&rat(0, 1)).expect("profile").max, rat(1, 1));
}
