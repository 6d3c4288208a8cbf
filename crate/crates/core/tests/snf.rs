mod common;

use crystal_fpp::quotient::{smith_normal_form, IntMatrix};
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = IntMatrix> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| {
        proptest::collection::vec(-10i64..=10, r * c).prop_map(move |xs| IntMatrix::from_fn(r, c, |i, j| xs[i * c + j]))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn smith_form_matches_determinantal_divisors(m in matrix()) {
        let snf = smith_normal_form(&m).unwrap();
        prop_assert_eq!(snf.u.checked_mul(&m).unwrap().checked_mul(&snf.v).unwrap(), snf.d.clone());
        prop_assert!(common::is_unimodular(&snf.u));
        prop_assert!(common::is_unimodular(&snf.v));
        prop_assert_eq!(snf.u.checked_mul(&snf.u_inv).unwrap(), IntMatrix::identity(m.rows()));
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if i != j {
                    prop_assert_eq!(snf.d.get(i, j), 0);
                }
            }
        }
        let factors = snf.invariant_factors();
        prop_assert!(factors.iter().all(|&f| f > 0));
        for w in factors.windows(2) {
            prop_assert_eq!(w[1] % w[0], 0);
        }
        prop_assert_eq!(factors, common::invariant_factors_oracle(&m));
    }
}

#[test]
fn oracle_on_a_known_matrix() {
    let m = IntMatrix::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]).unwrap();
    assert_eq!(common::invariant_factors_oracle(&m), vec![2, 6, 12]);
    assert_eq!(smith_normal_form(&m).unwrap().invariant_factors(), vec![2, 6, 12]);
}
