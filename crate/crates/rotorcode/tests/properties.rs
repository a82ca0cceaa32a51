//! Randomized property tests for the exact integer linear algebra and the
//! tensor-product homology oracle.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rotorcode::constructions::{kunneth_h1, tensor_product, ProductFlavor, ProductInput};
use rotorcode::exact::{cokernel, snf, IntMatrix};

fn matrix_strategy(max_dim: usize, max_entry: i64) -> impl Strategy<Value = IntMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(move |(r, c)| {
        proptest::collection::vec(
            proptest::collection::vec(-max_entry..=max_entry, c),
            r,
        )
        .prop_map(|rows| IntMatrix::from_rows(&rows))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn snf_multiply_back_and_structure(a in matrix_strategy(8, 9)) {
        let form = snf(&a);
        // U A V = D with unimodular U, V.
        prop_assert!(form.u.is_unimodular());
        prop_assert!(form.v.is_unimodular());
        let d = form.u.mul(&a).mul(&form.v);
        // Diagonal equals the invariant factors, off-diagonal zero.
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                if i != j {
                    prop_assert!(d.row(i)[j].is_zero());
                } else {
                    prop_assert_eq!(&d.row(i)[j], &form.d[i]);
                }
            }
        }
        let mut prev: Option<BigInt> = None;
        for i in 0..d.rows().min(d.cols()) {
            let di = d.row(i)[i].clone();
            prop_assert!(!di.is_negative());
            if let Some(p) = prev {
                if !di.is_zero() {
                    prop_assert!(!p.is_zero());
                    prop_assert!((&di % &p).is_zero());
                }
            }
            prev = Some(di);
        }
        prop_assert_eq!(form.a_rank, (0..d.rows().min(d.cols()))
            .filter(|&i| !d.row(i)[i].is_zero()).count());
    }

    #[test]
    fn cokernel_certificates(a in matrix_strategy(6, 5)) {
        let amb = a.cols();
        let ck = cokernel(&a, amb);
        prop_assert_eq!(ck.torsion_orders.len(), ck.certificates.rows());
        // Orders ascend in divisibility and each certificate solves
        // s * a = d * g for its torsion generator.
        for w in ck.torsion_orders.windows(2) {
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
        for (i, d) in ck.torsion_orders.iter().enumerate() {
            prop_assert!(*d > BigInt::one());
            let s = ck.certificates.row(i);
            let lhs = rotorcode::exact::row_times_matrix(s, &a);
            let g = ck.generator_lifts.row(ck.free_rank + i);
            for (l, gi) in lhs.iter().zip(g) {
                prop_assert_eq!(l.clone(), d * gi);
            }
        }
    }

    #[test]
    fn cokernel_order_matches_brute_coset_count(
        rows in proptest::collection::vec(proptest::collection::vec(-4i64..=4, 3), 1..=3)
    ) {
        let a = IntMatrix::from_rows(&rows);
        let ck = cokernel(&a, 3);
        if ck.free_rank > 0 {
            return Ok(());
        }
        let mut exponent: i64 = 1;
        for d in &ck.torsion_orders {
            let d: i64 = d.to_string().parse().unwrap();
            exponent = num_integer::lcm(exponent, d);
        }
        prop_assume!(exponent <= 16);
        // e Z^3 lies inside the row lattice when the quotient has exponent e,
        // so the index is e^3 / |rowspan mod e| with the span enumerated by
        // brute force over coefficient vectors mod e.
        let e = exponent;
        let mut span = std::collections::HashSet::new();
        let r = rows.len();
        let combos = (e as usize).pow(r as u32);
        prop_assume!(combos <= 1 << 16);
        for t in 0..combos {
            let mut cs = vec![0i64; r];
            let mut rem = t;
            for c in cs.iter_mut() {
                *c = (rem % e as usize) as i64;
                rem /= e as usize;
            }
            let pt: Vec<i64> = (0..3)
                .map(|j| cs.iter().zip(&rows).map(|(&c, row)| c * row[j]).sum::<i64>()
                    .rem_euclid(e))
                .collect();
            span.insert(pt);
        }
        let brute = (e as u128).pow(3) / span.len() as u128;
        let claimed: u128 = ck
            .torsion_orders
            .iter()
            .map(|d| d.to_string().parse::<u128>().unwrap())
            .product();
        prop_assert_eq!(brute, claimed);
    }

    #[test]
    fn kunneth_matches_product_homology(
        dc_rows in proptest::collection::vec(proptest::collection::vec(-2i64..=2, 1..=3), 1..=3),
        dd_rows in proptest::collection::vec(proptest::collection::vec(-2i64..=2, 1..=3), 1..=3),
    ) {
        let dc_cols = dc_rows[0].len();
        let dd_cols = dd_rows[0].len();
        let dc = IntMatrix::from_rows(
            &dc_rows.iter().map(|r| { let mut r = r.clone(); r.resize(dc_cols, 0); r }).collect::<Vec<_>>(),
        );
        let dd = IntMatrix::from_rows(
            &dd_rows.iter().map(|r| { let mut r = r.clone(); r.resize(dd_cols, 0); r }).collect::<Vec<_>>(),
        );
        let input = ProductInput { dc: dc.clone(), dd: dd.clone(), flavor: ProductFlavor::FreeFree };
        let code = tensor_product(&input, "random-product");
        let expected = kunneth_h1(&dc, &dd);
        prop_assert_eq!(code.hom.free_rank, expected.free_rank);
        prop_assert_eq!(&code.hom.torsion_orders, &expected.torsion);
    }
}
