//! Property tests for the algebraic kernels.

use proptest::prelude::*;

use statgenus_core::abelian::AbelianPGroup;
use statgenus_core::blocks::primitive_idempotents;
use statgenus_core::ext::{ExtensionHandle, ExtensionTuple};
use statgenus_core::linalg::{self, Mat, Ring};
use statgenus_core::selmer::Line;

fn small_primes_1_mod_3() -> Vec<u64> {
    vec![7, 13, 19, 31, 37, 43, 61, 67, 73, 79, 97, 103, 109, 127, 139]
}

proptest! {
    #[test]
    fn howell_form_is_canonical(rows in prop::collection::vec(prop::collection::vec(0u64..27, 3), 1..5), perm in 0usize..6) {
        let ring = Ring::new(3, 3);
        let a = linalg::howell(&ring, 3, &rows);
        // permute and rescale the generators by units: same subgroup
        let mut rows2 = rows.clone();
        let shift = perm % rows2.len().max(1);
        rows2.rotate_left(shift);
        let scaled: Vec<Vec<u64>> = rows2
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let u = [1u64, 2, 4, 5][i % 4]; // units mod 27
                r.iter().map(|&x| ring.mul(x, u)).collect()
            })
            .collect();
        let b = linalg::howell(&ring, 3, &scaled);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kernel_members_annihilate(entries in prop::collection::vec(0u64..27, 12)) {
        let ring = Ring::new(3, 3);
        let m = Mat { rows: 3, cols: 4, a: entries };
        for g in linalg::kernel(&ring, &m) {
            prop_assert!(m.apply(&ring, &g).iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn block_ring_is_commutative_and_associative(
        d1 in prop::collection::vec(0u8..3, 3),
        d2 in prop::collection::vec(0u8..3, 3),
        d3 in prop::collection::vec(0u8..3, 3),
    ) {
        let a = AbelianPGroup::parse("9").unwrap();
        let b = primitive_idempotents(&a).into_iter().find(|b| b.level() == 2).unwrap();
        let r = b.mj_ring(3).unwrap();
        let (x, y, z) = (r.from_digits(&d1), r.from_digits(&d2), r.from_digits(&d3));
        prop_assert_eq!(r.mul(&x, &y), r.mul(&y, &x));
        prop_assert_eq!(r.mul(&x, &r.mul(&y, &z)), r.mul(&r.mul(&x, &y), &z));
        prop_assert_eq!(r.mul(&x, &r.add(&y, &z)), r.add(&r.mul(&x, &y), &r.mul(&x, &z)));
    }

    #[test]
    fn tuple_roundtrip_and_conductor(
        picks in prop::collection::vec((0usize..15, 1u64..3), 1..4),
        with_wild in proptest::bool::ANY,
    ) {
        let a = AbelianPGroup::parse("3").unwrap();
        let primes = small_primes_1_mod_3();
        let mut used = std::collections::BTreeSet::new();
        let mut parts: std::collections::BTreeMap<_, u64> = Default::default();
        for (pi, class) in picks {
            let q = primes[pi];
            if used.insert(q) {
                *parts.entry(a.element(&[class])).or_insert(1) *= q;
            }
        }
        if with_wild {
            *parts.entry(a.element(&[1])).or_insert(1) *= 3;
        }
        let tuple = ExtensionTuple::new(&a, parts.into_iter().collect()).unwrap();
        let h = ExtensionHandle::new(tuple.clone());
        prop_assert_eq!(h.ev_roundtrip(), tuple.clone());
        let product: u64 = tuple.parts.iter().map(|(_, w)| w).product();
        prop_assert_eq!(h.conductor(), product);
    }

    #[test]
    fn line_pairing_sanity(sigma in 0u64..3, frob in 0u64..3, which in 0usize..3) {
        let line = match which {
            0 => Line::Zero,
            1 => Line::Full,
            _ if sigma == 0 && frob == 0 => Line::Zero,
            _ => Line::span(3, sigma, frob),
        };
        // |L| * |L^perp| = p^2 and perp is an involution
        prop_assert_eq!(line.size_log() + line.perp().size_log(), 2);
        prop_assert_eq!(line.perp().perp(), line);
        // membership is stable under scaling
        for t in 1..3u64 {
            for x in 0..3u64 {
                for y in 0..3u64 {
                    if line.contains(3, x, y) {
                        prop_assert!(line.contains(3, t * x % 3, t * y % 3));
                    }
                }
            }
        }
    }
}
