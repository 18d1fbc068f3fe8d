// SPDX-License-Identifier: MIT OR Apache-2.0

use dpdp::eval::{boundary_counts, r_value, TimedBoundarySet};
use proptest::prelude::*;

/// A boundary set on a 0.01 s grid ending at `terminal`.
fn boundary_set(id: &'static str) -> impl Strategy<Value = TimedBoundarySet> {
    prop::collection::btree_set(1usize..200, 0..20).prop_map(move |set| {
        let mut frames: Vec<usize> = set.into_iter().collect();
        frames.push(200);
        TimedBoundarySet::from_frame_ends(id, &frames, 200, 0.01).unwrap()
    })
}

proptest! {
    #[test]
    fn swapping_roles_swaps_precision_and_recall(
        a in boundary_set("u"),
        b in boundary_set("u"),
        tol_frames in 0usize..4,
        exclude in any::<bool>(),
    ) {
        let tol = tol_frames as f64 * 0.01;
        let ab = boundary_counts(&a, &b, tol, exclude).unwrap();
        let ba = boundary_counts(&b, &a, tol, exclude).unwrap();
        prop_assert_eq!(ab.n_hit, ba.n_hit);
        prop_assert_eq!(ab.precision(), ba.recall());
        prop_assert_eq!(ab.recall(), ba.precision());
        prop_assert_eq!(ab.f1(), ba.f1());
    }

    #[test]
    fn scores_are_bounded_and_identity_is_perfect(a in boundary_set("u"), b in boundary_set("u")) {
        let c = boundary_counts(&a, &b, 0.02, true).unwrap();
        prop_assert!(c.n_hit <= c.n_hyp.min(c.n_ref));
        for v in [c.precision(), c.recall(), c.f1()] {
            prop_assert!((0.0..=100.0).contains(&v));
        }
        prop_assert!(c.r_value() <= 100.0);
        let same = boundary_counts(&a, &a, 0.0, true).unwrap();
        prop_assert_eq!((same.precision(), same.recall(), same.os()), (100.0, 100.0, 0.0));
    }

    #[test]
    fn hits_grow_with_tolerance(a in boundary_set("u"), b in boundary_set("u"), t in 0usize..5) {
        let lo = boundary_counts(&a, &b, t as f64 * 0.01, false).unwrap();
        let hi = boundary_counts(&a, &b, (t + 1) as f64 * 0.01, false).unwrap();
        prop_assert!(hi.n_hit >= lo.n_hit);
    }

    #[test]
    fn r_value_peaks_at_perfect_recall_and_no_over_segmentation(hr in 0.0f64..100.0, os in -100.0f64..300.0) {
        prop_assert!(r_value(hr, os) <= r_value(100.0, 0.0));
    }
}

#[test]
fn perfect_r_value_is_one_hundred() {
    assert!((r_value(100.0, 0.0) - 100.0).abs() < 1e-12);
}
