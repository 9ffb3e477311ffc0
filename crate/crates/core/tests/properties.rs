//! Property-based invariants across modules.

use std::collections::BTreeSet;

use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

use matchbench_core::dataset::{format_keypoints, format_matches, parse_keypoints, parse_matches};
use matchbench_core::geometry::{symmetric_epipolar_distance, sampson_distance};
use matchbench_core::matching::*;
use matchbench_core::metrics::{maa, rotation_error, translation_error, MAA_THRESHOLDS};
use matchbench_core::ransac::{adaptive_iteration_bound, estimate_fundamental, RansacConfig};
use matchbench_core::synthetic::{synthetic_pair, PairSpec};

fn descriptor_set(binary: bool) -> impl Strategy<Value = DescriptorSet> {
    (2usize..25).prop_flat_map(move |n| {
        if binary {
            prop::collection::vec(any::<u8>(), n * 4).prop_map(move |d| DescriptorSet::binary(n, 32, d).unwrap()).boxed()
        } else {
            prop::collection::vec(0u8..4, n * 4)
                .prop_map(move |d| DescriptorSet::float(n, 4, d.into_iter().map(f32::from).collect()).unwrap())
                .boxed()
        }
    })
}

fn pairs(m: &MatchList) -> BTreeSet<(usize, usize)> {
    m.pairs().collect()
}

fn rotation() -> impl Strategy<Value = Rotation3<f64>> {
    (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b, c)| Rotation3::new(Vector3::new(a, b, c)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maa_is_a_mean_of_a_monotone_curve(errors in prop::collection::vec(0.0f64..30.0, 1..40)) {
        let curve = maa(&errors).unwrap();
        prop_assert!((0.0..=1.0).contains(&curve.maa));
        prop_assert_eq!(curve.accuracy.len(), MAA_THRESHOLDS.len());
        prop_assert!(curve.accuracy.windows(2).all(|w| w[0] <= w[1]));
        let mean = curve.accuracy.iter().sum::<f64>() / curve.accuracy.len() as f64;
        prop_assert!((mean - curve.maa).abs() < 1e-12);
    }

    #[test]
    fn maa_ignores_order_and_failures_only_lower_it(
        errors in prop::collection::vec(0.0f64..30.0, 1..40),
        extra in 0usize..5,
    ) {
        let mut reversed = errors.clone();
        reversed.reverse();
        prop_assert_eq!(maa(&errors).unwrap().maa, maa(&reversed).unwrap().maa);
        let base = maa(&errors).unwrap().maa;
        let mut failed = errors.clone();
        failed.extend(std::iter::repeat(f64::INFINITY).take(extra));
        prop_assert!(maa(&failed).unwrap().maa <= base);
    }

    #[test]
    fn rotation_error_is_a_symmetric_angle(a in rotation(), b in rotation()) {
        let (ra, rb) = (a.into_inner(), b.into_inner());
        let e = rotation_error(&ra, &rb);
        prop_assert!((0.0..=180.0).contains(&e));
        prop_assert!((e - rotation_error(&rb, &ra)).abs() < 1e-9);
        prop_assert!(rotation_error(&ra, &ra) < 1e-6);
    }

    #[test]
    fn translation_error_ignores_scale(
        t in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0).prop_filter("non-zero", |v| v.0.abs() + v.1.abs() + v.2.abs() > 0.1),
        s in 0.01f64..100.0,
    ) {
        let t = Vector3::new(t.0, t.1, t.2);
        prop_assert!(translation_error(&(t * s), &t).unwrap() < 1e-6);
        prop_assert!((translation_error(&-t, &t).unwrap() - 180.0).abs() < 1e-6);
    }

    #[test]
    fn iteration_bound_decreases_with_inlier_ratio(w in 0.05f64..0.95, dw in 0.0f64..0.05, tau in 0.5f64..0.999999) {
        let k = |w| adaptive_iteration_bound(w, 7, tau).capped(u64::MAX);
        prop_assert!(k(w + dw) <= k(w));
        prop_assert!(k(w) >= 1);
        prop_assert!(adaptive_iteration_bound(w, 7, tau.min(0.9)).capped(u64::MAX) <= k(w));
    }

    #[test]
    fn symmetrization_and_ratio_filter_are_ordered(
        sets in (any::<bool>()).prop_flat_map(|b| (descriptor_set(b), descriptor_set(b))),
        r1 in 0.0f64..1.0,
        r2 in 0.0f64..1.0,
    ) {
        let (di, dj) = sets;
        let m_ij = nn_match(&di, &dj).unwrap();
        let m_ji = nn_match_reverse(&di, &dj).unwrap();
        let both = pairs(&symmetrize(&m_ij, &m_ji, SymmetrizeMode::Both).unwrap());
        let either = pairs(&symmetrize(&m_ij, &m_ji, SymmetrizeMode::Either).unwrap());
        prop_assert!(both.is_subset(&either));
        prop_assert!(pairs(&m_ij).is_subset(&either));
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let strict = pairs(&ratio_filter(&m_ij, lo).unwrap());
        let loose = pairs(&ratio_filter(&m_ij, hi).unwrap());
        prop_assert!(strict.is_subset(&loose));
        prop_assert!(loose.is_subset(&pairs(&m_ij)));
    }

    #[test]
    fn keypoints_round_trip(points in prop::collection::vec(
        (0.0f64..4000.0, 0.0f64..3000.0, 0.1f64..50.0, 0.0f64..6.28, -10.0f64..10.0), 0..30)
    ) {
        let list = KeypointList::new(
            points.into_iter().map(|(x, y, scale, orientation, score)| Keypoint { x, y, scale, orientation, score }).collect(),
        ).unwrap();
        let text = format_keypoints(&list);
        prop_assert_eq!(parse_keypoints(text.as_bytes()).unwrap(), list);
    }

    #[test]
    fn matches_round_trip(entries in prop::collection::vec(
        (0usize..10_000, 0usize..10_000, 0.0f64..1e4, prop::option::of(0.0f64..1e4)), 0..30)
    ) {
        let list = MatchList::new(
            entries.into_iter().map(|(index_i, index_j, distance, second_distance)| Match { index_i, index_j, distance, second_distance }).collect(),
            Direction::IToJ,
            Vec::new(),
        );
        let parsed = parse_matches(format_matches(&list).as_bytes()).unwrap();
        prop_assert_eq!(parsed.entries, list.entries);
    }
}

proptest! {
    // Each case runs a full robust fit.
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn robust_fit_respects_its_contract(
        seed in 0u64..1000,
        outliers in 0.0f64..0.6,
        noise in 0.0f64..1.5,
        threshold in 0.5f64..3.0,
        max_iterations in 1u64..3000,
    ) {
        let pair = synthetic_pair(&PairSpec { correspondences: 150, outlier_fraction: outliers, noise, seed, ..PairSpec::default() }).unwrap();
        let cfg = RansacConfig { threshold, max_iterations, seed, ..RansacConfig::default() };
        let Ok(model) = estimate_fundamental(&pair.correspondences, &cfg) else { return Ok(()) };
        prop_assert!(model.iterations <= max_iterations);
        prop_assert_eq!(model.inlier_count, model.inlier_mask.iter().filter(|&&m| m).count());
        prop_assert!(model.inlier_count >= model.minimal_sample_score.inliers);
        for k in model.inliers() {
            let c = &pair.correspondences[k];
            prop_assert!(symmetric_epipolar_distance(&model.f, &c.xi, &c.xj) <= threshold);
            prop_assert!(sampson_distance(&model.f, &c.xi, &c.xj) <= threshold + 1e-12);
        }
        let again = estimate_fundamental(&pair.correspondences, &cfg).unwrap();
        prop_assert_eq!(again, model);
    }
}
