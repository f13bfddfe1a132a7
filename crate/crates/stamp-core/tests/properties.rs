//! Property tests over randomized inputs.

use nalgebra::DMatrix;
use proptest::prelude::*;
use stamp_core::{build_sigma, classify, pipeline::StampOptions, rotate, StudyRegionData};

fn correlation_strategy(p: usize) -> impl Strategy<Value = DMatrix<f64>> {
    // Random correlations via a normalized Gram matrix, which is positive
    // semidefinite by construction; a small diagonal bump keeps it full rank.
    proptest::collection::vec(-1.0f64..1.0, p * (p + 2))
        .prop_map(move |raw| {
            let g = DMatrix::from_fn(p, p + 2, |i, j| raw[i * (p + 2) + j]);
            let mut gram = &g * g.transpose();
            for i in 0..p {
                gram[(i, i)] += 0.3;
            }
            let d: Vec<f64> = (0..p).map(|i| gram[(i, i)].sqrt()).collect();
            DMatrix::from_fn(p, p, |i, j| gram[(i, j)] / (d[i] * d[j]))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The marginal covariance is exactly symmetric with se^2 diagonal.
    #[test]
    fn sigma_symmetric_for_random_inputs(
        ups in correlation_strategy(4),
        se in proptest::collection::vec(0.01f64..10.0, 4),
        beta in proptest::collection::vec(-2.0f64..2.0, 4),
    ) {
        let ids = (0..4).map(|i| format!("snp{i}")).collect();
        let d = StudyRegionData::from_summary("s", ids, beta, se.clone(), ups).unwrap();
        let sigma = build_sigma(&d);
        for i in 0..4 {
            prop_assert_eq!(sigma[(i, i)], se[i] * se[i]);
            for j in 0..4 {
                prop_assert_eq!(sigma[(i, j)], sigma[(j, i)]);
            }
        }
    }

    /// Rotation inverts the mixing: omega * beta_star reproduces beta_hat,
    /// and the cached precision actually inverts sigma_star.
    #[test]
    fn rotation_consistency(
        ups in correlation_strategy(4),
        se in proptest::collection::vec(0.05f64..5.0, 4),
        beta in proptest::collection::vec(-2.0f64..2.0, 4),
    ) {
        let ids = (0..4).map(|i| format!("snp{i}")).collect();
        let d = StudyRegionData::from_summary("s", ids, beta.clone(), se, ups).unwrap();
        if let Ok(r) = rotate(&d) {
            let back = d.omega() * &r.beta_star;
            for j in 0..4 {
                prop_assert!((back[j] - beta[j]).abs() < 1e-6 * (1.0 + beta[j].abs()),
                    "component {}: {} vs {}", j, back[j], beta[j]);
            }
            let ident = &r.precision * &r.sigma_star;
            for i in 0..4 {
                for j in 0..4 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((ident[(i, j)] - expect).abs() < 1e-6);
                }
            }
        }
    }

    /// Classification is a strict threshold rule.
    #[test]
    fn classify_matches_direct_comparison(
        post in proptest::collection::vec(0.0f64..=1.0, 1..20),
        threshold in 0.01f64..0.99,
    ) {
        let flags = classify(&post, threshold).unwrap();
        for (p, f) in post.iter().zip(flags) {
            prop_assert_eq!(f, *p > threshold);
        }
    }

    /// Threshold validation rejects the closed endpoints.
    #[test]
    fn stamp_options_reject_degenerate_thresholds(t in prop_oneof![Just(0.0), Just(1.0), 1.0001f64..5.0]) {
        let data = vec![StudyRegionData::from_summary(
            "s",
            vec!["a".into()],
            vec![0.0],
            vec![1.0],
            DMatrix::identity(1, 1),
        ).unwrap()];
        let mut opts = StampOptions::new(stamp_core::StatKind::Linear, stamp_core::NullRegime::StrongNull);
        opts.threshold = t;
        opts.replicates = 1;
        prop_assert!(stamp_core::stamp_test(&data, &opts).is_err());
    }
}
