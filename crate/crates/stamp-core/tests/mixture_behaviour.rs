//! Behavioural checks of the mixture fitter on synthetic statistics.

use rand::Rng;
use rand_distr::StandardNormal;
use stamp_core::rng::keyed_rng;
use stamp_core::{
    fit, posteriors, FitOptions, Geometry, Hypothesis, MixtureSpec, RegionStatistic, StatKind,
};

fn linear_stat(study: usize, value: f64, p: usize) -> RegionStatistic {
    RegionStatistic {
        study_id: format!("s{study}"),
        kind: StatKind::Linear,
        value,
        raw: value,
        p,
        geometry: Geometry::from_precision(&nalgebra::DMatrix::identity(p, p)),
    }
}

/// A 50/50 mixture with a well-separated alternative component recovers a
/// mixing proportion inside [0.3, 0.7], across 100 seeds.
#[test]
fn separated_mixture_recovers_proportion() {
    let spec = MixtureSpec::strong(StatKind::Linear);
    for seed in 0..100u64 {
        let mut rng = keyed_rng(seed, 1000, 0);
        let stats: Vec<RegionStatistic> = (0..200)
            .map(|i| {
                let z: f64 = rng.sample(StandardNormal);
                // Identity geometry: null component is N(0, 1); give the
                // alternative draws a mean of five standard deviations.
                let value = if i % 2 == 0 { z } else { z + 5.0 };
                linear_stat(i, value, 6)
            })
            .collect();
        let f = fit(&stats, &spec, Hypothesis::Mixture, &FitOptions::observed(seed)).unwrap();
        assert!(
            f.pi > 0.3 && f.pi < 0.7,
            "seed {seed}: pi = {} outside [0.3, 0.7]",
            f.pi
        );
    }
}

/// The mixture log-likelihood never falls below the single-density one.
#[test]
fn nesting_inequality_across_seeds() {
    let spec = MixtureSpec::strong(StatKind::Linear);
    for seed in 0..25u64 {
        let mut rng = keyed_rng(seed, 2000, 0);
        let stats: Vec<RegionStatistic> = (0..15)
            .map(|i| {
                let z: f64 = rng.sample(StandardNormal);
                linear_stat(i, z * 1.5, 4)
            })
            .collect();
        let single = fit(
            &stats,
            &spec,
            Hypothesis::SingleDensity,
            &FitOptions::observed(seed),
        )
        .unwrap();
        let mixture = fit(&stats, &spec, Hypothesis::Mixture, &FitOptions::observed(seed)).unwrap();
        assert!(
            mixture.loglik_mixture >= single.loglik_single - 1e-6,
            "seed {seed}: {} < {}",
            mixture.loglik_mixture,
            single.loglik_single
        );
    }
}

/// Posteriors are probabilities and increase with the evidence for the
/// alternative component.
#[test]
fn posteriors_are_monotone_in_the_density_ratio() {
    let spec = MixtureSpec::strong(StatKind::Linear);
    let mut rng = keyed_rng(3, 3000, 0);
    let stats: Vec<RegionStatistic> = (0..30)
        .map(|i| {
            let z: f64 = rng.sample(StandardNormal);
            let bump = if i % 3 == 0 { 4.0 } else { 0.0 };
            linear_stat(i, z + bump, 5)
        })
        .collect();
    let f = fit(&stats, &spec, Hypothesis::Mixture, &FitOptions::observed(17)).unwrap();
    let post = posteriors(&stats, &f, &spec).unwrap();
    assert!(post.iter().all(|&p| (0.0..=1.0).contains(&p)));
    if f.pi > 0.0 && f.pi < 1.0 {
        // With a positive fitted mean, the posterior is increasing in T.
        let mut pairs: Vec<(f64, f64)> = stats
            .iter()
            .map(|s| s.value)
            .zip(post.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            assert!(
                w[1].1 >= w[0].1 - 1e-12,
                "posterior not monotone: {:?} then {:?}",
                w[0],
                w[1]
            );
        }
    }
}
