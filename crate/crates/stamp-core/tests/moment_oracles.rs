//! Monte-Carlo validation of the statistic moment formulas against brute
//! simulation, and of the marginal-limit map against regression on
//! simulated individual-level data.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use stamp_core::rng::keyed_rng;
use stamp_core::{
    marginal_limit_oracle, rotate, statistic_moments, t_quadratic, Regime, StatKind,
    StudyRegionData, SuperPopulationMoments,
};

/// Random positive-definite matrix with eigenvalues in [0.5, 2].
fn random_pd(p: usize, rng: &mut rand_chacha::ChaCha8Rng) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = raw.qr().q();
    let eig = DVector::from_fn(p, |_, _| rng.random_range(0.5..2.0));
    &q * DMatrix::from_diagonal(&eig) * q.transpose()
}

fn sample_stats(n: usize, accum: impl Iterator<Item = f64>) -> (f64, f64, f64, f64) {
    let xs: Vec<f64> = accum.collect();
    assert_eq!(xs.len(), n);
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let se_mean = (var / nf).sqrt();
    let se_var = ((m4 - var * var).max(0.0) / nf).sqrt();
    (mean, var, se_mean, se_var)
}

/// Strong null: draws of `Q = b' P^2 b` with `b ~ N(0, sigma_star)` match
/// `E(Q) = tr(P)` within 1% and `Var(Q) = 2 tr(P^2)` within 3%.
#[test]
fn quadratic_strong_null_moments_match_simulation() {
    let p = 5;
    let n = 100_000;
    let mut rng = keyed_rng(2024, 11, 0);
    let sigma = random_pd(p, &mut rng);
    let chol = sigma.clone().cholesky().unwrap();
    let precision = chol.inverse();
    let l = chol.l();
    let p2 = &precision * &precision;

    let (mean, var, _, _) = sample_stats(
        n,
        (0..n).map(|_| {
            let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let b = &l * z;
            (&p2 * &b).dot(&b)
        }),
    );
    let expect_mean = precision.trace();
    let expect_var = 2.0 * p2.trace();
    assert!(
        (mean - expect_mean).abs() < 0.01 * expect_mean,
        "mean {mean} vs tr(P) {expect_mean}"
    );
    assert!(
        (var - expect_var).abs() < 0.03 * expect_var,
        "var {var} vs 2 tr(P^2) {expect_var}"
    );
}

/// Weak null: inverse-gamma heterogeneity on the diagonal. The simulated
/// mean and variance of `Q` match the weak-null formulas within three
/// Monte-Carlo standard errors.
#[test]
fn quadratic_weak_null_moments_match_simulation() {
    let p = 5;
    let n = 120_000;
    let (e_tau, var_tau) = (0.6, 0.09);
    let mut rng = keyed_rng(2024, 12, 0);
    let sigma = random_pd(p, &mut rng);
    let chol = sigma.clone().cholesky().unwrap();
    let precision = chol.inverse();
    let p2 = &precision * &precision;

    // Inverse-gamma with mean e_tau and variance var_tau.
    let shape = 2.0 + e_tau * e_tau / var_tau;
    let scale = e_tau * (shape - 1.0);
    let gamma = Gamma::new(shape, 1.0).unwrap();

    let (mean, var, se_mean, se_var) = sample_stats(
        n,
        (0..n).map(|_| {
            let mut cov = sigma.clone();
            for j in 0..p {
                cov[(j, j)] += scale / gamma.sample(&mut rng);
            }
            let l = cov.cholesky().unwrap().l();
            let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            let b = &l * z;
            (&p2 * &b).dot(&b)
        }),
    );

    // Formula values via the moment machinery on a synthetic statistic.
    let stat = stamp_core::RegionStatistic {
        study_id: "s".into(),
        kind: StatKind::Quadratic,
        value: 0.0,
        raw: 0.0,
        p,
        geometry: stamp_core::Geometry::from_precision(&precision),
    };
    let (m_std, v_std) = statistic_moments(
        &stat,
        &SuperPopulationMoments::weak_null(e_tau, Some(var_tau)),
        Regime::WeakNull,
    )
    .unwrap();
    let expect_mean = m_std * (p as f64).sqrt();
    let expect_var = v_std * p as f64;
    assert!(
        (mean - expect_mean).abs() < 3.0 * se_mean,
        "mean {mean} vs {expect_mean} (3 mc-se {})",
        3.0 * se_mean
    );
    assert!(
        (var - expect_var).abs() < 3.0 * se_var,
        "var {var} vs {expect_var} (3 mc-se {})",
        3.0 * se_var
    );
}

/// Marginal one-SNP regressions on simulated linear-model data converge to
/// the mixing-matrix image of the joint effects, and rotation recovers the
/// joint effects.
#[test]
fn marginal_regression_limit_and_rotation_recovery() {
    let n = 50_000;
    let gamma = [0.1, 0.0];
    let mut rng = keyed_rng(7, 99, 0);
    // Correlated standard-normal genotype scores with r = 0.6.
    let r: f64 = 0.6;
    let mut x = DMatrix::zeros(n, 2);
    for i in 0..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        x[(i, 0)] = a;
        x[(i, 1)] = r * a + (1.0 - r * r).sqrt() * b;
    }
    let y = DVector::from_fn(n, |i, _| {
        gamma[0] * x[(i, 0)] + gamma[1] * x[(i, 1)] + rng.sample::<f64, _>(StandardNormal)
    });

    // Per-SNP least squares with intercept.
    let mut beta_hat = Vec::new();
    let mut se = Vec::new();
    for j in 0..2 {
        let col = x.column(j);
        let xbar = col.mean();
        let ybar = y.mean();
        let sxx: f64 = col.iter().map(|v| (v - xbar).powi(2)).sum();
        let sxy: f64 = col.iter().zip(y.iter()).map(|(v, w)| (v - xbar) * (w - ybar)).sum();
        let slope = sxy / sxx;
        let rss: f64 = col
            .iter()
            .zip(y.iter())
            .map(|(v, w)| (w - ybar - slope * (v - xbar)).powi(2))
            .sum();
        beta_hat.push(slope);
        se.push((rss / (n as f64 - 2.0) / sxx).sqrt());
    }

    // Population covariance of the scores has unit variances, corr r.
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]);
    let expect = marginal_limit_oracle(&gamma, &cov).unwrap();
    for j in 0..2 {
        assert!(
            (beta_hat[j] - expect[j]).abs() < 3.0 * se[j],
            "beta[{j}] = {} vs limit {} (se {})",
            beta_hat[j],
            expect[j],
            se[j]
        );
    }

    // Rotation with the same covariance recovers gamma within sampling error.
    let study = StudyRegionData::from_summary_with_variances(
        "sim",
        vec!["snp0".into(), "snp1".into()],
        beta_hat,
        se.clone(),
        cov.clone(),
        vec![1.0, 1.0],
    )
    .unwrap();
    let rotated = rotate(&study).unwrap();
    for j in 0..2 {
        let sd = rotated.sigma_star[(j, j)].sqrt();
        assert!(
            (rotated.beta_star[j] - gamma[j]).abs() < 3.0 * sd,
            "gamma[{j}] = {} vs {} (sd {})",
            rotated.beta_star[j],
            gamma[j],
            sd
        );
    }
    // And the quadratic statistic on this region is finite and positive.
    let stat = t_quadratic("sim", &rotated).unwrap();
    assert!(stat.value.is_finite());
}
