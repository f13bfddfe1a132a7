//! Parametric bootstrap calibration of the likelihood-ratio test.
//!
//! Strong null: rotated estimates are regenerated from `N(0, sigma_star)`
//! per study and the statistics and both fits are recomputed. Weak null:
//! the linear statistic is drawn directly from its exact null law with the
//! estimated heterogeneity plugged in, while the quadratic statistic
//! regenerates effect estimates from `N(0, sigma_star + Lambda(r))` with
//! per-SNP heterogeneity drawn from a moment-matched inverse-gamma.
//!
//! Each (study, replicate) pair owns an RNG stream keyed by study id, so
//! p-values do not depend on study order, the parallel schedule, or the
//! thread count. When the estimated heterogeneity is zero the weak-null
//! draws consume the stream exactly like the strong-null draws and the two
//! procedures produce identical replicates.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixture::{fit, FitOptions, Hypothesis, MixtureFit, MixtureSpec, NullRegime};
use crate::rng::{mix, stream_rng};
use crate::rotate::{rotate, RotatedEffects};
use crate::stats::{statistic_value, t_linear, t_quadratic, RegionStatistic, StatKind};
use crate::study::StudyRegionData;
use crate::tau::{inv_gamma_params, TauMoments};

/// Bootstrap run parameters.
#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub null_regime: NullRegime,
    /// Requested worker count; 0 defers to the ambient rayon pool. The
    /// caller configures the pool — replicate streams make any schedule
    /// produce identical output.
    pub jobs: usize,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64, null_regime: NullRegime) -> Self {
        BootstrapConfig {
            replicates,
            seed,
            null_regime,
            jobs: 0,
        }
    }
}

/// One study prepared for testing: rotated effects plus its observed
/// statistic.
#[derive(Debug, Clone)]
pub struct StudyContext {
    pub study_id: String,
    pub is_control: bool,
    pub effects: RotatedEffects,
    pub stat: RegionStatistic,
}

/// All studies of a region prepared for one statistic kind.
#[derive(Debug, Clone)]
pub struct RegionSet {
    pub kind: StatKind,
    pub studies: Vec<StudyContext>,
}

impl RegionSet {
    /// Rotate every study and compute its observed statistic.
    pub fn build(data: &[StudyRegionData], kind: StatKind) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Validation("no studies supplied".into()));
        }
        let studies = data
            .iter()
            .map(|d| {
                let effects = rotate(d)?;
                let stat = match kind {
                    StatKind::Linear => t_linear(d.study_id(), &effects)?,
                    StatKind::Quadratic => t_quadratic(d.study_id(), &effects)?,
                };
                Ok(StudyContext {
                    study_id: d.study_id().to_string(),
                    is_control: d.is_control(),
                    effects,
                    stat,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RegionSet { kind, studies })
    }

    pub fn observed_stats(&self) -> Vec<RegionStatistic> {
        self.studies.iter().map(|s| s.stat.clone()).collect()
    }

    pub fn control_index(&self) -> Option<usize> {
        self.studies.iter().position(|s| s.is_control)
    }

    /// Rotated estimates with their per-SNP rotated standard deviations,
    /// the inputs of the heterogeneity moment equations.
    pub fn rotated_pairs(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.studies
            .iter()
            .map(|s| {
                let beta: Vec<f64> = s.effects.beta_star.iter().copied().collect();
                let sd: Vec<f64> = (0..s.effects.p)
                    .map(|j| s.effects.sigma_star[(j, j)].sqrt())
                    .collect();
                (beta, sd)
            })
            .collect()
    }
}

/// Outcome of a bootstrap run.
#[derive(Debug, Clone)]
pub struct BootstrapSummary {
    /// `#{LRT_obs <= LRT(r)} / R`.
    pub p_value: f64,
    /// Bias-adjusted `(1 + #{..}) / (1 + R)`; never exactly zero.
    pub p_value_adjusted: f64,
    pub replicates: usize,
    /// Replicates whose refit failed twice; counted as infinite LRT.
    pub failed_replicates: usize,
    /// Replicates whose best refit did not meet the convergence tolerance.
    pub nonconverged_replicates: usize,
    pub lrt_replicates: Vec<f64>,
}

/// The indicator-mean p-value over a frozen replicate set.
pub fn pvalue_from_replicates(lrt_obs: f64, replicates: &[f64]) -> f64 {
    let hits = replicates.iter().filter(|&&r| lrt_obs <= r).count();
    hits as f64 / replicates.len() as f64
}

/// Draw one replicate's statistic for every study. `tau` gives the
/// heterogeneity generator; zeros reproduce the strong-null draws.
pub fn draw_replicate_statistics(
    set: &RegionSet,
    tau: &TauMoments,
    seed: u64,
    stream: u64,
) -> Vec<f64> {
    set.studies
        .iter()
        .map(|study| {
            let mut rng = stream_rng(seed, &study.study_id, stream);
            match set.kind {
                StatKind::Linear => {
                    let g = &study.stat.geometry;
                    let variance = (g.one[0] + tau.e_tau * g.one[1]) / g.diag_sum;
                    let z: f64 = rng.sample(StandardNormal);
                    variance.sqrt() * z
                }
                StatKind::Quadratic => {
                    let p = study.effects.p;
                    let lambda = draw_heterogeneity(tau, p, &mut rng);
                    let beta = draw_effects(&study.effects, lambda.as_deref(), &mut rng);
                    statistic_value(
                        StatKind::Quadratic,
                        &study.stat.geometry,
                        &study.effects.precision,
                        &beta,
                    )
                }
            }
        })
        .collect()
}

/// Per-SNP heterogeneity draws; `None` when the diagonal is identically zero
/// so the caller can keep the cached covariance factor.
fn draw_heterogeneity(
    tau: &TauMoments,
    p: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Option<Vec<f64>> {
    match inv_gamma_params(tau.e_tau, tau.var_tau) {
        Some((shape, scale)) => {
            let gamma = Gamma::new(shape, 1.0).expect("valid inverse-gamma shape");
            Some((0..p).map(|_| scale / gamma.sample(rng)).collect())
        }
        None if tau.e_tau > 0.0 => Some(vec![tau.e_tau; p]),
        None => None,
    }
}

fn draw_effects(
    effects: &RotatedEffects,
    lambda: Option<&[f64]>,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> DVector<f64> {
    let p = effects.p;
    let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
    match lambda {
        None => &effects.chol_lower * z,
        Some(lam) => {
            let mut cov = effects.sigma_star.clone();
            for (j, &l) in lam.iter().enumerate() {
                cov[(j, j)] += l;
            }
            let chol = cov
                .cholesky()
                .expect("sigma_star plus nonnegative diagonal stays positive definite");
            chol.l() * z
        }
    }
}

/// Strong-null bootstrap: regenerate from `N(0, sigma_star)`.
pub fn bootstrap_strong(
    set: &RegionSet,
    spec: &MixtureSpec,
    observed: &MixtureFit,
    cfg: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    if spec.null_regime != NullRegime::StrongNull || cfg.null_regime != NullRegime::StrongNull {
        return Err(Error::Validation(
            "strong-null bootstrap requested with a weak-null spec".into(),
        ));
    }
    run_bootstrap(set, spec, &TauMoments::zero(), cfg, observed.lrt())
}

/// Weak-null bootstrap for the linear statistic: draws the statistic
/// directly from its exact null law with `E(tau)` plugged in.
pub fn bootstrap_weak_linear(
    set: &RegionSet,
    spec: &MixtureSpec,
    observed: &MixtureFit,
    tau: &TauMoments,
    cfg: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    if set.kind != StatKind::Linear || spec.kind != StatKind::Linear {
        return Err(Error::Validation(
            "weak-null linear bootstrap needs linear statistics".into(),
        ));
    }
    if spec.null_regime != NullRegime::WeakNull {
        return Err(Error::Validation(
            "weak-null bootstrap requested with a strong-null spec".into(),
        ));
    }
    run_bootstrap(set, spec, tau, cfg, observed.lrt())
}

/// Weak-null bootstrap for the quadratic statistic: inverse-gamma
/// heterogeneity in the generating covariance, then full regeneration.
pub fn bootstrap_weak_quadratic(
    set: &RegionSet,
    spec: &MixtureSpec,
    observed: &MixtureFit,
    tau: &TauMoments,
    cfg: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    if set.kind != StatKind::Quadratic || spec.kind != StatKind::Quadratic {
        return Err(Error::Validation(
            "weak-null quadratic bootstrap needs quadratic statistics".into(),
        ));
    }
    if spec.null_regime != NullRegime::WeakNull {
        return Err(Error::Validation(
            "weak-null bootstrap requested with a strong-null spec".into(),
        ));
    }
    run_bootstrap(set, spec, tau, cfg, observed.lrt())
}

fn run_bootstrap(
    set: &RegionSet,
    spec: &MixtureSpec,
    tau: &TauMoments,
    cfg: &BootstrapConfig,
    lrt_obs: f64,
) -> Result<BootstrapSummary> {
    if cfg.replicates == 0 {
        return Err(Error::Validation("bootstrap needs at least one replicate".into()));
    }
    spec.validate(set.studies.len())?;
    let r_total = cfg.replicates;
    let template = set.observed_stats();
    let done = std::sync::atomic::AtomicUsize::new(0);

    let outcomes: Vec<(f64, bool, bool)> = (0..r_total)
        .into_par_iter()
        .map(|r| {
            let out = replicate_outcome(set, spec, tau, cfg, &template, r);
            let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            log_progress(n, r_total);
            out
        })
        .collect();

    let mut lrt_replicates = Vec::with_capacity(r_total);
    let mut failed = 0usize;
    let mut nonconverged = 0usize;
    for (lrt, fail, nonconv) in outcomes {
        lrt_replicates.push(lrt);
        failed += fail as usize;
        nonconverged += nonconv as usize;
    }
    let hits = lrt_replicates.iter().filter(|&&l| lrt_obs <= l).count();
    Ok(BootstrapSummary {
        p_value: hits as f64 / r_total as f64,
        p_value_adjusted: (1.0 + hits as f64) / (1.0 + r_total as f64),
        replicates: r_total,
        failed_replicates: failed,
        nonconverged_replicates: nonconverged,
        lrt_replicates,
    })
}

fn replicate_outcome(
    set: &RegionSet,
    spec: &MixtureSpec,
    tau: &TauMoments,
    cfg: &BootstrapConfig,
    template: &[RegionStatistic],
    r: usize,
) -> (f64, bool, bool) {
    // One redraw on a shifted stream before conceding the replicate.
    for attempt in 0..2u64 {
        let stream = r as u64 + attempt * cfg.replicates as u64;
        let values = draw_replicate_statistics(set, tau, cfg.seed, stream);
        let stats: Vec<RegionStatistic> = template
            .iter()
            .zip(&values)
            .map(|(t, &v)| {
                let mut s = t.clone();
                s.value = v;
                s.raw = match set.kind {
                    StatKind::Linear => v,
                    StatKind::Quadratic => v * (t.p as f64).sqrt(),
                };
                s
            })
            .collect();
        let opts = FitOptions::bootstrap(mix(cfg.seed ^ mix(stream)));
        match fit(&stats, spec, Hypothesis::Mixture, &opts) {
            Ok(f) => return (f.lrt(), false, !f.converged),
            Err(_) => continue,
        }
    }
    (f64::INFINITY, true, false)
}

/// Progress through a bootstrap run, logged every tenth of the budget.
fn log_progress(done: usize, total: usize) {
    if total >= 10 && done % (total / 10) == 0 && done > 0 {
        log::info!("bootstrap: {done}/{total} replicates");
    }
}
