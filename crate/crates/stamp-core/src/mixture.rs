//! Two-component mixture over the vector of study statistics.
//!
//! Each study's statistic is approximately normal; under no association it
//! follows the null component, otherwise the alternative component whose
//! moments come from the super-population parameterization. Fitting
//! maximizes the mixture likelihood by reparameterized Nelder-Mead with
//! multiple starts: one start at method-of-moments anchors, one embedded at
//! the fitted single density (which the mixture family contains, so the
//! nesting inequality holds by construction), and the rest drawn from a box
//! around the anchors.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::moments::{statistic_moments, Regime, SuperPopulationMoments};
use crate::rng::keyed_rng;
use crate::simplex::NelderMead;
use crate::stats::{RegionStatistic, StatKind};
use crate::tau::TauMoments;

const LN_2PI: f64 = 1.8378770664093453;
/// Floor on component variances inside the search objective.
const VARIANCE_FLOOR: f64 = 1e-12;
/// Mixing-proportion clip during the search.
const PI_CLIP: f64 = 1e-6;
/// Snap width: a fitted proportion within 1e-4 of the clip reports as the
/// boundary value.
const PI_SNAP: f64 = 1e-4;
/// Clip on unconstrained coordinates; exp(30) is large enough for any moment.
const U_CLIP: f64 = 30.0;

/// Which null model the mixture's null component assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NullRegime {
    StrongNull,
    WeakNull,
}

impl NullRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            NullRegime::StrongNull => "strong",
            NullRegime::WeakNull => "weak",
        }
    }

    fn moment_regime(&self) -> Regime {
        match self {
            NullRegime::StrongNull => Regime::StrongNull,
            NullRegime::WeakNull => Regime::WeakNull,
        }
    }
}

/// Single density (every study null) or two-component mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    SingleDensity,
    Mixture,
}

/// What to fit: statistic kind, null model, and the control study required
/// for weak-null identifiability.
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    pub kind: StatKind,
    pub null_regime: NullRegime,
    pub control_index: Option<usize>,
}

impl MixtureSpec {
    pub fn strong(kind: StatKind) -> Self {
        MixtureSpec {
            kind,
            null_regime: NullRegime::StrongNull,
            control_index: None,
        }
    }

    pub fn weak(kind: StatKind, control_index: usize) -> Self {
        MixtureSpec {
            kind,
            null_regime: NullRegime::WeakNull,
            control_index: Some(control_index),
        }
    }

    pub fn validate(&self, n_studies: usize) -> Result<()> {
        if self.null_regime == NullRegime::WeakNull {
            match self.control_index {
                Some(c) if c < n_studies => {}
                Some(c) => {
                    return Err(Error::Control(format!(
                        "control index {c} out of range for {n_studies} studies"
                    )))
                }
                None => {
                    return Err(Error::Control(
                        "weak-null testing requires a designated control study".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Parameters estimated for this (kind, regime, hypothesis) cell.
    pub fn free_parameters(&self, hypothesis: Hypothesis) -> &'static [&'static str] {
        match (self.kind, self.null_regime, hypothesis) {
            (_, NullRegime::StrongNull, Hypothesis::SingleDensity) => &[],
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::SingleDensity) => &["e_tau"],
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::SingleDensity) => {
                &["e_tau", "var_tau"]
            }
            (StatKind::Linear, NullRegime::StrongNull, Hypothesis::Mixture) => {
                &["pi", "e_mu", "psi"]
            }
            (StatKind::Quadratic, NullRegime::StrongNull, Hypothesis::Mixture) => {
                &["pi", "e_mu", "skew_mu", "psi", "zeta"]
            }
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::Mixture) => {
                &["pi", "e_mu", "e_tau", "var_mu"]
            }
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::Mixture) => &[
                "pi", "e_mu", "var_mu", "skew_mu", "kurt_mu", "e_tau", "var_tau",
            ],
        }
    }
}

/// A candidate point of the mixture likelihood in natural parameters.
#[derive(Debug, Clone)]
pub struct MixtureParams {
    pub pi: f64,
    /// Alternative-component super-population moments.
    pub moments: SuperPopulationMoments,
    /// Weak-null nuisance moments; empty under the strong null.
    pub null_moments: SuperPopulationMoments,
}

/// Result of a mixture (or single-density) fit.
#[derive(Debug, Clone)]
pub struct MixtureFit {
    pub pi: f64,
    pub moments: SuperPopulationMoments,
    pub null_moments: SuperPopulationMoments,
    pub loglik_mixture: f64,
    pub loglik_single: f64,
    pub converged: bool,
    pub n_restarts_used: usize,
    /// True when every study has independent-SNP geometry, in which case
    /// `var_mu` and `e_tau` are aliased and `var_mu` carries their sum.
    pub var_mu_aliased: bool,
}

impl MixtureFit {
    /// Likelihood-ratio statistic `2 (ll_mixture - ll_single)`, floored at 0.
    pub fn lrt(&self) -> f64 {
        (2.0 * (self.loglik_mixture - self.loglik_single)).max(0.0)
    }
}

#[inline]
fn ln_normal(t: f64, mean: f64, var: f64) -> f64 {
    let d = t - mean;
    -0.5 * (LN_2PI + var.ln() + d * d / var)
}

#[inline]
fn log_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Mixture log-likelihood at `params`, strict about component variances.
///
/// Under the weak null the control study contributes only through the null
/// component. `pi = 0` or `pi = 1` degenerate to the corresponding single
/// density.
pub fn loglikelihood(
    stats: &[RegionStatistic],
    spec: &MixtureSpec,
    params: &MixtureParams,
) -> Result<f64> {
    spec.validate(stats.len())?;
    let regime0 = spec.null_regime.moment_regime();
    let mut ll = 0.0;
    for (s, stat) in stats.iter().enumerate() {
        let (m0, v0) = statistic_moments(stat, &params.null_moments, regime0)?;
        if v0 <= 0.0 || !v0.is_finite() {
            return Err(Error::NonFiniteLikelihood {
                study: stat.study_id.clone(),
                variance: v0,
            });
        }
        let is_control =
            spec.null_regime == NullRegime::WeakNull && spec.control_index == Some(s);
        if is_control || params.pi <= 0.0 {
            ll += ln_normal(stat.value, m0, v0);
            continue;
        }
        let (m1, v1) = statistic_moments(stat, &params.moments, Regime::Alternative)?;
        if v1 <= 0.0 || !v1.is_finite() {
            return Err(Error::NonFiniteLikelihood {
                study: stat.study_id.clone(),
                variance: v1,
            });
        }
        if params.pi >= 1.0 {
            ll += ln_normal(stat.value, m1, v1);
        } else {
            ll += log_sum_exp(
                (1.0 - params.pi).ln() + ln_normal(stat.value, m0, v0),
                params.pi.ln() + ln_normal(stat.value, m1, v1),
            );
        }
    }
    Ok(ll)
}

/// Per-study posterior probabilities that the statistic arose from the
/// alternative component. The control study is pinned at zero under the
/// weak null.
pub fn posteriors(
    stats: &[RegionStatistic],
    fit: &MixtureFit,
    spec: &MixtureSpec,
) -> Result<Vec<f64>> {
    spec.validate(stats.len())?;
    let regime0 = spec.null_regime.moment_regime();
    let mut out = Vec::with_capacity(stats.len());
    for (s, stat) in stats.iter().enumerate() {
        let is_control =
            spec.null_regime == NullRegime::WeakNull && spec.control_index == Some(s);
        if is_control || fit.pi <= 0.0 {
            out.push(0.0);
            continue;
        }
        if fit.pi >= 1.0 {
            out.push(1.0);
            continue;
        }
        let (m0, v0) = statistic_moments(stat, &fit.null_moments, regime0)?;
        let (m1, v1) = statistic_moments(stat, &fit.moments, Regime::Alternative)?;
        let lw0 = (1.0 - fit.pi).ln() + ln_normal(stat.value, m0, v0.max(VARIANCE_FLOOR));
        let lw1 = fit.pi.ln() + ln_normal(stat.value, m1, v1.max(VARIANCE_FLOOR));
        out.push((lw1 - log_sum_exp(lw0, lw1)).exp());
    }
    Ok(out)
}

/// Threshold the posteriors; association requires strictly exceeding `p*`.
pub fn classify(posteriors: &[f64], threshold: f64) -> Result<Vec<bool>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Validation(format!(
            "posterior threshold {threshold} must lie strictly inside (0, 1)"
        )));
    }
    Ok(posteriors.iter().map(|&p| p > threshold).collect())
}

/// Knobs for the multi-start fit.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Random restarts on top of the two deterministic starts.
    pub random_restarts: usize,
    pub seed: u64,
    /// 0 means the dimension-scaled default.
    pub max_iters: usize,
    /// Externally estimated heterogeneity moments used to anchor starts.
    pub tau_hint: Option<TauMoments>,
}

impl FitOptions {
    /// Budget for the observed fit: method-of-moments start, single-density
    /// embedding, and ten random restarts.
    pub fn observed(seed: u64) -> Self {
        FitOptions {
            random_restarts: 10,
            seed,
            max_iters: 0,
            tau_hint: None,
        }
    }

    /// Cheaper budget used inside bootstrap replicates: three starts total.
    pub fn bootstrap(seed: u64) -> Self {
        FitOptions {
            random_restarts: 1,
            seed,
            max_iters: 0,
            tau_hint: None,
        }
    }
}

/// Maximize the likelihood for the requested hypothesis.
///
/// Always fits the single density as well (it is the LRT reference), and for
/// [`Hypothesis::Mixture`] requires at least two studies with distinct
/// precision-squared geometry when the statistic is quadratic.
pub fn fit(
    stats: &[RegionStatistic],
    spec: &MixtureSpec,
    hypothesis: Hypothesis,
    opts: &FitOptions,
) -> Result<MixtureFit> {
    if stats.is_empty() {
        return Err(Error::Validation("no studies to fit".into()));
    }
    spec.validate(stats.len())?;
    if stats.iter().any(|s| s.kind != spec.kind) {
        return Err(Error::Validation(
            "statistic kinds disagree with the mixture spec".into(),
        ));
    }
    let aliased = stats.iter().all(|s| s.geometry.is_degenerate());
    if hypothesis == Hypothesis::Mixture && spec.kind == StatKind::Quadratic {
        let distinct = stats
            .iter()
            .skip(1)
            .any(|s| s.geometry.squared_summary_differs(&stats[0].geometry));
        if !distinct {
            return Err(Error::Identifiability(
                "quadratic mixture needs at least two studies with different \
                 precision-squared geometry"
                    .into(),
            ));
        }
    }

    let anchors = Anchors::from_stats(stats, spec, opts.tau_hint.as_ref());
    let single = fit_single(stats, spec, &anchors, opts)?;

    if hypothesis == Hypothesis::SingleDensity {
        return Ok(MixtureFit {
            pi: 0.0,
            moments: SuperPopulationMoments::none(),
            null_moments: single.null_moments,
            loglik_mixture: single.loglik,
            loglik_single: single.loglik,
            converged: single.converged,
            n_restarts_used: single.n_starts,
            var_mu_aliased: aliased,
        });
    }

    let layout = Layout {
        kind: spec.kind,
        regime: spec.null_regime,
        hypothesis: Hypothesis::Mixture,
        aliased,
    };
    let objective = |u: &[f64]| {
        let params = layout.unpack(u);
        negative_loglik(stats, spec, &params)
    };
    let dim = layout.dim();
    let nm = NelderMead {
        max_iters: opts.max_iters,
        ..Default::default()
    };

    let mut starts = vec![
        layout.mom_start(&anchors),
        layout.null_embedding_start(&anchors, &single),
    ];
    let mut rng = keyed_rng(opts.seed, 0x6d69_7874, 0);
    for _ in 0..opts.random_restarts {
        starts.push(layout.random_start(&anchors, &mut rng));
    }

    let mut best: Option<crate::simplex::SimplexOutcome> = None;
    for start in &starts {
        debug_assert_eq!(start.len(), dim);
        let outcome = nm.minimize(&objective, start);
        if best
            .as_ref()
            .map(|b| outcome.value < b.value)
            .unwrap_or(true)
        {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one start");
    let params = layout.unpack(&best.x);
    let pi = snap_pi(params.pi);
    let loglik_mixture = -strip_penalty(best.value, stats, spec, &params);

    Ok(MixtureFit {
        pi,
        moments: params.moments,
        null_moments: params.null_moments,
        loglik_mixture,
        loglik_single: single.loglik,
        converged: best.converged,
        n_restarts_used: starts.len(),
        var_mu_aliased: aliased,
    })
}

/// The search objective is the exact negative log-likelihood whenever the
/// candidate is admissible (its component variances are positive), so there
/// is normally nothing to strip; this re-evaluates the clean likelihood to
/// guard against reporting a floored objective.
fn strip_penalty(
    value: f64,
    stats: &[RegionStatistic],
    spec: &MixtureSpec,
    params: &MixtureParams,
) -> f64 {
    match loglikelihood(stats, spec, params) {
        Ok(ll) => -ll,
        Err(_) => value,
    }
}

fn snap_pi(pi: f64) -> f64 {
    if (pi - PI_CLIP).abs() <= PI_SNAP {
        0.0
    } else if (pi - (1.0 - PI_CLIP)).abs() <= PI_SNAP {
        1.0
    } else {
        pi
    }
}

struct SingleFit {
    null_moments: SuperPopulationMoments,
    loglik: f64,
    converged: bool,
    n_starts: usize,
}

fn fit_single(
    stats: &[RegionStatistic],
    spec: &MixtureSpec,
    anchors: &Anchors,
    opts: &FitOptions,
) -> Result<SingleFit> {
    let layout = Layout {
        kind: spec.kind,
        regime: spec.null_regime,
        hypothesis: Hypothesis::SingleDensity,
        aliased: false,
    };
    if layout.dim() == 0 {
        let params = layout.unpack(&[]);
        let ll = loglikelihood(stats, spec, &params)?;
        return Ok(SingleFit {
            null_moments: params.null_moments,
            loglik: ll,
            converged: true,
            n_starts: 0,
        });
    }
    let objective = |u: &[f64]| {
        let params = layout.unpack(u);
        negative_loglik(stats, spec, &params)
    };
    let nm = NelderMead {
        max_iters: opts.max_iters,
        ..Default::default()
    };
    let mut starts = vec![layout.mom_start(anchors)];
    let mut rng = keyed_rng(opts.seed, 0x7369_6e67, 0);
    for _ in 0..opts.random_restarts {
        starts.push(layout.random_start(anchors, &mut rng));
    }
    let mut best: Option<crate::simplex::SimplexOutcome> = None;
    for start in &starts {
        let outcome = nm.minimize(&objective, start);
        if best
            .as_ref()
            .map(|b| outcome.value < b.value)
            .unwrap_or(true)
        {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one start");
    let params = layout.unpack(&best.x);
    Ok(SingleFit {
        loglik: -strip_penalty(best.value, stats, spec, &params),
        null_moments: params.null_moments,
        converged: best.converged,
        n_starts: starts.len(),
    })
}

/// Floored, never-erroring negative log-likelihood for the optimizer.
fn negative_loglik(stats: &[RegionStatistic], spec: &MixtureSpec, params: &MixtureParams) -> f64 {
    let regime0 = spec.null_regime.moment_regime();
    let mut nll = 0.0;
    for (s, stat) in stats.iter().enumerate() {
        let Ok((m0, v0)) = statistic_moments(stat, &params.null_moments, regime0) else {
            return f64::INFINITY;
        };
        let mut bad = 0.0;
        let v0 = if v0 <= VARIANCE_FLOOR {
            bad += 1.0 + (VARIANCE_FLOOR - v0);
            VARIANCE_FLOOR
        } else {
            v0
        };
        let is_control =
            spec.null_regime == NullRegime::WeakNull && spec.control_index == Some(s);
        let contribution = if is_control || params.pi <= 0.0 {
            ln_normal(stat.value, m0, v0)
        } else {
            let Ok((m1, v1)) = statistic_moments(stat, &params.moments, Regime::Alternative)
            else {
                return f64::INFINITY;
            };
            let v1 = if v1 <= VARIANCE_FLOOR {
                bad += 1.0 + (VARIANCE_FLOOR - v1);
                VARIANCE_FLOOR
            } else {
                v1
            };
            if params.pi >= 1.0 {
                ln_normal(stat.value, m1, v1)
            } else {
                log_sum_exp(
                    (1.0 - params.pi).ln() + ln_normal(stat.value, m0, v0),
                    params.pi.ln() + ln_normal(stat.value, m1, v1),
                )
            }
        };
        nll -= contribution;
        nll += 1e6 * bad;
    }
    if nll.is_nan() {
        f64::INFINITY
    } else {
        nll
    }
}

/// Method-of-moments anchors computed on the statistic scale; they seed the
/// deterministic start and calibrate the random-start box.
struct Anchors {
    pi0: f64,
    e_mu0: f64,
    e_tau0: f64,
    var_tau0: f64,
    spread0: f64,
}

impl Anchors {
    fn from_stats(stats: &[RegionStatistic], spec: &MixtureSpec, hint: Option<&TauMoments>) -> Self {
        let n = stats.len() as f64;
        // Fraction of studies beyond two strong-null standard deviations.
        let mut extreme = 0usize;
        for stat in stats {
            let (m0, v0) = statistic_moments(stat, &SuperPopulationMoments::none(), Regime::StrongNull)
                .expect("strong null needs no moments");
            if (stat.value - m0).abs() > 2.0 * v0.sqrt() {
                extreme += 1;
            }
        }
        let pi0 = (extreme as f64 / n).clamp(0.05, 0.95);

        let (e_tau0, var_tau0) = if let Some(h) = hint {
            (h.e_tau, h.var_tau)
        } else {
            let tau = match spec.kind {
                StatKind::Quadratic => {
                    let num: f64 = stats.iter().map(|s| s.raw - s.geometry.tr[0]).sum();
                    let den: f64 = stats.iter().map(|s| s.geometry.tr[1]).sum();
                    num / den
                }
                StatKind::Linear => {
                    let num: f64 = stats
                        .iter()
                        .map(|s| s.value * s.value * s.geometry.diag_sum - s.geometry.one[0])
                        .sum();
                    let den: f64 = stats.iter().map(|s| s.geometry.one[1]).sum();
                    num / den
                }
            };
            let tau = tau.max(0.0);
            (tau, 0.25 * tau * tau)
        };

        let e_mu0 = match spec.kind {
            StatKind::Linear => {
                let mean: f64 = stats
                    .iter()
                    .map(|s| s.value * s.geometry.diag_sum.sqrt() / s.geometry.one[0])
                    .sum::<f64>()
                    / n;
                mean.max(0.0)
            }
            StatKind::Quadratic => {
                let num: f64 = stats.iter().map(|s| s.raw - s.geometry.tr[0]).sum();
                let den: f64 = stats.iter().map(|s| s.geometry.one[1]).sum();
                (num / den).max(0.0).sqrt()
            }
        };
        Anchors {
            pi0,
            e_mu0,
            e_tau0,
            var_tau0,
            spread0: e_tau0,
        }
    }
}

/// Maps unconstrained coordinates to natural parameters for each
/// (kind, regime, hypothesis, aliasing) cell.
struct Layout {
    kind: StatKind,
    regime: NullRegime,
    hypothesis: Hypothesis,
    aliased: bool,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid_clipped(u: f64) -> f64 {
    let p = 1.0 / (1.0 + (-u).exp());
    p.clamp(PI_CLIP, 1.0 - PI_CLIP)
}

fn exp_clipped(u: f64) -> f64 {
    u.clamp(-U_CLIP, U_CLIP).exp()
}

fn ln_anchor(v: f64) -> f64 {
    v.max(1e-8).ln().clamp(-U_CLIP, U_CLIP)
}

impl Layout {
    fn dim(&self) -> usize {
        match (self.kind, self.regime, self.hypothesis, self.aliased) {
            (_, NullRegime::StrongNull, Hypothesis::SingleDensity, _) => 0,
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::SingleDensity, _) => 1,
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::SingleDensity, _) => 2,
            (StatKind::Linear, NullRegime::StrongNull, Hypothesis::Mixture, _) => 3,
            (StatKind::Quadratic, NullRegime::StrongNull, Hypothesis::Mixture, _) => 5,
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::Mixture, false) => 4,
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::Mixture, true) => 3,
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::Mixture, false) => 7,
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::Mixture, true) => 4,
        }
    }

    fn unpack(&self, u: &[f64]) -> MixtureParams {
        debug_assert_eq!(u.len(), self.dim());
        match (self.kind, self.regime, self.hypothesis, self.aliased) {
            (_, NullRegime::StrongNull, Hypothesis::SingleDensity, _) => MixtureParams {
                pi: 0.0,
                moments: SuperPopulationMoments::none(),
                null_moments: SuperPopulationMoments::none(),
            },
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::SingleDensity, _) => {
                MixtureParams {
                    pi: 0.0,
                    moments: SuperPopulationMoments::none(),
                    null_moments: SuperPopulationMoments::weak_null(exp_clipped(u[0]), None),
                }
            }
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::SingleDensity, _) => {
                MixtureParams {
                    pi: 0.0,
                    moments: SuperPopulationMoments::none(),
                    null_moments: SuperPopulationMoments::weak_null(
                        exp_clipped(u[0]),
                        Some(exp_clipped(u[1])),
                    ),
                }
            }
            (StatKind::Linear, NullRegime::StrongNull, Hypothesis::Mixture, _) => {
                // [pi, e_mu, psi]; psi is stored as var_mu with e_tau = 0.
                MixtureParams {
                    pi: sigmoid_clipped(u[0]),
                    moments: SuperPopulationMoments {
                        e_mu: Some(exp_clipped(u[1])),
                        var_mu: Some(exp_clipped(u[2])),
                        e_tau: Some(0.0),
                        ..Default::default()
                    },
                    null_moments: SuperPopulationMoments::none(),
                }
            }
            (StatKind::Quadratic, NullRegime::StrongNull, Hypothesis::Mixture, _) => {
                // [pi, e_mu, skew, psi, zeta]; the composites are embedded as
                // var_mu = psi, kurt_mu = zeta + psi^2, e_tau = var_tau = 0,
                // and the third moment is kept realizable by construction:
                // |skew| <= sqrt(psi * zeta).
                let psi = exp_clipped(u[3]);
                let zeta = exp_clipped(u[4]);
                let skew = u[2].tanh() * (psi * zeta).sqrt();
                MixtureParams {
                    pi: sigmoid_clipped(u[0]),
                    moments: SuperPopulationMoments::full(
                        exp_clipped(u[1]),
                        psi,
                        skew,
                        zeta + psi * psi,
                        0.0,
                        0.0,
                    ),
                    null_moments: SuperPopulationMoments::none(),
                }
            }
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::Mixture, aliased) => {
                // [pi, e_mu, e_tau, var_mu]; aliased drops var_mu.
                let e_tau = exp_clipped(u[2]);
                let var_mu = if aliased { 0.0 } else { exp_clipped(u[3]) };
                MixtureParams {
                    pi: sigmoid_clipped(u[0]),
                    moments: SuperPopulationMoments {
                        e_mu: Some(exp_clipped(u[1])),
                        var_mu: Some(var_mu),
                        e_tau: Some(e_tau),
                        ..Default::default()
                    },
                    null_moments: SuperPopulationMoments::weak_null(e_tau, None),
                }
            }
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::Mixture, false) => {
                // [pi, e_mu, var_mu, skew, kurt_excess, e_tau, var_tau] with
                // kurt_mu = var_mu^2 + kurt_excess and the realizable skew
                // bound |skew| <= sqrt(var_mu * kurt_excess).
                let var_mu = exp_clipped(u[2]);
                let kurt_excess = exp_clipped(u[4]);
                let skew = u[3].tanh() * (var_mu * kurt_excess).sqrt();
                let e_tau = exp_clipped(u[5]);
                let var_tau = exp_clipped(u[6]);
                MixtureParams {
                    pi: sigmoid_clipped(u[0]),
                    moments: SuperPopulationMoments::full(
                        exp_clipped(u[1]),
                        var_mu,
                        skew,
                        var_mu * var_mu + kurt_excess,
                        e_tau,
                        var_tau,
                    ),
                    null_moments: SuperPopulationMoments::weak_null(e_tau, Some(var_tau)),
                }
            }
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::Mixture, true) => {
                // Independent-SNP geometry: var_mu folds into e_tau and the
                // mean distribution collapses to a point mass.
                let e_tau = exp_clipped(u[2]);
                let var_tau = exp_clipped(u[3]);
                MixtureParams {
                    pi: sigmoid_clipped(u[0]),
                    moments: SuperPopulationMoments::full(
                        exp_clipped(u[1]),
                        0.0,
                        0.0,
                        0.0,
                        e_tau,
                        var_tau,
                    ),
                    null_moments: SuperPopulationMoments::weak_null(e_tau, Some(var_tau)),
                }
            }
        }
    }

    fn mom_start(&self, a: &Anchors) -> Vec<f64> {
        match (self.kind, self.regime, self.hypothesis, self.aliased) {
            (_, NullRegime::StrongNull, Hypothesis::SingleDensity, _) => vec![],
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::SingleDensity, _) => {
                vec![ln_anchor(a.e_tau0)]
            }
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::SingleDensity, _) => {
                vec![ln_anchor(a.e_tau0), ln_anchor(a.var_tau0)]
            }
            (StatKind::Linear, NullRegime::StrongNull, Hypothesis::Mixture, _) => {
                vec![logit(a.pi0), ln_anchor(a.e_mu0), ln_anchor(a.spread0)]
            }
            (StatKind::Quadratic, NullRegime::StrongNull, Hypothesis::Mixture, _) => vec![
                logit(a.pi0),
                ln_anchor(a.e_mu0),
                0.0,
                ln_anchor(a.spread0),
                ln_anchor(a.spread0 * a.spread0),
            ],
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::Mixture, false) => vec![
                logit(a.pi0),
                ln_anchor(a.e_mu0),
                ln_anchor(a.e_tau0),
                ln_anchor(a.spread0),
            ],
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::Mixture, true) => {
                vec![logit(a.pi0), ln_anchor(a.e_mu0), ln_anchor(a.e_tau0)]
            }
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::Mixture, false) => vec![
                logit(a.pi0),
                ln_anchor(a.e_mu0),
                ln_anchor(a.spread0),
                0.0,
                ln_anchor(a.spread0 * a.spread0),
                ln_anchor(a.e_tau0),
                ln_anchor(a.var_tau0),
            ],
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::Mixture, true) => vec![
                logit(a.pi0),
                ln_anchor(a.e_mu0),
                ln_anchor(a.e_tau0),
                ln_anchor(a.var_tau0),
            ],
        }
    }

    /// Start at the fitted single density: the alternative component is set
    /// (numerically) equal to the null one, so the mixture start carries the
    /// single-density likelihood and the nesting inequality cannot be lost.
    fn null_embedding_start(&self, a: &Anchors, single: &SingleFit) -> Vec<f64> {
        let mut u = self.mom_start(a);
        if u.is_empty() {
            return u;
        }
        let zero = -U_CLIP;
        let e_tau = single.null_moments.e_tau.unwrap_or(0.0);
        let var_tau = single.null_moments.var_tau.unwrap_or(0.0);
        match (self.kind, self.regime, self.hypothesis, self.aliased) {
            (StatKind::Linear, NullRegime::StrongNull, Hypothesis::Mixture, _) => {
                u[1] = zero;
                u[2] = zero;
            }
            (StatKind::Quadratic, NullRegime::StrongNull, Hypothesis::Mixture, _) => {
                u[1] = zero;
                u[2] = 0.0;
                u[3] = zero;
                u[4] = zero;
            }
            (StatKind::Linear, NullRegime::WeakNull, Hypothesis::Mixture, aliased) => {
                u[1] = zero;
                u[2] = ln_anchor(e_tau);
                if !aliased {
                    u[3] = zero;
                }
            }
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::Mixture, false) => {
                u[1] = zero;
                u[2] = zero;
                u[3] = 0.0;
                u[4] = zero;
                u[5] = ln_anchor(e_tau);
                u[6] = ln_anchor(var_tau);
            }
            (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::Mixture, true) => {
                u[1] = zero;
                u[2] = ln_anchor(e_tau);
                u[3] = ln_anchor(var_tau);
            }
            _ => {}
        }
        u
    }

    fn random_start(&self, a: &Anchors, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mom = self.mom_start(a);
        mom.iter()
            .enumerate()
            .map(|(i, &m)| {
                let is_pi = self.hypothesis == Hypothesis::Mixture && i == 0;
                let is_skew = matches!(
                    (self.kind, self.regime, self.hypothesis, self.aliased, i),
                    (StatKind::Quadratic, NullRegime::StrongNull, Hypothesis::Mixture, _, 2)
                        | (StatKind::Quadratic, NullRegime::WeakNull, Hypothesis::Mixture, false, 3)
                );
                if is_pi {
                    logit(rng.random_range(0.05..0.95))
                } else if is_skew {
                    rng.random_range(-1.0..1.0)
                } else {
                    // Log-uniform over a box around the anchor.
                    let lo = m + (0.05f64).ln();
                    let hi = m + (3.0f64).ln();
                    rng.random_range(lo..hi)
                }
            })
            .collect()
    }
}
